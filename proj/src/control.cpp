#include "fedff/control.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <ostream>

#include "fedff/errors.hpp"

namespace fedff {

TrackingErrors tracking_errors(const TrajectorySample& desired,
                               const VehicleState& actual) {
  const double dx = desired.x_d - actual.x;
  const double dy = desired.y_d - actual.y;
  const double c = std::cos(desired.psi_d);
  const double s = std::sin(desired.psi_d);
  return {c * dx + s * dy, -s * dx + c * dy};
}

double fb_steering(const TrackingErrors& errors, const TrajectorySample& desired,
                   const VehicleState& actual, double actual_yaw_rate,
                   const ControlGains& gains) {
  const double yaw_error = wrap_angle(desired.psi_d - actual.psi);
  return gains.k1 * errors.eps_y + gains.k2 * yaw_error +
         gains.k3 * (desired.psi_dot_d - actual_yaw_rate);
}

double fb_velocity(const TrackingErrors& errors, double desired_v,
                   const ControlGains& gains) {
  return desired_v + gains.k5 * errors.eps_x;
}

double analytic_ff(double kappa_d, double /*v_d*/, const VehicleParams& params) {
  return std::atan(kappa_d * params.wheelbase);
}

FeedforwardSource FeedforwardSource::none() {
  return FeedforwardSource([](double, double) { return 0.0; }, "none");
}

FeedforwardSource FeedforwardSource::analytic(const VehicleParams& params) {
  const double wheelbase = params.wheelbase;
  return FeedforwardSource(
      [wheelbase](double kappa_d, double) { return std::atan(kappa_d * wheelbase); },
      "analytic");
}

FeedforwardSource FeedforwardSource::neural(MlpModel model) {
  auto shared = std::make_shared<const MlpModel>(std::move(model));
  return FeedforwardSource(
      [shared](double kappa_d, double v_d) { return forward(*shared, kappa_d, v_d); },
      "neural");
}

FeedforwardSource FeedforwardSource::custom(std::function<double(double, double)> fn,
                                            std::string label) {
  return FeedforwardSource(std::move(fn), std::move(label));
}

LapLog run_lap(const Trajectory& traj, const FeedforwardSource& ff,
               const ControlGains& gains, const VehicleParams& params) {
  if (traj.samples.empty()) throw EmptyLog("run_lap: empty trajectory");

  const TrajectorySample& first = traj.samples.front();
  VehicleState state;
  state.x = first.x_d;
  state.y = first.y_d;
  state.psi = first.psi_d;
  state.v = first.v_d;
  state.delta = std::clamp(std::atan(first.kappa_d * params.wheelbase),
                           -params.delta_max, params.delta_max);

  LapLog log;
  log.client_id = traj.id;
  log.ff_label = ff.label();
  log.records.reserve(traj.samples.size());

  for (const TrajectorySample& desired : traj.samples) {
    const TrackingErrors errors = tracking_errors(desired, state);
    if (std::max(std::abs(errors.eps_x), std::abs(errors.eps_y)) > 10.0)
      throw Diverged("lap diverged on client " + traj.id);

    const double yaw_rate = state.v / params.wheelbase * std::tan(state.delta);
    const double u_delta = fb_steering(errors, desired, state, yaw_rate, gains) +
                           ff(desired.kappa_d, desired.v_d);
    const double u_v = fb_velocity(errors, desired.v_d, gains);

    LapRecord rec;
    rec.t = desired.t;
    rec.state = state;
    rec.errors = errors;
    rec.u_delta = u_delta;
    rec.u_v = u_v;
    rec.kappa_a = std::tan(state.delta) / params.wheelbase;
    log.records.push_back(rec);

    state = step(state, {u_delta, u_v}, params);
  }
  return log;
}

double mean_tracking_error(const LapLog& log) {
  if (log.records.empty()) throw EmptyLog("mean_tracking_error: empty log");
  double sum = 0.0;
  for (const LapRecord& rec : log.records)
    sum += std::sqrt(rec.errors.eps_x * rec.errors.eps_x +
                     rec.errors.eps_y * rec.errors.eps_y);
  return sum / static_cast<double>(log.records.size());
}

ClientDataset harvest_dataset(const LapLog& log) {
  ClientDataset data;
  data.client_id = log.client_id;
  data.rows.reserve(log.records.size());
  for (const LapRecord& rec : log.records)
    data.rows.push_back({rec.kappa_a, rec.state.v, rec.state.delta});
  return data;
}

void write_lap_csv(const LapLog& log, std::ostream& out) {
  out << "t,x,y,psi,v,delta,eps_x,eps_y,u_delta,u_v,kappa_a\n";
  char line[320];
  for (const LapRecord& r : log.records) {
    std::snprintf(line, sizeof(line),
                  "%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g\n",
                  r.t, r.state.x, r.state.y, r.state.psi, r.state.v, r.state.delta,
                  r.errors.eps_x, r.errors.eps_y, r.u_delta, r.u_v, r.kappa_a);
    out << line;
  }
}

}  // namespace fedff
