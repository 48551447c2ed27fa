#include "fedff/control.hpp"

#include <cmath>
#include <sstream>

#include "doctest.h"
#include "fedff/errors.hpp"
#include "fedff/rng.hpp"
#include "support.hpp"

using namespace fedff;

namespace {

TrajectorySample sample_at(double x, double y, double psi, double kappa = 0.0,
                           double v = 1.0) {
  TrajectorySample s{};
  s.x_d = x;
  s.y_d = y;
  s.psi_d = psi;
  s.kappa_d = kappa;
  s.v_d = v;
  s.psi_dot_d = kappa * v;
  return s;
}

VehicleState state_at(double x, double y, double psi = 0.0) {
  VehicleState st;
  st.x = x;
  st.y = y;
  st.psi = psi;
  return st;
}

// Straight segment; closed-path invariants do not apply to hand-built logs.
Trajectory straight_line(int n, double v, double dt) {
  Trajectory traj;
  traj.id = "toy";
  traj.dt = dt;
  traj.duration = (n - 1) * dt;
  traj.total_length = traj.duration * v;
  for (int k = 0; k < n; ++k) {
    TrajectorySample s = sample_at(v * k * dt, 0.0, 0.0, 0.0, v);
    s.t = k * dt;
    traj.samples.push_back(s);
  }
  return traj;
}

PathSpec wavy_spec() {
  PathSpec spec;
  spec.id = "IV";
  spec.name = "wavy";
  spec.base_radius = 1.4;
  spec.fourier = {{2, 0.1, 0.0}};
  spec.v_min = 0.5;
  spec.v_max = 1.0;
  return spec;
}

}  // namespace

TEST_CASE("tracking errors vanish on the reference") {
  const TrackingErrors e = tracking_errors(sample_at(1.0, 2.0, 0.7), state_at(1.0, 2.0, 0.7));
  CHECK(e.eps_x == 0.0);
  CHECK(e.eps_y == 0.0);
}

TEST_CASE("tracking errors rotate into the moving frame") {
  const TrackingErrors ahead = tracking_errors(sample_at(1.0, 0.0, 0.0), state_at(0.0, 0.0));
  CHECK(ahead.eps_x == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(ahead.eps_y == doctest::Approx(0.0));

  const double half_pi = 1.5707963267948966;
  const TrackingErrors rotated =
      tracking_errors(sample_at(0.0, 1.0, half_pi), state_at(0.0, 0.0));
  CHECK(rotated.eps_x == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(rotated.eps_y == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("error norm equals the planar distance") {
  Rng rng(11);
  for (int i = 0; i < 200; ++i) {
    const TrajectorySample d =
        sample_at(rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-3.1, 3.1));
    const VehicleState a =
        state_at(rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-3.1, 3.1));
    const TrackingErrors e = tracking_errors(d, a);
    const double norm = std::sqrt(e.eps_x * e.eps_x + e.eps_y * e.eps_y);
    const double dist = std::hypot(d.x_d - a.x, d.y_d - a.y);
    CHECK(norm == doctest::Approx(dist).epsilon(1e-12));
  }
}

TEST_CASE("tracking errors are rigid-motion invariant") {
  Rng rng(12);
  for (int i = 0; i < 200; ++i) {
    const double dx = rng.uniform(-5, 5), dy = rng.uniform(-5, 5);
    const double rot = rng.uniform(-3.1, 3.1);
    const double c = std::cos(rot), s = std::sin(rot);

    TrajectorySample d =
        sample_at(rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-3.1, 3.1));
    VehicleState a =
        state_at(rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-3.1, 3.1));
    const TrackingErrors before = tracking_errors(d, a);

    TrajectorySample d2 = d;
    d2.x_d = c * d.x_d - s * d.y_d + dx;
    d2.y_d = s * d.x_d + c * d.y_d + dy;
    d2.psi_d = wrap_angle(d.psi_d + rot);
    VehicleState a2 = a;
    a2.x = c * a.x - s * a.y + dx;
    a2.y = s * a.x + c * a.y + dy;
    a2.psi = wrap_angle(a.psi + rot);
    const TrackingErrors after = tracking_errors(d2, a2);

    CHECK(after.eps_x == doctest::Approx(before.eps_x).epsilon(1e-9));
    CHECK(after.eps_y == doctest::Approx(before.eps_y).epsilon(1e-9));
  }
}

TEST_CASE("steering feedback combines the three error terms") {
  const ControlGains gains;  // 0.2 / 0.4 / 0.05
  const TrajectorySample d = sample_at(0, 0, 0);
  const VehicleState a = state_at(0, 0);

  CHECK(fb_steering({0, 0}, d, a, 0.0, gains) == 0.0);
  CHECK(fb_steering({0, 0.1}, d, a, 0.0, gains) == doctest::Approx(0.02).epsilon(1e-15));

  VehicleState yawed = a;
  yawed.psi = -0.1;
  CHECK(fb_steering({0, 0}, d, yawed, 0.0, gains) == doctest::Approx(0.04).epsilon(1e-12));

  CHECK(fb_steering({0, 0}, d, a, 0.2, gains) == doctest::Approx(-0.01).epsilon(1e-12));
}

TEST_CASE("velocity feedback is desired speed plus longitudinal correction") {
  const ControlGains gains;  // k5 = 1
  CHECK(fb_velocity({0.0, 0.0}, 1.0, gains) == 1.0);
  CHECK(fb_velocity({0.2, 0.0}, 1.0, gains) == doctest::Approx(1.2).epsilon(1e-15));
  CHECK(fb_velocity({-0.1, 0.0}, 0.5, gains) == doctest::Approx(0.4).epsilon(1e-15));
}

TEST_CASE("analytic feedforward inverts the yaw dynamics") {
  const VehicleParams params;  // L = 0.17
  CHECK(analytic_ff(0.0, 1.0, params) == 0.0);
  CHECK(analytic_ff(1.08, 0.5, params) == doctest::Approx(0.18159).epsilon(1e-4));
  CHECK(analytic_ff(1.33, 2.0, params) == doctest::Approx(0.22237).epsilon(1e-4));
  CHECK(std::abs(analytic_ff(1.08, 1.0, params)) < params.delta_max);
  // Speed independence of the model inverse.
  CHECK(analytic_ff(0.9, 0.1, params) == analytic_ff(0.9, 2.0, params));
}

TEST_CASE("straight segment tracks at equilibrium") {
  const VehicleParams params;
  const ControlGains gains;
  const Trajectory traj = straight_line(100, 1.0, params.dt);
  const LapLog log = run_lap(traj, FeedforwardSource::analytic(params), gains, params);
  CHECK(mean_tracking_error(log) < 1e-3);
}

TEST_CASE("analytic feedforward beats pure feedback on a closed path") {
  const VehicleParams params;
  const ControlGains gains;
  const Trajectory traj = generate_path(wavy_spec(), params.dt);
  const double mte_fb = mean_tracking_error(
      run_lap(traj, FeedforwardSource::none(), gains, params));
  const double mte_ff = mean_tracking_error(
      run_lap(traj, FeedforwardSource::analytic(params), gains, params));
  CHECK(mte_ff < mte_fb);
}

TEST_CASE("ulp-scale feedforward changes leave the error metric intact") {
  const VehicleParams params;
  const ControlGains gains;
  const Trajectory traj = generate_path(wavy_spec(), params.dt);

  const FeedforwardSource analytic = FeedforwardSource::analytic(params);
  const FeedforwardSource perturbed = FeedforwardSource::custom(
      [&params](double kappa, double) {
        return std::atan(kappa * params.wheelbase) + 1e-13;
      },
      "neural-like");

  const LapLog log_a = run_lap(traj, analytic, gains, params);
  const LapLog log_b = run_lap(traj, perturbed, gains, params);

  bool any_bit_difference = false;
  for (std::size_t k = 0; k < log_a.records.size(); ++k)
    if (log_a.records[k].state.x != log_b.records[k].state.x ||
        log_a.records[k].state.delta != log_b.records[k].state.delta)
      any_bit_difference = true;
  CHECK(any_bit_difference);
  CHECK(mean_tracking_error(log_b) ==
        doctest::Approx(mean_tracking_error(log_a)).epsilon(1e-6));
}

TEST_CASE("mean tracking error reductions") {
  LapLog log;
  log.records.resize(10);
  for (auto& r : log.records) r.errors = {0.0, 0.0};
  CHECK(mean_tracking_error(log) == 0.0);

  for (auto& r : log.records) r.errors = {3.0, 4.0};
  CHECK(mean_tracking_error(log) == doctest::Approx(5.0).epsilon(1e-15));

  for (std::size_t k = 0; k < log.records.size(); ++k)
    log.records[k].errors = (k % 2 == 0) ? TrackingErrors{1.0, 0.0}
                                         : TrackingErrors{0.0, 0.0};
  CHECK(mean_tracking_error(log) == doctest::Approx(0.5).epsilon(1e-15));

  CHECK_THROWS_AS(mean_tracking_error(LapLog{}), EmptyLog);
}

TEST_CASE("diverging reference aborts the lap") {
  const VehicleParams params;
  const ControlGains gains;
  Trajectory traj = straight_line(50, 1.0, params.dt);
  for (std::size_t k = 25; k < traj.samples.size(); ++k)
    traj.samples[k].y_d += 50.0;  // teleporting reference
  CHECK_THROWS_AS(run_lap(traj, FeedforwardSource::none(), gains, params), Diverged);
}

TEST_CASE("lap log harvests plant-consistent rows") {
  const VehicleParams params;
  const ControlGains gains;
  const Trajectory traj = generate_path(wavy_spec(), params.dt);
  const LapLog log = run_lap(traj, FeedforwardSource::analytic(params), gains, params);
  const ClientDataset data = harvest_dataset(log);
  REQUIRE(data.rows.size() == traj.samples.size());
  for (const ClientSample& row : data.rows) {
    CHECK(row.delta_a == doctest::Approx(std::atan(row.kappa_a * params.wheelbase))
                             .epsilon(1e-12));
    CHECK(std::abs(row.delta_a) <= params.delta_max + 1e-12);
  }
}

TEST_CASE("lap CSV carries the fixed header") {
  const VehicleParams params;
  const ControlGains gains;
  const LapLog log =
      run_lap(straight_line(20, 1.0, params.dt), FeedforwardSource::none(), gains, params);
  std::ostringstream out;
  write_lap_csv(log, out);
  CHECK(out.str().rfind("t,x,y,psi,v,delta,eps_x,eps_y,u_delta,u_v,kappa_a\n", 0) == 0);
}
