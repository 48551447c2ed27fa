#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "fedff/neuralff.hpp"
#include "fedff/trajgen.hpp"
#include "fedff/vehicle.hpp"

namespace fedff {

// Controller gains. k4 drives the steering rate loop, which lives in the
// plant (VehicleParams::steer_gain carries the same default); it is kept here
// so the gain table round-trips as one block.
struct ControlGains {
  double k1 = 0.2;   // lateral error
  double k2 = 0.4;   // orientation error
  double k3 = 0.05;  // yaw rate error
  double k4 = 2.0;   // steering velocity
  double k5 = 1.0;   // longitudinal error
};

struct TrackingErrors {
  double eps_x = 0.0;  // longitudinal, along the reference tangent [m]
  double eps_y = 0.0;  // lateral [m]
};

// Position error rotated into the moving reference frame at the desired pose.
TrackingErrors tracking_errors(const TrajectorySample& desired,
                               const VehicleState& actual);

// Steering feedback: k1*eps_y + k2*wrap(psi_d - psi) + k3*(psi_dot_d - psi_dot).
double fb_steering(const TrackingErrors& errors, const TrajectorySample& desired,
                   const VehicleState& actual, double actual_yaw_rate,
                   const ControlGains& gains);

// Velocity command: desired speed feedthrough plus k5 * eps_x.
double fb_velocity(const TrackingErrors& errors, double desired_v,
                   const ControlGains& gains);

// Model-inversion feedforward, arctan(kappa_d * L). v_d is unused; the
// signature matches the common feedforward-source shape.
double analytic_ff(double kappa_d, double v_d, const VehicleParams& params);

// Pluggable steering feedforward evaluated at each reference sample.
class FeedforwardSource {
 public:
  static FeedforwardSource none();
  static FeedforwardSource analytic(const VehicleParams& params);
  static FeedforwardSource neural(MlpModel model);  // keeps its own copy
  static FeedforwardSource custom(std::function<double(double, double)> fn,
                                  std::string label);

  double operator()(double kappa_d, double v_d) const { return fn_(kappa_d, v_d); }
  const std::string& label() const { return label_; }

 private:
  FeedforwardSource(std::function<double(double, double)> fn, std::string label)
      : fn_(std::move(fn)), label_(std::move(label)) {}
  std::function<double(double, double)> fn_;
  std::string label_;
};

struct LapRecord {
  double t;
  VehicleState state;
  TrackingErrors errors;
  double u_delta;
  double u_v;
  double kappa_a;  // tan(delta)/L at the recorded state
};

struct LapLog {
  std::string client_id;
  std::string ff_label;
  std::vector<LapRecord> records;
};

// Drives one closed-loop lap over the full reference. The vehicle starts on
// the first sample's pose at the sample speed with steady-state steering.
// Throws Diverged if either tracking error exceeds 10 m.
LapLog run_lap(const Trajectory& traj, const FeedforwardSource& ff,
               const ControlGains& gains, const VehicleParams& params);

// Time-mean of sqrt(eps_x^2 + eps_y^2) over the lap. Throws EmptyLog.
double mean_tracking_error(const LapLog& log);

// Rows of (kappa_a, v_a, delta_a) harvested from a lap.
ClientDataset harvest_dataset(const LapLog& log);

// CSV export: t,x,y,psi,v,delta,eps_x,eps_y,u_delta,u_v,kappa_a.
void write_lap_csv(const LapLog& log, std::ostream& out);

}  // namespace fedff
