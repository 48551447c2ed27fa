#pragma once

namespace fedff {

// Plant parameters and gains of the actuator loops that live inside the
// plant: the steering rate controller (steer_gain, i.e. the K4 loop) and the
// first-order longitudinal lag.
struct VehicleParams {
  double wheelbase = 0.17;                 // L [m]
  double delta_max = 0.3490658503988659;   // 20 deg [rad]
  double delta_rate_max = 0.6981317007977318;  // 40 deg/s [rad/s]
  double tau = 0.1;                        // longitudinal time constant [s]
  double k_long = 1.0;                     // longitudinal gain K [m/s]
  double steer_gain = 2.0;                 // steering rate loop gain (K4)
  double dt = 0.05;                        // integration step [s]
};

struct VehicleState {
  double x = 0.0;      // [m]
  double y = 0.0;      // [m]
  double psi = 0.0;    // heading, wrapped to (-pi, pi]
  double v = 0.0;      // [m/s]
  double delta = 0.0;  // steering angle [rad], |delta| <= delta_max
};

struct ControlInput {
  double u_delta = 0.0;  // combined steering command [rad]
  double u_v = 0.0;      // longitudinal velocity command [m/s]
};

// One explicit forward-Euler step of the kinematic bicycle with steering rate
// loop and first-order longitudinal dynamics. All right-hand sides are
// evaluated at the pre-step state. Throws NonFinite if the update leaves the
// reals.
VehicleState step(const VehicleState& state, const ControlInput& input,
                  const VehicleParams& params);

// Steering angle that holds curvature kappa in steady state, arctan(kappa*L).
// Throws Saturation when that angle exceeds delta_max.
double steady_state_steering(double kappa, const VehicleParams& params);

// Wrap an angle to (-pi, pi].
double wrap_angle(double a);

}  // namespace fedff
