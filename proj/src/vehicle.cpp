#include "fedff/vehicle.hpp"

#include <algorithm>
#include <cmath>

#include "fedff/errors.hpp"

namespace fedff {

double wrap_angle(double a) {
  double w = std::remainder(a, 6.283185307179586476925287);
  if (w <= -3.141592653589793238462643) w = 3.141592653589793238462643;
  return w;
}

VehicleState step(const VehicleState& state, const ControlInput& input,
                  const VehicleParams& params) {
  const double dt = params.dt;

  // Steering actuator: command clamp, proportional rate loop, rate clamp,
  // then state clamp after integration.
  const double cmd = std::clamp(input.u_delta, -params.delta_max, params.delta_max);
  const double rate = std::clamp(params.steer_gain * (cmd - state.delta),
                                 -params.delta_rate_max, params.delta_rate_max);

  VehicleState next;
  next.delta = std::clamp(state.delta + dt * rate, -params.delta_max, params.delta_max);
  next.v = state.v + dt / params.tau * (params.k_long * input.u_v - state.v);
  next.x = state.x + dt * state.v * std::cos(state.psi);
  next.y = state.y + dt * state.v * std::sin(state.psi);
  next.psi = wrap_angle(state.psi +
                        dt * state.v / params.wheelbase * std::tan(state.delta));

  if (!std::isfinite(next.x) || !std::isfinite(next.y) ||
      !std::isfinite(next.psi) || !std::isfinite(next.v) ||
      !std::isfinite(next.delta))
    throw NonFinite("vehicle step produced a non-finite state");
  return next;
}

double steady_state_steering(double kappa, const VehicleParams& params) {
  const double delta = std::atan(kappa * params.wheelbase);
  if (std::abs(delta) > params.delta_max)
    throw Saturation("steady-state steering exceeds delta_max");
  return delta;
}

}  // namespace fedff
