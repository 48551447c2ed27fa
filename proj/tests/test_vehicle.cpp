#include "fedff/vehicle.hpp"

#include <cmath>
#include <cstring>
#include <limits>

#include "doctest.h"
#include "fedff/errors.hpp"
#include "fedff/rng.hpp"

using namespace fedff;

TEST_CASE("longitudinal Euler step from rest") {
  const VehicleParams params;  // dt=0.05, tau=0.1, K=1
  VehicleState state;
  const VehicleState next = step(state, {0.0, 1.0}, params);
  CHECK(next.v == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("zero steering command is a fixed point") {
  const VehicleParams params;
  VehicleState state;
  state.v = 0.7;
  const VehicleState next = step(state, {0.0, 0.7}, params);
  CHECK(next.delta == 0.0);
  CHECK(next.psi == 0.0);
  CHECK(next.y == 0.0);
}

TEST_CASE("pose update uses the pre-step speed") {
  const VehicleParams params;
  VehicleState state;
  state.v = 1.0;
  const VehicleState next = step(state, {0.0, 1.0}, params);
  CHECK(next.x == doctest::Approx(0.05).epsilon(1e-15));
  CHECK(next.y == 0.0);
}

TEST_CASE("steering obeys magnitude and rate limits") {
  const VehicleParams params;
  Rng rng(7);
  VehicleState state;
  state.v = 1.0;
  for (int i = 0; i < 2000; ++i) {
    const double cmd = rng.uniform(-2.0, 2.0);
    const VehicleState next = step(state, {cmd, 1.0}, params);
    CHECK(std::abs(next.delta) <= params.delta_max + 1e-15);
    CHECK(std::abs(next.delta - state.delta) / params.dt <=
          params.delta_rate_max + 1e-12);
    state = next;
  }
}

TEST_CASE("constant input converges to the longitudinal fixed point") {
  const VehicleParams params;
  const double u_v = 0.8;
  VehicleState state;
  double prev_gap = std::abs(params.k_long * u_v - state.v);
  const int steps_10_tau = static_cast<int>(10.0 * params.tau / params.dt);
  for (int i = 0; i < steps_10_tau; ++i) {
    state = step(state, {0.0, u_v}, params);
    const double gap = std::abs(params.k_long * u_v - state.v);
    CHECK(gap <= prev_gap + 1e-15);
    prev_gap = gap;
  }
  CHECK(std::abs(state.v - params.k_long * u_v) <
        1e-3 * std::abs(params.k_long * u_v));
}

TEST_CASE("steady steering holds the commanded curvature") {
  const VehicleParams params;
  const double kappa = 1.1;
  const double delta = steady_state_steering(kappa, params);

  VehicleState state;
  state.v = 1.0;
  state.delta = delta;
  double arc = 0.0;
  double turned = 0.0;  // unwrapped heading change
  for (int i = 0; i < 80; ++i) {
    const VehicleState next = step(state, {delta, 1.0}, params);
    turned += wrap_angle(next.psi - state.psi);
    arc += state.v * params.dt;
    state = next;
  }
  CHECK(turned / arc == doctest::Approx(kappa).epsilon(1e-2));
}

TEST_CASE("step is bit-deterministic") {
  const VehicleParams params;
  VehicleState state{0.3, -0.2, 0.4, 0.9, 0.1};
  const ControlInput input{0.12, 0.8};
  const VehicleState a = step(state, input, params);
  const VehicleState b = step(state, input, params);
  CHECK(std::memcmp(&a, &b, sizeof(a)) == 0);
}

TEST_CASE("steady_state_steering evaluates the model inverse") {
  const VehicleParams params;  // L = 0.17
  CHECK(steady_state_steering(0.0, params) == 0.0);
  CHECK(steady_state_steering(1.08, params) ==
        doctest::Approx(0.18159).epsilon(1e-4));
  CHECK(steady_state_steering(1.08, params) == std::atan(1.08 * 0.17));
  CHECK(steady_state_steering(-1.0, params) ==
        doctest::Approx(-steady_state_steering(1.0, params)).epsilon(1e-15));
  CHECK_THROWS_AS(steady_state_steering(40.0, params), Saturation);
}

TEST_CASE("non-finite updates are rejected") {
  const VehicleParams params;
  VehicleState state;
  state.v = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(step(state, {0.0, 1.0}, params), NonFinite);
}

TEST_CASE("wrap_angle lands in (-pi, pi]") {
  CHECK(wrap_angle(0.0) == 0.0);
  CHECK(wrap_angle(4.0 * 3.14159265358979323846) == doctest::Approx(0.0));
  CHECK(wrap_angle(3.14159265358979323846) ==
        doctest::Approx(3.14159265358979323846));
  CHECK(wrap_angle(-3.14159265358979323846) ==
        doctest::Approx(3.14159265358979323846));
  CHECK(wrap_angle(3.5) == doctest::Approx(3.5 - 2.0 * 3.14159265358979323846));
}
