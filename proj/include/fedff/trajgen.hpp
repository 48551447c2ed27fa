#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace fedff {

enum class Orientation { kLeftDominant, kRightDominant };
enum class CurveFamily { kFourierCircle, kLemniscate, kKappaProfile };

struct FourierTerm {
  int harmonic = 1;
  double amplitude = 0.0;
  double phase = 0.0;
};

// One harmonic of a curvature profile over normalized arc length phi:
// kappa contribution = a * cos(j phi) + b * sin(j phi).
struct KappaTerm {
  int harmonic = 1;
  double a = 0.0;
  double b = 0.0;
};

// Geometric recipe for one client path. Fourier-circle specs perturb a base
// circle radially, r(theta) = r0 * (1 + sum a_k cos(k theta + phi_k));
// lemniscate specs trace a warped figure-eight; kappa-profile specs are
// unit-speed curves integrated from a Fourier curvature series, which gives
// direct control over how much of the lap runs near peak curvature.
// Right-dominant specs are the mirror image (y -> -y) of the left-dominant
// generation and are driven clockwise.
struct PathSpec {
  std::string id;    // roman numeral I..XII
  std::string name;  // descriptive label
  CurveFamily family = CurveFamily::kFourierCircle;
  double base_radius = 1.0;          // r0 [m]; lemniscate lobe half-width
  std::vector<FourierTerm> fourier;  // fourier-circle family only
  double lobe_height = 0.5;          // lemniscate: y amplitude scale [m]
  double unbalance = 0.0;            // lemniscate: lobe asymmetry, |u| < 1
  double lobe_pinch = 0.0;           // lemniscate: lobe fattening, |p| < 1
  double profile_length = 0.0;       // kappa-profile: arc length S [m]
  int profile_turning = 1;           // kappa-profile: net turns (0 = figure-eight)
  std::vector<KappaTerm> kappa_terms;  // kappa-profile harmonics
  Orientation orientation = Orientation::kLeftDominant;
  double v_min = 0.0;  // [m/s]
  double v_max = 0.0;  // [m/s]

  // Throws DegenerateSpec when the fields violate the type invariants.
  void validate() const;
};

struct TrajectorySample {
  double t;          // [s]
  double x_d, y_d;   // desired position [m]
  double psi_d;      // desired heading, wrapped to (-pi, pi]
  double psi_dot_d;  // desired yaw rate = kappa_d * v_d [rad/s]
  double kappa_d;    // signed path curvature [1/m]
  double v_d;        // desired speed [m/s]
};

// Closed reference trajectory sampled at the control period. The final sample
// duplicates the first pose (same arc position), so samples.size() equals
// duration / dt + 1.
struct Trajectory {
  std::string id;
  double dt = 0.0;
  double total_length = 0.0;  // [m]
  double duration = 0.0;      // [s], exact multiple of dt
  std::vector<TrajectorySample> samples;
};

// Maps |kappa| affinely onto [v_max .. v_min] (flat curvature -> fast, tight
// curvature -> slow) using the series' own min/max, then applies a centered
// moving average of `smooth_window` samples. A window of <= 1 disables
// smoothing; `circular` wraps the window around the series ends (closed
// paths). Constant-curvature input maps to v_max everywhere.
std::vector<double> speed_profile(const std::vector<double>& curvature,
                                  double v_min, double v_max,
                                  int smooth_window = 1, bool circular = false);

// Generates the closed, arc-length parametrized trajectory for one spec.
// Throws NonSimpleCurve if a fourier-circle spec self-intersects and
// DegenerateSpec if the realized arc length is shorter than 10 * dt * v_max.
Trajectory generate_path(const PathSpec& spec, double dt = 0.05);

struct SplitSchedule {
  std::vector<std::string> train;
  std::vector<std::string> test;
};

// Fixed train/test assignment for experiment runs 1..10. Every run holds out
// exactly four of the twelve clients. Throws OutOfRange otherwise.
SplitSchedule split_schedule(int run_index);

// Roman-numeral client ids in order, I..XII.
const std::vector<std::string>& client_ids();
// 1-based index of a client id; throws OutOfRange for unknown ids.
int client_index(const std::string& id);

PathSpec load_path_spec(const std::filesystem::path& json_file);
// Loads every *.json under `dir`, ordered I..XII.
std::vector<PathSpec> load_path_specs(const std::filesystem::path& dir);
void save_path_spec(const PathSpec& spec, const std::filesystem::path& json_file);

// CSV export: header t,x_d,y_d,psi_d,psi_dot_d,kappa_d,v_d, LF line endings.
void write_trajectory_csv(const Trajectory& traj, std::ostream& out);

}  // namespace fedff
