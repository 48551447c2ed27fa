#include "fedff/trajgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>

#include "fedff/errors.hpp"
#include "json.hpp"

namespace fedff {

namespace {

constexpr double kTwoPi = 6.283185307179586476925287;

// Number of cells in the parameter-space and arc-length tables. Table lookups
// are quadratic within a cell, so positions come out far tighter than the
// 1e-6 closure budget.
constexpr int kParamCells = 8192;
constexpr int kArcCells = 8192;

struct CurvePoint {
  double x, y;
  double dx, dy;    // d/dtheta
  double ddx, ddy;  // d^2/dtheta^2
};

// Signed radial profile of a fourier-circle spec; a non-positive value means
// the curve crosses itself through the origin.
double radial_profile(const PathSpec& spec, double theta) {
  double r = 1.0;
  for (const FourierTerm& term : spec.fourier)
    r += term.amplitude * std::cos(term.harmonic * theta + term.phase);
  return spec.base_radius * r;
}

CurvePoint eval_fourier_circle(const PathSpec& spec, double theta) {
  double r = 1.0, dr = 0.0, ddr = 0.0;
  for (const FourierTerm& term : spec.fourier) {
    const double k = static_cast<double>(term.harmonic);
    const double arg = k * theta + term.phase;
    r += term.amplitude * std::cos(arg);
    dr -= term.amplitude * k * std::sin(arg);
    ddr -= term.amplitude * k * k * std::cos(arg);
  }
  r *= spec.base_radius;
  dr *= spec.base_radius;
  ddr *= spec.base_radius;

  const double c = std::cos(theta);
  const double s = std::sin(theta);
  CurvePoint p;
  p.x = r * c;
  p.y = r * s;
  p.dx = dr * c - r * s;
  p.dy = dr * s + r * c;
  p.ddx = ddr * c - 2.0 * dr * s - r * c;
  p.ddy = ddr * s + 2.0 * dr * c - r * s;
  return p;
}

// Warped Gerono figure-eight: f(t) = (a sin t, b sin t cos t (1 + p cos 2t)),
// scaled by the lobe-asymmetry factor s(t) = 1 + u sin t. u = 0 gives equal
// lobes; p fattens or squeezes the lobes, which shifts how much of the arc
// runs near peak curvature.
CurvePoint eval_lemniscate(const PathSpec& spec, double theta) {
  const double a = spec.base_radius;
  const double b = spec.lobe_height;
  const double u = spec.unbalance;
  const double pinch = spec.lobe_pinch;

  const double st = std::sin(theta);
  const double ct = std::cos(theta);
  const double s2 = std::sin(2.0 * theta);
  const double c2 = std::cos(2.0 * theta);

  const double fx = a * st;
  const double dfx = a * ct;
  const double ddfx = -a * st;

  const double base = b * st * ct;  // = (b/2) sin 2t
  const double dbase = b * c2;
  const double ddbase = -2.0 * b * s2;
  const double g = 1.0 + pinch * c2;
  const double dg = -2.0 * pinch * s2;
  const double ddg = -4.0 * pinch * c2;
  const double fy = base * g;
  const double dfy = dbase * g + base * dg;
  const double ddfy = ddbase * g + 2.0 * dbase * dg + base * ddg;

  const double w = 1.0 + u * st;
  const double dw = u * ct;
  const double ddw = -u * st;

  CurvePoint p;
  p.x = w * fx;
  p.y = w * fy;
  p.dx = dw * fx + w * dfx;
  p.dy = dw * fy + w * dfy;
  p.ddx = ddw * fx + 2.0 * dw * dfx + w * ddfx;
  p.ddy = ddw * fy + 2.0 * dw * dfy + w * ddfy;
  return p;
}

// Curve access for one generate_path call. The radial and lemniscate
// families are closed-form; the kappa-profile family integrates positions
// once into a dense table and answers arbitrary parameters with a short
// Gauss segment from the nearest node.
class CurveEvaluator {
 public:
  explicit CurveEvaluator(const PathSpec& spec) : spec_(spec) {
    if (spec_.family != CurveFamily::kKappaProfile) return;
    scale_ = spec_.profile_length / kTwoPi;
    const int n = kParamCells;
    px_.resize(n + 1);
    py_.resize(n + 1);
    px_[0] = 0.0;
    py_[0] = 0.0;
    const double h = kTwoPi / n;
    for (int j = 0; j < n; ++j) {
      // Simpson per cell on the unit tangent.
      const double t0 = h * j, tm = h * (j + 0.5), t1 = h * (j + 1);
      const double th0 = heading(t0), thm = heading(tm), th1 = heading(t1);
      px_[j + 1] = px_[j] + scale_ * h / 6.0 *
                               (std::cos(th0) + 4.0 * std::cos(thm) + std::cos(th1));
      py_[j + 1] = py_[j] + scale_ * h / 6.0 *
                               (std::sin(th0) + 4.0 * std::sin(thm) + std::sin(th1));
    }
  }

  CurvePoint eval(double t) const {
    CurvePoint p = spec_.family == CurveFamily::kFourierCircle
                       ? eval_fourier_circle(spec_, t)
                   : spec_.family == CurveFamily::kLemniscate
                       ? eval_lemniscate(spec_, t)
                       : eval_profile(t);
    if (spec_.orientation == Orientation::kRightDominant) {
      p.y = -p.y;
      p.dy = -p.dy;
      p.ddy = -p.ddy;
    }
    return p;
  }

  double speed(double t) const {
    if (spec_.family == CurveFamily::kKappaProfile) return scale_;
    const CurvePoint p = eval(t);
    return std::hypot(p.dx, p.dy);
  }

  // Closure gap of the cached profile integral (kappa-profile only).
  double profile_gap() const {
    return std::hypot(px_.back() - px_.front(), py_.back() - py_.front());
  }

  // Coarse self-proximity scan over cached positions; returns the smallest
  // distance between points at least an eighth of the loop apart.
  double profile_clearance(int stride = 16) const {
    const int n = static_cast<int>(px_.size()) - 1;
    const int m = n / stride;
    double best = std::numeric_limits<double>::max();
    for (int i = 0; i < m; ++i) {
      for (int j = i + 1; j < m; ++j) {
        const int ring = std::min(j - i, m - (j - i));
        if (ring <= m / 8) continue;
        const double dx = px_[i * stride] - px_[j * stride];
        const double dy = py_[i * stride] - py_[j * stride];
        best = std::min(best, std::hypot(dx, dy));
      }
    }
    return best;
  }

 private:
  // theta(t) with phi = t: dc * s + integrated harmonics, where the DC
  // curvature supplies the net turning (2*pi*n / S).
  double heading(double t) const {
    double theta = spec_.profile_turning * t;
    for (const KappaTerm& term : spec_.kappa_terms) {
      const double j = static_cast<double>(term.harmonic);
      theta += scale_ / j *
               (term.a * std::sin(j * t) + term.b * (1.0 - std::cos(j * t)));
    }
    return theta;
  }

  double kappa_at(double t) const {
    double kappa = spec_.profile_turning / scale_;  // dc term
    for (const KappaTerm& term : spec_.kappa_terms) {
      const double j = static_cast<double>(term.harmonic);
      kappa += term.a * std::cos(j * t) + term.b * std::sin(j * t);
    }
    return kappa;
  }

  CurvePoint eval_profile(double t) const {
    const int n = kParamCells;
    const double h = kTwoPi / n;
    double clamped = std::clamp(t, 0.0, kTwoPi);
    const int cell = std::min(static_cast<int>(clamped / h), n - 1);
    const double a = h * cell;

    // Three-point Gauss on [a, t].
    const double half = 0.5 * (clamped - a);
    const double mid = a + half;
    const double r = 0.7745966692414834;  // sqrt(3/5)
    double x = px_[cell], y = py_[cell];
    const double th1 = heading(mid - r * half);
    const double th2 = heading(mid);
    const double th3 = heading(mid + r * half);
    x += scale_ * half / 9.0 *
         (5.0 * std::cos(th1) + 8.0 * std::cos(th2) + 5.0 * std::cos(th3));
    y += scale_ * half / 9.0 *
         (5.0 * std::sin(th1) + 8.0 * std::sin(th2) + 5.0 * std::sin(th3));

    const double theta = heading(clamped);
    const double kappa = kappa_at(clamped);
    CurvePoint p;
    p.x = x;
    p.y = y;
    p.dx = scale_ * std::cos(theta);
    p.dy = scale_ * std::sin(theta);
    p.ddx = -scale_ * scale_ * kappa * std::sin(theta);
    p.ddy = scale_ * scale_ * kappa * std::cos(theta);
    return p;
  }

  const PathSpec& spec_;
  double scale_ = 1.0;  // ds/dt
  std::vector<double> px_, py_;
};

double curvature_of(const CurvePoint& p) {
  const double g2 = p.dx * p.dx + p.dy * p.dy;
  return (p.dx * p.ddy - p.dy * p.ddx) / (g2 * std::sqrt(g2));
}

double wrap_pi(double a) {
  double w = std::remainder(a, kTwoPi);
  if (w <= -3.141592653589793238462643) w = 3.141592653589793238462643;
  return w;
}

// Monotone table y(x) on a uniform x grid with known dy/dx at the nodes;
// inverts y -> x with a quadratic model inside the bracketing cell.
struct MonotoneTable {
  double x_step = 0.0;
  std::vector<double> y;      // size cells + 1, y[0] == 0, strictly increasing
  std::vector<double> slope;  // dy/dx at nodes, size cells + 1

  double invert(double target) const {
    const int cells = static_cast<int>(y.size()) - 1;
    if (target <= 0.0) return 0.0;
    if (target >= y[cells]) return x_step * cells;
    int lo = 0, hi = cells;
    while (hi - lo > 1) {
      const int mid = (lo + hi) / 2;
      (y[mid] <= target ? lo : hi) = mid;
    }
    const double rem = target - y[lo];
    const double g0 = slope[lo];
    const double b = (slope[lo + 1] - slope[lo]) / x_step;
    double d;
    if (std::abs(b) * x_step < 1e-12 * g0) {
      d = rem / g0;
    } else {
      d = (-g0 + std::sqrt(std::max(0.0, g0 * g0 + 2.0 * b * rem))) / b;
    }
    d = std::clamp(d, 0.0, x_step);
    return x_step * lo + d;
  }
};

std::vector<double> moving_average(const std::vector<double>& xs, int window,
                                   bool circular) {
  const int n = static_cast<int>(xs.size());
  if (window <= 1 || n < 2) return xs;
  if (window % 2 == 0) window -= 1;
  if (circular && window > n) window = (n % 2 == 0) ? n - 1 : n;
  const int half = window / 2;

  std::vector<double> out(xs.size());
  if (circular) {
    // Prefix sums over three concatenated periods; the window around index
    // i + n never leaves the table for any window up to a full period.
    std::vector<double> prefix(3 * n + 1, 0.0);
    for (int i = 0; i < 3 * n; ++i) prefix[i + 1] = prefix[i] + xs[i % n];
    for (int i = 0; i < n; ++i) {
      const int lo = i - half + n;
      const int hi = i + half + n;
      out[i] = (prefix[hi + 1] - prefix[lo]) / window;
    }
  } else {
    std::vector<double> prefix(n + 1, 0.0);
    for (int i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + xs[i];
    for (int i = 0; i < n; ++i) {
      const int lo = std::max(0, i - half);
      const int hi = std::min(n - 1, i + half);
      out[i] = (prefix[hi + 1] - prefix[lo]) / (hi - lo + 1);
    }
  }
  return out;
}

const char* orientation_name(Orientation o) {
  return o == Orientation::kLeftDominant ? "left" : "right";
}

const char* family_name(CurveFamily f) {
  switch (f) {
    case CurveFamily::kFourierCircle: return "fourier_circle";
    case CurveFamily::kLemniscate: return "lemniscate";
    default: return "kappa_profile";
  }
}

}  // namespace

void PathSpec::validate() const {
  if (!(base_radius > 0.0))
    throw DegenerateSpec("path " + id + ": base_radius must be positive");
  if (!(v_min > 0.0) || !(v_min <= v_max))
    throw DegenerateSpec("path " + id + ": need 0 < v_min <= v_max");
  if (family == CurveFamily::kFourierCircle) {
    for (const FourierTerm& term : fourier) {
      if (term.harmonic < 1)
        throw DegenerateSpec("path " + id + ": harmonic index must be >= 1");
      if (!(std::abs(term.amplitude) < 1.0))
        throw DegenerateSpec("path " + id + ": |amplitude| must be < 1");
    }
  } else if (family == CurveFamily::kLemniscate) {
    if (!(lobe_height > 0.0))
      throw DegenerateSpec("path " + id + ": lobe_height must be positive");
    if (!(std::abs(unbalance) < 1.0))
      throw DegenerateSpec("path " + id + ": |unbalance| must be < 1");
    if (!(std::abs(lobe_pinch) < 1.0))
      throw DegenerateSpec("path " + id + ": |lobe_pinch| must be < 1");
  } else {
    if (!(profile_length > 0.0))
      throw DegenerateSpec("path " + id + ": profile_length must be positive");
    if (profile_turning != 0 && profile_turning != 1)
      throw DegenerateSpec("path " + id + ": profile_turning must be 0 or 1");
    for (const KappaTerm& term : kappa_terms) {
      if (term.harmonic < 1)
        throw DegenerateSpec("path " + id + ": profile harmonic must be >= 1");
      if (!std::isfinite(term.a) || !std::isfinite(term.b))
        throw DegenerateSpec("path " + id + ": profile coefficients not finite");
    }
  }
}

std::vector<double> speed_profile(const std::vector<double>& curvature,
                                  double v_min, double v_max,
                                  int smooth_window, bool circular) {
  if (curvature.empty())
    throw std::invalid_argument("speed_profile: empty curvature series");
  if (!(v_min <= v_max))
    throw std::invalid_argument("speed_profile: v_min > v_max");

  double lo = std::abs(curvature[0]), hi = lo;
  for (double k : curvature) {
    const double a = std::abs(k);
    lo = std::min(lo, a);
    hi = std::max(hi, a);
  }
  std::vector<double> v(curvature.size(), v_max);
  if (hi - lo > 1e-15 * std::max(1.0, hi)) {
    const double gain = (v_max - v_min) / (hi - lo);
    for (std::size_t i = 0; i < curvature.size(); ++i)
      v[i] = v_max - gain * (std::abs(curvature[i]) - lo);
  }
  return moving_average(v, smooth_window, circular);
}

Trajectory generate_path(const PathSpec& spec, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("generate_path: dt must be > 0");
  spec.validate();
  const CurveEvaluator curve(spec);

  // Parameter-space arc-length table, Simpson per cell.
  MonotoneTable arc;
  arc.x_step = kTwoPi / kParamCells;
  arc.y.resize(kParamCells + 1);
  arc.slope.resize(kParamCells + 1);
  arc.y[0] = 0.0;
  arc.slope[0] = curve.speed(0.0);
  double min_radius = std::numeric_limits<double>::max();
  double min_speed = arc.slope[0];
  for (int j = 0; j < kParamCells; ++j) {
    const double th0 = arc.x_step * j;
    const double th1 = th0 + arc.x_step;
    const double gm = curve.speed(0.5 * (th0 + th1));
    arc.slope[j + 1] = curve.speed(th1);
    arc.y[j + 1] =
        arc.y[j] + arc.x_step / 6.0 * (arc.slope[j] + 4.0 * gm + arc.slope[j + 1]);
    min_speed = std::min(min_speed, std::min(gm, arc.slope[j + 1]));
    if (spec.family == CurveFamily::kFourierCircle)
      min_radius = std::min(min_radius,
                            std::min(radial_profile(spec, 0.5 * (th0 + th1)),
                                     radial_profile(spec, th1)));
  }
  const double total_length = arc.y[kParamCells];

  if (spec.family == CurveFamily::kFourierCircle && min_radius <= 1e-9)
    throw NonSimpleCurve("path " + spec.id + ": radial profile touches origin");
  if (spec.family == CurveFamily::kKappaProfile) {
    if (curve.profile_gap() > 5e-7)
      throw DegenerateSpec("path " + spec.id + ": curvature profile does not close");
    // Figure-eight profiles (zero net turning) are allowed their crossing.
    if (spec.profile_turning == 1 &&
        curve.profile_clearance() < spec.profile_length / 600.0)
      throw NonSimpleCurve("path " + spec.id + ": curve approaches itself");
  }
  if (min_speed <= 1e-6)
    throw DegenerateSpec("path " + spec.id + ": parametrization stalls");
  if (total_length < 10.0 * dt * spec.v_max)
    throw DegenerateSpec("path " + spec.id + ": arc length below 10*dt*v_max");

  // Curvature resampled on a uniform arc grid.
  const double ds = total_length / kArcCells;
  std::vector<double> kappa_arc(kArcCells);
  for (int i = 0; i < kArcCells; ++i)
    kappa_arc[i] = curvature_of(curve.eval(arc.invert(ds * i)));

  // Speed profile. First pass sizes the smoothing window (0.5 s of travel at
  // the mean raw speed) and the quantization margin; the margin keeps v_d
  // inside [v_min, v_max] after the lap duration is rounded up to a whole
  // number of control periods.
  const std::vector<double> raw = speed_profile(kappa_arc, spec.v_min, spec.v_max);
  double mean_raw = 0.0;
  for (double v : raw) mean_raw += v;
  mean_raw /= static_cast<double>(raw.size());
  double t_estimate = 0.0;
  for (double v : raw) t_estimate += ds / v;

  const int window = std::max(1, static_cast<int>(std::lround(0.5 * mean_raw / ds)) | 1);
  const double margin = 2.0 * dt / t_estimate;
  const double v_lo = std::min(spec.v_min * (1.0 + margin), spec.v_max);
  std::vector<double> v_arc = speed_profile(kappa_arc, v_lo, spec.v_max, window, true);

  // Arc -> time table (trapezoid on 1/v), then the closed-form slowdown that
  // makes the lap an exact multiple of dt.
  double t_total = 0.0;
  for (int i = 0; i < kArcCells; ++i)
    t_total += ds * 0.5 * (1.0 / v_arc[i] + 1.0 / v_arc[(i + 1) % kArcCells]);
  const int steps = std::max(1, static_cast<int>(std::ceil(t_total / dt - 1e-9)));
  const double gamma = t_total / (steps * dt);  // <= 1 + 1e-9
  for (double& v : v_arc) v *= gamma;

  MonotoneTable time_of_arc;
  time_of_arc.x_step = ds;
  time_of_arc.y.resize(kArcCells + 1);
  time_of_arc.slope.resize(kArcCells + 1);
  time_of_arc.y[0] = 0.0;
  for (int i = 0; i <= kArcCells; ++i)
    time_of_arc.slope[i] = 1.0 / v_arc[i % kArcCells];
  for (int i = 0; i < kArcCells; ++i)
    time_of_arc.y[i + 1] =
        time_of_arc.y[i] + ds * 0.5 * (time_of_arc.slope[i] + time_of_arc.slope[i + 1]);

  Trajectory traj;
  traj.id = spec.id;
  traj.dt = dt;
  traj.total_length = total_length;
  traj.duration = steps * dt;
  traj.samples.reserve(steps + 1);

  const double t_end = time_of_arc.y[kArcCells];
  for (int k = 0; k <= steps; ++k) {
    // The closing sample re-evaluates the curve at theta = 0 so the loop ends
    // bit-identical to its start.
    const double t_k = (k == steps) ? t_end : k * dt;
    const double s_k = (k == steps) ? 0.0 : time_of_arc.invert(t_k);
    const double theta = (k == steps) ? 0.0 : arc.invert(s_k);

    const CurvePoint p = curve.eval(theta);
    const double cell = s_k / ds;
    const int i = std::min(static_cast<int>(cell), kArcCells - 1);
    const double frac = cell - i;
    const double v_d =
        v_arc[i] + frac * (v_arc[(i + 1) % kArcCells] - v_arc[i]);

    TrajectorySample sample;
    sample.t = k * dt;
    sample.x_d = p.x;
    sample.y_d = p.y;
    sample.psi_d = wrap_pi(std::atan2(p.dy, p.dx));
    sample.kappa_d = curvature_of(p);
    sample.v_d = v_d;
    sample.psi_dot_d = sample.kappa_d * v_d;
    traj.samples.push_back(sample);
  }
  return traj;
}

const std::vector<std::string>& client_ids() {
  static const std::vector<std::string> ids = {"I",  "II", "III", "IV",
                                               "V",  "VI", "VII", "VIII",
                                               "IX", "X",  "XI",  "XII"};
  return ids;
}

int client_index(const std::string& id) {
  const auto& ids = client_ids();
  for (std::size_t i = 0; i < ids.size(); ++i)
    if (ids[i] == id) return static_cast<int>(i) + 1;
  throw OutOfRange("unknown client id: " + id);
}

SplitSchedule split_schedule(int run_index) {
  // Test-set membership per experiment run; the other eight clients train.
  static const std::vector<std::vector<int>> test_sets = {
      {1, 9, 10, 11},   // run 1
      {3, 4, 6, 9},     // run 2
      {2, 8, 9, 12},    // run 3
      {2, 6, 7, 8},     // run 4
      {5, 10, 11, 12},  // run 5
      {1, 2, 9, 11},    // run 6
      {4, 6, 7, 9},     // run 7
      {7, 9, 10, 12},   // run 8
      {1, 2, 9, 11},    // run 9
      {4, 7, 8, 9},     // run 10
  };
  if (run_index < 1 || run_index > 10)
    throw OutOfRange("split_schedule: run index must be in 1..10");

  const std::vector<int>& test = test_sets[run_index - 1];
  SplitSchedule split;
  for (int i = 1; i <= 12; ++i) {
    const std::string& id = client_ids()[i - 1];
    if (std::find(test.begin(), test.end(), i) != test.end())
      split.test.push_back(id);
    else
      split.train.push_back(id);
  }
  return split;
}

PathSpec load_path_spec(const std::filesystem::path& json_file) {
  std::ifstream in(json_file);
  if (!in) throw IoError("cannot open path spec: " + json_file.string());
  nlohmann::json j;
  in >> j;

  PathSpec spec;
  spec.id = j.at("id").get<std::string>();
  spec.name = j.value("name", std::string{});
  const std::string family = j.value("family", "fourier_circle");
  spec.family = family == "lemniscate"      ? CurveFamily::kLemniscate
                : family == "kappa_profile" ? CurveFamily::kKappaProfile
                                            : CurveFamily::kFourierCircle;
  spec.base_radius = j.at("base_radius").get<double>();
  if (j.contains("fourier")) {
    for (const auto& term : j.at("fourier")) {
      FourierTerm ft;
      ft.harmonic = term.at("k").get<int>();
      ft.amplitude = term.at("a").get<double>();
      ft.phase = term.value("phi", 0.0);
      spec.fourier.push_back(ft);
    }
  }
  spec.lobe_height = j.value("lobe_height", 0.5);
  spec.unbalance = j.value("unbalance", 0.0);
  spec.lobe_pinch = j.value("lobe_pinch", 0.0);
  spec.profile_length = j.value("profile_length", 0.0);
  spec.profile_turning = j.value("profile_turning", 1);
  if (j.contains("kappa_terms")) {
    for (const auto& term : j.at("kappa_terms")) {
      KappaTerm kt;
      kt.harmonic = term.at("j").get<int>();
      kt.a = term.value("a", 0.0);
      kt.b = term.value("b", 0.0);
      spec.kappa_terms.push_back(kt);
    }
  }
  spec.orientation = j.value("orientation", "left") == std::string("right")
                         ? Orientation::kRightDominant
                         : Orientation::kLeftDominant;
  spec.v_min = j.at("v_min").get<double>();
  spec.v_max = j.at("v_max").get<double>();
  spec.validate();
  return spec;
}

std::vector<PathSpec> load_path_specs(const std::filesystem::path& dir) {
  std::vector<PathSpec> specs;
  if (!std::filesystem::is_directory(dir))
    throw IoError("path spec directory not found: " + dir.string());
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().extension() == ".json")
      specs.push_back(load_path_spec(entry.path()));
  }
  std::sort(specs.begin(), specs.end(), [](const PathSpec& a, const PathSpec& b) {
    return client_index(a.id) < client_index(b.id);
  });
  return specs;
}

void save_path_spec(const PathSpec& spec, const std::filesystem::path& json_file) {
  nlohmann::json j;
  j["id"] = spec.id;
  j["name"] = spec.name;
  j["family"] = family_name(spec.family);
  j["base_radius"] = spec.base_radius;
  if (spec.family == CurveFamily::kFourierCircle) {
    nlohmann::json terms = nlohmann::json::array();
    for (const FourierTerm& ft : spec.fourier)
      terms.push_back({{"k", ft.harmonic}, {"a", ft.amplitude}, {"phi", ft.phase}});
    j["fourier"] = terms;
  } else if (spec.family == CurveFamily::kLemniscate) {
    j["lobe_height"] = spec.lobe_height;
    j["unbalance"] = spec.unbalance;
    j["lobe_pinch"] = spec.lobe_pinch;
  } else {
    j["profile_length"] = spec.profile_length;
    j["profile_turning"] = spec.profile_turning;
    nlohmann::json terms = nlohmann::json::array();
    for (const KappaTerm& kt : spec.kappa_terms)
      terms.push_back({{"j", kt.harmonic}, {"a", kt.a}, {"b", kt.b}});
    j["kappa_terms"] = terms;
  }
  j["orientation"] = orientation_name(spec.orientation);
  j["v_min"] = spec.v_min;
  j["v_max"] = spec.v_max;

  std::ofstream out(json_file, std::ios::binary);
  if (!out) throw IoError("cannot write path spec: " + json_file.string());
  out << j.dump(2) << "\n";
}

void write_trajectory_csv(const Trajectory& traj, std::ostream& out) {
  out << "t,x_d,y_d,psi_d,psi_dot_d,kappa_d,v_d\n";
  char line[256];
  for (const TrajectorySample& s : traj.samples) {
    std::snprintf(line, sizeof(line), "%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g\n",
                  s.t, s.x_d, s.y_d, s.psi_d, s.psi_dot_d, s.kappa_d, s.v_d);
    out << line;
  }
}

}  // namespace fedff
