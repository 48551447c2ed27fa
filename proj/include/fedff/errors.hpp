#pragma once

#include <stdexcept>
#include <string>

namespace fedff {

// Domain error hierarchy. Each condition named by the module contracts gets
// its own type so callers and tests can catch them precisely.

struct NonSimpleCurve : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DegenerateSpec : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct OutOfRange : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NonFinite : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Saturation : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EmptyLog : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EmptyBatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EmptyDataset : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ShapeMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EmptyUpdateSet : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Diverged : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct AllClientsDiverged : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct MalformedFrame : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace fedff
