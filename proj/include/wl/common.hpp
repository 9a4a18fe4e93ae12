#pragma once

#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace wl {

/// Tensor shape: list of positive dimensions.
using Shape = std::vector<int>;

inline std::int64_t numel(const Shape& shape) {
  std::int64_t n = 1;
  for (int d : shape) n *= d;
  return n;
}

inline std::string shape_str(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

enum class Mode { Train, Eval };

/// Base error for everything thrown by this library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Mismatched tensor dimensions (channel counts, matrix sizes, ...).
struct ShapeError : Error {
  using Error::Error;
};

/// Layer geometry that yields an empty or negative output extent,
/// or signal parameters that place features outside the band.
struct GeometryError : Error {
  using Error::Error;
};

/// Invalid scalar parameter (probability out of range, bad weights, ...).
struct ValueError : Error {
  using Error::Error;
};

/// API misuse: non-scalar loss passed to backward, empty inputs, ...
struct ContractError : Error {
  using Error::Error;
};

/// Malformed file contents (bad magic, truncation, version mismatch).
struct FormatError : Error {
  using Error::Error;
};

/// Filesystem-level failure (cannot open/read/write).
struct IoError : Error {
  using Error::Error;
};

}  // namespace wl
