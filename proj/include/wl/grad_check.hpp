#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <numeric>
#include <vector>

#include "wl/rng.hpp"
#include "wl/tensor.hpp"

namespace wl {

struct GradCheckResult {
  double max_rel_err = 0.0;
  std::int64_t coords_checked = 0;
  /// Coordinate (input index, flat offset) of the worst error, for debugging.
  int worst_input = -1;
  std::int64_t worst_offset = -1;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

/// Compares tape gradients against central finite differences.
///
/// `loss_fn` must rebuild the computation from the current values of `inputs`
/// on every call and return a scalar; when called with a null tape it runs
/// forward-only. It must be deterministic across calls (seed any internal
/// randomness per call). Inputs larger than `max_coords` are subsampled
/// deterministically. Relative error uses |a - n| / max(1, |a|, |n|), so tiny
/// absolute errors on near-zero gradients do not dominate.
template <typename T>
GradCheckResult grad_check(
    const std::function<Tensor<T>(Tape<T>*)>& loss_fn,
    std::vector<Tensor<T>> inputs, double h = 1e-5,
    std::int64_t max_coords = 1000, std::uint64_t seed = 0) {
  for (auto& in : inputs) {
    in.set_requires_grad(true);
    in.zero_grad();
  }
  Tape<T> tape;
  Tensor<T> loss = loss_fn(&tape);
  tape.backward(loss);

  std::vector<std::vector<T>> analytic;
  analytic.reserve(inputs.size());
  for (auto& in : inputs) {
    auto g = in.grad();
    analytic.emplace_back(g.begin(), g.end());
  }

  GradCheckResult res;
  Rng rng(seed ^ 0x67ad3c5b1e08f2d4ULL);
  for (std::size_t ii = 0; ii < inputs.size(); ++ii) {
    auto data = inputs[ii].data();
    const std::int64_t n = static_cast<std::int64_t>(data.size());
    std::vector<std::int64_t> coords(static_cast<std::size_t>(n));
    std::iota(coords.begin(), coords.end(), 0);
    if (n > max_coords) {
      rng.shuffle(coords);
      coords.resize(static_cast<std::size_t>(max_coords));
      std::sort(coords.begin(), coords.end());
    }
    for (std::int64_t c : coords) {
      const T saved = data[static_cast<std::size_t>(c)];
      data[static_cast<std::size_t>(c)] = saved + static_cast<T>(h);
      const double fp = static_cast<double>(loss_fn(nullptr).item());
      data[static_cast<std::size_t>(c)] = saved - static_cast<T>(h);
      const double fm = static_cast<double>(loss_fn(nullptr).item());
      data[static_cast<std::size_t>(c)] = saved;

      const double numeric = (fp - fm) / (2.0 * h);
      const double a =
          static_cast<double>(analytic[ii][static_cast<std::size_t>(c)]);
      const double rel = std::abs(a - numeric) /
                         std::max({1.0, std::abs(a), std::abs(numeric)});
      ++res.coords_checked;
      if (rel > res.max_rel_err) {
        res.max_rel_err = rel;
        res.worst_input = static_cast<int>(ii);
        res.worst_offset = c;
        res.worst_analytic = a;
        res.worst_numeric = numeric;
      }
    }
  }
  return res;
}

}  // namespace wl
