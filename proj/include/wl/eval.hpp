#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "wl/models.hpp"

namespace wl {

/// Statistical synthesis-quality summary over nearest-neighbor pairs of
/// (synthetic, real) signals.
struct SynthesisReport {
  double ad = 0.0;   ///< mean absolute distance, >= 0
  double cs = 0.0;   ///< mean cosine similarity, in [-1, 1]
  double pcc = 0.0;  ///< mean Pearson correlation, in [-1, 1]
  int n_pairs = 0;   ///< number of synthetic samples evaluated
};

/// Mean over elements of |a_i - b_i|.
double absolute_distance(std::span<const float> a, std::span<const float> b);

/// dot(a,b) / (||a|| * ||b||). Throws ValueError on an all-zero vector.
double cosine_similarity(std::span<const float> a, std::span<const float> b);

/// Centered cosine similarity. Throws ValueError on a constant input.
double pearson(std::span<const float> a, std::span<const float> b);

/// For each synthetic row (flattened [n, length]) the index of the nearest
/// real row under L2 distance; ties break toward the lowest real index.
std::vector<std::int64_t> pair_nearest(std::span<const float> synthetic,
                                       std::span<const float> real,
                                       int length);

/// Pairs every synthetic row with its nearest real row and reports the mean
/// AD/CS/PCC over the pairs.
SynthesisReport paired_metrics(std::span<const float> synthetic,
                               std::span<const float> real, int length);

/// Generates n_synth signals from the generator (eval mode, batched) and
/// evaluates them against the real signals via paired_metrics. Deterministic
/// given (generator, seed).
template <typename T>
SynthesisReport synthesis_report(const GeneratorParams<T>& generator,
                                 std::span<const float> real, int length,
                                 int n_synth, std::uint64_t seed);

/// One CSV row "n_pairs,ad,cs,pcc" (no header, no trailing newline).
std::string synthesis_csv_row(const SynthesisReport& r);

}  // namespace wl
