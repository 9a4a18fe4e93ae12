#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "wl/common.hpp"
#include "wl/rng.hpp"

namespace wl {

/// Synthetic sea/land clutter spectra: each sample is a 512-bin Doppler
/// spectrum. Sea clutter shows two Bragg peaks symmetric about the center
/// bin, land clutter a single near-center peak, and sea-land boundary clutter
/// the superposition of both patterns.

enum class ClutterClass : std::int8_t { Sea = 0, Land = 1, SeaLand = 2 };
inline constexpr int kNumClasses = 3;
inline constexpr int kSignalLength = 512;
inline constexpr std::int8_t kUnlabeled = -1;

enum class SampleRole : std::uint8_t { Train = 0, Test = 1 };

struct SpectrumParams {
  int length = kSignalLength;
  double bragg_offset = 64.0;   ///< bin offset of the symmetric peak pair
  double peak_width = 6.0;      ///< Gaussian sigma in bins
  double amp_jitter = 0.3;      ///< relative per-peak amplitude jitter in [0,1]
  double doppler_jitter = 5.0;  ///< max |shift| of peak centers in bins
  double noise_floor = 0.05;    ///< additive uniform noise amplitude

  /// Throws ValueError/GeometryError when the peaks cannot fit in the band.
  void validate() const;
};

/// Flat sample store; signals are row-major [count x length] in f32 (the
/// on-disk precision). label -1 marks an unlabeled training sample.
struct Dataset {
  int signal_length = kSignalLength;
  std::vector<float> signals;
  std::vector<std::int8_t> labels;
  std::vector<SampleRole> roles;

  std::int64_t count() const {
    return static_cast<std::int64_t>(labels.size());
  }
  const float* signal(std::int64_t i) const {
    return signals.data() + i * signal_length;
  }
  float* signal(std::int64_t i) { return signals.data() + i * signal_length; }

  std::vector<std::int64_t> indices_labeled_train() const;
  std::vector<std::int64_t> indices_unlabeled_train() const;
  std::vector<std::int64_t> indices_test() const;

  bool operator==(const Dataset& other) const = default;
};

/// One spectrum of the given class, normalized to [-1, 1]. Consumes rng draws
/// in a fixed order, so a derived per-sample stream gives scheduling-proof
/// determinism.
std::vector<float> synth_spectrum(ClutterClass cls, const SpectrumParams& params,
                                  Rng& rng);

/// Affine min-max normalization onto exactly [-1, 1] (in-place variant of the
/// stored convention). Throws ValueError on a constant signal.
void normalize(std::vector<double>& signal);

/// per_class samples for each of the 3 classes; the first
/// floor(train_frac * per_class) of each class are train, the rest test, all
/// labeled. Deterministic in (params, seed).
Dataset make_dataset(int per_class, double train_frac,
                     const SpectrumParams& params, std::uint64_t seed);

/// Keeps labels on a class-balanced random subset of n_lab train samples
/// (n_lab/3 per class) and marks the remaining train samples unlabeled. Test
/// samples are untouched. n_lab must be divisible by 3 and fit the per-class
/// train counts.
Dataset split_semisupervised(const Dataset& dataset, int n_lab,
                             std::uint64_t seed);

void write_dataset(const Dataset& dataset, const std::string& path);
Dataset read_dataset(const std::string& path);

}  // namespace wl
