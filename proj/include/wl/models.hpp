#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "wl/common.hpp"
#include "wl/ops.hpp"
#include "wl/rng.hpp"
#include "wl/tensor.hpp"

namespace wl {

/// DCGAN-style 1-D generator/discriminator pair for 512-bin spectra.
///
/// Generator: 8 transposed-conv blocks, latent [B,100,1] -> signal [B,1,512].
///   L1 deconv(latent->512, k4,s1,p0)+BN+ReLU -> (512,4); L2..L7
///   deconv(k4,s2,p1)+BN+ReLU halve channels and double length down to
///   (8,256); L8 deconv(8->1, k4,s2,p1)+Tanh (no BN) -> (1,512).
/// Discriminator: 7 blocks conv(k4,s2,p1)+BN+LeakyReLU(0.2)+Dropout(0.5)
///   with channels 8,16,...,512 and lengths 256,...,4, then flatten (2048)
///   -> FC to num_classes+1 logits (real classes first, fake logit last).
/// Each block's post-LeakyReLU activation (before dropout) is exposed as a
/// feature tap for feature matching.

inline constexpr int kLatentDim = 100;
inline constexpr int kGenLayers = 8;
inline constexpr int kDiscLayers = 7;
inline constexpr double kLeakySlope = 0.2;
inline constexpr double kDropoutP = 0.5;

template <typename T>
struct BatchNormParams {
  Tensor<T> gamma, beta;                   // trainable, [C]
  Tensor<T> running_mean, running_var;     // running estimates, [C]
};

template <typename T>
struct GeneratorParams {
  int latent_dim = kLatentDim;
  std::vector<Tensor<T>> w;                // 8 deconv weights [Cin,Cout,k]
  std::vector<Tensor<T>> b;                // 8 biases [Cout]
  std::vector<BatchNormParams<T>> bn;      // 7 (layers 1..7; L8 has none)

  std::vector<Tensor<T>> trainable() const;
  /// Name -> tensor view (shared storage), running statistics included.
  std::vector<std::pair<std::string, Tensor<T>>> named_tensors() const;
  std::int64_t parameter_count() const;    // trainable scalars
};

template <typename T>
struct DiscriminatorParams {
  int num_classes = 3;
  std::vector<Tensor<T>> w;                // 7 conv weights [Cout,Cin,k]
  std::vector<Tensor<T>> b;                // 7 biases [Cout]
  std::vector<BatchNormParams<T>> bn;      // 7
  Tensor<T> fc_w, fc_b;                    // [K+1, 2048], [K+1]

  std::vector<Tensor<T>> trainable() const;
  std::vector<std::pair<std::string, Tensor<T>>> named_tensors() const;
  std::int64_t parameter_count() const;
};

/// One discriminator feature map Φ^(l): activations after LeakyReLU and
/// before dropout at block l (1-based).
template <typename T>
struct FeatureTap {
  int layer = 0;
  Tensor<T> activations;  // [B, Ch(l), Le(l)]
};

template <typename T>
struct DiscriminatorOutput {
  Tensor<T> logits;                  // [B, num_classes+1]
  std::vector<FeatureTap<T>> taps;   // exactly 7

  std::vector<Tensor<T>> features() const {
    std::vector<Tensor<T>> f;
    f.reserve(taps.size());
    for (const auto& t : taps) f.push_back(t.activations);
    return f;
  }
};

/// Weights N(0, 0.02^2), BN gamma N(1, 0.02^2), all biases/betas zero,
/// running stats (0, 1). Deterministic per seed; trainable tensors are
/// created with requires_grad set.
template <typename T>
GeneratorParams<T> build_generator(int latent_dim = kLatentDim,
                                   std::uint64_t seed = 0);

template <typename T>
DiscriminatorParams<T> build_discriminator(int num_classes = 3,
                                           std::uint64_t seed = 0);

/// Standard-normal latent batch [B, latent_dim, 1].
template <typename T>
Tensor<T> sample_latent(int batch, int latent_dim, Rng& rng);

/// z: [B, latent_dim, 1] -> [B, 1, 512], values in (-1, 1). Train mode
/// needs B >= 2 (batch normalization); update_running=false freezes the BN
/// running estimates while still normalizing with batch statistics.
template <typename T>
Tensor<T> generator_forward(const GeneratorParams<T>& g, const Tensor<T>& z,
                            Mode mode, Tape<T>* tape = nullptr,
                            bool update_running = true);

/// x: [B, 1, 512] -> logits [B, K+1] plus the 7 feature taps. rng feeds
/// dropout (consumed in train mode only). Eval mode uses BN running stats
/// and disables dropout.
template <typename T>
DiscriminatorOutput<T> discriminator_forward(const DiscriminatorParams<T>& d,
                                             const Tensor<T>& x, Mode mode,
                                             Rng& rng,
                                             Tape<T>* tape = nullptr,
                                             bool update_running = true);

/// Decision rule on one logit row: argmax over the first num_classes
/// entries (the fake logit never participates); ties resolve to the lowest
/// index.
template <typename T>
int argmax_class(std::span<const T> logit_row, int num_classes);

/// Eval-mode classification of a batch via argmax_class per row.
template <typename T>
std::vector<int> classify(const DiscriminatorParams<T>& d, const Tensor<T>& x);

}  // namespace wl
