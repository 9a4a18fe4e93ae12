#pragma once

#include "wl/common.hpp"
#include "wl/rng.hpp"
#include "wl/tensor.hpp"

namespace wl {

/// Neural-network primitives over 1-D signals. Canonical activation layout is
/// [batch, channels, length]. Every op takes an optional tape; when `tape` is
/// non-null and any input requires gradients, a backward closure is recorded
/// and the output is marked as requiring gradients. With a null tape the ops
/// run in pure inference mode.

/// x: [B, Cin, L], w: [Cout, Cin, k], b: [Cout] -> [B, Cout, Lout]
/// Cross-correlation (no kernel flip); Lout = floor((L + 2*padding - k) /
/// stride) + 1 and must be >= 1.
template <typename T>
Tensor<T> conv1d(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b,
                 int stride, int padding, Tape<T>* tape = nullptr);

/// Transposed convolution (adjoint of conv1d). x: [B, Cin, L],
/// w: [Cin, Cout, k], b: [Cout] -> [B, Cout, Lout] with
/// Lout = (L - 1) * stride - 2*padding + k.
template <typename T>
Tensor<T> deconv1d(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b,
                   int stride, int padding, Tape<T>* tape = nullptr);

struct BatchNormOpts {
  double momentum = 0.1;  ///< running = (1-m)*running + m*batch
  double eps = 1e-5;
  /// When false in Train mode, batch statistics are still used for
  /// normalization but the running estimates are left untouched (used when a
  /// network is run as a frozen feature extractor during another network's
  /// update step).
  bool update_running = true;
};

/// Per-channel batch normalization over (batch, length). In Train mode the
/// batch statistics normalize (biased variance) and update the running
/// estimates (unbiased variance); in Eval mode the running estimates
/// normalize. x: [B, C, L]; gamma, beta, running_*: [C].
template <typename T>
Tensor<T> batchnorm1d(const Tensor<T>& x, const Tensor<T>& gamma,
                      const Tensor<T>& beta, Tensor<T>& running_mean,
                      Tensor<T>& running_var, Mode mode,
                      const BatchNormOpts& opts, Tape<T>* tape = nullptr);

/// x: [B, N], w: [M, N], b: [M] -> [B, M]
template <typename T>
Tensor<T> fully_connected(const Tensor<T>& x, const Tensor<T>& w,
                          const Tensor<T>& b, Tape<T>* tape = nullptr);

template <typename T>
Tensor<T> relu(const Tensor<T>& x, Tape<T>* tape = nullptr);

template <typename T>
Tensor<T> leaky_relu(const Tensor<T>& x, double negative_slope, Tape<T>* tape = nullptr);

template <typename T>
Tensor<T> tanh(const Tensor<T>& x, Tape<T>* tape = nullptr);

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x, Tape<T>* tape = nullptr);

/// Inverted dropout: in Train mode keeps each element with probability 1-p
/// and scales survivors by 1/(1-p); identity in Eval mode or when p == 0.
/// Consumes one uniform draw per element in Train mode (p > 0).
template <typename T>
Tensor<T> dropout(const Tensor<T>& x, double p, Mode mode, Rng& rng,
                  Tape<T>* tape = nullptr);

/// [B, C, L] -> [B, C*L] (row-major, so the element order is unchanged).
template <typename T>
Tensor<T> flatten(const Tensor<T>& x, Tape<T>* tape = nullptr);

/// ca*a + cb*b for scalar tensors (used to mix loss terms).
template <typename T>
Tensor<T> combine_scalars(const Tensor<T>& a, T ca, const Tensor<T>& b, T cb,
                          Tape<T>* tape = nullptr);

/// --- low-level helpers, exposed for testing ---

/// Unfolds x [B, C, L] into a [B*Lout, C*k] matrix (zero padding), with
/// column index c*k + kk and row index b*Lout + lo.
template <typename T>
void im2col_batch(std::span<const T> x, int B, int C, int L, int k, int stride,
                  int padding, int Lout, std::vector<T>& out);

/// Adjoint of im2col_batch: scatter-adds the columns back into x-layout.
/// `out` must be pre-sized to B*C*L; existing contents are accumulated into.
template <typename T>
void col2im_batch(std::span<const T> cols, int B, int C, int L, int k,
                  int stride, int padding, int Lout, std::span<T> out);

}  // namespace wl
