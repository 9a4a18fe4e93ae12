#pragma once

#include <span>
#include <vector>

#include "wl/common.hpp"
#include "wl/tensor.hpp"

namespace wl {

/// Semi-supervised GAN losses over discriminator logits of shape
/// [B, K+1]: columns 0..K-1 are the real classes, column K is the fake
/// class. All losses are log-sum-exp stabilized and reduce to scalars
/// (shape {1}).

/// Weighting of the generator objective: total = alpha * adversarial +
/// beta * joint feature matching, with alpha + beta = 1. l_mul lists the
/// 1-based discriminator feature layers entering the joint matching term.
struct LossConfig {
  double alpha = 0.7;
  double beta = 0.3;
  std::vector<int> l_mul = {1, 2, 3, 4, 5, 6};
  bool saturating = false;  ///< saturating adversarial variant (off = default)

  /// Throws ValueError unless alpha,beta >= 0, alpha + beta == 1 (1e-9),
  /// and l_mul is a nonempty duplicate-free subset of [1, num_layers]
  /// whenever beta > 0.
  void validate(int num_layers) const;
};

/// Cross-entropy of the labeled batch over the K real classes:
/// mean_b [ logsumexp_{j<K} s_j - s_label ]. The fake column receives no
/// gradient.
template <typename T>
Tensor<T> supervised_loss(const Tensor<T>& logits,
                          std::span<const int> labels,
                          Tape<T>* tape = nullptr);

/// Two-player real/fake term: mean over unlabeled rows of -log(1 - p_fake)
/// plus mean over fake rows of -log p_fake, where p_fake is the softmax
/// probability of column K.
template <typename T>
Tensor<T> unsupervised_loss(const Tensor<T>& logits_unlabeled,
                            const Tensor<T>& logits_fake,
                            Tape<T>* tape = nullptr);

/// Discriminator objective and its two addends (all taped scalars;
/// total = supervised + unsupervised).
template <typename T>
struct DiscriminatorLoss {
  Tensor<T> total;
  Tensor<T> supervised;
  Tensor<T> unsupervised;
};

template <typename T>
DiscriminatorLoss<T> discriminator_loss(const Tensor<T>& logits_labeled,
                                        std::span<const int> labels,
                                        const Tensor<T>& logits_unlabeled,
                                        const Tensor<T>& logits_fake,
                                        Tape<T>* tape = nullptr);

/// Generator adversarial term on fake logits. Non-saturating (default):
/// mean -log(1 - p_fake); saturating: mean log p_fake.
template <typename T>
Tensor<T> adversarial_generator_loss(const Tensor<T>& logits_fake,
                                     bool saturating = false,
                                     Tape<T>* tape = nullptr);

/// Squared distance of batch-mean feature maps at one layer:
/// || mean_b fake[b] - mean_b real[b] ||^2 over all C*L coordinates.
/// Batch sizes may differ; channel and length must match.
template <typename T>
Tensor<T> feature_matching_layer(const Tensor<T>& fake_features,
                                 const Tensor<T>& real_features,
                                 Tape<T>* tape = nullptr);

/// Joint multi-layer matching: sum over l in l_mul (1-based) of
/// feature_matching_layer at that tap divided by 2 * C_l * L_l.
template <typename T>
Tensor<T> joint_feature_matching(const std::vector<Tensor<T>>& fake_features,
                                 const std::vector<Tensor<T>>& real_features,
                                 std::span<const int> l_mul,
                                 Tape<T>* tape = nullptr);

/// alpha * adversarial + beta * feature_matching. The endpoints are exact:
/// beta == 0 returns the adversarial handle itself and alpha == 0 the
/// matching handle, so the ignored term contributes neither value nor
/// gradient.
template <typename T>
Tensor<T> weighted_generator_loss(const Tensor<T>& adversarial,
                                  const Tensor<T>& feature_matching,
                                  double alpha, double beta,
                                  Tape<T>* tape = nullptr);

/// Softmax probability of the fake column per row (inference helper, no
/// gradients).
template <typename T>
std::vector<T> fake_probability(const Tensor<T>& logits);

}  // namespace wl
