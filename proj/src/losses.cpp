#include "wl/losses.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <set>

#include "wl/ops.hpp"

namespace wl {

namespace {

template <typename T>
bool want_tape(Tape<T>* tape, std::initializer_list<bool> reqs) {
  if (!tape) return false;
  for (bool r : reqs)
    if (r) return true;
  return false;
}

template <typename T>
void check_logits(const Tensor<T>& logits, const char* what) {
  if (logits.rank() != 2 || logits.shape()[0] < 1 || logits.shape()[1] < 2)
    throw ShapeError(std::string(what) + " logits must be [B, K+1] with " +
                     "B, K >= 1, got " + shape_str(logits.shape()));
}

/// Per-row softmax bookkeeping over a [B, C] logit block, computed in
/// double: p_all over all C columns, p_real over the first C-1, and the two
/// log-partition values.
template <typename T>
struct RowSoftmax {
  std::vector<double> p_all;    // [B*C]
  std::vector<double> p_real;   // [B*(C-1)]
  std::vector<double> lse_all;  // [B]
  std::vector<double> lse_real;
};

template <typename T>
RowSoftmax<T> row_softmax(const Tensor<T>& logits) {
  const int B = logits.shape()[0], C = logits.shape()[1];
  const int K = C - 1;
  RowSoftmax<T> r;
  r.p_all.resize(static_cast<std::size_t>(B) * C);
  r.p_real.resize(static_cast<std::size_t>(B) * K);
  r.lse_all.resize(B);
  r.lse_real.resize(B);
  const auto s = logits.data();
  for (int b = 0; b < B; ++b) {
    const T* row = s.data() + static_cast<std::size_t>(b) * C;
    double m_all = row[0], m_real = row[0];
    for (int j = 1; j < C; ++j) {
      m_all = std::max(m_all, static_cast<double>(row[j]));
      if (j < K) m_real = std::max(m_real, static_cast<double>(row[j]));
    }
    double z_all = 0.0, z_real = 0.0;
    for (int j = 0; j < C; ++j) {
      const double e = std::exp(row[j] - m_all);
      z_all += e;
      if (j < K) z_real += std::exp(row[j] - m_real);
    }
    r.lse_all[b] = m_all + std::log(z_all);
    r.lse_real[b] = m_real + std::log(z_real);
    for (int j = 0; j < C; ++j)
      r.p_all[static_cast<std::size_t>(b) * C + j] =
          std::exp(row[j] - r.lse_all[b]);
    for (int j = 0; j < K; ++j)
      r.p_real[static_cast<std::size_t>(b) * K + j] =
          std::exp(row[j] - r.lse_real[b]);
  }
  return r;
}

}  // namespace

void LossConfig::validate(int num_layers) const {
  if (alpha < 0.0 || beta < 0.0)
    throw ValueError("loss weights must be nonnegative");
  if (std::abs(alpha + beta - 1.0) > 1e-9)
    throw ValueError("loss weights must satisfy alpha + beta = 1, got " +
                     std::to_string(alpha) + " + " + std::to_string(beta));
  if (beta > 0.0) {
    if (l_mul.empty())
      throw ValueError("feature matching enabled but l_mul is empty");
    std::set<int> seen;
    for (int l : l_mul) {
      if (l < 1 || l > num_layers)
        throw ValueError("l_mul entry " + std::to_string(l) +
                         " outside [1, " + std::to_string(num_layers) + "]");
      if (!seen.insert(l).second)
        throw ValueError("duplicate l_mul entry " + std::to_string(l));
    }
  }
}

template <typename T>
Tensor<T> supervised_loss(const Tensor<T>& logits,
                          std::span<const int> labels, Tape<T>* tape) {
  check_logits(logits, "supervised");
  const int B = logits.shape()[0], C = logits.shape()[1], K = C - 1;
  if (static_cast<int>(labels.size()) != B)
    throw ShapeError("label count " + std::to_string(labels.size()) +
                     " != batch size " + std::to_string(B));
  for (int y : labels)
    if (y < 0 || y >= K)
      throw ValueError("label " + std::to_string(y) + " outside [0, " +
                       std::to_string(K) + ")");

  auto sm = std::make_shared<RowSoftmax<T>>(row_softmax(logits));
  double acc = 0.0;
  const auto s = logits.data();
  for (int b = 0; b < B; ++b)
    acc += sm->lse_real[b] - s[static_cast<std::size_t>(b) * C + labels[b]];
  Tensor<T> out = Tensor<T>::scalar(static_cast<T>(acc / B));

  if (want_tape(tape, {logits.requires_grad()})) {
    out.set_requires_grad(true);
    std::vector<int> ys(labels.begin(), labels.end());
    Tensor<T> xc = logits, oc = out;
    tape->record([xc, oc, sm, ys = std::move(ys), B, C, K]() mutable {
      if (!oc.has_grad()) return;
      const T g = oc.grad()[0];
      auto gx = xc.grad();
      for (int b = 0; b < B; ++b)
        for (int j = 0; j < K; ++j)
          gx[static_cast<std::size_t>(b) * C + j] += static_cast<T>(
              static_cast<double>(g) / B *
              (sm->p_real[static_cast<std::size_t>(b) * K + j] -
               (j == ys[static_cast<std::size_t>(b)] ? 1.0 : 0.0)));
    });
  }
  return out;
}

template <typename T>
Tensor<T> unsupervised_loss(const Tensor<T>& logits_unlabeled,
                            const Tensor<T>& logits_fake, Tape<T>* tape) {
  check_logits(logits_unlabeled, "unlabeled");
  check_logits(logits_fake, "fake");
  if (logits_unlabeled.shape()[1] != logits_fake.shape()[1])
    throw ShapeError("unlabeled and fake logits disagree on class count");
  const int C = logits_unlabeled.shape()[1], K = C - 1;
  const int Bu = logits_unlabeled.shape()[0], Bf = logits_fake.shape()[0];

  auto su = std::make_shared<RowSoftmax<T>>(row_softmax(logits_unlabeled));
  auto sf = std::make_shared<RowSoftmax<T>>(row_softmax(logits_fake));
  double acc_u = 0.0, acc_f = 0.0;
  // -log(1 - p_fake) = lse_all - lse_real on unlabeled rows.
  for (int b = 0; b < Bu; ++b) acc_u += su->lse_all[b] - su->lse_real[b];
  // -log p_fake = lse_all - s_K on fake rows.
  const auto f = logits_fake.data();
  for (int b = 0; b < Bf; ++b)
    acc_f += sf->lse_all[b] - f[static_cast<std::size_t>(b) * C + K];
  Tensor<T> out = Tensor<T>::scalar(static_cast<T>(acc_u / Bu + acc_f / Bf));

  if (want_tape(tape, {logits_unlabeled.requires_grad(),
                       logits_fake.requires_grad()})) {
    out.set_requires_grad(true);
    Tensor<T> uc = logits_unlabeled, fc = logits_fake, oc = out;
    tape->record([uc, fc, oc, su, sf, Bu, Bf, C, K]() mutable {
      if (!oc.has_grad()) return;
      const double g = oc.grad()[0];
      if (uc.requires_grad()) {
        auto gx = uc.grad();
        for (int b = 0; b < Bu; ++b)
          for (int j = 0; j < C; ++j) {
            const double preal =
                j < K ? su->p_real[static_cast<std::size_t>(b) * K + j] : 0.0;
            gx[static_cast<std::size_t>(b) * C + j] += static_cast<T>(
                g / Bu *
                (su->p_all[static_cast<std::size_t>(b) * C + j] - preal));
          }
      }
      if (fc.requires_grad()) {
        auto gx = fc.grad();
        for (int b = 0; b < Bf; ++b)
          for (int j = 0; j < C; ++j)
            gx[static_cast<std::size_t>(b) * C + j] += static_cast<T>(
                g / Bf *
                (sf->p_all[static_cast<std::size_t>(b) * C + j] -
                 (j == K ? 1.0 : 0.0)));
      }
    });
  }
  return out;
}

template <typename T>
DiscriminatorLoss<T> discriminator_loss(const Tensor<T>& logits_labeled,
                                        std::span<const int> labels,
                                        const Tensor<T>& logits_unlabeled,
                                        const Tensor<T>& logits_fake,
                                        Tape<T>* tape) {
  DiscriminatorLoss<T> parts;
  parts.supervised = supervised_loss(logits_labeled, labels, tape);
  parts.unsupervised = unsupervised_loss(logits_unlabeled, logits_fake, tape);
  parts.total = combine_scalars(parts.supervised, static_cast<T>(1),
                                parts.unsupervised, static_cast<T>(1), tape);
  return parts;
}

template <typename T>
Tensor<T> adversarial_generator_loss(const Tensor<T>& logits_fake,
                                     bool saturating, Tape<T>* tape) {
  check_logits(logits_fake, "fake");
  const int B = logits_fake.shape()[0], C = logits_fake.shape()[1], K = C - 1;
  auto sm = std::make_shared<RowSoftmax<T>>(row_softmax(logits_fake));
  double acc = 0.0;
  const auto s = logits_fake.data();
  for (int b = 0; b < B; ++b)
    acc += saturating
               ? s[static_cast<std::size_t>(b) * C + K] - sm->lse_all[b]
               : sm->lse_all[b] - sm->lse_real[b];
  Tensor<T> out = Tensor<T>::scalar(static_cast<T>(acc / B));

  if (want_tape(tape, {logits_fake.requires_grad()})) {
    out.set_requires_grad(true);
    Tensor<T> fc = logits_fake, oc = out;
    tape->record([fc, oc, sm, saturating, B, C, K]() mutable {
      if (!oc.has_grad()) return;
      const double g = oc.grad()[0];
      auto gx = fc.grad();
      for (int b = 0; b < B; ++b)
        for (int j = 0; j < C; ++j) {
          const double pall = sm->p_all[static_cast<std::size_t>(b) * C + j];
          double d;
          if (saturating)
            d = (j == K ? 1.0 : 0.0) - pall;
          else
            d = pall - (j < K
                            ? sm->p_real[static_cast<std::size_t>(b) * K + j]
                            : 0.0);
          gx[static_cast<std::size_t>(b) * C + j] +=
              static_cast<T>(g / B * d);
        }
    });
  }
  return out;
}

template <typename T>
Tensor<T> feature_matching_layer(const Tensor<T>& fake_features,
                                 const Tensor<T>& real_features,
                                 Tape<T>* tape) {
  const auto& fs = fake_features.shape();
  const auto& rs = real_features.shape();
  if (fake_features.rank() < 2 || fake_features.rank() != real_features.rank())
    throw ShapeError("feature maps must share rank >= 2, got " +
                     shape_str(fs) + " vs " + shape_str(rs));
  for (std::size_t d = 1; d < fs.size(); ++d)
    if (fs[d] != rs[d])
      throw ShapeError("feature maps disagree beyond the batch axis: " +
                       shape_str(fs) + " vs " + shape_str(rs));
  const int Bf = fs[0], Br = rs[0];
  const std::int64_t F = fake_features.numel() / Bf;

  auto diff = std::make_shared<std::vector<double>>(F, 0.0);
  {
    const auto a = fake_features.data();
    const auto b = real_features.data();
    for (int i = 0; i < Bf; ++i)
      for (std::int64_t j = 0; j < F; ++j)
        (*diff)[static_cast<std::size_t>(j)] +=
            a[static_cast<std::size_t>(i) * F + j] / static_cast<double>(Bf);
    for (int i = 0; i < Br; ++i)
      for (std::int64_t j = 0; j < F; ++j)
        (*diff)[static_cast<std::size_t>(j)] -=
            b[static_cast<std::size_t>(i) * F + j] / static_cast<double>(Br);
  }
  double acc = 0.0;
  for (double d : *diff) acc += d * d;
  Tensor<T> out = Tensor<T>::scalar(static_cast<T>(acc));

  if (want_tape(tape, {fake_features.requires_grad(),
                       real_features.requires_grad()})) {
    out.set_requires_grad(true);
    Tensor<T> ac = fake_features, bc = real_features, oc = out;
    tape->record([ac, bc, oc, diff, Bf, Br, F]() mutable {
      if (!oc.has_grad()) return;
      const double g = oc.grad()[0];
      if (ac.requires_grad()) {
        auto gx = ac.grad();
        for (int i = 0; i < Bf; ++i)
          for (std::int64_t j = 0; j < F; ++j)
            gx[static_cast<std::size_t>(i) * F + j] += static_cast<T>(
                g * 2.0 * (*diff)[static_cast<std::size_t>(j)] / Bf);
      }
      if (bc.requires_grad()) {
        auto gx = bc.grad();
        for (int i = 0; i < Br; ++i)
          for (std::int64_t j = 0; j < F; ++j)
            gx[static_cast<std::size_t>(i) * F + j] += static_cast<T>(
                -g * 2.0 * (*diff)[static_cast<std::size_t>(j)] / Br);
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> joint_feature_matching(const std::vector<Tensor<T>>& fake_features,
                                 const std::vector<Tensor<T>>& real_features,
                                 std::span<const int> l_mul, Tape<T>* tape) {
  if (fake_features.size() != real_features.size())
    throw ShapeError("fake and real feature lists differ in length");
  if (l_mul.empty()) throw ValueError("l_mul must not be empty");
  const int L = static_cast<int>(fake_features.size());
  std::set<int> seen;
  for (int l : l_mul) {
    if (l < 1 || l > L)
      throw ValueError("l_mul entry " + std::to_string(l) + " outside [1, " +
                       std::to_string(L) + "]");
    if (!seen.insert(l).second)
      throw ValueError("duplicate l_mul entry " + std::to_string(l));
  }

  Tensor<T> total;
  bool first = true;
  for (int l : l_mul) {
    const auto& ff = fake_features[static_cast<std::size_t>(l - 1)];
    if (ff.rank() != 3)
      throw ShapeError("feature taps must be [B, C, L], got " +
                       shape_str(ff.shape()));
    const T norm =
        static_cast<T>(1.0 / (2.0 * ff.shape()[1] * ff.shape()[2]));
    Tensor<T> term = feature_matching_layer(
        ff, real_features[static_cast<std::size_t>(l - 1)], tape);
    if (first) {
      // Single-layer case stays an exact rescaling of the layer loss.
      total = combine_scalars(term, norm, term, static_cast<T>(0), tape);
      first = false;
    } else {
      total = combine_scalars(total, static_cast<T>(1), term, norm, tape);
    }
  }
  return total;
}

template <typename T>
Tensor<T> weighted_generator_loss(const Tensor<T>& adversarial,
                                  const Tensor<T>& feature_matching,
                                  double alpha, double beta, Tape<T>* tape) {
  if (alpha < 0.0 || beta < 0.0 || std::abs(alpha + beta - 1.0) > 1e-9)
    throw ValueError("generator loss weights must be nonnegative and sum "
                     "to 1");
  if (adversarial.numel() != 1 || feature_matching.numel() != 1)
    throw ContractError("generator loss terms must be scalars");
  if (beta == 0.0) return adversarial;
  if (alpha == 0.0) return feature_matching;
  return combine_scalars(adversarial, static_cast<T>(alpha), feature_matching,
                         static_cast<T>(beta), tape);
}

template <typename T>
std::vector<T> fake_probability(const Tensor<T>& logits) {
  check_logits(logits, "fake-probability");
  const int B = logits.shape()[0], C = logits.shape()[1];
  const RowSoftmax<T> sm = row_softmax(logits);
  std::vector<T> p(static_cast<std::size_t>(B));
  for (int b = 0; b < B; ++b)
    p[static_cast<std::size_t>(b)] =
        static_cast<T>(sm.p_all[static_cast<std::size_t>(b) * C + (C - 1)]);
  return p;
}

#define WL_INSTANTIATE_LOSSES(T)                                              \
  template Tensor<T> supervised_loss<T>(const Tensor<T>&,                     \
                                        std::span<const int>, Tape<T>*);      \
  template Tensor<T> unsupervised_loss<T>(const Tensor<T>&, const Tensor<T>&, \
                                          Tape<T>*);                          \
  template DiscriminatorLoss<T> discriminator_loss<T>(                        \
      const Tensor<T>&, std::span<const int>, const Tensor<T>&,               \
      const Tensor<T>&, Tape<T>*);                                            \
  template Tensor<T> adversarial_generator_loss<T>(const Tensor<T>&, bool,    \
                                                   Tape<T>*);                 \
  template Tensor<T> feature_matching_layer<T>(const Tensor<T>&,              \
                                               const Tensor<T>&, Tape<T>*);   \
  template Tensor<T> joint_feature_matching<T>(                               \
      const std::vector<Tensor<T>>&, const std::vector<Tensor<T>>&,           \
      std::span<const int>, Tape<T>*);                                        \
  template Tensor<T> weighted_generator_loss<T>(                              \
      const Tensor<T>&, const Tensor<T>&, double, double, Tape<T>*);          \
  template std::vector<T> fake_probability<T>(const Tensor<T>&);

WL_INSTANTIATE_LOSSES(float)
WL_INSTANTIATE_LOSSES(double)

}  // namespace wl
