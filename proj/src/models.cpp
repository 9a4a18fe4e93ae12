#include "wl/models.hpp"

#include <algorithm>

namespace wl {

namespace {

// Output channels per generator layer (input channels follow the previous
// layer; layer 1 consumes the latent vector).
constexpr int kGenChannels[kGenLayers] = {512, 256, 128, 64, 32, 16, 8, 1};
constexpr int kDiscChannels[kDiscLayers] = {8, 16, 32, 64, 128, 256, 512};
constexpr int kDiscFlat = 512 * 4;

template <typename T>
BatchNormParams<T> make_bn(int channels, std::uint64_t seed,
                           std::uint64_t* stream) {
  BatchNormParams<T> bn;
  Rng rng = Rng::derive(seed, (*stream)++);
  bn.gamma = Tensor<T>::randn({channels}, rng, T(1), T(0.02), true);
  bn.beta = Tensor<T>::zeros({channels}, true);
  bn.running_mean = Tensor<T>::zeros({channels});
  bn.running_var = Tensor<T>::full({channels}, T(1));
  return bn;
}

template <typename T>
void push_trainable(std::vector<Tensor<T>>& out,
                    const std::vector<Tensor<T>>& w,
                    const std::vector<Tensor<T>>& b,
                    const std::vector<BatchNormParams<T>>& bn) {
  for (const auto& t : w) out.push_back(t);
  for (const auto& t : b) out.push_back(t);
  for (const auto& p : bn) {
    out.push_back(p.gamma);
    out.push_back(p.beta);
  }
}

template <typename T>
void push_named(std::vector<std::pair<std::string, Tensor<T>>>& out,
                const std::string& prefix, const std::vector<Tensor<T>>& w,
                const std::vector<Tensor<T>>& b,
                const std::vector<BatchNormParams<T>>& bn,
                const char* layer_kind) {
  for (std::size_t l = 0; l < w.size(); ++l) {
    const std::string base =
        prefix + "." + layer_kind + std::to_string(l + 1);
    out.emplace_back(base + ".w", w[l]);
    out.emplace_back(base + ".b", b[l]);
  }
  for (std::size_t l = 0; l < bn.size(); ++l) {
    const std::string base = prefix + ".bn" + std::to_string(l + 1);
    out.emplace_back(base + ".gamma", bn[l].gamma);
    out.emplace_back(base + ".beta", bn[l].beta);
    out.emplace_back(base + ".running_mean", bn[l].running_mean);
    out.emplace_back(base + ".running_var", bn[l].running_var);
  }
}

template <typename T>
std::int64_t count_scalars(const std::vector<Tensor<T>>& ts) {
  std::int64_t n = 0;
  for (const auto& t : ts) n += t.numel();
  return n;
}

}  // namespace

template <typename T>
std::vector<Tensor<T>> GeneratorParams<T>::trainable() const {
  std::vector<Tensor<T>> out;
  push_trainable(out, w, b, bn);
  return out;
}

template <typename T>
std::vector<std::pair<std::string, Tensor<T>>>
GeneratorParams<T>::named_tensors() const {
  std::vector<std::pair<std::string, Tensor<T>>> out;
  push_named(out, "g", w, b, bn, "deconv");
  return out;
}

template <typename T>
std::int64_t GeneratorParams<T>::parameter_count() const {
  return count_scalars(trainable());
}

template <typename T>
std::vector<Tensor<T>> DiscriminatorParams<T>::trainable() const {
  std::vector<Tensor<T>> out;
  push_trainable(out, w, b, bn);
  out.push_back(fc_w);
  out.push_back(fc_b);
  return out;
}

template <typename T>
std::vector<std::pair<std::string, Tensor<T>>>
DiscriminatorParams<T>::named_tensors() const {
  std::vector<std::pair<std::string, Tensor<T>>> out;
  push_named(out, "d", w, b, bn, "conv");
  out.emplace_back("d.fc.w", fc_w);
  out.emplace_back("d.fc.b", fc_b);
  return out;
}

template <typename T>
std::int64_t DiscriminatorParams<T>::parameter_count() const {
  return count_scalars(trainable());
}

template <typename T>
GeneratorParams<T> build_generator(int latent_dim, std::uint64_t seed) {
  if (latent_dim < 1) throw ValueError("latent_dim must be >= 1");
  GeneratorParams<T> g;
  g.latent_dim = latent_dim;
  std::uint64_t stream = 0;
  int cin = latent_dim;
  for (int l = 0; l < kGenLayers; ++l) {
    const int cout = kGenChannels[l];
    Rng rng = Rng::derive(seed, stream++);
    g.w.push_back(
        Tensor<T>::randn({cin, cout, 4}, rng, T(0), T(0.02), true));
    g.b.push_back(Tensor<T>::zeros({cout}, true));
    if (l < kGenLayers - 1) g.bn.push_back(make_bn<T>(cout, seed, &stream));
    cin = cout;
  }
  return g;
}

template <typename T>
DiscriminatorParams<T> build_discriminator(int num_classes,
                                           std::uint64_t seed) {
  if (num_classes < 2) throw ValueError("num_classes must be >= 2");
  DiscriminatorParams<T> d;
  d.num_classes = num_classes;
  std::uint64_t stream = 0;
  int cin = 1;
  for (int l = 0; l < kDiscLayers; ++l) {
    const int cout = kDiscChannels[l];
    Rng rng = Rng::derive(seed, stream++);
    d.w.push_back(
        Tensor<T>::randn({cout, cin, 4}, rng, T(0), T(0.02), true));
    d.b.push_back(Tensor<T>::zeros({cout}, true));
    d.bn.push_back(make_bn<T>(cout, seed, &stream));
    cin = cout;
  }
  Rng rng = Rng::derive(seed, stream++);
  d.fc_w = Tensor<T>::randn({num_classes + 1, kDiscFlat}, rng, T(0), T(0.02),
                            true);
  d.fc_b = Tensor<T>::zeros({num_classes + 1}, true);
  return d;
}

template <typename T>
Tensor<T> sample_latent(int batch, int latent_dim, Rng& rng) {
  if (batch < 1 || latent_dim < 1)
    throw ValueError("latent batch and dimension must be >= 1");
  return Tensor<T>::randn({batch, latent_dim, 1}, rng, T(0), T(1));
}

template <typename T>
Tensor<T> generator_forward(const GeneratorParams<T>& g, const Tensor<T>& z,
                            Mode mode, Tape<T>* tape, bool update_running) {
  if (z.rank() != 3 || z.shape()[1] != g.latent_dim || z.shape()[2] != 1)
    throw ShapeError("latent must be [B, " + std::to_string(g.latent_dim) +
                     ", 1], got " + shape_str(z.shape()));
  if (mode == Mode::Train && z.shape()[0] < 2)
    throw ContractError("train-mode forward needs batch size >= 2");
  GeneratorParams<T> gp = g;  // shallow: shares parameter storage
  BatchNormOpts bn_opts;
  bn_opts.update_running = update_running;
  Tensor<T> x = z;
  for (int l = 0; l < kGenLayers; ++l) {
    const int stride = l == 0 ? 1 : 2;
    const int padding = l == 0 ? 0 : 1;
    x = deconv1d(x, gp.w[static_cast<std::size_t>(l)],
                 gp.b[static_cast<std::size_t>(l)], stride, padding, tape);
    if (l < kGenLayers - 1) {
      auto& bn = gp.bn[static_cast<std::size_t>(l)];
      x = batchnorm1d(x, bn.gamma, bn.beta, bn.running_mean, bn.running_var,
                      mode, bn_opts, tape);
      x = relu(x, tape);
    } else {
      x = tanh(x, tape);
    }
  }
  return x;
}

template <typename T>
DiscriminatorOutput<T> discriminator_forward(const DiscriminatorParams<T>& d,
                                             const Tensor<T>& x, Mode mode,
                                             Rng& rng, Tape<T>* tape,
                                             bool update_running) {
  if (x.rank() != 3 || x.shape()[1] != 1 || x.shape()[2] != 512)
    throw ShapeError("discriminator input must be [B, 1, 512], got " +
                     shape_str(x.shape()));
  if (mode == Mode::Train && x.shape()[0] < 2)
    throw ContractError("train-mode forward needs batch size >= 2");
  DiscriminatorParams<T> dp = d;  // shallow
  BatchNormOpts bn_opts;
  bn_opts.update_running = update_running;
  DiscriminatorOutput<T> out;
  Tensor<T> h = x;
  for (int l = 0; l < kDiscLayers; ++l) {
    h = conv1d(h, dp.w[static_cast<std::size_t>(l)],
               dp.b[static_cast<std::size_t>(l)], 2, 1, tape);
    auto& bn = dp.bn[static_cast<std::size_t>(l)];
    h = batchnorm1d(h, bn.gamma, bn.beta, bn.running_mean, bn.running_var,
                    mode, bn_opts, tape);
    h = leaky_relu(h, kLeakySlope, tape);
    out.taps.push_back({l + 1, h});
    h = dropout(h, kDropoutP, mode, rng, tape);
  }
  out.logits = fully_connected(flatten(h, tape), dp.fc_w, dp.fc_b, tape);
  return out;
}

template <typename T>
int argmax_class(std::span<const T> logit_row, int num_classes) {
  if (static_cast<int>(logit_row.size()) < num_classes || num_classes < 1)
    throw ShapeError("logit row shorter than the class count");
  int best = 0;
  for (int j = 1; j < num_classes; ++j)
    if (logit_row[static_cast<std::size_t>(j)] >
        logit_row[static_cast<std::size_t>(best)])
      best = j;
  return best;
}

template <typename T>
std::vector<int> classify(const DiscriminatorParams<T>& d,
                          const Tensor<T>& x) {
  Rng unused(0);
  const auto out = discriminator_forward(d, x, Mode::Eval, unused);
  const int B = out.logits.shape()[0];
  const int C = out.logits.shape()[1];
  const auto s = out.logits.data();
  std::vector<int> cls(static_cast<std::size_t>(B));
  for (int bi = 0; bi < B; ++bi)
    cls[static_cast<std::size_t>(bi)] = argmax_class<T>(
        s.subspan(static_cast<std::size_t>(bi) * C, static_cast<std::size_t>(C)),
        d.num_classes);
  return cls;
}

#define WL_INSTANTIATE_MODELS(T)                                             \
  template struct GeneratorParams<T>;                                        \
  template struct DiscriminatorParams<T>;                                    \
  template GeneratorParams<T> build_generator<T>(int, std::uint64_t);        \
  template DiscriminatorParams<T> build_discriminator<T>(int,                \
                                                         std::uint64_t);    \
  template Tensor<T> sample_latent<T>(int, int, Rng&);                       \
  template Tensor<T> generator_forward<T>(const GeneratorParams<T>&,         \
                                          const Tensor<T>&, Mode, Tape<T>*,  \
                                          bool);                             \
  template DiscriminatorOutput<T> discriminator_forward<T>(                  \
      const DiscriminatorParams<T>&, const Tensor<T>&, Mode, Rng&, Tape<T>*, \
      bool);                                                                 \
  template int argmax_class<T>(std::span<const T>, int);                     \
  template std::vector<int> classify<T>(const DiscriminatorParams<T>&,       \
                                        const Tensor<T>&);

WL_INSTANTIATE_MODELS(float)
WL_INSTANTIATE_MODELS(double)

}  // namespace wl
