#include "wl/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>

#include "wl/adam.hpp"
#include "wl/ops.hpp"
#include "wl/rng.hpp"
#include "wl/tensor.hpp"

namespace wl {

namespace {

// Stream ids for the independent rng substreams of one run.
constexpr std::uint64_t kStreamGenInit = 101;
constexpr std::uint64_t kStreamDiscInit = 102;
constexpr std::uint64_t kStreamLabeled = 103;
constexpr std::uint64_t kStreamUnlabeledD = 104;
constexpr std::uint64_t kStreamUnlabeledG = 105;
constexpr std::uint64_t kStreamNoise = 106;
constexpr std::uint64_t kStreamDropout = 107;

/// Infinite pass over a fixed index pool: each exhaustion reshuffles, so
/// batches are always full-sized even when the pool is smaller than a batch.
class IndexStream {
 public:
  IndexStream(std::vector<std::int64_t> pool, Rng rng)
      : pool_(std::move(pool)), rng_(rng) {
    rng_.shuffle(pool_);
  }

  void fill(int n, std::vector<std::int64_t>& out) {
    out.clear();
    for (int i = 0; i < n; ++i) {
      if (pos_ == pool_.size()) {
        rng_.shuffle(pool_);
        pos_ = 0;
      }
      out.push_back(pool_[pos_++]);
    }
  }

 private:
  std::vector<std::int64_t> pool_;
  Rng rng_;
  std::size_t pos_ = 0;
};

template <typename T>
Tensor<T> gather_signals(const Dataset& ds,
                         const std::vector<std::int64_t>& idx) {
  const int B = static_cast<int>(idx.size());
  Tensor<T> x = Tensor<T>::zeros({B, 1, ds.signal_length});
  auto out = x.data();
  for (int b = 0; b < B; ++b) {
    const float* src = ds.signal(idx[static_cast<std::size_t>(b)]);
    for (int j = 0; j < ds.signal_length; ++j)
      out[static_cast<std::size_t>(b) * ds.signal_length + j] =
          static_cast<T>(src[j]);
  }
  return x;
}

std::vector<int> gather_labels(const Dataset& ds,
                               const std::vector<std::int64_t>& idx) {
  std::vector<int> y;
  y.reserve(idx.size());
  for (auto i : idx) y.push_back(ds.labels[static_cast<std::size_t>(i)]);
  return y;
}

struct EpochAccumulator {
  double d_total = 0, supervised = 0, unsupervised = 0;
  double g_total = 0, adv = 0, fm_joint = 0;
  int iterations = 0;

  void flush(TrainReport& r) {
    const double n = std::max(iterations, 1);
    r.d_total.push_back(d_total / n);
    r.supervised.push_back(supervised / n);
    r.unsupervised.push_back(unsupervised / n);
    r.g_total.push_back(g_total / n);
    r.adv.push_back(adv / n);
    r.fm_joint.push_back(fm_joint / n);
    *this = EpochAccumulator{};
  }
};

/// Appends this epoch's test accuracy: a fresh evaluation on eval epochs
/// (and always on the last), otherwise the last known value (0 before the
/// first evaluation).
template <typename T>
void push_test_acc(TrainReport& report, const DiscriminatorParams<T>& d,
                   const Dataset& ds, const TrainConfig& cfg, int epoch) {
  const bool do_eval =
      (epoch + 1) % cfg.eval_every == 0 || epoch == cfg.epochs - 1;
  if (do_eval)
    report.test_acc.push_back(evaluate(d, ds));
  else
    report.test_acc.push_back(report.test_acc.empty() ? 0.0
                                                      : report.test_acc.back());
}

void finalize_report(TrainReport& report, const TrainConfig& cfg,
                     std::chrono::steady_clock::time_point start) {
  report.steady_state_acc =
      steady_state_accuracy(report.test_acc, cfg.steady_window_frac);
  report.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
}

}  // namespace

void TrainConfig::validate() const {
  if (epochs < 1) throw ValueError("epochs must be >= 1");
  if (batch_size < 2) throw ValueError("batch_size must be >= 2");
  if (lr <= 0.0) throw ValueError("learning rate must be positive");
  if (!(steady_window_frac > 0.0 && steady_window_frac <= 1.0))
    throw ValueError("steady_window_frac must lie in (0, 1]");
  if (eval_every < 1) throw ValueError("eval_every must be >= 1");
  if (latent_dim < 1) throw ValueError("latent_dim must be >= 1");
  loss.validate(kDiscLayers);
}

double steady_state_accuracy(const std::vector<double>& test_acc,
                             double window_frac) {
  if (test_acc.empty()) throw ContractError("empty accuracy trace");
  if (!(window_frac > 0.0 && window_frac <= 1.0))
    throw ValueError("window fraction must lie in (0, 1]");
  const std::size_t n = test_acc.size();
  const std::size_t w = static_cast<std::size_t>(
      std::ceil(window_frac * static_cast<double>(n)));
  double acc = 0.0;
  for (std::size_t i = n - w; i < n; ++i) acc += test_acc[i];
  return acc / static_cast<double>(w);
}

template <typename T>
double evaluate(const DiscriminatorParams<T>& d, const Dataset& dataset) {
  const auto test = dataset.indices_test();
  if (test.empty()) throw ContractError("dataset has no test samples");
  std::int64_t hits = 0;
  const int chunk = 64;
  std::vector<std::int64_t> batch;
  for (std::size_t at = 0; at < test.size(); at += chunk) {
    batch.assign(test.begin() + static_cast<std::ptrdiff_t>(at),
                 test.begin() + static_cast<std::ptrdiff_t>(
                                    std::min(at + chunk, test.size())));
    const auto x = gather_signals<T>(dataset, batch);
    const auto pred = classify(d, x);
    for (std::size_t b = 0; b < batch.size(); ++b)
      if (pred[b] == dataset.labels[static_cast<std::size_t>(batch[b])])
        ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(test.size());
}

template <typename T>
TrainOutput<T> train_wlssgan(const Dataset& dataset, const TrainConfig& config,
                             EpochCallback<T> on_epoch) {
  config.validate();
  const auto labeled = dataset.indices_labeled_train();
  const auto unlabeled = dataset.indices_unlabeled_train();
  if (labeled.empty()) throw ContractError("dataset has no labeled train samples");
  if (unlabeled.empty())
    throw ContractError("dataset has no unlabeled train samples");
  const auto start = std::chrono::steady_clock::now();

  TrainOutput<T> out;
  out.generator = build_generator<T>(
      config.latent_dim, Rng::derive(config.seed, kStreamGenInit).next_u64());
  out.discriminator = build_discriminator<T>(
      kNumClasses, Rng::derive(config.seed, kStreamDiscInit).next_u64());
  auto& G = out.generator;
  auto& D = out.discriminator;

  typename Adam<T>::Config adam_cfg;
  adam_cfg.lr = config.lr;
  adam_cfg.beta1 = config.beta1;
  adam_cfg.beta2 = config.beta2;
  Adam<T> adam_g(G.trainable(), adam_cfg);
  Adam<T> adam_d(D.trainable(), adam_cfg);

  IndexStream labeled_stream(labeled, Rng::derive(config.seed, kStreamLabeled));
  IndexStream unlab_d_stream(unlabeled,
                             Rng::derive(config.seed, kStreamUnlabeledD));
  IndexStream unlab_g_stream(unlabeled,
                             Rng::derive(config.seed, kStreamUnlabeledG));
  Rng noise_rng = Rng::derive(config.seed, kStreamNoise);
  Rng dropout_rng = Rng::derive(config.seed, kStreamDropout);

  const int iters_per_epoch = static_cast<int>(
      (unlabeled.size() + static_cast<std::size_t>(config.batch_size) - 1) /
      static_cast<std::size_t>(config.batch_size));
  const bool use_adv = config.loss.alpha > 0.0;
  const bool use_fm = config.loss.beta > 0.0;

  TrainReport& report = out.report;
  report.seed = config.seed;
  report.n_lab = static_cast<int>(labeled.size());
  EpochAccumulator acc;
  std::vector<std::int64_t> idx;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    for (int iter = 0; iter < iters_per_epoch; ++iter) {
      // ---- Discriminator step ----
      labeled_stream.fill(config.batch_size, idx);
      const auto x_lab = gather_signals<T>(dataset, idx);
      const auto y_lab = gather_labels(dataset, idx);
      const auto z1 =
          sample_latent<T>(config.batch_size, config.latent_dim, noise_rng);
      unlab_d_stream.fill(config.batch_size, idx);
      const auto x_unlab = gather_signals<T>(dataset, idx);

      // The generator acts as a fixed sampler here: no tape, so no
      // gradients reach it from the discriminator loss.
      const auto x_fake = generator_forward(G, z1, Mode::Train);

      {
        Tape<T> tape;
        adam_d.zero_grad();
        const auto out_lab =
            discriminator_forward(D, x_lab, Mode::Train, dropout_rng, &tape);
        const auto out_unlab =
            discriminator_forward(D, x_unlab, Mode::Train, dropout_rng, &tape);
        const auto out_fake =
            discriminator_forward(D, x_fake, Mode::Train, dropout_rng, &tape);
        auto d_loss = discriminator_loss<T>(out_lab.logits, y_lab,
                                            out_unlab.logits, out_fake.logits,
                                            &tape);
        tape.backward(d_loss.total);
        adam_d.step();
        acc.d_total += static_cast<double>(d_loss.total.item());
        acc.supervised += static_cast<double>(d_loss.supervised.item());
        acc.unsupervised += static_cast<double>(d_loss.unsupervised.item());
      }

      // ---- Generator step (fresh latent and unlabeled batches) ----
      const auto z2 =
          sample_latent<T>(config.batch_size, config.latent_dim, noise_rng);
      unlab_g_stream.fill(config.batch_size, idx);

      {
        Tape<T> tape;
        adam_g.zero_grad();
        const auto x_fake2 = generator_forward(G, z2, Mode::Train, &tape);
        // D serves as a frozen feature extractor/critic: batch statistics,
        // running estimates untouched.
        const auto out_fake = discriminator_forward(D, x_fake2, Mode::Train,
                                                    dropout_rng, &tape, false);
        Tensor<T> adv_term, fm_term;
        if (use_adv)
          adv_term = adversarial_generator_loss(
              out_fake.logits, config.loss.saturating, &tape);
        if (use_fm) {
          const auto x_unlab2 = gather_signals<T>(dataset, idx);
          const auto out_unlab2 = discriminator_forward<T>(
              D, x_unlab2, Mode::Train, dropout_rng, nullptr, false);
          fm_term =
              joint_feature_matching(out_fake.features(), out_unlab2.features(),
                                     config.loss.l_mul, &tape);
        }
        Tensor<T> g_loss;
        if (!use_fm)
          g_loss = adv_term;
        else if (!use_adv)
          g_loss = fm_term;
        else
          g_loss = weighted_generator_loss(adv_term, fm_term,
                                           config.loss.alpha, config.loss.beta,
                                           &tape);
        tape.backward(g_loss);
        adam_g.step();
        acc.g_total += static_cast<double>(g_loss.item());
        if (use_adv) acc.adv += static_cast<double>(adv_term.item());
        if (use_fm) acc.fm_joint += static_cast<double>(fm_term.item());
      }
      ++acc.iterations;
    }
    acc.flush(report);
    push_test_acc(report, D, dataset, config, epoch);
    if (on_epoch) on_epoch(epoch, G, D, report);
  }

  finalize_report(report, config, start);
  return out;
}

template <typename T>
TrainOutput<T> train_supervised(const Dataset& dataset,
                                const TrainConfig& config,
                                EpochCallback<T> on_epoch) {
  config.validate();
  const auto labeled = dataset.indices_labeled_train();
  if (labeled.empty()) throw ContractError("dataset has no labeled train samples");
  const auto start = std::chrono::steady_clock::now();

  TrainOutput<T> out;
  out.discriminator = build_discriminator<T>(
      kNumClasses, Rng::derive(config.seed, kStreamDiscInit).next_u64());
  auto& D = out.discriminator;

  typename Adam<T>::Config adam_cfg;
  adam_cfg.lr = config.lr;
  adam_cfg.beta1 = config.beta1;
  adam_cfg.beta2 = config.beta2;
  Adam<T> adam_d(D.trainable(), adam_cfg);

  IndexStream labeled_stream(labeled, Rng::derive(config.seed, kStreamLabeled));
  Rng dropout_rng = Rng::derive(config.seed, kStreamDropout);

  const int iters_per_epoch = static_cast<int>(
      (labeled.size() + static_cast<std::size_t>(config.batch_size) - 1) /
      static_cast<std::size_t>(config.batch_size));

  TrainReport& report = out.report;
  report.seed = config.seed;
  report.n_lab = static_cast<int>(labeled.size());
  EpochAccumulator acc;
  std::vector<std::int64_t> idx;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    for (int iter = 0; iter < iters_per_epoch; ++iter) {
      labeled_stream.fill(config.batch_size, idx);
      const auto x = gather_signals<T>(dataset, idx);
      const auto y = gather_labels(dataset, idx);
      Tape<T> tape;
      adam_d.zero_grad();
      const auto fwd =
          discriminator_forward(D, x, Mode::Train, dropout_rng, &tape);
      auto loss = supervised_loss<T>(fwd.logits, y, &tape);
      tape.backward(loss);
      adam_d.step();
      acc.d_total += static_cast<double>(loss.item());
      acc.supervised += static_cast<double>(loss.item());
      ++acc.iterations;
    }
    acc.flush(report);
    push_test_acc(report, D, dataset, config, epoch);
    if (on_epoch) on_epoch(epoch, out.generator, D, report);
  }

  finalize_report(report, config, start);
  return out;
}

template <typename T>
GeneratorParams<T> initial_generator(const TrainConfig& config) {
  config.validate();
  return build_generator<T>(
      config.latent_dim, Rng::derive(config.seed, kStreamGenInit).next_u64());
}

std::string epoch_csv_header() {
  return "epoch,d_total,supervised,unsupervised,g_total,adv,fm_joint,test_acc";
}

std::string epoch_csv_row(const TrainReport& report, int epoch) {
  if (epoch < 0 || epoch >= static_cast<int>(report.d_total.size()))
    throw ValueError("epoch outside the report traces");
  const auto e = static_cast<std::size_t>(epoch);
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "%d,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g", epoch + 1,
                report.d_total[e], report.supervised[e],
                report.unsupervised[e], report.g_total[e], report.adv[e],
                report.fm_joint[e], report.test_acc[e]);
  return std::string(buf);
}

void write_epoch_csv(const std::string& path, const TrainReport& report) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw IoError("cannot open " + path + " for writing");
  std::string text = epoch_csv_header();
  text.push_back('\n');
  for (std::size_t e = 0; e < report.d_total.size(); ++e) {
    text += epoch_csv_row(report, static_cast<int>(e));
    text.push_back('\n');
  }
  const bool ok = std::fwrite(text.data(), 1, text.size(), f) == text.size();
  const bool closed = std::fclose(f) == 0;
  if (!ok || !closed) throw IoError("failed to write " + path);
}

#define WL_INSTANTIATE_TRAINER(T)                                           \
  template double evaluate<T>(const DiscriminatorParams<T>&,                \
                              const Dataset&);                              \
  template TrainOutput<T> train_wlssgan<T>(const Dataset&,                  \
                                           const TrainConfig&,              \
                                           EpochCallback<T>);               \
  template TrainOutput<T> train_supervised<T>(const Dataset&,               \
                                              const TrainConfig&,           \
                                              EpochCallback<T>);            \
  template GeneratorParams<T> initial_generator<T>(const TrainConfig&);

WL_INSTANTIATE_TRAINER(float)
WL_INSTANTIATE_TRAINER(double)

}  // namespace wl
