#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "wl/clutter.hpp"
#include "wl/common.hpp"
#include "wl/losses.hpp"
#include "wl/models.hpp"

namespace wl {

enum class Precision { F32, F64 };

/// Hyperparameters of one training run (semi-supervised or fully
/// supervised baseline).
struct TrainConfig {
  int epochs = 1000;
  int batch_size = 64;
  double lr = 1e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  LossConfig loss;
  int n_lab = 0;  ///< labeled budget used for the split; informational here
  std::uint64_t seed = 0;
  double steady_window_frac = 0.2;
  int eval_every = 1;  ///< test-set evaluation cadence in epochs
  Precision precision = Precision::F32;
  int latent_dim = kLatentDim;

  void validate() const;
};

/// Per-epoch traces (all the same length, one entry per epoch; loss entries
/// are means over the epoch's iterations) plus summary fields. Between
/// evaluation epochs the test-accuracy trace carries the last measured value
/// forward.
struct TrainReport {
  std::vector<double> d_total, supervised, unsupervised;
  std::vector<double> g_total, adv, fm_joint;
  std::vector<double> test_acc;
  double steady_state_acc = 0.0;
  double wall_clock_seconds = 0.0;
  std::uint64_t seed = 0;
  int n_lab = 0;  ///< labeled train samples actually present in the dataset
};

template <typename T>
struct TrainOutput {
  GeneratorParams<T> generator;  // default-constructed in supervised mode
  DiscriminatorParams<T> discriminator;
  TrainReport report;
};

/// Invoked after every epoch with the partial report (traces filled up to
/// and including `epoch`); lets callers stream CSV rows or write interval
/// checkpoints.
template <typename T>
using EpochCallback = std::function<void(
    int epoch, const GeneratorParams<T>&, const DiscriminatorParams<T>&,
    const TrainReport&)>;

/// Alternating GAN training. Per iteration: sample a labeled batch, a
/// latent batch, and an unlabeled batch, take one Adam step on the
/// discriminator by its loss; then sample fresh latent/unlabeled batches and
/// take one Adam step on the generator by the weighted loss. One epoch is
/// ceil(|unlabeled|/batch_size) iterations; pools cycle with reshuffling.
/// Requires >= 1 labeled and >= 1 unlabeled train sample.
template <typename T>
TrainOutput<T> train_wlssgan(const Dataset& dataset, const TrainConfig& config,
                             EpochCallback<T> on_epoch = nullptr);

/// Supervised baseline: only the discriminator/classifier is trained, by
/// the supervised loss over labeled train samples; one epoch is
/// ceil(|labeled|/batch_size) iterations. The generator is never built.
template <typename T>
TrainOutput<T> train_supervised(const Dataset& dataset,
                                const TrainConfig& config,
                                EpochCallback<T> on_epoch = nullptr);

/// Fraction of test samples whose classify() output matches the label.
template <typename T>
double evaluate(const DiscriminatorParams<T>& d, const Dataset& dataset);

/// Mean of the final ceil(window_frac * n) entries of a test-accuracy
/// trace; window_frac must lie in (0, 1].
double steady_state_accuracy(const std::vector<double>& test_acc,
                             double window_frac);

/// The exact generator train_wlssgan would start from under this config
/// (same derived init stream); lets callers compare trained weights against
/// their true starting point.
template <typename T>
GeneratorParams<T> initial_generator(const TrainConfig& config);

/// Epoch-trace CSV: header plus one row per epoch. Numeric formatting is
/// deterministic, so identical reports serialize to identical bytes.
std::string epoch_csv_header();
std::string epoch_csv_row(const TrainReport& report, int epoch);
void write_epoch_csv(const std::string& path, const TrainReport& report);

}  // namespace wl
