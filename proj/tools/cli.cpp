// wlssgan: dataset generation, training, sweeps, synthesis, baselines, and
// evaluation for the semi-supervised sea-land clutter classifier.
//
// Every command writes its artifacts under --out and is byte-deterministic
// for a fixed configuration and seed. Options can also come from a flat
// key=value file via --config (keys are the long option names without
// dashes); command-line flags override file values, and unknown keys are
// rejected.
#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"

#include "wl/baselines.hpp"
#include "wl/checkpoint.hpp"
#include "wl/clutter.hpp"
#include "wl/common.hpp"
#include "wl/eval.hpp"
#include "wl/losses.hpp"
#include "wl/models.hpp"
#include "wl/plot.hpp"
#include "wl/rng.hpp"
#include "wl/tensor.hpp"
#include "wl/trainer.hpp"

namespace fs = std::filesystem;
using namespace wl;

namespace {

// ---------------------------------------------------------------------------
// Shared option bundles.

struct CommonOpts {
  std::uint64_t seed = 0;
  std::string out = "out";
  std::string precision = "f32";
  std::string config;
};

// Applies a flat key=value file to every option of the subcommand the user
// did not pass on the command line, so flags take precedence over file
// values. Keys are the long option names without the leading dashes;
// unknown keys are rejected. ('#' starts a comment.)
void apply_config(CLI::App* sub, const std::string& path) {
  if (path.empty()) return;
  if (!fs::exists(path)) throw IoError("config file not found: " + path);
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config file " + path);
  auto trim = [](std::string s) {
    const char* ws = " \t\r\n";
    const auto a = s.find_first_not_of(ws);
    if (a == std::string::npos) return std::string();
    const auto b = s.find_last_not_of(ws);
    return s.substr(a, b - a + 1);
  };
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw FormatError(path + ":" + std::to_string(lineno) +
                        ": expected key=value");
    const std::string key = trim(line.substr(0, eq));
    std::string val = trim(line.substr(eq + 1));
    if (val.size() >= 2 && val.front() == '"' && val.back() == '"')
      val = val.substr(1, val.size() - 2);
    if (key == "config")
      throw ValueError(path + ":" + std::to_string(lineno) +
                       ": config files cannot nest");
    CLI::Option* opt = sub->get_option_no_throw("--" + key);
    if (!opt)
      throw ValueError(path + ":" + std::to_string(lineno) +
                       ": unknown config key '" + key + "'");
    if (opt->count() > 0) continue;  // command-line flag wins
    opt->add_result(val);
    opt->run_callback();
  }
}

void require_value(const std::string& value, const char* flag) {
  if (value.empty())
    throw ValueError(std::string(flag) +
                     " is required (as a flag or config key)");
}

struct TrainOpts {
  std::string data;
  std::string mode = "wlssgan";
  double alpha = 0.7;
  double beta = 0.3;
  std::string lmul = "1,2,3,4,5,6";
  int nlab = 0;
  int epochs = 1000;
  int batch_size = 64;
  double lr = 1e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  int eval_every = 1;
  double steady_frac = 0.2;
  int latent_dim = kLatentDim;
  std::uint64_t split_seed = 0;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--seed", o.seed, "Base RNG seed");
  cmd->add_option("--out", o.out, "Output directory");
  cmd->add_option("--precision", o.precision, "Numeric precision")
      ->check(CLI::IsMember({"f32", "f64"}));
  cmd->add_option("--config", o.config,
                  "Flat key=value configuration file (flags override it)");
}

void add_train(CLI::App* cmd, TrainOpts& o) {
  cmd->add_option("--data", o.data, "Dataset file");
  cmd->add_option("--mode", o.mode, "Training mode")
      ->check(CLI::IsMember({"wlssgan", "supervised"}));
  cmd->add_option("--alpha", o.alpha, "Adversarial weight");
  cmd->add_option("--beta", o.beta, "Feature-matching weight");
  cmd->add_option("--lmul", o.lmul, "Comma list of feature layers");
  cmd->add_option("--nlab", o.nlab,
                  "Labeled budget (0 keeps the dataset's labels)");
  cmd->add_option("--epochs", o.epochs, "Training epochs");
  cmd->add_option("--batch-size", o.batch_size, "Batch size");
  cmd->add_option("--lr", o.lr, "Adam learning rate");
  cmd->add_option("--beta1", o.beta1, "Adam beta1");
  cmd->add_option("--beta2", o.beta2, "Adam beta2");
  cmd->add_option("--eval-every", o.eval_every, "Test evaluation cadence");
  cmd->add_option("--steady-frac", o.steady_frac,
                  "Trailing fraction of epochs averaged as steady state");
  cmd->add_option("--latent-dim", o.latent_dim, "Generator latent dimension");
  cmd->add_option("--split-seed", o.split_seed,
                  "Seed of the labeled/unlabeled split");
}

std::vector<int> parse_lmul(const std::string& csv) {
  std::vector<int> out;
  std::string cur;
  for (char c : csv + ",") {
    if (c == ',') {
      if (!cur.empty()) {
        try {
          out.push_back(std::stoi(cur));
        } catch (const std::exception&) {
          throw ValueError("invalid --lmul entry '" + cur + "'");
        }
        cur.clear();
      }
    } else if (!std::isspace(static_cast<unsigned char>(c))) {
      cur += c;
    }
  }
  return out;
}

TrainConfig to_config(const TrainOpts& t, const CommonOpts& c) {
  TrainConfig cfg;
  cfg.epochs = t.epochs;
  cfg.batch_size = t.batch_size;
  cfg.lr = t.lr;
  cfg.beta1 = t.beta1;
  cfg.beta2 = t.beta2;
  cfg.loss.alpha = t.alpha;
  cfg.loss.beta = t.beta;
  cfg.loss.l_mul = parse_lmul(t.lmul);
  cfg.n_lab = t.nlab;
  cfg.seed = c.seed;
  cfg.steady_window_frac = t.steady_frac;
  cfg.eval_every = t.eval_every;
  cfg.precision = c.precision == "f64" ? Precision::F64 : Precision::F32;
  cfg.latent_dim = t.latent_dim;
  return cfg;
}

Dataset load_dataset(const std::string& path) {
  if (!fs::exists(path))
    throw IoError("dataset file not found: " + path);
  return read_dataset(path);
}

void ensure_out(const std::string& dir) { fs::create_directories(dir); }

std::string out_path(const CommonOpts& c, const std::string& name) {
  return (fs::path(c.out) / name).string();
}

void write_text(const std::string& path, const std::string& text) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw IoError("cannot open " + path + " for writing");
  const std::size_t n = std::fwrite(text.data(), 1, text.size(), f);
  const bool ok = n == text.size() && std::fclose(f) == 0;
  if (!ok) throw IoError("failed to write " + path);
}

std::string csv_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// gen-data

struct GenDataOpts {
  int per_class = 1000;
  double train_frac = 0.7;
  SpectrumParams params;
};

int cmd_gen_data(const GenDataOpts& g, const CommonOpts& c) {
  Dataset ds = make_dataset(g.per_class, g.train_frac, g.params, c.seed);
  ensure_out(c.out);
  const std::string path = out_path(c, "dataset.slc");
  write_dataset(ds, path);
  std::printf("wrote %lld samples (%d per class) to %s\n",
              static_cast<long long>(ds.count()), g.per_class, path.c_str());
  return 0;
}

// ---------------------------------------------------------------------------
// train

template <typename T>
int run_train(Dataset ds, TrainConfig cfg, const TrainOpts& t,
              const CommonOpts& c) {
  const bool gan = t.mode == "wlssgan";
  TrainOutput<T> out =
      gan ? train_wlssgan<T>(ds, cfg) : train_supervised<T>(ds, cfg);

  write_epoch_csv(out_path(c, "epochs.csv"), out.report);

  auto named = out.discriminator.named_tensors();
  if (gan) {
    auto gn = out.generator.named_tensors();
    named.insert(named.end(), gn.begin(), gn.end());
  }
  save_checkpoint<T>(out_path(c, "final.ckpt"), named);

  const auto& r = out.report;
  std::vector<double> epochs_x(r.test_acc.size());
  for (std::size_t i = 0; i < epochs_x.size(); ++i)
    epochs_x[i] = static_cast<double>(i + 1);
  plot_curves("Discriminator loss", "epoch", "loss",
              {{"total", epochs_x, r.d_total},
               {"supervised", epochs_x, r.supervised},
               {"unsupervised", epochs_x, r.unsupervised}},
              out_path(c, "loss_d.svg"));
  plot_curves("Generator loss", "epoch", "loss",
              {{"total", epochs_x, r.g_total},
               {"adversarial", epochs_x, r.adv},
               {"feature matching", epochs_x, r.fm_joint}},
              out_path(c, "loss_g.svg"));
  plot_curves("Test accuracy", "epoch", "accuracy",
              {{"test accuracy", epochs_x, r.test_acc}},
              out_path(c, "accuracy.svg"));

  std::printf(
      "mode=%s n_lab=%d epochs=%d steady_acc=%.4f final_acc=%.4f wall=%.1fs\n",
      t.mode.c_str(), r.n_lab, cfg.epochs, r.steady_state_acc,
      r.test_acc.empty() ? 0.0 : r.test_acc.back(), r.wall_clock_seconds);
  return 0;
}

int cmd_train(const TrainOpts& t, const CommonOpts& c) {
  require_value(t.data, "--data");
  Dataset ds = load_dataset(t.data);
  if (t.nlab > 0) ds = split_semisupervised(ds, t.nlab, t.split_seed);
  TrainConfig cfg = to_config(t, c);
  if (t.mode == "supervised") cfg.loss = LossConfig{};  // ignored by contract
  cfg.validate();
  ensure_out(c.out);
  return c.precision == "f64" ? run_train<double>(ds, cfg, t, c)
                              : run_train<float>(ds, cfg, t, c);
}

// ---------------------------------------------------------------------------
// sweep

struct SweepOpts {
  std::string grid = "alpha-beta";
  std::string nlab_list = "30,60,90,120,150,300,600,900,1200,1500";
  int seeds = 1;
  int workers = 1;
};

struct SweepJob {
  std::string cell;
  int n_lab = 0;
  std::uint64_t seed = 0;
  bool supervised = false;
  LossConfig loss;
};

int cmd_sweep(const SweepOpts& s, const TrainOpts& t, const CommonOpts& c,
              bool alpha_given, bool beta_given, bool lmul_given) {
  require_value(t.data, "--data");
  if (s.seeds < 1) throw ValueError("--seeds must be >= 1");
  if (s.workers < 1) throw ValueError("--workers must be >= 1");
  Dataset base = load_dataset(t.data);

  // Grid rows. The alpha-beta grid fixes l_mul (all seven layers unless
  // overridden); the l_mul grid fixes the weights at (0.5, 0.5) unless
  // overridden.
  std::vector<std::pair<std::string, LossConfig>> cells;
  cells.emplace_back("supervised", LossConfig{});
  if (s.grid == "alpha-beta") {
    for (int i = 0; i <= 10; ++i) {
      LossConfig lc;
      lc.alpha = 0.1 * i;
      lc.beta = 0.1 * (10 - i);
      lc.l_mul = lmul_given ? parse_lmul(t.lmul)
                            : std::vector<int>{1, 2, 3, 4, 5, 6, 7};
      char label[32];
      std::snprintf(label, sizeof(label), "%g/%g", lc.alpha, lc.beta);
      cells.emplace_back(label, lc);
    }
  } else if (s.grid == "lmul") {
    for (int hi = 1; hi <= kDiscLayers; ++hi) {
      LossConfig lc;
      lc.alpha = alpha_given ? t.alpha : 0.5;
      lc.beta = beta_given ? t.beta : 0.5;
      lc.l_mul.clear();
      for (int l = 1; l <= hi; ++l) lc.l_mul.push_back(l);
      std::string label;
      for (int l = 1; l <= hi; ++l)
        label += (l > 1 ? "-" : "") + std::to_string(l);
      cells.emplace_back(label, lc);
    }
  } else {
    throw ValueError("unknown sweep grid '" + s.grid +
                     "' (expected alpha-beta or lmul)");
  }

  std::vector<int> nlabs;
  for (int v : parse_lmul(s.nlab_list)) nlabs.push_back(v);
  if (nlabs.empty()) throw ValueError("--nlab-list is empty");

  std::vector<SweepJob> jobs;
  for (const auto& [label, lc] : cells)
    for (int nl : nlabs)
      for (int j = 0; j < s.seeds; ++j)
        jobs.push_back({label, nl, c.seed + static_cast<std::uint64_t>(j),
                        label == "supervised", lc});

  std::vector<double> acc(jobs.size(), 0.0);
  std::atomic<std::size_t> next{0};
  std::mutex print_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= jobs.size()) return;
      const SweepJob& job = jobs[i];
      Dataset ds = split_semisupervised(base, job.n_lab, t.split_seed);
      TrainConfig cfg = to_config(t, c);
      cfg.loss = job.loss;
      cfg.n_lab = job.n_lab;
      cfg.seed = job.seed;
      TrainOutput<float> out = job.supervised
                                   ? train_supervised<float>(ds, cfg)
                                   : train_wlssgan<float>(ds, cfg);
      acc[i] = out.report.steady_state_acc;
      std::lock_guard<std::mutex> lock(print_mutex);
      std::printf("[sweep %zu/%zu] cell=%s n_lab=%d seed=%llu steady=%.4f\n",
                  i + 1, jobs.size(), job.cell.c_str(), job.n_lab,
                  static_cast<unsigned long long>(job.seed), acc[i]);
      std::fflush(stdout);
    }
  };
  {
    std::vector<std::thread> pool;
    const int width = std::min<int>(s.workers, static_cast<int>(jobs.size()));
    pool.reserve(static_cast<std::size_t>(width));
    for (int w = 0; w < width; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  std::string csv = "cell,n_lab,seed,steady_acc\n";
  for (std::size_t i = 0; i < jobs.size(); i += s.seeds) {
    double mean = 0.0;
    for (int j = 0; j < s.seeds; ++j) {
      const SweepJob& job = jobs[i + static_cast<std::size_t>(j)];
      csv += job.cell + "," + std::to_string(job.n_lab) + "," +
             std::to_string(job.seed) + "," +
             csv_num(acc[i + static_cast<std::size_t>(j)]) + "\n";
      mean += acc[i + static_cast<std::size_t>(j)] / s.seeds;
    }
    csv += jobs[i].cell + "," + std::to_string(jobs[i].n_lab) + ",mean," +
           csv_num(mean) + "\n";
  }
  ensure_out(c.out);
  write_text(out_path(c, "sweep.csv"), csv);
  std::printf("wrote %s\n", out_path(c, "sweep.csv").c_str());
  return 0;
}

// ---------------------------------------------------------------------------
// synth

struct SynthOpts {
  std::string ckpt;
  std::string data;
  int n = 2100;
};

template <typename T>
int run_synth(const SynthOpts& s, const CommonOpts& c) {
  require_value(s.ckpt, "--ckpt");
  CheckpointData ckpt = read_checkpoint(s.ckpt);
  CheckpointData g_only;
  for (const auto& [name, tensor] : ckpt.tensors)
    if (name.rfind("g.", 0) == 0) g_only.tensors.emplace_back(name, tensor);
  if (g_only.tensors.empty())
    throw FormatError("checkpoint " + s.ckpt +
                      " contains no generator tensors");
  const Tensor<float>* w1 = g_only.find("g.deconv1.w");
  if (!w1) throw FormatError("checkpoint lacks g.deconv1.w");
  const int latent_dim = w1->shape()[0];
  auto g = build_generator<T>(latent_dim, 0);
  load_tensors<T>(g_only, g.named_tensors());

  if (s.n < 1) throw ValueError("--n must be >= 1");
  Dataset synth;
  synth.signal_length = kSignalLength;
  synth.signals.reserve(static_cast<std::size_t>(s.n) * kSignalLength);
  Rng noise(c.seed);
  for (int done = 0; done < s.n;) {
    const int b = std::min(64, s.n - done);
    auto z = sample_latent<T>(b, latent_dim, noise);
    auto x = generator_forward<T>(g, z, Mode::Eval, nullptr, false);
    auto xd = x.data();
    for (std::size_t i = 0; i < xd.size(); ++i)
      synth.signals.push_back(static_cast<float>(xd[i]));
    done += b;
  }
  synth.labels.assign(static_cast<std::size_t>(s.n), kUnlabeled);
  synth.roles.assign(static_cast<std::size_t>(s.n), SampleRole::Train);

  ensure_out(c.out);
  write_dataset(synth, out_path(c, "synthetic.slc"));

  std::string csv = "n_pairs,ad,cs,pcc\n";
  if (!s.data.empty()) {
    Dataset real = load_dataset(s.data);
    std::vector<float> real_train;
    for (std::int64_t i = 0; i < real.count(); ++i)
      if (real.roles[static_cast<std::size_t>(i)] == SampleRole::Train)
        real_train.insert(real_train.end(), real.signal(i),
                          real.signal(i) + real.signal_length);
    SynthesisReport rep =
        paired_metrics(synth.signals, real_train, kSignalLength);
    csv += synthesis_csv_row(rep) + "\n";
    std::printf("n=%d vs %lld real train signals: AD=%.4f CS=%.4f PCC=%.4f\n",
                s.n,
                static_cast<long long>(real_train.size() / kSignalLength),
                rep.ad, rep.cs, rep.pcc);
  }
  write_text(out_path(c, "synthesis.csv"), csv);

  std::vector<PlotSeries> examples;
  std::vector<double> bins(kSignalLength);
  for (int i = 0; i < kSignalLength; ++i) bins[i] = i;
  for (int k = 0; k < std::min(3, s.n); ++k) {
    PlotSeries ps;
    ps.label = "sample " + std::to_string(k + 1);
    ps.x = bins;
    ps.y.assign(synth.signal(k), synth.signal(k) + kSignalLength);
    examples.push_back(std::move(ps));
  }
  plot_curves("Synthesized spectra", "bin", "amplitude", examples,
              out_path(c, "examples.svg"));
  std::printf("wrote %d synthetic signals to %s\n", s.n,
              out_path(c, "synthetic.slc").c_str());
  return 0;
}

// ---------------------------------------------------------------------------
// baseline

struct BaselineOpts {
  std::string data;
  std::string method = "knn";
  int nlab = 0;
  std::uint64_t split_seed = 0;
  int k = 5;
  double threshold = 0.95;
  int rounds = 10;
  double lr = 0.02;
  int iterations = 300;
  double l2 = 1e-4;
};

int cmd_baseline(const BaselineOpts& b, const CommonOpts& c) {
  require_value(b.data, "--data");
  Dataset ds = load_dataset(b.data);
  if (b.nlab > 0) ds = split_semisupervised(ds, b.nlab, b.split_seed);
  double acc = 0.0;
  if (b.method == "knn") {
    acc = knn_evaluate(knn_fit(ds, b.k), ds);
  } else if (b.method == "logreg") {
    acc = logreg_evaluate(logreg_train(ds, {b.lr, b.iterations, b.l2}), ds);
  } else if (b.method == "self-train") {
    SelfTrainConfig st;
    st.base = {b.lr, b.iterations, b.l2};
    st.threshold = b.threshold;
    st.max_rounds = b.rounds;
    acc = self_training_baseline(ds, st);
  } else {
    throw ValueError("unknown baseline method '" + b.method + "'");
  }
  const int n_lab =
      static_cast<int>(ds.indices_labeled_train().size());
  ensure_out(c.out);
  write_text(out_path(c, "baseline.csv"),
             "method,n_lab,test_acc\n" + b.method + "," +
                 std::to_string(n_lab) + "," + csv_num(acc) + "\n");
  std::printf("%s n_lab=%d test_acc=%.4f\n", b.method.c_str(), n_lab, acc);
  return 0;
}

// ---------------------------------------------------------------------------
// eval

struct EvalOpts {
  std::string ckpt;
  std::string data;
};

template <typename T>
int run_eval(const EvalOpts& e, const CommonOpts& c) {
  require_value(e.ckpt, "--ckpt");
  require_value(e.data, "--data");
  CheckpointData ckpt = read_checkpoint(e.ckpt);
  CheckpointData d_only;
  for (const auto& [name, tensor] : ckpt.tensors)
    if (name.rfind("d.", 0) == 0) d_only.tensors.emplace_back(name, tensor);
  if (d_only.tensors.empty())
    throw FormatError("checkpoint " + e.ckpt +
                      " contains no discriminator tensors");
  auto d = build_discriminator<T>(kNumClasses, 0);
  load_tensors<T>(d_only, d.named_tensors());

  Dataset ds = load_dataset(e.data);
  const double acc = evaluate<T>(d, ds);

  // Per-class accuracy over the test split.
  std::vector<std::int64_t> test = ds.indices_test();
  std::array<std::int64_t, kNumClasses> hit{}, tot{};
  for (std::int64_t start = 0; start < static_cast<std::int64_t>(test.size());
       start += 64) {
    const std::int64_t b =
        std::min<std::int64_t>(64, static_cast<std::int64_t>(test.size()) -
                                       start);
    auto x = Tensor<T>::zeros({static_cast<int>(b), 1, ds.signal_length});
    auto xd = x.data();
    for (std::int64_t i = 0; i < b; ++i) {
      const float* s = ds.signal(test[static_cast<std::size_t>(start + i)]);
      for (int j = 0; j < ds.signal_length; ++j)
        xd[static_cast<std::size_t>(i * ds.signal_length + j)] =
            static_cast<T>(s[j]);
    }
    auto pred = classify<T>(d, x);
    for (std::int64_t i = 0; i < b; ++i) {
      const int label =
          ds.labels[static_cast<std::size_t>(test[static_cast<std::size_t>(
              start + i)])];
      ++tot[static_cast<std::size_t>(label)];
      if (pred[static_cast<std::size_t>(i)] == label)
        ++hit[static_cast<std::size_t>(label)];
    }
  }

  std::string csv = "metric,value\n";
  csv += "test_acc," + csv_num(acc) + "\n";
  csv += "n_test," + std::to_string(test.size()) + "\n";
  const char* names[kNumClasses] = {"sea", "land", "sea_land"};
  for (int cls = 0; cls < kNumClasses; ++cls) {
    const double a =
        tot[static_cast<std::size_t>(cls)]
            ? static_cast<double>(hit[static_cast<std::size_t>(cls)]) /
                  static_cast<double>(tot[static_cast<std::size_t>(cls)])
            : 0.0;
    csv += std::string("test_acc_") + names[cls] + "," + csv_num(a) + "\n";
  }
  ensure_out(c.out);
  write_text(out_path(c, "eval.csv"), csv);
  std::printf("test_acc=%.4f over %zu test samples\n", acc, test.size());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Semi-supervised GAN toolkit for 1-D clutter spectra"};
  app.require_subcommand(1);

  CommonOpts common_gen, common_train, common_sweep, common_synth,
      common_baseline, common_eval;
  GenDataOpts gen;
  TrainOpts train, sweep_train;
  SweepOpts sweep;
  SynthOpts synth;
  BaselineOpts baseline;
  EvalOpts eval;

  auto* c_gen = app.add_subcommand("gen-data", "Generate a synthetic dataset");
  c_gen->add_option("--per-class", gen.per_class, "Samples per class");
  c_gen->add_option("--train-frac", gen.train_frac, "Train fraction");
  c_gen->add_option("--length", gen.params.length, "Signal length");
  c_gen->add_option("--bragg-offset", gen.params.bragg_offset,
                    "Bragg peak offset in bins");
  c_gen->add_option("--peak-width", gen.params.peak_width,
                    "Peak sigma in bins");
  c_gen->add_option("--amp-jitter", gen.params.amp_jitter,
                    "Relative amplitude jitter");
  c_gen->add_option("--doppler-jitter", gen.params.doppler_jitter,
                    "Max peak shift in bins");
  c_gen->add_option("--noise-floor", gen.params.noise_floor,
                    "Additive noise amplitude");
  add_common(c_gen, common_gen);

  auto* c_train = app.add_subcommand("train", "Train a model on a dataset");
  add_train(c_train, train);
  add_common(c_train, common_train);

  auto* c_sweep =
      app.add_subcommand("sweep", "Grid of training runs with aggregate CSV");
  add_train(c_sweep, sweep_train);
  c_sweep->add_option("--grid", sweep.grid, "Grid kind")
      ->check(CLI::IsMember({"alpha-beta", "lmul"}));
  c_sweep->add_option("--nlab-list", sweep.nlab_list,
                      "Comma list of labeled budgets");
  c_sweep->add_option("--seeds", sweep.seeds, "Seeds per cell");
  c_sweep->add_option("--workers", sweep.workers, "Worker pool width");
  add_common(c_sweep, common_sweep);

  auto* c_synth =
      app.add_subcommand("synth", "Sample signals from a trained generator");
  c_synth->add_option("--ckpt", synth.ckpt, "Checkpoint file");
  c_synth->add_option("--data", synth.data,
                      "Real dataset for the synthesis metrics");
  c_synth->add_option("--n", synth.n, "Number of signals");
  add_common(c_synth, common_synth);

  auto* c_baseline =
      app.add_subcommand("baseline", "Classical baseline classifiers");
  c_baseline->add_option("--data", baseline.data, "Dataset file");
  c_baseline->add_option("--method", baseline.method, "Baseline method")
      ->check(CLI::IsMember({"knn", "logreg", "self-train"}));
  c_baseline->add_option("--nlab", baseline.nlab,
                         "Labeled budget (0 keeps the dataset's labels)");
  c_baseline->add_option("--split-seed", baseline.split_seed,
                         "Seed of the labeled/unlabeled split");
  c_baseline->add_option("--k", baseline.k, "Neighbors for knn");
  c_baseline->add_option("--threshold", baseline.threshold,
                         "Self-training confidence threshold");
  c_baseline->add_option("--rounds", baseline.rounds,
                         "Self-training max rounds");
  c_baseline->add_option("--lr", baseline.lr, "Logistic-regression step size");
  c_baseline->add_option("--iterations", baseline.iterations,
                         "Logistic-regression iterations");
  c_baseline->add_option("--l2", baseline.l2,
                         "Logistic-regression L2 penalty");
  add_common(c_baseline, common_baseline);

  auto* c_eval =
      app.add_subcommand("eval", "Evaluate a checkpoint on a dataset");
  c_eval->add_option("--ckpt", eval.ckpt, "Checkpoint file");
  c_eval->add_option("--data", eval.data, "Dataset file");
  add_common(c_eval, common_eval);

  CLI11_PARSE(app, argc, argv);

  try {
    if (c_gen->parsed()) apply_config(c_gen, common_gen.config);
    if (c_train->parsed()) apply_config(c_train, common_train.config);
    if (c_sweep->parsed()) apply_config(c_sweep, common_sweep.config);
    if (c_synth->parsed()) apply_config(c_synth, common_synth.config);
    if (c_baseline->parsed()) apply_config(c_baseline, common_baseline.config);
    if (c_eval->parsed()) apply_config(c_eval, common_eval.config);

    if (c_gen->parsed()) return cmd_gen_data(gen, common_gen);
    if (c_train->parsed()) return cmd_train(train, common_train);
    if (c_sweep->parsed())
      return cmd_sweep(sweep, sweep_train, common_sweep,
                       c_sweep->count("--alpha") > 0,
                       c_sweep->count("--beta") > 0,
                       c_sweep->count("--lmul") > 0);
    if (c_synth->parsed())
      return common_synth.precision == "f64"
                 ? run_synth<double>(synth, common_synth)
                 : run_synth<float>(synth, common_synth);
    if (c_baseline->parsed()) return cmd_baseline(baseline, common_baseline);
    if (c_eval->parsed())
      return common_eval.precision == "f64" ? run_eval<double>(eval, common_eval)
                                            : run_eval<float>(eval, common_eval);
  } catch (const CLI::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
