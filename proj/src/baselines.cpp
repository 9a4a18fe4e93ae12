#include "wl/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "wl/common.hpp"

namespace wl {

namespace {

struct LabeledRows {
  std::vector<float> signals;
  std::vector<int> labels;
};

LabeledRows gather_labeled_train(const Dataset& ds) {
  LabeledRows out;
  const auto idx = ds.indices_labeled_train();
  out.signals.reserve(idx.size() * static_cast<std::size_t>(ds.signal_length));
  out.labels.reserve(idx.size());
  for (auto i : idx) {
    const float* s = ds.signal(i);
    out.signals.insert(out.signals.end(), s, s + ds.signal_length);
    out.labels.push_back(ds.labels[static_cast<std::size_t>(i)]);
  }
  return out;
}

void check_probe_length(int expected, std::size_t got) {
  if (static_cast<std::size_t>(expected) != got)
    throw ShapeError("signal length mismatch: model expects " +
                     std::to_string(expected) + ", got " +
                     std::to_string(got));
}

std::vector<double> softmax_row(const std::vector<double>& logits) {
  double mx = logits[0];
  for (double v : logits) mx = std::max(mx, v);
  std::vector<double> p(logits.size());
  double denom = 0.0;
  for (std::size_t j = 0; j < logits.size(); ++j) {
    p[j] = std::exp(logits[j] - mx);
    denom += p[j];
  }
  for (auto& v : p) v /= denom;
  return p;
}

}  // namespace

KnnModel knn_fit(const Dataset& dataset, int k) {
  if (k < 1 || k % 2 == 0)
    throw ValueError("k must be a positive odd number, got " +
                     std::to_string(k));
  KnnModel m;
  m.k = k;
  m.length = dataset.signal_length;
  auto rows = gather_labeled_train(dataset);
  m.signals = std::move(rows.signals);
  m.labels = std::move(rows.labels);
  if (m.labels.empty())
    throw ContractError("dataset has no labeled train samples");
  if (k > static_cast<int>(m.labels.size()))
    throw ValueError("k exceeds the labeled train count");
  return m;
}

int knn_classify(const KnnModel& model, std::span<const float> x) {
  check_probe_length(model.length, x.size());
  const int n = static_cast<int>(model.labels.size());
  if (model.k > n) throw ValueError("k exceeds the labeled train count");

  // (distance^2, index) for every stored sample; ties in distance resolve
  // toward the lower index so neighbor selection is deterministic.
  std::vector<std::pair<double, int>> dist(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const float* s =
        model.signals.data() + static_cast<std::size_t>(i) * model.length;
    double d = 0.0;
    for (int j = 0; j < model.length; ++j) {
      const double diff = static_cast<double>(x[j]) - static_cast<double>(s[j]);
      d += diff * diff;
    }
    dist[static_cast<std::size_t>(i)] = {d, i};
  }
  std::partial_sort(dist.begin(), dist.begin() + model.k, dist.end());

  std::vector<int> votes;
  for (int i = 0; i < model.k; ++i) {
    const int label = model.labels[static_cast<std::size_t>(dist[i].second)];
    if (label >= static_cast<int>(votes.size()))
      votes.resize(static_cast<std::size_t>(label) + 1, 0);
    ++votes[static_cast<std::size_t>(label)];
  }
  int best = 0;
  for (std::size_t c = 1; c < votes.size(); ++c)
    if (votes[c] > votes[static_cast<std::size_t>(best)])
      best = static_cast<int>(c);  // strict > keeps the smallest label on ties
  return best;
}

double knn_evaluate(const KnnModel& model, const Dataset& dataset) {
  const auto test = dataset.indices_test();
  if (test.empty()) throw ContractError("dataset has no test samples");
  int hits = 0;
  for (auto i : test) {
    std::span<const float> x(dataset.signal(i),
                             static_cast<std::size_t>(dataset.signal_length));
    if (knn_classify(model, x) == dataset.labels[static_cast<std::size_t>(i)])
      ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(test.size());
}

namespace {

std::vector<double> logreg_logits(const LogRegModel& m,
                                  std::span<const float> x) {
  std::vector<double> logits(static_cast<std::size_t>(m.num_classes));
  for (int c = 0; c < m.num_classes; ++c) {
    double acc = m.b[static_cast<std::size_t>(c)];
    const double* wr = m.w.data() + static_cast<std::size_t>(c) * m.length;
    for (int j = 0; j < m.length; ++j) acc += wr[j] * x[j];
    logits[static_cast<std::size_t>(c)] = acc;
  }
  return logits;
}

LogRegModel train_rows(const std::vector<float>& signals,
                       const std::vector<int>& labels, int length,
                       const LogRegConfig& cfg) {
  const int n = static_cast<int>(labels.size());
  LogRegModel m;
  m.length = length;
  std::vector<int> counts(static_cast<std::size_t>(m.num_classes), 0);
  for (int y : labels) {
    if (y < 0 || y >= m.num_classes)
      throw ValueError("label out of range: " + std::to_string(y));
    ++counts[static_cast<std::size_t>(y)];
  }
  for (int c = 0; c < m.num_classes; ++c)
    if (counts[static_cast<std::size_t>(c)] == 0)
      throw ContractError("class " + std::to_string(c) +
                          " has no labeled train samples");
  if (cfg.lr <= 0.0) throw ValueError("learning rate must be positive");
  if (cfg.iterations < 0) throw ValueError("iterations must be >= 0");
  if (cfg.l2 < 0.0) throw ValueError("l2 penalty must be >= 0");

  m.w.assign(static_cast<std::size_t>(m.num_classes) * length, 0.0);
  m.b.assign(static_cast<std::size_t>(m.num_classes), 0.0);
  m.loss_trace.reserve(static_cast<std::size_t>(cfg.iterations));

  std::vector<double> gw(m.w.size()), gb(m.b.size());
  for (int it = 0; it < cfg.iterations; ++it) {
    std::fill(gw.begin(), gw.end(), 0.0);
    std::fill(gb.begin(), gb.end(), 0.0);
    double loss = 0.0;
    for (int i = 0; i < n; ++i) {
      std::span<const float> x(
          signals.data() + static_cast<std::size_t>(i) * length,
          static_cast<std::size_t>(length));
      const auto p = softmax_row(logreg_logits(m, x));
      const int y = labels[static_cast<std::size_t>(i)];
      loss -= std::log(p[static_cast<std::size_t>(y)]);
      for (int c = 0; c < m.num_classes; ++c) {
        const double delta =
            p[static_cast<std::size_t>(c)] - (c == y ? 1.0 : 0.0);
        gb[static_cast<std::size_t>(c)] += delta;
        double* gwr = gw.data() + static_cast<std::size_t>(c) * length;
        for (int j = 0; j < length; ++j)
          gwr[j] += delta * static_cast<double>(x[j]);
      }
    }
    loss /= n;
    double wnorm = 0.0;
    for (double v : m.w) wnorm += v * v;
    loss += 0.5 * cfg.l2 * wnorm;
    m.loss_trace.push_back(loss);

    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t j = 0; j < m.w.size(); ++j)
      m.w[j] -= cfg.lr * (gw[j] * inv_n + cfg.l2 * m.w[j]);
    for (std::size_t c = 0; c < m.b.size(); ++c)
      m.b[c] -= cfg.lr * gb[c] * inv_n;
  }
  for (double v : m.w)
    if (!std::isfinite(v)) throw ValueError("logreg training diverged");
  return m;
}

}  // namespace

LogRegModel logreg_train(const Dataset& dataset, const LogRegConfig& config) {
  auto rows = gather_labeled_train(dataset);
  if (rows.labels.empty())
    throw ContractError("dataset has no labeled train samples");
  return train_rows(rows.signals, rows.labels, dataset.signal_length, config);
}

double logreg_loss(const LogRegModel& model, std::span<const float> signals,
                   std::span<const int> labels, double l2) {
  const std::size_t n = labels.size();
  if (n == 0) throw ContractError("logreg_loss requires at least one sample");
  if (signals.size() != n * static_cast<std::size_t>(model.length))
    throw ShapeError("signal rows do not match the label count");
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    auto x = signals.subspan(i * static_cast<std::size_t>(model.length),
                             static_cast<std::size_t>(model.length));
    const auto p = softmax_row(logreg_logits(model, x));
    loss -= std::log(p[static_cast<std::size_t>(labels[i])]);
  }
  loss /= static_cast<double>(n);
  double wnorm = 0.0;
  for (double v : model.w) wnorm += v * v;
  return loss + 0.5 * l2 * wnorm;
}

std::vector<double> logreg_probabilities(const LogRegModel& model,
                                         std::span<const float> x) {
  check_probe_length(model.length, x.size());
  return softmax_row(logreg_logits(model, x));
}

int logreg_predict(const LogRegModel& model, std::span<const float> x) {
  const auto p = logreg_probabilities(model, x);
  int best = 0;
  for (std::size_t c = 1; c < p.size(); ++c)
    if (p[c] > p[static_cast<std::size_t>(best)]) best = static_cast<int>(c);
  return best;
}

double logreg_evaluate(const LogRegModel& model, const Dataset& dataset) {
  const auto test = dataset.indices_test();
  if (test.empty()) throw ContractError("dataset has no test samples");
  int hits = 0;
  for (auto i : test) {
    std::span<const float> x(dataset.signal(i),
                             static_cast<std::size_t>(dataset.signal_length));
    if (logreg_predict(model, x) ==
        dataset.labels[static_cast<std::size_t>(i)])
      ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(test.size());
}

double self_training_baseline(const Dataset& dataset,
                              const SelfTrainConfig& config) {
  if (config.threshold <= 0.0 || config.threshold > 1.0)
    throw ValueError("confidence threshold must lie in (0, 1]");
  if (config.max_rounds < 1) throw ValueError("max_rounds must be >= 1");

  auto pool = gather_labeled_train(dataset);
  if (pool.labels.empty())
    throw ContractError("dataset has no labeled train samples");
  const auto unl_idx = dataset.indices_unlabeled_train();
  if (unl_idx.empty())
    throw ContractError("dataset has no unlabeled train samples");

  std::vector<bool> taken(unl_idx.size(), false);
  LogRegModel model =
      train_rows(pool.signals, pool.labels, dataset.signal_length, config.base);
  for (int round = 0; round < config.max_rounds; ++round) {
    int moved = 0;
    for (std::size_t u = 0; u < unl_idx.size(); ++u) {
      if (taken[u]) continue;
      const float* s = dataset.signal(unl_idx[u]);
      std::span<const float> x(s,
                               static_cast<std::size_t>(dataset.signal_length));
      const auto p = logreg_probabilities(model, x);
      int best = 0;
      for (std::size_t c = 1; c < p.size(); ++c)
        if (p[c] > p[static_cast<std::size_t>(best)])
          best = static_cast<int>(c);
      if (p[static_cast<std::size_t>(best)] >= config.threshold) {
        pool.signals.insert(pool.signals.end(), s,
                            s + dataset.signal_length);
        pool.labels.push_back(best);
        taken[u] = true;
        ++moved;
      }
    }
    if (moved == 0) break;
    model = train_rows(pool.signals, pool.labels, dataset.signal_length,
                       config.base);
  }

  const auto test = dataset.indices_test();
  if (test.empty()) throw ContractError("dataset has no test samples");
  int hits = 0;
  for (auto i : test) {
    std::span<const float> x(dataset.signal(i),
                             static_cast<std::size_t>(dataset.signal_length));
    if (logreg_predict(model, x) ==
        dataset.labels[static_cast<std::size_t>(i)])
      ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(test.size());
}

}  // namespace wl
