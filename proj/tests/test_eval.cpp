#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "wl/baselines.hpp"
#include "wl/clutter.hpp"
#include "wl/eval.hpp"
#include "wl/models.hpp"
#include "wl/rng.hpp"

using namespace wl;

namespace {

const std::vector<float> kA = {0.5f, -1.25f, 2.0f, 0.375f, -0.875f, 1.5f};
const std::vector<float> kB = {-0.25f, 0.75f, 1.125f, -2.0f, 0.625f, 0.25f};

std::vector<float> random_signals(int n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<float> out(static_cast<std::size_t>(n) * kSignalLength);
  for (auto& v : out) v = static_cast<float>(rng.uniform(-1.0, 1.0));
  return out;
}

}  // namespace

TEST_CASE("absolute distance identities and oracle") {
  CHECK(absolute_distance(kA, kA) == 0.0);

  // Constant shift by an exactly representable 0.5.
  std::vector<float> shifted = kA;
  for (auto& v : shifted) v += 0.5f;
  CHECK(absolute_distance(shifted, kA) == doctest::Approx(0.5).epsilon(1e-15));

  CHECK(absolute_distance(kA, kB) ==
        doctest::Approx(1.4583333333333333).epsilon(1e-15));

  std::vector<float> short_b(kB.begin(), kB.end() - 1);
  CHECK_THROWS_AS(absolute_distance(kA, short_b), ShapeError);
  CHECK_THROWS_AS(absolute_distance({}, {}), ContractError);
}

TEST_CASE("cosine similarity identities and oracle") {
  CHECK(cosine_similarity(kA, kA) == doctest::Approx(1.0).epsilon(1e-12));

  std::vector<float> neg = kA;
  for (auto& v : neg) v = -v;
  CHECK(cosine_similarity(kA, neg) == doctest::Approx(-1.0).epsilon(1e-12));

  const std::vector<float> e1 = {1.0f, 0.0f, 0.0f};
  const std::vector<float> e2 = {0.0f, 1.0f, 0.0f};
  CHECK(cosine_similarity(e1, e2) == 0.0);

  CHECK(cosine_similarity(kA, kB) ==
        doctest::Approx(0.03521518371292002).epsilon(1e-12));

  const std::vector<float> zero = {0.0f, 0.0f, 0.0f};
  CHECK_THROWS_AS(cosine_similarity(zero, e1), ValueError);
  CHECK_THROWS_AS(cosine_similarity(e1, zero), ValueError);
}

TEST_CASE("pearson identities, affine invariance, oracle") {
  CHECK(pearson(kA, kA) == doctest::Approx(1.0).epsilon(1e-12));

  // 2x + 3 with exactly representable inputs: correlation must be 1.
  std::vector<float> affine = kA;
  for (auto& v : affine) v = 2.0f * v + 3.0f;
  CHECK(pearson(kA, affine) == doctest::Approx(1.0).epsilon(1e-12));

  // Negative slope flips the sign.
  std::vector<float> negaff = kA;
  for (auto& v : negaff) v = -3.0f * v + 1.0f;
  CHECK(pearson(kA, negaff) == doctest::Approx(-1.0).epsilon(1e-12));

  CHECK(pearson(kA, kB) ==
        doctest::Approx(0.0109178286685287).epsilon(1e-12));

  const std::vector<float> constant = {0.7f, 0.7f, 0.7f};
  const std::vector<float> varying = {0.1f, 0.2f, 0.3f};
  CHECK_THROWS_AS(pearson(constant, varying), ValueError);
  CHECK_THROWS_AS(pearson(varying, constant), ValueError);
}

TEST_CASE("pair_nearest picks nearest rows with lowest-index ties") {
  // Length-2 rows, hand-enumerable distances.
  const std::vector<float> real = {0.0f, 0.0f,   // r0
                                   1.0f, 0.0f,   // r1
                                   0.0f, 2.0f};  // r2
  const std::vector<float> synth = {0.9f, 0.1f,    // nearest r1
                                    0.1f, 1.6f,    // nearest r2
                                    0.05f, 0.0f};  // nearest r0
  auto pairs = pair_nearest(synth, real, 2);
  CHECK(pairs == std::vector<std::int64_t>{1, 2, 0});

  // An exact copy of a real row pairs with it at distance zero.
  const std::vector<float> copy = {0.0f, 2.0f};
  CHECK(pair_nearest(copy, real, 2) == std::vector<std::int64_t>{2});

  // Single real row: everything pairs with it.
  const std::vector<float> one_real = {3.0f, 3.0f};
  CHECK(pair_nearest(synth, one_real, 2) ==
        std::vector<std::int64_t>{0, 0, 0});

  // Equidistant tie (r0 and r1 both at distance 0.5) goes to the lower index.
  const std::vector<float> mid = {0.5f, 0.0f};
  CHECK(pair_nearest(mid, real, 2) == std::vector<std::int64_t>{0});

  CHECK_THROWS_AS(pair_nearest({}, real, 2), ContractError);
  CHECK_THROWS_AS(pair_nearest(synth, real, 4), ShapeError);
}

TEST_CASE("paired metrics on self-pairing hit the exact identities") {
  auto real = random_signals(5, 101);
  auto rep = paired_metrics(real, real, kSignalLength);
  CHECK(rep.n_pairs == 5);
  CHECK(rep.ad == 0.0);
  CHECK(rep.cs == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(rep.pcc == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("synthesis report is deterministic and range-valid") {
  auto g = build_generator<float>(kLatentDim, 404);
  auto real = random_signals(8, 102);

  auto r1 = synthesis_report<float>(g, real, kSignalLength, 6, 9);
  auto r2 = synthesis_report<float>(g, real, kSignalLength, 6, 9);
  CHECK(r1.n_pairs == 6);
  CHECK(r1.ad == r2.ad);
  CHECK(r1.cs == r2.cs);
  CHECK(r1.pcc == r2.pcc);
  CHECK(r1.ad >= 0.0);
  CHECK(r1.cs >= -1.0);
  CHECK(r1.cs <= 1.0);
  CHECK(r1.pcc >= -1.0);
  CHECK(r1.pcc <= 1.0);

  auto r3 = synthesis_report<float>(g, real, kSignalLength, 6, 10);
  CHECK(r1.cs != r3.cs);  // different noise seed, different samples

  CHECK_THROWS_AS(synthesis_report<float>(g, real, kSignalLength, 0, 9),
                  ValueError);
}

TEST_CASE("synthesis csv row format") {
  SynthesisReport r;
  r.n_pairs = 12;
  r.ad = 0.25;
  r.cs = 0.5;
  r.pcc = -0.125;
  CHECK(synthesis_csv_row(r) == "12,0.25,0.5,-0.125");
}

TEST_CASE("knn: exact-match, single-label, and crafted vote cases") {
  auto ds = make_dataset(10, 0.5, SpectrumParams{}, 31);
  auto m1 = knn_fit(ds, 1);

  // k=1 on a training sample returns that sample's label; over the whole
  // training set this is the accuracy-1.0 invariant.
  for (std::size_t i = 0; i < m1.labels.size(); ++i) {
    std::span<const float> x(
        m1.signals.data() + i * static_cast<std::size_t>(m1.length),
        static_cast<std::size_t>(m1.length));
    CHECK(knn_classify(m1, x) == m1.labels[i]);
  }

  // All training labels identical -> that label always.
  KnnModel constant;
  constant.k = 3;
  constant.length = 2;
  constant.signals = {0.f, 0.f, 1.f, 0.f, 0.f, 1.f};
  constant.labels = {2, 2, 2};
  const std::vector<float> probe = {5.0f, -3.0f};
  CHECK(knn_classify(constant, probe) == 2);

  // Crafted 5-point plane, k=5: labels {0,0,1,1,2} -> tie 0 vs 1 -> 0.
  KnnModel plane;
  plane.k = 5;
  plane.length = 2;
  plane.signals = {0.f, 0.f, 0.1f, 0.f, 1.f, 0.f, 1.1f, 0.f, 0.5f, 2.f};
  plane.labels = {0, 0, 1, 1, 2};
  const std::vector<float> q = {0.55f, 0.0f};
  CHECK(knn_classify(plane, q) == 0);
  // k=3 around x=1: two votes for class 1.
  plane.k = 3;
  CHECK(knn_classify(plane, std::vector<float>{1.05f, 0.0f}) == 1);

  CHECK_THROWS_AS(knn_fit(ds, 2), ValueError);   // even
  CHECK_THROWS_AS(knn_fit(ds, -1), ValueError);  // negative
  CHECK_THROWS_AS(knn_fit(ds, 999), ValueError); // exceeds pool
  const std::vector<float> bad = {1.0f};
  CHECK_THROWS_AS(knn_classify(m1, bad), ShapeError);
}

TEST_CASE("knn on the synthetic task is a strong reference") {
  auto ds = make_dataset(60, 0.5, SpectrumParams{}, 33);
  auto m = knn_fit(ds, 5);
  CHECK(knn_evaluate(m, ds) > 0.8);
}

TEST_CASE("logreg: zero iterations, training, loss monotonicity") {
  auto ds = make_dataset(20, 0.5, SpectrumParams{}, 37);

  LogRegConfig zero;
  zero.iterations = 0;
  auto m0 = logreg_train(ds, zero);
  // Zero weights: uniform probabilities, argmax tie -> class 0, accuracy 1/3
  // on the balanced test split.
  auto p = logreg_probabilities(m0, std::vector<float>(kSignalLength, 0.3f));
  CHECK(p[0] == doctest::Approx(1.0 / 3));
  CHECK(p[1] == doctest::Approx(1.0 / 3));
  CHECK(p[2] == doctest::Approx(1.0 / 3));
  CHECK(logreg_evaluate(m0, ds) == doctest::Approx(1.0 / 3));

  LogRegConfig cfg;
  cfg.lr = 0.01;
  cfg.iterations = 200;
  auto m = logreg_train(ds, cfg);
  CHECK(m.loss_trace.back() < m.loss_trace.front());
  CHECK(logreg_evaluate(m, ds) > 0.6);

  // Missing class precondition.
  Dataset broken = ds;
  for (auto& l : broken.labels)
    if (l == 2) l = 1;
  CHECK_THROWS_AS(logreg_train(broken, cfg), ContractError);
}

TEST_CASE("logreg gradient matches finite differences") {
  auto ds = make_dataset(10, 0.5, SpectrumParams{}, 41);
  auto rows_idx = ds.indices_labeled_train();
  std::vector<float> signals;
  std::vector<int> labels;
  for (auto i : rows_idx) {
    const float* s = ds.signal(i);
    signals.insert(signals.end(), s, s + ds.signal_length);
    labels.push_back(ds.labels[static_cast<std::size_t>(i)]);
  }

  // Recover the analytic gradient from a single GD step: g = (w0 - w1)/lr.
  LogRegConfig one;
  one.iterations = 1;
  one.lr = 1.0;
  one.l2 = 1e-3;
  auto m1 = logreg_train(ds, one);

  LogRegModel m0 = m1;
  std::fill(m0.w.begin(), m0.w.end(), 0.0);
  std::fill(m0.b.begin(), m0.b.end(), 0.0);

  const double h = 1e-6;
  int checked = 0;
  for (std::size_t j = 0; j < m0.w.size(); j += 257) {  // subsample coords
    LogRegModel plus = m0, minus = m0;
    plus.w[j] += h;
    minus.w[j] -= h;
    const double num = (logreg_loss(plus, signals, labels, one.l2) -
                        logreg_loss(minus, signals, labels, one.l2)) /
                       (2 * h);
    const double ana = (m0.w[j] - m1.w[j]) / one.lr;
    CHECK(std::abs(num - ana) < 1e-6);
    ++checked;
  }
  CHECK(checked >= 5);
  for (std::size_t c = 0; c < m0.b.size(); ++c) {
    LogRegModel plus = m0, minus = m0;
    plus.b[c] += h;
    minus.b[c] -= h;
    const double num = (logreg_loss(plus, signals, labels, one.l2) -
                        logreg_loss(minus, signals, labels, one.l2)) /
                       (2 * h);
    const double ana = (m0.b[c] - m1.b[c]) / one.lr;
    CHECK(std::abs(num - ana) < 1e-6);
  }
}

TEST_CASE("linearly separable toy set reaches full train accuracy") {
  // Two well-separated clusters on the first coordinate, classes 0/1, plus
  // one far-away class-2 point to satisfy the all-classes precondition.
  Dataset toy;
  toy.signal_length = kSignalLength;
  auto add = [&](float v, std::int8_t label, SampleRole role) {
    std::vector<float> s(kSignalLength, 0.0f);
    s[0] = v;
    toy.signals.insert(toy.signals.end(), s.begin(), s.end());
    toy.labels.push_back(label);
    toy.roles.push_back(role);
  };
  for (float v : {-1.0f, -0.9f, -0.8f}) add(v, 0, SampleRole::Train);
  for (float v : {0.8f, 0.9f, 1.0f}) add(v, 1, SampleRole::Train);
  add(0.0f, 2, SampleRole::Train);
  toy.signals.back() = 5.0f;  // class 2 lives on the last coordinate

  LogRegConfig cfg;
  cfg.lr = 0.5;
  cfg.iterations = 400;
  cfg.l2 = 0.0;
  auto m = logreg_train(toy, cfg);
  int hits = 0;
  for (std::int64_t i = 0; i < toy.count(); ++i) {
    std::span<const float> x(toy.signal(i),
                             static_cast<std::size_t>(kSignalLength));
    if (logreg_predict(m, x) == toy.labels[static_cast<std::size_t>(i)])
      ++hits;
  }
  CHECK(hits == toy.count());

  // Well below the curvature bound of this toy design the full-batch loss
  // is monotone non-increasing.
  LogRegConfig gentle = cfg;
  gentle.lr = 0.1;
  auto mg = logreg_train(toy, gentle);
  for (std::size_t i = 1; i < mg.loss_trace.size(); ++i)
    CHECK(mg.loss_trace[i] <= mg.loss_trace[i - 1] + 1e-12);
}

TEST_CASE("self-training: threshold 1 reduces to supervised, improves with copies") {
  SelfTrainConfig st;
  st.base.iterations = 150;

  // Unlabeled pool = exact copies of the labeled pool: pseudo-labels are
  // easy, so self-training must not fall below plain logreg (3 seeds).
  int wins = 0;
  for (std::uint64_t seed : {51, 52, 53}) {
    auto ds = make_dataset(16, 0.5, SpectrumParams{}, seed);
    auto labeled = ds.indices_labeled_train();
    Dataset with_copies = ds;
    for (auto i : labeled) {
      const float* s = ds.signal(i);
      with_copies.signals.insert(with_copies.signals.end(), s,
                                 s + ds.signal_length);
      with_copies.labels.push_back(kUnlabeled);
      with_copies.roles.push_back(SampleRole::Train);
    }

    auto base_model = logreg_train(with_copies, st.base);
    const double base_acc = logreg_evaluate(base_model, with_copies);

    SelfTrainConfig sup = st;
    sup.threshold = 1.0;
    const double sup_acc = self_training_baseline(with_copies, sup);
    CHECK(sup_acc == doctest::Approx(base_acc));

    const double self_acc = self_training_baseline(with_copies, st);
    if (self_acc >= base_acc) ++wins;

    // Deterministic under identical inputs.
    CHECK(self_training_baseline(with_copies, st) ==
          doctest::Approx(self_acc));
  }
  CHECK(wins == 3);

  auto plain = make_dataset(10, 0.5, SpectrumParams{}, 54);
  CHECK_THROWS_AS(self_training_baseline(plain, st), ContractError);
  SelfTrainConfig bad = st;
  bad.threshold = 0.0;
  auto semi = split_semisupervised(plain, 3, 0);
  CHECK_THROWS_AS(self_training_baseline(semi, bad), ValueError);
}
