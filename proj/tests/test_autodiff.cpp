#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <vector>

#include "test_util.hpp"
#include "wl/adam.hpp"
#include "wl/gemm.hpp"
#include "wl/grad_check.hpp"
#include "wl/ops.hpp"
#include "wl/rng.hpp"
#include "wl/tensor.hpp"

using wl::Mode;
using wl::Rng;
using wl::Tape;
using wl::Tensor;

namespace {

template <typename T>
std::vector<std::remove_const_t<T>> to_vec(std::span<T> s) {
  return std::vector<std::remove_const_t<T>>(s.begin(), s.end());
}

}  // namespace

TEST_CASE("tensor: construction, shape and scalar access") {
  auto t = Tensor<float>::zeros({2, 3});
  CHECK(t.rank() == 2);
  CHECK(t.numel() == 6);
  for (float v : t.data()) CHECK(v == 0.0f);

  auto u = Tensor<float>::full({4}, 2.5f);
  for (float v : u.data()) CHECK(v == 2.5f);

  auto s = Tensor<float>::scalar(3.0f);
  CHECK(s.item() == 3.0f);
  CHECK_THROWS_AS((void)t.item(), wl::ContractError);
  CHECK_THROWS_AS(Tensor<float>::from({2, 2}, {1.f, 2.f, 3.f}),
                  wl::ShapeError);
  CHECK_THROWS_AS(Tensor<float>::zeros({2, 0}), wl::ShapeError);
}

TEST_CASE("tensor: handles share storage, clone copies") {
  auto a = Tensor<float>::full({3}, 1.0f);
  Tensor<float> b = a;
  b.data()[0] = 9.0f;
  CHECK(a.data()[0] == 9.0f);
  CHECK(a.id() == b.id());

  auto c = a.clone();
  CHECK(c.id() != a.id());
  c.data()[1] = -1.0f;
  CHECK(a.data()[1] == 1.0f);
}

TEST_CASE("tensor: gradient buffer lifecycle") {
  auto t = Tensor<float>::zeros({2, 2}, true);
  CHECK(t.requires_grad());
  CHECK(!t.has_grad());
  t.grad()[0] = 1.0f;
  CHECK(t.has_grad());
  t.accumulate_grad(std::vector<float>{1.f, 2.f, 3.f, 4.f});
  CHECK(t.grad()[0] == 2.0f);
  CHECK(t.grad()[3] == 4.0f);
  t.zero_grad();
  for (float g : t.grad()) CHECK(g == 0.0f);
}

TEST_CASE("tensor: all_finite flags NaN and infinity") {
  auto t = Tensor<float>::zeros({3});
  CHECK(t.all_finite());
  t.data()[1] = std::numeric_limits<float>::quiet_NaN();
  CHECK(!t.all_finite());
  t.data()[1] = 0.0f;
  t.data()[2] = std::numeric_limits<float>::infinity();
  CHECK(!t.all_finite());
}

TEST_CASE("rng: deterministic, seed-sensitive, bounded") {
  Rng a(42), b(42), c(43);
  bool all_equal = true, any_diff_seed = false;
  for (int i = 0; i < 1000; ++i) {
    const double va = a.uniform();
    all_equal = all_equal && (va == b.uniform());
    any_diff_seed = any_diff_seed || (va != c.uniform());
    CHECK(va >= 0.0);
    CHECK(va < 1.0);
  }
  CHECK(all_equal);
  CHECK(any_diff_seed);

  Rng d1 = Rng::derive(7, 0), d2 = Rng::derive(7, 1);
  bool streams_differ = false;
  for (int i = 0; i < 64; ++i)
    streams_differ = streams_differ || (d1.next_u64() != d2.next_u64());
  CHECK(streams_differ);
}

TEST_CASE("rng: normal moments and shuffle permutation") {
  Rng r(123);
  double s = 0.0, s2 = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double v = r.normal();
    s += v;
    s2 += v * v;
  }
  const double mean = s / n, var = s2 / n - mean * mean;
  CHECK(std::abs(mean) < 0.01);
  CHECK(std::abs(var - 1.0) < 0.02);

  std::vector<int> xs(100);
  std::iota(xs.begin(), xs.end(), 0);
  auto orig = xs;
  r.shuffle(xs);
  CHECK(xs != orig);
  auto sorted = xs;
  std::sort(sorted.begin(), sorted.end());
  CHECK(sorted == orig);

  // uniform_int covers the full range
  std::set<int> seen;
  for (int i = 0; i < 1000; ++i) seen.insert(r.uniform_int(7));
  CHECK(seen.size() == 7);
  CHECK(*seen.begin() == 0);
  CHECK(*seen.rbegin() == 6);
}

TEST_CASE("gemm: all transpose combinations match a direct triple loop") {
  Rng rng(5);
  const int m = 7, n = 5, k = 9;
  for (int ta = 0; ta < 2; ++ta)
    for (int tb = 0; tb < 2; ++tb) {
      std::vector<double> A(static_cast<std::size_t>(m) * k), Bm(static_cast<std::size_t>(k) * n);
      for (auto& v : A) v = rng.normal();
      for (auto& v : Bm) v = rng.normal();
      // Layout A as [m,k] or its transpose [k,m] depending on ta; same for B.
      std::vector<double> As = A, Bs = Bm;
      const int lda = ta ? m : k;
      const int ldb = tb ? k : n;
      if (ta) {  // store A^T
        As.assign(A.size(), 0.0);
        for (int i = 0; i < m; ++i)
          for (int j = 0; j < k; ++j)
            As[static_cast<std::size_t>(j) * m + i] = A[static_cast<std::size_t>(i) * k + j];
      }
      if (tb) {  // store B^T
        Bs.assign(Bm.size(), 0.0);
        for (int i = 0; i < k; ++i)
          for (int j = 0; j < n; ++j)
            Bs[static_cast<std::size_t>(j) * k + i] = Bm[static_cast<std::size_t>(i) * n + j];
      }
      std::vector<double> C(static_cast<std::size_t>(m) * n, 0.5);
      wl::gemm(ta != 0, tb != 0, m, n, k, 2.0, As.data(), lda,
                       Bs.data(), ldb, 3.0, C.data(), n);
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) {
          double acc = 0.0;
          for (int kk = 0; kk < k; ++kk)
            acc += A[static_cast<std::size_t>(i) * k + kk] * Bm[static_cast<std::size_t>(kk) * n + j];
          const double want = 2.0 * acc + 3.0 * 0.5;
          CHECK(C[static_cast<std::size_t>(i) * n + j] ==
                doctest::Approx(want).epsilon(1e-12));
        }
    }
}

TEST_CASE("gemm: float path agrees with double path") {
  Rng rng(17);
  const int m = 16, n = 12, k = 20;
  std::vector<float> Af(static_cast<std::size_t>(m) * k), Bf(static_cast<std::size_t>(k) * n);
  std::vector<double> Ad, Bd;
  for (auto& v : Af) v = static_cast<float>(rng.normal());
  for (auto& v : Bf) v = static_cast<float>(rng.normal());
  Ad.assign(Af.begin(), Af.end());
  Bd.assign(Bf.begin(), Bf.end());
  std::vector<float> Cf(static_cast<std::size_t>(m) * n, 0.f);
  std::vector<double> Cd(static_cast<std::size_t>(m) * n, 0.0);
  wl::gemm(false, false, m, n, k, 1.f, Af.data(), k, Bf.data(), n, 0.f,
                  Cf.data(), n);
  wl::gemm(false, false, m, n, k, 1.0, Ad.data(), k, Bd.data(), n, 0.0,
                   Cd.data(), n);
  for (std::size_t i = 0; i < Cf.size(); ++i)
    CHECK(static_cast<double>(Cf[i]) == doctest::Approx(Cd[i]).epsilon(1e-4));
}

TEST_CASE("im2col/col2im: mutually adjoint") {
  // <im2col(x), C> == <x, col2im(C)> for random x and C.
  Rng rng(9);
  const int B = 2, C = 3, L = 11, k = 4, stride = 1, pad = 2;
  const int Lout = (L + 2 * pad - k) / stride + 1;
  std::vector<double> x(static_cast<std::size_t>(B) * C * L);
  std::vector<double> cols_rand(static_cast<std::size_t>(B) * Lout * C * k);
  for (auto& v : x) v = rng.normal();
  for (auto& v : cols_rand) v = rng.normal();

  std::vector<double> cols_x;
  wl::im2col_batch<double>(x, B, C, L, k, stride, pad, Lout, cols_x);
  std::vector<double> x_back(x.size(), 0.0);
  wl::col2im_batch<double>(cols_rand, B, C, L, k, stride, pad, Lout, x_back);

  double lhs = 0.0, rhs = 0.0;
  for (std::size_t i = 0; i < cols_x.size(); ++i) lhs += cols_x[i] * cols_rand[i];
  for (std::size_t i = 0; i < x.size(); ++i) rhs += x[i] * x_back[i];
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
}

TEST_CASE("conv1d: frozen reference values") {
  // Reference outputs computed with an independent NumPy implementation.
  auto x = Tensor<double>::from(
      {1, 2, 5}, {0.5, -1.0, 2.0, 0.25, -0.75, 1.5, 0.0, -2.0, 1.0, 0.5});
  auto w = Tensor<double>::from({2, 2, 3}, {1.0, -0.5, 0.25, 0.5, 1.0, -1.0,
                                            -0.25, 0.75, 0.5, 2.0, -1.5, 1.0});
  auto b = Tensor<double>::from({2}, {0.1, -0.2});
  auto y = wl::conv1d(x, w, b, 2, 1);
  REQUIRE(y.shape() == wl::Shape{1, 2, 3});
  const std::vector<double> want = {1.1, -4.8375, 1.725, -2.575, 5.675, 0.425};
  for (std::size_t i = 0; i < want.size(); ++i)
    CHECK(y.data()[i] == doctest::Approx(want[i]).epsilon(1e-12));
}

TEST_CASE("conv1d: hand-checkable small cases") {
  // Identity kernel passes the signal through.
  auto x = Tensor<double>::from({1, 1, 4}, {1, 2, 3, 4});
  auto w1 = Tensor<double>::from({1, 1, 1}, {1.0});
  auto b0 = Tensor<double>::zeros({1});
  auto y1 = wl::conv1d(x, w1, b0, 1, 0);
  CHECK(to_vec(y1.data()) == std::vector<double>{1, 2, 3, 4});

  // Two-tap sum kernel with stride 2: (1+2, 3+4).
  auto w2 = Tensor<double>::from({1, 1, 2}, {1.0, 1.0});
  auto y2 = wl::conv1d(x, w2, b0, 2, 0);
  CHECK(to_vec(y2.data()) == std::vector<double>{3, 7});

  // Zero input: every output element equals its channel's bias.
  auto xz = Tensor<double>::zeros({2, 1, 6});
  auto w3 = Tensor<double>::from({2, 1, 3}, {1, -2, 3, 4, 5, -6});
  auto b3 = Tensor<double>::from({2}, {0.25, -1.5});
  auto y3 = wl::conv1d(xz, w3, b3, 1, 1);
  for (int bb = 0; bb < 2; ++bb)
    for (int c = 0; c < 2; ++c)
      for (int l = 0; l < 6; ++l)
        CHECK(y3.data()[(bb * 2 + c) * 6 + l] == b3.data()[c]);
}

TEST_CASE("deconv1d: overlap-add small case") {
  // Input (1,1), all-ones kernel k=4, stride 2, padding 1: the two scattered
  // kernels overlap in the middle, giving (1,2,2,1) after cropping.
  auto x = Tensor<double>::from({1, 1, 2}, {1.0, 1.0});
  auto w = Tensor<double>::full({1, 1, 4}, 1.0);
  auto b = Tensor<double>::zeros({1});
  auto y = wl::deconv1d(x, w, b, 2, 1);
  REQUIRE(y.shape() == wl::Shape{1, 1, 4});
  auto want = wltest::ref_deconv1d(to_vec(x.data()), 1, 1, 2, to_vec(w.data()),
                                   1, 4, to_vec(b.data()), 2, 1);
  CHECK(to_vec(y.data()) == std::vector<double>(want.begin(), want.end()));
  CHECK(to_vec(y.data()) == std::vector<double>{1, 2, 2, 1});
}

TEST_CASE("conv1d: randomized shapes match the direct reference") {
  Rng rng(31);
  const struct {
    int B, Cin, L, Cout, k, s, p;
  } cases[] = {
      {1, 1, 8, 1, 1, 1, 0}, {2, 3, 16, 4, 4, 2, 1}, {3, 2, 10, 5, 3, 1, 1},
      {2, 4, 12, 2, 5, 1, 2}, {1, 8, 256, 16, 4, 2, 1},
  };
  for (const auto& cs : cases) {
    auto x = Tensor<float>::randn({cs.B, cs.Cin, cs.L}, rng);
    auto w = Tensor<float>::randn({cs.Cout, cs.Cin, cs.k}, rng);
    auto b = Tensor<float>::randn({cs.Cout}, rng);
    auto y = wl::conv1d(x, w, b, cs.s, cs.p);
    auto want = wltest::ref_conv1d(to_vec(x.data()), cs.B, cs.Cin, cs.L,
                                   to_vec(w.data()), cs.Cout, cs.k,
                                   to_vec(b.data()), cs.s, cs.p);
    CHECK(wltest::max_abs_diff(y.data(), want) < 1e-4);
  }
}

TEST_CASE("conv1d: shape and geometry validation") {
  auto x = Tensor<float>::zeros({1, 2, 8});
  auto w = Tensor<float>::zeros({3, 2, 4});
  auto b = Tensor<float>::zeros({3});
  CHECK_NOTHROW(wl::conv1d(x, w, b, 2, 1));
  // channel mismatch
  auto w_bad = Tensor<float>::zeros({3, 4, 4});
  CHECK_THROWS_AS(wl::conv1d(x, w_bad, b, 2, 1), wl::ShapeError);
  // bias mismatch
  auto b_bad = Tensor<float>::zeros({2});
  CHECK_THROWS_AS(wl::conv1d(x, w, b_bad, 2, 1), wl::ShapeError);
  // floor semantics: (8 + 2 - 4) / 4 + 1 = 2 output positions
  CHECK(wl::conv1d(x, w, b, 4, 1).shape() == wl::Shape{1, 3, 2});
  // kernel larger than padded input
  auto w_big = Tensor<float>::zeros({3, 2, 11});
  CHECK_THROWS_AS(wl::conv1d(x, w_big, b, 1, 1), wl::GeometryError);
  // nonsense stride
  CHECK_THROWS_AS(wl::conv1d(x, w, b, 0, 1), wl::GeometryError);
}

TEST_CASE("conv1d: gradients match finite differences") {
  Rng rng(71);
  auto x = Tensor<double>::randn({2, 3, 10}, rng);
  auto w = Tensor<double>::randn({4, 3, 3}, rng);
  auto b = Tensor<double>::randn({4}, rng);
  std::vector<double> coeffs(2 * 4 * 10);
  for (auto& c : coeffs) c = rng.normal();
  auto loss_fn = [&](Tape<double>* tape) {
    auto y = wl::conv1d(x, w, b, 1, 1, tape);
    return wltest::weighted_sum(y, coeffs, tape);
  };
  auto res = wl::grad_check<double>(loss_fn, {x, w, b});
  CAPTURE(res.worst_input);
  CAPTURE(res.worst_analytic);
  CAPTURE(res.worst_numeric);
  CHECK(res.max_rel_err < 1e-7);
}

TEST_CASE("deconv1d: frozen reference values") {
  // Reference outputs computed with an independent NumPy implementation.
  auto x = Tensor<double>::from(
      {1, 2, 5}, {0.5, -1.0, 2.0, 0.25, -0.75, 1.5, 0.0, -2.0, 1.0, 0.5});
  auto w = Tensor<double>::from(
      {2, 1, 4}, {0.5, -1.0, 1.5, 0.25, 1.0, 0.75, -0.5, -0.25});
  auto b = Tensor<double>::from({1}, {0.05});
  auto y = wl::deconv1d(x, w, b, 2, 1);
  REQUIRE(y.shape() == wl::Shape{1, 1, 10});
  const std::vector<double> want = {0.675, -0.45, 0.8,  -2.45, -3.7,
                                    5.175, 1.55,  0.05, 0.9875, -1.325};
  for (std::size_t i = 0; i < want.size(); ++i)
    CHECK(y.data()[i] == doctest::Approx(want[i]).epsilon(1e-12));
}

TEST_CASE("deconv1d: randomized shapes match the direct reference") {
  Rng rng(33);
  const struct {
    int B, Cin, L, Cout, k, s, p;
  } cases[] = {
      {1, 1, 4, 1, 4, 1, 0}, {2, 4, 8, 3, 4, 2, 1}, {3, 2, 6, 2, 3, 1, 1},
      {1, 16, 32, 8, 4, 2, 1},
  };
  for (const auto& cs : cases) {
    auto x = Tensor<float>::randn({cs.B, cs.Cin, cs.L}, rng);
    auto w = Tensor<float>::randn({cs.Cin, cs.Cout, cs.k}, rng);
    auto b = Tensor<float>::randn({cs.Cout}, rng);
    auto y = wl::deconv1d(x, w, b, cs.s, cs.p);
    auto want = wltest::ref_deconv1d(to_vec(x.data()), cs.B, cs.Cin, cs.L,
                                     to_vec(w.data()), cs.Cout, cs.k,
                                     to_vec(b.data()), cs.s, cs.p);
    CHECK(wltest::max_abs_diff(y.data(), want) < 1e-4);
  }
}

TEST_CASE("deconv1d: adjoint of conv1d with the shared weight buffer") {
  // <deconv(z, W), y> == <z, conv(y, W-as-conv-weight)> with zero biases.
  Rng rng(55);
  const int B = 2, Cin = 3, Lin = 6, Cout = 4, k = 4, s = 2, p = 1;
  const int Lout = (Lin - 1) * s - 2 * p + k;
  auto z = Tensor<double>::randn({B, Cin, Lin}, rng);
  auto wd = Tensor<double>::randn({Cin, Cout, k}, rng);
  auto y = Tensor<double>::randn({B, Cout, Lout}, rng);
  auto zero_cout = Tensor<double>::zeros({Cout});
  auto zero_cin = Tensor<double>::zeros({Cin});

  auto dz = wl::deconv1d(z, wd, zero_cout, s, p);
  // Same buffer, reinterpreted as a conv weight [out=Cin, in=Cout, k].
  auto wc = Tensor<double>::from({Cin, Cout, k}, to_vec(wd.data()));
  auto cy = wl::conv1d(y, wc, zero_cin, s, p);

  double lhs = 0.0, rhs = 0.0;
  for (std::int64_t i = 0; i < dz.numel(); ++i)
    lhs += dz.data()[i] * y.data()[i];
  for (std::int64_t i = 0; i < cy.numel(); ++i)
    rhs += cy.data()[i] * z.data()[i];
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
}

TEST_CASE("deconv1d: geometry validation") {
  auto x = Tensor<float>::zeros({1, 2, 4});
  auto w = Tensor<float>::zeros({2, 3, 4});
  auto b = Tensor<float>::zeros({3});
  CHECK_NOTHROW(wl::deconv1d(x, w, b, 2, 1));
  auto w_bad = Tensor<float>::zeros({3, 3, 4});
  CHECK_THROWS_AS(wl::deconv1d(x, w_bad, b, 2, 1), wl::ShapeError);
  // output length (1-1)*1 - 2*3 + 4 = -2
  auto x1 = Tensor<float>::zeros({1, 2, 1});
  CHECK_THROWS_AS(wl::deconv1d(x1, w, b, 1, 3), wl::GeometryError);
}

TEST_CASE("deconv1d: gradients match finite differences") {
  Rng rng(72);
  auto x = Tensor<double>::randn({2, 4, 5}, rng);
  auto w = Tensor<double>::randn({4, 3, 4}, rng);
  auto b = Tensor<double>::randn({3}, rng);
  const int Lout = (5 - 1) * 2 - 2 * 1 + 4;
  std::vector<double> coeffs(static_cast<std::size_t>(2) * 3 * Lout);
  for (auto& c : coeffs) c = rng.normal();
  auto loss_fn = [&](Tape<double>* tape) {
    auto y = wl::deconv1d(x, w, b, 2, 1, tape);
    return wltest::weighted_sum(y, coeffs, tape);
  };
  auto res = wl::grad_check<double>(loss_fn, {x, w, b});
  CHECK(res.max_rel_err < 1e-7);
}

TEST_CASE("batchnorm1d: frozen training-mode reference") {
  // Reference computed with an independent NumPy implementation:
  // x = [[1,2,3]],[[4,5,7]], gamma=1.5, beta=-0.5, eps=1e-5, momentum=0.1.
  auto x = Tensor<double>::from({2, 1, 3}, {1, 2, 3, 4, 5, 7});
  auto gamma = Tensor<double>::from({1}, {1.5});
  auto beta = Tensor<double>::from({1}, {-0.5});
  auto rm = Tensor<double>::zeros({1});
  auto rv = Tensor<double>::full({1}, 1.0);
  wl::BatchNormOpts opts;
  auto y = wl::batchnorm1d(x, gamma, beta, rm, rv, Mode::Train, opts);
  const std::vector<double> want = {-2.5283676034, -1.7677297522,
                                    -1.0070919009, -0.2464540496,
                                    0.5141838017,  2.0354595043};
  for (std::size_t i = 0; i < want.size(); ++i)
    CHECK(y.data()[i] == doctest::Approx(want[i]).epsilon(1e-9));
  CHECK(rm.data()[0] == doctest::Approx(0.3666666667).epsilon(1e-9));
  CHECK(rv.data()[0] == doctest::Approx(1.3666666667).epsilon(1e-9));
}

TEST_CASE("batchnorm1d: eval mode uses running statistics") {
  auto x = Tensor<double>::from({2, 1, 3}, {1, 2, 3, 4, 5, 7});
  auto gamma = Tensor<double>::from({1}, {1.5});
  auto beta = Tensor<double>::from({1}, {-0.5});
  auto rm = Tensor<double>::full({1}, 1.0);
  auto rv = Tensor<double>::full({1}, 4.0);
  wl::BatchNormOpts opts;
  auto y = wl::batchnorm1d(x, gamma, beta, rm, rv, Mode::Eval, opts);
  const std::vector<double> want = {-0.5,         0.2499990625, 0.999998125,
                                    1.7499971875, 2.49999625,   3.999994375};
  for (std::size_t i = 0; i < want.size(); ++i)
    CHECK(y.data()[i] == doctest::Approx(want[i]).epsilon(1e-9));
  // Eval never touches the running stats.
  CHECK(rm.data()[0] == 1.0);
  CHECK(rv.data()[0] == 4.0);
}

TEST_CASE("batchnorm1d: update_running=false freezes the estimates") {
  Rng rng(3);
  auto x = Tensor<float>::randn({4, 2, 8}, rng);
  auto gamma = Tensor<float>::full({2}, 1.0f);
  auto beta = Tensor<float>::zeros({2});
  auto rm = Tensor<float>::full({2}, 0.25f);
  auto rv = Tensor<float>::full({2}, 2.0f);
  wl::BatchNormOpts opts;
  opts.update_running = false;
  auto y = wl::batchnorm1d(x, gamma, beta, rm, rv, Mode::Train, opts);
  CHECK(rm.data()[0] == 0.25f);
  CHECK(rv.data()[1] == 2.0f);
  // Batch statistics still normalize: per-channel mean ~0, var ~1.
  const int B = 4, C = 2, L = 8;
  for (int c = 0; c < C; ++c) {
    double s = 0.0, s2 = 0.0;
    for (int b = 0; b < B; ++b)
      for (int l = 0; l < L; ++l) {
        const double v = y.data()[(static_cast<std::size_t>(b) * C + c) * L + l];
        s += v;
        s2 += v * v;
      }
    const double mean = s / (B * L);
    CHECK(std::abs(mean) < 1e-5);
    CHECK(s2 / (B * L) - mean * mean == doctest::Approx(1.0).epsilon(1e-3));
  }
}

TEST_CASE("batchnorm1d: gradients match finite differences (train mode)") {
  Rng rng(73);
  auto x = Tensor<double>::randn({3, 2, 4}, rng);
  auto gamma = Tensor<double>::randn({2}, rng, 1.0, 0.1);
  auto beta = Tensor<double>::randn({2}, rng, 0.0, 0.1);
  std::vector<double> coeffs(3 * 2 * 4);
  for (auto& c : coeffs) c = rng.normal();
  wl::BatchNormOpts opts;
  opts.update_running = false;  // keep loss_fn free of side effects
  auto rm = Tensor<double>::zeros({2});
  auto rv = Tensor<double>::full({2}, 1.0);
  auto loss_fn = [&](Tape<double>* tape) {
    auto y = wl::batchnorm1d(x, gamma, beta, rm, rv, Mode::Train, opts, tape);
    return wltest::weighted_sum(y, coeffs, tape);
  };
  auto res = wl::grad_check<double>(loss_fn, {x, gamma, beta});
  CHECK(res.max_rel_err < 1e-6);
}

TEST_CASE("batchnorm1d: gradients match finite differences (eval mode)") {
  Rng rng(74);
  auto x = Tensor<double>::randn({2, 3, 4}, rng);
  auto gamma = Tensor<double>::randn({3}, rng, 1.0, 0.1);
  auto beta = Tensor<double>::randn({3}, rng, 0.0, 0.1);
  auto rm = Tensor<double>::randn({3}, rng, 0.0, 0.5);
  auto rv = Tensor<double>::full({3}, 1.5);
  std::vector<double> coeffs(2 * 3 * 4);
  for (auto& c : coeffs) c = rng.normal();
  wl::BatchNormOpts opts;
  auto loss_fn = [&](Tape<double>* tape) {
    auto y = wl::batchnorm1d(x, gamma, beta, rm, rv, Mode::Eval, opts, tape);
    return wltest::weighted_sum(y, coeffs, tape);
  };
  auto res = wl::grad_check<double>(loss_fn, {x, gamma, beta});
  CHECK(res.max_rel_err < 1e-8);
}

TEST_CASE("fully_connected: forward matches direct loops and validates shapes") {
  Rng rng(21);
  auto x = Tensor<double>::randn({3, 5}, rng);
  auto w = Tensor<double>::randn({4, 5}, rng);
  auto b = Tensor<double>::randn({4}, rng);
  auto y = wl::fully_connected(x, w, b);
  REQUIRE(y.shape() == wl::Shape{3, 4});
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 4; ++j) {
      double acc = b.data()[j];
      for (int kk = 0; kk < 5; ++kk)
        acc += x.data()[i * 5 + kk] * w.data()[j * 5 + kk];
      CHECK(y.data()[i * 4 + j] == doctest::Approx(acc).epsilon(1e-12));
    }
  auto w_bad = Tensor<double>::zeros({4, 6});
  CHECK_THROWS_AS(wl::fully_connected(x, w_bad, b), wl::ShapeError);
}

TEST_CASE("fully_connected: gradients match finite differences") {
  Rng rng(75);
  auto x = Tensor<double>::randn({4, 6}, rng);
  auto w = Tensor<double>::randn({3, 6}, rng);
  auto b = Tensor<double>::randn({3}, rng);
  std::vector<double> coeffs(4 * 3);
  for (auto& c : coeffs) c = rng.normal();
  auto loss_fn = [&](Tape<double>* tape) {
    auto y = wl::fully_connected(x, w, b, tape);
    return wltest::weighted_sum(y, coeffs, tape);
  };
  auto res = wl::grad_check<double>(loss_fn, {x, w, b});
  CHECK(res.max_rel_err < 1e-8);
}

TEST_CASE("activations: point values") {
  auto x = Tensor<double>::from({5}, {-2.0, -0.5, 0.0, 0.5, 2.0});
  auto r = wl::relu(x);
  CHECK(to_vec(r.data()) == std::vector<double>{0.0, 0.0, 0.0, 0.5, 2.0});

  auto lr = wl::leaky_relu(x, 0.2);
  const std::vector<double> lr_want = {-0.4, -0.1, 0.0, 0.5, 2.0};
  for (std::size_t i = 0; i < lr_want.size(); ++i)
    CHECK(lr.data()[i] == doctest::Approx(lr_want[i]).epsilon(1e-12));

  auto th = wl::tanh(x);
  for (std::size_t i = 0; i < 5; ++i)
    CHECK(th.data()[i] ==
          doctest::Approx(std::tanh(x.data()[i])).epsilon(1e-12));

  auto sg = wl::sigmoid(x);
  for (std::size_t i = 0; i < 5; ++i)
    CHECK(sg.data()[i] ==
          doctest::Approx(1.0 / (1.0 + std::exp(-x.data()[i]))).epsilon(1e-12));
}

TEST_CASE("activations: gradients match finite differences") {
  Rng rng(76);
  // Keep points away from the ReLU kink so central differences are valid.
  std::vector<double> vals(64);
  for (auto& v : vals) {
    v = rng.normal();
    if (std::abs(v) < 0.05) v = 0.1;
  }
  auto x = Tensor<double>::from({4, 16}, vals);
  std::vector<double> coeffs(64);
  for (auto& c : coeffs) c = rng.normal();

  auto check_act = [&](auto act) {
    auto loss_fn = [&](Tape<double>* tape) {
      return wltest::weighted_sum(act(x, tape), coeffs, tape);
    };
    auto res = wl::grad_check<double>(loss_fn, {x});
    CHECK(res.max_rel_err < 1e-8);
  };
  check_act([](const Tensor<double>& t, Tape<double>* tp) { return wl::relu(t, tp); });
  check_act([](const Tensor<double>& t, Tape<double>* tp) {
    return wl::leaky_relu(t, 0.2, tp);
  });
  check_act([](const Tensor<double>& t, Tape<double>* tp) { return wl::tanh(t, tp); });
  check_act([](const Tensor<double>& t, Tape<double>* tp) { return wl::sigmoid(t, tp); });
}

TEST_CASE("dropout: identity cases share storage and consume no randomness") {
  Rng rng(1);
  auto x = Tensor<float>::randn({2, 8}, rng);
  Rng dr(99);
  const std::uint64_t before = dr.next_u64();
  Rng dr2(99);
  (void)dr2.next_u64();

  auto y_eval = wl::dropout(x, 0.5, Mode::Eval, dr2);
  CHECK(y_eval.id() == x.id());
  auto y_p0 = wl::dropout(x, 0.0, Mode::Train, dr2);
  CHECK(y_p0.id() == x.id());
  CHECK(dr2.next_u64() == dr.next_u64());
  (void)before;

  CHECK_THROWS_AS(wl::dropout(x, 1.0, Mode::Train, dr2),
                  wl::ValueError);
  CHECK_THROWS_AS(wl::dropout(x, -0.1, Mode::Train, dr2),
                  wl::ValueError);
}

TEST_CASE("dropout: train mode masks and rescales, reproducibly") {
  Rng rng(2);
  auto x = Tensor<float>::full({100, 100}, 1.0f);
  Rng d1(7), d2(7);
  auto y1 = wl::dropout(x, 0.5, Mode::Train, d1);
  auto y2 = wl::dropout(x, 0.5, Mode::Train, d2);
  CHECK(to_vec(y1.data()) == to_vec(y2.data()));

  int kept = 0;
  for (float v : y1.data()) {
    CHECK((v == 0.0f || v == 2.0f));
    kept += v != 0.0f;
  }
  // Keep rate concentrates near 0.5 over 10^4 draws.
  CHECK(kept > 4700);
  CHECK(kept < 5300);
}

TEST_CASE("dropout: backward applies the same mask") {
  Rng rng(4);
  auto x = Tensor<double>::randn({3, 7}, rng);
  x.set_requires_grad(true);
  Tape<double> tape;
  Rng dr(11);
  auto y = wl::dropout(x, 0.3, Mode::Train, dr, &tape);
  std::vector<double> coeffs(21, 1.0);
  auto s = wltest::weighted_sum(y, coeffs, &tape);
  tape.backward(s);
  for (std::size_t i = 0; i < 21; ++i) {
    const double mask = y.data()[i] == 0.0 ? 0.0 : 1.0 / 0.7;
    CHECK(x.grad()[i] == doctest::Approx(mask).epsilon(1e-12));
  }
}

TEST_CASE("flatten: preserves order and routes gradients back") {
  auto x = Tensor<double>::from({2, 2, 3},
                                {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12});
  x.set_requires_grad(true);
  Tape<double> tape;
  auto y = wl::flatten(x, &tape);
  REQUIRE(y.shape() == wl::Shape{2, 6});
  CHECK(to_vec(y.data()) ==
        std::vector<double>{1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12});
  std::vector<double> coeffs(12);
  for (std::size_t i = 0; i < 12; ++i) coeffs[i] = static_cast<double>(i);
  auto s = wltest::weighted_sum(y, coeffs, &tape);
  tape.backward(s);
  for (std::size_t i = 0; i < 12; ++i)
    CHECK(x.grad()[i] == doctest::Approx(static_cast<double>(i)));
}

TEST_CASE("combine_scalars: value and gradient flow") {
  auto a = Tensor<double>::scalar(2.0, true);
  auto b = Tensor<double>::scalar(-3.0, true);
  Tape<double> tape;
  auto y = wl::combine_scalars(a, 0.7, b, 0.3, &tape);
  CHECK(y.item() == doctest::Approx(0.7 * 2.0 + 0.3 * -3.0).epsilon(1e-15));
  tape.backward(y);
  CHECK(a.grad()[0] == doctest::Approx(0.7));
  CHECK(b.grad()[0] == doctest::Approx(0.3));
  auto v = Tensor<double>::zeros({2});
  CHECK_THROWS_AS(wl::combine_scalars(a, 1.0, v, 1.0),
                  wl::ContractError);
}

TEST_CASE("tape: backward requires a scalar and replays in reverse") {
  auto x = Tensor<double>::from({2}, {1.0, 2.0}, true);
  Tape<double> tape;
  auto y = wl::relu(x, &tape);
  CHECK_THROWS_AS(tape.backward(y), wl::ContractError);
}

TEST_CASE("tape: gradients accumulate until zeroed") {
  auto x = Tensor<double>::from({3}, {1.0, -2.0, 3.0}, true);
  std::vector<double> coeffs = {1.0, 2.0, 3.0};
  for (int pass = 1; pass <= 2; ++pass) {
    Tape<double> tape;
    auto y = wl::leaky_relu(x, 0.5, &tape);
    auto s = wltest::weighted_sum(y, coeffs, &tape);
    tape.backward(s);
    CHECK(x.grad()[0] == doctest::Approx(1.0 * pass));
    CHECK(x.grad()[1] == doctest::Approx(2.0 * 0.5 * pass));
    CHECK(x.grad()[2] == doctest::Approx(3.0 * pass));
  }
  x.zero_grad();
  CHECK(x.grad()[0] == 0.0);
}

TEST_CASE("tape: null tape or requires_grad=false records nothing") {
  Rng rng(8);
  auto x = Tensor<float>::randn({2, 3, 8}, rng);  // requires_grad = false
  auto w = Tensor<float>::randn({2, 3, 3}, rng);
  auto b = Tensor<float>::zeros({2});
  Tape<float> tape;
  auto y = wl::conv1d(x, w, b, 1, 1, &tape);
  CHECK(tape.size() == 0);
  CHECK(!y.requires_grad());

  w.set_requires_grad(true);
  auto y2 = wl::conv1d(x, w, b, 1, 1, &tape);
  CHECK(tape.size() == 1);
  CHECK(y2.requires_grad());
  // Outputs of taped ops propagate requires_grad downstream.
  auto y3 = wl::relu(y2, &tape);
  CHECK(tape.size() == 2);
  CHECK(y3.requires_grad());
  // Inference path with a null tape leaves everything untaped.
  auto y4 = wl::conv1d(x, w, b, 1, 1);
  CHECK(!y4.requires_grad());
}

TEST_CASE("tape: inputs that do not require gradients receive none") {
  Rng rng(12);
  auto x = Tensor<double>::randn({1, 2, 6}, rng);  // e.g. a data batch
  auto w = Tensor<double>::randn({2, 2, 3}, rng);
  w.set_requires_grad(true);
  auto b = Tensor<double>::zeros({2});
  b.set_requires_grad(true);
  Tape<double> tape;
  auto y = wl::conv1d(x, w, b, 1, 1, &tape);
  std::vector<double> coeffs(static_cast<std::size_t>(y.numel()), 1.0);
  auto s = wltest::weighted_sum(y, coeffs, &tape);
  tape.backward(s);
  CHECK(!x.has_grad());
  CHECK(w.has_grad());
  CHECK(b.has_grad());
}

TEST_CASE("adam: frozen trajectory matches the reference implementation") {
  // Reference computed with an independent NumPy implementation:
  // w0=0.5, grads {1, -0.5, 0.25, 2, -1}, lr=0.1, b1=0.9, b2=0.999, eps=1e-8.
  auto w = Tensor<double>::scalar(0.5, true);
  wl::Adam<double>::Config cfg;
  cfg.lr = 0.1;
  cfg.beta1 = 0.9;
  cfg.beta2 = 0.999;
  cfg.eps = 1e-8;
  wl::Adam<double> opt({w}, cfg);
  const std::vector<double> grads = {1.0, -0.5, 0.25, 2.0, -1.0};
  const std::vector<double> want = {0.400000001000000, 0.373366297370903,
                                    0.339323383064846, 0.275034191525884,
                                    0.246917862916076};
  for (std::size_t i = 0; i < grads.size(); ++i) {
    opt.zero_grad();
    w.grad()[0] += grads[i];
    opt.step();
    CHECK(w.data()[0] == doctest::Approx(want[i]).epsilon(1e-12));
  }
  CHECK(opt.step_count() == 5);
}

TEST_CASE("adam: first-step magnitude is the learning rate") {
  // With bias correction the first update is lr * g/(|g| + eps'), i.e. ~lr.
  auto w = Tensor<double>::scalar(0.0, true);
  wl::Adam<double>::Config cfg;
  cfg.lr = 2e-4;
  cfg.beta1 = 0.5;
  wl::Adam<double> opt({w}, cfg);
  w.grad()[0] += 3.0;
  opt.step();
  CHECK(w.data()[0] == doctest::Approx(-2e-4).epsilon(1e-6));
  // Frozen continuation for constant gradient 3.0.
  w.grad()[0] = 0.0;
  w.grad()[0] += 3.0;
  opt.step();
  CHECK(w.data()[0] == doctest::Approx(-0.000399999998667).epsilon(1e-9));
}

TEST_CASE("adam: rejects invalid hyperparameters") {
  auto w = Tensor<float>::scalar(0.0f, true);
  wl::Adam<float>::Config bad;
  bad.lr = 0.0;
  CHECK_THROWS_AS(wl::Adam<float>({w}, bad), wl::ValueError);
  wl::Adam<float>::Config bad2;
  bad2.beta1 = 1.0;
  CHECK_THROWS_AS(wl::Adam<float>({w}, bad2), wl::ValueError);
}

TEST_CASE("grad_check: flags a deliberately wrong gradient") {
  auto x = Tensor<double>::from({2}, {0.3, -0.7});
  auto loss_fn = [&](Tape<double>* tape) {
    // y = sum(x^2) computed manually, with backward off by 10%.
    double acc = 0.0;
    for (double v : x.data()) acc += v * v;
    const bool taped = tape && x.requires_grad();
    auto s = Tensor<double>::from({1}, {acc}, taped);
    if (taped) {
      Tensor<double> xc = x, sc = s;
      tape->record([xc, sc]() mutable {
        const double g = sc.grad()[0];
        auto gx = xc.grad();
        auto xd = xc.data();
        for (std::size_t i = 0; i < gx.size(); ++i)
          gx[i] += 1.1 * 2.0 * xd[i] * g;  // wrong on purpose
      });
    }
    return s;
  };
  auto res = wl::grad_check<double>(loss_fn, {x});
  CHECK(res.max_rel_err > 0.05);
}

TEST_CASE("grad_check: subsampling stays within bounds and is deterministic") {
  Rng rng(91);
  auto x = Tensor<double>::randn({40, 40}, rng);  // 1600 > 1000 coords
  std::vector<double> coeffs(1600);
  for (auto& c : coeffs) c = rng.normal();
  auto loss_fn = [&](Tape<double>* tape) {
    return wltest::weighted_sum(wl::tanh(x, tape), coeffs, tape);
  };
  auto r1 = wl::grad_check<double>(loss_fn, {x}, 1e-5, 1000, 5);
  auto r2 = wl::grad_check<double>(loss_fn, {x}, 1e-5, 1000, 5);
  CHECK(r1.coords_checked == 1000);
  CHECK(r1.coords_checked == r2.coords_checked);
  CHECK(r1.max_rel_err == r2.max_rel_err);
  CHECK(r1.max_rel_err < 1e-8);
}

TEST_CASE("composite: conv -> bn -> activation -> fc chain gradient check") {
  Rng rng(77);
  auto x = Tensor<double>::randn({2, 2, 8}, rng);
  auto w1 = Tensor<double>::randn({3, 2, 4}, rng, 0.0, 0.3);
  auto b1 = Tensor<double>::zeros({3});
  auto gamma = Tensor<double>::full({3}, 1.0);
  auto beta = Tensor<double>::zeros({3});
  auto rm = Tensor<double>::zeros({3});
  auto rv = Tensor<double>::full({3}, 1.0);
  auto w2 = Tensor<double>::randn({4, 12}, rng, 0.0, 0.3);
  auto b2 = Tensor<double>::zeros({4});
  std::vector<double> coeffs(8);
  for (auto& c : coeffs) c = rng.normal();
  wl::BatchNormOpts opts;
  opts.update_running = false;
  auto loss_fn = [&](Tape<double>* tape) {
    auto h = wl::conv1d(x, w1, b1, 2, 1, tape);       // [2,3,4]
    h = wl::batchnorm1d(h, gamma, beta, rm, rv, Mode::Train, opts, tape);
    h = wl::leaky_relu(h, 0.2, tape);
    auto f = wl::flatten(h, tape);                    // [2,12]
    auto o = wl::fully_connected(f, w2, b2, tape);    // [2,4]
    return wltest::weighted_sum(o, coeffs, tape);
  };
  auto res =
      wl::grad_check<double>(loss_fn, {x, w1, gamma, beta, w2, b2});
  CAPTURE(res.worst_input);
  CHECK(res.max_rel_err < 1e-6);
}
