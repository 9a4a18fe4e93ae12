#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <vector>

#include "wl/checkpoint.hpp"
#include "wl/losses.hpp"
#include "wl/models.hpp"
#include "wl/rng.hpp"

using wl::Mode;
using wl::Rng;
using wl::Shape;
using wl::Tensor;

namespace {

// Architecture tables the shape assertions are checked against.
const std::vector<int> kGenOut{512, 256, 128, 64, 32, 16, 8, 1};
const std::vector<int> kDiscOut{8, 16, 32, 64, 128, 256, 512};
const std::vector<int> kDiscLen{256, 128, 64, 32, 16, 8, 4};

std::int64_t expected_gen_params(int latent) {
  std::int64_t n = 0;
  int cin = latent;
  for (std::size_t l = 0; l < kGenOut.size(); ++l) {
    const int cout = kGenOut[l];
    n += static_cast<std::int64_t>(cin) * cout * 4 + cout;  // deconv w + b
    if (l + 1 < kGenOut.size()) n += 2 * cout;              // gamma + beta
    cin = cout;
  }
  return n;
}

std::int64_t expected_disc_params(int num_classes) {
  std::int64_t n = 0;
  int cin = 1;
  for (int cout : kDiscOut) {
    n += static_cast<std::int64_t>(cout) * cin * 4 + cout + 2 * cout;
    cin = cout;
  }
  n += static_cast<std::int64_t>(num_classes + 1) * 2048 + (num_classes + 1);
  return n;
}

std::filesystem::path tmp_dir() {
  auto d = std::filesystem::temp_directory_path() / "wl_models_test";
  std::filesystem::create_directories(d);
  return d;
}

template <typename T>
bool same_values(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape() != b.shape()) return false;
  auto x = a.data(), y = b.data();
  for (std::size_t i = 0; i < x.size(); ++i)
    if (x[i] != y[i]) return false;
  return true;
}

}  // namespace

TEST_CASE("generator construction matches the layer table") {
  auto g = wl::build_generator<float>(100, 1);
  REQUIRE(g.w.size() == 8);
  REQUIRE(g.b.size() == 8);
  REQUIRE(g.bn.size() == 7);
  CHECK(g.w[0].shape() == Shape{100, 512, 4});
  int cin = 100;
  for (std::size_t l = 0; l < 8; ++l) {
    CHECK(g.w[l].shape() == Shape{cin, kGenOut[l], 4});
    CHECK(g.b[l].shape() == Shape{kGenOut[l]});
    if (l < 7) CHECK(g.bn[l].gamma.shape() == Shape{kGenOut[l]});
    cin = kGenOut[l];
  }
  CHECK(g.parameter_count() == expected_gen_params(100));

  // Biases zero, weights spread around 0, gammas around 1.
  for (float v : g.b[0].data()) CHECK(v == 0.0f);
  double wsum = 0.0;
  for (float v : g.w[0].data()) wsum += v;
  CHECK(std::abs(wsum / g.w[0].numel()) < 0.01);
  double gsum = 0.0;
  for (float v : g.bn[0].gamma.data()) gsum += v;
  CHECK(gsum / g.bn[0].gamma.numel() == doctest::Approx(1.0).epsilon(0.02));
  for (float v : g.bn[0].running_mean.data()) CHECK(v == 0.0f);
  for (float v : g.bn[0].running_var.data()) CHECK(v == 1.0f);

  auto g2 = wl::build_generator<float>(100, 1);
  auto g3 = wl::build_generator<float>(100, 2);
  CHECK(same_values(g.w[3], g2.w[3]));
  CHECK_FALSE(same_values(g.w[3], g3.w[3]));

  CHECK_THROWS_AS(wl::build_generator<float>(0, 1), wl::ValueError);
}

TEST_CASE("discriminator construction matches the layer table") {
  auto d = wl::build_discriminator<float>(3, 1);
  REQUIRE(d.w.size() == 7);
  REQUIRE(d.bn.size() == 7);
  int cin = 1;
  for (std::size_t l = 0; l < 7; ++l) {
    CHECK(d.w[l].shape() == Shape{kDiscOut[l], cin, 4});
    cin = kDiscOut[l];
  }
  CHECK(d.fc_w.shape() == Shape{4, 2048});
  CHECK(d.fc_b.shape() == Shape{4});
  CHECK(d.parameter_count() == expected_disc_params(3));

  auto d2 = wl::build_discriminator<float>(3, 1);
  CHECK(same_values(d.fc_w, d2.fc_w));
  CHECK_THROWS_AS(wl::build_discriminator<float>(1, 1), wl::ValueError);
}

TEST_CASE("generator forward shape and range") {
  auto g = wl::build_generator<float>(100, 7);
  for (int B : {2, 5}) {
    Rng rng(B);
    auto z = wl::sample_latent<float>(B, 100, rng);
    REQUIRE(z.shape() == Shape{B, 100, 1});
    auto y = wl::generator_forward(g, z, Mode::Train);
    REQUIRE(y.shape() == Shape{B, 1, 512});
    for (float v : y.data()) {
      CHECK(v > -1.0f);
      CHECK(v < 1.0f);
    }
  }

  // Eval determinism.
  Rng rng(3);
  auto z = wl::sample_latent<float>(2, 100, rng);
  auto a = wl::generator_forward(g, z, Mode::Eval);
  auto b = wl::generator_forward(g, z, Mode::Eval);
  CHECK(same_values(a, b));

  auto bad = Tensor<float>::zeros({2, 50, 1});
  CHECK_THROWS_AS(wl::generator_forward(g, bad, Mode::Eval), wl::ShapeError);
  auto single = Tensor<float>::zeros({1, 100, 1});
  CHECK_THROWS_AS(wl::generator_forward(g, single, Mode::Train),
                  wl::ContractError);
  CHECK_NOTHROW(wl::generator_forward(g, single, Mode::Eval));
}

TEST_CASE("generator BN running stats update only when asked") {
  auto g = wl::build_generator<float>(100, 7);
  auto before = g.bn[0].running_mean.clone();
  Rng rng(1);
  auto z = wl::sample_latent<float>(4, 100, rng);

  wl::generator_forward<float>(g, z, Mode::Train, nullptr, false);
  CHECK(same_values(g.bn[0].running_mean, before));

  wl::generator_forward(g, z, Mode::Train);
  CHECK_FALSE(same_values(g.bn[0].running_mean, before));

  auto frozen = g.bn[0].running_mean.clone();
  wl::generator_forward(g, z, Mode::Eval);
  CHECK(same_values(g.bn[0].running_mean, frozen));
}

TEST_CASE("discriminator forward: logits, taps, softmax") {
  auto d = wl::build_discriminator<float>(3, 9);
  for (int B : {2, 4}) {
    Rng data_rng(B);
    auto x = Tensor<float>::randn({B, 1, 512}, data_rng, 0.0f, 0.5f);
    Rng drop(77);
    auto out = wl::discriminator_forward(d, x, Mode::Train, drop);
    REQUIRE(out.logits.shape() == Shape{B, 4});
    REQUIRE(out.taps.size() == 7);
    for (std::size_t l = 0; l < 7; ++l) {
      CHECK(out.taps[l].layer == static_cast<int>(l) + 1);
      CHECK(out.taps[l].activations.shape() ==
            Shape{B, kDiscOut[l], kDiscLen[l]});
    }
    // Softmax over each row sums to one.
    auto p = wl::fake_probability(out.logits);
    for (int bi = 0; bi < B; ++bi) {
      double lse = 0.0, mx = out.logits.data()[bi * 4];
      for (int j = 1; j < 4; ++j)
        mx = std::max(mx, static_cast<double>(out.logits.data()[bi * 4 + j]));
      for (int j = 0; j < 4; ++j)
        lse += std::exp(out.logits.data()[bi * 4 + j] - mx);
      double total = 0.0;
      for (int j = 0; j < 4; ++j)
        total += std::exp(out.logits.data()[bi * 4 + j] - mx) / lse;
      CHECK(total == doctest::Approx(1.0).epsilon(1e-6));
      CHECK(p[static_cast<std::size_t>(bi)] >= 0.0f);
      CHECK(p[static_cast<std::size_t>(bi)] <= 1.0f);
    }
  }

  // Eval repeatability, and independence from the dropout stream.
  Rng data_rng(5);
  auto x = Tensor<float>::randn({3, 1, 512}, data_rng, 0.0f, 0.5f);
  Rng r1(1), r2(999);
  auto e1 = wl::discriminator_forward(d, x, Mode::Eval, r1);
  auto e2 = wl::discriminator_forward(d, x, Mode::Eval, r2);
  CHECK(same_values(e1.logits, e2.logits));
  for (std::size_t l = 0; l < 7; ++l)
    CHECK(same_values(e1.taps[l].activations, e2.taps[l].activations));

  // Train mode with identical streams reproduces; different streams differ.
  Rng s1(42), s2(42), s3(43);
  auto t1 = wl::discriminator_forward<float>(d, x, Mode::Train, s1, nullptr, false);
  auto t2 = wl::discriminator_forward<float>(d, x, Mode::Train, s2, nullptr, false);
  auto t3 = wl::discriminator_forward<float>(d, x, Mode::Train, s3, nullptr, false);
  CHECK(same_values(t1.logits, t2.logits));
  CHECK_FALSE(same_values(t1.logits, t3.logits));

  auto bad = Tensor<float>::zeros({2, 1, 256});
  Rng r(0);
  CHECK_THROWS_AS(wl::discriminator_forward(d, bad, Mode::Eval, r),
                  wl::ShapeError);
}

TEST_CASE("classification rule: argmax over real classes only") {
  std::vector<double> a{9, 1, 1, 99};
  CHECK(wl::argmax_class<double>(a, 3) == 0);  // fake logit ignored
  std::vector<double> b{1, 1, 1, 0};
  CHECK(wl::argmax_class<double>(b, 3) == 0);  // tie -> lowest index
  std::vector<double> c{0, 5, 2, 0};
  CHECK(wl::argmax_class<double>(c, 3) == 1);
  std::vector<double> d{0, 2, 5, -3};
  CHECK(wl::argmax_class<double>(d, 3) == 2);
  // Invariance to the fake logit alone.
  std::vector<double> e{0.3, 0.1, 0.2, -50};
  std::vector<double> f{0.3, 0.1, 0.2, +50};
  CHECK(wl::argmax_class<double>(e, 3) == wl::argmax_class<double>(f, 3));
  CHECK_THROWS_AS(wl::argmax_class<double>(std::vector<double>{1, 2}, 3),
                  wl::ShapeError);
}

TEST_CASE("classify over a batch is deterministic and in range") {
  auto d = wl::build_discriminator<float>(3, 2);
  Rng rng(8);
  auto x = Tensor<float>::randn({6, 1, 512}, rng, 0.0f, 0.5f);
  auto c1 = wl::classify(d, x);
  auto c2 = wl::classify(d, x);
  REQUIRE(c1.size() == 6);
  CHECK(c1 == c2);
  for (int c : c1) {
    CHECK(c >= 0);
    CHECK(c < 3);
  }
  // classify must not disturb BN running statistics (eval mode).
  auto rm = d.bn[0].running_mean.clone();
  wl::classify(d, x);
  CHECK(same_values(d.bn[0].running_mean, rm));
}

TEST_CASE("checkpoint round-trip restores generator and discriminator") {
  const auto path = (tmp_dir() / "pair.wlsg").string();
  auto g = wl::build_generator<float>(100, 3);
  auto d = wl::build_discriminator<float>(3, 4);
  // Touch the running stats so they differ from initialization.
  Rng rng(1);
  auto z = wl::sample_latent<float>(4, 100, rng);
  auto fake = wl::generator_forward(g, z, Mode::Train);
  Rng drop(2);
  wl::discriminator_forward(d, fake, Mode::Train, drop);

  auto named = g.named_tensors();
  for (auto& nt : d.named_tensors()) named.push_back(nt);
  wl::save_checkpoint(path, named);

  auto g2 = wl::build_generator<float>(100, 99);
  auto d2 = wl::build_discriminator<float>(3, 98);
  auto named2 = g2.named_tensors();
  for (auto& nt : d2.named_tensors()) named2.push_back(nt);
  const auto ckpt = wl::read_checkpoint(path);
  CHECK_FALSE(ckpt.has_adam);
  wl::load_tensors(ckpt, named2);

  for (std::size_t l = 0; l < 8; ++l) CHECK(same_values(g.w[l], g2.w[l]));
  for (std::size_t l = 0; l < 7; ++l) {
    CHECK(same_values(g.bn[l].running_mean, g2.bn[l].running_mean));
    CHECK(same_values(d.bn[l].running_var, d2.bn[l].running_var));
    CHECK(same_values(d.w[l], d2.w[l]));
  }
  CHECK(same_values(d.fc_w, d2.fc_w));

  // The restored model behaves identically.
  auto y1 = wl::generator_forward(g, z, Mode::Eval);
  auto y2 = wl::generator_forward(g2, z, Mode::Eval);
  CHECK(same_values(y1, y2));
}

TEST_CASE("checkpoint carries Adam state behind the flag byte") {
  const auto path = (tmp_dir() / "adam.wlsg").string();
  auto g = wl::build_generator<float>(100, 3);
  wl::Adam<float>::Config cfg;
  wl::Adam<float> opt(g.trainable(), cfg);
  // Fabricate a step so moments are nonzero.
  for (auto& p : opt.params())
    for (auto& gr : const_cast<Tensor<float>&>(p).grad()) gr = 0.01f;
  opt.step();
  REQUIRE(opt.step_count() == 1);

  wl::save_checkpoint(path, g.named_tensors(), &opt);
  const auto ckpt = wl::read_checkpoint(path);
  REQUIRE(ckpt.has_adam);
  CHECK(ckpt.adam_step == 1);
  CHECK(ckpt.adam.size() == opt.params().size());

  auto g2 = wl::build_generator<float>(100, 11);
  wl::Adam<float> opt2(g2.trainable(), cfg);
  wl::load_tensors(ckpt, g2.named_tensors());
  wl::load_adam(ckpt, g2.named_tensors(), opt2);
  CHECK(opt2.step_count() == 1);
  for (std::size_t i = 0; i < opt.params().size(); ++i) {
    CHECK(opt.moment1()[i] == opt2.moment1()[i]);
    CHECK(opt.moment2()[i] == opt2.moment2()[i]);
  }

  // Loading optimizer state from a plain checkpoint must fail.
  const auto plain = (tmp_dir() / "plain.wlsg").string();
  wl::save_checkpoint(plain, g.named_tensors());
  CHECK_THROWS_AS(wl::load_adam(wl::read_checkpoint(plain),
                                g2.named_tensors(), opt2),
                  wl::FormatError);
}

TEST_CASE("checkpoint format errors") {
  const auto dir = tmp_dir();
  const auto good = dir / "good.wlsg";
  auto g = wl::build_generator<float>(100, 5);
  wl::save_checkpoint(good.string(), g.named_tensors());

  std::ifstream in(good, std::ios::binary);
  std::vector<char> bytes(std::istreambuf_iterator<char>(in), {});
  in.close();

  auto write = [&](const char* name, std::vector<char> b) {
    std::ofstream out(dir / name, std::ios::binary | std::ios::trunc);
    out.write(b.data(), static_cast<std::streamsize>(b.size()));
  };

  CHECK_THROWS_AS(wl::read_checkpoint((dir / "nope.wlsg").string()),
                  wl::IoError);

  auto bad = bytes;
  bad[0] = 'Z';
  write("magic.wlsg", bad);
  CHECK_THROWS_AS(wl::read_checkpoint((dir / "magic.wlsg").string()),
                  wl::FormatError);

  bad = bytes;
  bad[4] = 9;
  write("version.wlsg", bad);
  CHECK_THROWS_AS(wl::read_checkpoint((dir / "version.wlsg").string()),
                  wl::FormatError);

  bad = bytes;
  bad.resize(bytes.size() / 2);
  write("trunc.wlsg", bad);
  CHECK_THROWS_AS(wl::read_checkpoint((dir / "trunc.wlsg").string()),
                  wl::FormatError);

  bad = bytes;
  bad.push_back(0);
  write("trail.wlsg", bad);
  CHECK_THROWS_AS(wl::read_checkpoint((dir / "trail.wlsg").string()),
                  wl::FormatError);

  // Loading a generator checkpoint into a discriminator must fail by name.
  auto d = wl::build_discriminator<float>(3, 5);
  CHECK_THROWS_AS(
      wl::load_tensors(wl::read_checkpoint(good.string()), d.named_tensors()),
      wl::FormatError);
}

TEST_CASE("double-precision models save as f32 and reload") {
  const auto path = (tmp_dir() / "f64.wlsg").string();
  auto g = wl::build_generator<double>(100, 21);
  wl::save_checkpoint(path, g.named_tensors());
  auto g2 = wl::build_generator<double>(100, 22);
  wl::load_tensors(wl::read_checkpoint(path), g2.named_tensors());
  auto a = g.w[0].data(), b = g2.w[0].data();
  for (std::size_t i = 0; i < 64; ++i)
    CHECK(b[i] == doctest::Approx(a[i]).epsilon(1e-6));
}
