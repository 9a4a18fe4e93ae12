#include "wl/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

#include "wl/clutter.hpp"
#include "wl/common.hpp"
#include "wl/rng.hpp"
#include "wl/tensor.hpp"

namespace wl {

namespace {

void check_same_length(std::span<const float> a, std::span<const float> b) {
  if (a.empty() || b.empty()) throw ContractError("metric input is empty");
  if (a.size() != b.size())
    throw ShapeError("metric inputs differ in length: " +
                     std::to_string(a.size()) + " vs " +
                     std::to_string(b.size()));
}

}  // namespace

double absolute_distance(std::span<const float> a, std::span<const float> b) {
  check_same_length(a, b);
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    acc += std::abs(static_cast<double>(a[i]) - static_cast<double>(b[i]));
  return acc / static_cast<double>(a.size());
}

double cosine_similarity(std::span<const float> a, std::span<const float> b) {
  check_same_length(a, b);
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double x = a[i], y = b[i];
    dot += x * y;
    na += x * x;
    nb += y * y;
  }
  if (na == 0.0 || nb == 0.0)
    throw ValueError("cosine similarity of a zero vector is undefined");
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

double pearson(std::span<const float> a, std::span<const float> b) {
  check_same_length(a, b);
  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double x = a[i] - ma, y = b[i] - mb;
    dot += x * y;
    na += x * x;
    nb += y * y;
  }
  if (na == 0.0 || nb == 0.0)
    throw ValueError("Pearson correlation of a constant input is undefined");
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

std::vector<std::int64_t> pair_nearest(std::span<const float> synthetic,
                                       std::span<const float> real,
                                       int length) {
  if (length < 1) throw ValueError("signal length must be >= 1");
  if (synthetic.empty() || real.empty())
    throw ContractError("pair_nearest requires nonempty batches");
  const std::size_t len = static_cast<std::size_t>(length);
  if (synthetic.size() % len != 0 || real.size() % len != 0)
    throw ShapeError("batch size is not a multiple of the signal length");
  const std::int64_t ns = static_cast<std::int64_t>(synthetic.size() / len);
  const std::int64_t nr = static_cast<std::int64_t>(real.size() / len);

  std::vector<std::int64_t> pairs(static_cast<std::size_t>(ns));
  for (std::int64_t s = 0; s < ns; ++s) {
    const float* sp = synthetic.data() + s * length;
    double best = 0.0;
    std::int64_t best_r = -1;
    for (std::int64_t r = 0; r < nr; ++r) {
      const float* rp = real.data() + r * length;
      double d = 0.0;
      for (int i = 0; i < length; ++i) {
        const double diff =
            static_cast<double>(sp[i]) - static_cast<double>(rp[i]);
        d += diff * diff;
      }
      if (best_r < 0 || d < best) {  // strict < keeps the lowest index on ties
        best = d;
        best_r = r;
      }
    }
    pairs[static_cast<std::size_t>(s)] = best_r;
  }
  return pairs;
}

SynthesisReport paired_metrics(std::span<const float> synthetic,
                               std::span<const float> real, int length) {
  const auto pairs = pair_nearest(synthetic, real, length);
  SynthesisReport rep;
  rep.n_pairs = static_cast<int>(pairs.size());
  double ad = 0.0, cs = 0.0, pcc = 0.0;
  for (std::size_t s = 0; s < pairs.size(); ++s) {
    auto sv = synthetic.subspan(s * static_cast<std::size_t>(length),
                                static_cast<std::size_t>(length));
    auto rv = real.subspan(
        static_cast<std::size_t>(pairs[s]) * static_cast<std::size_t>(length),
        static_cast<std::size_t>(length));
    ad += absolute_distance(sv, rv);
    cs += cosine_similarity(sv, rv);
    pcc += pearson(sv, rv);
  }
  const double n = static_cast<double>(rep.n_pairs);
  rep.ad = ad / n;
  rep.cs = cs / n;
  rep.pcc = pcc / n;
  return rep;
}

template <typename T>
SynthesisReport synthesis_report(const GeneratorParams<T>& generator,
                                 std::span<const float> real, int length,
                                 int n_synth, std::uint64_t seed) {
  if (n_synth <= 0) throw ValueError("n_synth must be positive");
  if (length != kSignalLength)
    throw ContractError("synthesis_report expects signals of length " +
                        std::to_string(kSignalLength));
  Rng noise(seed);
  std::vector<float> synth(static_cast<std::size_t>(n_synth) *
                           static_cast<std::size_t>(length));
  const int chunk = 64;
  for (int start = 0; start < n_synth; start += chunk) {
    const int b = std::min(chunk, n_synth - start);
    auto z = sample_latent<T>(b, kLatentDim, noise);
    auto x = generator_forward<T>(generator, z, Mode::Eval, nullptr, false);
    auto xd = x.data();
    for (int i = 0; i < b * length; ++i)
      synth[static_cast<std::size_t>(start) * length + i] =
          static_cast<float>(xd[i]);
  }
  return paired_metrics(synth, real, length);
}

std::string synthesis_csv_row(const SynthesisReport& r) {
  char buf[128];
  std::snprintf(buf, sizeof(buf), "%d,%.10g,%.10g,%.10g", r.n_pairs, r.ad,
                r.cs, r.pcc);
  return std::string(buf);
}

template SynthesisReport synthesis_report<float>(const GeneratorParams<float>&,
                                                 std::span<const float>, int,
                                                 int, std::uint64_t);
template SynthesisReport synthesis_report<double>(
    const GeneratorParams<double>&, std::span<const float>, int, int,
    std::uint64_t);

}  // namespace wl
