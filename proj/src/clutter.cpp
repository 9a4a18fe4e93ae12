#include "wl/clutter.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <memory>

namespace wl {

namespace {

// --- little-endian binary IO helpers ---

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

void put_bytes(std::FILE* f, const void* p, std::size_t n) {
  if (std::fwrite(p, 1, n, f) != n) throw IoError("short write");
}

void put_u32(std::FILE* f, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 24) & 0xff)};
  put_bytes(f, b, 4);
}

void put_f32(std::FILE* f, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32(f, bits);
}

void get_bytes(std::FILE* f, void* p, std::size_t n, const char* what) {
  if (std::fread(p, 1, n, f) != n)
    throw FormatError(std::string("truncated dataset file while reading ") +
                      what);
}

std::uint32_t get_u32(std::FILE* f, const char* what) {
  unsigned char b[4];
  get_bytes(f, b, 4, what);
  return static_cast<std::uint32_t>(b[0]) |
         (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) |
         (static_cast<std::uint32_t>(b[3]) << 24);
}

float get_f32(std::FILE* f, const char* what) {
  const std::uint32_t bits = get_u32(f, what);
  float v;
  std::memcpy(&v, &bits, 4);
  return v;
}

double gaussian(double x, double center, double sigma) {
  const double d = (x - center) / sigma;
  return std::exp(-0.5 * d * d);
}

// Peak pattern draws, in fixed rng order. Sea: one shared offset shift plus
// independent amplitudes for the left/right Bragg peaks. Land: one center
// shift and one amplitude.
void add_sea_peaks(std::vector<double>& s, const SpectrumParams& p, Rng& rng) {
  const double center = p.length / 2.0;
  const double shift = rng.uniform(-p.doppler_jitter, p.doppler_jitter);
  const double amp_l = 1.0 + p.amp_jitter * rng.uniform(-1.0, 1.0);
  const double amp_r = 1.0 + p.amp_jitter * rng.uniform(-1.0, 1.0);
  const double off = p.bragg_offset + shift;
  for (int i = 0; i < p.length; ++i)
    s[static_cast<std::size_t>(i)] +=
        amp_l * gaussian(i, center - off, p.peak_width) +
        amp_r * gaussian(i, center + off, p.peak_width);
}

void add_land_peak(std::vector<double>& s, const SpectrumParams& p, Rng& rng) {
  const double center = p.length / 2.0;
  const double shift = rng.uniform(-p.doppler_jitter, p.doppler_jitter);
  const double amp = 1.0 + p.amp_jitter * rng.uniform(-1.0, 1.0);
  for (int i = 0; i < p.length; ++i)
    s[static_cast<std::size_t>(i)] +=
        amp * gaussian(i, center + shift, p.peak_width);
}

}  // namespace

void SpectrumParams::validate() const {
  if (length < 16) throw ValueError("spectrum length must be at least 16");
  if (peak_width <= 0.0) throw ValueError("peak_width must be positive");
  if (bragg_offset <= 0.0) throw ValueError("bragg_offset must be positive");
  if (amp_jitter < 0.0 || amp_jitter > 1.0)
    throw ValueError("amp_jitter must lie in [0, 1]");
  if (doppler_jitter < 0.0) throw ValueError("doppler_jitter must be >= 0");
  if (noise_floor < 0.0) throw ValueError("noise_floor must be >= 0");
  if (bragg_offset + doppler_jitter + 3.0 * peak_width >= length / 2.0)
    throw GeometryError(
        "peaks do not fit in the band: bragg_offset + doppler_jitter + "
        "3*peak_width must stay below length/2");
}

void normalize(std::vector<double>& signal) {
  auto [mn_it, mx_it] = std::minmax_element(signal.begin(), signal.end());
  const double mn = *mn_it, mx = *mx_it;
  if (!(mx - mn > 1e-12))
    throw ValueError("cannot normalize a (near-)constant signal");
  const double range = mx - mn;
  for (double& v : signal) v = -1.0 + 2.0 * ((v - mn) / range);
}

std::vector<float> synth_spectrum(ClutterClass cls,
                                  const SpectrumParams& params, Rng& rng) {
  params.validate();
  std::vector<double> s(static_cast<std::size_t>(params.length), 0.0);
  switch (cls) {
    case ClutterClass::Sea:
      add_sea_peaks(s, params, rng);
      break;
    case ClutterClass::Land:
      add_land_peak(s, params, rng);
      break;
    case ClutterClass::SeaLand:
      add_sea_peaks(s, params, rng);
      add_land_peak(s, params, rng);
      break;
    default:
      throw ValueError("unknown clutter class");
  }
  if (params.noise_floor > 0.0)
    for (double& v : s) v += rng.uniform(0.0, params.noise_floor);
  normalize(s);
  std::vector<float> out(s.size());
  for (std::size_t i = 0; i < s.size(); ++i)
    out[i] = static_cast<float>(s[i]);
  return out;
}

std::vector<std::int64_t> Dataset::indices_labeled_train() const {
  std::vector<std::int64_t> idx;
  for (std::int64_t i = 0; i < count(); ++i)
    if (roles[static_cast<std::size_t>(i)] == SampleRole::Train &&
        labels[static_cast<std::size_t>(i)] != kUnlabeled)
      idx.push_back(i);
  return idx;
}

std::vector<std::int64_t> Dataset::indices_unlabeled_train() const {
  std::vector<std::int64_t> idx;
  for (std::int64_t i = 0; i < count(); ++i)
    if (roles[static_cast<std::size_t>(i)] == SampleRole::Train &&
        labels[static_cast<std::size_t>(i)] == kUnlabeled)
      idx.push_back(i);
  return idx;
}

std::vector<std::int64_t> Dataset::indices_test() const {
  std::vector<std::int64_t> idx;
  for (std::int64_t i = 0; i < count(); ++i)
    if (roles[static_cast<std::size_t>(i)] == SampleRole::Test)
      idx.push_back(i);
  return idx;
}

Dataset make_dataset(int per_class, double train_frac,
                     const SpectrumParams& params, std::uint64_t seed) {
  if (per_class < 10) throw ValueError("per_class must be at least 10");
  if (!(train_frac > 0.0 && train_frac < 1.0))
    throw ValueError("train_frac must lie in (0, 1)");
  params.validate();
  const int n_train = static_cast<int>(train_frac * per_class);
  if (n_train < 1 || n_train >= per_class)
    throw ValueError("train_frac leaves an empty train or test split");

  Dataset ds;
  ds.signal_length = params.length;
  const std::int64_t total = static_cast<std::int64_t>(kNumClasses) * per_class;
  ds.signals.resize(total * params.length);
  ds.labels.resize(static_cast<std::size_t>(total));
  ds.roles.resize(static_cast<std::size_t>(total));
  for (int c = 0; c < kNumClasses; ++c) {
    for (int i = 0; i < per_class; ++i) {
      const std::int64_t g = static_cast<std::int64_t>(c) * per_class + i;
      // Per-sample derived stream: determinism independent of generation
      // order or parallel scheduling.
      Rng rng = Rng::derive(seed, static_cast<std::uint64_t>(g));
      const auto sig =
          synth_spectrum(static_cast<ClutterClass>(c), params, rng);
      std::copy(sig.begin(), sig.end(), ds.signal(g));
      ds.labels[static_cast<std::size_t>(g)] = static_cast<std::int8_t>(c);
      ds.roles[static_cast<std::size_t>(g)] =
          i < n_train ? SampleRole::Train : SampleRole::Test;
    }
  }
  return ds;
}

Dataset split_semisupervised(const Dataset& dataset, int n_lab,
                             std::uint64_t seed) {
  if (n_lab <= 0 || n_lab % kNumClasses != 0)
    throw ValueError("n_lab must be a positive multiple of 3, got " +
                     std::to_string(n_lab));
  const int per = n_lab / kNumClasses;

  Dataset out = dataset;
  for (int c = 0; c < kNumClasses; ++c) {
    std::vector<std::int64_t> cls_train;
    for (std::int64_t i = 0; i < dataset.count(); ++i)
      if (dataset.roles[static_cast<std::size_t>(i)] == SampleRole::Train &&
          dataset.labels[static_cast<std::size_t>(i)] ==
              static_cast<std::int8_t>(c))
        cls_train.push_back(i);
    if (static_cast<int>(cls_train.size()) < per)
      throw ValueError("n_lab/3 = " + std::to_string(per) +
                       " exceeds the " + std::to_string(cls_train.size()) +
                       " train samples of class " + std::to_string(c));
    Rng rng = Rng::derive(seed, 0x5eed0000ULL + static_cast<std::uint64_t>(c));
    rng.shuffle(cls_train);
    for (std::size_t j = static_cast<std::size_t>(per); j < cls_train.size();
         ++j)
      out.labels[static_cast<std::size_t>(cls_train[j])] = kUnlabeled;
  }
  return out;
}

void write_dataset(const Dataset& dataset, const std::string& path) {
  if (dataset.signal_length != kSignalLength)
    throw ContractError("dataset files require signal length " +
                        std::to_string(kSignalLength));
  FilePtr f(std::fopen(path.c_str(), "wb"));
  if (!f) throw IoError("cannot open " + path + " for writing");
  put_bytes(f.get(), "SLCD", 4);
  put_u32(f.get(), 1);  // version
  put_u32(f.get(), static_cast<std::uint32_t>(dataset.count()));
  put_u32(f.get(), static_cast<std::uint32_t>(dataset.signal_length));
  for (std::int64_t i = 0; i < dataset.count(); ++i) {
    const std::int8_t label = dataset.labels[static_cast<std::size_t>(i)];
    const std::uint8_t role =
        static_cast<std::uint8_t>(dataset.roles[static_cast<std::size_t>(i)]);
    put_bytes(f.get(), &label, 1);
    put_bytes(f.get(), &role, 1);
    for (int j = 0; j < dataset.signal_length; ++j)
      put_f32(f.get(), dataset.signal(i)[j]);
  }
  if (std::fclose(f.release()) != 0) throw IoError("error closing " + path);
}

Dataset read_dataset(const std::string& path) {
  FilePtr f(std::fopen(path.c_str(), "rb"));
  if (!f) throw IoError("cannot open " + path);
  char magic[4];
  get_bytes(f.get(), magic, 4, "magic");
  if (std::memcmp(magic, "SLCD", 4) != 0)
    throw FormatError(path + " is not a dataset file (bad magic)");
  const std::uint32_t version = get_u32(f.get(), "version");
  if (version != 1)
    throw FormatError("unsupported dataset version " +
                      std::to_string(version));
  const std::uint32_t n = get_u32(f.get(), "sample count");
  const std::uint32_t len = get_u32(f.get(), "signal length");
  if (len != kSignalLength)
    throw FormatError("dataset signal length " + std::to_string(len) +
                      " != " + std::to_string(kSignalLength));
  Dataset ds;
  ds.signal_length = static_cast<int>(len);
  ds.signals.resize(static_cast<std::size_t>(n) * len);
  ds.labels.resize(n);
  ds.roles.resize(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    std::int8_t label;
    std::uint8_t role;
    get_bytes(f.get(), &label, 1, "label");
    get_bytes(f.get(), &role, 1, "role");
    if (label < -1 || label >= kNumClasses)
      throw FormatError("invalid label " + std::to_string(label));
    if (role > 1) throw FormatError("invalid role " + std::to_string(role));
    ds.labels[i] = label;
    ds.roles[i] = static_cast<SampleRole>(role);
    for (std::uint32_t j = 0; j < len; ++j)
      ds.signal(i)[j] = get_f32(f.get(), "signal");
  }
  // Reject trailing bytes so corrupt or concatenated files fail loudly.
  unsigned char extra;
  if (std::fread(&extra, 1, 1, f.get()) != 0)
    throw FormatError(path + " has trailing data");
  return ds;
}

}  // namespace wl
