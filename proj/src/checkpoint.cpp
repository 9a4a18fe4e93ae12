#include "wl/checkpoint.hpp"

#include <cstdio>
#include <cstring>
#include <memory>

namespace wl {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

void put_bytes(std::FILE* f, const void* p, std::size_t n) {
  if (std::fwrite(p, 1, n, f) != n) throw IoError("short write");
}

void put_u16(std::FILE* f, std::uint16_t v) {
  unsigned char b[2] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>(v >> 8)};
  put_bytes(f, b, 2);
}

void put_u32(std::FILE* f, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i)
    b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  put_bytes(f, b, 4);
}

void put_u64(std::FILE* f, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i)
    b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  put_bytes(f, b, 8);
}

void put_f32(std::FILE* f, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32(f, bits);
}

void put_name(std::FILE* f, const std::string& name) {
  if (name.size() > 0xffff) throw ContractError("tensor name too long");
  put_u16(f, static_cast<std::uint16_t>(name.size()));
  put_bytes(f, name.data(), name.size());
}

void get_bytes(std::FILE* f, void* p, std::size_t n, const char* what) {
  if (std::fread(p, 1, n, f) != n)
    throw FormatError(std::string("truncated checkpoint while reading ") +
                      what);
}

std::uint16_t get_u16(std::FILE* f, const char* what) {
  unsigned char b[2];
  get_bytes(f, b, 2, what);
  return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
}

std::uint32_t get_u32(std::FILE* f, const char* what) {
  unsigned char b[4];
  get_bytes(f, b, 4, what);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

std::uint64_t get_u64(std::FILE* f, const char* what) {
  unsigned char b[8];
  get_bytes(f, b, 8, what);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

float get_f32(std::FILE* f, const char* what) {
  const std::uint32_t bits = get_u32(f, what);
  float v;
  std::memcpy(&v, &bits, 4);
  return v;
}

std::string get_name(std::FILE* f) {
  const std::uint16_t n = get_u16(f, "name length");
  std::string s(n, '\0');
  get_bytes(f, s.data(), n, "name");
  return s;
}

}  // namespace

template <typename T>
void save_checkpoint(
    const std::string& path,
    const std::vector<std::pair<std::string, Tensor<T>>>& tensors,
    const Adam<T>* adam) {
  FilePtr f(std::fopen(path.c_str(), "wb"));
  if (!f) throw IoError("cannot open " + path + " for writing");
  put_bytes(f.get(), "WLSG", 4);
  put_u32(f.get(), 1);  // version
  put_u32(f.get(), static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, t] : tensors) {
    put_name(f.get(), name);
    const auto& shape = t.shape();
    if (shape.size() > 0xff) throw ContractError("tensor rank too large");
    unsigned char nd = static_cast<unsigned char>(shape.size());
    put_bytes(f.get(), &nd, 1);
    for (int d : shape) put_u32(f.get(), static_cast<std::uint32_t>(d));
    for (T v : t.data()) put_f32(f.get(), static_cast<float>(v));
  }

  // Optimizer state: only moments of tensors that are optimizer parameters
  // (running statistics are plain tensors and have none).
  std::vector<std::size_t> tensor_idx, param_idx;
  if (adam) {
    const auto& params = adam->params();
    for (std::size_t i = 0; i < tensors.size(); ++i)
      for (std::size_t j = 0; j < params.size(); ++j)
        if (tensors[i].second.id() == params[j].id()) {
          tensor_idx.push_back(i);
          param_idx.push_back(j);
          break;
        }
  }
  unsigned char flag = adam ? 1 : 0;
  put_bytes(f.get(), &flag, 1);
  if (adam) {
    put_u64(f.get(), static_cast<std::uint64_t>(adam->step_count()));
    put_u32(f.get(), static_cast<std::uint32_t>(tensor_idx.size()));
    for (std::size_t k = 0; k < tensor_idx.size(); ++k) {
      put_name(f.get(), tensors[tensor_idx[k]].first);
      for (T v : adam->moment1()[param_idx[k]])
        put_f32(f.get(), static_cast<float>(v));
      for (T v : adam->moment2()[param_idx[k]])
        put_f32(f.get(), static_cast<float>(v));
    }
  }
  if (std::fclose(f.release()) != 0) throw IoError("error closing " + path);
}

CheckpointData read_checkpoint(const std::string& path) {
  FilePtr f(std::fopen(path.c_str(), "rb"));
  if (!f) throw IoError("cannot open " + path);
  char magic[4];
  get_bytes(f.get(), magic, 4, "magic");
  if (std::memcmp(magic, "WLSG", 4) != 0)
    throw FormatError(path + " is not a checkpoint file (bad magic)");
  const std::uint32_t version = get_u32(f.get(), "version");
  if (version != 1)
    throw FormatError("unsupported checkpoint version " +
                      std::to_string(version));
  CheckpointData ckpt;
  const std::uint32_t count = get_u32(f.get(), "tensor count");
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name = get_name(f.get());
    unsigned char nd;
    get_bytes(f.get(), &nd, 1, "rank");
    Shape shape;
    std::int64_t numel = 1;
    for (int d = 0; d < nd; ++d) {
      const std::uint32_t dim = get_u32(f.get(), "dimension");
      if (dim == 0 || dim > (1u << 28))
        throw FormatError("implausible dimension " + std::to_string(dim) +
                          " in tensor " + name);
      shape.push_back(static_cast<int>(dim));
      numel *= dim;
    }
    std::vector<float> data(static_cast<std::size_t>(numel));
    for (auto& v : data) v = get_f32(f.get(), "tensor values");
    ckpt.tensors.emplace_back(name,
                              Tensor<float>::from(shape, std::move(data)));
  }
  unsigned char flag;
  get_bytes(f.get(), &flag, 1, "optimizer flag");
  if (flag > 1) throw FormatError("invalid optimizer flag");
  if (flag == 1) {
    ckpt.has_adam = true;
    ckpt.adam_step = get_u64(f.get(), "optimizer step");
    const std::uint32_t n = get_u32(f.get(), "optimizer entry count");
    for (std::uint32_t i = 0; i < n; ++i) {
      AdamEntry e;
      e.name = get_name(f.get());
      const Tensor<float>* t = ckpt.find(e.name);
      if (!t)
        throw FormatError("optimizer entry " + e.name +
                          " has no matching tensor");
      e.m.resize(static_cast<std::size_t>(t->numel()));
      e.v.resize(static_cast<std::size_t>(t->numel()));
      for (auto& x : e.m) x = get_f32(f.get(), "first moment");
      for (auto& x : e.v) x = get_f32(f.get(), "second moment");
      ckpt.adam.push_back(std::move(e));
    }
  }
  unsigned char extra;
  if (std::fread(&extra, 1, 1, f.get()) != 0)
    throw FormatError(path + " has trailing data");
  return ckpt;
}

template <typename T>
void load_tensors(
    const CheckpointData& ckpt,
    const std::vector<std::pair<std::string, Tensor<T>>>& dest) {
  if (ckpt.tensors.size() != dest.size())
    throw FormatError("checkpoint holds " +
                      std::to_string(ckpt.tensors.size()) + " tensors, model " +
                      "expects " + std::to_string(dest.size()));
  for (const auto& [name, t] : dest) {
    const Tensor<float>* src = ckpt.find(name);
    if (!src) throw FormatError("checkpoint is missing tensor " + name);
    if (src->shape() != t.shape())
      throw FormatError("shape mismatch for " + name + ": file " +
                        shape_str(src->shape()) + " vs model " +
                        shape_str(t.shape()));
    auto dst = const_cast<Tensor<T>&>(t).data();
    auto s = src->data();
    for (std::size_t i = 0; i < dst.size(); ++i)
      dst[i] = static_cast<T>(s[i]);
  }
}

template <typename T>
void load_adam(const CheckpointData& ckpt,
               const std::vector<std::pair<std::string, Tensor<T>>>& named,
               Adam<T>& adam) {
  if (!ckpt.has_adam)
    throw FormatError("checkpoint carries no optimizer state");
  adam.set_step_count(static_cast<std::int64_t>(ckpt.adam_step));
  const auto& params = adam.params();
  for (std::size_t j = 0; j < params.size(); ++j) {
    const std::string* name = nullptr;
    for (const auto& [n, t] : named)
      if (t.id() == params[j].id()) {
        name = &n;
        break;
      }
    if (!name)
      throw ContractError("optimizer parameter missing from the named list");
    const AdamEntry* entry = nullptr;
    for (const auto& e : ckpt.adam)
      if (e.name == *name) {
        entry = &e;
        break;
      }
    if (!entry)
      throw FormatError("checkpoint lacks optimizer moments for " + *name);
    if (entry->m.size() != static_cast<std::size_t>(params[j].numel()))
      throw FormatError("optimizer moment size mismatch for " + *name);
    auto& m = adam.moment1()[j];
    auto& v = adam.moment2()[j];
    for (std::size_t i = 0; i < m.size(); ++i) {
      m[i] = static_cast<T>(entry->m[i]);
      v[i] = static_cast<T>(entry->v[i]);
    }
  }
}

#define WL_INSTANTIATE_CKPT(T)                                             \
  template void save_checkpoint<T>(                                        \
      const std::string&,                                                  \
      const std::vector<std::pair<std::string, Tensor<T>>>&,               \
      const Adam<T>*);                                                     \
  template void load_tensors<T>(                                           \
      const CheckpointData&,                                               \
      const std::vector<std::pair<std::string, Tensor<T>>>&);              \
  template void load_adam<T>(                                              \
      const CheckpointData&,                                               \
      const std::vector<std::pair<std::string, Tensor<T>>>&, Adam<T>&);

WL_INSTANTIATE_CKPT(float)
WL_INSTANTIATE_CKPT(double)

}  // namespace wl
