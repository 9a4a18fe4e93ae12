#include "wl/gemm.hpp"

#include <cstdlib>
#include <cstring>
#include <mutex>
#include <vector>

#if defined(__unix__) || defined(__APPLE__)
#include <dlfcn.h>
#define WL_HAVE_DLOPEN 1
#endif

namespace wl {
namespace {

// CBLAS constants (row-major order, no/trans).
constexpr int kRowMajor = 101;
constexpr int kNoTrans = 111;
constexpr int kTrans = 112;

using cblas_sgemm_fn = void (*)(int, int, int, int, int, int, float,
                                const float*, int, const float*, int, float,
                                float*, int);
using cblas_dgemm_fn = void (*)(int, int, int, int, int, int, double,
                                const double*, int, const double*, int, double,
                                double*, int);

struct Backend {
  cblas_sgemm_fn sgemm = nullptr;
  cblas_dgemm_fn dgemm = nullptr;
  std::string name = "builtin";
};

Backend load_backend() {
  Backend b;
#ifdef WL_HAVE_DLOPEN
  // OpenBLAS picks its kernel set from CPUID at load time. Some virtualized
  // CPUs mask the model id and fall back to generic SSE2 kernels even though
  // AVX-512 is available; OPENBLAS_CORETYPE, read at load, overrides that.
  if (!std::getenv("OPENBLAS_CORETYPE")) {
#if defined(__x86_64__)
    if (__builtin_cpu_supports("avx512f"))
      setenv("OPENBLAS_CORETYPE", "SKYLAKEX", 1);
    else if (__builtin_cpu_supports("avx2"))
      setenv("OPENBLAS_CORETYPE", "HASWELL", 1);
#endif
  }
  void* h = nullptr;
  for (const char* lib :
       {"libopenblas.so.0", "libopenblas.so", "libopenblas.dylib"}) {
    h = dlopen(lib, RTLD_NOW | RTLD_LOCAL);
    if (h) break;
  }
  if (h) {
    b.sgemm = reinterpret_cast<cblas_sgemm_fn>(dlsym(h, "cblas_sgemm"));
    b.dgemm = reinterpret_cast<cblas_dgemm_fn>(dlsym(h, "cblas_dgemm"));
    if (b.sgemm && b.dgemm) {
      // Single-threaded for deterministic reductions.
      if (auto set_threads = reinterpret_cast<void (*)(int)>(
              dlsym(h, "openblas_set_num_threads")))
        set_threads(1);
      b.name = "openblas";
      if (auto corename = reinterpret_cast<char* (*)()>(
              dlsym(h, "openblas_get_corename")))
        b.name += std::string(":") + corename();
    } else {
      b.sgemm = nullptr;
      b.dgemm = nullptr;
      dlclose(h);
    }
  }
#endif
  return b;
}

const Backend& backend() {
  static Backend b = load_backend();
  return b;
}

// ---------------------------------------------------------------------------
// Built-in fallback kernel. Plain register-blocked loops; slower than a tuned
// BLAS but correct, portable and deterministic.
// ---------------------------------------------------------------------------

template <typename T>
void gemm_naive_nn(int m, int n, int k, T alpha, const T* a, int lda,
                   const T* b, int ldb, T beta, T* c, int ldc) {
  for (int i = 0; i < m; ++i) {
    T* crow = c + static_cast<std::size_t>(i) * ldc;
    if (beta == T(0)) {
      for (int j = 0; j < n; ++j) crow[j] = T(0);
    } else if (beta != T(1)) {
      for (int j = 0; j < n; ++j) crow[j] *= beta;
    }
    const T* arow = a + static_cast<std::size_t>(i) * lda;
    for (int p = 0; p < k; ++p) {
      T av = alpha * arow[p];
      if (av == T(0)) continue;
      const T* brow = b + static_cast<std::size_t>(p) * ldb;
      for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

template <typename T>
void gemm_generic(bool trans_a, bool trans_b, int m, int n, int k, T alpha,
                  const T* a, int lda, const T* b, int ldb, T beta, T* c,
                  int ldc) {
  // Materialize transposed operands so the core loop stays contiguous.
  std::vector<T> at, bt;
  if (trans_a) {
    at.resize(static_cast<std::size_t>(m) * k);
    for (int p = 0; p < k; ++p)
      for (int i = 0; i < m; ++i)
        at[static_cast<std::size_t>(i) * k + p] =
            a[static_cast<std::size_t>(p) * lda + i];
    a = at.data();
    lda = k;
  }
  if (trans_b) {
    bt.resize(static_cast<std::size_t>(k) * n);
    for (int j = 0; j < n; ++j)
      for (int p = 0; p < k; ++p)
        bt[static_cast<std::size_t>(p) * n + j] =
            b[static_cast<std::size_t>(j) * ldb + p];
    b = bt.data();
    ldb = n;
  }
  gemm_naive_nn(m, n, k, alpha, a, lda, b, ldb, beta, c, ldc);
}

}  // namespace

void gemm(bool trans_a, bool trans_b, int m, int n, int k, float alpha,
          const float* a, int lda, const float* b, int ldb, float beta,
          float* c, int ldc) {
  if (m == 0 || n == 0) return;
  const Backend& be = backend();
  if (be.sgemm) {
    be.sgemm(kRowMajor, trans_a ? kTrans : kNoTrans,
             trans_b ? kTrans : kNoTrans, m, n, k, alpha, a, lda, b, ldb, beta,
             c, ldc);
    return;
  }
  gemm_generic(trans_a, trans_b, m, n, k, alpha, a, lda, b, ldb, beta, c, ldc);
}

void gemm(bool trans_a, bool trans_b, int m, int n, int k, double alpha,
          const double* a, int lda, const double* b, int ldb, double beta,
          double* c, int ldc) {
  if (m == 0 || n == 0) return;
  const Backend& be = backend();
  if (be.dgemm) {
    be.dgemm(kRowMajor, trans_a ? kTrans : kNoTrans,
             trans_b ? kTrans : kNoTrans, m, n, k, alpha, a, lda, b, ldb, beta,
             c, ldc);
    return;
  }
  gemm_generic(trans_a, trans_b, m, n, k, alpha, a, lda, b, ldb, beta, c, ldc);
}

std::string gemm_backend_name() { return backend().name; }

}  // namespace wl
