#pragma once

#include <string>

namespace wl {

/// Row-major general matrix multiply: C = alpha * op(A) * op(B) + beta * C.
/// op(A) is [M, K], op(B) is [K, N], C is [M, N]. Leading dimensions are those
/// of the stored (untransposed) matrices.
///
/// Backed by OpenBLAS when it can be loaded at runtime, otherwise by a
/// built-in vectorized kernel. Both paths are single-threaded and
/// deterministic for fixed inputs.
void gemm(bool trans_a, bool trans_b, int m, int n, int k, float alpha,
          const float* a, int lda, const float* b, int ldb, float beta,
          float* c, int ldc);

void gemm(bool trans_a, bool trans_b, int m, int n, int k, double alpha,
          const double* a, int lda, const double* b, int ldb, double beta,
          double* c, int ldc);

/// Name of the active backend ("openblas:<core>" or "builtin").
std::string gemm_backend_name();

}  // namespace wl
