#include "wl/ops.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "wl/gemm.hpp"

namespace wl {

namespace {

template <typename T>
bool want_tape(Tape<T>* tape, std::initializer_list<bool> reqs) {
  if (!tape) return false;
  for (bool r : reqs)
    if (r) return true;
  return false;
}

void check_rank(const Shape& s, int rank, const char* what) {
  if (static_cast<int>(s.size()) != rank)
    throw ShapeError(std::string(what) + " must have rank " +
                     std::to_string(rank) + ", got shape " + shape_str(s));
}

struct ConvGeom {
  int B, Cin, L, Cout, k, stride, padding, Lout;
};

// Validates conv1d geometry: x [B,Cin,L] * w [Cout,Cin,k] -> [B,Cout,Lout].
ConvGeom conv_geometry(const Shape& xs, const Shape& ws, const Shape& bs,
                       int stride, int padding) {
  check_rank(xs, 3, "conv1d input");
  check_rank(ws, 3, "conv1d weight");
  check_rank(bs, 1, "conv1d bias");
  ConvGeom g;
  g.B = xs[0];
  g.Cin = xs[1];
  g.L = xs[2];
  g.Cout = ws[0];
  g.k = ws[2];
  g.stride = stride;
  g.padding = padding;
  if (ws[1] != g.Cin)
    throw ShapeError("conv1d weight expects " + std::to_string(ws[1]) +
                     " input channels, input has " + std::to_string(g.Cin));
  if (bs[0] != g.Cout)
    throw ShapeError("conv1d bias length " + std::to_string(bs[0]) +
                     " does not match " + std::to_string(g.Cout) +
                     " output channels");
  if (stride < 1 || padding < 0 || g.k < 1)
    throw GeometryError("conv1d requires stride >= 1, padding >= 0, k >= 1");
  const int span = g.L + 2 * padding - g.k;
  if (span < 0)
    throw GeometryError("conv1d kernel " + std::to_string(g.k) +
                        " exceeds padded length " +
                        std::to_string(g.L + 2 * padding));
  g.Lout = span / stride + 1;  // floor division
  return g;
}

// [B,C,L] canonical -> [B*L, C] row-major matrix.
template <typename T>
void to_cl(std::span<const T> x, int B, int C, int L, std::vector<T>& out) {
  out.resize(static_cast<std::size_t>(B) * L * C);
  for (int b = 0; b < B; ++b)
    for (int c = 0; c < C; ++c) {
      const T* src = x.data() + (static_cast<std::size_t>(b) * C + c) * L;
      T* dst = out.data() + (static_cast<std::size_t>(b) * L) * C + c;
      for (int l = 0; l < L; ++l) dst[static_cast<std::size_t>(l) * C] = src[l];
    }
}

// [B*L, C] row-major matrix -> [B,C,L] canonical; accumulate=true adds.
template <typename T>
void from_cl(std::span<const T> m, int B, int C, int L, std::span<T> out,
             bool accumulate) {
  for (int b = 0; b < B; ++b)
    for (int c = 0; c < C; ++c) {
      const T* src = m.data() + (static_cast<std::size_t>(b) * L) * C + c;
      T* dst = out.data() + (static_cast<std::size_t>(b) * C + c) * L;
      for (int l = 0; l < L; ++l) {
        const T v = src[static_cast<std::size_t>(l) * C];
        if (accumulate)
          dst[l] += v;
        else
          dst[l] = v;
      }
    }
}

}  // namespace

template <typename T>
void im2col_batch(std::span<const T> x, int B, int C, int L, int k, int stride,
                  int padding, int Lout, std::vector<T>& out) {
  const int CK = C * k;
  out.assign(static_cast<std::size_t>(B) * Lout * CK, T(0));
  for (int b = 0; b < B; ++b) {
    const T* xb = x.data() + static_cast<std::size_t>(b) * C * L;
    T* ob = out.data() + static_cast<std::size_t>(b) * Lout * CK;
    for (int lo = 0; lo < Lout; ++lo) {
      const int base = lo * stride - padding;
      T* row = ob + static_cast<std::size_t>(lo) * CK;
      for (int c = 0; c < C; ++c) {
        const T* xc = xb + static_cast<std::size_t>(c) * L;
        T* rc = row + static_cast<std::size_t>(c) * k;
        for (int kk = 0; kk < k; ++kk) {
          const int li = base + kk;
          if (li >= 0 && li < L) rc[kk] = xc[li];
        }
      }
    }
  }
}

template <typename T>
void col2im_batch(std::span<const T> cols, int B, int C, int L, int k,
                  int stride, int padding, int Lout, std::span<T> out) {
  const int CK = C * k;
  for (int b = 0; b < B; ++b) {
    const T* cb = cols.data() + static_cast<std::size_t>(b) * Lout * CK;
    T* xb = out.data() + static_cast<std::size_t>(b) * C * L;
    for (int lo = 0; lo < Lout; ++lo) {
      const int base = lo * stride - padding;
      const T* row = cb + static_cast<std::size_t>(lo) * CK;
      for (int c = 0; c < C; ++c) {
        T* xc = xb + static_cast<std::size_t>(c) * L;
        const T* rc = row + static_cast<std::size_t>(c) * k;
        for (int kk = 0; kk < k; ++kk) {
          const int li = base + kk;
          if (li >= 0 && li < L) xc[li] += rc[kk];
        }
      }
    }
  }
}

template <typename T>
Tensor<T> conv1d(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b,
                 int stride, int padding, Tape<T>* tape) {
  const ConvGeom g =
      conv_geometry(x.shape(), w.shape(), b.shape(), stride, padding);
  const int CK = g.Cin * g.k;
  const int rows = g.B * g.Lout;

  auto cols = std::make_shared<std::vector<T>>();
  im2col_batch<T>(x.data(), g.B, g.Cin, g.L, g.k, g.stride, g.padding, g.Lout,
                  *cols);

  // Y_cl [rows, Cout] = cols [rows, CK] * W^T, with W flattened to [Cout, CK].
  std::vector<T> y_cl(static_cast<std::size_t>(rows) * g.Cout);
  gemm(false, true, rows, g.Cout, CK, T(1), cols->data(), CK,
          w.data().data(), CK, T(0), y_cl.data(), g.Cout);
  for (int r = 0; r < rows; ++r) {
    T* row = y_cl.data() + static_cast<std::size_t>(r) * g.Cout;
    for (int co = 0; co < g.Cout; ++co) row[co] += b.data()[co];
  }

  const bool taped =
      want_tape(tape, {x.requires_grad(), w.requires_grad(), b.requires_grad()});
  Tensor<T> y = Tensor<T>::zeros({g.B, g.Cout, g.Lout}, taped);
  from_cl<T>(y_cl, g.B, g.Cout, g.Lout, y.data(), false);

  if (taped) {
    Tensor<T> xc = x, wc = w, bc = b, yc = y;
    tape->record([xc, wc, bc, yc, cols, g, CK, rows]() mutable {
      if (!yc.has_grad()) return;
      std::vector<T> go_cl;
      to_cl<T>(yc.grad(), g.B, g.Cout, g.Lout, go_cl);
      if (wc.requires_grad()) {
        // gW [Cout, CK] += GO^T [Cout, rows] * cols [rows, CK]
        gemm(true, false, g.Cout, CK, rows, T(1), go_cl.data(), g.Cout,
                cols->data(), CK, T(1), wc.grad().data(), CK);
      }
      if (bc.requires_grad()) {
        auto gb = bc.grad();
        for (int r = 0; r < rows; ++r) {
          const T* row = go_cl.data() + static_cast<std::size_t>(r) * g.Cout;
          for (int co = 0; co < g.Cout; ++co) gb[co] += row[co];
        }
      }
      if (xc.requires_grad()) {
        // gcols [rows, CK] = GO [rows, Cout] * W [Cout, CK]
        std::vector<T> gcols(static_cast<std::size_t>(rows) * CK);
        gemm(false, false, rows, CK, g.Cout, T(1), go_cl.data(), g.Cout,
                wc.data().data(), CK, T(0), gcols.data(), CK);
        col2im_batch<T>(gcols, g.B, g.Cin, g.L, g.k, g.stride, g.padding,
                        g.Lout, xc.grad());
      }
    });
  }
  return y;
}

template <typename T>
Tensor<T> deconv1d(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b,
                   int stride, int padding, Tape<T>* tape) {
  check_rank(x.shape(), 3, "deconv1d input");
  check_rank(w.shape(), 3, "deconv1d weight");
  check_rank(b.shape(), 1, "deconv1d bias");
  const int B = x.dim(0), Cin = x.dim(1), Lin = x.dim(2);
  const int Cout = w.dim(1), k = w.dim(2);
  if (w.dim(0) != Cin)
    throw ShapeError("deconv1d weight expects " + std::to_string(w.dim(0)) +
                     " input channels, input has " + std::to_string(Cin));
  if (b.dim(0) != Cout)
    throw ShapeError("deconv1d bias length " + std::to_string(b.dim(0)) +
                     " does not match " + std::to_string(Cout) +
                     " output channels");
  if (stride < 1 || padding < 0 || k < 1)
    throw GeometryError("deconv1d requires stride >= 1, padding >= 0, k >= 1");
  const int Lout = (Lin - 1) * stride - 2 * padding + k;
  if (Lout < 1)
    throw GeometryError("deconv1d output length " + std::to_string(Lout) +
                        " is not positive");

  // Forward is the adjoint of a conv1d mapping [B,Cout,Lout] -> [B,Cin,Lin]
  // with weight w viewed as a [Cin, Cout*k] matrix.
  const int CK = Cout * k;
  const int rows = B * Lin;
  auto x_cl = std::make_shared<std::vector<T>>();
  to_cl<T>(x.data(), B, Cin, Lin, *x_cl);

  std::vector<T> cols(static_cast<std::size_t>(rows) * CK);
  // cols [rows, CK] = X_cl [rows, Cin] * Wflat [Cin, CK]
  gemm(false, false, rows, CK, Cin, T(1), x_cl->data(), Cin,
          w.data().data(), CK, T(0), cols.data(), CK);

  const bool taped =
      want_tape(tape, {x.requires_grad(), w.requires_grad(), b.requires_grad()});
  Tensor<T> y = Tensor<T>::zeros({B, Cout, Lout}, taped);
  col2im_batch<T>(cols, B, Cout, Lout, k, stride, padding, Lin, y.data());
  {
    auto yd = y.data();
    for (int bb = 0; bb < B; ++bb)
      for (int co = 0; co < Cout; ++co) {
        T* row = yd.data() + (static_cast<std::size_t>(bb) * Cout + co) * Lout;
        const T bv = b.data()[co];
        for (int l = 0; l < Lout; ++l) row[l] += bv;
      }
  }

  if (taped) {
    Tensor<T> xc = x, wc = w, bc = b, yc = y;
    const int s = stride, p = padding;
    tape->record([xc, wc, bc, yc, x_cl, B, Cin, Lin, Cout, k, s, p, Lout, CK,
                  rows]() mutable {
      if (!yc.has_grad()) return;
      auto gy = yc.grad();
      if (bc.requires_grad()) {
        auto gb = bc.grad();
        for (int bb = 0; bb < B; ++bb)
          for (int co = 0; co < Cout; ++co) {
            const T* row =
                gy.data() + (static_cast<std::size_t>(bb) * Cout + co) * Lout;
            T acc(0);
            for (int l = 0; l < Lout; ++l) acc += row[l];
            gb[co] += acc;
          }
      }
      std::vector<T> m;  // im2col of gy: [rows, CK]
      im2col_batch<T>(gy, B, Cout, Lout, k, s, p, Lin, m);
      if (wc.requires_grad()) {
        // gWflat [Cin, CK] += X_cl^T [Cin, rows] * m [rows, CK]
        gemm(true, false, Cin, CK, rows, T(1), x_cl->data(), Cin, m.data(),
                CK, T(1), wc.grad().data(), CK);
      }
      if (xc.requires_grad()) {
        // gX_cl [rows, Cin] = m [rows, CK] * Wflat^T [CK, Cin]
        std::vector<T> gx_cl(static_cast<std::size_t>(rows) * Cin);
        gemm(false, true, rows, Cin, CK, T(1), m.data(), CK,
                wc.data().data(), CK, T(0), gx_cl.data(), Cin);
        from_cl<T>(gx_cl, B, Cin, Lin, xc.grad(), true);
      }
    });
  }
  return y;
}

template <typename T>
Tensor<T> batchnorm1d(const Tensor<T>& x, const Tensor<T>& gamma,
                      const Tensor<T>& beta, Tensor<T>& running_mean,
                      Tensor<T>& running_var, Mode mode,
                      const BatchNormOpts& opts, Tape<T>* tape) {
  check_rank(x.shape(), 3, "batchnorm1d input");
  const int B = x.dim(0), C = x.dim(1), L = x.dim(2);
  const Tensor<T>* chan_params[] = {&gamma, &beta, &running_mean,
                                    &running_var};
  for (const Tensor<T>* t : chan_params)
    if (t->rank() != 1 || t->dim(0) != C)
      throw ShapeError("batchnorm1d parameter shape " + shape_str(t->shape()) +
                       " does not match " + std::to_string(C) + " channels");
  const std::int64_t N = static_cast<std::int64_t>(B) * L;
  const bool use_batch_stats = (mode == Mode::Train);
  if (use_batch_stats && N < 2)
    throw ContractError("batchnorm1d in Train mode needs at least 2 values "
                        "per channel");

  auto mean = std::make_shared<std::vector<double>>(C, 0.0);
  auto invstd = std::make_shared<std::vector<double>>(C, 0.0);
  if (use_batch_stats) {
    for (int c = 0; c < C; ++c) {
      double s = 0.0, s2 = 0.0;
      for (int b = 0; b < B; ++b) {
        const T* row = x.data().data() + (static_cast<std::size_t>(b) * C + c) * L;
        for (int l = 0; l < L; ++l) {
          const double v = static_cast<double>(row[l]);
          s += v;
          s2 += v * v;
        }
      }
      const double mu = s / static_cast<double>(N);
      double var = s2 / static_cast<double>(N) - mu * mu;
      var = std::max(var, 0.0);
      (*mean)[c] = mu;
      (*invstd)[c] = 1.0 / std::sqrt(var + opts.eps);
      if (opts.update_running) {
        const double unbiased = var * static_cast<double>(N) /
                                static_cast<double>(N - 1);
        running_mean.data()[c] = static_cast<T>(
            (1.0 - opts.momentum) * static_cast<double>(running_mean.data()[c]) +
            opts.momentum * mu);
        running_var.data()[c] = static_cast<T>(
            (1.0 - opts.momentum) * static_cast<double>(running_var.data()[c]) +
            opts.momentum * unbiased);
      }
    }
  } else {
    for (int c = 0; c < C; ++c) {
      (*mean)[c] = static_cast<double>(running_mean.data()[c]);
      (*invstd)[c] =
          1.0 / std::sqrt(static_cast<double>(running_var.data()[c]) + opts.eps);
    }
  }

  const bool taped =
      want_tape(tape, {x.requires_grad(), gamma.requires_grad(),
                       beta.requires_grad()});
  Tensor<T> y = Tensor<T>::zeros({B, C, L}, taped);
  auto xhat = std::make_shared<std::vector<T>>(
      static_cast<std::size_t>(B) * C * L);
  for (int b = 0; b < B; ++b)
    for (int c = 0; c < C; ++c) {
      const T* xr = x.data().data() + (static_cast<std::size_t>(b) * C + c) * L;
      T* hr = xhat->data() + (static_cast<std::size_t>(b) * C + c) * L;
      T* yr = y.data().data() + (static_cast<std::size_t>(b) * C + c) * L;
      const double mu = (*mean)[c], is = (*invstd)[c];
      const double gm = static_cast<double>(gamma.data()[c]);
      const double bt = static_cast<double>(beta.data()[c]);
      for (int l = 0; l < L; ++l) {
        const double h = (static_cast<double>(xr[l]) - mu) * is;
        hr[l] = static_cast<T>(h);
        yr[l] = static_cast<T>(gm * h + bt);
      }
    }

  if (taped) {
    Tensor<T> xc = x, gc = gamma, bc = beta, yc = y;
    tape->record([xc, gc, bc, yc, xhat, invstd, B, C, L, N,
                  use_batch_stats]() mutable {
      if (!yc.has_grad()) return;
      auto gy = yc.grad();
      for (int c = 0; c < C; ++c) {
        double sum_gy = 0.0, sum_gy_xhat = 0.0;
        for (int b = 0; b < B; ++b) {
          const std::size_t off = (static_cast<std::size_t>(b) * C + c) * L;
          for (int l = 0; l < L; ++l) {
            const double g = static_cast<double>(gy[off + l]);
            sum_gy += g;
            sum_gy_xhat += g * static_cast<double>((*xhat)[off + l]);
          }
        }
        if (gc.requires_grad())
          gc.grad()[c] += static_cast<T>(sum_gy_xhat);
        if (bc.requires_grad()) bc.grad()[c] += static_cast<T>(sum_gy);
        if (xc.requires_grad()) {
          const double gm = static_cast<double>(gc.data()[c]);
          const double is = (*invstd)[c];
          auto gx = xc.grad();
          for (int b = 0; b < B; ++b) {
            const std::size_t off = (static_cast<std::size_t>(b) * C + c) * L;
            for (int l = 0; l < L; ++l) {
              const double g = static_cast<double>(gy[off + l]);
              double d;
              if (use_batch_stats) {
                // Batch statistics depend on x, so the mean/var terms
                // contribute to the gradient.
                d = gm * is / static_cast<double>(N) *
                    (static_cast<double>(N) * g - sum_gy -
                     static_cast<double>((*xhat)[off + l]) * sum_gy_xhat);
              } else {
                d = gm * is * g;
              }
              gx[off + l] += static_cast<T>(d);
            }
          }
        }
      }
    });
  }
  return y;
}

template <typename T>
Tensor<T> fully_connected(const Tensor<T>& x, const Tensor<T>& w,
                          const Tensor<T>& b, Tape<T>* tape) {
  check_rank(x.shape(), 2, "fully_connected input");
  check_rank(w.shape(), 2, "fully_connected weight");
  check_rank(b.shape(), 1, "fully_connected bias");
  const int B = x.dim(0), N = x.dim(1), M = w.dim(0);
  if (w.dim(1) != N)
    throw ShapeError("fully_connected weight expects " +
                     std::to_string(w.dim(1)) + " features, input has " +
                     std::to_string(N));
  if (b.dim(0) != M)
    throw ShapeError("fully_connected bias length " + std::to_string(b.dim(0)) +
                     " does not match " + std::to_string(M) + " outputs");

  const bool taped =
      want_tape(tape, {x.requires_grad(), w.requires_grad(), b.requires_grad()});
  Tensor<T> y = Tensor<T>::zeros({B, M}, taped);
  // y [B, M] = x [B, N] * W^T
  gemm(false, true, B, M, N, T(1), x.data().data(), N, w.data().data(), N,
          T(0), y.data().data(), M);
  for (int r = 0; r < B; ++r) {
    T* row = y.data().data() + static_cast<std::size_t>(r) * M;
    for (int m = 0; m < M; ++m) row[m] += b.data()[m];
  }

  if (taped) {
    Tensor<T> xc = x, wc = w, bc = b, yc = y;
    tape->record([xc, wc, bc, yc, B, N, M]() mutable {
      if (!yc.has_grad()) return;
      auto gy = yc.grad();
      if (wc.requires_grad()) {
        // gW [M, N] += gy^T [M, B] * x [B, N]
        gemm(true, false, M, N, B, T(1), gy.data(), M, xc.data().data(), N,
                T(1), wc.grad().data(), N);
      }
      if (bc.requires_grad()) {
        auto gb = bc.grad();
        for (int r = 0; r < B; ++r) {
          const T* row = gy.data() + static_cast<std::size_t>(r) * M;
          for (int m = 0; m < M; ++m) gb[m] += row[m];
        }
      }
      if (xc.requires_grad()) {
        // gx [B, N] += gy [B, M] * W [M, N]
        gemm(false, false, B, N, M, T(1), gy.data(), M, wc.data().data(), N,
                T(1), xc.grad().data(), N);
      }
    });
  }
  return y;
}

namespace {

// Shared scaffolding for elementwise ops: y_i = f(x_i), dx_i += gy_i * df_i.
// `dfactor` receives (x_i, y_i) after the forward pass.
template <typename T, typename Fwd, typename Dfac>
Tensor<T> elementwise(const Tensor<T>& x, Tape<T>* tape, Fwd fwd,
                      Dfac dfactor) {
  const bool taped = want_tape(tape, {x.requires_grad()});
  Tensor<T> y = Tensor<T>::zeros(x.shape(), taped);
  auto xd = x.data();
  auto yd = y.data();
  for (std::size_t i = 0; i < xd.size(); ++i) yd[i] = fwd(xd[i]);
  if (taped) {
    Tensor<T> xc = x, yc = y;
    tape->record([xc, yc, dfactor]() mutable {
      if (!yc.has_grad()) return;
      auto gy = yc.grad();
      auto gx = xc.grad();
      auto xd = xc.data();
      auto yd = yc.data();
      // Two passes keep the hot loop branch-free: the select-only pass and the
      // multiply-accumulate pass both vectorize, while a fused conditional
      // multiply would not under strict FP semantics.
      std::vector<T> d(gx.size());
      for (std::size_t i = 0; i < d.size(); ++i) d[i] = dfactor(xd[i], yd[i]);
      for (std::size_t i = 0; i < d.size(); ++i) gx[i] += gy[i] * d[i];
    });
  }
  return y;
}

}  // namespace

template <typename T>
Tensor<T> relu(const Tensor<T>& x, Tape<T>* tape) {
  return elementwise(
      x, tape, [](T v) { return v > T(0) ? v : T(0); },
      [](T v, T) { return v > T(0) ? T(1) : T(0); });
}

template <typename T>
Tensor<T> leaky_relu(const Tensor<T>& x, double negative_slope, Tape<T>* tape) {
  const T a = static_cast<T>(negative_slope);
  const bool taped = want_tape(tape, {x.requires_grad()});
  Tensor<T> y = Tensor<T>::zeros(x.shape(), taped);
  auto xd = x.data();
  auto yd = y.data();
  // Select the slope first, multiply second: both passes are branch-free and
  // vectorize, unlike the naive conditional multiply.
  for (std::size_t i = 0; i < xd.size(); ++i)
    yd[i] = xd[i] > T(0) ? T(1) : a;
  for (std::size_t i = 0; i < xd.size(); ++i) yd[i] *= xd[i];
  if (taped) {
    Tensor<T> xc = x, yc = y;
    tape->record([xc, yc, a]() mutable {
      if (!yc.has_grad()) return;
      auto gy = yc.grad();
      auto gx = xc.grad();
      auto xd = xc.data();
      std::vector<T> d(gx.size());
      for (std::size_t i = 0; i < d.size(); ++i)
        d[i] = xd[i] > T(0) ? T(1) : a;
      for (std::size_t i = 0; i < d.size(); ++i) gx[i] += gy[i] * d[i];
    });
  }
  return y;
}

template <typename T>
Tensor<T> tanh(const Tensor<T>& x, Tape<T>* tape) {
  return elementwise(
      x, tape, [](T v) { return static_cast<T>(std::tanh(v)); },
      [](T, T y) { return T(1) - y * y; });
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x, Tape<T>* tape) {
  return elementwise(
      x, tape,
      [](T v) { return static_cast<T>(1.0 / (1.0 + std::exp(-static_cast<double>(v)))); },
      [](T, T y) { return y * (T(1) - y); });
}

template <typename T>
Tensor<T> dropout(const Tensor<T>& x, double p, Mode mode, Rng& rng,
                  Tape<T>* tape) {
  if (p < 0.0 || p >= 1.0)
    throw ValueError("dropout probability must lie in [0, 1), got " +
                     std::to_string(p));
  if (mode == Mode::Eval || p == 0.0) return x;

  const bool taped = want_tape(tape, {x.requires_grad()});
  Tensor<T> y = Tensor<T>::zeros(x.shape(), taped);
  auto mask = std::make_shared<std::vector<T>>(x.data().size());
  const T scale = static_cast<T>(1.0 / (1.0 - p));
  auto xd = x.data();
  auto yd = y.data();
  for (std::size_t i = 0; i < xd.size(); ++i) {
    const T m = rng.uniform() >= p ? scale : T(0);
    (*mask)[i] = m;
    yd[i] = xd[i] * m;
  }
  if (taped) {
    Tensor<T> xc = x, yc = y;
    tape->record([xc, yc, mask]() mutable {
      if (!yc.has_grad()) return;
      auto gy = yc.grad();
      auto gx = xc.grad();
      for (std::size_t i = 0; i < gx.size(); ++i)
        gx[i] += gy[i] * (*mask)[i];
    });
  }
  return y;
}

template <typename T>
Tensor<T> flatten(const Tensor<T>& x, Tape<T>* tape) {
  check_rank(x.shape(), 3, "flatten input");
  const int B = x.dim(0);
  const int F = x.dim(1) * x.dim(2);
  const bool taped = want_tape(tape, {x.requires_grad()});
  Tensor<T> y = Tensor<T>::zeros({B, F}, taped);
  std::copy(x.data().begin(), x.data().end(), y.data().begin());
  if (taped) {
    Tensor<T> xc = x, yc = y;
    tape->record([xc, yc]() mutable {
      if (!yc.has_grad()) return;
      auto gy = yc.grad();
      auto gx = xc.grad();
      for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += gy[i];
    });
  }
  return y;
}

template <typename T>
Tensor<T> combine_scalars(const Tensor<T>& a, T ca, const Tensor<T>& b, T cb,
                          Tape<T>* tape) {
  if (a.numel() != 1 || b.numel() != 1)
    throw ContractError("combine_scalars expects scalar tensors, got " +
                        shape_str(a.shape()) + " and " + shape_str(b.shape()));
  const bool taped = want_tape(tape, {a.requires_grad(), b.requires_grad()});
  Tensor<T> y = Tensor<T>::from({1}, {ca * a.item() + cb * b.item()}, taped);
  if (taped) {
    Tensor<T> ac = a, bc = b, yc = y;
    tape->record([ac, bc, yc, ca, cb]() mutable {
      if (!yc.has_grad()) return;
      const T g = yc.grad()[0];
      if (ac.requires_grad()) ac.grad()[0] += ca * g;
      if (bc.requires_grad()) bc.grad()[0] += cb * g;
    });
  }
  return y;
}

#define WL_INSTANTIATE_OPS(T)                                                  \
  template void im2col_batch<T>(std::span<const T>, int, int, int, int, int,   \
                                int, int, std::vector<T>&);                    \
  template void col2im_batch<T>(std::span<const T>, int, int, int, int, int,   \
                                int, int, std::span<T>);                       \
  template Tensor<T> conv1d<T>(const Tensor<T>&, const Tensor<T>&,             \
                               const Tensor<T>&, int, int, Tape<T>*);          \
  template Tensor<T> deconv1d<T>(const Tensor<T>&, const Tensor<T>&,           \
                                 const Tensor<T>&, int, int, Tape<T>*);        \
  template Tensor<T> batchnorm1d<T>(const Tensor<T>&, const Tensor<T>&,        \
                                    const Tensor<T>&, Tensor<T>&, Tensor<T>&,  \
                                    Mode, const BatchNormOpts&, Tape<T>*);     \
  template Tensor<T> fully_connected<T>(const Tensor<T>&, const Tensor<T>&,    \
                                        const Tensor<T>&, Tape<T>*);           \
  template Tensor<T> relu<T>(const Tensor<T>&, Tape<T>*);                      \
  template Tensor<T> leaky_relu<T>(const Tensor<T>&, double, Tape<T>*);        \
  template Tensor<T> tanh<T>(const Tensor<T>&, Tape<T>*);                      \
  template Tensor<T> sigmoid<T>(const Tensor<T>&, Tape<T>*);                   \
  template Tensor<T> dropout<T>(const Tensor<T>&, double, Mode, Rng&,          \
                                Tape<T>*);                                     \
  template Tensor<T> flatten<T>(const Tensor<T>&, Tape<T>*);                   \
  template Tensor<T> combine_scalars<T>(const Tensor<T>&, T, const Tensor<T>&, \
                                        T, Tape<T>*);

WL_INSTANTIATE_OPS(float)
WL_INSTANTIATE_OPS(double)

#undef WL_INSTANTIATE_OPS

}  // namespace wl
