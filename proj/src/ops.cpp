#include "fsce/autodiff/ops.hpp"

#include <cmath>
#include <memory>
#include <stdexcept>

namespace fsce {

namespace {

using EMap = Eigen::Map<Eigen::ArrayXd>;
using CMap = Eigen::Map<const Eigen::ArrayXd>;
using MMap = Eigen::Map<RowMat>;
using CMMap = Eigen::Map<const RowMat>;

CMMap as_mat(const Tensor& t, int rows, int cols) {
  return {t.data(), rows, cols};
}

// Extents padded to rank 4 with leading 1s, preserving row-major order.
struct Dims4 {
  int e[4] = {1, 1, 1, 1};
};

Dims4 pad4(const Shape& s) {
  Dims4 d;
  const int off = 4 - static_cast<int>(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) d.e[off + static_cast<int>(i)] = s[i];
  return d;
}

bool broadcastable_to(const Shape& from, const Shape& to) {
  if (from.size() != to.size()) return false;
  for (std::size_t i = 0; i < to.size(); ++i)
    if (from[i] != to[i] && from[i] != 1) return false;
  return true;
}

void require_elementwise(const Tensor& a, const Tensor& b, const char* op) {
  if (shape_equal(a.shape(), b.shape())) return;
  if (!broadcastable_to(b.shape(), a.shape()))
    throw std::invalid_argument(std::string(op) + ": shape mismatch " + shape_str(a.shape()) +
                                " vs " + shape_str(b.shape()));
}

// y[i] = f(a[i], b[bcast(i)]) over the padded rank-4 index space.
template <typename F>
void bcast_apply(const Shape& ash, const Shape& bsh, const double* a, const double* b,
                 double* y, F&& f) {
  const Dims4 ea = pad4(ash), eb = pad4(bsh);
  int sb[4];
  sb[3] = eb.e[3] == 1 ? 0 : 1;
  int acc = eb.e[3];
  for (int k = 2; k >= 0; --k) {
    sb[k] = eb.e[k] == 1 ? 0 : acc;
    acc *= eb.e[k];
  }
  std::int64_t ia = 0;
  for (int i0 = 0; i0 < ea.e[0]; ++i0)
    for (int i1 = 0; i1 < ea.e[1]; ++i1)
      for (int i2 = 0; i2 < ea.e[2]; ++i2) {
        std::int64_t ib = static_cast<std::int64_t>(i0) * sb[0] + static_cast<std::int64_t>(i1) * sb[1] +
                          static_cast<std::int64_t>(i2) * sb[2];
        for (int i3 = 0; i3 < ea.e[3]; ++i3, ++ia)
          y[ia] = f(a[ia], b[ib + static_cast<std::int64_t>(i3) * sb[3]]);
      }
}

// Reduces `g` (shaped like `to`) onto `out` (shaped like `from`, unit axes
// summed).  Used for the broadcast operand's gradient.
void bcast_reduce(const Shape& tosh, const Shape& fromsh, const double* g, double* out) {
  const Dims4 et = pad4(tosh), ef = pad4(fromsh);
  int sf[4];
  sf[3] = ef.e[3] == 1 ? 0 : 1;
  int acc = ef.e[3];
  for (int k = 2; k >= 0; --k) {
    sf[k] = ef.e[k] == 1 ? 0 : acc;
    acc *= ef.e[k];
  }
  std::int64_t ig = 0;
  for (int i0 = 0; i0 < et.e[0]; ++i0)
    for (int i1 = 0; i1 < et.e[1]; ++i1)
      for (int i2 = 0; i2 < et.e[2]; ++i2) {
        std::int64_t io = static_cast<std::int64_t>(i0) * sf[0] + static_cast<std::int64_t>(i1) * sf[1] +
                          static_cast<std::int64_t>(i2) * sf[2];
        for (int i3 = 0; i3 < et.e[3]; ++i3, ++ig)
          out[io + static_cast<std::int64_t>(i3) * sf[3]] += g[ig];
      }
}

template <typename FwdAB>
Tensor elementwise_binary(const Tensor& a, const Tensor& b, const char* name, FwdAB&& f,
                          double da, double db_sign, bool product) {
  require_elementwise(a, b, name);
  Tensor out(a.shape());
  bcast_apply(a.shape(), b.shape(), a.data(), b.data(), out.data(), f);
  Tape* tape = common_tape({&a, &b});
  if (!tape) return out;
  const int an = a.tracked() ? a.node() : -1;
  const int bn = b.tracked() ? b.node() : -1;
  const int on = static_cast<int>(tape->node_count());
  Tensor av = a, bv = b;
  return tape->record(std::move(out), [an, bn, on, av, bv, da, db_sign, product](Tape::Sweep& sw) {
    const Eigen::ArrayXd& g = sw[static_cast<std::size_t>(on)];
    if (an >= 0) {
      if (product) {
        Eigen::ArrayXd ga(av.size());
        bcast_apply(av.shape(), bv.shape(), g.data(), bv.data(), ga.data(),
                    [](double gi, double bi) { return gi * bi; });
        Tape::sweep_add(sw, an, ga);
      } else {
        Tape::sweep_add(sw, an, da * g);
      }
    }
    if (bn >= 0) {
      Eigen::ArrayXd gb = Eigen::ArrayXd::Zero(bv.size());
      if (product) {
        Eigen::ArrayXd tmp = CMap(av.data(), av.size()) * g;
        bcast_reduce(av.shape(), bv.shape(), tmp.data(), gb.data());
      } else {
        Eigen::ArrayXd sg = db_sign * g;
        bcast_reduce(av.shape(), bv.shape(), sg.data(), gb.data());
      }
      Tape::sweep_add(sw, bn, gb);
    }
  });
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  return elementwise_binary(a, b, "add", [](double x, double y) { return x + y; }, 1.0, 1.0, false);
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return elementwise_binary(a, b, "sub", [](double x, double y) { return x - y; }, 1.0, -1.0, false);
}

Tensor mul_elementwise(const Tensor& a, const Tensor& b) {
  return elementwise_binary(a, b, "mul", [](double x, double y) { return x * y; }, 0.0, 0.0, true);
}

Tensor add_scalar(const Tensor& a, double c) {
  Tensor out(a.shape());
  out.flat() = a.flat() + c;
  Tape* tape = common_tape({&a});
  if (!tape) return out;
  const int an = a.node();
  const int on = static_cast<int>(tape->node_count());
  return tape->record(std::move(out), [an, on](Tape::Sweep& sw) {
    Tape::sweep_add(sw, an, sw[static_cast<std::size_t>(on)]);
  });
}

Tensor scale(const Tensor& a, double c) {
  Tensor out(a.shape());
  out.flat() = a.flat() * c;
  Tape* tape = common_tape({&a});
  if (!tape) return out;
  const int an = a.node();
  const int on = static_cast<int>(tape->node_count());
  return tape->record(std::move(out), [an, on, c](Tape::Sweep& sw) {
    Tape::sweep_add(sw, an, c * sw[static_cast<std::size_t>(on)]);
  });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2)
    throw std::invalid_argument("matmul: operands must be rank 2");
  const int m = a.extent(0), k = a.extent(1), k2 = b.extent(0), p = b.extent(1);
  if (k != k2)
    throw std::invalid_argument("matmul: inner extents disagree, " + shape_str(a.shape()) +
                                " vs " + shape_str(b.shape()));
  Tensor out({m, p});
  out.mat().noalias() = a.mat() * b.mat();
  Tape* tape = common_tape({&a, &b});
  if (!tape) return out;
  const int an = a.tracked() ? a.node() : -1;
  const int bn = b.tracked() ? b.node() : -1;
  const int on = static_cast<int>(tape->node_count());
  Tensor av = a, bv = b;
  return tape->record(std::move(out), [an, bn, on, av, bv, m, k, p](Tape::Sweep& sw) {
    CMMap g(sw[static_cast<std::size_t>(on)].data(), m, p);
    if (an >= 0) {
      Eigen::ArrayXd ga(static_cast<Eigen::Index>(m) * k);
      MMap(ga.data(), m, k).noalias() = g * bv.mat().transpose();
      Tape::sweep_add(sw, an, ga);
    }
    if (bn >= 0) {
      Eigen::ArrayXd gb(static_cast<Eigen::Index>(k) * p);
      MMap(gb.data(), k, p).noalias() = av.mat().transpose() * g;
      Tape::sweep_add(sw, bn, gb);
    }
  });
}

Tensor transpose2d(const Tensor& a) {
  if (a.rank() != 2) throw std::invalid_argument("transpose2d: rank 2 required");
  const int m = a.extent(0), n = a.extent(1);
  Tensor out({n, m});
  out.mat() = a.mat().transpose();
  Tape* tape = common_tape({&a});
  if (!tape) return out;
  const int an = a.node();
  const int on = static_cast<int>(tape->node_count());
  return tape->record(std::move(out), [an, on, m, n](Tape::Sweep& sw) {
    CMMap g(sw[static_cast<std::size_t>(on)].data(), n, m);
    Eigen::ArrayXd ga(static_cast<Eigen::Index>(m) * n);
    MMap(ga.data(), m, n) = g.transpose();
    Tape::sweep_add(sw, an, ga);
  });
}

namespace {

// im2col patch matrix for 1D "same" convolution: (w, c_in*kw)
RowMat im2col1d(const Tensor& x, int kw) {
  const int cin = x.extent(0), w = x.extent(1), pad = (kw - 1) / 2;
  RowMat m = RowMat::Zero(w, static_cast<Eigen::Index>(cin) * kw);
  const double* xd = x.data();
  for (int p = 0; p < w; ++p)
    for (int ci = 0; ci < cin; ++ci)
      for (int t = 0; t < kw; ++t) {
        const int src = p + t - pad;
        if (src >= 0 && src < w)
          m(p, static_cast<Eigen::Index>(ci) * kw + t) = xd[static_cast<std::int64_t>(ci) * w + src];
      }
  return m;
}

void col2im1d(const RowMat& dm, int cin, int w, int kw, double* dx) {
  const int pad = (kw - 1) / 2;
  for (int p = 0; p < w; ++p)
    for (int ci = 0; ci < cin; ++ci)
      for (int t = 0; t < kw; ++t) {
        const int src = p + t - pad;
        if (src >= 0 && src < w)
          dx[static_cast<std::int64_t>(ci) * w + src] += dm(p, static_cast<Eigen::Index>(ci) * kw + t);
      }
}

RowMat im2col2d(const Tensor& x, int kh, int kw) {
  const int cin = x.extent(0), h = x.extent(1), w = x.extent(2);
  const int ph = (kh - 1) / 2, pw = (kw - 1) / 2;
  RowMat m = RowMat::Zero(static_cast<Eigen::Index>(h) * w, static_cast<Eigen::Index>(cin) * kh * kw);
  const double* xd = x.data();
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      const Eigen::Index row = static_cast<Eigen::Index>(r) * w + c;
      for (int ci = 0; ci < cin; ++ci)
        for (int u = 0; u < kh; ++u) {
          const int sr = r + u - ph;
          if (sr < 0 || sr >= h) continue;
          for (int v = 0; v < kw; ++v) {
            const int sc = c + v - pw;
            if (sc < 0 || sc >= w) continue;
            m(row, (static_cast<Eigen::Index>(ci) * kh + u) * kw + v) =
                xd[(static_cast<std::int64_t>(ci) * h + sr) * w + sc];
          }
        }
    }
  return m;
}

void col2im2d(const RowMat& dm, int cin, int h, int w, int kh, int kw, double* dx) {
  const int ph = (kh - 1) / 2, pw = (kw - 1) / 2;
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      const Eigen::Index row = static_cast<Eigen::Index>(r) * w + c;
      for (int ci = 0; ci < cin; ++ci)
        for (int u = 0; u < kh; ++u) {
          const int sr = r + u - ph;
          if (sr < 0 || sr >= h) continue;
          for (int v = 0; v < kw; ++v) {
            const int sc = c + v - pw;
            if (sc < 0 || sc >= w) continue;
            dx[(static_cast<std::int64_t>(ci) * h + sr) * w + sc] +=
                dm(row, (static_cast<Eigen::Index>(ci) * kh + u) * kw + v);
          }
        }
    }
}

}  // namespace

Tensor conv1d(const Tensor& x, const Tensor& k, const Tensor& bias) {
  if (x.rank() != 2 || k.rank() != 3 || bias.rank() != 1)
    throw std::invalid_argument("conv1d: x (c_in,w), k (c_out,c_in,kw), bias (c_out) required");
  const int cin = x.extent(0), w = x.extent(1);
  const int cout = k.extent(0), kw = k.extent(2);
  if (k.extent(1) != cin) throw std::invalid_argument("conv1d: kernel in-channels mismatch");
  if (bias.extent(0) != cout) throw std::invalid_argument("conv1d: bias length mismatch");
  if (kw % 2 == 0) throw std::invalid_argument("conv1d: kernel width must be odd");

  auto m = std::make_shared<RowMat>(im2col1d(x, kw));
  CMMap kmat = as_mat(k, cout, cin * kw);
  Tensor out({cout, w});
  out.mat().noalias() = kmat * m->transpose();
  out.mat().colwise() += Eigen::Map<const Eigen::VectorXd>(bias.data(), cout);

  Tape* tape = common_tape({&x, &k, &bias});
  if (!tape) return out;
  const int xn = x.tracked() ? x.node() : -1;
  const int kn = k.tracked() ? k.node() : -1;
  const int bn = bias.tracked() ? bias.node() : -1;
  const int on = static_cast<int>(tape->node_count());
  Tensor kv = k;
  return tape->record(std::move(out), [=](Tape::Sweep& sw) {
    CMMap g(sw[static_cast<std::size_t>(on)].data(), cout, w);
    if (bn >= 0) Tape::sweep_add(sw, bn, g.rowwise().sum().array());
    if (kn >= 0) {
      Eigen::ArrayXd gk(static_cast<Eigen::Index>(cout) * cin * kw);
      MMap(gk.data(), cout, cin * kw).noalias() = g * (*m);
      Tape::sweep_add(sw, kn, gk);
    }
    if (xn >= 0) {
      RowMat dm(w, static_cast<Eigen::Index>(cin) * kw);
      dm.noalias() = g.transpose() * as_mat(kv, cout, cin * kw);
      Eigen::ArrayXd gx = Eigen::ArrayXd::Zero(static_cast<Eigen::Index>(cin) * w);
      col2im1d(dm, cin, w, kw, gx.data());
      Tape::sweep_add(sw, xn, gx);
    }
  });
}

Tensor conv2d(const Tensor& x, const Tensor& k, const Tensor& bias) {
  if (x.rank() != 3 || k.rank() != 4 || bias.rank() != 1)
    throw std::invalid_argument("conv2d: x (c_in,h,w), k (c_out,c_in,kh,kw), bias (c_out) required");
  const int cin = x.extent(0), h = x.extent(1), w = x.extent(2);
  const int cout = k.extent(0), kh = k.extent(2), kw = k.extent(3);
  if (k.extent(1) != cin) throw std::invalid_argument("conv2d: kernel in-channels mismatch");
  if (bias.extent(0) != cout) throw std::invalid_argument("conv2d: bias length mismatch");
  if (kh % 2 == 0 || kw % 2 == 0)
    throw std::invalid_argument("conv2d: kernel extents must be odd");

  auto m = std::make_shared<RowMat>(im2col2d(x, kh, kw));
  CMMap kmat = as_mat(k, cout, cin * kh * kw);
  Tensor out({cout, h, w});
  MMap(out.data(), cout, static_cast<Eigen::Index>(h) * w).noalias() = kmat * m->transpose();
  MMap(out.data(), cout, static_cast<Eigen::Index>(h) * w).colwise() +=
      Eigen::Map<const Eigen::VectorXd>(bias.data(), cout);

  Tape* tape = common_tape({&x, &k, &bias});
  if (!tape) return out;
  const int xn = x.tracked() ? x.node() : -1;
  const int kn = k.tracked() ? k.node() : -1;
  const int bn = bias.tracked() ? bias.node() : -1;
  const int on = static_cast<int>(tape->node_count());
  Tensor kv = k;
  return tape->record(std::move(out), [=](Tape::Sweep& sw) {
    CMMap g(sw[static_cast<std::size_t>(on)].data(), cout, static_cast<Eigen::Index>(h) * w);
    if (bn >= 0) Tape::sweep_add(sw, bn, g.rowwise().sum().array());
    if (kn >= 0) {
      Eigen::ArrayXd gk(static_cast<Eigen::Index>(cout) * cin * kh * kw);
      MMap(gk.data(), cout, cin * kh * kw).noalias() = g * (*m);
      Tape::sweep_add(sw, kn, gk);
    }
    if (xn >= 0) {
      RowMat dm(static_cast<Eigen::Index>(h) * w, static_cast<Eigen::Index>(cin) * kh * kw);
      dm.noalias() = g.transpose() * as_mat(kv, cout, cin * kh * kw);
      Eigen::ArrayXd gx = Eigen::ArrayXd::Zero(static_cast<Eigen::Index>(cin) * h * w);
      col2im2d(dm, cin, h, w, kh, kw, gx.data());
      Tape::sweep_add(sw, xn, gx);
    }
  });
}

Tensor dense(const Tensor& x, const Tensor& w, const Tensor& b) {
  if (x.rank() != 1 || w.rank() != 2 || b.rank() != 1)
    throw std::invalid_argument("dense: x (d_in), W (d_out,d_in), b (d_out) required");
  const int din = x.extent(0), dout = w.extent(0);
  if (w.extent(1) != din || b.extent(0) != dout)
    throw std::invalid_argument("dense: dimension mismatch, W " + shape_str(w.shape()) +
                                " x " + shape_str(x.shape()));
  Tensor out({dout});
  Eigen::Map<Eigen::VectorXd>(out.data(), dout).noalias() =
      w.mat() * Eigen::Map<const Eigen::VectorXd>(x.data(), din) +
      Eigen::Map<const Eigen::VectorXd>(b.data(), dout);
  Tape* tape = common_tape({&x, &w, &b});
  if (!tape) return out;
  const int xn = x.tracked() ? x.node() : -1;
  const int wn = w.tracked() ? w.node() : -1;
  const int bn = b.tracked() ? b.node() : -1;
  const int on = static_cast<int>(tape->node_count());
  Tensor xv = x, wv = w;
  return tape->record(std::move(out), [=](Tape::Sweep& sw) {
    Eigen::Map<const Eigen::VectorXd> g(sw[static_cast<std::size_t>(on)].data(), dout);
    if (bn >= 0) Tape::sweep_add(sw, bn, g.array());
    if (wn >= 0) {
      Eigen::ArrayXd gw(static_cast<Eigen::Index>(dout) * din);
      MMap(gw.data(), dout, din).noalias() =
          g * Eigen::Map<const Eigen::VectorXd>(xv.data(), din).transpose();
      Tape::sweep_add(sw, wn, gw);
    }
    if (xn >= 0) {
      Eigen::ArrayXd gx(din);
      Eigen::Map<Eigen::VectorXd>(gx.data(), din).noalias() = wv.mat().transpose() * g;
      Tape::sweep_add(sw, xn, gx);
    }
  });
}

Tensor relu(const Tensor& x) {
  Tensor out(x.shape());
  out.flat() = x.flat().max(0.0);
  Tape* tape = common_tape({&x});
  if (!tape) return out;
  const int xn = x.node();
  const int on = static_cast<int>(tape->node_count());
  Tensor xv = x;
  return tape->record(std::move(out), [xn, on, xv](Tape::Sweep& sw) {
    const Eigen::ArrayXd& g = sw[static_cast<std::size_t>(on)];
    Eigen::ArrayXd gx = (CMap(xv.data(), xv.size()) > 0.0).select(g, 0.0);
    Tape::sweep_add(sw, xn, gx);
  });
}

Tensor sigmoid(const Tensor& x) {
  Tensor out(x.shape());
  const double* xd = x.data();
  double* yd = out.data();
  const double hi = 1.0 - 1e-16;
  for (std::int64_t i = 0; i < x.size(); ++i) {
    const double v = xd[i];
    double y;
    if (v >= 0) {
      y = 1.0 / (1.0 + std::exp(-v));
    } else {
      const double e = std::exp(v);
      y = e / (1.0 + e);
    }
    yd[i] = std::min(std::max(y, 1e-300), hi);
  }
  Tape* tape = common_tape({&x});
  if (!tape) return out;
  const int xn = x.node();
  const int on = static_cast<int>(tape->node_count());
  Tensor yv = out;
  return tape->record(std::move(out), [xn, on, yv](Tape::Sweep& sw) {
    const Eigen::ArrayXd& g = sw[static_cast<std::size_t>(on)];
    CMap y(yv.data(), yv.size());
    Tape::sweep_add(sw, xn, (y * (1.0 - y) * g).eval());
  });
}

namespace {

void softmax_row(const double* x, double* y, int m, double tau) {
  double mx = x[0];
  for (int i = 1; i < m; ++i) mx = std::max(mx, x[i]);
  double s = 0;
  for (int i = 0; i < m; ++i) {
    y[i] = std::exp((x[i] - mx) / tau);
    s += y[i];
  }
  for (int i = 0; i < m; ++i) y[i] /= s;
}

void softmax_row_grad(const double* y, const double* g, double* gx, int m, double tau) {
  double dot = 0;
  for (int i = 0; i < m; ++i) dot += g[i] * y[i];
  for (int i = 0; i < m; ++i) gx[i] += y[i] * (g[i] - dot) / tau;
}

Tensor softmax_impl(const Tensor& x, double tau, int rows, int m) {
  Tensor out(x.shape());
  for (int r = 0; r < rows; ++r)
    softmax_row(x.data() + static_cast<std::int64_t>(r) * m, out.data() + static_cast<std::int64_t>(r) * m, m, tau);
  Tape* tape = common_tape({&x});
  if (!tape) return out;
  const int xn = x.node();
  const int on = static_cast<int>(tape->node_count());
  Tensor yv = out;
  return tape->record(std::move(out), [xn, on, yv, rows, m, tau](Tape::Sweep& sw) {
    const Eigen::ArrayXd& g = sw[static_cast<std::size_t>(on)];
    Eigen::ArrayXd gx = Eigen::ArrayXd::Zero(yv.size());
    for (int r = 0; r < rows; ++r)
      softmax_row_grad(yv.data() + static_cast<std::int64_t>(r) * m,
                       g.data() + static_cast<std::int64_t>(r) * m,
                       gx.data() + static_cast<std::int64_t>(r) * m, m, tau);
    Tape::sweep_add(sw, xn, gx);
  });
}

}  // namespace

Tensor softmax_temp(const Tensor& x, double tau) {
  if (!(tau > 0)) throw std::invalid_argument("softmax_temp: tau must be positive");
  if (x.rank() != 1) throw std::invalid_argument("softmax_temp: rank-1 input required");
  return softmax_impl(x, tau, 1, x.extent(0));
}

Tensor softmax_temp_rows(const Tensor& x, double tau) {
  if (!(tau > 0)) throw std::invalid_argument("softmax_temp_rows: tau must be positive");
  if (x.rank() != 2) throw std::invalid_argument("softmax_temp_rows: rank-2 input required");
  return softmax_impl(x, tau, x.extent(0), x.extent(1));
}

Tensor global_average_pool(const Tensor& x) {
  if (x.rank() != 2) throw std::invalid_argument("global_average_pool: rank-2 (m,d) input required");
  const int m = x.extent(0), d = x.extent(1);
  Tensor out({d});
  Eigen::Map<Eigen::RowVectorXd>(out.data(), d) = x.mat().colwise().mean();
  Tape* tape = common_tape({&x});
  if (!tape) return out;
  const int xn = x.node();
  const int on = static_cast<int>(tape->node_count());
  return tape->record(std::move(out), [xn, on, m, d](Tape::Sweep& sw) {
    const Eigen::ArrayXd& g = sw[static_cast<std::size_t>(on)];
    Eigen::ArrayXd gx(static_cast<Eigen::Index>(m) * d);
    MMap(gx.data(), m, d).rowwise() = Eigen::Map<const Eigen::RowVectorXd>(g.data(), d) / m;
    Tape::sweep_add(sw, xn, gx);
  });
}

Tensor l2_normalize_rows(const Tensor& x, double eps) {
  if (x.rank() != 2) throw std::invalid_argument("l2_normalize_rows: rank-2 input required");
  const int m = x.extent(0), c = x.extent(1);
  Tensor out({m, c});
  Eigen::VectorXd norms(m);
  for (int r = 0; r < m; ++r) {
    const double n = x.mat().row(r).norm();
    norms[r] = std::max(n, eps);
    out.mat().row(r) = x.mat().row(r) / norms[r];
  }
  Tape* tape = common_tape({&x});
  if (!tape) return out;
  const int xn = x.node();
  const int on = static_cast<int>(tape->node_count());
  Tensor yv = out;
  return tape->record(std::move(out), [xn, on, yv, norms, m, c](Tape::Sweep& sw) {
    CMMap g(sw[static_cast<std::size_t>(on)].data(), m, c);
    Eigen::ArrayXd gx(static_cast<Eigen::Index>(m) * c);
    MMap gxm(gx.data(), m, c);
    for (int r = 0; r < m; ++r) {
      const auto yr = yv.mat().row(r);
      const double dot = g.row(r).dot(yr);
      gxm.row(r) = (g.row(r) - dot * yr) / norms[r];
    }
    Tape::sweep_add(sw, xn, gx);
  });
}

Tensor concat(const std::vector<Tensor>& xs, int axis) {
  if (xs.empty()) throw std::invalid_argument("concat: empty input list");
  const int rank = xs[0].rank();
  if (axis < 0 || axis >= rank) throw std::invalid_argument("concat: axis out of range");
  Shape shape = xs[0].shape();
  int total = 0;
  for (const Tensor& t : xs) {
    if (t.rank() != rank) throw std::invalid_argument("concat: rank mismatch");
    for (int a = 0; a < rank; ++a)
      if (a != axis && t.extent(a) != shape[static_cast<std::size_t>(a)])
        throw std::invalid_argument("concat: extent mismatch on non-concat axis");
    total += t.extent(axis);
  }
  shape[static_cast<std::size_t>(axis)] = total;

  std::int64_t outer = 1, inner = 1;
  for (int a = 0; a < axis; ++a) outer *= shape[static_cast<std::size_t>(a)];
  for (int a = axis + 1; a < rank; ++a) inner *= shape[static_cast<std::size_t>(a)];

  Tensor out(shape);
  const std::int64_t out_row = static_cast<std::int64_t>(total) * inner;
  std::int64_t col_off = 0;
  for (const Tensor& t : xs) {
    const std::int64_t blk = static_cast<std::int64_t>(t.extent(axis)) * inner;
    for (std::int64_t o = 0; o < outer; ++o)
      std::copy_n(t.data() + o * blk, blk, out.data() + o * out_row + col_off);
    col_off += blk;
  }

  std::vector<const Tensor*> ptrs;
  ptrs.reserve(xs.size());
  Tape* tape = nullptr;
  for (const Tensor& t : xs) {
    if (!t.tracked()) continue;
    if (tape && t.tape() != tape) throw std::invalid_argument("concat: mixed tapes");
    tape = t.tape();
  }
  if (!tape) return out;
  struct Piece {
    int node;
    std::int64_t blk;
  };
  std::vector<Piece> pieces;
  pieces.reserve(xs.size());
  for (const Tensor& t : xs)
    pieces.push_back({t.tracked() ? t.node() : -1, static_cast<std::int64_t>(t.extent(axis)) * inner});
  const int on = static_cast<int>(tape->node_count());
  return tape->record(std::move(out), [on, pieces, outer, out_row](Tape::Sweep& sw) {
    const Eigen::ArrayXd& g = sw[static_cast<std::size_t>(on)];
    std::int64_t col_off = 0;
    for (const Piece& pc : pieces) {
      if (pc.node >= 0) {
        Eigen::ArrayXd gp(outer * pc.blk);
        for (std::int64_t o = 0; o < outer; ++o)
          std::copy_n(g.data() + o * out_row + col_off, pc.blk, gp.data() + o * pc.blk);
        Tape::sweep_add(sw, pc.node, gp);
      }
      col_off += pc.blk;
    }
  });
}

Tensor reshape(const Tensor& x, Shape shape) {
  if (shape_size(shape) != x.size())
    throw std::invalid_argument("reshape: element count mismatch, " + shape_str(x.shape()) +
                                " -> " + shape_str(shape));
  Tensor out(std::move(shape));
  out.flat() = x.flat();
  Tape* tape = common_tape({&x});
  if (!tape) return out;
  const int xn = x.node();
  const int on = static_cast<int>(tape->node_count());
  return tape->record(std::move(out), [xn, on](Tape::Sweep& sw) {
    Tape::sweep_add(sw, xn, sw[static_cast<std::size_t>(on)]);
  });
}

Tensor mse_loss(const Tensor& pred, const Tensor& target) {
  if (!shape_equal(pred.shape(), target.shape()))
    throw std::invalid_argument("mse_loss: shape mismatch");
  const double n = static_cast<double>(pred.size());
  Eigen::ArrayXd diff = pred.flat() - target.flat();
  Tensor out = Tensor::scalar(diff.square().sum() / n);
  Tape* tape = common_tape({&pred, &target});
  if (!tape) return out;
  const int pn = pred.tracked() ? pred.node() : -1;
  const int tn = target.tracked() ? target.node() : -1;
  const int on = static_cast<int>(tape->node_count());
  auto dptr = std::make_shared<Eigen::ArrayXd>(std::move(diff));
  return tape->record(std::move(out), [pn, tn, on, dptr, n](Tape::Sweep& sw) {
    const double g = sw[static_cast<std::size_t>(on)][0];
    Eigen::ArrayXd gp = (2.0 * g / n) * (*dptr);
    if (pn >= 0) Tape::sweep_add(sw, pn, gp);
    if (tn >= 0) Tape::sweep_add(sw, tn, (-gp).eval());
  });
}

Tensor bce_loss(const Tensor& pred, const Tensor& target) {
  if (!shape_equal(pred.shape(), target.shape()))
    throw std::invalid_argument("bce_loss: shape mismatch");
  for (std::int64_t i = 0; i < pred.size(); ++i) {
    if (!(pred.data()[i] >= 0.0 && pred.data()[i] <= 1.0))
      throw std::invalid_argument("bce_loss: predictions must lie in [0,1]");
    if (!(target.data()[i] >= 0.0 && target.data()[i] <= 1.0))
      throw std::invalid_argument("bce_loss: targets must lie in [0,1]");
  }
  const double n = static_cast<double>(pred.size());
  const double lo = 1e-12, hi = 1.0 - 1e-12;
  Eigen::ArrayXd p = pred.flat().min(hi).max(lo);
  const auto t = target.flat();
  const double loss = -((t * p.log()) + (1.0 - t) * (1.0 - p).log()).sum() / n;
  Tensor out = Tensor::scalar(loss);
  Tape* tape = common_tape({&pred, &target});
  if (!tape) return out;
  const int pn = pred.tracked() ? pred.node() : -1;
  const int tn = target.tracked() ? target.node() : -1;
  const int on = static_cast<int>(tape->node_count());
  auto pptr = std::make_shared<Eigen::ArrayXd>(std::move(p));
  Tensor tv = target;
  return tape->record(std::move(out), [pn, tn, on, pptr, tv, n](Tape::Sweep& sw) {
    const double g = sw[static_cast<std::size_t>(on)][0];
    const auto& p = *pptr;
    const auto t = tv.flat();
    if (pn >= 0) {
      Eigen::ArrayXd gp = g / n * ((1.0 - t) / (1.0 - p) - t / p);
      Tape::sweep_add(sw, pn, gp);
    }
    if (tn >= 0) {
      Eigen::ArrayXd gt = g / n * ((1.0 - p).log() - p.log());
      Tape::sweep_add(sw, tn, gt);
    }
  });
}

Tensor sum(const Tensor& x) {
  Tensor out = Tensor::scalar(x.flat().sum());
  Tape* tape = common_tape({&x});
  if (!tape) return out;
  const int xn = x.node();
  const int on = static_cast<int>(tape->node_count());
  const std::int64_t sz = x.size();
  return tape->record(std::move(out), [xn, on, sz](Tape::Sweep& sw) {
    const double g = sw[static_cast<std::size_t>(on)][0];
    Tape::sweep_add(sw, xn, Eigen::ArrayXd::Constant(sz, g));
  });
}

}  // namespace fsce
