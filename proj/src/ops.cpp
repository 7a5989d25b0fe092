#include "gig/ops.hpp"

#include <cmath>
#include <functional>
#include <stdexcept>

namespace gig::ad {

namespace {

void check_same_shape(const Var& a, const Var& b, const char* op) {
  if (a.shape() != b.shape())
    throw std::invalid_argument(std::string(op) + ": shape mismatch " +
                                shape_str(a.shape()) + " vs " +
                                shape_str(b.shape()));
  if (a.tape() != b.tape())
    throw std::invalid_argument(std::string(op) + ": operands on different tapes");
}

// Accumulates go (already multiplied by local derivative) into `in` if needed.
inline bool wants_grad(const std::shared_ptr<Node>& n) {
  return n->requires_grad;
}

Var binary_op(const char* name, const Var& a, const Var& b,
              const std::function<double(double, double)>& fwd,
              const std::function<void(double, double, double, double&, double&)>& bwd) {
  check_same_shape(a, b, name);
  Tape* tape = a.tape();
  const bool rg = a.requires_grad() || b.requires_grad();
  Var out = tape->make_result(a.shape(), rg);
  auto an = a.node(), bn = b.node(), on = out.node();
  const std::size_t n = an->value.size();
  for (std::size_t i = 0; i < n; ++i)
    on->value[i] = fwd(an->value[i], bn->value[i]);
  if (rg) {
    tape->record([an, bn, on, bwd, n]() {
      if (!on->grad) return;
      const auto& go = *on->grad;
      const bool ga = wants_grad(an), gb = wants_grad(bn);
      std::vector<double>* agrad = ga ? &an->ensure_grad() : nullptr;
      std::vector<double>* bgrad = gb ? &bn->ensure_grad() : nullptr;
      for (std::size_t i = 0; i < n; ++i) {
        double da = 0, db = 0;
        bwd(an->value[i], bn->value[i], go[i], da, db);
        if (agrad) (*agrad)[i] += da;
        if (bgrad) (*bgrad)[i] += db;
      }
    });
  }
  return out;
}

Var unary_op(const Var& a, const std::function<double(double)>& fwd,
             const std::function<double(double, double)>& dydx /* (x, y) */) {
  Tape* tape = a.tape();
  const bool rg = a.requires_grad();
  Var out = tape->make_result(a.shape(), rg);
  auto an = a.node(), on = out.node();
  const std::size_t n = an->value.size();
  for (std::size_t i = 0; i < n; ++i) on->value[i] = fwd(an->value[i]);
  if (rg) {
    tape->record([an, on, dydx, n]() {
      if (!on->grad) return;
      const auto& go = *on->grad;
      auto& ga = an->ensure_grad();
      for (std::size_t i = 0; i < n; ++i)
        ga[i] += go[i] * dydx(an->value[i], on->value[i]);
    });
  }
  return out;
}

}  // namespace

Var add(const Var& a, const Var& b) {
  return binary_op("add", a, b, [](double x, double y) { return x + y; },
                   [](double, double, double g, double& da, double& db) {
                     da = g;
                     db = g;
                   });
}

Var sub(const Var& a, const Var& b) {
  return binary_op("sub", a, b, [](double x, double y) { return x - y; },
                   [](double, double, double g, double& da, double& db) {
                     da = g;
                     db = -g;
                   });
}

Var mul(const Var& a, const Var& b) {
  return binary_op("mul", a, b, [](double x, double y) { return x * y; },
                   [](double x, double y, double g, double& da, double& db) {
                     da = g * y;
                     db = g * x;
                   });
}

Var scalar_mul(const Var& a, double s) {
  return unary_op(a, [s](double x) { return s * x; },
                  [s](double, double) { return s; });
}

Var negate(const Var& a) {
  return unary_op(a, [](double x) { return -x; },
                  [](double, double) { return -1.0; });
}

Var exp(const Var& a) {
  return unary_op(a, [](double x) { return std::exp(x); },
                  [](double, double y) { return y; });
}

Var log(const Var& a) {
  for (double x : a.value())
    if (!(x > 0.0))
      throw std::domain_error("log of non-positive value");
  return unary_op(a, [](double x) { return std::log(x); },
                  [](double x, double) { return 1.0 / x; });
}

Var tanh(const Var& a) {
  return unary_op(a, [](double x) { return std::tanh(x); },
                  [](double, double y) { return 1.0 - y * y; });
}

Var relu(const Var& a) {
  return unary_op(a, [](double x) { return x > 0.0 ? x : 0.0; },
                  [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var leaky_relu(const Var& a, double slope) {
  return unary_op(a, [slope](double x) { return x > 0.0 ? x : slope * x; },
                  [slope](double x, double) { return x > 0.0 ? 1.0 : slope; });
}

Var clamp(const Var& a, double lo, double hi) {
  if (!(lo <= hi)) throw std::invalid_argument("clamp: lo > hi");
  return unary_op(
      a, [lo, hi](double x) { return x < lo ? lo : (x > hi ? hi : x); },
      [lo, hi](double x, double) { return (x > lo && x < hi) ? 1.0 : 0.0; });
}

Var linear(const Var& x, const Var& w, const Var& bias) {
  if (x.shape().size() != 2 || w.shape().size() != 2 || bias.shape().size() != 1)
    throw std::invalid_argument("linear: expected x[b,in], w[in,out], bias[out]");
  const int b = x.shape()[0], in = x.shape()[1];
  const int out_dim = w.shape()[1];
  if (w.shape()[0] != in || bias.shape()[0] != out_dim)
    throw std::invalid_argument("linear: dimension mismatch x" +
                                shape_str(x.shape()) + " w" + shape_str(w.shape()) +
                                " bias" + shape_str(bias.shape()));
  Tape* tape = x.tape();
  const bool rg = x.requires_grad() || w.requires_grad() || bias.requires_grad();
  Var y = tape->make_result({b, out_dim}, rg);
  auto xn = x.node(), wn = w.node(), bn = bias.node(), yn = y.node();
  for (int i = 0; i < b; ++i) {
    double* yr = &yn->value[static_cast<std::size_t>(i) * out_dim];
    for (int o = 0; o < out_dim; ++o) yr[o] = bn->value[o];
    for (int k = 0; k < in; ++k) {
      const double xv = xn->value[static_cast<std::size_t>(i) * in + k];
      const double* wr = &wn->value[static_cast<std::size_t>(k) * out_dim];
      for (int o = 0; o < out_dim; ++o) yr[o] += xv * wr[o];
    }
  }
  if (rg) {
    tape->record([xn, wn, bn, yn, b, in, out_dim]() {
      if (!yn->grad) return;
      const auto& go = *yn->grad;
      if (wants_grad(xn)) {
        auto& gx = xn->ensure_grad();
        for (int i = 0; i < b; ++i) {
          const double* gr = &go[static_cast<std::size_t>(i) * out_dim];
          for (int k = 0; k < in; ++k) {
            const double* wr = &wn->value[static_cast<std::size_t>(k) * out_dim];
            double acc = 0.0;
            for (int o = 0; o < out_dim; ++o) acc += gr[o] * wr[o];
            gx[static_cast<std::size_t>(i) * in + k] += acc;
          }
        }
      }
      if (wants_grad(wn)) {
        auto& gw = wn->ensure_grad();
        for (int i = 0; i < b; ++i) {
          const double* gr = &go[static_cast<std::size_t>(i) * out_dim];
          for (int k = 0; k < in; ++k) {
            const double xv = xn->value[static_cast<std::size_t>(i) * in + k];
            double* gwr = &gw[static_cast<std::size_t>(k) * out_dim];
            for (int o = 0; o < out_dim; ++o) gwr[o] += xv * gr[o];
          }
        }
      }
      if (wants_grad(bn)) {
        auto& gb = bn->ensure_grad();
        for (int i = 0; i < b; ++i) {
          const double* gr = &go[static_cast<std::size_t>(i) * out_dim];
          for (int o = 0; o < out_dim; ++o) gb[o] += gr[o];
        }
      }
    });
  }
  return y;
}

Var conv2d(const Var& x, const Var& k, const Var& bias) {
  if (x.shape().size() != 4 || k.shape().size() != 4 || bias.shape().size() != 1)
    throw std::invalid_argument(
        "conv2d: expected x[b,cin,h,w], k[cout,cin,kh,kw], bias[cout]");
  const int nb = x.shape()[0], cin = x.shape()[1], h = x.shape()[2],
            w = x.shape()[3];
  const int cout = k.shape()[0], kh = k.shape()[2], kw = k.shape()[3];
  if (k.shape()[1] != cin)
    throw std::invalid_argument("conv2d: channel mismatch");
  if (bias.shape()[0] != cout)
    throw std::invalid_argument("conv2d: bias size mismatch");
  if (kh > h || kw > w)
    throw std::invalid_argument("conv2d: kernel larger than input");
  const int ho = h - kh + 1, wo = w - kw + 1;

  Tape* tape = x.tape();
  const bool rg = x.requires_grad() || k.requires_grad() || bias.requires_grad();
  Var y = tape->make_result({nb, cout, ho, wo}, rg);
  auto xn = x.node(), kn = k.node(), bn = bias.node(), yn = y.node();

  const auto xi = [=](int n, int c) {
    return (static_cast<std::size_t>(n) * cin + c) * h * w;
  };
  const auto yi = [=](int n, int c) {
    return (static_cast<std::size_t>(n) * cout + c) * ho * wo;
  };
  const auto ki = [=](int co, int ci, int p) {
    return ((static_cast<std::size_t>(co) * cin + ci) * kh + p) * kw;
  };

  for (int n = 0; n < nb; ++n)
    for (int co = 0; co < cout; ++co) {
      double* yplane = &yn->value[yi(n, co)];
      const double bv = bn->value[co];
      for (int t = 0; t < ho * wo; ++t) yplane[t] = bv;
      for (int ci = 0; ci < cin; ++ci)
        for (int p = 0; p < kh; ++p)
          for (int q = 0; q < kw; ++q) {
            const double wgt = kn->value[ki(co, ci, p) + q];
            const double* xbase = &xn->value[xi(n, ci) + static_cast<std::size_t>(p) * w + q];
            for (int i = 0; i < ho; ++i) {
              const double* xr = xbase + static_cast<std::size_t>(i) * w;
              double* yr = yplane + static_cast<std::size_t>(i) * wo;
              for (int j = 0; j < wo; ++j) yr[j] += wgt * xr[j];
            }
          }
    }

  if (rg) {
    tape->record([xn, kn, bn, yn, nb, cin, cout, h, w, kh, kw, ho, wo, xi, yi, ki]() {
      if (!yn->grad) return;
      const auto& go = *yn->grad;
      const bool gx_wanted = wants_grad(xn), gk_wanted = wants_grad(kn),
                 gb_wanted = wants_grad(bn);
      std::vector<double>* gx = gx_wanted ? &xn->ensure_grad() : nullptr;
      std::vector<double>* gk = gk_wanted ? &kn->ensure_grad() : nullptr;
      std::vector<double>* gb = gb_wanted ? &bn->ensure_grad() : nullptr;
      for (int n = 0; n < nb; ++n)
        for (int co = 0; co < cout; ++co) {
          const double* gplane = &go[yi(n, co)];
          if (gb) {
            double acc = 0.0;
            for (int t = 0; t < ho * wo; ++t) acc += gplane[t];
            (*gb)[co] += acc;
          }
          if (!gx && !gk) continue;
          for (int ci = 0; ci < cin; ++ci)
            for (int p = 0; p < kh; ++p)
              for (int q = 0; q < kw; ++q) {
                const double wgt = kn->value[ki(co, ci, p) + q];
                const std::size_t xoff = xi(n, ci) + static_cast<std::size_t>(p) * w + q;
                double kacc = 0.0;
                for (int i = 0; i < ho; ++i) {
                  const double* gr = gplane + static_cast<std::size_t>(i) * wo;
                  const std::size_t row = xoff + static_cast<std::size_t>(i) * w;
                  if (gx) {
                    double* gxr = &(*gx)[row];
                    for (int j = 0; j < wo; ++j) gxr[j] += wgt * gr[j];
                  }
                  if (gk) {
                    const double* xr = &xn->value[row];
                    for (int j = 0; j < wo; ++j) kacc += xr[j] * gr[j];
                  }
                }
                if (gk) (*gk)[ki(co, ci, p) + q] += kacc;
              }
        }
    });
  }
  return y;
}

Var upsample_nearest2x(const Var& x) {
  if (x.shape().size() != 4)
    throw std::invalid_argument("upsample_nearest2x: expected x[b,c,h,w]");
  const int nb = x.shape()[0], c = x.shape()[1], h = x.shape()[2],
            w = x.shape()[3];
  Tape* tape = x.tape();
  const bool rg = x.requires_grad();
  Var y = tape->make_result({nb, c, 2 * h, 2 * w}, rg);
  auto xn = x.node(), yn = y.node();
  const int planes = nb * c;
  for (int pl = 0; pl < planes; ++pl) {
    const double* xp = &xn->value[static_cast<std::size_t>(pl) * h * w];
    double* yp = &yn->value[static_cast<std::size_t>(pl) * 4 * h * w];
    for (int i = 0; i < h; ++i)
      for (int j = 0; j < w; ++j) {
        const double v = xp[static_cast<std::size_t>(i) * w + j];
        const std::size_t base = (static_cast<std::size_t>(2 * i) * 2 * w) + 2 * j;
        yp[base] = v;
        yp[base + 1] = v;
        yp[base + 2 * w] = v;
        yp[base + 2 * w + 1] = v;
      }
  }
  if (rg) {
    tape->record([xn, yn, planes, h, w]() {
      if (!yn->grad) return;
      const auto& go = *yn->grad;
      auto& gx = xn->ensure_grad();
      for (int pl = 0; pl < planes; ++pl) {
        const double* gp = &go[static_cast<std::size_t>(pl) * 4 * h * w];
        double* gxp = &gx[static_cast<std::size_t>(pl) * h * w];
        for (int i = 0; i < h; ++i)
          for (int j = 0; j < w; ++j) {
            const std::size_t base = (static_cast<std::size_t>(2 * i) * 2 * w) + 2 * j;
            gxp[static_cast<std::size_t>(i) * w + j] +=
                gp[base] + gp[base + 1] + gp[base + 2 * w] + gp[base + 2 * w + 1];
          }
      }
    });
  }
  return y;
}

namespace {

void axis_extents(const std::vector<int>& shape, int axis, std::int64_t& outer,
                  std::int64_t& ax, std::int64_t& inner) {
  outer = 1;
  inner = 1;
  for (int i = 0; i < axis; ++i) outer *= shape[i];
  ax = shape[axis];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) inner *= shape[i];
}

std::vector<int> shape_without_axis(const std::vector<int>& shape, int axis) {
  std::vector<int> out;
  for (int i = 0; i < static_cast<int>(shape.size()); ++i)
    if (i != axis) out.push_back(shape[i]);
  if (out.empty()) out.push_back(1);
  return out;
}

void check_axis(const Var& x, std::optional<int> axis, const char* op) {
  if (axis && (*axis < 0 || *axis >= static_cast<int>(x.shape().size())))
    throw std::invalid_argument(std::string(op) + ": invalid axis " +
                                std::to_string(*axis) + " for shape " +
                                shape_str(x.shape()));
}

Var reduce_linear(const Var& x, std::optional<int> axis, double denom_unused,
                  bool take_mean) {
  Tape* tape = x.tape();
  const bool rg = x.requires_grad();
  auto xn = x.node();
  if (!axis) {
    const double denom = take_mean ? static_cast<double>(x.numel()) : 1.0;
    Var y = tape->make_result({1}, rg);
    auto yn = y.node();
    double acc = 0.0;
    for (double v : xn->value) acc += v;
    yn->value[0] = acc / denom;
    if (rg) {
      tape->record([xn, yn, denom]() {
        if (!yn->grad) return;
        const double g = (*yn->grad)[0] / denom;
        auto& gx = xn->ensure_grad();
        for (auto& v : gx) v += g;
      });
    }
    return y;
  }
  std::int64_t outer, ax, inner;
  axis_extents(x.shape(), *axis, outer, ax, inner);
  const double denom = take_mean ? static_cast<double>(ax) : 1.0;
  Var y = tape->make_result(shape_without_axis(x.shape(), *axis), rg);
  auto yn = y.node();
  for (std::int64_t o = 0; o < outer; ++o)
    for (std::int64_t a = 0; a < ax; ++a) {
      const double* xr = &xn->value[(o * ax + a) * inner];
      double* yr = &yn->value[o * inner];
      for (std::int64_t i = 0; i < inner; ++i) yr[i] += xr[i];
    }
  if (take_mean)
    for (auto& v : yn->value) v /= denom;
  if (rg) {
    tape->record([xn, yn, outer, ax, inner, denom]() {
      if (!yn->grad) return;
      const auto& go = *yn->grad;
      auto& gx = xn->ensure_grad();
      for (std::int64_t o = 0; o < outer; ++o)
        for (std::int64_t a = 0; a < ax; ++a) {
          double* gxr = &gx[(o * ax + a) * inner];
          const double* gr = &go[o * inner];
          for (std::int64_t i = 0; i < inner; ++i) gxr[i] += gr[i] / denom;
        }
    });
  }
  return y;
}

}  // namespace

Var sum(const Var& x, std::optional<int> axis) {
  check_axis(x, axis, "sum");
  return reduce_linear(x, axis, 1.0, false);
}

Var mean(const Var& x, std::optional<int> axis) {
  check_axis(x, axis, "mean");
  return reduce_linear(x, axis, 1.0, true);
}

Var max(const Var& x, int axis) {
  check_axis(x, axis, "max");
  std::int64_t outer, ax, inner;
  axis_extents(x.shape(), axis, outer, ax, inner);
  Tape* tape = x.tape();
  const bool rg = x.requires_grad();
  Var y = tape->make_result(shape_without_axis(x.shape(), axis), rg);
  auto xn = x.node(), yn = y.node();
  auto argmax = std::make_shared<std::vector<std::int64_t>>(
      static_cast<std::size_t>(outer * inner));
  for (std::int64_t o = 0; o < outer; ++o)
    for (std::int64_t i = 0; i < inner; ++i) {
      double best = xn->value[(o * ax) * inner + i];
      std::int64_t best_a = 0;
      for (std::int64_t a = 1; a < ax; ++a) {
        const double v = xn->value[(o * ax + a) * inner + i];
        if (v > best) {  // strict: ties keep the lowest index
          best = v;
          best_a = a;
        }
      }
      yn->value[o * inner + i] = best;
      (*argmax)[o * inner + i] = best_a;
    }
  if (rg) {
    tape->record([xn, yn, argmax, outer, ax, inner]() {
      if (!yn->grad) return;
      const auto& go = *yn->grad;
      auto& gx = xn->ensure_grad();
      for (std::int64_t o = 0; o < outer; ++o)
        for (std::int64_t i = 0; i < inner; ++i) {
          const std::int64_t a = (*argmax)[o * inner + i];
          gx[(o * ax + a) * inner + i] += go[o * inner + i];
        }
    });
  }
  return y;
}

Var reshape(const Var& x, std::vector<int> shape) {
  if (shape_numel(shape) != x.numel())
    throw std::invalid_argument("reshape: cannot reshape " +
                                shape_str(x.shape()) + " to " + shape_str(shape));
  Tape* tape = x.tape();
  const bool rg = x.requires_grad();
  Var y = tape->make_result(std::move(shape), rg);
  auto xn = x.node(), yn = y.node();
  yn->value = xn->value;
  if (rg) {
    tape->record([xn, yn]() {
      if (!yn->grad) return;
      const auto& go = *yn->grad;
      auto& gx = xn->ensure_grad();
      for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += go[i];
    });
  }
  return y;
}

Var transpose(const Var& x) {
  if (x.shape().size() != 2)
    throw std::invalid_argument("transpose: expected a 2-D tensor");
  const int r = x.shape()[0], c = x.shape()[1];
  Tape* tape = x.tape();
  const bool rg = x.requires_grad();
  Var y = tape->make_result({c, r}, rg);
  auto xn = x.node(), yn = y.node();
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j)
      yn->value[static_cast<std::size_t>(j) * r + i] =
          xn->value[static_cast<std::size_t>(i) * c + j];
  if (rg) {
    tape->record([xn, yn, r, c]() {
      if (!yn->grad) return;
      const auto& go = *yn->grad;
      auto& gx = xn->ensure_grad();
      for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j)
          gx[static_cast<std::size_t>(i) * c + j] +=
              go[static_cast<std::size_t>(j) * r + i];
    });
  }
  return y;
}

Var concat(const std::vector<Var>& xs, int axis) {
  if (xs.empty()) throw std::invalid_argument("concat: no inputs");
  const auto& ref = xs.front().shape();
  if (axis < 0 || axis >= static_cast<int>(ref.size()))
    throw std::invalid_argument("concat: invalid axis");
  std::vector<int> out_shape = ref;
  bool rg = false;
  for (const auto& x : xs) {
    const auto& s = x.shape();
    if (s.size() != ref.size())
      throw std::invalid_argument("concat: rank mismatch");
    for (int i = 0; i < static_cast<int>(s.size()); ++i)
      if (i != axis && s[i] != ref[i])
        throw std::invalid_argument("concat: off-axis shape mismatch " +
                                    shape_str(s) + " vs " + shape_str(ref));
    rg = rg || x.requires_grad();
  }
  out_shape[axis] = 0;
  for (const auto& x : xs) out_shape[axis] += x.shape()[axis];

  std::int64_t outer = 1, inner = 1;
  for (int i = 0; i < axis; ++i) outer *= ref[i];
  for (std::size_t i = axis + 1; i < ref.size(); ++i) inner *= ref[i];

  Tape* tape = xs.front().tape();
  Var y = tape->make_result(out_shape, rg);
  auto yn = y.node();
  const std::int64_t out_block = static_cast<std::int64_t>(out_shape[axis]) * inner;
  std::vector<std::shared_ptr<Node>> nodes;
  std::vector<std::int64_t> offsets;
  std::int64_t off = 0;
  for (const auto& x : xs) {
    auto xn = x.node();
    const std::int64_t block = static_cast<std::int64_t>(x.shape()[axis]) * inner;
    for (std::int64_t o = 0; o < outer; ++o)
      std::copy(xn->value.begin() + o * block, xn->value.begin() + (o + 1) * block,
                yn->value.begin() + o * out_block + off);
    nodes.push_back(std::move(xn));
    offsets.push_back(off);
    off += block;
  }
  if (rg) {
    std::vector<std::int64_t> blocks;
    for (const auto& x : xs)
      blocks.push_back(static_cast<std::int64_t>(x.shape()[axis]) * inner);
    tape->record([yn, nodes, offsets, blocks, outer, out_block]() {
      if (!yn->grad) return;
      const auto& go = *yn->grad;
      for (std::size_t t = 0; t < nodes.size(); ++t) {
        if (!wants_grad(nodes[t])) continue;
        auto& gx = nodes[t]->ensure_grad();
        for (std::int64_t o = 0; o < outer; ++o)
          for (std::int64_t i = 0; i < blocks[t]; ++i)
            gx[o * blocks[t] + i] += go[o * out_block + offsets[t] + i];
      }
    });
  }
  return y;
}

}  // namespace gig::ad
