// Copyright 2026 The cattlepose Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cattlepose/ops.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <sstream>

#include "cattlepose/parallel.hpp"

namespace cattlepose {

namespace {

using detail::Node;

void require_rank(const Tensor& x, int rank, const char* op) {
  if (x.rank() != rank) {
    throw ShapeError(std::string(op) + ": expected rank " + std::to_string(rank) +
                     " input, got " + shape_str(x.shape()));
  }
}

int64_t floor_div(int64_t a, int64_t b) {
  int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

int64_t ceil_div(int64_t a, int64_t b) { return -floor_div(-a, b); }

struct ConvGeom {
  int64_t n, c, h, w, oc, oh, ow, cin_g, cout_g;
  ConvSpec s;
};

// Valid output-column range for kernel column kx: input column
// ox * stride - pad + kx * dilation must land in [0, w).
inline void col_range(const ConvGeom& g, int kx, int64_t& lo, int64_t& hi, int64_t& off) {
  off = static_cast<int64_t>(kx) * g.s.dilation_w - g.s.pad_w;
  lo = std::max<int64_t>(0, ceil_div(-off, g.s.stride_w));
  hi = std::min<int64_t>(g.ow - 1, floor_div(g.w - 1 - off, g.s.stride_w));
}

// Dot product with eight interleaved partial sums, combined in a fixed order.
float dot(const float* a, const float* b, int64_t n) {
  float lane[8] = {0, 0, 0, 0, 0, 0, 0, 0};
  int64_t i = 0;
  for (; i + 8 <= n; i += 8) {
    for (int j = 0; j < 8; ++j) lane[j] += a[i + j] * b[i + j];
  }
  float tail = 0.0f;
  for (; i < n; ++i) tail += a[i] * b[i];
  return ((lane[0] + lane[4]) + (lane[1] + lane[5])) + ((lane[2] + lane[6]) + (lane[3] + lane[7])) +
         tail;
}

void conv_forward_plane(const ConvGeom& g, const float* in_n, const float* weight, float* out,
                        int64_t oc) {
  const int64_t grp = oc / g.cout_g;
  const int kh = g.s.kernel_h, kw = g.s.kernel_w;
  for (int64_t icg = 0; icg < g.cin_g; ++icg) {
    const int64_t ic = grp * g.cin_g + icg;
    const float* in = in_n + ic * g.h * g.w;
    const float* wk = weight + (oc * g.cin_g + icg) * kh * kw;
    for (int ky = 0; ky < kh; ++ky) {
      for (int kx = 0; kx < kw; ++kx) {
        const float wv = wk[ky * kw + kx];
        int64_t lo, hi, off;
        col_range(g, kx, lo, hi, off);
        if (lo > hi) continue;
        for (int64_t oy = 0; oy < g.oh; ++oy) {
          const int64_t iy = oy * g.s.stride_h - g.s.pad_h + static_cast<int64_t>(ky) * g.s.dilation_h;
          if (iy < 0 || iy >= g.h) continue;
          float* orow = out + oy * g.ow;
          const float* irow = in + iy * g.w + off;
          if (g.s.stride_w == 1) {
            for (int64_t ox = lo; ox <= hi; ++ox) orow[ox] += wv * irow[ox];
          } else {
            for (int64_t ox = lo; ox <= hi; ++ox) orow[ox] += wv * irow[ox * g.s.stride_w];
          }
        }
      }
    }
  }
}

// Elementwise op; df(x, y) gives dy/dx from the input and output values.
template <typename F, typename D>
Tensor pointwise(const char* name, const Tensor& x, F f, D df) {
  const auto& in = x.vec();
  std::vector<float> out(in.size());
  for (size_t i = 0; i < in.size(); ++i) out[i] = f(in[i]);
  return Tensor::make_result(name, x.shape(), std::move(out), {x}, [df](Node& self) {
    Node& a = *self.inputs[0];
    if (!a.requires_grad) return;
    auto& ga = a.ensure_grad();
    for (size_t i = 0; i < ga.size(); ++i) ga[i] += self.grad[i] * df(a.data[i], self.data[i]);
  });
}

float sigmoid_value(float v) {
  if (v >= 0.0f) return 1.0f / (1.0f + std::exp(-v));
  const float e = std::exp(v);
  return e / (1.0f + e);
}

struct BroadcastPlan {
  Shape out;
  std::vector<int64_t> sa, sb;  // strides, 0 on broadcast axes
  bool same = false;
};

BroadcastPlan plan_broadcast(const Tensor& a, const Tensor& b, const char* op) {
  BroadcastPlan p;
  const Shape& A = a.shape();
  const Shape& B = b.shape();
  if (A == B) {
    p.out = A;
    p.same = true;
    return p;
  }
  if (A.size() != B.size()) {
    throw ShapeError(std::string(op) + ": rank mismatch " + shape_str(A) + " vs " + shape_str(B));
  }
  const size_t r = A.size();
  p.out.resize(r);
  for (size_t i = 0; i < r; ++i) {
    if (A[i] != B[i] && A[i] != 1 && B[i] != 1) {
      throw ShapeError(std::string(op) + ": cannot broadcast " + shape_str(A) + " with " +
                       shape_str(B) + " (axis " + std::to_string(i) + ")");
    }
    p.out[i] = std::max(A[i], B[i]);
  }
  p.sa.assign(r, 0);
  p.sb.assign(r, 0);
  int64_t ka = 1, kb = 1;
  for (size_t i = r; i-- > 0;) {
    p.sa[i] = A[i] == 1 ? 0 : ka;
    p.sb[i] = B[i] == 1 ? 0 : kb;
    ka *= A[i];
    kb *= B[i];
  }
  return p;
}

template <typename F>
void for_each_broadcast(const BroadcastPlan& p, F f) {
  const int64_t total = shape_numel(p.out);
  if (p.same) {
    for (int64_t i = 0; i < total; ++i) f(i, i, i);
    return;
  }
  const size_t r = p.out.size();
  std::vector<int64_t> idx(r, 0);
  int64_t ia = 0, ib = 0;
  for (int64_t i = 0; i < total; ++i) {
    f(i, ia, ib);
    for (size_t d = r; d-- > 0;) {
      ++idx[d];
      ia += p.sa[d];
      ib += p.sb[d];
      if (idx[d] < p.out[d]) break;
      ia -= p.sa[d] * p.out[d];
      ib -= p.sb[d] * p.out[d];
      idx[d] = 0;
    }
  }
}

int64_t reflect_index(int64_t i, int64_t n) {
  if (n == 1) return 0;
  const int64_t period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i >= n ? period - i : i;
}

int64_t source_index(int64_t i, int64_t n, PadMode mode) {
  if (i >= 0 && i < n) return i;
  switch (mode) {
    case PadMode::kZero:
      return -1;
    case PadMode::kReflect:
      return reflect_index(i, n);
    case PadMode::kReplicate:
      return std::clamp<int64_t>(i, 0, n - 1);
  }
  return -1;
}

}  // namespace

// ---------------------------------------------------------------------------
// ConvSpec

ConvSpec ConvSpec::pointwise(int64_t in, int64_t out) {
  ConvSpec s;
  s.in_channels = in;
  s.out_channels = out;
  return s;
}

ConvSpec ConvSpec::dense(int64_t in, int64_t out, int kernel, int stride) {
  ConvSpec s;
  s.in_channels = in;
  s.out_channels = out;
  s.kernel_h = s.kernel_w = kernel;
  s.stride_h = s.stride_w = stride;
  s.pad_h = s.pad_w = (kernel - 1) / 2;
  return s;
}

ConvSpec ConvSpec::depthwise(int64_t channels, int kernel, int stride, int dilation) {
  ConvSpec s = dense(channels, channels, kernel, stride);
  s.groups = channels;
  s.dilation_h = s.dilation_w = dilation;
  s.pad_h = s.pad_w = dilation * (kernel - 1) / 2;
  return s;
}

void ConvSpec::validate() const {
  if (in_channels <= 0 || out_channels <= 0 || groups <= 0) {
    throw ShapeError("conv spec: channel counts and groups must be positive");
  }
  if (in_channels % groups != 0 || out_channels % groups != 0) {
    throw ShapeError("conv spec: in_channels " + std::to_string(in_channels) + " and out_channels " +
                     std::to_string(out_channels) + " must be divisible by groups " +
                     std::to_string(groups));
  }
  if (kernel_h <= 0 || kernel_w <= 0 || stride_h <= 0 || stride_w <= 0 || dilation_h <= 0 ||
      dilation_w <= 0 || pad_h < 0 || pad_w < 0) {
    throw ShapeError("conv spec: kernel, stride and dilation must be positive, padding >= 0");
  }
}

Shape ConvSpec::weight_shape() const {
  return {out_channels, in_channels / groups, kernel_h, kernel_w};
}

int64_t ConvSpec::out_h(int64_t h) const {
  return floor_div(h + 2 * pad_h - static_cast<int64_t>(dilation_h) * (kernel_h - 1) - 1, stride_h) + 1;
}

int64_t ConvSpec::out_w(int64_t w) const {
  return floor_div(w + 2 * pad_w - static_cast<int64_t>(dilation_w) * (kernel_w - 1) - 1, stride_w) + 1;
}

// ---------------------------------------------------------------------------
// conv2d

Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias, const ConvSpec& spec) {
  spec.validate();
  require_rank(x, 4, "conv2d");
  if (x.dim(1) != spec.in_channels) {
    throw ShapeError("conv2d: input channel dimension (dim 1) is " + std::to_string(x.dim(1)) +
                     ", spec expects in_channels " + std::to_string(spec.in_channels));
  }
  const Shape ws = spec.weight_shape();
  if (weight.shape() != ws) {
    static const char* names[] = {"out_channels", "in_channels/groups", "kernel_h", "kernel_w"};
    std::string which = "rank";
    if (weight.rank() == 4) {
      for (int i = 0; i < 4; ++i) {
        if (weight.dim(i) != ws[static_cast<size_t>(i)]) {
          which = names[i];
          break;
        }
      }
    }
    throw ShapeError("conv2d: weight shape " + shape_str(weight.shape()) + " mismatches " +
                     shape_str(ws) + " in " + which);
  }
  if (bias.defined() && bias.shape() != Shape{spec.out_channels}) {
    throw ShapeError("conv2d: bias shape " + shape_str(bias.shape()) + " expected [" +
                     std::to_string(spec.out_channels) + "]");
  }
  ConvGeom g{x.dim(0), x.dim(1), x.dim(2), x.dim(3), spec.out_channels,
             spec.out_h(x.dim(2)), spec.out_w(x.dim(3)), spec.in_channels / spec.groups,
             spec.out_channels / spec.groups, spec};
  if (g.oh <= 0 || g.ow <= 0) {
    throw ShapeError("conv2d: non-positive output size " + std::to_string(g.oh) + "x" +
                     std::to_string(g.ow) + " for input " + shape_str(x.shape()));
  }
  const int64_t plane = g.oh * g.ow;
  std::vector<float> out(static_cast<size_t>(g.n * g.oc * plane), 0.0f);
  const float* xin = x.vec().data();
  const float* wp = weight.vec().data();
  const float* bp = bias.defined() ? bias.vec().data() : nullptr;
  parallel_for(0, g.n * g.oc, [&](int64_t idx) {
    const int64_t n = idx / g.oc, oc = idx % g.oc;
    float* o = out.data() + idx * plane;
    if (bp) std::fill(o, o + plane, bp[oc]);
    conv_forward_plane(g, xin + n * g.c * g.h * g.w, wp, o, oc);
  });

  std::vector<Tensor> inputs{x, weight};
  if (bias.defined()) inputs.push_back(bias);
  return Tensor::make_result(
      "conv2d", {g.n, g.oc, g.oh, g.ow}, std::move(out), std::move(inputs), [g](Node& self) {
        Node& xn = *self.inputs[0];
        Node& wn = *self.inputs[1];
        const float* go = self.grad.data();
        const int kh = g.s.kernel_h, kw = g.s.kernel_w;
        const int64_t plane = g.oh * g.ow;
        if (xn.requires_grad) {
          auto& gx = xn.ensure_grad();
          const float* w = wn.data.data();
          parallel_for(0, g.n * g.c, [&](int64_t idx) {
            const int64_t n = idx / g.c, ic = idx % g.c;
            const int64_t grp = ic / g.cin_g, icg = ic % g.cin_g;
            float* gi = gx.data() + idx * g.h * g.w;
            for (int64_t ocg = 0; ocg < g.cout_g; ++ocg) {
              const int64_t oc = grp * g.cout_g + ocg;
              const float* gplane = go + (n * g.oc + oc) * plane;
              const float* wk = w + (oc * g.cin_g + icg) * kh * kw;
              for (int ky = 0; ky < kh; ++ky) {
                for (int kx = 0; kx < kw; ++kx) {
                  const float wv = wk[ky * kw + kx];
                  int64_t lo, hi, off;
                  col_range(g, kx, lo, hi, off);
                  if (lo > hi) continue;
                  for (int64_t oy = 0; oy < g.oh; ++oy) {
                    const int64_t iy = oy * g.s.stride_h - g.s.pad_h +
                                       static_cast<int64_t>(ky) * g.s.dilation_h;
                    if (iy < 0 || iy >= g.h) continue;
                    float* irow = gi + iy * g.w + off;
                    const float* grow = gplane + oy * g.ow;
                    if (g.s.stride_w == 1) {
                      for (int64_t ox = lo; ox <= hi; ++ox) irow[ox] += wv * grow[ox];
                    } else {
                      for (int64_t ox = lo; ox <= hi; ++ox) irow[ox * g.s.stride_w] += wv * grow[ox];
                    }
                  }
                }
              }
            }
          });
        }
        if (wn.requires_grad) {
          auto& gw = wn.ensure_grad();
          const float* xin = xn.data.data();
          const bool pointwise_dense = kh == 1 && kw == 1 && g.s.stride_h == 1 && g.s.stride_w == 1 &&
                                       g.s.pad_h == 0 && g.s.pad_w == 0;
          parallel_for(0, g.oc, [&](int64_t oc) {
            const int64_t grp = oc / g.cout_g;
            for (int64_t icg = 0; icg < g.cin_g; ++icg) {
              const int64_t ic = grp * g.cin_g + icg;
              for (int ky = 0; ky < kh; ++ky) {
                for (int kx = 0; kx < kw; ++kx) {
                  int64_t lo, hi, off;
                  col_range(g, kx, lo, hi, off);
                  float acc = 0.0f;
                  if (pointwise_dense) {
                    for (int64_t n = 0; n < g.n; ++n) {
                      acc += dot(xin + (n * g.c + ic) * g.h * g.w, go + (n * g.oc + oc) * plane, plane);
                    }
                  } else if (lo <= hi) {
                    for (int64_t n = 0; n < g.n; ++n) {
                      const float* in = xin + (n * g.c + ic) * g.h * g.w;
                      const float* gplane = go + (n * g.oc + oc) * plane;
                      for (int64_t oy = 0; oy < g.oh; ++oy) {
                        const int64_t iy = oy * g.s.stride_h - g.s.pad_h +
                                           static_cast<int64_t>(ky) * g.s.dilation_h;
                        if (iy < 0 || iy >= g.h) continue;
                        const float* irow = in + iy * g.w + off;
                        const float* grow = gplane + oy * g.ow;
                        if (g.s.stride_w == 1) {
                          acc += dot(grow + lo, irow + lo, hi - lo + 1);
                        } else {
                          for (int64_t ox = lo; ox <= hi; ++ox) acc += grow[ox] * irow[ox * g.s.stride_w];
                        }
                      }
                    }
                  }
                  gw[static_cast<size_t>(((oc * g.cin_g + icg) * kh + ky) * kw + kx)] += acc;
                }
              }
            }
          });
        }
        if (self.inputs.size() > 2 && self.inputs[2]->requires_grad) {
          auto& gb = self.inputs[2]->ensure_grad();
          for (int64_t oc = 0; oc < g.oc; ++oc) {
            float acc = 0.0f;
            for (int64_t n = 0; n < g.n; ++n) {
              const float* gplane = go + (n * g.oc + oc) * plane;
              for (int64_t i = 0; i < plane; ++i) acc += gplane[i];
            }
            gb[static_cast<size_t>(oc)] += acc;
          }
        }
      });
}

// ---------------------------------------------------------------------------
// Activations

Activation Activation::parse(const std::string& text) {
  Activation a;
  if (text == "sigmoid") {
    a.kind = ActivationKind::kSigmoid;
  } else if (text == "relu") {
    a.kind = ActivationKind::kRelu;
  } else if (text == "hardswish") {
    a.kind = ActivationKind::kHardSwish;
  } else if (text.rfind("leaky_relu", 0) == 0) {
    a.kind = ActivationKind::kLeakyRelu;
    if (text.size() > 10) {
      if (text[10] != ':') throw std::invalid_argument("unknown activation kind '" + text + "'");
      a.slope = std::stof(text.substr(11));
    }
    if (!(a.slope > 0.0f && a.slope < 1.0f)) {
      throw std::invalid_argument("leaky_relu slope must lie in (0, 1)");
    }
  } else {
    throw std::invalid_argument("unknown activation kind '" + text + "'");
  }
  return a;
}

Tensor activation(const Tensor& x, const Activation& act) {
  switch (act.kind) {
    case ActivationKind::kSigmoid:
      return sigmoid(x);
    case ActivationKind::kRelu:
      return relu(x);
    case ActivationKind::kLeakyRelu:
      return leaky_relu(x, act.slope);
    case ActivationKind::kHardSwish:
      return hardswish(x);
  }
  throw std::invalid_argument("unknown activation kind");
}

Tensor hardswish(const Tensor& x) {
  return pointwise(
      "hardswish", x, [](float v) { return v * std::clamp(v + 3.0f, 0.0f, 6.0f) / 6.0f; },
      [](float v, float) {
        if (v < -3.0f || v == 3.0f || v == -3.0f) return 0.0f;
        if (v > 3.0f) return 1.0f;
        return (2.0f * v + 3.0f) / 6.0f;
      });
}

Tensor sigmoid(const Tensor& x) {
  return pointwise("sigmoid", x, sigmoid_value, [](float, float y) { return y * (1.0f - y); });
}

Tensor relu(const Tensor& x) {
  return pointwise(
      "relu", x, [](float v) { return v > 0.0f ? v : 0.0f; },
      [](float v, float) { return v > 0.0f ? 1.0f : 0.0f; });
}

Tensor leaky_relu(const Tensor& x, float slope) {
  if (!(slope > 0.0f && slope < 1.0f)) throw std::invalid_argument("leaky_relu slope must lie in (0, 1)");
  return pointwise(
      "leaky_relu", x, [slope](float v) { return v > 0.0f ? v : slope * v; },
      [slope](float v, float) { return v > 0.0f ? 1.0f : slope; });
}

// ---------------------------------------------------------------------------
// Normalization

Tensor layer_norm_channels(const Tensor& x, const Tensor& gamma, const Tensor& beta, float eps) {
  require_rank(x, 4, "layer_norm");
  const int64_t N = x.dim(0), C = x.dim(1), HW = x.dim(2) * x.dim(3);
  if (gamma.shape() != Shape{C} || beta.shape() != Shape{C}) {
    throw ShapeError("layer_norm: gamma/beta must be [" + std::to_string(C) + "], got " +
                     shape_str(gamma.shape()) + " / " + shape_str(beta.shape()));
  }
  auto xhat = std::make_shared<std::vector<float>>(x.vec().size());
  auto inv = std::make_shared<std::vector<float>>(static_cast<size_t>(N * HW));
  std::vector<float> out(x.vec().size());
  const float* xp = x.vec().data();
  const float* gp = gamma.vec().data();
  const float* bp = beta.vec().data();
  for (int64_t n = 0; n < N; ++n) {
    for (int64_t p = 0; p < HW; ++p) {
      double m = 0.0;
      for (int64_t c = 0; c < C; ++c) m += xp[(n * C + c) * HW + p];
      m /= static_cast<double>(C);
      double v = 0.0;
      for (int64_t c = 0; c < C; ++c) {
        const double d = xp[(n * C + c) * HW + p] - m;
        v += d * d;
      }
      v /= static_cast<double>(C);
      const double is = 1.0 / std::sqrt(v + eps);
      (*inv)[static_cast<size_t>(n * HW + p)] = static_cast<float>(is);
      for (int64_t c = 0; c < C; ++c) {
        const size_t i = static_cast<size_t>((n * C + c) * HW + p);
        const float xh = static_cast<float>((xp[i] - m) * is);
        (*xhat)[i] = xh;
        out[i] = gp[c] * xh + bp[c];
      }
    }
  }
  return Tensor::make_result(
      "layer_norm", x.shape(), std::move(out), {x, gamma, beta}, [=](Node& self) {
        Node& xn = *self.inputs[0];
        Node& gn = *self.inputs[1];
        Node& bn = *self.inputs[2];
        const float* g = self.grad.data();
        const float* gam = gn.data.data();
        if (gn.requires_grad || bn.requires_grad) {
          for (int64_t c = 0; c < C; ++c) {
            float dg = 0.0f, db = 0.0f;
            for (int64_t n = 0; n < N; ++n) {
              for (int64_t p = 0; p < HW; ++p) {
                const size_t i = static_cast<size_t>((n * C + c) * HW + p);
                dg += g[i] * (*xhat)[i];
                db += g[i];
              }
            }
            if (gn.requires_grad) gn.ensure_grad()[static_cast<size_t>(c)] += dg;
            if (bn.requires_grad) bn.ensure_grad()[static_cast<size_t>(c)] += db;
          }
        }
        if (xn.requires_grad) {
          auto& gx = xn.ensure_grad();
          for (int64_t n = 0; n < N; ++n) {
            for (int64_t p = 0; p < HW; ++p) {
              double s1 = 0.0, s2 = 0.0;
              for (int64_t c = 0; c < C; ++c) {
                const size_t i = static_cast<size_t>((n * C + c) * HW + p);
                const double dxh = static_cast<double>(g[i]) * gam[c];
                s1 += dxh;
                s2 += dxh * (*xhat)[i];
              }
              const double is = (*inv)[static_cast<size_t>(n * HW + p)];
              for (int64_t c = 0; c < C; ++c) {
                const size_t i = static_cast<size_t>((n * C + c) * HW + p);
                const double dxh = static_cast<double>(g[i]) * gam[c];
                gx[i] += static_cast<float>(is / C * (C * dxh - s1 - (*xhat)[i] * s2));
              }
            }
          }
        }
      });
}

void BatchNormStats::reset(int64_t channels) {
  mean.assign(static_cast<size_t>(channels), 0.0f);
  var.assign(static_cast<size_t>(channels), 1.0f);
}

Tensor batch_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, BatchNormStats& stats,
                  NormMode mode, float momentum, float eps) {
  require_rank(x, 4, "batch_norm");
  const int64_t N = x.dim(0), C = x.dim(1), HW = x.dim(2) * x.dim(3);
  if (gamma.shape() != Shape{C} || beta.shape() != Shape{C}) {
    throw ShapeError("batch_norm: gamma/beta must be [" + std::to_string(C) + "]");
  }
  if (stats.initialized() && static_cast<int64_t>(stats.mean.size()) != C) {
    throw ShapeError("batch_norm: running statistics hold " + std::to_string(stats.mean.size()) +
                     " channels, input has " + std::to_string(C));
  }
  if (mode == NormMode::kEval && !stats.initialized()) {
    throw std::logic_error("batch_norm: eval mode requires initialized running statistics");
  }
  const int64_t M = N * HW;
  const float* xp = x.vec().data();
  auto xhat = std::make_shared<std::vector<float>>(x.vec().size());
  auto inv = std::make_shared<std::vector<float>>(static_cast<size_t>(C));
  std::vector<float> out(x.vec().size());
  std::vector<float> batch_mean(static_cast<size_t>(C)), batch_var(static_cast<size_t>(C));
  for (int64_t c = 0; c < C; ++c) {
    double m, v;
    if (mode == NormMode::kTrain) {
      double s = 0.0;
      for (int64_t n = 0; n < N; ++n)
        for (int64_t p = 0; p < HW; ++p) s += xp[(n * C + c) * HW + p];
      m = s / static_cast<double>(M);
      double q = 0.0;
      for (int64_t n = 0; n < N; ++n)
        for (int64_t p = 0; p < HW; ++p) {
          const double d = xp[(n * C + c) * HW + p] - m;
          q += d * d;
        }
      v = q / static_cast<double>(M);
      batch_mean[static_cast<size_t>(c)] = static_cast<float>(m);
      batch_var[static_cast<size_t>(c)] =
          static_cast<float>(M > 1 ? q / static_cast<double>(M - 1) : v);
    } else {
      m = stats.mean[static_cast<size_t>(c)];
      v = stats.var[static_cast<size_t>(c)];
    }
    const double is = 1.0 / std::sqrt(v + eps);
    (*inv)[static_cast<size_t>(c)] = static_cast<float>(is);
    const float gm = gamma.vec()[static_cast<size_t>(c)], bt = beta.vec()[static_cast<size_t>(c)];
    for (int64_t n = 0; n < N; ++n) {
      for (int64_t p = 0; p < HW; ++p) {
        const size_t i = static_cast<size_t>((n * C + c) * HW + p);
        const float xh = static_cast<float>((xp[i] - m) * is);
        (*xhat)[i] = xh;
        out[i] = gm * xh + bt;
      }
    }
  }
  if (mode == NormMode::kTrain) {
    if (!stats.initialized()) {
      stats.mean = batch_mean;
      stats.var = batch_var;
    } else {
      for (int64_t c = 0; c < C; ++c) {
        const size_t k = static_cast<size_t>(c);
        stats.mean[k] = (1.0f - momentum) * stats.mean[k] + momentum * batch_mean[k];
        stats.var[k] = (1.0f - momentum) * stats.var[k] + momentum * batch_var[k];
      }
    }
  }
  const bool train = mode == NormMode::kTrain;
  return Tensor::make_result(
      "batch_norm", x.shape(), std::move(out), {x, gamma, beta}, [=](Node& self) {
        Node& xn = *self.inputs[0];
        Node& gn = *self.inputs[1];
        Node& bn = *self.inputs[2];
        const float* g = self.grad.data();
        for (int64_t c = 0; c < C; ++c) {
          double s1 = 0.0, s2 = 0.0;
          for (int64_t n = 0; n < N; ++n)
            for (int64_t p = 0; p < HW; ++p) {
              const size_t i = static_cast<size_t>((n * C + c) * HW + p);
              s1 += g[i];
              s2 += static_cast<double>(g[i]) * (*xhat)[i];
            }
          if (gn.requires_grad) gn.ensure_grad()[static_cast<size_t>(c)] += static_cast<float>(s2);
          if (bn.requires_grad) bn.ensure_grad()[static_cast<size_t>(c)] += static_cast<float>(s1);
          if (!xn.requires_grad) continue;
          auto& gx = xn.ensure_grad();
          const double gm = gn.data[static_cast<size_t>(c)];
          const double is = (*inv)[static_cast<size_t>(c)];
          for (int64_t n = 0; n < N; ++n)
            for (int64_t p = 0; p < HW; ++p) {
              const size_t i = static_cast<size_t>((n * C + c) * HW + p);
              if (train) {
                gx[i] += static_cast<float>(gm * is / M * (M * g[i] - s1 - (*xhat)[i] * s2));
              } else {
                gx[i] += static_cast<float>(gm * is * g[i]);
              }
            }
        }
      });
}

// ---------------------------------------------------------------------------
// Pooling and resampling

Tensor pool2d(const Tensor& x, PoolKind kind, int kernel_h, int kernel_w, int stride_h,
              int stride_w) {
  require_rank(x, 4, "pool2d");
  if (kernel_h <= 0 || kernel_w <= 0) throw ShapeError("pool2d: empty pooling window");
  if (stride_h <= 0 || stride_w <= 0) throw ShapeError("pool2d: stride must be positive");
  const int64_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  if (kernel_h > H || kernel_w > W) {
    throw ShapeError("pool2d: window " + std::to_string(kernel_h) + "x" + std::to_string(kernel_w) +
                     " exceeds spatial extent " + std::to_string(H) + "x" + std::to_string(W));
  }
  const int64_t OH = (H - kernel_h) / stride_h + 1, OW = (W - kernel_w) / stride_w + 1;
  std::vector<float> out(static_cast<size_t>(N * C * OH * OW));
  auto arg = std::make_shared<std::vector<int64_t>>(kind == PoolKind::kMax ? out.size() : 0);
  const float* xp = x.vec().data();
  const float area = static_cast<float>(kernel_h * kernel_w);
  for (int64_t nc = 0; nc < N * C; ++nc) {
    const float* in = xp + nc * H * W;
    for (int64_t oy = 0; oy < OH; ++oy) {
      for (int64_t ox = 0; ox < OW; ++ox) {
        const size_t o = static_cast<size_t>((nc * OH + oy) * OW + ox);
        float acc = kind == PoolKind::kMax ? in[oy * stride_h * W + ox * stride_w] : 0.0f;
        int64_t best = oy * stride_h * W + ox * stride_w;
        for (int ky = 0; ky < kernel_h; ++ky) {
          for (int kx = 0; kx < kernel_w; ++kx) {
            const int64_t i = (oy * stride_h + ky) * W + ox * stride_w + kx;
            if (kind == PoolKind::kMax) {
              if (in[i] > acc) {
                acc = in[i];
                best = i;
              }
            } else {
              acc += in[i];
            }
          }
        }
        if (kind == PoolKind::kMax) {
          out[o] = acc;
          (*arg)[o] = nc * H * W + best;
        } else {
          out[o] = acc / area;
        }
      }
    }
  }
  return Tensor::make_result(
      kind == PoolKind::kMax ? "max_pool2d" : "avg_pool2d", {N, C, OH, OW}, std::move(out), {x},
      [=](Node& self) {
        Node& xn = *self.inputs[0];
        if (!xn.requires_grad) return;
        auto& gx = xn.ensure_grad();
        const float* g = self.grad.data();
        if (kind == PoolKind::kMax) {
          for (size_t o = 0; o < arg->size(); ++o) gx[static_cast<size_t>((*arg)[o])] += g[o];
          return;
        }
        for (int64_t nc = 0; nc < N * C; ++nc)
          for (int64_t oy = 0; oy < OH; ++oy)
            for (int64_t ox = 0; ox < OW; ++ox) {
              const float gv = g[(nc * OH + oy) * OW + ox] / area;
              for (int ky = 0; ky < kernel_h; ++ky)
                for (int kx = 0; kx < kernel_w; ++kx)
                  gx[static_cast<size_t>(nc * H * W + (oy * stride_h + ky) * W + ox * stride_w + kx)] += gv;
            }
      });
}

Tensor global_pool(const Tensor& x, PoolKind kind) {
  require_rank(x, 4, "global_pool");
  const int64_t N = x.dim(0), C = x.dim(1), HW = x.dim(2) * x.dim(3);
  if (HW == 0) throw ShapeError("global_pool: empty pooling window");
  std::vector<float> out(static_cast<size_t>(N * C));
  auto arg = std::make_shared<std::vector<int64_t>>(out.size());
  const float* xp = x.vec().data();
  for (int64_t nc = 0; nc < N * C; ++nc) {
    const float* in = xp + nc * HW;
    if (kind == PoolKind::kMax) {
      int64_t best = 0;
      for (int64_t i = 1; i < HW; ++i)
        if (in[i] > in[best]) best = i;
      out[static_cast<size_t>(nc)] = in[best];
      (*arg)[static_cast<size_t>(nc)] = nc * HW + best;
    } else {
      double s = 0.0;
      for (int64_t i = 0; i < HW; ++i) s += in[i];
      out[static_cast<size_t>(nc)] = static_cast<float>(s / static_cast<double>(HW));
    }
  }
  return Tensor::make_result(
      kind == PoolKind::kMax ? "global_max_pool" : "global_avg_pool", {N, C, 1, 1}, std::move(out),
      {x}, [=](Node& self) {
        Node& xn = *self.inputs[0];
        if (!xn.requires_grad) return;
        auto& gx = xn.ensure_grad();
        for (int64_t nc = 0; nc < N * C; ++nc) {
          const float g = self.grad[static_cast<size_t>(nc)];
          if (kind == PoolKind::kMax) {
            gx[static_cast<size_t>((*arg)[static_cast<size_t>(nc)])] += g;
          } else {
            const float gv = g / static_cast<float>(HW);
            for (int64_t i = 0; i < HW; ++i) gx[static_cast<size_t>(nc * HW + i)] += gv;
          }
        }
      });
}

Tensor channel_pool(const Tensor& x, PoolKind kind) {
  require_rank(x, 4, "channel_pool");
  const int64_t N = x.dim(0), C = x.dim(1), HW = x.dim(2) * x.dim(3);
  if (C == 0) throw ShapeError("channel_pool: empty pooling window");
  std::vector<float> out(static_cast<size_t>(N * HW));
  auto arg = std::make_shared<std::vector<int64_t>>(out.size());
  const float* xp = x.vec().data();
  for (int64_t n = 0; n < N; ++n) {
    for (int64_t p = 0; p < HW; ++p) {
      const size_t o = static_cast<size_t>(n * HW + p);
      if (kind == PoolKind::kMax) {
        int64_t best = n * C * HW + p;
        for (int64_t c = 1; c < C; ++c) {
          const int64_t i = (n * C + c) * HW + p;
          if (xp[i] > xp[best]) best = i;
        }
        out[o] = xp[best];
        (*arg)[o] = best;
      } else {
        double s = 0.0;
        for (int64_t c = 0; c < C; ++c) s += xp[(n * C + c) * HW + p];
        out[o] = static_cast<float>(s / static_cast<double>(C));
      }
    }
  }
  return Tensor::make_result(
      kind == PoolKind::kMax ? "channel_max_pool" : "channel_avg_pool",
      {N, 1, x.dim(2), x.dim(3)}, std::move(out), {x}, [=](Node& self) {
        Node& xn = *self.inputs[0];
        if (!xn.requires_grad) return;
        auto& gx = xn.ensure_grad();
        for (int64_t n = 0; n < N; ++n)
          for (int64_t p = 0; p < HW; ++p) {
            const size_t o = static_cast<size_t>(n * HW + p);
            if (kind == PoolKind::kMax) {
              gx[static_cast<size_t>((*arg)[o])] += self.grad[o];
            } else {
              const float gv = self.grad[o] / static_cast<float>(C);
              for (int64_t c = 0; c < C; ++c) gx[static_cast<size_t>((n * C + c) * HW + p)] += gv;
            }
          }
      });
}

namespace {

struct Tap {
  int64_t i0, i1;
  float w0, w1;
};

// Half-pixel source taps for x2 upsampling along one axis.
std::vector<Tap> upsample_taps(int64_t in) {
  std::vector<Tap> taps(static_cast<size_t>(2 * in));
  for (int64_t o = 0; o < 2 * in; ++o) {
    float src = (static_cast<float>(o) + 0.5f) * 0.5f - 0.5f;
    if (src < 0.0f) src = 0.0f;
    const int64_t i0 = std::min<int64_t>(static_cast<int64_t>(src), in - 1);
    const int64_t i1 = std::min<int64_t>(i0 + 1, in - 1);
    const float l1 = src - static_cast<float>(i0);
    taps[static_cast<size_t>(o)] = {i0, i1, 1.0f - l1, l1};
  }
  return taps;
}

}  // namespace

Tensor bilinear_upsample_x2(const Tensor& x) {
  require_rank(x, 4, "bilinear_upsample_x2");
  const int64_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  if (H < 1 || W < 1) throw ShapeError("bilinear_upsample_x2: empty spatial extent");
  const int64_t OH = 2 * H, OW = 2 * W;
  auto ty = std::make_shared<std::vector<Tap>>(upsample_taps(H));
  auto tx = std::make_shared<std::vector<Tap>>(upsample_taps(W));
  std::vector<float> out(static_cast<size_t>(N * C * OH * OW));
  const float* xp = x.vec().data();
  for (int64_t nc = 0; nc < N * C; ++nc) {
    const float* in = xp + nc * H * W;
    for (int64_t oy = 0; oy < OH; ++oy) {
      const Tap& a = (*ty)[static_cast<size_t>(oy)];
      for (int64_t ox = 0; ox < OW; ++ox) {
        const Tap& b = (*tx)[static_cast<size_t>(ox)];
        out[static_cast<size_t>((nc * OH + oy) * OW + ox)] =
            a.w0 * (b.w0 * in[a.i0 * W + b.i0] + b.w1 * in[a.i0 * W + b.i1]) +
            a.w1 * (b.w0 * in[a.i1 * W + b.i0] + b.w1 * in[a.i1 * W + b.i1]);
      }
    }
  }
  return Tensor::make_result(
      "bilinear_upsample_x2", {N, C, OH, OW}, std::move(out), {x}, [=](Node& self) {
        Node& xn = *self.inputs[0];
        if (!xn.requires_grad) return;
        auto& gx = xn.ensure_grad();
        for (int64_t nc = 0; nc < N * C; ++nc) {
          float* gi = gx.data() + nc * H * W;
          for (int64_t oy = 0; oy < OH; ++oy) {
            const Tap& a = (*ty)[static_cast<size_t>(oy)];
            for (int64_t ox = 0; ox < OW; ++ox) {
              const Tap& b = (*tx)[static_cast<size_t>(ox)];
              const float g = self.grad[static_cast<size_t>((nc * OH + oy) * OW + ox)];
              gi[a.i0 * W + b.i0] += a.w0 * b.w0 * g;
              gi[a.i0 * W + b.i1] += a.w0 * b.w1 * g;
              gi[a.i1 * W + b.i0] += a.w1 * b.w0 * g;
              gi[a.i1 * W + b.i1] += a.w1 * b.w1 * g;
            }
          }
        }
      });
}

// ---------------------------------------------------------------------------
// Elementwise

namespace {

enum class BinaryKind { kAdd, kSub, kMul };

Tensor binary(const char* name, const Tensor& a, const Tensor& b, BinaryKind kind) {
  auto plan = std::make_shared<BroadcastPlan>(plan_broadcast(a, b, name));
  std::vector<float> out(static_cast<size_t>(shape_numel(plan->out)));
  const float* ap = a.vec().data();
  const float* bp = b.vec().data();
  for_each_broadcast(*plan, [&](int64_t o, int64_t i, int64_t j) {
    switch (kind) {
      case BinaryKind::kAdd: out[static_cast<size_t>(o)] = ap[i] + bp[j]; break;
      case BinaryKind::kSub: out[static_cast<size_t>(o)] = ap[i] - bp[j]; break;
      case BinaryKind::kMul: out[static_cast<size_t>(o)] = ap[i] * bp[j]; break;
    }
  });
  return Tensor::make_result(name, plan->out, std::move(out), {a, b}, [plan, kind](Node& self) {
    Node& an = *self.inputs[0];
    Node& bn = *self.inputs[1];
    const float* g = self.grad.data();
    if (an.requires_grad) {
      auto& ga = an.ensure_grad();
      const float* bp = bn.data.data();
      for_each_broadcast(*plan, [&](int64_t o, int64_t i, int64_t j) {
        ga[static_cast<size_t>(i)] += kind == BinaryKind::kMul ? g[o] * bp[j] : g[o];
      });
    }
    if (bn.requires_grad) {
      auto& gb = bn.ensure_grad();
      const float* ap = an.data.data();
      for_each_broadcast(*plan, [&](int64_t o, int64_t i, int64_t j) {
        switch (kind) {
          case BinaryKind::kAdd: gb[static_cast<size_t>(j)] += g[o]; break;
          case BinaryKind::kSub: gb[static_cast<size_t>(j)] -= g[o]; break;
          case BinaryKind::kMul: gb[static_cast<size_t>(j)] += g[o] * ap[i]; break;
        }
      });
    }
  });
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) { return binary("add", a, b, BinaryKind::kAdd); }
Tensor sub(const Tensor& a, const Tensor& b) { return binary("sub", a, b, BinaryKind::kSub); }
Tensor mul(const Tensor& a, const Tensor& b) { return binary("mul", a, b, BinaryKind::kMul); }

Tensor scale(const Tensor& x, float s) {
  return pointwise("scale", x, [s](float v) { return s * v; }, [s](float, float) { return s; });
}

Tensor sum(const Tensor& x) {
  double acc = 0.0;
  for (float v : x.vec()) acc += v;
  return Tensor::make_result("sum", {1}, {static_cast<float>(acc)}, {x}, [](Node& self) {
    Node& xn = *self.inputs[0];
    if (!xn.requires_grad) return;
    auto& gx = xn.ensure_grad();
    for (float& v : gx) v += self.grad[0];
  });
}

Tensor mean(const Tensor& x) {
  if (x.numel() == 0) throw ShapeError("mean of an empty tensor");
  return scale(sum(x), 1.0f / static_cast<float>(x.numel()));
}

// ---------------------------------------------------------------------------
// Shape manipulation

Tensor reshape(const Tensor& x, Shape shape) {
  if (shape_numel(shape) != x.numel()) {
    throw ShapeError("reshape: cannot view " + shape_str(x.shape()) + " as " + shape_str(shape));
  }
  std::vector<float> out = x.vec();
  return Tensor::make_result("reshape", std::move(shape), std::move(out), {x}, [](Node& self) {
    Node& xn = *self.inputs[0];
    if (!xn.requires_grad) return;
    auto& gx = xn.ensure_grad();
    for (size_t i = 0; i < gx.size(); ++i) gx[i] += self.grad[i];
  });
}

Tensor concat_channels(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ShapeError("concat_channels: no inputs");
  for (const Tensor& p : parts) require_rank(p, 4, "concat_channels");
  const int64_t N = parts[0].dim(0), H = parts[0].dim(2), W = parts[0].dim(3);
  int64_t C = 0;
  std::vector<int64_t> offsets;
  for (const Tensor& p : parts) {
    if (p.dim(0) != N || p.dim(2) != H || p.dim(3) != W) {
      throw ShapeError("concat_channels: mismatched part " + shape_str(p.shape()) + " vs " +
                       shape_str(parts[0].shape()));
    }
    offsets.push_back(C);
    C += p.dim(1);
  }
  const int64_t HW = H * W;
  std::vector<float> out(static_cast<size_t>(N * C * HW));
  for (size_t k = 0; k < parts.size(); ++k) {
    const int64_t ck = parts[k].dim(1);
    const float* src = parts[k].vec().data();
    for (int64_t n = 0; n < N; ++n) {
      std::copy(src + n * ck * HW, src + (n + 1) * ck * HW,
                out.begin() + (n * C + offsets[k]) * HW);
    }
  }
  return Tensor::make_result(
      "concat_channels", {N, C, H, W}, std::move(out), parts, [=](Node& self) {
        for (size_t k = 0; k < self.inputs.size(); ++k) {
          Node& pn = *self.inputs[k];
          if (!pn.requires_grad) continue;
          auto& gp = pn.ensure_grad();
          const int64_t ck = pn.shape[1];
          for (int64_t n = 0; n < N; ++n) {
            const float* src = self.grad.data() + (n * C + offsets[k]) * HW;
            float* dst = gp.data() + n * ck * HW;
            for (int64_t i = 0; i < ck * HW; ++i) dst[i] += src[i];
          }
        }
      });
}

Tensor slice_channels(const Tensor& x, int64_t begin, int64_t end) {
  require_rank(x, 4, "slice_channels");
  const int64_t N = x.dim(0), C = x.dim(1), HW = x.dim(2) * x.dim(3);
  if (begin < 0 || end > C || begin >= end) {
    throw ShapeError("slice_channels: range [" + std::to_string(begin) + ", " +
                     std::to_string(end) + ") invalid for " + std::to_string(C) + " channels");
  }
  const int64_t K = end - begin;
  std::vector<float> out(static_cast<size_t>(N * K * HW));
  const float* xp = x.vec().data();
  for (int64_t n = 0; n < N; ++n) {
    std::copy(xp + (n * C + begin) * HW, xp + (n * C + end) * HW, out.begin() + n * K * HW);
  }
  return Tensor::make_result(
      "slice_channels", {N, K, x.dim(2), x.dim(3)}, std::move(out), {x}, [=](Node& self) {
        Node& xn = *self.inputs[0];
        if (!xn.requires_grad) return;
        auto& gx = xn.ensure_grad();
        for (int64_t n = 0; n < N; ++n) {
          const float* src = self.grad.data() + n * K * HW;
          float* dst = gx.data() + (n * C + begin) * HW;
          for (int64_t i = 0; i < K * HW; ++i) dst[i] += src[i];
        }
      });
}

Tensor pad2d(const Tensor& x, const Padding2d& pad, PadMode mode) {
  require_rank(x, 4, "pad2d");
  if (pad.top < 0 || pad.bottom < 0 || pad.left < 0 || pad.right < 0) {
    throw ShapeError("pad2d: negative padding");
  }
  const int64_t NC = x.dim(0) * x.dim(1), H = x.dim(2), W = x.dim(3);
  if (H < 1 || W < 1) throw ShapeError("pad2d: empty spatial extent");
  if (mode == PadMode::kReflect &&
      (pad.top >= H || pad.bottom >= H || pad.left >= W || pad.right >= W)) {
    throw ShapeError("pad2d: reflect padding must be smaller than the extent");
  }
  const int64_t OH = H + pad.top + pad.bottom, OW = W + pad.left + pad.right;
  auto src = std::make_shared<std::vector<int64_t>>(static_cast<size_t>(OH * OW));
  for (int64_t oy = 0; oy < OH; ++oy) {
    const int64_t iy = source_index(oy - pad.top, H, mode);
    for (int64_t ox = 0; ox < OW; ++ox) {
      const int64_t ix = source_index(ox - pad.left, W, mode);
      (*src)[static_cast<size_t>(oy * OW + ox)] = (iy < 0 || ix < 0) ? -1 : iy * W + ix;
    }
  }
  std::vector<float> out(static_cast<size_t>(NC * OH * OW), 0.0f);
  const float* xp = x.vec().data();
  for (int64_t nc = 0; nc < NC; ++nc)
    for (int64_t o = 0; o < OH * OW; ++o) {
      const int64_t s = (*src)[static_cast<size_t>(o)];
      if (s >= 0) out[static_cast<size_t>(nc * OH * OW + o)] = xp[nc * H * W + s];
    }
  return Tensor::make_result(
      "pad2d", {x.dim(0), x.dim(1), OH, OW}, std::move(out), {x}, [=](Node& self) {
        Node& xn = *self.inputs[0];
        if (!xn.requires_grad) return;
        auto& gx = xn.ensure_grad();
        for (int64_t nc = 0; nc < NC; ++nc)
          for (int64_t o = 0; o < OH * OW; ++o) {
            const int64_t s = (*src)[static_cast<size_t>(o)];
            if (s >= 0) gx[static_cast<size_t>(nc * H * W + s)] += self.grad[static_cast<size_t>(nc * OH * OW + o)];
          }
      });
}

Tensor crop2d(const Tensor& x, int64_t top, int64_t left, int64_t height, int64_t width) {
  require_rank(x, 4, "crop2d");
  const int64_t NC = x.dim(0) * x.dim(1), H = x.dim(2), W = x.dim(3);
  if (top < 0 || left < 0 || height < 1 || width < 1 || top + height > H || left + width > W) {
    throw ShapeError("crop2d: window out of range for " + shape_str(x.shape()));
  }
  std::vector<float> out(static_cast<size_t>(NC * height * width));
  const float* xp = x.vec().data();
  for (int64_t nc = 0; nc < NC; ++nc)
    for (int64_t y = 0; y < height; ++y)
      std::copy(xp + nc * H * W + (top + y) * W + left, xp + nc * H * W + (top + y) * W + left + width,
                out.begin() + (nc * height + y) * width);
  return Tensor::make_result(
      "crop2d", {x.dim(0), x.dim(1), height, width}, std::move(out), {x}, [=](Node& self) {
        Node& xn = *self.inputs[0];
        if (!xn.requires_grad) return;
        auto& gx = xn.ensure_grad();
        for (int64_t nc = 0; nc < NC; ++nc)
          for (int64_t y = 0; y < height; ++y)
            for (int64_t xx = 0; xx < width; ++xx)
              gx[static_cast<size_t>(nc * H * W + (top + y) * W + left + xx)] +=
                  self.grad[static_cast<size_t>((nc * height + y) * width + xx)];
      });
}

Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  require_rank(x, 2, "linear");
  require_rank(weight, 2, "linear");
  const int64_t M = x.dim(0), IN = x.dim(1), OUT = weight.dim(0);
  if (weight.dim(1) != IN) {
    throw ShapeError("linear: weight in_features (dim 1) is " + std::to_string(weight.dim(1)) +
                     ", input has " + std::to_string(IN));
  }
  if (bias.defined() && bias.shape() != Shape{OUT}) {
    throw ShapeError("linear: bias shape " + shape_str(bias.shape()) + " expected [" +
                     std::to_string(OUT) + "]");
  }
  std::vector<float> out(static_cast<size_t>(M * OUT));
  const float* xp = x.vec().data();
  const float* wp = weight.vec().data();
  const float* bp = bias.defined() ? bias.vec().data() : nullptr;
  parallel_for(0, M, [&](int64_t m) {
    const float* xr = xp + m * IN;
    for (int64_t o = 0; o < OUT; ++o) {
      const float* wr = wp + o * IN;
      out[static_cast<size_t>(m * OUT + o)] = dot(xr, wr, IN) + (bp ? bp[o] : 0.0f);
    }
  });
  std::vector<Tensor> inputs{x, weight};
  if (bias.defined()) inputs.push_back(bias);
  return Tensor::make_result("linear", {M, OUT}, std::move(out), std::move(inputs), [=](Node& self) {
    Node& xn = *self.inputs[0];
    Node& wn = *self.inputs[1];
    const float* g = self.grad.data();
    if (xn.requires_grad) {
      auto& gx = xn.ensure_grad();
      const float* w = wn.data.data();
      parallel_for(0, M, [&](int64_t m) {
        float* gr = gx.data() + m * IN;
        for (int64_t o = 0; o < OUT; ++o) {
          const float gv = g[m * OUT + o];
          const float* wr = w + o * IN;
          for (int64_t i = 0; i < IN; ++i) gr[i] += gv * wr[i];
        }
      });
    }
    if (wn.requires_grad) {
      auto& gw = wn.ensure_grad();
      const float* xin = xn.data.data();
      parallel_for(0, OUT, [&](int64_t o) {
        float* gr = gw.data() + o * IN;
        for (int64_t m = 0; m < M; ++m) {
          const float gv = g[m * OUT + o];
          const float* xr = xin + m * IN;
          for (int64_t i = 0; i < IN; ++i) gr[i] += gv * xr[i];
        }
      });
    }
    if (self.inputs.size() > 2 && self.inputs[2]->requires_grad) {
      auto& gb = self.inputs[2]->ensure_grad();
      for (int64_t o = 0; o < OUT; ++o) {
        float acc = 0.0f;
        for (int64_t m = 0; m < M; ++m) acc += g[m * OUT + o];
        gb[static_cast<size_t>(o)] += acc;
      }
    }
  });
}

}  // namespace cattlepose
