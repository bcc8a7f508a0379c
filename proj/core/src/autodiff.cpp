// Copyright 2026 The memlang Authors
// SPDX-License-Identifier: Apache-2.0

#include "memlang/autodiff.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>

#include "memlang/error.hpp"

namespace memlang::ad {

namespace {
constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;
}  // namespace

Var Tape::leaf(std::span<const double> value, std::span<double> grad,
               std::size_t rows, std::size_t cols) {
  assert(value.size() == rows * cols);
  assert(grad.empty() || grad.size() == rows * cols);
  Node n;
  n.rows = rows;
  n.cols = cols;
  n.value = value.data();
  if (recording_ && !grad.empty()) n.grad = grad.data();
  nodes_.push_back(std::move(n));
  return {nodes_.size() - 1};
}

Var Tape::make(std::size_t rows, std::size_t cols) {
  Node n;
  n.rows = rows;
  n.cols = cols;
  n.value_store.assign(rows * cols, 0.0);
  n.value = n.value_store.data();
  if (recording_) {
    n.grad_store.assign(rows * cols, 0.0);
    n.grad = n.grad_store.data();
  }
  nodes_.push_back(std::move(n));
  return {nodes_.size() - 1};
}

std::span<const double> Tape::value(Var v) const {
  const auto& n = nodes_[v.index];
  return {n.value, n.rows * n.cols};
}

std::span<const double> Tape::grad(Var v) const {
  const auto& n = nodes_[v.index];
  if (!n.grad) return {};
  return {n.grad, n.rows * n.cols};
}

void Tape::check_finite(Var v, const char* op) const {
  for (const double x : value(v))
    if (!std::isfinite(x))
      throw NumericError(std::string("non-finite value in ") + op +
                         (location_.empty() ? "" : " at " + location_));
}

Var Tape::embed(std::span<const std::int32_t> ids, Var table, Var positions) {
  const std::size_t t_len = ids.size();
  const std::size_t d = cols(table);
  assert(cols(positions) == d && rows(positions) >= t_len);
  const Var out = make(t_len, d);
  {
    double* y = mutable_value(out);
    const double* tab = value_ptr(table);
    const double* pos = value_ptr(positions);
    for (std::size_t t = 0; t < t_len; ++t) {
      const double* row = tab + static_cast<std::size_t>(ids[t]) * d;
      for (std::size_t j = 0; j < d; ++j)
        y[t * d + j] = row[j] + pos[t * d + j];
    }
  }
  check_finite(out, "embedding");
  if (recording_) {
    std::vector<std::int32_t> saved(ids.begin(), ids.end());
    backward_.push_back([this, out, table, positions, saved, d] {
      const double* dy = grad_ptr(out);
      double* dtab = grad_ptr(table);
      double* dpos = grad_ptr(positions);
      for (std::size_t t = 0; t < saved.size(); ++t)
        for (std::size_t j = 0; j < d; ++j) {
          if (dtab) dtab[static_cast<std::size_t>(saved[t]) * d + j] += dy[t * d + j];
          if (dpos) dpos[t * d + j] += dy[t * d + j];
        }
    });
  }
  return out;
}

Var Tape::linear(Var x, Var w, Var bias) {
  const std::size_t t_len = rows(x), in = cols(x), out_dim = cols(w);
  assert(rows(w) == in && cols(bias) == out_dim);
  const Var out = make(t_len, out_dim);
  {
    double* y = mutable_value(out);
    const double* xv = value_ptr(x);
    const double* wv = value_ptr(w);
    const double* bv = value_ptr(bias);
    for (std::size_t t = 0; t < t_len; ++t) {
      double* yr = y + t * out_dim;
      std::copy(bv, bv + out_dim, yr);
      for (std::size_t k = 0; k < in; ++k) {
        const double a = xv[t * in + k];
        const double* wr = wv + k * out_dim;
        for (std::size_t j = 0; j < out_dim; ++j) yr[j] += a * wr[j];
      }
    }
  }
  check_finite(out, "linear");
  if (recording_) {
    backward_.push_back([this, out, x, w, bias, t_len, in, out_dim] {
      const double* dy = grad_ptr(out);
      const double* xv = value_ptr(x);
      const double* wv = value_ptr(w);
      if (double* db = grad_ptr(bias))
        for (std::size_t t = 0; t < t_len; ++t)
          for (std::size_t j = 0; j < out_dim; ++j) db[j] += dy[t * out_dim + j];
      if (double* dw = grad_ptr(w))
        for (std::size_t t = 0; t < t_len; ++t)
          for (std::size_t k = 0; k < in; ++k) {
            const double a = xv[t * in + k];
            double* dwr = dw + k * out_dim;
            const double* dyr = dy + t * out_dim;
            for (std::size_t j = 0; j < out_dim; ++j) dwr[j] += a * dyr[j];
          }
      if (double* dx = grad_ptr(x))
        for (std::size_t t = 0; t < t_len; ++t)
          for (std::size_t k = 0; k < in; ++k) {
            const double* wr = wv + k * out_dim;
            const double* dyr = dy + t * out_dim;
            double acc = 0.0;
            for (std::size_t j = 0; j < out_dim; ++j) acc += wr[j] * dyr[j];
            dx[t * in + k] += acc;
          }
    });
  }
  return out;
}

Var Tape::add(Var a, Var b) {
  const std::size_t n = rows(a) * cols(a);
  assert(rows(b) == rows(a) && cols(b) == cols(a));
  const Var out = make(rows(a), cols(a));
  {
    double* y = mutable_value(out);
    const double* av = value_ptr(a);
    const double* bv = value_ptr(b);
    for (std::size_t i = 0; i < n; ++i) y[i] = av[i] + bv[i];
  }
  if (recording_) {
    backward_.push_back([this, out, a, b, n] {
      const double* dy = grad_ptr(out);
      if (double* da = grad_ptr(a))
        for (std::size_t i = 0; i < n; ++i) da[i] += dy[i];
      if (double* db = grad_ptr(b))
        for (std::size_t i = 0; i < n; ++i) db[i] += dy[i];
    });
  }
  return out;
}

Var Tape::layer_norm(Var x, Var gain_offset, Var bias, double eps) {
  const std::size_t t_len = rows(x), d = cols(x);
  const Var out = make(t_len, d);
  std::vector<double> xhat(t_len * d);
  std::vector<double> inv_sigma(t_len);
  {
    const double* xv = value_ptr(x);
    const double* g = value_ptr(gain_offset);
    const double* b = value_ptr(bias);
    double* y = mutable_value(out);
    for (std::size_t t = 0; t < t_len; ++t) {
      const double* xr = xv + t * d;
      double mean = 0.0;
      for (std::size_t j = 0; j < d; ++j) mean += xr[j];
      mean /= static_cast<double>(d);
      double var = 0.0;
      for (std::size_t j = 0; j < d; ++j) var += (xr[j] - mean) * (xr[j] - mean);
      var /= static_cast<double>(d);
      const double is = 1.0 / std::sqrt(var + eps);
      inv_sigma[t] = is;
      for (std::size_t j = 0; j < d; ++j) {
        const double h = (xr[j] - mean) * is;
        xhat[t * d + j] = h;
        y[t * d + j] = (1.0 + g[j]) * h + b[j];
      }
    }
  }
  check_finite(out, "layer norm");
  if (recording_) {
    backward_.push_back([this, out, x, gain_offset, bias, t_len, d,
                         xhat = std::move(xhat),
                         inv_sigma = std::move(inv_sigma)] {
      const double* dy = grad_ptr(out);
      const double* g = value_ptr(gain_offset);
      double* dg = grad_ptr(gain_offset);
      double* db = grad_ptr(bias);
      double* dx = grad_ptr(x);
      std::vector<double> dh(d);
      for (std::size_t t = 0; t < t_len; ++t) {
        const double* dyr = dy + t * d;
        const double* hr = xhat.data() + t * d;
        double mean_dh = 0.0, mean_dh_h = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
          if (dg) dg[j] += dyr[j] * hr[j];
          if (db) db[j] += dyr[j];
          dh[j] = dyr[j] * (1.0 + g[j]);
          mean_dh += dh[j];
          mean_dh_h += dh[j] * hr[j];
        }
        if (!dx) continue;
        mean_dh /= static_cast<double>(d);
        mean_dh_h /= static_cast<double>(d);
        for (std::size_t j = 0; j < d; ++j)
          dx[t * d + j] += inv_sigma[t] * (dh[j] - mean_dh - hr[j] * mean_dh_h);
      }
    });
  }
  return out;
}

Var Tape::gelu(Var x) {
  const std::size_t n = rows(x) * cols(x);
  const Var out = make(rows(x), cols(x));
  {
    const double* xv = value_ptr(x);
    double* y = mutable_value(out);
    for (std::size_t i = 0; i < n; ++i)
      y[i] = xv[i] * 0.5 * (1.0 + std::erf(xv[i] * kInvSqrt2));
  }
  if (recording_) {
    backward_.push_back([this, out, x, n] {
      const double* dy = grad_ptr(out);
      const double* xv = value_ptr(x);
      double* dx = grad_ptr(x);
      if (!dx) return;
      for (std::size_t i = 0; i < n; ++i) {
        const double v = xv[i];
        const double cdf = 0.5 * (1.0 + std::erf(v * kInvSqrt2));
        const double pdf = kInvSqrt2Pi * std::exp(-0.5 * v * v);
        dx[i] += dy[i] * (cdf + v * pdf);
      }
    });
  }
  return out;
}

Var Tape::causal_attention(Var qkv, std::size_t n_heads) {
  const std::size_t t_len = rows(qkv);
  const std::size_t d = cols(qkv) / 3;
  const std::size_t dh = d / n_heads;
  assert(cols(qkv) == 3 * d && dh * n_heads == d);
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  const std::size_t stride = 3 * d;
  const Var out = make(t_len, d);
  // probs[h][i * t_len + j], j <= i
  std::vector<double> probs(n_heads * t_len * t_len, 0.0);
  {
    const double* in = value_ptr(qkv);
    double* y = mutable_value(out);
    for (std::size_t h = 0; h < n_heads; ++h) {
      const std::size_t qo = h * dh, ko = d + h * dh, vo = 2 * d + h * dh;
      double* p = probs.data() + h * t_len * t_len;
      for (std::size_t i = 0; i < t_len; ++i) {
        const double* q = in + i * stride + qo;
        double mx = -INFINITY;
        for (std::size_t j = 0; j <= i; ++j) {
          const double* k = in + j * stride + ko;
          double s = 0.0;
          for (std::size_t c = 0; c < dh; ++c) s += q[c] * k[c];
          s *= scale;
          p[i * t_len + j] = s;
          mx = std::max(mx, s);
        }
        double z = 0.0;
        for (std::size_t j = 0; j <= i; ++j) {
          const double e = std::exp(p[i * t_len + j] - mx);
          p[i * t_len + j] = e;
          z += e;
        }
        double* yr = y + i * d + h * dh;
        for (std::size_t j = 0; j <= i; ++j) {
          const double w = p[i * t_len + j] / z;
          p[i * t_len + j] = w;
          const double* v = in + j * stride + vo;
          for (std::size_t c = 0; c < dh; ++c) yr[c] += w * v[c];
        }
      }
    }
  }
  check_finite(out, "attention");
  if (recording_) {
    backward_.push_back([this, out, qkv, t_len, d, dh, n_heads, scale, stride,
                         probs = std::move(probs)] {
      double* dqkv = grad_ptr(qkv);
      if (!dqkv) return;
      const double* in = value_ptr(qkv);
      const double* dy = grad_ptr(out);
      std::vector<double> dp(t_len);
      for (std::size_t h = 0; h < n_heads; ++h) {
        const std::size_t qo = h * dh, ko = d + h * dh, vo = 2 * d + h * dh;
        const double* p = probs.data() + h * t_len * t_len;
        for (std::size_t i = 0; i < t_len; ++i) {
          const double* dyr = dy + i * d + h * dh;
          double dot = 0.0;
          for (std::size_t j = 0; j <= i; ++j) {
            const double* v = in + j * stride + vo;
            double* dv = dqkv + j * stride + vo;
            const double w = p[i * t_len + j];
            double acc = 0.0;
            for (std::size_t c = 0; c < dh; ++c) {
              acc += dyr[c] * v[c];
              dv[c] += w * dyr[c];
            }
            dp[j] = acc;
            dot += w * acc;
          }
          const double* q = in + i * stride + qo;
          double* dq = dqkv + i * stride + qo;
          for (std::size_t j = 0; j <= i; ++j) {
            const double ds = p[i * t_len + j] * (dp[j] - dot) * scale;
            if (ds == 0.0) continue;
            const double* k = in + j * stride + ko;
            double* dk = dqkv + j * stride + ko;
            for (std::size_t c = 0; c < dh; ++c) {
              dq[c] += ds * k[c];
              dk[c] += ds * q[c];
            }
          }
        }
      }
    });
  }
  return out;
}

Var Tape::cross_entropy(Var logits, std::span<const std::int32_t> targets) {
  const std::size_t t_len = rows(logits), v = cols(logits);
  assert(targets.size() == t_len);
  const Var out = make(1, 1);
  std::vector<double> probs(t_len * v);
  {
    const double* lv = value_ptr(logits);
    double total = 0.0;
    for (std::size_t t = 0; t < t_len; ++t) {
      const double* row = lv + t * v;
      const double mx = *std::max_element(row, row + v);
      double z = 0.0;
      for (std::size_t j = 0; j < v; ++j) {
        const double e = std::exp(row[j] - mx);
        probs[t * v + j] = e;
        z += e;
      }
      for (std::size_t j = 0; j < v; ++j) probs[t * v + j] /= z;
      total -= row[targets[t]] - mx - std::log(z);
    }
    mutable_value(out)[0] = total / static_cast<double>(t_len);
  }
  check_finite(out, "cross-entropy");
  if (recording_) {
    std::vector<std::int32_t> saved(targets.begin(), targets.end());
    backward_.push_back([this, out, logits, t_len, v, saved = std::move(saved),
                         probs = std::move(probs)] {
      double* dl = grad_ptr(logits);
      if (!dl) return;
      const double g = grad_ptr(out)[0] / static_cast<double>(t_len);
      for (std::size_t t = 0; t < t_len; ++t)
        for (std::size_t j = 0; j < v; ++j)
          dl[t * v + j] +=
              g * (probs[t * v + j] - (static_cast<std::int32_t>(j) == saved[t]));
    });
  }
  return out;
}

void Tape::backward(Var out) {
  if (!recording_) throw Error("backward() on a non-recording tape");
  if (rows(out) != 1 || cols(out) != 1)
    throw Error("backward() needs a scalar output");
  grad_ptr(out)[0] = 1.0;
  for (auto it = backward_.rbegin(); it != backward_.rend(); ++it) (*it)();
}

}  // namespace memlang::ad
