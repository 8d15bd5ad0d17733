// Copyright 2026 The Isochron Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "isochron/numcore/ops.h"

#include <cmath>
#include <cstring>
#include <limits>
#include <memory>

#include "isochron/common/error.h"
#include "isochron/numcore/kernels.h"

namespace isochron::num {

namespace {

constexpr float kNegInf = -std::numeric_limits<float>::infinity();

Graph* recording_graph(std::initializer_list<const Tensor*> inputs) {
  Graph* g = Graph::current();
  if (!g) return nullptr;
  for (const Tensor* t : inputs)
    if (g->needs_grad(*t)) return g;
  return nullptr;
}

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  ISO_CHECK_ARG(a.shape() == b.shape(), op << ": shape mismatch "
                                           << a.shape_str() << " vs "
                                           << b.shape_str());
}

// Softmax of one contiguous row; returns probabilities in place.
void softmax_row(const float* in, float* out, size_t n) {
  float m = kernels::vmax(in, n);
  ISO_CHECK_ARG(std::isfinite(m), "softmax row has no finite entry");
  double md = static_cast<double>(m);
  for (size_t j = 0; j < n; ++j)
    out[j] = static_cast<float>(std::exp(static_cast<double>(in[j]) - md));
  double z = kernels::sum(out, n);
  kernels::div_by(out, out, z, n);
}

// Gradient of softmax for one row: sink += p * (g - dot(g, p)).
void softmax_row_backward(const float* p, const float* g, float* sink,
                          size_t n, std::vector<float>& tmp) {
  if (tmp.size() < n) tmp.resize(n);
  double s = kernels::dot(g, p, n);
  kernels::sub_scalar(tmp.data(), g, s, n);
  kernels::mul(tmp.data(), tmp.data(), p, n);
  kernels::add(sink, sink, tmp.data(), n);
}

struct AxisView {
  int64_t outer, len, inner;
};

AxisView axis_view(const std::vector<int64_t>& shape, int axis) {
  int r = static_cast<int>(shape.size());
  if (axis < 0) axis += r;
  ISO_CHECK_ARG(axis >= 0 && axis < r,
                "axis " << axis << " out of range for rank " << r);
  AxisView v{1, shape[static_cast<size_t>(axis)], 1};
  for (int i = 0; i < axis; ++i) v.outer *= shape[static_cast<size_t>(i)];
  for (int i = axis + 1; i < r; ++i) v.inner *= shape[static_cast<size_t>(i)];
  return v;
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  ISO_CHECK_ARG(a.rank() == 2 && b.rank() == 2,
                "matmul expects rank-2 tensors, got " << a.shape_str()
                                                      << " and "
                                                      << b.shape_str());
  int64_t m = a.dim(0), k = a.dim(1), k2 = b.dim(0), n = b.dim(1);
  ISO_CHECK_ARG(k == k2, "matmul: inner dimensions differ, " << a.shape_str()
                                                             << " vs "
                                                             << b.shape_str());
  Tensor out = Tensor::zeros({m, n});
  kernels::matmul_nn(a.data(), b.data(), out.data(), static_cast<size_t>(m),
                     static_cast<size_t>(n), static_cast<size_t>(k));
  if (Graph* g = recording_graph({&a, &b})) {
    g->record(out, [a, b, out, m, n, k](Graph& gg) {
      const float* go = gg.grad_of(out);
      if (gg.wants(a)) {
        std::vector<float> da(static_cast<size_t>(m * k));
        kernels::matmul_nt(go, b.data(), da.data(), static_cast<size_t>(m),
                           static_cast<size_t>(k), static_cast<size_t>(n));
        kernels::add(gg.grad_sink(a), gg.grad_sink(a), da.data(), da.size());
      }
      if (gg.wants(b)) {
        std::vector<float> db(static_cast<size_t>(k * n));
        kernels::matmul_tn(a.data(), go, db.data(), static_cast<size_t>(k),
                           static_cast<size_t>(n), static_cast<size_t>(m));
        kernels::add(gg.grad_sink(b), gg.grad_sink(b), db.data(), db.size());
      }
    });
  }
  return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "add");
  size_t n = static_cast<size_t>(a.size());
  Tensor out = Tensor::zeros(a.shape());
  kernels::add(out.data(), a.data(), b.data(), n);
  if (Graph* g = recording_graph({&a, &b})) {
    g->record(out, [a, b, out, n](Graph& gg) {
      const float* go = gg.grad_of(out);
      if (gg.wants(a)) kernels::add(gg.grad_sink(a), gg.grad_sink(a), go, n);
      if (gg.wants(b)) kernels::add(gg.grad_sink(b), gg.grad_sink(b), go, n);
    });
  }
  return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "sub");
  size_t n = static_cast<size_t>(a.size());
  Tensor out = Tensor::zeros(a.shape());
  kernels::sub(out.data(), a.data(), b.data(), n);
  if (Graph* g = recording_graph({&a, &b})) {
    g->record(out, [a, b, out, n](Graph& gg) {
      const float* go = gg.grad_of(out);
      if (gg.wants(a)) kernels::add(gg.grad_sink(a), gg.grad_sink(a), go, n);
      if (gg.wants(b)) {
        float* sink = gg.grad_sink(b);
        kernels::axpy(sink, -1.0f, go, n);
      }
    });
  }
  return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "mul");
  size_t n = static_cast<size_t>(a.size());
  Tensor out = Tensor::zeros(a.shape());
  kernels::mul(out.data(), a.data(), b.data(), n);
  if (Graph* g = recording_graph({&a, &b})) {
    g->record(out, [a, b, out, n](Graph& gg) {
      const float* go = gg.grad_of(out);
      std::vector<float> tmp(n);
      if (gg.wants(a)) {
        kernels::mul(tmp.data(), go, b.data(), n);
        kernels::add(gg.grad_sink(a), gg.grad_sink(a), tmp.data(), n);
      }
      if (gg.wants(b)) {
        kernels::mul(tmp.data(), go, a.data(), n);
        kernels::add(gg.grad_sink(b), gg.grad_sink(b), tmp.data(), n);
      }
    });
  }
  return out;
}

Tensor scale(const Tensor& x, double s) {
  size_t n = static_cast<size_t>(x.size());
  Tensor out = Tensor::zeros(x.shape());
  kernels::scale(out.data(), x.data(), s, n);
  if (Graph* g = recording_graph({&x})) {
    g->record(out, [x, out, s, n](Graph& gg) {
      if (!gg.wants(x)) return;
      std::vector<float> tmp(n);
      kernels::scale(tmp.data(), gg.grad_of(out), s, n);
      kernels::add(gg.grad_sink(x), gg.grad_sink(x), tmp.data(), n);
    });
  }
  return out;
}

Tensor relu(const Tensor& x) {
  size_t n = static_cast<size_t>(x.size());
  Tensor out = Tensor::zeros(x.shape());
  kernels::relu(out.data(), x.data(), n);
  if (Graph* g = recording_graph({&x})) {
    g->record(out, [x, out, n](Graph& gg) {
      if (!gg.wants(x)) return;
      const float* go = gg.grad_of(out);
      const float* xd = x.data();
      float* sink = gg.grad_sink(x);
      for (size_t i = 0; i < n; ++i)
        if (xd[i] > 0.0f) sink[i] += go[i];
    });
  }
  return out;
}

Tensor add_bias(const Tensor& x, const Tensor& bias) {
  ISO_CHECK_ARG(x.rank() >= 1 && bias.rank() == 1,
                "add_bias expects x rank>=1 and 1-D bias, got "
                    << x.shape_str() << " and " << bias.shape_str());
  int64_t cols = x.dim(x.rank() - 1);
  ISO_CHECK_ARG(cols == bias.dim(0), "add_bias: last dim " << cols
                                                           << " != bias size "
                                                           << bias.dim(0));
  size_t rows = static_cast<size_t>(x.size() / cols);
  Tensor out = Tensor::zeros(x.shape());
  kernels::add_bias(out.data(), x.data(), bias.data(), rows,
                    static_cast<size_t>(cols));
  if (Graph* g = recording_graph({&x, &bias})) {
    g->record(out, [x, bias, out, rows, cols](Graph& gg) {
      const float* go = gg.grad_of(out);
      size_t c = static_cast<size_t>(cols);
      if (gg.wants(x))
        kernels::add(gg.grad_sink(x), gg.grad_sink(x), go, rows * c);
      if (gg.wants(bias)) {
        float* sink = gg.grad_sink(bias);
        for (size_t r = 0; r < rows; ++r)
          kernels::add(sink, sink, go + r * c, c);
      }
    });
  }
  return out;
}

Tensor softmax(const Tensor& x, int axis) {
  AxisView v = axis_view(x.shape(), axis);
  size_t len = static_cast<size_t>(v.len);
  ISO_CHECK_ARG(len >= 1, "softmax over an empty axis");
  Tensor out = Tensor::zeros(x.shape());
  const float* xd = x.data();
  float* od = out.data();
  if (v.inner == 1) {
    for (int64_t o = 0; o < v.outer; ++o)
      softmax_row(xd + o * v.len, od + o * v.len, len);
  } else {
    std::vector<float> row(len), prow(len);
    for (int64_t o = 0; o < v.outer; ++o) {
      for (int64_t i = 0; i < v.inner; ++i) {
        const float* base = xd + o * v.len * v.inner + i;
        for (size_t j = 0; j < len; ++j) row[j] = base[j * v.inner];
        softmax_row(row.data(), prow.data(), len);
        float* obase = od + o * v.len * v.inner + i;
        for (size_t j = 0; j < len; ++j) obase[j * v.inner] = prow[j];
      }
    }
  }
  if (Graph* g = recording_graph({&x})) {
    g->record(out, [x, out, v, len](Graph& gg) {
      if (!gg.wants(x)) return;
      const float* go = gg.grad_of(out);
      const float* p = out.data();
      float* sink = gg.grad_sink(x);
      std::vector<float> tmp;
      if (v.inner == 1) {
        for (int64_t o = 0; o < v.outer; ++o)
          softmax_row_backward(p + o * v.len, go + o * v.len,
                               sink + o * v.len, len, tmp);
      } else {
        std::vector<float> prow(len), grow(len), srow(len);
        for (int64_t o = 0; o < v.outer; ++o) {
          for (int64_t i = 0; i < v.inner; ++i) {
            int64_t base = o * v.len * v.inner + i;
            for (size_t j = 0; j < len; ++j) {
              prow[j] = p[base + static_cast<int64_t>(j) * v.inner];
              grow[j] = go[base + static_cast<int64_t>(j) * v.inner];
              srow[j] = 0.0f;
            }
            softmax_row_backward(prow.data(), grow.data(), srow.data(), len,
                                 tmp);
            for (size_t j = 0; j < len; ++j)
              sink[base + static_cast<int64_t>(j) * v.inner] += srow[j];
          }
        }
      }
    });
  }
  return out;
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias,
                  double eps) {
  ISO_CHECK_ARG(x.rank() >= 1, "layer_norm expects rank >= 1");
  int64_t cols = x.dim(x.rank() - 1);
  ISO_CHECK_ARG(gain.rank() == 1 && gain.dim(0) == cols &&
                    bias.rank() == 1 && bias.dim(0) == cols,
                "layer_norm: gain/bias must be [" << cols << "], got "
                                                  << gain.shape_str() << " and "
                                                  << bias.shape_str());
  ISO_CHECK_ARG(eps > 0.0, "layer_norm: eps must be positive");
  size_t n = static_cast<size_t>(cols);
  size_t rows = static_cast<size_t>(x.size() / cols);
  Tensor out = Tensor::zeros(x.shape());
  auto means = std::make_shared<std::vector<double>>(rows);
  auto inv_stds = std::make_shared<std::vector<double>>(rows);
  for (size_t r = 0; r < rows; ++r) {
    const float* xr = x.data() + r * n;
    double mean = kernels::sum(xr, n) / static_cast<double>(n);
    double var = kernels::sumsq_diff(xr, n, mean) / static_cast<double>(n);
    double inv = 1.0 / std::sqrt(var + eps);
    (*means)[r] = mean;
    (*inv_stds)[r] = inv;
    kernels::norm_affine(out.data() + r * n, xr, gain.data(), bias.data(), n,
                         mean, inv);
  }
  if (Graph* g = recording_graph({&x, &gain, &bias})) {
    g->record(out, [x, gain, bias, out, means, inv_stds, rows, n](Graph& gg) {
      const float* go = gg.grad_of(out);
      bool want_x = gg.wants(x);
      bool want_gain = gg.wants(gain);
      bool want_bias = gg.wants(bias);
      float* sink_x = want_x ? gg.grad_sink(x) : nullptr;
      float* sink_gain = want_gain ? gg.grad_sink(gain) : nullptr;
      float* sink_bias = want_bias ? gg.grad_sink(bias) : nullptr;
      std::vector<double> xhat(n);
      const float* gd = gain.data();
      for (size_t r = 0; r < rows; ++r) {
        const float* xr = x.data() + r * n;
        const float* gr = go + r * n;
        double mean = (*means)[r];
        double inv = (*inv_stds)[r];
        for (size_t j = 0; j < n; ++j)
          xhat[j] = (static_cast<double>(xr[j]) - mean) * inv;
        if (want_bias) kernels::add(sink_bias, sink_bias, gr, n);
        if (want_gain) {
          for (size_t j = 0; j < n; ++j)
            sink_gain[j] += static_cast<float>(static_cast<double>(gr[j]) *
                                               xhat[j]);
        }
        if (want_x) {
          double mean_gy = 0.0, mean_gyx = 0.0;
          std::vector<double> gy(n);
          for (size_t j = 0; j < n; ++j) {
            gy[j] = static_cast<double>(gr[j]) * static_cast<double>(gd[j]);
            mean_gy += gy[j];
            mean_gyx += gy[j] * xhat[j];
          }
          mean_gy /= static_cast<double>(n);
          mean_gyx /= static_cast<double>(n);
          float* sr = sink_x + r * n;
          for (size_t j = 0; j < n; ++j)
            sr[j] += static_cast<float>(
                inv * (gy[j] - mean_gy - xhat[j] * mean_gyx));
        }
      }
    });
  }
  return out;
}

Tensor embedding(const Tensor& table, std::span<const int> ids) {
  ISO_CHECK_ARG(table.rank() == 2,
                "embedding table must be rank 2, got " << table.shape_str());
  int64_t vocab = table.dim(0), dim = table.dim(1);
  int64_t t_len = static_cast<int64_t>(ids.size());
  Tensor out = Tensor::zeros({t_len, dim});
  size_t d = static_cast<size_t>(dim);
  for (int64_t t = 0; t < t_len; ++t) {
    int id = ids[static_cast<size_t>(t)];
    ISO_CHECK_ARG(id >= 0 && id < vocab,
                  "embedding id " << id << " out of range [0, " << vocab
                                  << ")");
    std::memcpy(out.data() + t * dim, table.data() + id * dim,
                d * sizeof(float));
  }
  if (Graph* g = recording_graph({&table})) {
    std::vector<int> ids_copy(ids.begin(), ids.end());
    g->record(out, [table, out, ids_copy, dim](Graph& gg) {
      if (!gg.wants(table)) return;
      const float* go = gg.grad_of(out);
      float* sink = gg.grad_sink(table);
      size_t d = static_cast<size_t>(dim);
      for (size_t t = 0; t < ids_copy.size(); ++t) {
        float* row = sink + static_cast<size_t>(ids_copy[t]) * d;
        kernels::add(row, row, go + t * d, d);
      }
    });
  }
  return out;
}

Tensor concat_rows(const Tensor& a, const Tensor& b) {
  ISO_CHECK_ARG(a.rank() == 2 && b.rank() == 2 && a.dim(1) == b.dim(1),
                "concat_rows expects matching column counts, got "
                    << a.shape_str() << " and " << b.shape_str());
  int64_t r1 = a.dim(0), r2 = b.dim(0), c = a.dim(1);
  Tensor out = Tensor::zeros({r1 + r2, c});
  std::memcpy(out.data(), a.data(), static_cast<size_t>(r1 * c) * sizeof(float));
  std::memcpy(out.data() + r1 * c, b.data(),
              static_cast<size_t>(r2 * c) * sizeof(float));
  if (Graph* g = recording_graph({&a, &b})) {
    g->record(out, [a, b, out, r1, r2, c](Graph& gg) {
      const float* go = gg.grad_of(out);
      if (gg.wants(a))
        kernels::add(gg.grad_sink(a), gg.grad_sink(a), go,
                     static_cast<size_t>(r1 * c));
      if (gg.wants(b))
        kernels::add(gg.grad_sink(b), gg.grad_sink(b), go + r1 * c,
                     static_cast<size_t>(r2 * c));
    });
  }
  return out;
}

Tensor dropout(const Tensor& x, double p, RandomStream& rng, bool train) {
  ISO_CHECK_ARG(p >= 0.0 && p < 1.0, "dropout rate must be in [0, 1), got "
                                         << p);
  if (!train || p == 0.0) return x;
  size_t n = static_cast<size_t>(x.size());
  auto mask = std::make_shared<std::vector<float>>(n);
  float keep_scale = static_cast<float>(1.0 / (1.0 - p));
  for (size_t i = 0; i < n; ++i)
    (*mask)[i] = rng.next_unit() >= p ? keep_scale : 0.0f;
  Tensor out = Tensor::zeros(x.shape());
  kernels::mul(out.data(), x.data(), mask->data(), n);
  if (Graph* g = recording_graph({&x})) {
    g->record(out, [x, out, mask, n](Graph& gg) {
      if (!gg.wants(x)) return;
      std::vector<float> tmp(n);
      kernels::mul(tmp.data(), gg.grad_of(out), mask->data(), n);
      kernels::add(gg.grad_sink(x), gg.grad_sink(x), tmp.data(), n);
    });
  }
  return out;
}

Tensor sum(const Tensor& x) {
  size_t n = static_cast<size_t>(x.size());
  Tensor out = Tensor::scalar(static_cast<float>(kernels::sum(x.data(), n)));
  if (Graph* g = recording_graph({&x})) {
    g->record(out, [x, out, n](Graph& gg) {
      if (!gg.wants(x)) return;
      float go = gg.grad_of(out)[0];
      float* sink = gg.grad_sink(x);
      for (size_t i = 0; i < n; ++i) sink[i] += go;
    });
  }
  return out;
}

Tensor cross_entropy(const Tensor& logits, std::span<const int> targets,
                     int pad_id) {
  ISO_CHECK_ARG(logits.rank() == 2,
                "cross_entropy expects [T, V] logits, got "
                    << logits.shape_str());
  int64_t t_len = logits.dim(0), vocab = logits.dim(1);
  ISO_CHECK_ARG(static_cast<int64_t>(targets.size()) == t_len,
                "cross_entropy: " << targets.size() << " targets for " << t_len
                                  << " rows");
  size_t v = static_cast<size_t>(vocab);
  auto probs = std::make_shared<std::vector<float>>(
      static_cast<size_t>(t_len) * v);
  std::vector<int> tgt(targets.begin(), targets.end());
  int64_t count = 0;
  double nll = 0.0;
  for (int64_t t = 0; t < t_len; ++t) {
    int target = tgt[static_cast<size_t>(t)];
    if (target == pad_id) continue;
    ISO_CHECK_ARG(target >= 0 && target < vocab,
                  "cross_entropy target " << target << " out of range [0, "
                                          << vocab << ")");
    const float* row = logits.data() + t * vocab;
    float* prow = probs->data() + t * vocab;
    float m = kernels::vmax(row, v);
    ISO_CHECK_ARG(std::isfinite(m), "cross_entropy row " << t
                                                         << " has no finite logit");
    double md = static_cast<double>(m);
    for (size_t j = 0; j < v; ++j)
      prow[j] = static_cast<float>(std::exp(static_cast<double>(row[j]) - md));
    double z = kernels::sum(prow, v);
    nll += std::log(z) + md - static_cast<double>(row[target]);
    kernels::div_by(prow, prow, z, v);
    ++count;
  }
  float loss_value =
      count > 0 ? static_cast<float>(nll / static_cast<double>(count)) : 0.0f;
  Tensor out = Tensor::scalar(loss_value);
  if (Graph* g = recording_graph({&logits})) {
    g->record(out, [logits, out, probs, tgt, pad_id, vocab, count](Graph& gg) {
      if (!gg.wants(logits) || count == 0) return;
      float go = gg.grad_of(out)[0];
      float inv_count =
          static_cast<float>(1.0 / static_cast<double>(count));
      float* sink = gg.grad_sink(logits);
      size_t v = static_cast<size_t>(vocab);
      for (size_t t = 0; t < tgt.size(); ++t) {
        if (tgt[t] == pad_id) continue;
        const float* prow = probs->data() + t * v;
        float* srow = sink + t * v;
        float w = go * inv_count;
        kernels::axpy(srow, w, prow, v);
        srow[static_cast<size_t>(tgt[t])] -= w;
      }
    });
  }
  return out;
}

AttentionResult multi_head_attention(const Tensor& q, const Tensor& k,
                                     const Tensor& v, int heads, bool causal,
                                     double dropout_p, RandomStream* rng,
                                     bool train) {
  ISO_CHECK_ARG(q.rank() == 2 && k.rank() == 2 && v.rank() == 2,
                "attention expects rank-2 q/k/v");
  int64_t tq = q.dim(0), d = q.dim(1), tk = k.dim(0);
  ISO_CHECK_ARG(k.dim(1) == d && v.dim(1) == d && v.dim(0) == tk,
                "attention: inconsistent shapes q=" << q.shape_str() << " k="
                                                    << k.shape_str() << " v="
                                                    << v.shape_str());
  ISO_CHECK_ARG(heads >= 1 && d % heads == 0,
                "attention: model dim " << d << " not divisible by " << heads
                                        << " heads");
  ISO_CHECK_ARG(!causal || tq == tk,
                "causal attention requires equal query/key lengths");
  ISO_CHECK_ARG(tq >= 1 && tk >= 1, "attention over empty sequence");
  bool use_dropout = train && dropout_p > 0.0;
  ISO_CHECK_ARG(!use_dropout || rng != nullptr,
                "attention dropout requires an rng");
  int64_t dh = d / heads;
  double inv_sqrt_dh = 1.0 / std::sqrt(static_cast<double>(dh));
  size_t stq = static_cast<size_t>(tq), stk = static_cast<size_t>(tk);
  size_t sdh = static_cast<size_t>(dh), sd = static_cast<size_t>(d);

  struct HeadCtx {
    std::vector<float> qh, kh, vh;  // [T, dh] contiguous per head
    std::vector<float> probs;      // pre-dropout softmax [Tq, Tk]
    std::vector<float> probs_eff;  // post-dropout (empty when no dropout)
    std::vector<float> mask;       // dropout mask (empty when no dropout)
  };
  auto ctxs = std::make_shared<std::vector<HeadCtx>>(heads);

  AttentionResult result;
  result.output = Tensor::zeros({tq, d});
  result.attn.assign(stq * stk, 0.0f);
  float head_weight = 1.0f / static_cast<float>(heads);

  std::vector<float> scores(stq * stk);
  std::vector<float> oh(stq * sdh);
  for (int h = 0; h < heads; ++h) {
    HeadCtx& c = (*ctxs)[static_cast<size_t>(h)];
    c.qh.resize(stq * sdh);
    c.kh.resize(stk * sdh);
    c.vh.resize(stk * sdh);
    size_t off = static_cast<size_t>(h) * sdh;
    for (size_t t = 0; t < stq; ++t)
      std::memcpy(c.qh.data() + t * sdh, q.data() + t * sd + off,
                  sdh * sizeof(float));
    for (size_t t = 0; t < stk; ++t) {
      std::memcpy(c.kh.data() + t * sdh, k.data() + t * sd + off,
                  sdh * sizeof(float));
      std::memcpy(c.vh.data() + t * sdh, v.data() + t * sd + off,
                  sdh * sizeof(float));
    }
    kernels::matmul_nt(c.qh.data(), c.kh.data(), scores.data(), stq, stk, sdh);
    kernels::scale(scores.data(), scores.data(), inv_sqrt_dh, stq * stk);
    if (causal) {
      for (size_t t = 0; t < stq; ++t)
        for (size_t j = t + 1; j < stk; ++j) scores[t * stk + j] = kNegInf;
    }
    c.probs.resize(stq * stk);
    for (size_t t = 0; t < stq; ++t)
      softmax_row(scores.data() + t * stk, c.probs.data() + t * stk, stk);
    kernels::axpy(result.attn.data(), head_weight, c.probs.data(), stq * stk);
    const float* p_eff = c.probs.data();
    if (use_dropout) {
      c.mask.resize(stq * stk);
      float keep_scale = static_cast<float>(1.0 / (1.0 - dropout_p));
      for (size_t i = 0; i < stq * stk; ++i)
        c.mask[i] = rng->next_unit() >= dropout_p ? keep_scale : 0.0f;
      c.probs_eff.resize(stq * stk);
      kernels::mul(c.probs_eff.data(), c.probs.data(), c.mask.data(),
                   stq * stk);
      p_eff = c.probs_eff.data();
    }
    kernels::matmul_nn(p_eff, c.vh.data(), oh.data(), stq, sdh, stk);
    for (size_t t = 0; t < stq; ++t)
      std::memcpy(result.output.data() + t * sd + off, oh.data() + t * sdh,
                  sdh * sizeof(float));
  }

  if (Graph* g = recording_graph({&q, &k, &v})) {
    Tensor out = result.output;
    g->record(out, [q, k, v, out, ctxs, heads, causal, use_dropout,
                    inv_sqrt_dh, stq, stk, sdh, sd](Graph& gg) {
      const float* go = gg.grad_of(out);
      bool want_q = gg.wants(q), want_k = gg.wants(k), want_v = gg.wants(v);
      float* sink_q = want_q ? gg.grad_sink(q) : nullptr;
      float* sink_k = want_k ? gg.grad_sink(k) : nullptr;
      float* sink_v = want_v ? gg.grad_sink(v) : nullptr;
      std::vector<float> gh(stq * sdh), dvh(stk * sdh), dp(stq * stk);
      std::vector<float> dqh(stq * sdh), dkh(stk * sdh), ds(stq * stk);
      std::vector<float> tmp;
      for (int h = 0; h < heads; ++h) {
        const HeadCtx& c = (*ctxs)[static_cast<size_t>(h)];
        size_t off = static_cast<size_t>(h) * sdh;
        for (size_t t = 0; t < stq; ++t)
          std::memcpy(gh.data() + t * sdh, go + t * sd + off,
                      sdh * sizeof(float));
        const float* p_eff =
            use_dropout ? c.probs_eff.data() : c.probs.data();
        if (want_v) {
          kernels::matmul_tn(p_eff, gh.data(), dvh.data(), stk, sdh, stq);
          for (size_t t = 0; t < stk; ++t) {
            float* row = sink_v + t * sd + off;
            kernels::add(row, row, dvh.data() + t * sdh, sdh);
          }
        }
        if (!want_q && !want_k) continue;
        kernels::matmul_nt(gh.data(), c.vh.data(), dp.data(), stq, stk, sdh);
        if (use_dropout)
          kernels::mul(dp.data(), dp.data(), c.mask.data(), stq * stk);
        std::fill(ds.begin(), ds.end(), 0.0f);
        for (size_t t = 0; t < stq; ++t)
          softmax_row_backward(c.probs.data() + t * stk, dp.data() + t * stk,
                               ds.data() + t * stk, stk, tmp);
        kernels::scale(ds.data(), ds.data(), inv_sqrt_dh, stq * stk);
        if (causal) {
          for (size_t t = 0; t < stq; ++t)
            for (size_t j = t + 1; j < stk; ++j) ds[t * stk + j] = 0.0f;
        }
        if (want_q) {
          kernels::matmul_nn(ds.data(), c.kh.data(), dqh.data(), stq, sdh,
                             stk);
          for (size_t t = 0; t < stq; ++t) {
            float* row = sink_q + t * sd + off;
            kernels::add(row, row, dqh.data() + t * sdh, sdh);
          }
        }
        if (want_k) {
          kernels::matmul_tn(ds.data(), c.qh.data(), dkh.data(), stk, sdh,
                             stq);
          for (size_t t = 0; t < stk; ++t) {
            float* row = sink_k + t * sd + off;
            kernels::add(row, row, dkh.data() + t * sdh, sdh);
          }
        }
      }
    });
  }
  return result;
}

std::vector<double> log_softmax_vec(const float* logits, size_t n) {
  float m = kernels::vmax(logits, n);
  ISO_CHECK_ARG(std::isfinite(m), "log_softmax row has no finite entry");
  double md = static_cast<double>(m);
  std::vector<float> e(n);
  for (size_t j = 0; j < n; ++j)
    e[j] = static_cast<float>(std::exp(static_cast<double>(logits[j]) - md));
  double log_z = std::log(kernels::sum(e.data(), n));
  std::vector<double> out(n);
  for (size_t j = 0; j < n; ++j)
    out[j] = static_cast<double>(logits[j]) - md - log_z;
  return out;
}

}  // namespace isochron::num
