// Copyright 2026 The PAM Desk Authors
// SPDX-License-Identifier: Apache-2.0

#include "pam/numcore/ops.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "pam/errors.hpp"

namespace pam::num {

namespace kernel {

void gemm_nn(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
             std::size_t n, bool accumulate) {
  if (!accumulate) std::fill(c, c + m * n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    double* ci = c + i * n;
    const double* ai = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = ai[p];
      if (av == 0.0) continue;
      const double* bp = b + p * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += av * bp[j];
    }
  }
}

void gemm_nt_acc(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                 std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* ai = a + i * k;
    for (std::size_t j = 0; j < n; ++j) {
      const double* bj = b + j * k;
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += ai[p] * bj[p];
      c[i * n + j] += s;
    }
  }
}

void gemm_tn_acc(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                 std::size_t n) {
  for (std::size_t p = 0; p < k; ++p) {
    const double* ap = a + p * m;
    const double* bp = b + p * n;
    for (std::size_t i = 0; i < m; ++i) {
      const double av = ap[i];
      if (av == 0.0) continue;
      double* ci = c + i * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += av * bp[j];
    }
  }
}

}  // namespace kernel

namespace {

void require_rank2(const Var& x, const char* op) {
  if (x.value().rank() != 2) {
    throw ShapeError(std::string(op) + " expects a 2-D tensor, got " + to_string(x.shape()));
  }
}

void require_same_shape(const Var& a, const Var& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + " shape mismatch " + to_string(a.shape()) + " vs " +
                     to_string(b.shape()));
  }
}

// a·bᵀ for a [m×k], b [n×k].
Var matmul_nt(Var a, Var b) {
  require_rank2(a, "matmul_nt");
  require_rank2(b, "matmul_nt");
  const std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[0];
  if (b.shape()[1] != k) {
    throw ShapeError("matmul_nt inner dims differ: " + to_string(a.shape()) + " vs " +
                     to_string(b.shape()) + "^T");
  }
  Tensor out({m, n});
  kernel::gemm_nt_acc(a.value().data().data(), b.value().data().data(), out.data().data(), m, k,
                      n);
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape().record("matmul_nt", std::move(out), {a, b},
                         [ia, ib, m, k, n](const Tensor& g, Tape& t) {
                           if (t.needs_grad(ia)) {
                             // dA = G·B
                             auto& da = t.grad_buffer(ia);
                             kernel::gemm_nn(g.data().data(), t.value(ib).data().data(), da.data(),
                                             m, n, k, true);
                           }
                           if (t.needs_grad(ib)) {
                             // dB = Gᵀ·A
                             auto& db = t.grad_buffer(ib);
                             kernel::gemm_tn_acc(g.data().data(), t.value(ia).data().data(),
                                                 db.data(), n, m, k);
                           }
                         });
}

}  // namespace

Var matmul(Var a, Var b) {
  require_rank2(a, "matmul");
  require_rank2(b, "matmul");
  const std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
  if (b.shape()[0] != k) {
    throw ShapeError("matmul inner dims differ: " + to_string(a.shape()) + " · " +
                     to_string(b.shape()));
  }
  Tensor out({m, n});
  kernel::gemm_nn(a.value().data().data(), b.value().data().data(), out.data().data(), m, k, n,
                  false);
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape().record("matmul", std::move(out), {a, b},
                         [ia, ib, m, k, n](const Tensor& g, Tape& t) {
                           if (t.needs_grad(ia)) {
                             // dA = G·Bᵀ
                             auto& da = t.grad_buffer(ia);
                             kernel::gemm_nt_acc(g.data().data(), t.value(ib).data().data(),
                                                 da.data(), m, n, k);
                           }
                           if (t.needs_grad(ib)) {
                             // dB = Aᵀ·G
                             auto& db = t.grad_buffer(ib);
                             kernel::gemm_tn_acc(t.value(ia).data().data(), g.data().data(),
                                                 db.data(), k, m, n);
                           }
                         });
}

Var transpose(Var x) {
  require_rank2(x, "transpose");
  const std::size_t r = x.shape()[0], c = x.shape()[1];
  std::vector<std::size_t> index(r * c);
  for (std::size_t i = 0; i < c; ++i)
    for (std::size_t j = 0; j < r; ++j) index[i * r + j] = j * c + i;
  return gather(x, index, {c, r});
}

Var add(Var a, Var b) {
  require_same_shape(a, b, "add");
  Tensor out = a.value();
  const auto bd = b.value().data();
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] += bd[i];
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape().record("add", std::move(out), {a, b}, [ia, ib](const Tensor& g, Tape& t) {
    t.accumulate(ia, g);
    t.accumulate(ib, g);
  });
}

Var sub(Var a, Var b) {
  require_same_shape(a, b, "sub");
  Tensor out = a.value();
  const auto bd = b.value().data();
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] -= bd[i];
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape().record("sub", std::move(out), {a, b}, [ia, ib](const Tensor& g, Tape& t) {
    t.accumulate(ia, g);
    if (t.needs_grad(ib)) {
      auto& db = t.grad_buffer(ib);
      for (std::size_t i = 0; i < db.size(); ++i) db[i] -= g[i];
    }
  });
}

Var mul(Var a, Var b) {
  require_same_shape(a, b, "mul");
  Tensor out = a.value();
  const auto bd = b.value().data();
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] *= bd[i];
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape().record("mul", std::move(out), {a, b}, [ia, ib](const Tensor& g, Tape& t) {
    if (t.needs_grad(ia)) {
      auto& da = t.grad_buffer(ia);
      const auto bv = t.value(ib).data();
      for (std::size_t i = 0; i < da.size(); ++i) da[i] += g[i] * bv[i];
    }
    if (t.needs_grad(ib)) {
      auto& db = t.grad_buffer(ib);
      const auto av = t.value(ia).data();
      for (std::size_t i = 0; i < db.size(); ++i) db[i] += g[i] * av[i];
    }
  });
}

Var scale(Var x, double s) {
  Tensor out = x.value();
  for (double& v : out.data()) v *= s;
  const std::size_t ix = x.id();
  return x.tape().record("scale", std::move(out), {x}, [ix, s](const Tensor& g, Tape& t) {
    auto& dx = t.grad_buffer(ix);
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += s * g[i];
  });
}

Var add_bias(Var x, Var bias) {
  const std::size_t n = x.value().cols();
  if (bias.value().numel() != n) {
    throw ShapeError("add_bias: bias " + to_string(bias.shape()) + " vs input " +
                     to_string(x.shape()));
  }
  Tensor out = x.value();
  const auto bd = bias.value().data();
  const std::size_t rows = out.rows();
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < n; ++c) out[r * n + c] += bd[c];
  const std::size_t ix = x.id(), ib = bias.id();
  return x.tape().record("add_bias", std::move(out), {x, bias},
                         [ix, ib, rows, n](const Tensor& g, Tape& t) {
                           t.accumulate(ix, g);
                           if (t.needs_grad(ib)) {
                             auto& db = t.grad_buffer(ib);
                             for (std::size_t r = 0; r < rows; ++r)
                               for (std::size_t c = 0; c < n; ++c) db[c] += g[r * n + c];
                           }
                         });
}

Var gelu(Var x) {
  constexpr double kC = 0.7978845608028654;  // sqrt(2/pi)
  constexpr double kA = 0.044715;
  Tensor out = x.value();
  for (double& v : out.data()) {
    const double u = kC * (v + kA * v * v * v);
    v = 0.5 * v * (1.0 + std::tanh(u));
  }
  const std::size_t ix = x.id();
  return x.tape().record("gelu", std::move(out), {x}, [ix](const Tensor& g, Tape& t) {
    auto& dx = t.grad_buffer(ix);
    const auto xv = t.value(ix).data();
    for (std::size_t i = 0; i < dx.size(); ++i) {
      const double v = xv[i];
      const double u = kC * (v + kA * v * v * v);
      const double th = std::tanh(u);
      const double du = kC * (1.0 + 3.0 * kA * v * v);
      dx[i] += g[i] * (0.5 * (1.0 + th) + 0.5 * v * (1.0 - th * th) * du);
    }
  });
}

Var softmax(Var x, std::size_t axis) {
  const Shape& shape = x.shape();
  if (axis >= shape.size()) {
    throw ShapeError("softmax axis " + std::to_string(axis) + " invalid for " + to_string(shape));
  }
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= shape[i];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) inner *= shape[i];
  const std::size_t len = shape[axis];
  Tensor out = x.value();
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t in = 0; in < inner; ++in) {
      const std::size_t base = o * len * inner + in;
      double mx = out[base];
      for (std::size_t j = 1; j < len; ++j) mx = std::max(mx, out[base + j * inner]);
      double s = 0.0;
      for (std::size_t j = 0; j < len; ++j) {
        double& e = out[base + j * inner];
        e = std::exp(e - mx);
        s += e;
      }
      for (std::size_t j = 0; j < len; ++j) out[base + j * inner] /= s;
    }
  }
  const std::size_t ix = x.id();
  const std::size_t iy = x.tape().size();  // id the result will receive
  return x.tape().record(
      "softmax", std::move(out), {x}, [ix, iy, outer, inner, len](const Tensor& g, Tape& t) {
        auto& dx = t.grad_buffer(ix);
        const auto y = t.value(iy).data();
        for (std::size_t o = 0; o < outer; ++o) {
          for (std::size_t in = 0; in < inner; ++in) {
            const std::size_t base = o * len * inner + in;
            double dot = 0.0;
            for (std::size_t j = 0; j < len; ++j) dot += g[base + j * inner] * y[base + j * inner];
            for (std::size_t j = 0; j < len; ++j) {
              const std::size_t p = base + j * inner;
              dx[p] += y[p] * (g[p] - dot);
            }
          }
        }
      });
}

Var causal_softmax(Var scores) {
  require_rank2(scores, "causal_softmax");
  const std::size_t l = scores.shape()[0], s = scores.shape()[1];
  if (l > s) throw ShapeError("causal_softmax needs at least as many keys as queries");
  const std::size_t offset = s - l;
  Tensor out = scores.value();
  for (std::size_t i = 0; i < l; ++i) {
    double* row = &out[i * s];
    const std::size_t visible = i + offset + 1;
    double mx = row[0];
    for (std::size_t j = 1; j < visible; ++j) mx = std::max(mx, row[j]);
    double sum = 0.0;
    for (std::size_t j = 0; j < visible; ++j) {
      row[j] = std::exp(row[j] - mx);
      sum += row[j];
    }
    for (std::size_t j = 0; j < visible; ++j) row[j] /= sum;
    for (std::size_t j = visible; j < s; ++j) row[j] = 0.0;
  }
  const std::size_t ix = scores.id();
  const std::size_t iy = scores.tape().size();
  return scores.tape().record("causal_softmax", std::move(out), {scores},
                              [ix, iy, l, s](const Tensor& g, Tape& t) {
                                auto& dx = t.grad_buffer(ix);
                                const auto y = t.value(iy).data();
                                for (std::size_t i = 0; i < l; ++i) {
                                  double dot = 0.0;
                                  for (std::size_t j = 0; j < s; ++j)
                                    dot += g[i * s + j] * y[i * s + j];
                                  for (std::size_t j = 0; j < s; ++j) {
                                    const std::size_t p = i * s + j;
                                    dx[p] += y[p] * (g[p] - dot);
                                  }
                                }
                              });
}

Var layer_norm(Var x, Var gamma, Var beta, double eps) {
  const std::size_t n = x.value().cols();
  if (gamma.value().numel() != n || beta.value().numel() != n) {
    throw ShapeError("layer_norm: gamma/beta must match last dim " + std::to_string(n));
  }
  const std::size_t rows = x.value().rows();
  Tensor out(x.shape());
  std::vector<double> xhat(rows * n), inv_std(rows);
  const auto xv = x.value().data();
  const auto gv = gamma.value().data();
  const auto bv = beta.value().data();
  for (std::size_t r = 0; r < rows; ++r) {
    double mu = 0.0;
    for (std::size_t c = 0; c < n; ++c) mu += xv[r * n + c];
    mu /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t c = 0; c < n; ++c) {
      const double d = xv[r * n + c] - mu;
      var += d * d;
    }
    var /= static_cast<double>(n);
    const double is = 1.0 / std::sqrt(var + eps);
    inv_std[r] = is;
    for (std::size_t c = 0; c < n; ++c) {
      const double h = (xv[r * n + c] - mu) * is;
      xhat[r * n + c] = h;
      out[r * n + c] = h * gv[c] + bv[c];
    }
  }
  const std::size_t ix = x.id(), ig = gamma.id(), ib = beta.id();
  return x.tape().record(
      "layer_norm", std::move(out), {x, gamma, beta},
      [ix, ig, ib, rows, n, xhat = std::move(xhat), inv_std = std::move(inv_std)](
          const Tensor& g, Tape& t) {
        const auto gv = t.value(ig).data();
        if (t.needs_grad(ig)) {
          auto& dg = t.grad_buffer(ig);
          for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < n; ++c) dg[c] += g[r * n + c] * xhat[r * n + c];
        }
        if (t.needs_grad(ib)) {
          auto& db = t.grad_buffer(ib);
          for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < n; ++c) db[c] += g[r * n + c];
        }
        if (t.needs_grad(ix)) {
          auto& dx = t.grad_buffer(ix);
          const double inv_n = 1.0 / static_cast<double>(n);
          for (std::size_t r = 0; r < rows; ++r) {
            double m1 = 0.0, m2 = 0.0;
            for (std::size_t c = 0; c < n; ++c) {
              const double dh = g[r * n + c] * gv[c];
              m1 += dh;
              m2 += dh * xhat[r * n + c];
            }
            m1 *= inv_n;
            m2 *= inv_n;
            for (std::size_t c = 0; c < n; ++c) {
              const double dh = g[r * n + c] * gv[c];
              dx[r * n + c] += inv_std[r] * (dh - m1 - xhat[r * n + c] * m2);
            }
          }
        }
      });
}

Var scaled_dot_attention(Var q, Var k, Var v, bool causal_mask) {
  require_rank2(q, "attention");
  require_rank2(k, "attention");
  require_rank2(v, "attention");
  const std::size_t d = q.shape()[1];
  if (k.shape()[1] != d) {
    throw ShapeError("attention head dim mismatch: q " + to_string(q.shape()) + ", k " +
                     to_string(k.shape()));
  }
  if (v.shape()[0] != k.shape()[0]) {
    throw ShapeError("attention key/value count mismatch: k " + to_string(k.shape()) + ", v " +
                     to_string(v.shape()));
  }
  Var scores = scale(matmul_nt(q, k), 1.0 / std::sqrt(static_cast<double>(d)));
  Var weights = causal_mask ? causal_softmax(scores) : softmax(scores, 1);
  return matmul(weights, v);
}

Var reshape(Var x, Shape shape) {
  Tensor out = x.value().reshaped(std::move(shape));
  const std::size_t ix = x.id();
  return x.tape().record("reshape", std::move(out), {x},
                         [ix](const Tensor& g, Tape& t) { t.accumulate(ix, g); });
}

Var concat_rows(const std::vector<Var>& parts) {
  if (parts.empty()) throw ShapeError("concat_rows of nothing");
  const std::size_t cols = parts.front().value().cols();
  std::size_t rows = 0;
  for (const Var& p : parts) {
    require_rank2(p, "concat_rows");
    if (p.value().cols() != cols) {
      throw ShapeError("concat_rows column mismatch: " + to_string(p.shape()) + " vs width " +
                       std::to_string(cols));
    }
    rows += p.value().rows();
  }
  std::vector<double> data;
  data.reserve(rows * cols);
  std::vector<std::pair<std::size_t, std::size_t>> spans;  // (id, offset)
  for (const Var& p : parts) {
    spans.emplace_back(p.id(), data.size());
    const auto d = p.value().data();
    data.insert(data.end(), d.begin(), d.end());
  }
  return parts.front().tape().record(
      "concat_rows", Tensor({rows, cols}, std::move(data)), parts,
      [spans = std::move(spans)](const Tensor& g, Tape& t) {
        for (const auto& [id, offset] : spans) {
          if (!t.needs_grad(id)) continue;
          auto& dp = t.grad_buffer(id);
          for (std::size_t i = 0; i < dp.size(); ++i) dp[i] += g[offset + i];
        }
      });
}

Var slice_rows(Var x, std::size_t begin, std::size_t end) {
  require_rank2(x, "slice_rows");
  const std::size_t rows = x.shape()[0], cols = x.shape()[1];
  if (begin >= end || end > rows) {
    throw ShapeError("slice_rows [" + std::to_string(begin) + ", " + std::to_string(end) +
                     ") out of range for " + to_string(x.shape()));
  }
  const auto d = x.value().data();
  Tensor out({end - begin, cols},
             std::vector<double>(d.begin() + static_cast<std::ptrdiff_t>(begin * cols),
                                 d.begin() + static_cast<std::ptrdiff_t>(end * cols)));
  const std::size_t ix = x.id();
  const std::size_t offset = begin * cols;
  return x.tape().record("slice_rows", std::move(out), {x},
                         [ix, offset](const Tensor& g, Tape& t) {
                           auto& dx = t.grad_buffer(ix);
                           for (std::size_t i = 0; i < g.numel(); ++i) dx[offset + i] += g[i];
                         });
}

Var gather(Var x, const std::vector<std::size_t>& index, Shape shape) {
  if (numel(shape) != index.size()) {
    throw ShapeError("gather: " + std::to_string(index.size()) + " indices for shape " +
                     to_string(shape));
  }
  const auto xv = x.value().data();
  std::vector<double> data(index.size());
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index[i] >= xv.size()) throw ShapeError("gather index out of range");
    data[i] = xv[index[i]];
  }
  const std::size_t ix = x.id();
  return x.tape().record("gather", Tensor(std::move(shape), std::move(data)), {x},
                         [ix, index](const Tensor& g, Tape& t) {
                           auto& dx = t.grad_buffer(ix);
                           for (std::size_t i = 0; i < index.size(); ++i) dx[index[i]] += g[i];
                         });
}

Var embedding(Var table, const std::vector<int>& ids) {
  require_rank2(table, "embedding");
  const std::size_t vocab = table.shape()[0], dim = table.shape()[1];
  if (ids.empty()) throw ShapeError("embedding of an empty id list");
  std::vector<std::size_t> index;
  index.reserve(ids.size() * dim);
  for (int id : ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= vocab) {
      throw ShapeError("embedding id " + std::to_string(id) + " outside vocab of " +
                       std::to_string(vocab));
    }
    for (std::size_t c = 0; c < dim; ++c) index.push_back(static_cast<std::size_t>(id) * dim + c);
  }
  return gather(table, index, {ids.size(), dim});
}

Var sum(Var x) {
  double s = 0.0;
  for (double v : x.value().data()) s += v;
  const std::size_t ix = x.id();
  return x.tape().record("sum", Tensor::scalar(s), {x}, [ix](const Tensor& g, Tape& t) {
    auto& dx = t.grad_buffer(ix);
    for (double& d : dx) d += g[0];
  });
}

Var mean(Var x) { return scale(sum(x), 1.0 / static_cast<double>(x.value().numel())); }

Var cross_entropy(Var logits, const std::vector<int>& targets, const std::vector<bool>& mask) {
  require_rank2(logits, "cross_entropy");
  const std::size_t rows = logits.shape()[0], vocab = logits.shape()[1];
  if (targets.size() != rows || mask.size() != rows) {
    throw ShapeError("cross_entropy: targets/mask length must equal logits rows");
  }
  const auto count = static_cast<std::size_t>(std::count(mask.begin(), mask.end(), true));
  if (count == 0) throw InputError("cross_entropy: loss mask selects no positions");
  const auto lv = logits.value().data();
  std::vector<double> probs(rows * vocab, 0.0);
  double total = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    if (!mask[r]) continue;
    const int tgt = targets[r];
    if (tgt < 0 || static_cast<std::size_t>(tgt) >= vocab) {
      throw ShapeError("cross_entropy target " + std::to_string(tgt) + " outside vocab");
    }
    const double* row = &lv[r * vocab];
    const double mx = *std::max_element(row, row + vocab);
    double s = 0.0;
    for (std::size_t c = 0; c < vocab; ++c) s += std::exp(row[c] - mx);
    const double log_z = mx + std::log(s);
    total += log_z - row[tgt];
    for (std::size_t c = 0; c < vocab; ++c) probs[r * vocab + c] = std::exp(row[c] - log_z);
  }
  const double inv = 1.0 / static_cast<double>(count);
  const std::size_t il = logits.id();
  return logits.tape().record(
      "cross_entropy", Tensor::scalar(total * inv), {logits},
      [il, rows, vocab, inv, targets, mask, probs = std::move(probs)](const Tensor& g, Tape& t) {
        auto& dl = t.grad_buffer(il);
        const double s = g[0] * inv;
        for (std::size_t r = 0; r < rows; ++r) {
          if (!mask[r]) continue;
          for (std::size_t c = 0; c < vocab; ++c) dl[r * vocab + c] += s * probs[r * vocab + c];
          dl[r * vocab + static_cast<std::size_t>(targets[r])] -= s;
        }
      });
}

}  // namespace pam::num
