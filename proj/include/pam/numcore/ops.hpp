// Copyright 2026 The PAM Desk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <vector>

#include "pam/numcore/tape.hpp"

namespace pam::num {

// Differentiable ops. Every op checks shapes eagerly (ShapeError) and
// rejects non-finite results (NumericError).

Var matmul(Var a, Var b);            // [m×k]·[k×n]
Var transpose(Var x);                // 2-D only
Var add(Var a, Var b);               // same shape
Var sub(Var a, Var b);               // same shape
Var mul(Var a, Var b);               // elementwise, same shape
Var scale(Var x, double s);
Var add_bias(Var x, Var bias);       // bias broadcast over the last dim
Var gelu(Var x);                     // tanh approximation
Var softmax(Var x, std::size_t axis);
/// Row softmax of a 2-D score matrix [L×S] where row i may attend only to
/// columns j ≤ i + (S − L).
Var causal_softmax(Var scores);
Var layer_norm(Var x, Var gamma, Var beta, double eps);
Var scaled_dot_attention(Var q, Var k, Var v, bool causal_mask);

Var reshape(Var x, Shape shape);
Var concat_rows(const std::vector<Var>& parts);   // 2-D, equal column count
Var slice_rows(Var x, std::size_t begin, std::size_t end);
/// out[i] = x[index[i]] with output shape `shape`; backward scatter-adds.
Var gather(Var x, const std::vector<std::size_t>& index, Shape shape);
/// Rows of `table` [V×E] selected by `ids`.
Var embedding(Var table, const std::vector<int>& ids);

Var sum(Var x);
Var mean(Var x);
/// Mean next-token cross entropy over rows with mask[i] set. logits [L×V].
Var cross_entropy(Var logits, const std::vector<int>& targets, const std::vector<bool>& mask);

// Raw kernels, shared with code that runs outside a tape.
namespace kernel {
/// c[m×n] (+)= a[m×k]·b[k×n]
void gemm_nn(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
             std::size_t n, bool accumulate);
/// c[m×n] += a[m×k]·b[n×k]ᵀ
void gemm_nt_acc(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                 std::size_t n);
/// c[m×n] += a[k×m]ᵀ·b[k×n]
void gemm_tn_acc(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                 std::size_t n);
}  // namespace kernel

}  // namespace pam::num
