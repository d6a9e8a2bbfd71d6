// Copyright 2026 The PAM Desk Authors
// SPDX-License-Identifier: Apache-2.0

#include "pam/numcore/layers.hpp"

#include <cmath>

namespace pam::num {

Tensor randn(Shape shape, double stddev, Rng& rng) {
  Tensor t(std::move(shape));
  for (double& v : t.data()) v = rng.normal(0.0, stddev);
  return t;
}

Linear::Linear(const std::string& name, std::size_t in, std::size_t out, Rng& rng,
               bool trainable)
    : weight(name + ".weight", randn({in, out}, 1.0 / std::sqrt(static_cast<double>(in)), rng),
             trainable),
      bias(name + ".bias", Tensor({out}), trainable) {}

Var Linear::operator()(Tape& tape, Var x) {
  return add_bias(matmul(x, tape.param(weight)), tape.param(bias));
}

void Linear::collect(ParamList& out) {
  out.push_back(&weight);
  out.push_back(&bias);
}

LayerNorm::LayerNorm(const std::string& name, std::size_t dim, bool trainable)
    : gamma(name + ".gamma", Tensor::full({dim}, 1.0), trainable),
      beta(name + ".beta", Tensor({dim}), trainable) {}

Var LayerNorm::operator()(Tape& tape, Var x) {
  return layer_norm(x, tape.param(gamma), tape.param(beta), eps);
}

void LayerNorm::collect(ParamList& out) {
  out.push_back(&gamma);
  out.push_back(&beta);
}

Mlp::Mlp(const std::string& name, std::size_t in, std::size_t hidden, std::size_t out, Rng& rng,
         bool trainable)
    : fc1(name + ".fc1", in, hidden, rng, trainable),
      fc2(name + ".fc2", hidden, out, rng, trainable) {}

Var Mlp::operator()(Tape& tape, Var x) { return fc2(tape, gelu(fc1(tape, x))); }

void Mlp::collect(ParamList& out) {
  fc1.collect(out);
  fc2.collect(out);
}

Attention::Attention(const std::string& name, std::size_t dim, std::size_t inner, Rng& rng,
                     bool trainable)
    : q_proj(name + ".q", dim, inner, rng, trainable),
      k_proj(name + ".k", dim, inner, rng, trainable),
      v_proj(name + ".v", dim, inner, rng, trainable),
      out_proj(name + ".out", inner, dim, rng, trainable) {}

Var Attention::operator()(Tape& tape, Var queries, Var keys, Var values, bool causal) {
  Var q = q_proj(tape, queries);
  Var k = k_proj(tape, keys);
  Var v = v_proj(tape, values);
  return out_proj(tape, scaled_dot_attention(q, k, v, causal));
}

void Attention::collect(ParamList& out) {
  q_proj.collect(out);
  k_proj.collect(out);
  v_proj.collect(out);
  out_proj.collect(out);
}

ConstParamList as_const(const ParamList& params) {
  return ConstParamList(params.begin(), params.end());
}

}  // namespace pam::num
