// Copyright 2026 The PAM Desk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "pam/numcore/ops.hpp"
#include "pam/numcore/tape.hpp"

namespace pam::num {

/// Seeded generator used for every weight initialization.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double normal(double mean = 0.0, double stddev = 1.0) {
    return std::normal_distribution<double>(mean, stddev)(engine_);
  }
  double uniform(double lo = 0.0, double hi = 1.0) {
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
  }
  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

Tensor randn(Shape shape, double stddev, Rng& rng);

using ParamList = std::vector<Parameter*>;
using ConstParamList = std::vector<const Parameter*>;

/// y = x·W + b with W stored [in×out].
struct Linear {
  Parameter weight;
  Parameter bias;

  Linear() = default;
  Linear(const std::string& name, std::size_t in, std::size_t out, Rng& rng, bool trainable);
  Var operator()(Tape& tape, Var x);
  void collect(ParamList& out);
  std::size_t in_dim() const { return weight.value.dim(0); }
  std::size_t out_dim() const { return weight.value.dim(1); }
};

struct LayerNorm {
  Parameter gamma;
  Parameter beta;
  double eps = 1e-5;

  LayerNorm() = default;
  LayerNorm(const std::string& name, std::size_t dim, bool trainable);
  Var operator()(Tape& tape, Var x);
  void collect(ParamList& out);
};

/// Linear → GELU → Linear.
struct Mlp {
  Linear fc1;
  Linear fc2;

  Mlp() = default;
  Mlp(const std::string& name, std::size_t in, std::size_t hidden, std::size_t out, Rng& rng,
      bool trainable);
  Var operator()(Tape& tape, Var x);
  void collect(ParamList& out);
};

/// Single-head attention with query/key/value/output projections. The inner
/// width may be narrower than the model width (SAM-style downsampled
/// cross-attention).
struct Attention {
  Linear q_proj;
  Linear k_proj;
  Linear v_proj;
  Linear out_proj;

  Attention() = default;
  Attention(const std::string& name, std::size_t dim, std::size_t inner, Rng& rng,
            bool trainable);
  Var operator()(Tape& tape, Var queries, Var keys, Var values, bool causal = false);
  void collect(ParamList& out);
};

ConstParamList as_const(const ParamList& params);

}  // namespace pam::num
