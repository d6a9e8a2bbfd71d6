// Copyright 2026 The PAM Desk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "pam/numcore/tensor.hpp"

namespace pam::num {

/// A named model weight. `grad` accumulates across backward passes until
/// `zero_grad()`; frozen parameters never receive gradient.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
  bool trainable = true;

  Parameter() = default;
  Parameter(std::string n, Tensor v, bool train = true)
      : name(std::move(n)), value(std::move(v)), grad(value.shape()), trainable(train) {}

  void zero_grad();
};

/// FNV-1a over names and raw value bytes. Bit-exact: any change to any
/// value changes the digest.
std::uint64_t checksum(const std::vector<const Parameter*>& params);

class Tape;

/// Handle to a value recorded on a tape. Cheap to copy; only valid while the
/// owning tape is alive.
class Var {
 public:
  Var() = default;
  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  std::size_t id() const noexcept { return id_; }
  Tape& tape() const noexcept { return *tape_; }
  bool requires_grad() const;

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Reverse-mode recording. Nodes are appended in evaluation order, so parents
/// always precede children and backward is a single reverse sweep.
class Tape {
 public:
  using BackwardFn = std::function<void(const Tensor& out_grad, Tape& tape)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Leaf that never requires grad.
  Var constant(Tensor value);
  /// Leaf bound to a parameter. Registered once per tape; repeated calls
  /// return the same node. The parameter must outlive the tape.
  Var param(Parameter& p);

  /// Append an op result. `backward` is dropped when no parent requires grad.
  /// Throws NumericError if `value` holds NaN or Inf.
  Var record(const char* op, Tensor value, std::vector<Var> parents, BackwardFn backward);

  /// Propagate d(root)/d(node) to every node and accumulate into parameter
  /// grads. `root` must hold a single element. Allowed once per tape.
  void backward(Var root);

  /// Gradient of the last backward pass w.r.t. `v` (zeros if unreached).
  Tensor grad(Var v) const;

  /// Used by backward closures.
  void accumulate(std::size_t id, const Tensor& g);
  std::vector<double>& grad_buffer(std::size_t id);
  bool needs_grad(std::size_t id) const { return nodes_[id].requires_grad; }

  const Tensor& value(std::size_t id) const;
  std::size_t size() const noexcept { return nodes_.size(); }

 private:
  struct Node {
    Tensor owned;
    const Tensor* borrowed = nullptr;
    std::vector<double> grad;
    bool requires_grad = false;
    BackwardFn backward;
    Parameter* param = nullptr;
  };
  std::vector<Node> nodes_;
  std::unordered_map<const Parameter*, std::size_t> param_index_;
  bool backward_done_ = false;
};

}  // namespace pam::num
