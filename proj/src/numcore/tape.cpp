// Copyright 2026 The PAM Desk Authors
// SPDX-License-Identifier: Apache-2.0

#include "pam/numcore/tape.hpp"

#include <algorithm>
#include <cstring>

#include "pam/errors.hpp"

namespace pam::num {

void Parameter::zero_grad() {
  if (grad.shape() != value.shape()) grad = Tensor(value.shape());
  std::fill(grad.data().begin(), grad.data().end(), 0.0);
}

std::uint64_t checksum(const std::vector<const Parameter*>& params) {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](const void* bytes, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(bytes);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= p[i];
      h *= 1099511628211ULL;
    }
  };
  for (const Parameter* p : params) {
    mix(p->name.data(), p->name.size());
    const auto data = p->value.data();
    mix(data.data(), data.size_bytes());
  }
  return h;
}

const Tensor& Var::value() const { return tape_->value(id_); }
bool Var::requires_grad() const { return tape_->needs_grad(id_); }

const Tensor& Tape::value(std::size_t id) const {
  const Node& n = nodes_.at(id);
  return n.borrowed ? *n.borrowed : n.owned;
}

Var Tape::constant(Tensor value) {
  if (!value.all_finite()) throw NumericError("constant holds non-finite values");
  Node n;
  n.owned = std::move(value);
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

Var Tape::param(Parameter& p) {
  if (auto it = param_index_.find(&p); it != param_index_.end()) return Var(this, it->second);
  if (!p.value.all_finite()) throw NumericError("parameter " + p.name + " holds non-finite values");
  Node n;
  n.borrowed = &p.value;
  n.requires_grad = p.trainable;
  n.param = &p;
  nodes_.push_back(std::move(n));
  param_index_.emplace(&p, nodes_.size() - 1);
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(const char* op, Tensor value, std::vector<Var> parents, BackwardFn backward) {
  if (!value.all_finite()) {
    throw NumericError(std::string("non-finite output from ") + op + " " +
                       to_string(value.shape()));
  }
  Node n;
  n.owned = std::move(value);
  n.requires_grad = std::any_of(parents.begin(), parents.end(), [this](const Var& v) {
    return v.tape_ == this && nodes_[v.id_].requires_grad;
  });
  for (const Var& v : parents) {
    if (v.tape_ != this) throw ShapeError(std::string(op) + ": operand recorded on another tape");
  }
  if (n.requires_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

std::vector<double>& Tape::grad_buffer(std::size_t id) {
  Node& n = nodes_[id];
  if (n.grad.empty()) n.grad.assign(value(id).numel(), 0.0);
  return n.grad;
}

void Tape::accumulate(std::size_t id, const Tensor& g) {
  if (!nodes_[id].requires_grad) return;
  auto& buf = grad_buffer(id);
  if (buf.size() != g.numel()) throw ShapeError("gradient size mismatch during backward");
  for (std::size_t i = 0; i < buf.size(); ++i) buf[i] += g[i];
}

void Tape::backward(Var root) {
  if (backward_done_) throw Error("backward already run on this tape");
  if (root.tape_ != this) throw ShapeError("backward root recorded on another tape");
  if (value(root.id_).numel() != 1) throw ShapeError("backward root must be a scalar");
  backward_done_ = true;
  if (!nodes_[root.id_].requires_grad) return;
  grad_buffer(root.id_)[0] = 1.0;
  for (std::size_t i = root.id_ + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.grad.empty()) continue;
    if (n.backward) {
      Tensor g(value(i).shape(), n.grad);
      n.backward(g, *this);
    }
    if (n.param != nullptr && n.param->trainable) {
      auto out = n.param->grad.data();
      if (out.size() != n.grad.size()) n.param->zero_grad();
      out = n.param->grad.data();
      for (std::size_t k = 0; k < out.size(); ++k) out[k] += n.grad[k];
    }
  }
}

Tensor Tape::grad(Var v) const {
  const Node& n = nodes_.at(v.id_);
  if (n.grad.empty()) return Tensor(value(v.id_).shape());
  return Tensor(value(v.id_).shape(), n.grad);
}

}  // namespace pam::num
