// Copyright 2026 The PAM Desk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "pam/numcore/tape.hpp"

namespace pam::num {

struct GradCheckOptions {
  double eps = 1e-4;
  double tol = 1e-3;
  /// Denominator floor for the relative error, so coordinates whose true
  /// gradient is ~0 are compared absolutely.
  double abs_floor = 1e-6;
  /// Check at most this many coordinates per parameter (0 = all), sampled
  /// with `seed`.
  std::size_t max_coords_per_param = 0;
  std::uint64_t seed = 0;
};

struct GradCheckReport {
  double max_rel_err = 0.0;
  bool pass = false;
  std::size_t coords_checked = 0;
  std::string worst;  // "<param>[<index>]"
};

/// The objective records its computation on the given tape, binding every
/// checked parameter through `tape.param()`, and returns a scalar.
using Objective = std::function<Var(Tape&)>;

/// Compare tape gradients against central differences
/// (f(p+eps) - f(p-eps)) / 2eps for every selected coordinate.
GradCheckReport grad_check(const Objective& f, const std::vector<Parameter*>& params,
                           const GradCheckOptions& options = {});

}  // namespace pam::num
