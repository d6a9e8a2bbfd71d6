// Copyright 2026 The PAM Desk Authors
// SPDX-License-Identifier: Apache-2.0

#include "pam/numcore/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "pam/errors.hpp"

namespace pam::num {

namespace {

double evaluate(const Objective& f) {
  Tape tape;
  const double v = f(tape).value().item();
  if (!std::isfinite(v)) throw NumericError("grad_check: objective is not finite");
  return v;
}

}  // namespace

GradCheckReport grad_check(const Objective& f, const std::vector<Parameter*>& params,
                           const GradCheckOptions& options) {
  if (!(options.eps > 0.0)) throw ConfigError("grad_check: eps must be positive");
  for (Parameter* p : params) p->zero_grad();
  {
    Tape tape;
    Var out = f(tape);
    if (!std::isfinite(out.value().item())) {
      throw NumericError("grad_check: objective is not finite");
    }
    tape.backward(out);
  }

  GradCheckReport report;
  std::mt19937_64 rng(options.seed);
  for (Parameter* p : params) {
    const std::size_t n = p->value.numel();
    std::vector<std::size_t> coords(n);
    std::iota(coords.begin(), coords.end(), 0);
    if (options.max_coords_per_param != 0 && options.max_coords_per_param < n) {
      std::shuffle(coords.begin(), coords.end(), rng);
      coords.resize(options.max_coords_per_param);
      std::sort(coords.begin(), coords.end());
    }
    for (std::size_t i : coords) {
      const double saved = p->value[i];
      p->value[i] = saved + options.eps;
      const double up = evaluate(f);
      p->value[i] = saved - options.eps;
      const double down = evaluate(f);
      p->value[i] = saved;
      const double numeric = (up - down) / (2.0 * options.eps);
      const double analytic = p->grad[i];
      const double denom = std::max({std::abs(numeric), std::abs(analytic), options.abs_floor});
      const double rel = std::abs(numeric - analytic) / denom;
      ++report.coords_checked;
      if (rel > report.max_rel_err || report.worst.empty()) {
        if (rel >= report.max_rel_err) {
          report.max_rel_err = rel;
          report.worst = p->name + "[" + std::to_string(i) + "]";
        }
      }
    }
  }
  report.pass = report.max_rel_err < options.tol;
  return report;
}

}  // namespace pam::num
