// Copyright 2026 The corrfed Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "corrfed/privacy.h"

#include <cmath>

#include "absl/strings/str_cat.h"
#include "corrfed/status_macros.h"

namespace corrfed {
namespace {

double MaxColumnSqNorm(const Factorization& f) {
  // Stats cannot fail with tau = 1.
  return ComputeStats(f, 1)->max_col_sq_norm;
}

}  // namespace

absl::StatusOr<double> RhoFromEpsDelta(double epsilon, double delta) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    return absl::InvalidArgumentError(
        absl::StrCat("epsilon must be positive and finite, got ", epsilon));
  }
  if (!(delta > 0.0 && delta <= 1.0)) {
    return absl::InvalidArgumentError(
        absl::StrCat("delta must lie in (0, 1], got ", delta));
  }
  const double log_inv_delta = -std::log(delta);
  const double root =
      std::sqrt(epsilon + log_inv_delta) - std::sqrt(log_inv_delta);
  return root * root;
}

double ApproximateRho(double epsilon, double delta) {
  return epsilon * epsilon / (4.0 * -std::log(delta));
}

double Sensitivity(double clip_bound, const Factorization& f) {
  return 2.0 * clip_bound * std::sqrt(MaxColumnSqNorm(f));
}

absl::StatusOr<PrivacyBudget> Calibrate(double epsilon, double delta,
                                        double clip_bound,
                                        const Factorization& f) {
  if (!(clip_bound > 0.0) || !std::isfinite(clip_bound)) {
    return absl::InvalidArgumentError(
        absl::StrCat("clip bound must be positive, got ", clip_bound));
  }
  CORRFED_ASSIGN_OR_RETURN(double rho, RhoFromEpsDelta(epsilon, delta));
  PrivacyBudget budget;
  budget.epsilon = epsilon;
  budget.delta = delta;
  budget.rho = rho;
  budget.clip_bound = clip_bound;
  budget.max_col_sq_norm = MaxColumnSqNorm(f);
  budget.sensitivity = 2.0 * clip_bound * std::sqrt(budget.max_col_sq_norm);
  budget.noise_variance =
      2.0 * clip_bound * clip_bound * budget.max_col_sq_norm / rho;
  return budget;
}

}  // namespace corrfed
