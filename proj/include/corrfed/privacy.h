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

#ifndef CORRFED_PRIVACY_H_
#define CORRFED_PRIVACY_H_

#include "absl/status/statusor.h"
#include "corrfed/factorization.h"

namespace corrfed {

struct PrivacyBudget {
  double epsilon = 0.0;
  double delta = 0.0;
  // zCDP parameter equivalent to (epsilon, delta).
  double rho = 0.0;
  // Bound on every clipped gradient norm.
  double clip_bound = 0.0;
  // L2 sensitivity of C * G under replacement of one gradient row.
  double sensitivity = 0.0;
  double max_col_sq_norm = 0.0;
  // Per-coordinate variance of each learner's i.i.d. noise table.
  double noise_variance = 0.0;
};

// rho = (sqrt(eps + ln(1/delta)) - sqrt(ln(1/delta)))^2. Requires eps > 0 and
// 0 < delta <= 1.
absl::StatusOr<double> RhoFromEpsDelta(double epsilon, double delta);

// Small-epsilon approximation eps^2 / (4 ln(1/delta)); for reporting only.
double ApproximateRho(double epsilon, double delta);

// 2 * clip_bound * max_k ||c^k||.
double Sensitivity(double clip_bound, const Factorization& f);

// noise_variance = sensitivity^2 / (2 rho)
//                = 2 clip_bound^2 max_k ||c^k||^2 / rho.
absl::StatusOr<PrivacyBudget> Calibrate(double epsilon, double delta,
                                        double clip_bound,
                                        const Factorization& f);

}  // namespace corrfed

#endif  // CORRFED_PRIVACY_H_
