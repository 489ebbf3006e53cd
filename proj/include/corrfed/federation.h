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

#ifndef CORRFED_FEDERATION_H_
#define CORRFED_FEDERATION_H_

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "corrfed/factorization.h"
#include "corrfed/metrics.h"
#include "corrfed/noise.h"
#include "corrfed/privacy.h"
#include "corrfed/streams.h"

namespace corrfed {

// How a learner turns its noise channel into a noisy gradient.
enum class UpdatePath {
  // z <- z - eta (g + (b^k - b^{k-1}) xi).
  kIncrement,
  // Releases S^k = g^0 + ... + g^k + b^k xi and steps along S^k - S^{k-1}.
  kPrefixSum,
};

struct SimConfig {
  int n = 1;     // learners
  int R = 1;     // rounds
  int tau = 1;   // local steps per round
  int dim = 1;
  double eta = 0.1;    // local step size
  double eta_g = 1.0;  // server step multiplier
  double clip_bound = 1.0;

  MechanismKind mechanism = MechanismKind::kToeplitz;
  // Factorization file; required when mechanism is kExternal.
  std::string mechanism_file;

  // Explicit per-coordinate noise standard deviation. When unset the noise
  // is calibrated from (epsilon, delta, clip_bound, mechanism).
  std::optional<double> noise_std;
  double epsilon = 2.0;
  double delta = 1e-3;

  uint64_t master_seed = 0;
  DataSpec data_spec;

  bool diag_virtual_iterate = false;
  bool diag_dual_form_check = false;

  // Initial global model; zero when empty.
  std::vector<double> x0;
  UpdatePath update_path = UpdatePath::kIncrement;
  // Worker threads for the learners of one round; 1 runs them in order.
  int threads = 1;

  int steps() const { return R * tau; }
  // eta * eta_g * tau.
  double EffectiveServerStep() const { return eta * eta_g * tau; }
};

// Field-by-field check; every violation is listed in the message.
absl::Status ValidateSimConfig(const SimConfig& cfg);

// Builds or loads the factorization named by the config for R * tau steps.
absl::StatusOr<std::shared_ptr<const Factorization>> ResolveFactorization(
    const SimConfig& cfg);

struct NoiseCalibration {
  double stddev = 0.0;
  // Set when the std was derived from a privacy budget.
  std::optional<PrivacyBudget> budget;
};
absl::StatusOr<NoiseCalibration> ResolveNoise(const SimConfig& cfg,
                                              const Factorization& f);

struct LearnerState {
  LearnerState(NoiseChannel channel_in, int dim);

  std::vector<double> z;
  NoiseChannel channel;
  std::vector<double> round_start;
  // Exact running sum of clipped gradients over the whole history.
  std::vector<double> gradient_prefix;
  // Last released noisy prefix sum S^{k-1} (zero before the first step).
  std::vector<double> last_noisy_prefix;
  // Sum of clipped gradients within the current round.
  std::vector<double> round_gradient_sum;
  int64_t samples_seen = 0;
};

struct GlobalState {
  std::vector<double> x;
  int round = 0;
  // x + (eta_tilde / tau) * mean_i b^{r tau - 1} xi_i, when tracked.
  std::optional<std::vector<double>> virtual_x;
};

// One local update on `sample` at the learner's current iterate.
absl::Status LocalStep(LearnerState& learner, const StreamSample& sample,
                       double eta, double clip_bound, UpdatePath path);

// One communication round: every learner restarts from gs.x, runs tau local
// steps on its samples and reports g_hat_i = (x - z_i) / (eta tau); the
// server moves to x - eta_tilde * mean_i g_hat_i.
absl::Status RunRound(GlobalState& gs, std::span<LearnerState> learners,
                      std::span<const std::vector<StreamSample>> round_data,
                      const SimConfig& cfg);

struct DiagnosticsReport {
  bool virtual_iterate_checked = false;
  double max_virtual_residual = 0.0;
  bool dual_form_checked = false;
  double max_dual_form_residual = 0.0;
};

inline constexpr double kVirtualIterateTolerance = 1e-8;
inline constexpr double kDualFormTolerance = 1e-6;

struct SimulationResult {
  // x^0, ..., x^{R-1}: the model in service during each round.
  std::vector<std::vector<double>> released_models;
  // x^R.
  std::vector<double> final_model;
  RegretTrace trace;
  NoiseCalibration noise;
  DiagnosticsReport diagnostics;
};

struct SimulationOptions {
  // Reused instead of resolving cfg.mechanism when set.
  std::shared_ptr<const Factorization> factorization;
  // Shared optima cache; a private one is used when null.
  RegretEvaluator* evaluator = nullptr;
  bool compute_regret = true;
  bool with_static = false;
};

// Runs all R rounds over `stream`. Diagnostic violations abort with an
// Aborted status naming the first failing round.
absl::StatusOr<SimulationResult> RunSimulation(
    const SimConfig& cfg, const DataStream& stream,
    const SimulationOptions& options = {});

}  // namespace corrfed

#endif  // CORRFED_FEDERATION_H_
