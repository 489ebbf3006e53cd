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

#ifndef CORRFED_METRICS_H_
#define CORRFED_METRICS_H_

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "corrfed/streams.h"

namespace corrfed {

struct OptimumOptions {
  double grad_tolerance = 1e-8;
  int max_iterations = 100000;
  // Starting point for the logistic solver; zero when empty.
  std::vector<double> initial_point;
};

struct Optimum {
  double value = 0.0;
  std::vector<double> minimizer;
  bool converged = true;
  int iterations = 0;
};

// Minimizes the average loss over `samples`. Quadratic losses use the closed
// form (mean of the centers). Logistic losses use damped Newton steps with
// Armijo backtracking, stopping when the gradient norm reaches
// grad_tolerance or after max_iterations; on separable data the infimum is
// approached but never attained, so the returned value is the last iterate.
// Nonconvergence is reported through `converged`, not as an error.
absl::StatusOr<Optimum> MinimizeAverageLoss(
    std::span<const StreamSample> samples, const OptimumOptions& options = {});

absl::StatusOr<Optimum> RoundOptimum(const DataStream& stream, int round,
                                     const OptimumOptions& options = {});

// Minimizer of the loss summed over every round.
absl::StatusOr<Optimum> GlobalOptimum(const DataStream& stream,
                                      const OptimumOptions& options = {});

struct TraceRow {
  int round = 0;
  double avg_round_loss = 0.0;
  double round_opt = 0.0;
  double cum_dyn_regret = 0.0;
  std::optional<double> cum_static_regret;
  std::optional<double> cr_analog;
};

struct RegretTrace {
  int tau = 1;
  std::vector<TraceRow> rows;
  // False when some round optimum stopped short of its tolerance.
  bool optima_converged = true;

  double FinalDynamicRegret() const {
    return rows.empty() ? 0.0 : rows.back().cum_dyn_regret;
  }
  // Dynamic regret divided by the number of steps R * tau.
  double FinalNormalizedRegret() const {
    return rows.empty() ? 0.0
                        : FinalDynamicRegret() /
                              (static_cast<double>(rows.size()) * tau);
  }
};

// Dynamic regret of the models x^0..x^{R-1} against per-round optima:
//   sum_r sum_t (1/n) sum_i (f_i^{r,t}(x^r) - (f^r)*).
// `round_optima`, when given, must hold one entry per round.
absl::StatusOr<RegretTrace> DynamicRegret(
    std::span<const std::vector<double>> models, const DataStream& stream,
    std::span<const Optimum> round_optima = {});

// Static regret against the global optimum x*; fills cum_static_regret in
// `trace` when given. An empty model list has regret 0.
absl::StatusOr<double> StaticRegret(
    std::span<const std::vector<double>> models, const DataStream& stream,
    const Optimum& global, RegretTrace* trace = nullptr);

// sum_r ||x_r* - x*||^2, defined for quadratic streams whose round solution
// sets are single points. Fills cr_analog cumulatively in `trace` when given.
absl::StatusOr<double> CrAnalog(std::span<const Optimum> round_optima,
                                const Optimum& global, LossKind kind,
                                RegretTrace* trace = nullptr);

// Caches round and global optima of one stream so that several runs over the
// same data (different mechanisms) share the offline solves.
class RegretEvaluator {
 public:
  explicit RegretEvaluator(const DataStream& stream,
                           OptimumOptions options = {});

  absl::StatusOr<std::span<const Optimum>> RoundOptima();
  absl::StatusOr<const Optimum*> Global();

  // Dynamic regret, plus static regret and (quadratic only) the C_R analog
  // when `with_static` is set.
  absl::StatusOr<RegretTrace> Evaluate(
      std::span<const std::vector<double>> models, bool with_static);

 private:
  const DataStream& stream_;
  OptimumOptions options_;
  std::vector<Optimum> round_optima_;
  std::optional<Optimum> global_;
};

// CSV with columns round,avg_round_loss,round_opt,cum_dyn_regret,
// cum_static_regret,cr_analog; optional columns are left blank.
std::string SerializeTrace(const RegretTrace& trace);
absl::Status WriteTrace(const RegretTrace& trace, const std::string& path);

// Shortest round-trip decimal form used in every emitted file.
std::string FormatDouble(double value);

}  // namespace corrfed

#endif  // CORRFED_METRICS_H_
