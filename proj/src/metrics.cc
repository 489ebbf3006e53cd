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

#include "corrfed/metrics.h"

#include <charconv>
#include <cmath>
#include <fstream>

#include <Eigen/Dense>

#include "absl/strings/str_cat.h"
#include "corrfed/status_macros.h"

namespace corrfed {
namespace {

double Softplus(double z) {
  return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

double Sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

absl::Status CheckSamples(std::span<const StreamSample> samples) {
  if (samples.empty()) {
    return absl::InvalidArgumentError("optimum of an empty sample set");
  }
  for (const StreamSample& s : samples) {
    if (s.kind != samples.front().kind ||
        s.vector.size() != samples.front().vector.size()) {
      return absl::InvalidArgumentError(
          "samples must share one loss kind and dimension");
    }
  }
  return absl::OkStatus();
}

Optimum QuadraticOptimum(std::span<const StreamSample> samples) {
  const size_t d = samples.front().vector.size();
  Optimum out;
  out.minimizer.assign(d, 0.0);
  for (const StreamSample& s : samples) {
    for (size_t k = 0; k < d; ++k) out.minimizer[k] += s.vector[k];
  }
  for (double& v : out.minimizer) v /= static_cast<double>(samples.size());
  double total = 0.0;
  for (const StreamSample& s : samples) total += SampleLoss(out.minimizer, s);
  out.value = total / static_cast<double>(samples.size());
  return out;
}

// Average logistic loss over the rows of `signed_features` (b_j a_j).
class LogisticObjective {
 public:
  explicit LogisticObjective(std::span<const StreamSample> samples)
      : rows_(static_cast<Eigen::Index>(samples.size()),
              static_cast<Eigen::Index>(samples.front().vector.size())) {
    for (Eigen::Index j = 0; j < rows_.rows(); ++j) {
      const StreamSample& s = samples[j];
      for (Eigen::Index k = 0; k < rows_.cols(); ++k) {
        rows_(j, k) = s.label * s.vector[k];
      }
    }
  }

  double Value(const Eigen::VectorXd& x) const {
    const Eigen::VectorXd margins = rows_ * x;
    double total = 0.0;
    for (Eigen::Index j = 0; j < margins.size(); ++j) {
      total += Softplus(-margins[j]);
    }
    return total / static_cast<double>(rows_.rows());
  }

  // Value, gradient and Hessian at x.
  double Derivatives(const Eigen::VectorXd& x, Eigen::VectorXd& grad,
                     Eigen::MatrixXd& hessian) const {
    const Eigen::VectorXd margins = rows_ * x;
    const double m = static_cast<double>(rows_.rows());
    Eigen::VectorXd weights(margins.size());
    Eigen::VectorXd slopes(margins.size());
    double total = 0.0;
    for (Eigen::Index j = 0; j < margins.size(); ++j) {
      total += Softplus(-margins[j]);
      const double s = Sigmoid(-margins[j]);
      slopes[j] = s;
      weights[j] = s * (1.0 - s);
    }
    grad = -(rows_.transpose() * slopes) / m;
    hessian = (rows_.transpose() * weights.asDiagonal() * rows_) / m;
    return total / m;
  }

 private:
  Eigen::MatrixXd rows_;
};

Optimum LogisticOptimum(std::span<const StreamSample> samples,
                        const OptimumOptions& options) {
  const Eigen::Index d =
      static_cast<Eigen::Index>(samples.front().vector.size());
  LogisticObjective objective(samples);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(d);
  if (static_cast<Eigen::Index>(options.initial_point.size()) == d) {
    for (Eigen::Index k = 0; k < d; ++k) x[k] = options.initial_point[k];
  }

  Optimum out;
  out.converged = false;
  Eigen::VectorXd grad;
  Eigen::MatrixXd hessian;
  double value = objective.Derivatives(x, grad, hessian);
  int iteration = 0;
  for (; iteration < options.max_iterations; ++iteration) {
    if (grad.norm() <= options.grad_tolerance) {
      out.converged = true;
      break;
    }
    // The Hessian is rank-deficient when there are fewer samples than
    // dimensions; a relative ridge keeps the solve well posed without
    // changing the step inside the span of the data.
    const double ridge =
        1e-12 * std::max(hessian.trace() / static_cast<double>(d), 1e-300);
    hessian.diagonal().array() += ridge;
    Eigen::VectorXd direction = -hessian.ldlt().solve(grad);
    double slope = grad.dot(direction);
    if (!direction.allFinite() || slope >= 0.0) {
      direction = -grad;
      slope = -grad.squaredNorm();
    }
    double step = 1.0;
    double next_value = objective.Value(x + direction);
    int halvings = 0;
    while (!(next_value <= value + 1e-4 * step * slope) && halvings < 60) {
      step *= 0.5;
      next_value = objective.Value(x + step * direction);
      ++halvings;
    }
    if (halvings == 60) {
      // No decrease representable in double precision.
      out.converged = grad.norm() <= options.grad_tolerance;
      break;
    }
    x += step * direction;
    value = objective.Derivatives(x, grad, hessian);
  }
  if (iteration == options.max_iterations) {
    out.converged = grad.norm() <= options.grad_tolerance;
  }
  out.value = value;
  out.iterations = iteration;
  out.minimizer.assign(x.data(), x.data() + d);
  return out;
}

double AverageLoss(std::span<const double> model,
                   std::span<const StreamSample> samples) {
  double total = 0.0;
  for (const StreamSample& s : samples) total += SampleLoss(model, s);
  return total / static_cast<double>(samples.size());
}

absl::Status CheckModels(std::span<const std::vector<double>> models,
                         const DataStream& stream) {
  if (static_cast<int>(models.size()) > stream.rounds()) {
    return absl::FailedPreconditionError(absl::StrCat(
        "missing round data: ", models.size(), " models but only ",
        stream.rounds(), " rounds retained"));
  }
  for (const auto& model : models) {
    if (static_cast<int>(model.size()) != stream.dim()) {
      return absl::InvalidArgumentError(
          absl::StrCat("model has dimension ", model.size(), ", stream has ",
                       stream.dim()));
    }
  }
  return absl::OkStatus();
}

}  // namespace

absl::StatusOr<Optimum> MinimizeAverageLoss(
    std::span<const StreamSample> samples, const OptimumOptions& options) {
  CORRFED_RETURN_IF_ERROR(CheckSamples(samples));
  if (samples.front().kind == LossKind::kQuadratic) {
    return QuadraticOptimum(samples);
  }
  return LogisticOptimum(samples, options);
}

absl::StatusOr<Optimum> RoundOptimum(const DataStream& stream, int round,
                                     const OptimumOptions& options) {
  if (round < 0 || round >= stream.rounds()) {
    return absl::OutOfRangeError(absl::StrCat("no data for round ", round));
  }
  const std::vector<StreamSample> samples = stream.RoundSamples(round);
  return MinimizeAverageLoss(samples, options);
}

absl::StatusOr<Optimum> GlobalOptimum(const DataStream& stream,
                                      const OptimumOptions& options) {
  std::vector<StreamSample> samples;
  samples.reserve(stream.size());
  for (int r = 0; r < stream.rounds(); ++r) {
    for (const StreamSample& s : stream.RoundSamples(r)) samples.push_back(s);
  }
  return MinimizeAverageLoss(samples, options);
}

absl::StatusOr<RegretTrace> DynamicRegret(
    std::span<const std::vector<double>> models, const DataStream& stream,
    std::span<const Optimum> round_optima) {
  CORRFED_RETURN_IF_ERROR(CheckModels(models, stream));
  if (!round_optima.empty() && round_optima.size() < models.size()) {
    return absl::FailedPreconditionError(
        "missing round data: fewer round optima than models");
  }
  RegretTrace trace;
  trace.tau = stream.tau();
  double cumulative = 0.0;
  for (size_t r = 0; r < models.size(); ++r) {
    const int round = static_cast<int>(r);
    const std::vector<StreamSample> samples = stream.RoundSamples(round);
    Optimum computed;
    const Optimum* optimum = nullptr;
    if (!round_optima.empty()) {
      optimum = &round_optima[r];
    } else {
      CORRFED_ASSIGN_OR_RETURN(computed, MinimizeAverageLoss(samples));
      optimum = &computed;
    }
    trace.optima_converged = trace.optima_converged && optimum->converged;
    TraceRow row;
    row.round = round;
    row.avg_round_loss = AverageLoss(models[r], samples);
    row.round_opt = optimum->value;
    cumulative += stream.tau() * (row.avg_round_loss - row.round_opt);
    row.cum_dyn_regret = cumulative;
    trace.rows.push_back(row);
  }
  return trace;
}

absl::StatusOr<double> StaticRegret(
    std::span<const std::vector<double>> models, const DataStream& stream,
    const Optimum& global, RegretTrace* trace) {
  CORRFED_RETURN_IF_ERROR(CheckModels(models, stream));
  double cumulative = 0.0;
  for (size_t r = 0; r < models.size(); ++r) {
    const std::vector<StreamSample> samples =
        stream.RoundSamples(static_cast<int>(r));
    cumulative += stream.tau() * (AverageLoss(models[r], samples) -
                                  AverageLoss(global.minimizer, samples));
    if (trace != nullptr && r < trace->rows.size()) {
      trace->rows[r].cum_static_regret = cumulative;
    }
  }
  return cumulative;
}

absl::StatusOr<double> CrAnalog(std::span<const Optimum> round_optima,
                                const Optimum& global, LossKind kind,
                                RegretTrace* trace) {
  if (kind != LossKind::kQuadratic) {
    return absl::UnimplementedError(
        "C_R analog is only defined for quadratic streams");
  }
  double cumulative = 0.0;
  for (size_t r = 0; r < round_optima.size(); ++r) {
    const auto& xr = round_optima[r].minimizer;
    for (size_t k = 0; k < xr.size(); ++k) {
      const double diff = xr[k] - global.minimizer[k];
      cumulative += diff * diff;
    }
    if (trace != nullptr && r < trace->rows.size()) {
      trace->rows[r].cr_analog = cumulative;
    }
  }
  return cumulative;
}

RegretEvaluator::RegretEvaluator(const DataStream& stream,
                                 OptimumOptions options)
    : stream_(stream), options_(std::move(options)) {}

absl::StatusOr<std::span<const Optimum>> RegretEvaluator::RoundOptima() {
  if (round_optima_.empty()) {
    std::vector<Optimum> optima;
    optima.reserve(stream_.rounds());
    for (int r = 0; r < stream_.rounds(); ++r) {
      CORRFED_ASSIGN_OR_RETURN(Optimum opt, RoundOptimum(stream_, r, options_));
      optima.push_back(std::move(opt));
    }
    round_optima_ = std::move(optima);
  }
  return std::span<const Optimum>(round_optima_);
}

absl::StatusOr<const Optimum*> RegretEvaluator::Global() {
  if (!global_.has_value()) {
    CORRFED_ASSIGN_OR_RETURN(Optimum opt, GlobalOptimum(stream_, options_));
    global_ = std::move(opt);
  }
  return &*global_;
}

absl::StatusOr<RegretTrace> RegretEvaluator::Evaluate(
    std::span<const std::vector<double>> models, bool with_static) {
  CORRFED_ASSIGN_OR_RETURN(std::span<const Optimum> optima, RoundOptima());
  CORRFED_ASSIGN_OR_RETURN(RegretTrace trace,
                           DynamicRegret(models, stream_, optima));
  if (with_static) {
    CORRFED_ASSIGN_OR_RETURN(const Optimum* global, Global());
    CORRFED_RETURN_IF_ERROR(
        StaticRegret(models, stream_, *global, &trace).status());
    if (stream_.kind() == LossKind::kQuadratic) {
      CORRFED_RETURN_IF_ERROR(
          CrAnalog(optima.first(models.size()), *global, stream_.kind(),
                   &trace)
              .status());
    }
  }
  return trace;
}

std::string FormatDouble(double value) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, end);
}

std::string SerializeTrace(const RegretTrace& trace) {
  std::string out =
      "round,avg_round_loss,round_opt,cum_dyn_regret,cum_static_regret,"
      "cr_analog\n";
  for (const TraceRow& row : trace.rows) {
    absl::StrAppend(&out, row.round, ",", FormatDouble(row.avg_round_loss),
                    ",", FormatDouble(row.round_opt), ",",
                    FormatDouble(row.cum_dyn_regret), ",");
    if (row.cum_static_regret) {
      out += FormatDouble(*row.cum_static_regret);
    }
    out.push_back(',');
    if (row.cr_analog) out += FormatDouble(*row.cr_analog);
    out.push_back('\n');
  }
  return out;
}

absl::Status WriteTrace(const RegretTrace& trace, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) return absl::UnavailableError(absl::StrCat("cannot open ", path));
  out << SerializeTrace(trace);
  if (!out) return absl::DataLossError(absl::StrCat("write failed: ", path));
  return absl::OkStatus();
}

}  // namespace corrfed
