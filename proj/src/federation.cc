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

#include "corrfed/federation.h"

#include <algorithm>
#include <cmath>
#include <thread>
#include <utility>

#include "absl/strings/str_cat.h"
#include "absl/strings/str_join.h"
#include "corrfed/status_macros.h"

namespace corrfed {
namespace {

// Sum of vectors[lo, hi) by recursive halving; the association depends only
// on the range, never on thread scheduling.
void PairwiseSum(std::span<const std::vector<double>> vectors,
                 std::vector<double>& out) {
  if (vectors.size() == 1) {
    out = vectors[0];
    return;
  }
  const size_t half = vectors.size() / 2;
  std::vector<double> right;
  PairwiseSum(vectors.first(half), out);
  PairwiseSum(vectors.subspan(half), right);
  for (size_t j = 0; j < out.size(); ++j) out[j] += right[j];
}

std::vector<double> PairwiseMean(std::span<const std::vector<double>> vectors) {
  std::vector<double> sum;
  PairwiseSum(vectors, sum);
  for (double& v : sum) v /= static_cast<double>(vectors.size());
  return sum;
}

double MaxAbs(std::span<const double> v) {
  double worst = 0.0;
  for (double x : v) worst = std::max(worst, std::abs(x));
  return worst;
}

bool AllZero(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; });
}

// x + (eta_tilde / tau) * mean_i b^{k-1} xi_i with k the channels' position.
std::vector<double> VirtualIterate(std::span<const double> x,
                                   std::span<const LearnerState> learners,
                                   const SimConfig& cfg) {
  std::vector<std::vector<double>> products;
  products.reserve(learners.size());
  for (const LearnerState& l : learners) {
    auto p = l.channel.prev_row_product();
    products.emplace_back(p.begin(), p.end());
  }
  const std::vector<double> mean = PairwiseMean(products);
  const double scale = cfg.EffectiveServerStep() / cfg.tau;
  std::vector<double> out(x.begin(), x.end());
  for (size_t j = 0; j < out.size(); ++j) out[j] += scale * mean[j];
  return out;
}

absl::Status RunLearner(LearnerState& learner, std::span<const double> x,
                        std::span<const StreamSample> samples,
                        const SimConfig& cfg) {
  learner.z.assign(x.begin(), x.end());
  learner.round_start.assign(x.begin(), x.end());
  std::fill(learner.round_gradient_sum.begin(),
            learner.round_gradient_sum.end(), 0.0);
  for (const StreamSample& s : samples) {
    CORRFED_RETURN_IF_ERROR(
        LocalStep(learner, s, cfg.eta, cfg.clip_bound, cfg.update_path));
  }
  return absl::OkStatus();
}

}  // namespace

absl::Status ValidateSimConfig(const SimConfig& cfg) {
  std::vector<std::string> problems;
  auto require = [&problems](bool ok, std::string message) {
    if (!ok) problems.push_back(std::move(message));
  };
  require(cfg.n >= 1, absl::StrCat("n: must be >= 1, got ", cfg.n));
  require(cfg.R >= 1, absl::StrCat("R: must be >= 1, got ", cfg.R));
  require(cfg.tau >= 1, absl::StrCat("tau: must be >= 1, got ", cfg.tau));
  require(cfg.dim >= 1, absl::StrCat("dim: must be >= 1, got ", cfg.dim));
  require(cfg.eta > 0.0, absl::StrCat("eta: must be > 0, got ", cfg.eta));
  require(cfg.eta_g > 0.0,
          absl::StrCat("eta_g: must be > 0, got ", cfg.eta_g));
  require(cfg.clip_bound > 0.0,
          absl::StrCat("clip_bound: must be > 0, got ", cfg.clip_bound));
  if (cfg.noise_std.has_value()) {
    require(*cfg.noise_std >= 0.0 && std::isfinite(*cfg.noise_std),
            absl::StrCat("noise_std: must be >= 0, got ", *cfg.noise_std));
  } else {
    require(cfg.epsilon > 0.0,
            absl::StrCat("budget.epsilon: must be > 0, got ", cfg.epsilon));
    require(cfg.delta > 0.0 && cfg.delta <= 1.0,
            absl::StrCat("budget.delta: must lie in (0, 1], got ", cfg.delta));
  }
  require(cfg.mechanism != MechanismKind::kExternal ||
              !cfg.mechanism_file.empty(),
          "mechanism: external factorization needs a file path");
  require(cfg.x0.empty() || static_cast<int>(cfg.x0.size()) == cfg.dim,
          absl::StrCat("x0: has ", cfg.x0.size(), " entries, dim is ",
                       cfg.dim));
  require(cfg.threads >= 1,
          absl::StrCat("threads: must be >= 1, got ", cfg.threads));
  if (problems.empty()) return absl::OkStatus();
  return absl::InvalidArgumentError(absl::StrJoin(problems, "; "));
}

absl::StatusOr<std::shared_ptr<const Factorization>> ResolveFactorization(
    const SimConfig& cfg) {
  if (cfg.mechanism == MechanismKind::kExternal) {
    CORRFED_ASSIGN_OR_RETURN(Factorization f,
                             LoadFactorization(cfg.mechanism_file));
    if (f.steps() != cfg.steps()) {
      return absl::InvalidArgumentError(absl::StrCat(
          "mechanism: ", cfg.mechanism_file, " covers ", f.steps(),
          " steps, run needs R * tau = ", cfg.steps()));
    }
    return std::make_shared<const Factorization>(std::move(f));
  }
  CORRFED_ASSIGN_OR_RETURN(Factorization f,
                           BuildFactorization(cfg.mechanism, cfg.steps()));
  return std::make_shared<const Factorization>(std::move(f));
}

absl::StatusOr<NoiseCalibration> ResolveNoise(const SimConfig& cfg,
                                              const Factorization& f) {
  NoiseCalibration out;
  if (cfg.noise_std.has_value()) {
    out.stddev = *cfg.noise_std;
    return out;
  }
  CORRFED_ASSIGN_OR_RETURN(
      PrivacyBudget budget,
      Calibrate(cfg.epsilon, cfg.delta, cfg.clip_bound, f));
  out.stddev = std::sqrt(budget.noise_variance);
  out.budget = budget;
  return out;
}

LearnerState::LearnerState(NoiseChannel channel_in, int dim)
    : z(dim, 0.0),
      channel(std::move(channel_in)),
      round_start(dim, 0.0),
      gradient_prefix(dim, 0.0),
      last_noisy_prefix(dim, 0.0),
      round_gradient_sum(dim, 0.0) {}

absl::Status LocalStep(LearnerState& learner, const StreamSample& sample,
                       double eta, double clip_bound, UpdatePath path) {
  if (learner.channel.exhausted()) {
    return absl::FailedPreconditionError(absl::StrCat(
        "learner ", learner.channel.learner_id(),
        ": noise channel exhausted at sample ", learner.samples_seen));
  }
  CORRFED_ASSIGN_OR_RETURN(LossAndGradient lg, LossGrad(learner.z, sample));
  std::vector<double>& g = lg.grad;
  if (!std::all_of(g.begin(), g.end(),
                   [](double v) { return std::isfinite(v); })) {
    return absl::InternalError(absl::StrCat(
        "learner ", sample.learner, ": nonfinite gradient at sample ",
        learner.samples_seen, " (round ", sample.round, ", step ",
        sample.step, ")"));
  }
  ClipGradientInPlace(g, clip_bound);
  const size_t d = g.size();
  for (size_t j = 0; j < d; ++j) {
    learner.gradient_prefix[j] += g[j];
    learner.round_gradient_sum[j] += g[j];
  }

  if (path == UpdatePath::kIncrement) {
    CORRFED_ASSIGN_OR_RETURN(std::vector<double> increment,
                             learner.channel.NextIncrement());
    for (size_t j = 0; j < d; ++j) {
      learner.z[j] -= eta * (g[j] + increment[j]);
    }
  } else {
    CORRFED_ASSIGN_OR_RETURN(
        std::vector<double> noisy_prefix,
        learner.channel.NoisyPrefix(learner.gradient_prefix));
    CORRFED_RETURN_IF_ERROR(learner.channel.NextIncrement().status());
    for (size_t j = 0; j < d; ++j) {
      learner.z[j] -= eta * (noisy_prefix[j] - learner.last_noisy_prefix[j]);
    }
    learner.last_noisy_prefix = std::move(noisy_prefix);
  }
  ++learner.samples_seen;
  return absl::OkStatus();
}

absl::Status RunRound(GlobalState& gs, std::span<LearnerState> learners,
                      std::span<const std::vector<StreamSample>> round_data,
                      const SimConfig& cfg) {
  if (round_data.size() != learners.size()) {
    return absl::InvalidArgumentError(
        absl::StrCat("round ", gs.round, ": data for ", round_data.size(),
                     " learners, expected ", learners.size()));
  }
  for (size_t i = 0; i < round_data.size(); ++i) {
    if (static_cast<int>(round_data[i].size()) != cfg.tau) {
      return absl::InvalidArgumentError(absl::StrCat(
          "round ", gs.round, ": learner ", i, " received ",
          round_data[i].size(), " samples, expected tau = ", cfg.tau));
    }
  }

  std::vector<absl::Status> statuses(learners.size());
  const int workers =
      std::min<int>(cfg.threads, static_cast<int>(learners.size()));
  if (workers <= 1) {
    for (size_t i = 0; i < learners.size(); ++i) {
      statuses[i] = RunLearner(learners[i], gs.x, round_data[i], cfg);
    }
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (size_t i = w; i < learners.size(); i += workers) {
          statuses[i] = RunLearner(learners[i], gs.x, round_data[i], cfg);
        }
      });
    }
  }
  for (const absl::Status& s : statuses) CORRFED_RETURN_IF_ERROR(s);

  const double inv_step = 1.0 / (cfg.eta * cfg.tau);
  std::vector<std::vector<double>> reports(learners.size());
  for (size_t i = 0; i < learners.size(); ++i) {
    reports[i].resize(gs.x.size());
    for (size_t j = 0; j < gs.x.size(); ++j) {
      reports[i][j] = (gs.x[j] - learners[i].z[j]) * inv_step;
    }
  }
  const std::vector<double> mean = PairwiseMean(reports);
  const double eta_tilde = cfg.EffectiveServerStep();
  for (size_t j = 0; j < gs.x.size(); ++j) gs.x[j] -= eta_tilde * mean[j];
  if (!std::all_of(gs.x.begin(), gs.x.end(),
                   [](double v) { return std::isfinite(v); })) {
    return absl::InternalError(
        absl::StrCat("round ", gs.round, ": global model became nonfinite"));
  }
  ++gs.round;
  return absl::OkStatus();
}

absl::StatusOr<SimulationResult> RunSimulation(
    const SimConfig& cfg, const DataStream& stream,
    const SimulationOptions& options) {
  CORRFED_RETURN_IF_ERROR(ValidateSimConfig(cfg));
  if (stream.learners() != cfg.n || stream.rounds() < cfg.R ||
      stream.tau() != cfg.tau || stream.dim() != cfg.dim) {
    return absl::InvalidArgumentError(absl::StrCat(
        "stream shape (n=", stream.learners(), ", R=", stream.rounds(),
        ", tau=", stream.tau(), ", d=", stream.dim(),
        ") does not supply the configured run"));
  }
  std::shared_ptr<const Factorization> factorization = options.factorization;
  if (factorization == nullptr) {
    CORRFED_ASSIGN_OR_RETURN(factorization, ResolveFactorization(cfg));
  } else if (factorization->steps() != cfg.steps()) {
    return absl::InvalidArgumentError(
        absl::StrCat("factorization covers ", factorization->steps(),
                     " steps, run needs ", cfg.steps()));
  }

  SimulationResult result;
  CORRFED_ASSIGN_OR_RETURN(result.noise, ResolveNoise(cfg, *factorization));

  std::vector<LearnerState> learners;
  learners.reserve(cfg.n);
  for (int i = 0; i < cfg.n; ++i) {
    learners.emplace_back(NoiseChannel(factorization, cfg.dim,
                                       result.noise.stddev, cfg.master_seed,
                                       i),
                          cfg.dim);
  }

  GlobalState gs;
  gs.x = cfg.x0.empty() ? std::vector<double>(cfg.dim, 0.0) : cfg.x0;
  const bool check_virtual = cfg.diag_virtual_iterate;
  const bool check_dual = cfg.diag_dual_form_check && AllZero(gs.x);
  result.diagnostics.virtual_iterate_checked = check_virtual;
  result.diagnostics.dual_form_checked = check_dual;
  const double eta_tilde = cfg.EffectiveServerStep();

  std::vector<std::vector<StreamSample>> round_data(cfg.n);
  result.released_models.reserve(cfg.R);
  for (int r = 0; r < cfg.R; ++r) {
    result.released_models.push_back(gs.x);
    if (check_virtual) gs.virtual_x = VirtualIterate(gs.x, learners, cfg);
    for (int i = 0; i < cfg.n; ++i) {
      round_data[i].clear();
      for (int t = 0; t < cfg.tau; ++t) {
        round_data[i].push_back(stream.Sample(r, i, t));
      }
    }
    CORRFED_RETURN_IF_ERROR(RunRound(gs, learners, round_data, cfg));

    if (check_virtual) {
      std::vector<std::vector<double>> grads;
      grads.reserve(learners.size());
      for (const LearnerState& l : learners) grads.push_back(l.round_gradient_sum);
      const std::vector<double> g = PairwiseMean(grads);
      std::vector<double> next = VirtualIterate(gs.x, learners, cfg);
      std::vector<double> residual(cfg.dim);
      for (int j = 0; j < cfg.dim; ++j) {
        residual[j] = next[j] - (*gs.virtual_x)[j] + eta_tilde * g[j] / cfg.tau;
      }
      const double worst = MaxAbs(residual);
      result.diagnostics.max_virtual_residual =
          std::max(result.diagnostics.max_virtual_residual, worst);
      if (!(worst <= kVirtualIterateTolerance)) {
        return absl::AbortedError(absl::StrCat(
            "diagnostics violation at round ", r,
            ": virtual iterate recursion residual ", worst));
      }
      gs.virtual_x = std::move(next);
    }
    if (check_dual) {
      std::vector<std::vector<double>> noisy_prefixes;
      noisy_prefixes.reserve(learners.size());
      for (const LearnerState& l : learners) {
        std::vector<double> s = l.gradient_prefix;
        auto p = l.channel.prev_row_product();
        for (int j = 0; j < cfg.dim; ++j) s[j] += p[j];
        noisy_prefixes.push_back(std::move(s));
      }
      const std::vector<double> mean = PairwiseMean(noisy_prefixes);
      std::vector<double> residual(cfg.dim);
      for (int j = 0; j < cfg.dim; ++j) {
        residual[j] = gs.x[j] + eta_tilde * mean[j] / cfg.tau;
      }
      const double worst = MaxAbs(residual);
      result.diagnostics.max_dual_form_residual =
          std::max(result.diagnostics.max_dual_form_residual, worst);
      if (!(worst <= kDualFormTolerance)) {
        return absl::AbortedError(absl::StrCat(
            "diagnostics violation at round ", r + 1,
            ": released model differs from its noisy-prefix form by ",
            worst));
      }
    }
  }
  result.final_model = gs.x;

  if (options.compute_regret) {
    std::optional<RegretEvaluator> local;
    RegretEvaluator* evaluator = options.evaluator;
    if (evaluator == nullptr) {
      local.emplace(stream);
      evaluator = &*local;
    }
    CORRFED_ASSIGN_OR_RETURN(
        result.trace,
        evaluator->Evaluate(result.released_models, options.with_static));
  }
  return result;
}

}  // namespace corrfed
