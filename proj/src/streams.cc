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

#include "corrfed/streams.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "absl/strings/str_cat.h"
#include "absl/strings/str_split.h"
#include "absl/strings/strip.h"
#include "corrfed/status_macros.h"

namespace corrfed {
namespace {

double Dot(std::span<const double> a, std::span<const double> b) {
  double sum = 0.0;
  for (size_t j = 0; j < a.size(); ++j) sum += a[j] * b[j];
  return sum;
}

// log(1 + exp(z)) without overflow.
double Softplus(double z) {
  return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

double Sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

absl::Status CheckDims(std::span<const double> x, const StreamSample& s) {
  if (x.size() != s.vector.size()) {
    return absl::InvalidArgumentError(
        absl::StrCat("model has dimension ", x.size(), ", sample has ",
                     s.vector.size()));
  }
  return absl::OkStatus();
}

absl::Status CheckShape(int learners, int rounds, int tau, int dim) {
  if (learners < 1 || rounds < 1 || tau < 1 || dim < 1) {
    return absl::InvalidArgumentError(absl::StrCat(
        "stream shape must be positive: learners=", learners,
        " rounds=", rounds, " tau=", tau, " dim=", dim));
  }
  return absl::OkStatus();
}

}  // namespace

absl::StatusOr<LossAndGradient> LogisticLossGrad(std::span<const double> x,
                                                 const StreamSample& s) {
  CORRFED_RETURN_IF_ERROR(CheckDims(x, s));
  const double margin = Dot(x, s.vector) * s.label;
  LossAndGradient out;
  out.loss = Softplus(-margin);
  const double scale = -s.label * Sigmoid(-margin);
  out.grad.resize(x.size());
  for (size_t j = 0; j < x.size(); ++j) out.grad[j] = scale * s.vector[j];
  return out;
}

absl::StatusOr<LossAndGradient> QuadraticLossGrad(std::span<const double> x,
                                                  const StreamSample& s) {
  CORRFED_RETURN_IF_ERROR(CheckDims(x, s));
  LossAndGradient out;
  out.grad.resize(x.size());
  double sq = 0.0;
  for (size_t j = 0; j < x.size(); ++j) {
    out.grad[j] = x[j] - s.vector[j];
    sq += out.grad[j] * out.grad[j];
  }
  out.loss = 0.5 * sq;
  return out;
}

absl::StatusOr<LossAndGradient> LossGrad(std::span<const double> x,
                                         const StreamSample& s) {
  return s.kind == LossKind::kLogistic ? LogisticLossGrad(x, s)
                                       : QuadraticLossGrad(x, s);
}

double SampleLoss(std::span<const double> x, const StreamSample& s) {
  if (s.kind == LossKind::kLogistic) {
    return Softplus(-Dot(x, s.vector) * s.label);
  }
  double sq = 0.0;
  for (size_t j = 0; j < x.size(); ++j) {
    const double diff = x[j] - s.vector[j];
    sq += diff * diff;
  }
  return 0.5 * sq;
}

void ClipGradientInPlace(std::span<double> g, double clip_bound) {
  const double norm = std::sqrt(Dot(g, g));
  if (norm <= clip_bound) return;
  const double scale = clip_bound / norm;
  for (double& v : g) v *= scale;
}

std::vector<double> ClipGradient(std::span<const double> g, double clip_bound) {
  std::vector<double> out(g.begin(), g.end());
  ClipGradientInPlace(out, clip_bound);
  return out;
}

DataStream::DataStream(LossKind kind, int learners, int rounds, int tau,
                       int dim)
    : kind_(kind),
      learners_(learners),
      rounds_(rounds),
      tau_(tau),
      dim_(dim),
      values_(static_cast<size_t>(learners) * rounds * tau * dim, 0.0),
      labels_(static_cast<size_t>(learners) * rounds * tau, 0) {}

StreamSample DataStream::Sample(int round, int learner, int step) const {
  const size_t index = Index(round, learner, step);
  return StreamSample{
      .kind = kind_,
      .vector = {values_.data() + index * dim_, static_cast<size_t>(dim_)},
      .label = labels_[index],
      .learner = learner,
      .round = round,
      .step = step};
}

std::vector<StreamSample> DataStream::RoundSamples(int round) const {
  std::vector<StreamSample> out;
  out.reserve(static_cast<size_t>(learners_) * tau_);
  for (int i = 0; i < learners_; ++i) {
    for (int t = 0; t < tau_; ++t) out.push_back(Sample(round, i, t));
  }
  return out;
}

absl::StatusOr<DataStream> GenHeterogeneousLogistic(
    const LogisticStreamParams& p) {
  CORRFED_RETURN_IF_ERROR(CheckShape(p.learners, p.rounds, p.tau, p.dim));
  if (p.alpha < 0.0 || p.beta < 0.0) {
    return absl::InvalidArgumentError("alpha and beta must be nonnegative");
  }
  std::mt19937_64 engine(p.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  const int d = p.dim;

  std::vector<double> shared_model(d), shared_mean(d);
  for (double& v : shared_model) v = normal(engine);
  for (double& v : shared_mean) v = normal(engine);

  std::vector<std::vector<double>> models(p.learners), means(p.learners);
  for (int i = 0; i < p.learners; ++i) {
    const double model_shift = std::sqrt(p.alpha) * normal(engine);
    const double mean_shift = std::sqrt(p.beta) * normal(engine);
    models[i].resize(d);
    means[i].resize(d);
    for (int k = 0; k < d; ++k) {
      models[i][k] = p.zero_model ? 0.0 : model_shift + shared_model[k];
      means[i][k] = mean_shift + shared_mean[k];
    }
  }
  std::vector<double> feature_scale(d);
  for (int k = 0; k < d; ++k) feature_scale[k] = std::pow(k + 1.0, -0.6);

  DataStream stream(LossKind::kLogistic, p.learners, p.rounds, p.tau, d);
  for (int r = 0; r < p.rounds; ++r) {
    for (int i = 0; i < p.learners; ++i) {
      for (int t = 0; t < p.tau; ++t) {
        const size_t index = stream.Index(r, i, t);
        std::span<double> a = stream.MutableVector(index);
        for (int k = 0; k < d; ++k) {
          a[k] = means[i][k] + feature_scale[k] * normal(engine);
        }
        const double norm = std::sqrt(Dot(a, a));
        if (norm > 1.0) {
          for (double& v : a) v /= norm;
        }
        const double p_plus = Sigmoid(Dot(models[i], a));
        stream.SetLabel(index, uniform(engine) < p_plus ? 1 : -1);
      }
    }
  }
  return stream;
}

std::vector<double> DriftDirection(uint64_t seed, int epoch, int dim) {
  std::vector<double> u(dim, 0.0);
  if (epoch == 0) return u;
  std::seed_seq seq{static_cast<uint32_t>(seed), static_cast<uint32_t>(seed >> 32),
                    static_cast<uint32_t>(epoch), 0x64726966u};
  std::mt19937_64 engine(seq);
  std::normal_distribution<double> normal(0.0, 1.0);
  double norm = 0.0;
  while (norm == 0.0) {
    for (double& v : u) v = normal(engine);
    norm = std::sqrt(Dot(u, u));
  }
  for (double& v : u) v /= norm;
  return u;
}

absl::StatusOr<DataStream> GenDriftingQuadratic(
    const QuadraticStreamParams& p) {
  CORRFED_RETURN_IF_ERROR(CheckShape(p.learners, p.rounds, p.tau, p.dim));
  if (p.drift_period < 1) {
    return absl::InvalidArgumentError(
        absl::StrCat("drift_period must be >= 1, got ", p.drift_period));
  }
  std::mt19937_64 engine(p.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<std::vector<double>> bases(p.learners,
                                         std::vector<double>(p.dim));
  for (auto& base : bases) {
    for (double& v : base) v = p.base_scale * normal(engine);
  }

  DataStream stream(LossKind::kQuadratic, p.learners, p.rounds, p.tau, p.dim);
  int cached_epoch = -1;
  std::vector<double> drift(p.dim, 0.0);
  for (int r = 0; r < p.rounds; ++r) {
    const int epoch = r / p.drift_period;
    if (epoch != cached_epoch) {
      drift = DriftDirection(p.seed, epoch, p.dim);
      cached_epoch = epoch;
    }
    for (int i = 0; i < p.learners; ++i) {
      for (int t = 0; t < p.tau; ++t) {
        std::span<double> center = stream.MutableVector(stream.Index(r, i, t));
        for (int k = 0; k < p.dim; ++k) {
          center[k] = bases[i][k] + p.drift_magnitude * drift[k];
        }
      }
    }
  }
  return stream;
}

absl::StatusOr<DataStream> MakeStream(const DataSpec& spec, int learners,
                                      int rounds, int tau, int dim) {
  if (!spec.sample_table.empty()) {
    CORRFED_ASSIGN_OR_RETURN(DataStream stream,
                             LoadSampleTable(spec.sample_table));
    if (stream.learners() != learners || stream.rounds() != rounds ||
        stream.tau() != tau || stream.dim() != dim) {
      return absl::InvalidArgumentError(absl::StrCat(
          "sample table ", spec.sample_table, " has shape n=",
          stream.learners(), " R=", stream.rounds(), " tau=", stream.tau(),
          " d=", stream.dim(), ", config asks for n=", learners, " R=", rounds,
          " tau=", tau, " d=", dim));
    }
    return stream;
  }
  if (spec.kind == LossKind::kLogistic) {
    return GenHeterogeneousLogistic({.learners = learners,
                                     .rounds = rounds,
                                     .tau = tau,
                                     .dim = dim,
                                     .alpha = spec.alpha,
                                     .beta = spec.beta,
                                     .seed = spec.seed});
  }
  return GenDriftingQuadratic({.learners = learners,
                               .rounds = rounds,
                               .tau = tau,
                               .dim = dim,
                               .drift_magnitude = spec.drift_magnitude,
                               .drift_period = spec.drift_period,
                               .base_scale = spec.base_scale,
                               .seed = spec.seed});
}

std::string SerializeSampleTable(const DataStream& stream) {
  std::string out = "learner,round,step,label";
  for (int k = 0; k < stream.dim(); ++k) absl::StrAppend(&out, ",f", k);
  out.push_back('\n');
  char buf[64];
  for (int r = 0; r < stream.rounds(); ++r) {
    for (int i = 0; i < stream.learners(); ++i) {
      for (int t = 0; t < stream.tau(); ++t) {
        const StreamSample s = stream.Sample(r, i, t);
        absl::StrAppend(&out, i, ",", r, ",", t, ",", s.label);
        for (double v : s.vector) {
          auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
          out.push_back(',');
          out.append(buf, end);
        }
        out.push_back('\n');
      }
    }
  }
  return out;
}

absl::Status DumpSampleTable(const DataStream& stream,
                             const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) return absl::UnavailableError(absl::StrCat("cannot open ", path));
  out << SerializeSampleTable(stream);
  if (!out) return absl::DataLossError(absl::StrCat("write failed: ", path));
  return absl::OkStatus();
}

absl::StatusOr<DataStream> ParseSampleTable(absl::string_view text) {
  std::vector<absl::string_view> lines =
      absl::StrSplit(text, '\n', absl::SkipWhitespace());
  if (lines.size() < 2) {
    return absl::InvalidArgumentError("sample table has no rows");
  }
  const std::vector<absl::string_view> header = absl::StrSplit(lines[0], ',');
  const int dim = static_cast<int>(header.size()) - 4;
  if (dim < 1 || header[0] != "learner" || header[1] != "round" ||
      header[2] != "step" || header[3] != "label") {
    return absl::InvalidArgumentError(
        "sample table header must be learner,round,step,label,f0,...");
  }
  struct Row {
    int learner, round, step, label;
    std::vector<double> values;
  };
  std::vector<Row> rows;
  rows.reserve(lines.size() - 1);
  int learners = 0, rounds = 0, tau = 0;
  for (size_t l = 1; l < lines.size(); ++l) {
    std::vector<absl::string_view> fields = absl::StrSplit(lines[l], ',');
    if (static_cast<int>(fields.size()) != dim + 4) {
      return absl::InvalidArgumentError(
          absl::StrCat("line ", l + 1, ": expected ", dim + 4, " fields"));
    }
    Row row;
    int* ints[] = {&row.learner, &row.round, &row.step, &row.label};
    for (int f = 0; f < 4; ++f) {
      auto field = absl::StripAsciiWhitespace(fields[f]);
      auto [ptr, ec] =
          std::from_chars(field.data(), field.data() + field.size(), *ints[f]);
      if (ec != std::errc() || ptr != field.data() + field.size()) {
        return absl::InvalidArgumentError(
            absl::StrCat("line ", l + 1, ": bad integer '", field, "'"));
      }
    }
    row.values.resize(dim);
    for (int k = 0; k < dim; ++k) {
      auto field = absl::StripAsciiWhitespace(fields[4 + k]);
      auto [ptr, ec] = std::from_chars(
          field.data(), field.data() + field.size(), row.values[k]);
      if (ec != std::errc() || ptr != field.data() + field.size()) {
        return absl::InvalidArgumentError(
            absl::StrCat("line ", l + 1, ": bad number '", field, "'"));
      }
    }
    learners = std::max(learners, row.learner + 1);
    rounds = std::max(rounds, row.round + 1);
    tau = std::max(tau, row.step + 1);
    rows.push_back(std::move(row));
  }
  const bool quadratic = std::all_of(rows.begin(), rows.end(),
                                     [](const Row& r) { return r.label == 0; });
  DataStream stream(quadratic ? LossKind::kQuadratic : LossKind::kLogistic,
                    learners, rounds, tau, dim);
  if (rows.size() != stream.size()) {
    return absl::InvalidArgumentError(absl::StrCat(
        "sample table has ", rows.size(), " rows, expected ", stream.size()));
  }
  for (size_t n = 0; n < rows.size(); ++n) {
    const Row& row = rows[n];
    if (row.learner < 0 || row.round < 0 || row.step < 0 ||
        stream.Index(row.round, row.learner, row.step) != n) {
      return absl::InvalidArgumentError(absl::StrCat(
          "line ", n + 2, ": sample out of (round, learner, step) order"));
    }
    if (!quadratic && row.label != 1 && row.label != -1) {
      return absl::InvalidArgumentError(
          absl::StrCat("line ", n + 2, ": label must be -1 or +1"));
    }
    std::copy(row.values.begin(), row.values.end(),
              stream.MutableVector(n).begin());
    stream.SetLabel(n, row.label);
  }
  return stream;
}

absl::StatusOr<DataStream> LoadSampleTable(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return absl::NotFoundError(absl::StrCat("cannot open ", path));
  std::stringstream buffer;
  buffer << in.rdbuf();
  return ParseSampleTable(buffer.str());
}

}  // namespace corrfed
