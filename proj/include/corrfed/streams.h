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

#ifndef CORRFED_STREAMS_H_
#define CORRFED_STREAMS_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "absl/strings/string_view.h"

namespace corrfed {

enum class LossKind { kLogistic, kQuadratic };

// One client's datum. For kLogistic `vector` is the feature a and `label`
// is -1 or +1; for kQuadratic `vector` is the center theta and `label` is 0.
// Views into a DataStream or caller-owned storage.
struct StreamSample {
  LossKind kind = LossKind::kQuadratic;
  std::span<const double> vector;
  int label = 0;
  int learner = 0;
  int round = 0;
  int step = 0;
};

struct LossAndGradient {
  double loss = 0.0;
  std::vector<double> grad;
};

// log(1 + exp(-(x.a) b)) and its gradient -b a sigmoid(-(x.a) b), evaluated
// through a softplus form that stays finite for large margins.
absl::StatusOr<LossAndGradient> LogisticLossGrad(std::span<const double> x,
                                                 const StreamSample& s);
// 0.5 ||x - theta||^2 and x - theta.
absl::StatusOr<LossAndGradient> QuadraticLossGrad(std::span<const double> x,
                                                  const StreamSample& s);
absl::StatusOr<LossAndGradient> LossGrad(std::span<const double> x,
                                         const StreamSample& s);

// Loss only; dimensions are the caller's responsibility.
double SampleLoss(std::span<const double> x, const StreamSample& s);

// Projects g onto the L2 ball of radius clip_bound.
std::vector<double> ClipGradient(std::span<const double> g, double clip_bound);
void ClipGradientInPlace(std::span<double> g, double clip_bound);

// Immutable-after-generation table of n * rounds * tau samples stored in
// (round, learner, step) order.
class DataStream {
 public:
  DataStream(LossKind kind, int learners, int rounds, int tau, int dim);

  LossKind kind() const { return kind_; }
  int learners() const { return learners_; }
  int rounds() const { return rounds_; }
  int tau() const { return tau_; }
  int dim() const { return dim_; }
  size_t size() const { return labels_.size(); }

  size_t Index(int round, int learner, int step) const {
    return (static_cast<size_t>(round) * learners_ + learner) * tau_ + step;
  }
  StreamSample Sample(int round, int learner, int step) const;
  // All learners * tau samples of one round.
  std::vector<StreamSample> RoundSamples(int round) const;

  std::span<double> MutableVector(size_t index) {
    return {values_.data() + index * dim_, static_cast<size_t>(dim_)};
  }
  void SetLabel(size_t index, int label) { labels_[index] = label; }

  friend bool operator==(const DataStream&, const DataStream&) = default;

 private:
  LossKind kind_;
  int learners_;
  int rounds_;
  int tau_;
  int dim_;
  std::vector<double> values_;
  std::vector<int8_t> labels_;
};

// Synthetic binary logistic data with tunable heterogeneity. Learner i uses
// model w_i = u_i 1 + w0 and feature mean v_i = B_i 1 + v0 with
// u_i ~ N(0, alpha), B_i ~ N(0, beta) and w0, v0 ~ N(0, I) shared by all
// learners, so alpha = beta = 0 gives identically distributed learners.
// Features a ~ N(v_i, diag(k^-1.2)) are scaled into the unit ball and labels
// are drawn with P(+1) = sigmoid(w_i . a).
struct LogisticStreamParams {
  int learners = 1;
  int rounds = 1;
  int tau = 1;
  int dim = 1;
  double alpha = 0.0;
  double beta = 0.0;
  uint64_t seed = 0;
  // Forces w_i = 0 (balanced labels); used for testing the label sampler.
  bool zero_model = false;
};
absl::StatusOr<DataStream> GenHeterogeneousLogistic(
    const LogisticStreamParams& params);

// Quadratic losses with centers base_i + drift_magnitude * u(r / period)
// where base_i ~ N(0, base_scale^2 I), u(0) = 0 and u(j), j >= 1, are seeded
// random unit vectors. drift_magnitude = 0 gives a stationary objective.
struct QuadraticStreamParams {
  int learners = 1;
  int rounds = 1;
  int tau = 1;
  int dim = 1;
  double drift_magnitude = 0.0;
  int drift_period = 1;
  double base_scale = 1.0;
  uint64_t seed = 0;
};
absl::StatusOr<DataStream> GenDriftingQuadratic(
    const QuadraticStreamParams& params);

// Drift direction u(epoch) used by GenDriftingQuadratic.
std::vector<double> DriftDirection(uint64_t seed, int epoch, int dim);

// Generator selection carried by simulation configs. When `sample_table` is
// set the stream is loaded from that CSV instead of generated.
struct DataSpec {
  LossKind kind = LossKind::kQuadratic;
  double alpha = 0.0;
  double beta = 0.0;
  double drift_magnitude = 0.0;
  int drift_period = 1;
  double base_scale = 1.0;
  uint64_t seed = 0;
  std::string sample_table;
};

absl::StatusOr<DataStream> MakeStream(const DataSpec& spec, int learners,
                                      int rounds, int tau, int dim);

// CSV with header "learner,round,step,label,f0,...,f{d-1}", one row per
// sample in stream order. Loading infers the loss kind from the labels
// (all 0: quadratic, otherwise +-1: logistic).
std::string SerializeSampleTable(const DataStream& stream);
absl::Status DumpSampleTable(const DataStream& stream, const std::string& path);
absl::StatusOr<DataStream> ParseSampleTable(absl::string_view text);
absl::StatusOr<DataStream> LoadSampleTable(const std::string& path);

}  // namespace corrfed

#endif  // CORRFED_STREAMS_H_
