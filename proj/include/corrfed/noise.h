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

#ifndef CORRFED_NOISE_H_
#define CORRFED_NOISE_H_

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "absl/status/statusor.h"
#include "corrfed/factorization.h"

namespace corrfed {

// Seed of the generator for one noise row. A pure function of its inputs, so
// rows can be drawn in any order or on any thread.
uint64_t NoiseRowKey(uint64_t master_seed, int64_t learner_id, int64_t node);

// Per-learner stream of correlated noise for one factorization.
//
// The learner's noise table xi is width x dim with i.i.d. N(0, stddev^2)
// entries; each row is drawn once, on first use. At step k the channel hands
// out (b^k - b^{k-1}) xi where b^k is row k of B and b^{-1} = 0, so the sum
// of the first m increments is b^{m-1} xi. Not thread-safe; one channel per
// learner.
class NoiseChannel {
 public:
  NoiseChannel(std::shared_ptr<const Factorization> factorization, int dim,
               double stddev, uint64_t master_seed, int64_t learner_id);

  int dim() const { return dim_; }
  double stddev() const { return stddev_; }
  int64_t learner_id() const { return learner_id_; }
  int steps() const { return factorization_->steps(); }
  // Index k of the next increment; equals steps() once exhausted.
  int step_index() const { return step_index_; }
  bool exhausted() const { return step_index_ >= steps(); }
  const Factorization& factorization() const { return *factorization_; }

  // Returns (b^k - b^{k-1}) xi for k = step_index() and advances.
  // FailedPrecondition once every step has been consumed.
  absl::StatusOr<std::vector<double>> NextIncrement();

  // gradient_prefix + b^k xi for k = step_index(), without advancing. The
  // noise term is accumulated exactly as NextIncrement() will, so
  // consecutive differences match the increments up to rounding of the
  // additions with gradient_prefix.
  absl::StatusOr<std::vector<double>> NoisyPrefix(
      std::span<const double> gradient_prefix);

  // b^{k-1} xi for k = step_index(): the running sum of handed-out
  // increments (zero before the first step).
  std::span<const double> prev_row_product() const { return prev_product_; }

  // b^k xi evaluated directly from row k of B, independent of the
  // incremental path.
  std::vector<double> DirectRowProduct(int k);

  // Row `node` of xi, drawing it on first access.
  std::span<const double> NoiseRow(int node);

 private:
  void EnsurePending();

  std::shared_ptr<const Factorization> factorization_;
  int dim_;
  double stddev_;
  uint64_t master_seed_;
  int64_t learner_id_;
  int step_index_ = 0;

  std::vector<double> noise_;
  std::vector<bool> materialized_;
  std::vector<double> prev_product_;
  std::vector<double> pending_;
  bool pending_valid_ = false;
};

}  // namespace corrfed

#endif  // CORRFED_NOISE_H_
