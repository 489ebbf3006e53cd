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

#include "corrfed/noise.h"

#include <algorithm>
#include <random>
#include <utility>

#include "absl/strings/str_cat.h"

namespace corrfed {
namespace {

uint64_t SplitMix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

void Axpy(double alpha, std::span<const double> x, std::span<double> y) {
  for (size_t j = 0; j < y.size(); ++j) y[j] += alpha * x[j];
}

}  // namespace

uint64_t NoiseRowKey(uint64_t master_seed, int64_t learner_id, int64_t node) {
  uint64_t key = SplitMix64(master_seed);
  key = SplitMix64(key ^ static_cast<uint64_t>(learner_id));
  return SplitMix64(key ^ static_cast<uint64_t>(node));
}

NoiseChannel::NoiseChannel(std::shared_ptr<const Factorization> factorization,
                           int dim, double stddev, uint64_t master_seed,
                           int64_t learner_id)
    : factorization_(std::move(factorization)),
      dim_(dim),
      stddev_(stddev),
      master_seed_(master_seed),
      learner_id_(learner_id),
      prev_product_(dim, 0.0),
      pending_(dim, 0.0) {
  if (stddev_ > 0.0) {
    noise_.assign(static_cast<size_t>(factorization_->width()) * dim_, 0.0);
    materialized_.assign(factorization_->width(), false);
  }
}

std::span<const double> NoiseChannel::NoiseRow(int node) {
  std::span<double> row(noise_.data() + static_cast<size_t>(node) * dim_,
                        static_cast<size_t>(dim_));
  if (!materialized_[node]) {
    std::mt19937_64 engine(NoiseRowKey(master_seed_, learner_id_, node));
    std::normal_distribution<double> normal(0.0, stddev_);
    for (double& v : row) v = normal(engine);
    materialized_[node] = true;
  }
  return row;
}

void NoiseChannel::EnsurePending() {
  if (pending_valid_) return;
  std::fill(pending_.begin(), pending_.end(), 0.0);
  if (stddev_ > 0.0) {
    const int k = step_index_;
    const DenseMatrix& b = factorization_->b();
    auto current = factorization_->BRowSupport(k);
    std::span<const int32_t> previous;
    if (k > 0) previous = factorization_->BRowSupport(k - 1);
    // Merge the two sorted supports; coefficients that cancel are skipped.
    size_t p = 0, q = 0;
    while (p < current.size() || q < previous.size()) {
      int32_t node;
      double coeff;
      if (q == previous.size() ||
          (p < current.size() && current[p] < previous[q])) {
        node = current[p++];
        coeff = b(k, node);
      } else if (p == current.size() || previous[q] < current[p]) {
        node = previous[q++];
        coeff = -b(k - 1, node);
      } else {
        node = current[p++];
        ++q;
        coeff = b(k, node) - b(k - 1, node);
      }
      if (coeff != 0.0) Axpy(coeff, NoiseRow(node), pending_);
    }
  }
  pending_valid_ = true;
}

absl::StatusOr<std::vector<double>> NoiseChannel::NextIncrement() {
  if (exhausted()) {
    return absl::FailedPreconditionError(
        absl::StrCat("noise channel of learner ", learner_id_,
                     " is exhausted after ", steps(), " steps"));
  }
  EnsurePending();
  std::vector<double> increment = pending_;
  for (int j = 0; j < dim_; ++j) prev_product_[j] += increment[j];
  ++step_index_;
  pending_valid_ = false;
  return increment;
}

absl::StatusOr<std::vector<double>> NoiseChannel::NoisyPrefix(
    std::span<const double> gradient_prefix) {
  if (static_cast<int>(gradient_prefix.size()) != dim_) {
    return absl::InvalidArgumentError(
        absl::StrCat("gradient prefix has dimension ", gradient_prefix.size(),
                     ", channel has dimension ", dim_));
  }
  if (exhausted()) {
    return absl::FailedPreconditionError(
        absl::StrCat("noise channel of learner ", learner_id_,
                     " is exhausted after ", steps(), " steps"));
  }
  EnsurePending();
  std::vector<double> out(dim_);
  for (int j = 0; j < dim_; ++j) {
    out[j] = gradient_prefix[j] + (prev_product_[j] + pending_[j]);
  }
  return out;
}

std::vector<double> NoiseChannel::DirectRowProduct(int k) {
  std::vector<double> out(dim_, 0.0);
  if (stddev_ <= 0.0) return out;
  const DenseMatrix& b = factorization_->b();
  for (int32_t node : factorization_->BRowSupport(k)) {
    Axpy(b(k, node), NoiseRow(node), out);
  }
  return out;
}

}  // namespace corrfed
