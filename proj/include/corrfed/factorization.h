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

#ifndef CORRFED_FACTORIZATION_H_
#define CORRFED_FACTORIZATION_H_

#include <cstdint>
#include <span>
#include <string>
#include "absl/strings/string_view.h"
#include <vector>

#include "absl/status/statusor.h"

namespace corrfed {

// Dense row-major real matrix.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(int rows, int cols)
      : rows_(rows), cols_(cols),
        data_(static_cast<size_t>(rows) * static_cast<size_t>(cols), 0.0) {}

  int rows() const { return rows_; }
  int cols() const { return cols_; }

  double& operator()(int r, int c) { return data_[Offset(r, c)]; }
  double operator()(int r, int c) const { return data_[Offset(r, c)]; }

  std::span<const double> Row(int r) const {
    return {data_.data() + Offset(r, 0), static_cast<size_t>(cols_)};
  }
  std::span<double> Row(int r) {
    return {data_.data() + Offset(r, 0), static_cast<size_t>(cols_)};
  }

  friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

 private:
  size_t Offset(int r, int c) const {
    return static_cast<size_t>(r) * static_cast<size_t>(cols_) +
           static_cast<size_t>(c);
  }

  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> data_;
};

enum class MechanismKind { kBinaryTree, kToeplitz, kIdentity, kExternal };

// Names used on the command line and in factorization files:
// "binary-tree", "toeplitz", "identity", "external".
absl::string_view MechanismKindName(MechanismKind kind);
absl::StatusOr<MechanismKind> ParseMechanismKind(absl::string_view name);

// Location and size of the largest entry of |B*C - A|.
struct Residual {
  double max_abs = 0.0;
  int row = 0;
  int col = 0;
};

// A factorization A = B * C of the steps x steps all-ones lower-triangular
// matrix A. B is steps x width, C is width x steps. Row k of B shapes the
// noise of the k-th prefix sum; column k of C is the footprint of the k-th
// input on the noise nodes. Immutable once built.
class Factorization {
 public:
  // Wraps B and C without checking B*C = A; use Validate() for that. Fails
  // only on inconsistent shapes.
  static absl::StatusOr<Factorization> Create(MechanismKind kind,
                                              DenseMatrix b, DenseMatrix c);

  MechanismKind kind() const { return kind_; }
  int steps() const { return b_.rows(); }
  int width() const { return b_.cols(); }
  const DenseMatrix& b() const { return b_; }
  const DenseMatrix& c() const { return c_; }

  // Columns of row `k` of B holding nonzero entries, ascending.
  std::span<const int32_t> BRowSupport(int k) const;
  // Half-open column range [first, last) outside which row `k` of C is zero.
  std::pair<int, int> CRowSpan(int k) const { return c_spans_[k]; }

  // Largest entrywise deviation of B*C from A. Skips structural zeros, so
  // the cost is proportional to the nonzeros touched rather than steps^3.
  Residual ComputeResidual() const;

  // OK when ComputeResidual().max_abs <= tolerance, otherwise an OutOfRange
  // error naming the worst entry.
  absl::Status Validate(double tolerance) const;

 private:
  Factorization(MechanismKind kind, DenseMatrix b, DenseMatrix c);

  MechanismKind kind_;
  DenseMatrix b_;
  DenseMatrix c_;
  // Flattened nonzero column lists of the rows of B.
  std::vector<int32_t> b_support_;
  std::vector<size_t> b_support_offsets_;
  std::vector<std::pair<int, int>> c_spans_;
};

inline constexpr double kInternalTolerance = 1e-9;
inline constexpr double kLoadTolerance = 1e-6;

// Binary tree mechanism. Inputs are padded to the next power of two; only
// tree nodes whose span lies inside the first `steps` inputs are kept, in
// post-order (left subtree, right subtree, node). For steps = 2^k the width
// is 2 * steps - 1.
absl::StatusOr<Factorization> BuildBinaryTree(int steps);

// Square-root Toeplitz factorization B = C with first column h(0..steps-1),
// h(0) = 1 and h(j) = (1 - 1/(2j)) h(j-1).
absl::StatusOr<Factorization> BuildToeplitz(int steps);

// Independent noise: C = I, B = A.
absl::StatusOr<Factorization> BuildIdentity(int steps);

absl::StatusOr<Factorization> BuildFactorization(MechanismKind kind,
                                                 int steps);

// First `steps` coefficients of the Toeplitz recursion.
std::vector<double> ToeplitzCoefficients(int steps);

struct FactorizationStats {
  double max_col_sq_norm = 0.0;  // max_k ||column k of C||^2
  double max_row_sq_norm = 0.0;  // max_k ||row k of B||^2
  // ||row (r * tau + tau - 1) of B||^2 for every round r.
  std::vector<double> prefix_row_sq_norms;
};

// `tau` is the number of local steps per round; it must divide steps().
absl::StatusOr<FactorizationStats> ComputeStats(const Factorization& f,
                                                int tau = 1);

// Exact squared norm of the first column of the Toeplitz factor against two
// logarithmic bounds: the safe bound 1 + (1 + ln(steps - 1)) / pi, which
// follows from h(j)^2 <= 1 / (pi j), and the candidate expression
// 1 + ln(4 steps / 5) / pi, which sits about 0.1 below the exact value.
struct ToeplitzNormReport {
  int steps = 0;
  double exact_sq_norm = 0.0;
  double safe_bound = 0.0;
  double candidate_bound = 0.0;
  bool safe_bound_holds = false;
  bool candidate_bound_holds = false;
};

ToeplitzNormReport CompareToeplitzNormBounds(int steps);

// Factorization file: header lines "kind=<name>", "steps=<k>", "width=<W>",
// then W comma-separated rows of C, a line "---", then `steps` rows of B.
std::string SerializeFactorization(const Factorization& f);
absl::Status WriteFactorization(const Factorization& f,
                                const std::string& path);

// Parses the text form. The result has kind kExternal and is validated
// against A with kLoadTolerance. Parse errors, shape mismatches and
// residual failures are reported with distinct status codes
// (InvalidArgument, FailedPrecondition, OutOfRange).
absl::StatusOr<Factorization> ParseFactorization(absl::string_view text);
absl::StatusOr<Factorization> LoadFactorization(const std::string& path);

}  // namespace corrfed

#endif  // CORRFED_FACTORIZATION_H_
