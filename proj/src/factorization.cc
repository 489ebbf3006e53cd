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

#include "corrfed/factorization.h"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <utility>

#include "absl/strings/match.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_split.h"
#include "absl/strings/strip.h"
#include "corrfed/status_macros.h"

namespace corrfed {
namespace {

absl::Status CheckSteps(int steps) {
  if (steps < 1) {
    return absl::InvalidArgumentError(
        absl::StrCat("steps must be >= 1, got ", steps));
  }
  return absl::OkStatus();
}

DenseMatrix AllOnesLowerTriangular(int steps) {
  DenseMatrix a(steps, steps);
  for (int i = 0; i < steps; ++i) {
    for (int j = 0; j <= i; ++j) a(i, j) = 1.0;
  }
  return a;
}

void AppendNumber(std::string& out, double value) {
  char buf[64];
  std::to_chars_result result =
      std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::fixed);
  if (result.ec != std::errc()) {
    // Too large for fixed notation; never produced by the builders.
    result = std::to_chars(buf, buf + sizeof(buf), value);
  }
  out.append(buf, result.ptr);
}

}  // namespace

absl::string_view MechanismKindName(MechanismKind kind) {
  switch (kind) {
    case MechanismKind::kBinaryTree:
      return "binary-tree";
    case MechanismKind::kToeplitz:
      return "toeplitz";
    case MechanismKind::kIdentity:
      return "identity";
    case MechanismKind::kExternal:
      return "external";
  }
  return "unknown";
}

absl::StatusOr<MechanismKind> ParseMechanismKind(absl::string_view name) {
  for (MechanismKind kind :
       {MechanismKind::kBinaryTree, MechanismKind::kToeplitz,
        MechanismKind::kIdentity, MechanismKind::kExternal}) {
    if (name == MechanismKindName(kind)) return kind;
  }
  return absl::InvalidArgumentError(
      absl::StrCat("unknown mechanism '", name,
                   "' (expected binary-tree, toeplitz, identity or external)"));
}

Factorization::Factorization(MechanismKind kind, DenseMatrix b, DenseMatrix c)
    : kind_(kind), b_(std::move(b)), c_(std::move(c)) {
  b_support_offsets_.reserve(static_cast<size_t>(b_.rows()) + 1);
  b_support_offsets_.push_back(0);
  for (int k = 0; k < b_.rows(); ++k) {
    auto row = b_.Row(k);
    for (int j = 0; j < b_.cols(); ++j) {
      if (row[j] != 0.0) b_support_.push_back(j);
    }
    b_support_offsets_.push_back(b_support_.size());
  }
  c_spans_.reserve(c_.rows());
  for (int k = 0; k < c_.rows(); ++k) {
    auto row = c_.Row(k);
    int first = 0;
    while (first < c_.cols() && row[first] == 0.0) ++first;
    int last = c_.cols();
    while (last > first && row[last - 1] == 0.0) --last;
    c_spans_.emplace_back(first, last);
  }
}

absl::StatusOr<Factorization> Factorization::Create(MechanismKind kind,
                                                    DenseMatrix b,
                                                    DenseMatrix c) {
  if (b.rows() < 1 || b.cols() < 1) {
    return absl::FailedPreconditionError("shape mismatch: B is empty");
  }
  if (c.rows() != b.cols() || c.cols() != b.rows()) {
    return absl::FailedPreconditionError(absl::StrCat(
        "shape mismatch: B is ", b.rows(), "x", b.cols(), " but C is ",
        c.rows(), "x", c.cols(), "; expected C to be ", b.cols(), "x",
        b.rows()));
  }
  return Factorization(kind, std::move(b), std::move(c));
}

std::span<const int32_t> Factorization::BRowSupport(int k) const {
  const size_t begin = b_support_offsets_[k];
  const size_t end = b_support_offsets_[k + 1];
  return {b_support_.data() + begin, end - begin};
}

Residual Factorization::ComputeResidual() const {
  const int steps = this->steps();
  Residual worst;
  std::vector<double> acc(steps);
  for (int i = 0; i < steps; ++i) {
    std::fill(acc.begin(), acc.end(), 0.0);
    auto b_row = b_.Row(i);
    for (int32_t k : BRowSupport(i)) {
      const double coeff = b_row[k];
      const auto [first, last] = c_spans_[k];
      auto c_row = c_.Row(k);
      for (int j = first; j < last; ++j) acc[j] += coeff * c_row[j];
    }
    for (int j = 0; j < steps; ++j) {
      const double expected = j <= i ? 1.0 : 0.0;
      const double dev = std::abs(acc[j] - expected);
      if (dev > worst.max_abs || std::isnan(dev)) {
        worst = {std::isnan(dev) ? INFINITY : dev, i, j};
      }
    }
  }
  return worst;
}

absl::Status Factorization::Validate(double tolerance) const {
  const Residual r = ComputeResidual();
  if (r.max_abs > tolerance) {
    return absl::OutOfRangeError(absl::StrCat(
        "residual |B*C - A| = ", r.max_abs, " at entry (", r.row, ",", r.col,
        ") exceeds tolerance ", tolerance));
  }
  return absl::OkStatus();
}

absl::StatusOr<Factorization> BuildBinaryTree(int steps) {
  CORRFED_RETURN_IF_ERROR(CheckSteps(steps));
  const int padded = static_cast<int>(std::bit_ceil(static_cast<unsigned>(steps)));
  const int levels = std::countr_zero(static_cast<unsigned>(padded)) + 1;

  // node_index[h][lo >> h] is the column of the node covering
  // [lo, lo + 2^h), or -1 when that node is dropped.
  std::vector<std::vector<int>> node_index(levels);
  for (int h = 0; h < levels; ++h) node_index[h].assign(padded >> h, -1);
  struct Node {
    int lo;
    int level;
  };
  std::vector<Node> nodes;

  // Iterative post-order walk of the complete tree over [0, padded).
  struct Frame {
    int lo;
    int level;
    bool expanded;
  };
  std::vector<Frame> stack = {{0, levels - 1, false}};
  while (!stack.empty()) {
    Frame f = stack.back();
    stack.pop_back();
    if (f.level > 0 && !f.expanded) {
      const int half = 1 << (f.level - 1);
      stack.push_back({f.lo, f.level, true});
      stack.push_back({f.lo + half, f.level - 1, false});
      stack.push_back({f.lo, f.level - 1, false});
      continue;
    }
    if (f.lo + (1 << f.level) <= steps) {
      node_index[f.level][f.lo >> f.level] = static_cast<int>(nodes.size());
      nodes.push_back({f.lo, f.level});
    }
  }

  const int width = static_cast<int>(nodes.size());
  DenseMatrix c(width, steps);
  for (int w = 0; w < width; ++w) {
    const int size = 1 << nodes[w].level;
    for (int j = nodes[w].lo; j < nodes[w].lo + size; ++j) c(w, j) = 1.0;
  }
  // Prefix [0, m) splits into the aligned dyadic blocks given by the set
  // bits of m, largest first.
  DenseMatrix b(steps, width);
  for (int k = 0; k < steps; ++k) {
    const int m = k + 1;
    int lo = 0;
    for (int h = levels - 1; h >= 0; --h) {
      if ((m >> h) & 1) {
        b(k, node_index[h][lo >> h]) = 1.0;
        lo += 1 << h;
      }
    }
  }
  return Factorization::Create(MechanismKind::kBinaryTree, std::move(b),
                               std::move(c));
}

std::vector<double> ToeplitzCoefficients(int steps) {
  std::vector<double> h(std::max(steps, 0));
  if (steps > 0) h[0] = 1.0;
  for (int j = 1; j < steps; ++j) {
    h[j] = (1.0 - 1.0 / (2.0 * j)) * h[j - 1];
  }
  return h;
}

absl::StatusOr<Factorization> BuildToeplitz(int steps) {
  CORRFED_RETURN_IF_ERROR(CheckSteps(steps));
  const std::vector<double> h = ToeplitzCoefficients(steps);
  DenseMatrix lower(steps, steps);
  for (int i = 0; i < steps; ++i) {
    for (int j = 0; j <= i; ++j) lower(i, j) = h[i - j];
  }
  DenseMatrix copy = lower;
  return Factorization::Create(MechanismKind::kToeplitz, std::move(lower),
                               std::move(copy));
}

absl::StatusOr<Factorization> BuildIdentity(int steps) {
  CORRFED_RETURN_IF_ERROR(CheckSteps(steps));
  DenseMatrix c(steps, steps);
  for (int i = 0; i < steps; ++i) c(i, i) = 1.0;
  return Factorization::Create(MechanismKind::kIdentity,
                               AllOnesLowerTriangular(steps), std::move(c));
}

absl::StatusOr<Factorization> BuildFactorization(MechanismKind kind,
                                                 int steps) {
  switch (kind) {
    case MechanismKind::kBinaryTree:
      return BuildBinaryTree(steps);
    case MechanismKind::kToeplitz:
      return BuildToeplitz(steps);
    case MechanismKind::kIdentity:
      return BuildIdentity(steps);
    case MechanismKind::kExternal:
      break;
  }
  return absl::InvalidArgumentError(
      "external factorizations are loaded from a file, not built");
}

absl::StatusOr<FactorizationStats> ComputeStats(const Factorization& f,
                                                int tau) {
  if (tau < 1 || f.steps() % tau != 0) {
    return absl::InvalidArgumentError(absl::StrCat(
        "tau = ", tau, " must be positive and divide steps = ", f.steps()));
  }
  FactorizationStats stats;
  std::vector<double> col_sq(f.steps(), 0.0);
  for (int w = 0; w < f.width(); ++w) {
    const auto [first, last] = f.CRowSpan(w);
    auto row = f.c().Row(w);
    for (int j = first; j < last; ++j) col_sq[j] += row[j] * row[j];
  }
  stats.max_col_sq_norm = *std::max_element(col_sq.begin(), col_sq.end());

  std::vector<double> row_sq(f.steps(), 0.0);
  for (int k = 0; k < f.steps(); ++k) {
    auto row = f.b().Row(k);
    double sum = 0.0;
    for (int32_t j : f.BRowSupport(k)) sum += row[j] * row[j];
    row_sq[k] = sum;
  }
  stats.max_row_sq_norm = *std::max_element(row_sq.begin(), row_sq.end());
  for (int k = tau - 1; k < f.steps(); k += tau) {
    stats.prefix_row_sq_norms.push_back(row_sq[k]);
  }
  return stats;
}

ToeplitzNormReport CompareToeplitzNormBounds(int steps) {
  ToeplitzNormReport report;
  report.steps = steps;
  for (double h : ToeplitzCoefficients(steps)) report.exact_sq_norm += h * h;
  report.safe_bound =
      steps >= 2 ? 1.0 + (1.0 + std::log(steps - 1.0)) / std::numbers::pi
                 : 1.0;
  report.candidate_bound =
      1.0 + std::log(4.0 * steps / 5.0) / std::numbers::pi;
  report.safe_bound_holds = report.exact_sq_norm <= report.safe_bound;
  report.candidate_bound_holds =
      report.exact_sq_norm <= report.candidate_bound;
  return report;
}

std::string SerializeFactorization(const Factorization& f) {
  std::string out;
  absl::StrAppend(&out, "kind=", MechanismKindName(f.kind()), "\n",
                  "steps=", f.steps(), "\n", "width=", f.width(), "\n");
  auto append_rows = [&out](const DenseMatrix& m) {
    for (int r = 0; r < m.rows(); ++r) {
      auto row = m.Row(r);
      for (int j = 0; j < m.cols(); ++j) {
        if (j > 0) out.push_back(',');
        AppendNumber(out, row[j]);
      }
      out.push_back('\n');
    }
  };
  append_rows(f.c());
  out.append("---\n");
  append_rows(f.b());
  return out;
}

absl::Status WriteFactorization(const Factorization& f,
                                const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    return absl::UnavailableError(absl::StrCat("cannot open ", path));
  }
  out << SerializeFactorization(f);
  if (!out) return absl::DataLossError(absl::StrCat("write failed: ", path));
  return absl::OkStatus();
}

namespace {

absl::StatusOr<int> ParseHeaderInt(absl::string_view line, absl::string_view key,
                                   int line_no) {
  absl::string_view value = line;
  if (!absl::ConsumePrefix(&value, key) || !absl::ConsumePrefix(&value, "=")) {
    return absl::InvalidArgumentError(absl::StrCat(
        "parse error at line ", line_no, ": expected '", key, "=<int>'"));
  }
  int parsed = 0;
  auto [ptr, ec] =
      std::from_chars(value.data(), value.data() + value.size(), parsed);
  if (ec != std::errc() || ptr != value.data() + value.size() || parsed < 1) {
    return absl::InvalidArgumentError(absl::StrCat(
        "parse error at line ", line_no, ": invalid value for ", key));
  }
  return parsed;
}

absl::Status ParseRow(absl::string_view line, int line_no, int expected_cols,
                      std::span<double> out, absl::string_view matrix,
                      int row) {
  std::vector<absl::string_view> fields = absl::StrSplit(line, ',');
  if (static_cast<int>(fields.size()) != expected_cols) {
    return absl::FailedPreconditionError(absl::StrCat(
        "shape mismatch at line ", line_no, ": row ", row, " of ", matrix,
        " has ", fields.size(), " columns, expected ", expected_cols));
  }
  for (int j = 0; j < expected_cols; ++j) {
    absl::string_view field = absl::StripAsciiWhitespace(fields[j]);
    double value = 0.0;
    auto [ptr, ec] =
        std::from_chars(field.data(), field.data() + field.size(), value);
    if (field.empty() || ec != std::errc() ||
        ptr != field.data() + field.size() || !std::isfinite(value)) {
      return absl::InvalidArgumentError(
          absl::StrCat("parse error at line ", line_no, ", column ", j + 1,
                       ": '", field, "' is not a number"));
    }
    out[j] = value;
  }
  return absl::OkStatus();
}

}  // namespace

absl::StatusOr<Factorization> ParseFactorization(absl::string_view text) {
  std::vector<absl::string_view> lines = absl::StrSplit(text, '\n');
  while (!lines.empty() && absl::StripAsciiWhitespace(lines.back()).empty()) {
    lines.pop_back();
  }
  for (auto& line : lines) line = absl::StripTrailingAsciiWhitespace(line);
  if (lines.size() < 3) {
    return absl::InvalidArgumentError(
        "parse error: missing kind/steps/width header");
  }
  if (!absl::StartsWith(lines[0], "kind=")) {
    return absl::InvalidArgumentError(
        "parse error at line 1: expected 'kind=<name>'");
  }
  CORRFED_ASSIGN_OR_RETURN(int steps, ParseHeaderInt(lines[1], "steps", 2));
  CORRFED_ASSIGN_OR_RETURN(int width, ParseHeaderInt(lines[2], "width", 3));

  const size_t expected_lines =
      3 + static_cast<size_t>(width) + 1 + static_cast<size_t>(steps);
  size_t separator = 3;
  while (separator < lines.size() && lines[separator] != "---") ++separator;
  if (separator == lines.size()) {
    return absl::InvalidArgumentError(
        "parse error: missing '---' separator between C and B");
  }
  if (separator - 3 != static_cast<size_t>(width)) {
    return absl::FailedPreconditionError(
        absl::StrCat("shape mismatch: C has ", separator - 3,
                     " rows, expected width = ", width));
  }
  if (lines.size() != expected_lines) {
    return absl::FailedPreconditionError(
        absl::StrCat("shape mismatch: B has ", lines.size() - separator - 1,
                     " rows, expected steps = ", steps));
  }

  DenseMatrix c(width, steps);
  for (int w = 0; w < width; ++w) {
    CORRFED_RETURN_IF_ERROR(ParseRow(lines[3 + w], 4 + w, steps, c.Row(w),
                                     "C", w));
  }
  DenseMatrix b(steps, width);
  for (int k = 0; k < steps; ++k) {
    const size_t index = separator + 1 + k;
    CORRFED_RETURN_IF_ERROR(ParseRow(lines[index],
                                     static_cast<int>(index) + 1, width,
                                     b.Row(k), "B", k));
  }
  CORRFED_ASSIGN_OR_RETURN(
      Factorization f,
      Factorization::Create(MechanismKind::kExternal, std::move(b),
                            std::move(c)));
  CORRFED_RETURN_IF_ERROR(f.Validate(kLoadTolerance));
  return f;
}

absl::StatusOr<Factorization> LoadFactorization(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return absl::NotFoundError(absl::StrCat("cannot open ", path));
  std::stringstream buffer;
  buffer << in.rdbuf();
  return ParseFactorization(buffer.str());
}

}  // namespace corrfed
