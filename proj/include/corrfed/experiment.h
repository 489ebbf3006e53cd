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

#ifndef CORRFED_EXPERIMENT_H_
#define CORRFED_EXPERIMENT_H_

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "absl/strings/string_view.h"
#include "corrfed/federation.h"

namespace corrfed {

// Exit codes shared by all commands.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitNumericFailure = 3;
inline constexpr int kExitDiagnosticsViolation = 4;

// Maps a failed status to the exit code of its category: Aborted means a
// diagnostics violation, InvalidArgument / NotFound / FailedPrecondition /
// OutOfRange during setup mean a configuration error, anything else a
// runtime numeric failure.
int ExitCodeFor(const absl::Status& status);

// One column of a comparison: a mechanism name ("noiseless", "identity",
// "binary-tree", "toeplitz", "external") with optional step-size overrides.
struct ComparisonEntry {
  std::string label;
  std::string mechanism;
  std::string mechanism_file;
  std::optional<double> eta;
  std::optional<double> eta_g;
};

struct ExperimentConfig {
  SimConfig sim;
  std::vector<uint64_t> seeds;
  std::vector<ComparisonEntry> comparisons;
  std::string output_dir;
  // Concurrent seed x mechanism cells.
  int jobs = 1;
};

// Parses a simulation config. Keys are the SimConfig field names:
//   n, R, tau, dim, eta, eta_g, clip_bound, mechanism, budget, master_seed,
//   data_spec, diagnostics, x0, update_path, threads, output_dir.
// `mechanism` is a kind name or a path to a factorization file; `budget` is
// {"epsilon", "delta"} or {"noise_std"}. All violations are listed in one
// InvalidArgument error.
absl::StatusOr<SimConfig> ParseSimConfig(absl::string_view json_text,
                                         std::string* output_dir = nullptr);
absl::StatusOr<ExperimentConfig> ParseExperimentConfig(
    absl::string_view json_text);

// Noise seed of one comparison cell. Cells of one seed share their data
// stream and draw noise from distinct substreams.
uint64_t CellNoiseSeed(uint64_t seed, absl::string_view label);

struct FactorizeArgs {
  std::string mechanism;
  int steps = 0;
  int tau = 1;
  std::string output = "factorization.csv";
};

struct CalibrateArgs {
  double epsilon = 0.0;
  double delta = 0.0;
  double clip = 1.0;
  std::string mechanism = "toeplitz";
  int steps = 1;
  // Factorization file used instead of `mechanism` when set.
  std::string factorization;
};

struct SimulateArgs {
  std::string config_path;
  // Overrides output_dir from the config when nonempty.
  std::string output_dir;
  bool record_timing = false;
};

struct CompareArgs {
  std::string config_path;
  std::string output_dir;
  int jobs = 0;  // 0 keeps the config value
  bool record_timing = false;
};

// Each command writes its result JSON to `out`, diagnostics to `err`, and
// returns the process exit code.
int RunFactorize(const FactorizeArgs& args, std::ostream& out,
                 std::ostream& err);
int RunCalibrate(const CalibrateArgs& args, std::ostream& out,
                 std::ostream& err);
int RunSimulate(const SimulateArgs& args, std::ostream& out,
                std::ostream& err);
int RunCompare(const CompareArgs& args, std::ostream& out, std::ostream& err);

}  // namespace corrfed

#endif  // CORRFED_EXPERIMENT_H_
