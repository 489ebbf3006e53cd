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

// Command-line front end: factorize, calibrate, simulate, compare.

#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "corrfed/experiment.h"

int main(int argc, char** argv) {
  CLI::App app{"Private online federated learning simulator"};
  app.require_subcommand(1);

  corrfed::FactorizeArgs factorize;
  CLI::App* fac = app.add_subcommand(
      "factorize", "Write a factorization file and print its norms");
  fac->add_option("--mechanism", factorize.mechanism,
                  "binary-tree, toeplitz or identity")
      ->required();
  fac->add_option("--steps", factorize.steps, "Total steps (R * tau)")
      ->required();
  fac->add_option("--tau", factorize.tau,
                  "Local steps per round; reports per-round prefix norms");
  fac->add_option("--output", factorize.output, "Output CSV path");

  corrfed::CalibrateArgs calibrate;
  CLI::App* cal =
      app.add_subcommand("calibrate", "Print the calibrated noise budget");
  cal->add_option("--epsilon", calibrate.epsilon)->required();
  cal->add_option("--delta", calibrate.delta)->required();
  cal->add_option("--clip", calibrate.clip, "Gradient norm bound");
  cal->add_option("--mechanism", calibrate.mechanism);
  cal->add_option("--steps", calibrate.steps);
  cal->add_option("--factorization", calibrate.factorization,
                  "Factorization file; overrides --mechanism");

  corrfed::SimulateArgs simulate;
  CLI::App* sim = app.add_subcommand("simulate", "Run one simulation");
  sim->add_option("config", simulate.config_path, "JSON config")->required();
  sim->add_option("--output-dir", simulate.output_dir);
  sim->add_flag("--record-timing", simulate.record_timing,
                "Record wall time in the summary");

  corrfed::CompareArgs compare;
  CLI::App* cmp =
      app.add_subcommand("compare", "Run seeds x mechanisms side by side");
  cmp->add_option("config", compare.config_path, "JSON config")->required();
  cmp->add_option("--output-dir", compare.output_dir);
  cmp->add_option("--jobs", compare.jobs, "Parallel cells");
  cmp->add_flag("--record-timing", compare.record_timing);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? corrfed::kExitOk : corrfed::kExitConfigError;
  }

  if (fac->parsed()) return corrfed::RunFactorize(factorize, std::cout, std::cerr);
  if (cal->parsed()) return corrfed::RunCalibrate(calibrate, std::cout, std::cerr);
  if (sim->parsed()) return corrfed::RunSimulate(simulate, std::cout, std::cerr);
  return corrfed::RunCompare(compare, std::cout, std::cerr);
}
