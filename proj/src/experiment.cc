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

#include "corrfed/experiment.h"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "absl/strings/str_cat.h"
#include "absl/strings/str_join.h"
#include "corrfed/status_macros.h"
#include "json.hpp"

namespace corrfed {
namespace {

using nlohmann::json;

// Reads typed fields from one JSON object and records every problem instead
// of stopping at the first one.
class FieldReader {
 public:
  FieldReader(const json& object, std::string prefix,
              std::vector<std::string>& errors)
      : object_(object), prefix_(std::move(prefix)), errors_(errors) {}

  template <typename T>
  bool Read(const char* key, T& out, bool required = false) {
    seen_.insert(key);
    auto it = object_.find(key);
    if (it == object_.end()) {
      if (required) errors_.push_back(absl::StrCat(Name(key), ": missing"));
      return false;
    }
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!it->is_boolean()) throw json::type_error::create(302, "", nullptr);
      } else if constexpr (std::is_integral_v<T>) {
        if (!it->is_number_integer() && !it->is_number_unsigned()) {
          throw json::type_error::create(302, "", nullptr);
        }
      } else if constexpr (std::is_floating_point_v<T>) {
        if (!it->is_number()) throw json::type_error::create(302, "", nullptr);
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!it->is_string()) throw json::type_error::create(302, "", nullptr);
      }
      out = it->template get<T>();
      return true;
    } catch (const json::exception&) {
      errors_.push_back(absl::StrCat(Name(key), ": wrong type"));
      return false;
    }
  }

  const json* Object(const char* key) {
    seen_.insert(key);
    auto it = object_.find(key);
    if (it == object_.end()) return nullptr;
    if (!it->is_object()) {
      errors_.push_back(absl::StrCat(Name(key), ": must be an object"));
      return nullptr;
    }
    return &*it;
  }

  const json* Raw(const char* key) {
    seen_.insert(key);
    auto it = object_.find(key);
    return it == object_.end() ? nullptr : &*it;
  }

  void RejectUnknown() {
    for (auto it = object_.begin(); it != object_.end(); ++it) {
      if (!seen_.count(it.key())) {
        errors_.push_back(absl::StrCat(Name(it.key().c_str()), ": unknown key"));
      }
    }
  }

  std::string Name(const char* key) const {
    return prefix_.empty() ? std::string(key) : absl::StrCat(prefix_, ".", key);
  }

 private:
  const json& object_;
  std::string prefix_;
  std::vector<std::string>& errors_;
  std::set<std::string> seen_;
};

absl::StatusOr<json> ParseJsonObject(absl::string_view text) {
  json parsed = json::parse(text.begin(), text.end(), nullptr, false);
  if (parsed.is_discarded()) {
    return absl::InvalidArgumentError("config is not valid JSON");
  }
  if (!parsed.is_object()) {
    return absl::InvalidArgumentError("config must be a JSON object");
  }
  return parsed;
}

void ReadMechanism(const std::string& value, MechanismKind& kind,
                   std::string& file) {
  absl::StatusOr<MechanismKind> parsed = ParseMechanismKind(value);
  if (parsed.ok() && *parsed != MechanismKind::kExternal) {
    kind = *parsed;
    file.clear();
  } else {
    kind = MechanismKind::kExternal;
    file = value;
  }
}

// Fills `cfg` from the SimConfig keys of `root`; experiment-only keys are
// listed in `extra_keys` so the caller can read them.
void ReadSimFields(FieldReader& top, SimConfig& cfg,
                   std::vector<std::string>& errors, std::string* output_dir) {
  top.Read("n", cfg.n, true);
  top.Read("R", cfg.R, true);
  top.Read("tau", cfg.tau, true);
  top.Read("dim", cfg.dim, true);
  top.Read("eta", cfg.eta, true);
  top.Read("eta_g", cfg.eta_g);
  top.Read("clip_bound", cfg.clip_bound);
  std::string mechanism;
  if (top.Read("mechanism", mechanism, true)) {
    ReadMechanism(mechanism, cfg.mechanism, cfg.mechanism_file);
  }
  if (const json* budget = top.Object("budget")) {
    FieldReader b(*budget, "budget", errors);
    double noise_std = 0.0;
    if (b.Read("noise_std", noise_std)) {
      cfg.noise_std = noise_std;
    } else {
      b.Read("epsilon", cfg.epsilon, true);
      b.Read("delta", cfg.delta, true);
    }
    b.RejectUnknown();
  } else if (top.Raw("budget") == nullptr) {
    errors.push_back("budget: missing");
  }
  top.Read("master_seed", cfg.master_seed);
  if (const json* spec = top.Object("data_spec")) {
    FieldReader d(*spec, "data_spec", errors);
    std::string kind;
    if (d.Read("kind", kind, true)) {
      if (kind == "logistic") {
        cfg.data_spec.kind = LossKind::kLogistic;
      } else if (kind == "quadratic") {
        cfg.data_spec.kind = LossKind::kQuadratic;
      } else {
        errors.push_back(absl::StrCat(
            "data_spec.kind: expected 'logistic' or 'quadratic', got '", kind,
            "'"));
      }
    }
    d.Read("alpha", cfg.data_spec.alpha);
    d.Read("beta", cfg.data_spec.beta);
    d.Read("drift_magnitude", cfg.data_spec.drift_magnitude);
    d.Read("drift_period", cfg.data_spec.drift_period);
    d.Read("base_scale", cfg.data_spec.base_scale);
    d.Read("seed", cfg.data_spec.seed);
    d.Read("sample_table", cfg.data_spec.sample_table);
    d.RejectUnknown();
  } else if (top.Raw("data_spec") == nullptr) {
    errors.push_back("data_spec: missing");
  }
  if (const json* diag = top.Object("diagnostics")) {
    FieldReader d(*diag, "diagnostics", errors);
    d.Read("virtual_iterate", cfg.diag_virtual_iterate);
    d.Read("dual_form_check", cfg.diag_dual_form_check);
    d.RejectUnknown();
  }
  top.Read("x0", cfg.x0);
  std::string path;
  if (top.Read("update_path", path)) {
    if (path == "increment") {
      cfg.update_path = UpdatePath::kIncrement;
    } else if (path == "prefix-sum") {
      cfg.update_path = UpdatePath::kPrefixSum;
    } else {
      errors.push_back(absl::StrCat(
          "update_path: expected 'increment' or 'prefix-sum', got '", path,
          "'"));
    }
  }
  top.Read("threads", cfg.threads);
  std::string dir;
  if (top.Read("output_dir", dir) && output_dir != nullptr) *output_dir = dir;

  if (errors.empty()) {
    absl::Status valid = ValidateSimConfig(cfg);
    if (!valid.ok()) errors.push_back(std::string(valid.message()));
    if (cfg.data_spec.drift_period < 1) {
      errors.push_back("data_spec.drift_period: must be >= 1");
    }
  }
}

absl::Status ErrorsToStatus(const std::vector<std::string>& errors) {
  if (errors.empty()) return absl::OkStatus();
  return absl::InvalidArgumentError(
      absl::StrCat("config errors: ", absl::StrJoin(errors, "; ")));
}

absl::StatusOr<std::string> ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return absl::NotFoundError(absl::StrCat("cannot open ", path));
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

absl::Status WriteFile(const std::filesystem::path& path,
                       absl::string_view contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    return absl::UnavailableError(absl::StrCat("cannot open ", path.string()));
  }
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) {
    return absl::DataLossError(absl::StrCat("write failed: ", path.string()));
  }
  return absl::OkStatus();
}

absl::Status EnsureDirectory(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir.empty() ? "." : dir, ec);
  if (ec) {
    return absl::UnavailableError(
        absl::StrCat("cannot create ", dir, ": ", ec.message()));
  }
  return absl::OkStatus();
}

json DiagnosticsJson(const DiagnosticsReport& d) {
  return json{{"virtual_iterate",
               {{"checked", d.virtual_iterate_checked},
                {"max_residual", d.max_virtual_residual},
                {"tolerance", kVirtualIterateTolerance}}},
              {"dual_form_check",
               {{"checked", d.dual_form_checked},
                {"max_residual", d.max_dual_form_residual},
                {"tolerance", kDualFormTolerance}}}};
}

double Seconds(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                       start)
      .count();
}

int Fail(const absl::Status& status, std::ostream& err) {
  err << "error: " << status.message() << "\n";
  return ExitCodeFor(status);
}

}  // namespace

int ExitCodeFor(const absl::Status& status) {
  switch (status.code()) {
    case absl::StatusCode::kOk:
      return kExitOk;
    case absl::StatusCode::kAborted:
      return kExitDiagnosticsViolation;
    case absl::StatusCode::kInvalidArgument:
    case absl::StatusCode::kNotFound:
    case absl::StatusCode::kFailedPrecondition:
    case absl::StatusCode::kOutOfRange:
      return kExitConfigError;
    default:
      return kExitNumericFailure;
  }
}

absl::StatusOr<SimConfig> ParseSimConfig(absl::string_view json_text,
                                         std::string* output_dir) {
  CORRFED_ASSIGN_OR_RETURN(json root, ParseJsonObject(json_text));
  std::vector<std::string> errors;
  SimConfig cfg;
  FieldReader top(root, "", errors);
  ReadSimFields(top, cfg, errors, output_dir);
  bool with_static = false;
  top.Read("static_regret", with_static);
  top.RejectUnknown();
  CORRFED_RETURN_IF_ERROR(ErrorsToStatus(errors));
  return cfg;
}

absl::StatusOr<ExperimentConfig> ParseExperimentConfig(
    absl::string_view json_text) {
  CORRFED_ASSIGN_OR_RETURN(json root, ParseJsonObject(json_text));
  std::vector<std::string> errors;
  ExperimentConfig cfg;
  FieldReader top(root, "", errors);
  ReadSimFields(top, cfg.sim, errors, &cfg.output_dir);
  bool with_static = false;
  top.Read("static_regret", with_static);
  if (top.Read("seeds", cfg.seeds, true) && cfg.seeds.empty()) {
    errors.push_back("seeds: must be nonempty");
  }
  top.Read("jobs", cfg.jobs);
  if (cfg.jobs < 1) errors.push_back("jobs: must be >= 1");
  const json* comparisons = top.Raw("comparisons");
  if (comparisons == nullptr || !comparisons->is_array() ||
      comparisons->empty()) {
    errors.push_back("comparisons: must be a nonempty array");
  } else {
    std::set<std::string> labels;
    for (size_t k = 0; k < comparisons->size(); ++k) {
      const json& item = (*comparisons)[k];
      const std::string name = absl::StrCat("comparisons[", k, "]");
      ComparisonEntry entry;
      if (item.is_string()) {
        entry.mechanism = item.get<std::string>();
      } else if (item.is_object()) {
        FieldReader c(item, name, errors);
        c.Read("mechanism", entry.mechanism, true);
        c.Read("label", entry.label);
        double value = 0.0;
        if (c.Read("eta", value)) entry.eta = value;
        if (c.Read("eta_g", value)) entry.eta_g = value;
        c.RejectUnknown();
      } else {
        errors.push_back(absl::StrCat(name, ": must be a string or object"));
        continue;
      }
      if (entry.mechanism != "noiseless") {
        absl::StatusOr<MechanismKind> kind =
            ParseMechanismKind(entry.mechanism);
        if (!kind.ok()) {
          // Anything else names a factorization file.
          entry.mechanism_file = entry.mechanism;
          entry.mechanism = "external";
        }
      }
      if (entry.label.empty()) {
        entry.label = entry.mechanism_file.empty() ? entry.mechanism
                                                   : entry.mechanism_file;
      }
      if (!labels.insert(entry.label).second) {
        errors.push_back(
            absl::StrCat(name, ": duplicate label '", entry.label, "'"));
      }
      cfg.comparisons.push_back(std::move(entry));
    }
  }
  top.RejectUnknown();
  CORRFED_RETURN_IF_ERROR(ErrorsToStatus(errors));
  return cfg;
}

uint64_t CellNoiseSeed(uint64_t seed, absl::string_view label) {
  // FNV-1a of the label keeps the derivation independent of the order in
  // which comparisons are listed.
  uint64_t h = 0xcbf29ce484222325ULL;
  for (char ch : label) {
    h ^= static_cast<unsigned char>(ch);
    h *= 0x100000001b3ULL;
  }
  return NoiseRowKey(seed, static_cast<int64_t>(h), -1);
}

int RunFactorize(const FactorizeArgs& args, std::ostream& out,
                 std::ostream& err) {
  absl::StatusOr<MechanismKind> kind = ParseMechanismKind(args.mechanism);
  if (!kind.ok() || *kind == MechanismKind::kExternal) {
    err << "error: --mechanism must be binary-tree, toeplitz or identity, got '"
        << args.mechanism << "'\n";
    return kExitConfigError;
  }
  if (args.steps < 1) {
    err << "error: --steps must be >= 1, got " << args.steps << "\n";
    return kExitConfigError;
  }
  if (args.tau < 1 || args.steps % args.tau != 0) {
    err << "error: --tau must be positive and divide --steps\n";
    return kExitConfigError;
  }
  absl::StatusOr<Factorization> f = BuildFactorization(*kind, args.steps);
  if (!f.ok()) return Fail(f.status(), err);
  absl::Status written = WriteFactorization(*f, args.output);
  if (!written.ok()) return Fail(written, err);
  absl::StatusOr<FactorizationStats> stats = ComputeStats(*f, args.tau);
  if (!stats.ok()) return Fail(stats.status(), err);

  json result{{"kind", std::string(MechanismKindName(f->kind()))},
              {"steps", f->steps()},
              {"width", f->width()},
              {"max_col_sq_norm", stats->max_col_sq_norm},
              {"max_row_sq_norm", stats->max_row_sq_norm},
              {"output", args.output}};
  if (args.tau > 1) result["prefix_row_sq_norms"] = stats->prefix_row_sq_norms;
  if (*kind == MechanismKind::kToeplitz) {
    const ToeplitzNormReport report = CompareToeplitzNormBounds(args.steps);
    result["norm_bounds"] = {{"exact", report.exact_sq_norm},
                             {"safe_bound", report.safe_bound},
                             {"safe_bound_holds", report.safe_bound_holds},
                             {"candidate_bound", report.candidate_bound},
                             {"candidate_bound_holds",
                              report.candidate_bound_holds}};
  }
  out << result.dump() << "\n";
  return kExitOk;
}

int RunCalibrate(const CalibrateArgs& args, std::ostream& out,
                 std::ostream& err) {
  if (!(args.epsilon > 0.0)) {
    err << "error: --epsilon must be > 0, got " << args.epsilon << "\n";
    return kExitConfigError;
  }
  if (!(args.delta > 0.0 && args.delta <= 1.0)) {
    err << "error: --delta must lie in (0, 1], got " << args.delta << "\n";
    return kExitConfigError;
  }
  if (!(args.clip > 0.0)) {
    err << "error: --clip must be > 0, got " << args.clip << "\n";
    return kExitConfigError;
  }
  absl::StatusOr<Factorization> f;
  if (!args.factorization.empty()) {
    f = LoadFactorization(args.factorization);
  } else {
    absl::StatusOr<MechanismKind> kind = ParseMechanismKind(args.mechanism);
    if (!kind.ok() || *kind == MechanismKind::kExternal) {
      err << "error: --mechanism must be binary-tree, toeplitz or identity "
             "(use --factorization for a file)\n";
      return kExitConfigError;
    }
    if (args.steps < 1) {
      err << "error: --steps must be >= 1, got " << args.steps << "\n";
      return kExitConfigError;
    }
    f = BuildFactorization(*kind, args.steps);
  }
  if (!f.ok()) return Fail(f.status(), err);
  absl::StatusOr<PrivacyBudget> budget =
      Calibrate(args.epsilon, args.delta, args.clip, *f);
  if (!budget.ok()) return Fail(budget.status(), err);
  json result{{"epsilon", budget->epsilon},
              {"delta", budget->delta},
              {"rho", budget->rho},
              {"sensitivity", budget->sensitivity},
              {"noise_variance", budget->noise_variance},
              {"max_col_sq_norm", budget->max_col_sq_norm}};
  out << result.dump() << "\n";
  return kExitOk;
}

int RunSimulate(const SimulateArgs& args, std::ostream& out,
                std::ostream& err) {
  const auto start = std::chrono::steady_clock::now();
  absl::StatusOr<std::string> text = ReadFile(args.config_path);
  if (!text.ok()) return Fail(text.status(), err);
  std::string output_dir;
  absl::StatusOr<SimConfig> cfg = ParseSimConfig(*text, &output_dir);
  if (!cfg.ok()) return Fail(cfg.status(), err);
  if (!args.output_dir.empty()) output_dir = args.output_dir;
  bool with_static = false;
  {
    json root = json::parse(*text);
    with_static = root.value("static_regret", false);
  }

  absl::StatusOr<DataStream> stream =
      MakeStream(cfg->data_spec, cfg->n, cfg->R, cfg->tau, cfg->dim);
  if (!stream.ok()) return Fail(stream.status(), err);
  SimulationOptions options;
  options.with_static = with_static;
  absl::StatusOr<SimulationResult> result =
      RunSimulation(*cfg, *stream, options);
  if (!result.ok()) return Fail(result.status(), err);

  absl::Status dir = EnsureDirectory(output_dir);
  if (!dir.ok()) return Fail(dir, err);
  const std::filesystem::path base = output_dir.empty() ? "." : output_dir;
  absl::Status written =
      WriteFile(base / "trace.csv", SerializeTrace(result->trace));
  if (!written.ok()) return Fail(written, err);

  const RegretTrace& trace = result->trace;
  json summary{
      {"mechanism",
       cfg->mechanism == MechanismKind::kExternal
           ? cfg->mechanism_file
           : std::string(MechanismKindName(cfg->mechanism))},
      {"rounds", cfg->R},
      {"steps", cfg->steps()},
      {"noise_std", result->noise.stddev},
      {"final_dyn_regret", trace.FinalDynamicRegret()},
      {"final_norm_regret", trace.FinalNormalizedRegret()},
      {"optima_converged", trace.optima_converged},
      {"final_model", result->final_model},
      {"diagnostics", DiagnosticsJson(result->diagnostics)},
      {"wall_time_s", nullptr}};
  if (result->noise.budget) {
    summary["rho"] = result->noise.budget->rho;
    summary["noise_variance"] = result->noise.budget->noise_variance;
  }
  if (!trace.rows.empty() && trace.rows.back().cum_static_regret) {
    summary["final_static_regret"] = *trace.rows.back().cum_static_regret;
  }
  if (args.record_timing) summary["wall_time_s"] = Seconds(start);
  written = WriteFile(base / "summary.json", summary.dump(2) + "\n");
  if (!written.ok()) return Fail(written, err);
  out << "rounds=" << cfg->R << " final_norm_regret="
      << FormatDouble(trace.FinalNormalizedRegret())
      << " trace=" << (base / "trace.csv").string() << "\n";
  return kExitOk;
}

namespace {

struct Cell {
  size_t seed_index = 0;
  size_t entry_index = 0;
  absl::Status status;
  RegretTrace trace;
  double seconds = 0.0;
  bool done = false;
};

SimConfig CellConfig(const ExperimentConfig& exp, const ComparisonEntry& entry,
                     uint64_t seed) {
  SimConfig cfg = exp.sim;
  cfg.master_seed = CellNoiseSeed(seed, entry.label);
  if (entry.mechanism == "noiseless") {
    cfg.mechanism = MechanismKind::kIdentity;
    cfg.noise_std = 0.0;
  } else if (entry.mechanism == "external") {
    cfg.mechanism = MechanismKind::kExternal;
    cfg.mechanism_file = entry.mechanism_file;
  } else {
    cfg.mechanism = *ParseMechanismKind(entry.mechanism);
  }
  if (entry.eta) cfg.eta = *entry.eta;
  if (entry.eta_g) cfg.eta_g = *entry.eta_g;
  return cfg;
}

double Mean(const std::vector<double>& v) {
  double sum = 0.0;
  for (double x : v) sum += x;
  return sum / static_cast<double>(v.size());
}

double SampleStd(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double mean = Mean(v);
  double sq = 0.0;
  for (double x : v) sq += (x - mean) * (x - mean);
  return std::sqrt(sq / static_cast<double>(v.size() - 1));
}

}  // namespace

int RunCompare(const CompareArgs& args, std::ostream& out, std::ostream& err) {
  absl::StatusOr<std::string> text = ReadFile(args.config_path);
  if (!text.ok()) return Fail(text.status(), err);
  absl::StatusOr<ExperimentConfig> exp = ParseExperimentConfig(*text);
  if (!exp.ok()) return Fail(exp.status(), err);
  const std::string output_dir =
      args.output_dir.empty() ? exp->output_dir : args.output_dir;
  const int jobs = args.jobs > 0 ? args.jobs : exp->jobs;
  const bool with_static = json::parse(*text).value("static_regret", false);

  // One factorization per distinct mechanism, shared by every seed.
  std::map<std::string, std::shared_ptr<const Factorization>> factorizations;
  for (const ComparisonEntry& entry : exp->comparisons) {
    SimConfig cfg = CellConfig(*exp, entry, 0);
    const std::string key = absl::StrCat(MechanismKindName(cfg.mechanism), ":",
                                         cfg.mechanism_file);
    if (factorizations.count(key)) continue;
    absl::StatusOr<std::shared_ptr<const Factorization>> f =
        ResolveFactorization(cfg);
    if (!f.ok()) return Fail(f.status(), err);
    factorizations[key] = *f;
  }

  absl::Status dir = EnsureDirectory(output_dir);
  if (!dir.ok()) return Fail(dir, err);
  const std::filesystem::path base = output_dir.empty() ? "." : output_dir;

  const size_t entries = exp->comparisons.size();
  std::vector<Cell> cells(exp->seeds.size() * entries);
  absl::Status failure;
  for (size_t s = 0; s < exp->seeds.size() && failure.ok(); ++s) {
    DataSpec spec = exp->sim.data_spec;
    spec.seed = exp->seeds[s];
    absl::StatusOr<DataStream> stream =
        MakeStream(spec, exp->sim.n, exp->sim.R, exp->sim.tau, exp->sim.dim);
    if (!stream.ok()) {
      failure = stream.status();
      break;
    }
    RegretEvaluator evaluator(*stream);
    // Optima are filled before any worker touches the evaluator.
    absl::Status optima = evaluator.RoundOptima().status();
    if (optima.ok() && with_static) optima = evaluator.Global().status();
    if (!optima.ok()) {
      failure = optima;
      break;
    }

    auto run_cell = [&](size_t e) {
      Cell& cell = cells[s * entries + e];
      cell.seed_index = s;
      cell.entry_index = e;
      const auto start = std::chrono::steady_clock::now();
      const SimConfig cfg =
          CellConfig(*exp, exp->comparisons[e], exp->seeds[s]);
      SimulationOptions options;
      options.factorization = factorizations.at(absl::StrCat(
          MechanismKindName(cfg.mechanism), ":", cfg.mechanism_file));
      options.evaluator = &evaluator;
      options.with_static = with_static;
      absl::StatusOr<SimulationResult> result =
          RunSimulation(cfg, *stream, options);
      cell.seconds = Seconds(start);
      if (!result.ok()) {
        cell.status = result.status();
        return;
      }
      cell.trace = std::move(result->trace);
      cell.done = true;
    };
    if (jobs <= 1) {
      for (size_t e = 0; e < entries; ++e) run_cell(e);
    } else {
      std::mutex mu;
      size_t next = 0;
      std::vector<std::jthread> pool;
      for (int w = 0; w < std::min<int>(jobs, static_cast<int>(entries));
           ++w) {
        pool.emplace_back([&] {
          while (true) {
            size_t e;
            {
              std::lock_guard<std::mutex> lock(mu);
              if (next == entries) return;
              e = next++;
            }
            run_cell(e);
          }
        });
      }
    }
    for (size_t e = 0; e < entries; ++e) {
      const Cell& cell = cells[s * entries + e];
      if (!cell.status.ok() && failure.ok()) {
        failure = absl::Status(
            cell.status.code(),
            absl::StrCat("seed ", exp->seeds[s], ", ",
                         exp->comparisons[e].label, ": ",
                         cell.status.message()));
      }
    }
  }

  // Long-format results and the manifest cover every completed cell, also
  // when a later cell failed.
  std::string long_csv = "seed,mechanism,round,avg_loss,cum_dyn_regret\n";
  json manifest{{"completed", json::array()}, {"failed", nullptr}};
  for (const Cell& cell : cells) {
    if (!cell.done) continue;
    const uint64_t seed = exp->seeds[cell.seed_index];
    const std::string& label = exp->comparisons[cell.entry_index].label;
    for (const TraceRow& row : cell.trace.rows) {
      absl::StrAppend(&long_csv, seed, ",", label, ",", row.round, ",",
                      FormatDouble(row.avg_round_loss), ",",
                      FormatDouble(row.cum_dyn_regret), "\n");
    }
    manifest["completed"].push_back({{"seed", seed}, {"mechanism", label}});
  }
  if (!failure.ok()) manifest["failed"] = std::string(failure.message());
  absl::Status written = WriteFile(base / "compare_long.csv", long_csv);
  if (written.ok()) {
    written = WriteFile(base / "manifest.json", manifest.dump(2) + "\n");
  }
  if (!failure.ok()) return Fail(failure, err);
  if (!written.ok()) return Fail(written, err);

  json summary = json::array();
  out << "mechanism  seeds  mean_final_norm_regret  std_final_norm_regret\n";
  for (size_t e = 0; e < entries; ++e) {
    std::vector<double> finals;
    double seconds = 0.0;
    for (size_t s = 0; s < exp->seeds.size(); ++s) {
      const Cell& cell = cells[s * entries + e];
      finals.push_back(cell.trace.FinalNormalizedRegret());
      seconds += cell.seconds;
    }
    const ComparisonEntry& entry = exp->comparisons[e];
    json row{{"mechanism", entry.label},
             {"seeds", exp->seeds},
             {"mean_final_norm_regret", Mean(finals)},
             {"std_final_norm_regret", SampleStd(finals)},
             {"runtime_s", nullptr}};
    if (args.record_timing) row["runtime_s"] = seconds;
    summary.push_back(row);
    out << entry.label << "  " << exp->seeds.size() << "  "
        << FormatDouble(Mean(finals)) << "  " << FormatDouble(SampleStd(finals))
        << "\n";
  }
  written = WriteFile(base / "summary.json", summary.dump(2) + "\n");
  if (!written.ok()) return Fail(written, err);
  return kExitOk;
}

}  // namespace corrfed
