#pragma once

// JSON run configuration, study dispatch and on-disk persistence.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "tqproc/analytic.hpp"
#include "tqproc/experiments.hpp"

namespace tqproc::runner {

enum class StudyKind {
  BkRate,
  WeightedBkRate,
  KernelValidation,
  Swanson,
  LilTrace,
  ClassicalBk,
  FbmGen,
  KernelEval,
  TailFit,
  Deviation,
};

std::string_view to_string(StudyKind kind);
StudyKind study_kind_from_string(std::string_view name);

struct KernelRequest {
  analytic::KernelKind kind = analytic::KernelKind::G;
  double t1 = 1.0;
  double a1 = 0.0;
  double t2 = 1.0;
  double a2 = 0.0;
  std::optional<double> kappa;  // weight (t1 t2)^kappa for K; defaults to H
};

struct RunConfig {
  StudyKind study = StudyKind::BkRate;
  experiments::StudyParams params;
  bool include_zero = true;  // fbm_gen grid
  KernelRequest kernel;      // kernel_eval
  std::string out_dir;
};

/// Parses and validates a JSON config, applying per-study defaults.
/// Throws ConfigError naming the offending field.
RunConfig parse_config(std::string_view text);
RunConfig config_from_json(const nlohmann::json& j);
/// Every field, explicit; parse_config(serialize_config(c)) reproduces c.
nlohmann::json to_json(const RunConfig& config);
std::string serialize_config(const RunConfig& config);

/// FNV-1a 64 of the config text, as 16 hex digits.
std::string config_hash(std::string_view text);

/// Runs the study without touching the file system.
experiments::StudyResult execute(const RunConfig& config);

/// One CSV row `kind,t1,a1,t2,a2,value` (no header).
std::string kernel_row(const KernelRequest& request, double H);

struct RunOptions {
  bool force = false;
  bool check = false;
  std::optional<unsigned> threads;
  std::optional<std::string> out_dir;
  std::ostream* log = nullptr;
};

struct RunOutcome {
  int exit_code = 0;
  std::string out_dir;
  std::vector<std::string> files;
  std::optional<experiments::StudyResult> result;
  std::string message;
};

/// Dispatches the config and writes result.json, summary.csv, any study
/// specific CSVs and manifest.json into the output directory.
///
/// Exit codes: 0 on completion, 2 in check mode when a pass flag is false,
/// 1 on any error (including an existing non-empty output directory
/// without `force`). Errors never throw.
RunOutcome run_study(const RunConfig& config, std::string_view config_text,
                     const RunOptions& options);

/// Output directory: options.out_dir, else $TQPROC_OUT, else config.out_dir,
/// else "tqproc_out/<study>".
std::string resolve_out_dir(const RunConfig& config, const RunOptions& options);

/// `kind t1 a1 t2 a2 H [--weighted] [--kappa k]`, or `swanson t1 t2`.
/// Prints a header and one row; returns an exit code.
int kernel_eval_cmd(std::span<const std::string> args, std::ostream& out, std::ostream& err);

}  // namespace tqproc::runner
