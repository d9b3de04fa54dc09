#include "tqproc/errors.hpp"
#include "tqproc/format.hpp"
#include "tqproc/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

namespace tqproc::runner {

namespace fs = std::filesystem;
using experiments::StudyResult;
using nlohmann::json;

namespace {

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t tt = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_atomic(const fs::path& path, const std::string& content) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("write to " + tmp.string() + " failed");
  }
  fs::rename(tmp, path);
}

fbm::GridSpec gen_grid(const RunConfig& c) {
  return fbm::GridSpec::uniform(c.params.T, c.params.M_t, c.include_zero);
}

StudyResult ensemble_result(const RunConfig& c, const fbm::Ensemble& ens) {
  StudyResult res;
  res.study_id = "fbm_gen";
  res.config = experiments::to_json(c.params);
  res.config["include_zero"] = c.include_zero;
  res.warnings = ens.warnings();
  const double H = c.params.H;
  json rows = json::array();
  for (std::size_t k = 0; k < ens.grid().size(); ++k) {
    const double t = ens.grid()[k];
    auto col = ens.column(k);
    auto s = experiments::summarize(ens.size(), col, "B(t=" + format_double(t) + ")");
    double ss = 0.0;
    for (double v : col) ss += v * v;
    rows.push_back({{"t", t},
                    {"second_moment", ss / static_cast<double>(col.size())},
                    {"variance_target", std::pow(t, 2.0 * H)}});
    res.summaries.push_back(std::move(s));
  }
  res.details["moments"] = rows;
  return res;
}

StudyResult kernel_result(const RunConfig& c) {
  StudyResult res;
  res.study_id = "kernel_eval";
  res.config = experiments::to_json(c.params);
  const std::string row = kernel_row(c.kernel, c.params.H);
  res.details["row"] = row;
  res.details["kind"] = std::string(analytic::to_string(c.kernel.kind));
  return res;
}

double kernel_value(const KernelRequest& r, double H) {
  using analytic::KernelKind;
  const analytic::HurstIndex h(H);
  switch (r.kind) {
    case KernelKind::G:
      return analytic::limit_kernel_G(r.t1, r.a1, r.t2, r.a2, h).value;
    case KernelKind::Swanson:
      return analytic::swanson_kernel(r.t1, r.t2).value;
    case KernelKind::K:
    case KernelKind::WeightedK: {
      const bool weighted = r.kind == KernelKind::WeightedK || r.kappa.has_value();
      if (!weighted) return analytic::quantile_kernel_K(r.t1, r.a1, r.t2, r.a2, h, false).value;
      if (!r.kappa) return analytic::quantile_kernel_K(r.t1, r.a1, r.t2, r.a2, h, true).value;
      if (r.t1 == 0.0 || r.t2 == 0.0) {
        analytic::quantile_kernel_K(r.t1, r.a1, r.t2, r.a2, h, true);
        return 0.0;
      }
      return std::pow(r.t1 * r.t2, *r.kappa) *
             analytic::quantile_kernel_K(r.t1, r.a1, r.t2, r.a2, h, false).value;
    }
  }
  throw DomainError("unknown kernel kind");
}

bool directory_has_entries(const fs::path& dir) {
  std::error_code ec;
  if (!fs::exists(dir, ec)) return false;
  if (!fs::is_directory(dir, ec)) return true;
  return fs::directory_iterator(dir, ec) != fs::directory_iterator();
}

}  // namespace

std::string kernel_row(const KernelRequest& r, double H) {
  const double value = kernel_value(r, H);
  const bool swanson = r.kind == analytic::KernelKind::Swanson;
  const std::string kind =
      r.kind == analytic::KernelKind::K && r.kappa ? "weightedK" : std::string(analytic::to_string(r.kind));
  return kind + ',' + format_double(r.t1) + ',' + format_double(swanson ? 0.5 : r.a1) + ',' +
         format_double(r.t2) + ',' + format_double(swanson ? 0.5 : r.a2) + ',' +
         format_double(value);
}

StudyResult execute(const RunConfig& c) {
  const auto& p = c.params;
  switch (c.study) {
    case StudyKind::BkRate: return experiments::bk_rate_study(p);
    case StudyKind::WeightedBkRate: return experiments::weighted_bk_rate_study(p);
    case StudyKind::KernelValidation: return experiments::kernel_validation_study(p);
    case StudyKind::Swanson: return experiments::swanson_median_study(p);
    case StudyKind::LilTrace: return experiments::lil_trace_study(p);
    case StudyKind::ClassicalBk: return experiments::classical_bk_study(p);
    case StudyKind::TailFit: return experiments::tail_fit_study(p);
    case StudyKind::Deviation: return experiments::deviation_study(p);
    case StudyKind::KernelEval: return kernel_result(c);
    case StudyKind::FbmGen: {
      const auto ens = fbm::make_ensemble(p.n, gen_grid(c), analytic::HurstIndex(p.H), p.sampler,
                                          p.master_seed, p.threads);
      return ensemble_result(c, ens);
    }
  }
  throw ConfigError("study: unsupported");
}

std::string resolve_out_dir(const RunConfig& c, const RunOptions& o) {
  if (o.out_dir && !o.out_dir->empty()) return *o.out_dir;
  if (const char* env = std::getenv("TQPROC_OUT"); env && *env) return env;
  if (!c.out_dir.empty()) return c.out_dir;
  return "tqproc_out/" + std::string(to_string(c.study));
}

RunOutcome run_study(const RunConfig& config, std::string_view config_text,
                     const RunOptions& options) {
  RunOutcome outcome;
  outcome.out_dir = resolve_out_dir(config, options);
  const fs::path dir(outcome.out_dir);
  auto log = [&](const std::string& line) {
    if (options.log) *options.log << line << '\n';
  };
  if (directory_has_entries(dir) && !options.force) {
    outcome.exit_code = 1;
    outcome.message = "output directory '" + outcome.out_dir +
                      "' already exists and is not empty; pass --force to overwrite";
    log("error: " + outcome.message);
    return outcome;
  }

  RunConfig c = config;
  if (options.threads) c.params.threads = std::max(1u, *options.threads);
  const std::string study = std::string(to_string(c.study));
  const std::string started = utc_now();
  try {
    std::optional<fbm::Ensemble> ensemble;
    StudyResult result;
    if (c.study == StudyKind::FbmGen) {
      ensemble.emplace(fbm::make_ensemble(c.params.n, gen_grid(c), analytic::HurstIndex(c.params.H),
                                          c.params.sampler, c.params.master_seed, c.params.threads));
      result = ensemble_result(c, *ensemble);
    } else {
      result = execute(c);
    }

    fs::create_directories(dir);
    auto emit = [&](const std::string& name, const std::string& content) {
      write_atomic(dir / name, content);
      outcome.files.push_back(name);
    };
    emit("result.json", experiments::to_json(result).dump(2) + "\n");
    emit("summary.csv", experiments::summary_csv(result));
    if (result.sample_field) {
      std::ostringstream os;
      empirical::write_remainder_csv(os, *result.sample_field);
      emit("remainder_field.csv", os.str());
    }
    if (result.sample_ties) {
      std::ostringstream os;
      empirical::write_tie_csv(os, *result.sample_ties);
      emit("tie_stats.csv", os.str());
    }
    if (ensemble) {
      std::ostringstream os;
      fbm::write_ensemble_csv(os, *ensemble);
      emit("ensemble.csv", os.str());
      emit("ensemble_manifest.json", fbm::ensemble_manifest(*ensemble));
    }
    if (c.study == StudyKind::KernelEval) {
      emit("kernel.csv", "kind,t1,a1,t2,a2,value\n" + result.details["row"].get<std::string>() + "\n");
    }

    json manifest;
    manifest["study"] = study;
    manifest["config_hash"] = config_hash(config_text);
    manifest["code_version"] = std::string(kVersion);
    manifest["started_at"] = started;
    manifest["finished_at"] = utc_now();
    manifest["master_seed"] = c.params.master_seed;
    manifest["threads"] = c.params.threads;
    manifest["grid"] = {{"M_t", c.params.M_t}, {"M_alpha", c.params.M_alpha}, {"T", c.params.T}};
    manifest["warnings"] = result.warnings;
    manifest["pass_flags"] = result.pass_flags;
    auto files = outcome.files;
    files.push_back("manifest.json");
    manifest["outputs"] = files;
    emit("manifest.json", manifest.dump(2) + "\n");

    for (const auto& w : result.warnings) log("warning: " + w);
    for (const auto& [flag, ok] : result.pass_flags) {
      log(std::string(ok ? "pass " : "FAIL ") + flag);
    }
    log("wrote " + std::to_string(outcome.files.size()) + " files to " + outcome.out_dir);
    const bool failed = options.check && !result.all_passed();
    outcome.exit_code = failed ? 2 : 0;
    if (failed) outcome.message = "one or more pass flags are false";
    outcome.result = std::move(result);
  } catch (const std::exception& e) {
    outcome.exit_code = 1;
    outcome.message = study + " study failed: " + e.what();
    log("error: " + outcome.message);
  }
  return outcome;
}

int kernel_eval_cmd(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
  const char* usage =
      "usage: kernel swanson t1 t2\n"
      "       kernel G t1 x1 t2 x2 H\n"
      "       kernel K t1 a1 t2 a2 H [--weighted] [--kappa k]\n";
  std::vector<std::string> pos;
  bool weighted = false;
  std::optional<double> kappa;
  auto number = [](const std::string& s) {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument("not a number: " + s);
    return v;
  };
  try {
    for (std::size_t i = 0; i < args.size(); ++i) {
      if (args[i] == "--weighted") {
        weighted = true;
      } else if (args[i] == "--kappa") {
        if (i + 1 >= args.size()) throw std::invalid_argument("--kappa needs a value");
        kappa = number(args[++i]);
      } else {
        pos.push_back(args[i]);
      }
    }
    if (pos.empty()) throw std::invalid_argument("missing kernel kind");
    KernelRequest req;
    req.kind = analytic::kernel_kind_from_string(pos[0]);
    double H = 0.5;
    if (req.kind == analytic::KernelKind::Swanson) {
      if (pos.size() != 3) throw std::invalid_argument("swanson takes t1 t2");
      req.t1 = number(pos[1]);
      req.t2 = number(pos[2]);
    } else {
      if (pos.size() != 6) throw std::invalid_argument(pos[0] + " takes t1 a1 t2 a2 H");
      req.t1 = number(pos[1]);
      req.a1 = number(pos[2]);
      req.t2 = number(pos[3]);
      req.a2 = number(pos[4]);
      H = number(pos[5]);
      if (weighted && req.kind == analytic::KernelKind::K) req.kind = analytic::KernelKind::WeightedK;
      if (kappa) {
        if (!(*kappa > 0.0)) throw std::invalid_argument("--kappa must be > 0");
        if (req.kind == analytic::KernelKind::G) throw std::invalid_argument("--kappa applies to K only");
        req.kappa = kappa;
      }
    }
    const std::string row = kernel_row(req, H);
    out << "kind,t1,a1,t2,a2,value\n" << row << '\n';
    return 0;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n' << usage;
    return 1;
  }
}

}  // namespace tqproc::runner
