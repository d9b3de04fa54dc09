// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "tqproc/analytic.hpp"
#include "tqproc/experiments.hpp"
#include "tqproc/fbm.hpp"
#include "tqproc/runner.hpp"

using namespace tqproc;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Verdict {
  bool ok;
  std::string detail;
};

experiments::TieCheck g_ties;

void absorb(const experiments::StudyResult& r) { g_ties.absorb(r.ties); }

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

int run(int id, const char* name, double budget_s, const std::function<Verdict()>& body) {
  const auto start = Clock::now();
  Verdict v{false, ""};
  try {
    v = body();
  } catch (const std::exception& e) {
    v = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(Clock::now() - start).count();
  const bool in_time = secs < budget_s;
  const bool ok = v.ok && in_time;
  std::printf("%s %2d %-28s %s [%.2f s, budget %.0f s]%s\n", ok ? "PASS" : "FAIL", id, name,
              v.detail.c_str(), secs, budget_s, in_time ? "" : " over budget");
  std::fflush(stdout);
  return ok ? 0 : 1;
}

// Entrywise covariance error of an ensemble in units of its standard error,
// plus the per-entry estimate and SE for a two-sampler comparison.
struct CovTable {
  std::vector<double> est;
  std::vector<double> se;
  double max_z = 0.0;
};

CovTable cov_table(const fbm::Ensemble& ens) {
  CovTable t;
  const auto pts = ens.grid().points();
  const std::size_t M = pts.size();
  const double n = static_cast<double>(ens.size());
  for (std::size_t a = 0; a < M; ++a) {
    for (std::size_t b = a; b < M; ++b) {
      if (pts[a] == 0.0 || pts[b] == 0.0) continue;
      double ma = 0.0, mb = 0.0;
      for (std::size_t i = 0; i < ens.size(); ++i) {
        ma += ens.value(i, a);
        mb += ens.value(i, b);
      }
      ma /= n;
      mb /= n;
      double s = 0.0, ss = 0.0;
      for (std::size_t i = 0; i < ens.size(); ++i) {
        const double p = (ens.value(i, a) - ma) * (ens.value(i, b) - mb);
        s += p;
        ss += p * p;
      }
      const double mean = s / n;
      const double se = std::sqrt((ss / n - mean * mean) / n);
      const double cov = s / (n - 1.0);
      t.est.push_back(cov);
      t.se.push_back(se);
      t.max_z = std::max(t.max_z, std::abs(cov - analytic::fbm_covariance(pts[a], pts[b], ens.hurst())) / se);
    }
  }
  return t;
}

const nlohmann::json* find_pair(const nlohmann::json& pairs, const std::string& label) {
  for (const auto& p : pairs) {
    if (p["pair"] == label) return &p;
  }
  return nullptr;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

int main() {
  int failures = 0;
  std::optional<experiments::StudyResult> kernel_study;

  failures += run(1, "orthant identity", 1, [] {
    double worst = 0.0;
    for (int i = 0; i <= 200; ++i) {
      const double rho = -0.999 + 1.998 * i / 200.0;
      worst = std::max(worst, std::abs(analytic::bivariate_normal_cdf(0, 0, rho) -
                                       (0.25 + std::asin(rho) / (2 * std::numbers::pi))));
    }
    return Verdict{worst <= 1e-10, fmt("max |err| = %.3g over 201 rho (tol 1e-10)", worst)};
  });

  failures += run(2, "weighted K vs swanson", 1, [] {
    double worst = 0.0;
    const analytic::HurstIndex h(0.5);
    for (int i = 1; i <= 10; ++i) {
      for (int j = 1; j <= 10; ++j) {
        const double t1 = 0.4 * i, t2 = 0.4 * j;
        const double lhs = 2 * std::numbers::pi * analytic::quantile_kernel_K(t1, 0.5, t2, 0.5, h, true).value;
        worst = std::max(worst, std::abs(lhs - analytic::swanson_kernel(t1, t2).value));
      }
    }
    return Verdict{worst <= 1e-10, fmt("max |2 pi K_w - swanson| = %.3g on 10x10 (tol 1e-10)", worst)};
  });

  failures += run(3, "sampler fidelity", 120, [] {
    bool ok = true;
    std::string detail;
    const auto grid = fbm::GridSpec::uniform(2.0, 16, true);
    for (double H : {0.3, 0.5, 0.75}) {
      const analytic::HurstIndex h(H);
      const auto a = cov_table(fbm::make_ensemble(20000, grid, h, fbm::SamplerId::Cholesky, 301));
      const auto b = cov_table(fbm::make_ensemble(20000, grid, h, fbm::SamplerId::Circulant, 302));
      double cross = 0.0;
      for (std::size_t k = 0; k < a.est.size(); ++k) {
        cross = std::max(cross, std::abs(a.est[k] - b.est[k]) / std::hypot(a.se[k], b.se[k]));
      }
      ok = ok && a.max_z <= 4 && b.max_z <= 4 && cross <= 5;
      detail += fmt("H=%.2f z_chol=%.2f z_circ=%.2f z_diff=%.2f; ", H, a.max_z, b.max_z, cross);
    }
    return Verdict{ok, detail + "(tol 4, 4, 5)"};
  });

  failures += run(4, "empirical process variance", 300, [&] {
    experiments::StudyParams p;
    p.H = 0.5;
    p.T = 4;
    p.n = 500;
    p.replications = 4000;
    p.master_seed = 404;
    kernel_study = experiments::kernel_validation_study(p);
    absorb(*kernel_study);
    double worst = 0.0;
    int nodes = 0;
    for (const auto& e : kernel_study->details["G_pairs"]) {
      if (!e["diagonal"].get<bool>()) continue;
      ++nodes;
      worst = std::max(worst, std::abs(e["z"].get<double>()));
    }
    return Verdict{nodes == 12 && worst <= 3,
                   fmt("%.0f nodes, max |z| = %.2f vs F(1-F) (tol 3)", nodes, worst)};
  });

  failures += run(5, "limit kernel (1,0),(4,0)", 300, [&] {
    if (!kernel_study) return Verdict{false, "kernel study unavailable"};
    const auto* e = find_pair(kernel_study->details["G_pairs"], "G(1;0|4;0)");
    if (!e) return Verdict{false, "pair missing"};
    const double z = std::abs((*e)["mc_cov"].get<double>() - 1.0 / 12.0) / (*e)["se"].get<double>();
    return Verdict{z <= 3, fmt("MC cov %.5f, SE %.5f, |z| vs 1/12 = %.2f (tol 3)", (*e)["mc_cov"].get<double>(),
                               (*e)["se"].get<double>(), z)};
  });

  experiments::StudyParams bk;
  bk.H = 0.5;
  bk.T = 2;
  bk.rho = 0.1;
  bk.eta = 0.0;
  bk.gamma = 0.25;
  bk.ladder = {{256, 512, 1024, 2048, 4096, 8192}, 50};
  bk.master_seed = 707;

  failures += run(7, "BK rate slope", 1800, [&] {
    const auto r = experiments::bk_rate_study(bk);
    absorb(r);
    const double s = r.fit->slope;
    return Verdict{s >= -0.35 && s <= -0.15,
                   fmt("slope %.4f (se %.4f, r2 %.3f) in [-0.35, -0.15]", s, r.fit->stderr_slope, r.fit->r_squared)};
  });

  failures += run(8, "weighted BK rate slope", 1800, [&] {
    auto p = bk;
    p.gamma.reset();
    p.master_seed = 808;
    const auto r = experiments::weighted_bk_rate_study(p);
    absorb(r);
    const double s = r.fit->slope;
    return Verdict{s <= -0.08, fmt("slope %.4f (se %.4f) <= -0.08", s, r.fit->stderr_slope)};
  });

  failures += run(9, "swanson statistics", 600, [] {
    experiments::StudyParams p;
    p.T = 4;
    p.n = 1001;
    p.replications = 5000;
    p.master_seed = 909;
    const auto r = experiments::swanson_median_study(p);
    absorb(r);
    const double v = r.details["var_t1_relative_error"].get<double>();
    const double c = r.details["cov_1_4_relative_error"].get<double>();
    return Verdict{v <= 0.05 && c <= 0.10, fmt("rel err var(1) %.4f (tol 0.05), cov(1,4) %.4f (tol 0.10)", v, c)};
  });

  failures += run(10, "classical BK constant", 300, [] {
    experiments::StudyParams p;
    p.ladder = {{4096, 16384, 65536}, 20};
    p.master_seed = 1010;
    const auto r = experiments::classical_bk_study(p);
    const double m = r.summaries.back().mean;
    return Verdict{r.summaries.back().n == 65536 && m >= 0.4 && m <= 1.4,
                   fmt("mean at n=2^16 %.4f in [0.4, 1.4] (limit %.4f)", m, std::pow(2.0, -0.25))};
  });

  failures += run(11, "quantile deviation bounded", 600, [] {
    bool ok = true;
    std::string detail;
    for (double frac : {1.0 / 8.0, 1.0 / 4.0}) {
      experiments::StudyParams p;
      p.H = 0.5;
      p.delta = 0.5 * frac;
      p.rho = 0.1;
      p.T = 2;
      p.ladder = {{512, 4096}, 200};
      p.master_seed = 1111;
      const auto r = experiments::deviation_study(p);
      absorb(r);
      const double ratio = std::max(r.summaries[0].median, r.summaries[1].median) /
                           std::min(r.summaries[0].median, r.summaries[1].median);
      ok = ok && ratio < 3;
      detail += fmt("delta=H/%.0f medians %.3f, %.3f ratio %.3f; ", 1 / frac, r.summaries[0].median,
                    r.summaries[1].median, ratio);
    }
    return Verdict{ok, detail + "(tol < 3)"};
  });

  failures += run(12, "sup-norm Gaussian tail", 120, [] {
    experiments::StudyParams p;
    p.H = 0.5;
    p.T = 1;
    p.n = 100000;
    p.master_seed = 1212;
    const auto r = experiments::tail_fit_study(p);
    absorb(r);
    const double r2 = r.details["r_squared"].get<double>();
    const double c = r.details["c_hat"].get<double>();
    return Verdict{r2 >= 0.95 && c > 0, fmt("r2 %.4f (>= 0.95), c_hat %.4f (> 0)", r2, c)};
  });

  failures += run(13, "determinism across threads", 600, [] {
    const std::vector<std::string> configs{
        R"({"study":"bk_rate","gamma":0.25,"ladder":{"ns":[128,256,512],"replications":6},"master_seed":13})",
        R"({"study":"weighted_bk_rate","ladder":{"ns":[128,256,512],"replications":6},"master_seed":13})",
        R"({"study":"kernel_validation","n":200,"replications":200,"master_seed":13})",
        R"({"study":"swanson","n":101,"replications":300,"master_seed":13})",
        R"({"study":"lil_trace","ladder":{"ns":[128,256,512],"replications":6},"master_seed":13})",
        R"({"study":"classical_bk","ladder":{"ns":[1024,2048,4096],"replications":6},"master_seed":13})",
        R"({"study":"tail_fit","n":5000,"T":1,"master_seed":13})",
        R"({"study":"deviation","ladder":{"ns":[128,512],"replications":6},"master_seed":13})",
        R"({"study":"fbm_gen","n":20,"M_t":16,"master_seed":13})"};
    const fs::path root = fs::temp_directory_path() / "tqproc_acceptance_det";
    std::size_t compared = 0;
    std::string mismatch;
    for (std::size_t i = 0; i < configs.size(); ++i) {
      const auto cfg = runner::parse_config(configs[i]);
      std::vector<fs::path> dirs;
      for (unsigned threads : {1u, 8u, 1u}) {
        const fs::path d = root / (std::to_string(i) + "_" + std::to_string(dirs.size()));
        fs::remove_all(d);
        runner::RunOptions o;
        o.threads = threads;
        o.out_dir = d.string();
        const auto out = runner::run_study(cfg, configs[i], o);
        if (out.exit_code != 0) throw std::runtime_error(out.message);
        if (out.result) g_ties.absorb(out.result->ties);
        dirs.push_back(d);
        for (const auto& f : out.files) {
          if (f == "manifest.json" || dirs.size() == 1) continue;
          ++compared;
          if (slurp(dirs.front() / f) != slurp(d / f)) mismatch += std::string(runner::to_string(cfg.study)) + "/" + f + " ";
        }
      }
    }
    fs::remove_all(root);
    return Verdict{mismatch.empty() && compared > 0,
                   fmt("%.0f file pairs byte-compared over 9 studies at 1/8/1 threads", compared) +
                       (mismatch.empty() ? "" : "; differ: " + mismatch)};
  });

  failures += run(6, "tie bound across studies", 1, [] {
    const bool ok = g_ties.nodes > 0 && g_ties.violations == 0;
    return Verdict{ok, fmt("%.0f nodes, %.0f violations, max gap - m/n = %.3g", static_cast<double>(g_ties.nodes),
                           static_cast<double>(g_ties.violations), g_ties.max_violation)};
  });

  std::printf("%s: %d of 13 criteria failed\n", failures ? "FAIL" : "PASS", failures);
  return failures ? 1 : 0;
}
