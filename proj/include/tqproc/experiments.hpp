#pragma once

// Monte Carlo studies of the time dependent Bahadur-Kiefer representation,
// the limit kernels and the LIL normalizations, plus the log-log rate fit.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "tqproc/empirical.hpp"
#include "tqproc/fbm.hpp"

namespace tqproc::experiments {

struct NLadder {
  std::vector<std::size_t> ns;
  std::size_t replications = 1;
};

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double stderr_slope = 0.0;
  double r_squared = 0.0;
  std::vector<std::pair<double, double>> points;  // (log n, log statistic)
};

/// OLS of log(stat) on log(n). Needs >= 3 distinct n and stats > 0.
RateFit loglog_fit(std::span<const double> ns, std::span<const double> stats);

struct Summary {
  std::size_t n = 0;
  double mean = 0.0;
  double median = 0.0;
  double se = 0.0;
  std::string statistic;
};

/// Mean, median and standard error of the mean of a replication sample.
Summary summarize(std::size_t n, std::span<const double> values, std::string statistic);

/// Tie-bound bookkeeping, 0 <= F_n(t, tau^n) - alpha <= m/n, over all replications.
struct TieCheck {
  std::size_t nodes = 0;
  std::size_t violations = 0;
  double max_violation = -INFINITY;
  int m_bound = 0;

  void absorb(const empirical::TieStats& ts);
  void absorb(const TieCheck& other);
};

struct StudyResult {
  std::string study_id;
  nlohmann::json config;
  std::vector<Summary> summaries;
  std::optional<RateFit> fit;
  std::map<std::string, bool> pass_flags;
  TieCheck ties;
  nlohmann::json details = nlohmann::json::object();
  std::vector<std::string> warnings;
  // Remainder field and tie statistics of replication 0 at the largest n.
  std::optional<empirical::RemainderField> sample_field;
  std::optional<empirical::TieStats> sample_ties;

  [[nodiscard]] bool all_passed() const;
};

/// Every numeric parameter any study reads. Defaults are desk-scale.
struct StudyParams {
  double H = 0.5;
  double T = 2.0;
  double rho = 0.1;
  double eta = 0.0;
  std::optional<double> gamma;  // constant gamma_n override
  double kappa = 0.5;
  double delta = 0.125;
  double C = 1.0;
  double c1 = 1.0;
  NLadder ladder{{256, 512, 1024, 2048, 4096, 8192}, 50};
  std::size_t n = 500;             // single-n studies
  std::size_t replications = 4000;  // single-n studies
  std::size_t M_t = 64;
  std::size_t M_alpha = 21;
  fbm::SamplerId sampler = fbm::SamplerId::Circulant;
  std::uint64_t master_seed = 0;
  unsigned threads = 1;
  std::vector<double> times;        // swanson / kernel validation node times
  std::vector<double> xs{-1.0, 0.0, 1.0};
  std::vector<double> alphas{0.25, 0.5, 0.75};
  std::vector<double> tail_levels{1.5, 2.0, 2.5, 3.0};
};

/// gamma_n used by the unweighted study at sample size n.
double study_gamma(const StudyParams& p, std::size_t n);

/// Sup of the unweighted remainder over [gamma_n, T] x [rho, 1 - rho].
StudyResult bk_rate_study(const StudyParams& p);
/// Sup of the t^H-weighted remainder over [0, T] x [rho, 1 - rho].
StudyResult weighted_bk_rate_study(const StudyParams& p);
/// Monte Carlo covariances of v_n and f u_n against G and K.
StudyResult kernel_validation_study(const StudyParams& p);
/// Brownian median process sqrt(n) M_n(t) against the arcsine kernel.
StudyResult swanson_median_study(const StudyParams& p);
/// sup t^kappa |v_n| / sqrt(2 loglog n) along the ladder.
StudyResult lil_trace_study(const StudyParams& p);
/// Classical uniform Bahadur-Kiefer statistic against 2^{-1/4}.
StudyResult classical_bk_study(const StudyParams& p);
/// Sup-norm tail fit of one large ensemble.
StudyResult tail_fit_study(const StudyParams& p);
/// quantile_deviation_stat medians along the ladder.
StudyResult deviation_study(const StudyParams& p);

/// sup over alpha in (0,1) of |v_n(alpha) + u_n(alpha)| for a uniform sample,
/// computed exactly over all breakpoints.
double classical_bk_sup(std::span<const double> uniforms);

nlohmann::json to_json(const StudyParams& p);
nlohmann::json to_json(const StudyResult& r);
/// CSV `n,mean,median,se,statistic`.
std::string summary_csv(const StudyResult& r);

}  // namespace tqproc::experiments
