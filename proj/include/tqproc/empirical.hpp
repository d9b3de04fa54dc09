#pragma once

// Time dependent empirical distribution, empirical and quantile processes,
// tie statistics and Bahadur-Kiefer remainder fields of an fBm ensemble.

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "tqproc/fbm.hpp"

namespace tqproc::empirical {

using analytic::HurstIndex;
using fbm::Ensemble;

/// Increasing quantile levels inside [rho, 1 - rho], 0 < rho < 1/2.
struct LevelGrid {
  double rho;
  std::vector<double> levels;

  /// `count` equally spaced levels from rho to 1 - rho (count >= 2), or the
  /// single level 1/2 when count == 1.
  static LevelGrid uniform(double rho, std::size_t count);
  static LevelGrid from_levels(double rho, std::vector<double> levels);
};

/// Rank ceil(alpha n) of the empirical alpha-quantile, guarded so that
/// alpha n within 1e-9 above an integer rounds down to it.
std::size_t quantile_rank(double alpha, std::size_t n);

/// Fraction of sorted values <= x.
double empirical_cdf_sorted(std::span<const double> sorted, double x);
/// The quantile_rank(alpha, n)-th smallest value.
double empirical_quantile_sorted(std::span<const double> sorted, double alpha);

/// Per-time sorted copies of an ensemble, shared by every statistic below.
class SortedSlices {
 public:
  explicit SortedSlices(const Ensemble& ensemble);

  [[nodiscard]] std::size_t n() const noexcept { return n_; }
  [[nodiscard]] HurstIndex hurst() const noexcept { return H_; }
  [[nodiscard]] const fbm::GridSpec& grid() const noexcept { return grid_; }
  [[nodiscard]] std::span<const double> sorted(std::size_t k) const;
  /// Sorted values at grid time t; DomainError if t is off the grid.
  [[nodiscard]] std::span<const double> at(double t) const { return sorted(grid_.index_of(t)); }

 private:
  std::size_t n_;
  HurstIndex H_;
  fbm::GridSpec grid_;
  std::vector<double> values_;  // time-major, each column sorted
};

// Pointwise statistics ------------------------------------------------------

double empirical_cdf(const Ensemble& ensemble, double t, double x);
/// sqrt(n) (F_n(t,x) - F(t,x)); requires t > 0.
double empirical_process(const Ensemble& ensemble, double t, double x);
double empirical_quantile(const Ensemble& ensemble, double t, double alpha);
/// sqrt(n) (tau^n_alpha(t) - tau_alpha(t)).
double quantile_process(const Ensemble& ensemble, double t, double alpha);

double empirical_cdf(const SortedSlices& slices, double t, double x);
double empirical_process(const SortedSlices& slices, double t, double x);
double empirical_quantile(const SortedSlices& slices, double t, double alpha);
double quantile_process(const SortedSlices& slices, double t, double alpha);

// Surfaces over (t, alpha) grids ------------------------------------------------

/// Matrices are time-major: entry (i, j) at i * levels.size() + j.
struct QuantileSurface {
  std::vector<double> times;
  std::vector<double> levels;
  std::vector<double> tau_n;
  std::vector<double> tau;
  std::vector<double> u_n;
};

QuantileSurface quantile_surface(const SortedSlices& slices, std::span<const double> times,
                                 const LevelGrid& levels);

struct TieStats {
  std::vector<double> times;
  std::vector<double> levels;
  std::vector<double> delta_n;  // sqrt(n) (F_n(t, tau^n) - alpha)
  int m_bound = 0;
  double max_upper_gap = 0.0;   // max of (F_n(t,tau^n) - alpha) - m/n
  double max_lower_gap = 0.0;   // max of alpha - F_n(t,tau^n), rank-guarded
  double max_violation = 0.0;   // max of the two; <= 0 when the bound holds
  std::size_t violations = 0;
  std::size_t nodes = 0;
};

TieStats tie_stats(const SortedSlices& slices, std::span<const double> times,
                   const LevelGrid& levels);
TieStats tie_stats(const Ensemble& ensemble, std::span<const double> times,
                   const LevelGrid& levels);

struct RemainderField {
  std::vector<double> times;
  std::vector<double> levels;
  std::vector<double> values;  // time-major
  double sup_norm = 0.0;
  double gamma = 0.0;
  double T = 0.0;
  double rho = 0.0;
  bool weighted = false;
};

/// Bahadur-Kiefer remainder at every (t, alpha) node.
///
/// Unweighted: v_n(t, tau_alpha(t)) + f(t, tau_alpha(t)) u_n(t, alpha),
/// all times must be > 0. Weighted: t^H v_n + phi(z_alpha) u_n, which is 0
/// at t = 0. `gamma` only records the lower edge of the time domain.
RemainderField bk_remainder_field(const SortedSlices& slices, std::span<const double> times,
                                  const LevelGrid& levels, bool weighted, double gamma);
RemainderField bk_remainder_field(const Ensemble& ensemble, std::span<const double> times,
                                  const LevelGrid& levels, bool weighted, double gamma);

/// max over grid times t <= T and all x of t^kappa |v_n(t, x)|, exact in x
/// (a Kolmogorov-Smirnov scan of each sorted column).
double weighted_sup_empirical(const SortedSlices& slices, double kappa, double T);
double weighted_sup_empirical(const Ensemble& ensemble, double kappa, double T);

/// sup over levels and grid times in (a_n, T] of
/// t^{-(H - delta)} |tau^n - tau| sqrt(n) / sqrt(loglog n).
double quantile_deviation_stat(const SortedSlices& slices, const LevelGrid& levels, double delta,
                               double T, double a_n);

// Export ------------------------------------------------------------------

/// CSV `t,alpha,R_n`.
void write_remainder_csv(std::ostream& out, const RemainderField& field);
/// CSV `t,alpha,delta_n`.
void write_tie_csv(std::ostream& out, const TieStats& ties);

/// Grid times within [lo, hi].
std::vector<double> times_in(const fbm::GridSpec& grid, double lo, double hi);

}  // namespace tqproc::empirical
