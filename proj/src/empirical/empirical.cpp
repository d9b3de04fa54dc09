#include "tqproc/empirical.hpp"
#include "tqproc/errors.hpp"
#include "tqproc/format.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>

namespace tqproc::empirical {

namespace {

constexpr double kRankGuard = 1e-9;

double root_n(std::size_t n) { return std::sqrt(static_cast<double>(n)); }

void check_rho(double rho) {
  if (!(rho > 0.0 && rho < 0.5)) throw DomainError("level grid needs 0 < rho < 1/2");
}

}  // namespace

LevelGrid LevelGrid::uniform(double rho, std::size_t count) {
  check_rho(rho);
  if (count == 0) throw DomainError("level grid needs at least one level");
  if (count == 1) return {rho, {0.5}};
  std::vector<double> levels(count);
  const double span = 1.0 - 2.0 * rho;
  for (std::size_t j = 0; j < count; ++j) {
    levels[j] = rho + span * static_cast<double>(j) / static_cast<double>(count - 1);
  }
  levels.back() = 1.0 - rho;
  return {rho, std::move(levels)};
}

LevelGrid LevelGrid::from_levels(double rho, std::vector<double> levels) {
  check_rho(rho);
  if (levels.empty()) throw DomainError("level grid needs at least one level");
  for (std::size_t j = 0; j < levels.size(); ++j) {
    if (levels[j] < rho || levels[j] > 1.0 - rho) {
      throw DomainError("level " + format_double(levels[j]) + " outside [rho, 1 - rho]");
    }
    if (j > 0 && !(levels[j] > levels[j - 1])) {
      throw DomainError("levels must be strictly increasing");
    }
  }
  return {rho, std::move(levels)};
}

std::size_t quantile_rank(double alpha, std::size_t n) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("quantile level must lie in (0, 1)");
  if (n == 0) throw DomainError("quantile of an empty sample");
  const double r = std::ceil(alpha * static_cast<double>(n) - kRankGuard);
  return std::clamp<std::size_t>(static_cast<std::size_t>(std::max(1.0, r)), 1, n);
}

double empirical_cdf_sorted(std::span<const double> sorted, double x) {
  const auto count = std::upper_bound(sorted.begin(), sorted.end(), x) - sorted.begin();
  return static_cast<double>(count) / static_cast<double>(sorted.size());
}

double empirical_quantile_sorted(std::span<const double> sorted, double alpha) {
  return sorted[quantile_rank(alpha, sorted.size()) - 1];
}

SortedSlices::SortedSlices(const Ensemble& ensemble)
    : n_(ensemble.size()), H_(ensemble.hurst()), grid_(ensemble.grid()) {
  const std::size_t M = grid_.size();
  values_.resize(n_ * M);
  const auto data = ensemble.data();
  for (std::size_t k = 0; k < M; ++k) {
    double* col = values_.data() + k * n_;
    for (std::size_t i = 0; i < n_; ++i) col[i] = data[i * M + k];
    std::sort(col, col + n_);
  }
}

std::span<const double> SortedSlices::sorted(std::size_t k) const {
  if (k >= grid_.size()) throw DomainError("grid index out of range");
  return std::span<const double>(values_).subspan(k * n_, n_);
}

double empirical_cdf(const SortedSlices& s, double t, double x) {
  return empirical_cdf_sorted(s.at(t), x);
}

double empirical_process(const SortedSlices& s, double t, double x) {
  if (!(t > 0.0)) throw DomainError("empirical_process requires t > 0");
  return root_n(s.n()) * (empirical_cdf(s, t, x) - analytic::marginal_cdf(t, x, s.hurst()));
}

double empirical_quantile(const SortedSlices& s, double t, double alpha) {
  return empirical_quantile_sorted(s.at(t), alpha);
}

double quantile_process(const SortedSlices& s, double t, double alpha) {
  return root_n(s.n()) *
         (empirical_quantile(s, t, alpha) - analytic::true_quantile(t, alpha, s.hurst()));
}

double empirical_cdf(const Ensemble& e, double t, double x) { return empirical_cdf(SortedSlices(e), t, x); }
double empirical_process(const Ensemble& e, double t, double x) {
  return empirical_process(SortedSlices(e), t, x);
}
double empirical_quantile(const Ensemble& e, double t, double alpha) {
  return empirical_quantile(SortedSlices(e), t, alpha);
}
double quantile_process(const Ensemble& e, double t, double alpha) {
  return quantile_process(SortedSlices(e), t, alpha);
}

QuantileSurface quantile_surface(const SortedSlices& s, std::span<const double> times,
                                 const LevelGrid& levels) {
  QuantileSurface q;
  q.times.assign(times.begin(), times.end());
  q.levels = levels.levels;
  const std::size_t L = levels.levels.size();
  q.tau_n.resize(times.size() * L);
  q.tau.resize(times.size() * L);
  q.u_n.resize(times.size() * L);
  const double rn = root_n(s.n());
  for (std::size_t i = 0; i < times.size(); ++i) {
    const auto col = s.at(times[i]);
    for (std::size_t j = 0; j < L; ++j) {
      const double a = levels.levels[j];
      const std::size_t idx = i * L + j;
      q.tau_n[idx] = empirical_quantile_sorted(col, a);
      q.tau[idx] = analytic::true_quantile(times[i], a, s.hurst());
      q.u_n[idx] = rn * (q.tau_n[idx] - q.tau[idx]);
    }
  }
  return q;
}

TieStats tie_stats(const SortedSlices& s, std::span<const double> times, const LevelGrid& levels) {
  TieStats ts;
  ts.times.assign(times.begin(), times.end());
  ts.levels = levels.levels;
  ts.m_bound = analytic::tie_bound_m(s.hurst());
  const std::size_t L = levels.levels.size();
  const double n = static_cast<double>(s.n());
  const double rn = std::sqrt(n);
  const double m = static_cast<double>(ts.m_bound);
  ts.delta_n.resize(times.size() * L);
  ts.max_upper_gap = -INFINITY;
  ts.max_lower_gap = -INFINITY;
  for (std::size_t i = 0; i < times.size(); ++i) {
    const auto col = s.at(times[i]);
    for (std::size_t j = 0; j < L; ++j) {
      const double a = levels.levels[j];
      const double tau_n = empirical_quantile_sorted(col, a);
      const auto count =
          static_cast<double>(std::upper_bound(col.begin(), col.end(), tau_n) - col.begin());
      const double gap = count / n - a;
      ts.delta_n[i * L + j] = rn * gap;
      const double upper = (count - a * n - m) / n;
      const double lower = (a * n - count) / n;
      ts.max_upper_gap = std::max(ts.max_upper_gap, upper);
      ts.max_lower_gap = std::max(ts.max_lower_gap, lower);
      // The lower side uses the same guard as quantile_rank.
      if (upper > 0.0 || a * n - count > kRankGuard) ++ts.violations;
      ++ts.nodes;
    }
  }
  ts.max_violation = std::max(ts.max_upper_gap, ts.max_lower_gap - kRankGuard / n);
  return ts;
}

TieStats tie_stats(const Ensemble& e, std::span<const double> times, const LevelGrid& levels) {
  return tie_stats(SortedSlices(e), times, levels);
}

RemainderField bk_remainder_field(const SortedSlices& s, std::span<const double> times,
                                  const LevelGrid& levels, bool weighted, double gamma) {
  RemainderField f;
  f.times.assign(times.begin(), times.end());
  f.levels = levels.levels;
  f.gamma = gamma;
  f.T = s.grid().horizon();
  f.rho = levels.rho;
  f.weighted = weighted;
  const std::size_t L = levels.levels.size();
  f.values.resize(times.size() * L);
  const double n = static_cast<double>(s.n());
  const double rn = std::sqrt(n);
  const double h = s.hurst().value();

  std::vector<double> z(L), phi(L);
  for (std::size_t j = 0; j < L; ++j) {
    z[j] = analytic::std_normal_quantile(levels.levels[j]);
    phi[j] = analytic::std_normal_pdf(z[j]);
  }
  for (std::size_t i = 0; i < times.size(); ++i) {
    const double t = times[i];
    if (t == 0.0) {
      if (!weighted) throw DomainError("unweighted remainder requires t > 0");
      continue;  // weight and u_n both vanish at the anchored time 0
    }
    if (!(t > 0.0)) throw DomainError("remainder field times must be >= 0");
    const auto col = s.at(t);
    const double th = std::pow(t, h);
    for (std::size_t j = 0; j < L; ++j) {
      const double a = levels.levels[j];
      const double tau = th * z[j];
      const double v = rn * (empirical_cdf_sorted(col, tau) - a);
      const double u = rn * (empirical_quantile_sorted(col, a) - tau);
      const double r = weighted ? th * v + phi[j] * u : v + (phi[j] / th) * u;
      f.values[i * L + j] = r;
      f.sup_norm = std::max(f.sup_norm, std::abs(r));
    }
  }
  return f;
}

RemainderField bk_remainder_field(const Ensemble& e, std::span<const double> times,
                                  const LevelGrid& levels, bool weighted, double gamma) {
  return bk_remainder_field(SortedSlices(e), times, levels, weighted, gamma);
}

double weighted_sup_empirical(const SortedSlices& s, double kappa, double T) {
  if (!(kappa > 0.0)) throw DomainError("weighted_sup_empirical requires kappa > 0");
  const double n = static_cast<double>(s.n());
  const auto& grid = s.grid();
  double best = 0.0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double t = grid[k];
    if (t > T) break;
    if (t == 0.0) continue;  // F_n(0, .) = F(0, .) for anchored paths
    const auto col = s.sorted(k);
    const double th = std::pow(t, s.hurst().value());
    double d = 0.0;
    for (std::size_t i = 0; i < col.size(); ++i) {
      const double F = analytic::std_normal_cdf(col[i] / th);
      const double above = static_cast<double>(i + 1) / n - F;
      const double below = F - static_cast<double>(i) / n;
      d = std::max(d, std::max(above, below));
    }
    best = std::max(best, std::pow(t, kappa) * std::sqrt(n) * d);
  }
  return best;
}

double weighted_sup_empirical(const Ensemble& e, double kappa, double T) {
  return weighted_sup_empirical(SortedSlices(e), kappa, T);
}

double quantile_deviation_stat(const SortedSlices& s, const LevelGrid& levels, double delta,
                               double T, double a_n) {
  const double h = s.hurst().value();
  if (!(delta > 0.0 && delta <= h)) throw DomainError("quantile_deviation_stat needs 0 < delta <= H");
  if (!(a_n < T)) throw DomainError("quantile_deviation_stat: empty time window (a_n >= T)");
  const double n = static_cast<double>(s.n());
  if (!(n >= 16.0)) throw DomainError("quantile_deviation_stat needs n >= 16");
  const double scale = std::sqrt(n) / std::sqrt(std::log(std::log(n)));
  const auto& grid = s.grid();
  double best = 0.0;
  bool any = false;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double t = grid[k];
    if (!(t > a_n) || t > T || t == 0.0) continue;
    any = true;
    const auto col = s.sorted(k);
    const double weight = std::pow(t, -(h - delta));
    for (double a : levels.levels) {
      const double dev = std::abs(empirical_quantile_sorted(col, a) -
                                  analytic::true_quantile(t, a, s.hurst()));
      best = std::max(best, weight * dev * scale);
    }
  }
  if (!any) throw DomainError("quantile_deviation_stat: no grid times in (a_n, T]");
  return best;
}

void write_remainder_csv(std::ostream& out, const RemainderField& field) {
  out << "t,alpha,R_n\n";
  const std::size_t L = field.levels.size();
  for (std::size_t i = 0; i < field.times.size(); ++i) {
    for (std::size_t j = 0; j < L; ++j) {
      out << format_double(field.times[i]) << ',' << format_double(field.levels[j]) << ','
          << format_double(field.values[i * L + j]) << '\n';
    }
  }
}

void write_tie_csv(std::ostream& out, const TieStats& ties) {
  out << "t,alpha,delta_n\n";
  const std::size_t L = ties.levels.size();
  for (std::size_t i = 0; i < ties.times.size(); ++i) {
    for (std::size_t j = 0; j < L; ++j) {
      out << format_double(ties.times[i]) << ',' << format_double(ties.levels[j]) << ','
          << format_double(ties.delta_n[i * L + j]) << '\n';
    }
  }
}

std::vector<double> times_in(const fbm::GridSpec& grid, double lo, double hi) {
  std::vector<double> out;
  for (double t : grid.points()) {
    if (t >= lo && t <= hi) out.push_back(t);
  }
  return out;
}

}  // namespace tqproc::empirical
