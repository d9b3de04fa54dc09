#include "tqproc/errors.hpp"
#include "tqproc/fbm.hpp"
#include "tqproc/format.hpp"

#include <algorithm>
#include <cmath>

namespace tqproc::fbm {

double modulus_statistic(std::span<const double> values, const GridSpec& grid, HurstIndex H,
                         std::size_t maxlag) {
  const std::size_t M = grid.size();
  if (values.size() != M) throw DomainError("modulus_statistic: values do not match grid");
  if (M < 2) throw DomainError("modulus_statistic: grid needs at least 2 points");
  const std::size_t lag_cap = maxlag == 0 ? M - 1 : std::min(maxlag, M - 1);
  const auto t = grid.points();
  double best = 0.0;
  if (grid.is_uniform()) {
    std::vector<double> inv_gauge(lag_cap + 1, 0.0);
    for (std::size_t lag = 1; lag <= lag_cap; ++lag) {
      inv_gauge[lag] = 1.0 / analytic::modulus_gauge(t[lag] - t[0], H);
    }
    for (std::size_t i = 0; i + 1 < M; ++i) {
      const std::size_t jmax = std::min(M - 1, i + lag_cap);
      for (std::size_t j = i + 1; j <= jmax; ++j) {
        best = std::max(best, std::abs(values[j] - values[i]) * inv_gauge[j - i]);
      }
    }
    return best;
  }
  for (std::size_t i = 0; i + 1 < M; ++i) {
    const std::size_t jmax = std::min(M - 1, i + lag_cap);
    for (std::size_t j = i + 1; j <= jmax; ++j) {
      const double ratio = std::abs(values[j] - values[i]) / analytic::modulus_gauge(t[j] - t[i], H);
      best = std::max(best, ratio);
    }
  }
  return best;
}

double modulus_statistic(const FbmPath& path, std::size_t maxlag) {
  return modulus_statistic(path.values, path.grid, path.H, maxlag);
}

TailFit tail_fit(const Ensemble& ensemble, std::span<const double> levels) {
  if (levels.size() < 3) throw DataError("tail_fit needs at least 3 levels");
  for (std::size_t k = 1; k < levels.size(); ++k) {
    if (!(levels[k] > levels[k - 1])) throw DataError("tail_fit levels must be increasing");
  }
  const std::size_t n = ensemble.size();
  std::vector<double> sups(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (double v : ensemble.path(i)) s = std::max(s, std::abs(v));
    sups[i] = s;
  }
  std::sort(sups.begin(), sups.end());

  TailFit fit;
  for (double y : levels) {
    const auto above = static_cast<double>(sups.end() - std::upper_bound(sups.begin(), sups.end(), y));
    const double p = above / static_cast<double>(n);
    if (p == 0.0) {
      fit.warnings.push_back("tail_fit: dropped level " + format_double(y) +
                             " with zero empirical tail probability");
      continue;
    }
    fit.levels.push_back(y);
    fit.tail_probs.push_back(p);
  }
  if (fit.levels.size() < 3) throw DataError("tail_fit: fewer than 3 levels with positive tail mass");

  // OLS of log p on y^2.
  const std::size_t k = fit.levels.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    mx += fit.levels[i] * fit.levels[i];
    my += std::log(fit.tail_probs[i]);
  }
  mx /= static_cast<double>(k);
  my /= static_cast<double>(k);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    const double dx = fit.levels[i] * fit.levels[i] - mx;
    const double dy = std::log(fit.tail_probs[i]) - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  const double slope = sxy / sxx;
  fit.c_hat = -slope;
  fit.d_hat = std::exp(my - slope * mx);
  fit.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return fit;
}

}  // namespace tqproc::fbm
