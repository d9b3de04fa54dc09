#include "tqproc/errors.hpp"
#include "tqproc/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace tqproc::experiments {

RateFit loglog_fit(std::span<const double> ns, std::span<const double> stats) {
  if (ns.size() != stats.size()) throw DataError("loglog_fit: ns and stats differ in length");
  const std::set<double> distinct(ns.begin(), ns.end());
  if (distinct.size() < 3) throw DataError("loglog_fit needs at least 3 distinct n");
  RateFit fit;
  const std::size_t k = ns.size();
  for (std::size_t i = 0; i < k; ++i) {
    if (!(stats[i] > 0.0) || !std::isfinite(stats[i])) {
      throw DataError("loglog_fit: statistic at n=" + std::to_string(ns[i]) + " is not positive");
    }
    if (!(ns[i] > 0.0)) throw DataError("loglog_fit: n must be positive");
    fit.points.emplace_back(std::log(ns[i]), std::log(stats[i]));
  }
  double mx = 0.0, my = 0.0;
  for (const auto& [x, y] : fit.points) {
    mx += x;
    my += y;
  }
  mx /= static_cast<double>(k);
  my /= static_cast<double>(k);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (const auto& [x, y] : fit.points) {
    sxx += (x - mx) * (x - mx);
    sxy += (x - mx) * (y - my);
    syy += (y - my) * (y - my);
  }
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double sse = 0.0;
  for (const auto& [x, y] : fit.points) {
    const double e = y - (fit.intercept + fit.slope * x);
    sse += e * e;
  }
  fit.stderr_slope = k > 2 ? std::sqrt(sse / static_cast<double>(k - 2) / sxx) : 0.0;
  fit.r_squared = syy > 0.0 ? 1.0 - sse / syy : 1.0;
  return fit;
}

Summary summarize(std::size_t n, std::span<const double> values, std::string statistic) {
  Summary s;
  s.n = n;
  s.statistic = std::move(statistic);
  if (values.empty()) return s;
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(values.size());
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t m = sorted.size();
  s.median = m % 2 == 1 ? sorted[m / 2] : 0.5 * (sorted[m / 2 - 1] + sorted[m / 2]);
  if (m > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.se = std::sqrt(ss / static_cast<double>(m - 1) / static_cast<double>(m));
  }
  return s;
}

void TieCheck::absorb(const empirical::TieStats& ts) {
  nodes += ts.nodes;
  violations += ts.violations;
  max_violation = std::max(max_violation, ts.max_violation);
  m_bound = ts.m_bound;
}

void TieCheck::absorb(const TieCheck& other) {
  nodes += other.nodes;
  violations += other.violations;
  max_violation = std::max(max_violation, other.max_violation);
  if (other.m_bound != 0) m_bound = other.m_bound;
}

bool StudyResult::all_passed() const {
  return std::all_of(pass_flags.begin(), pass_flags.end(), [](const auto& kv) { return kv.second; });
}

}  // namespace tqproc::experiments
