#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "tqproc/errors.hpp"
#include "tqproc/experiments.hpp"

using namespace tqproc;
using namespace tqproc::experiments;

namespace {

std::vector<double> powers_of_two(int lo, int hi) {
  std::vector<double> ns;
  for (int k = lo; k <= hi; ++k) ns.push_back(std::ldexp(1.0, k));
  return ns;
}

// |F_n(a) + Q_n(a) - 2a| at every candidate abscissa, nudged to both sides.
double brute_bk_sup(std::vector<double> u) {
  std::sort(u.begin(), u.end());
  const double n = static_cast<double>(u.size());
  auto g = [&](double a) {
    if (!(a > 0.0 && a < 1.0)) return 0.0;
    const double F = static_cast<double>(std::upper_bound(u.begin(), u.end(), a) - u.begin()) / n;
    const auto k = static_cast<std::size_t>(std::ceil(a * n - 1e-9));
    const double Q = u[std::clamp<std::size_t>(k, 1, u.size()) - 1];
    return std::abs(F + Q - 2 * a);
  };
  double best = 0.0;
  std::vector<double> cand(u.begin(), u.end());
  for (std::size_t k = 0; k <= u.size(); ++k) cand.push_back(k / n);
  for (double a : cand) {
    for (double b : {a, std::nextafter(a, -1.0), std::nextafter(a, 2.0), a - 1e-12, a + 1e-12}) {
      best = std::max(best, g(b));
    }
  }
  return std::sqrt(n) * best;
}

StudyParams small_ladder() {
  StudyParams p;
  p.ladder = {{64, 128, 256}, 4};
  p.M_t = 17;
  p.M_alpha = 9;
  p.master_seed = 3;
  return p;
}

}  // namespace

TEST_CASE("loglog fit recovers exact power laws") {
  const auto ns = powers_of_two(8, 13);
  std::vector<double> a, b, c;
  for (double n : ns) {
    a.push_back(2.5 * std::pow(n, -0.25));
    b.push_back(0.7);
    c.push_back(std::pow(n, -0.25) * std::sqrt(std::log(n)));
  }
  const auto fa = loglog_fit(ns, a);
  CHECK(fa.slope == doctest::Approx(-0.25).epsilon(1e-12));
  CHECK(std::abs(fa.r_squared - 1.0) <= 1e-12);
  CHECK(fa.intercept == doctest::Approx(std::log(2.5)));
  CHECK(fa.stderr_slope < 1e-12);
  CHECK(fa.points.size() == 6);
  CHECK(std::abs(loglog_fit(ns, b).slope) < 1e-12);
  CHECK(std::abs(loglog_fit(ns, c).slope + 0.177) <= 0.01);
}

TEST_CASE("loglog fit standard error") {
  const std::vector<double> ns{1, std::exp(1.0), std::exp(2.0), std::exp(3.0)};
  const std::vector<double> st{std::exp(0.0), std::exp(1.2), std::exp(1.8), std::exp(3.1)};
  const auto f = loglog_fit(ns, st);
  const double sxx = 5.0;
  const double slope = (-1.5 * 0 - 0.5 * 1.2 + 0.5 * 1.8 + 1.5 * 3.1) / sxx;
  CHECK(f.slope == doctest::Approx(slope));
  double sse = 0.0;
  const double icpt = 1.525 - slope * 1.5;
  const double y[] = {0, 1.2, 1.8, 3.1};
  for (int i = 0; i < 4; ++i) sse += std::pow(y[i] - icpt - slope * i, 2);
  CHECK(f.stderr_slope == doctest::Approx(std::sqrt(sse / 2 / sxx)));
}

TEST_CASE("loglog fit rejects bad input") {
  const std::vector<double> ns{10, 20, 40};
  CHECK_THROWS_AS(loglog_fit(ns, std::vector<double>{1, 0, 2}), DataError);
  CHECK_THROWS_AS(loglog_fit(ns, std::vector<double>{1, -1, 2}), DataError);
  CHECK_THROWS_AS(loglog_fit(std::vector<double>{10, 10, 20}, std::vector<double>{1, 2, 3}), DataError);
  CHECK_THROWS_AS(loglog_fit(ns, std::vector<double>{1, 2}), DataError);
}

TEST_CASE("summaries") {
  const std::vector<double> v{1, 2, 3, 10};
  const auto s = summarize(7, v, "x");
  CHECK(s.n == 7);
  CHECK(s.mean == 4.0);
  CHECK(s.median == 2.5);
  CHECK(s.se == doctest::Approx(std::sqrt(((9 + 4 + 1 + 36) / 3.0) / 4)));
  CHECK(s.statistic == "x");
}

TEST_CASE("classical BK sup is exact") {
  std::mt19937_64 eng(5);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int n : {1, 2, 7, 50, 200}) {
    std::vector<double> u(n);
    for (auto& x : u) x = unif(eng);
    CAPTURE(n);
    CHECK(std::abs(classical_bk_sup(u) - brute_bk_sup(u)) <= 1e-9);
    CHECK(classical_bk_sup(u) >= 0.0);
  }
  CHECK_THROWS_AS(classical_bk_sup(std::vector<double>{}), DataError);
}

TEST_CASE("bk rate study is deterministic across thread counts") {
  auto p = small_ladder();
  p.gamma = 0.25;
  p.threads = 1;
  const auto a = bk_rate_study(p);
  p.threads = 4;
  const auto b = bk_rate_study(p);
  CHECK(to_json(a).dump() == to_json(b).dump());
  CHECK(summary_csv(a) == summary_csv(b));
  CHECK(a.fit.has_value());
  CHECK(a.summaries.size() == 3);
  CHECK(a.pass_flags.at("tie_bound"));
  REQUIRE(a.sample_field.has_value());
  CHECK(a.sample_field->times.front() >= 0.25);
  CHECK(a.sample_ties.has_value());
  for (const auto& s : a.summaries) CHECK(s.mean > 0.0);
  CHECK(summary_csv(a).rfind("n,mean,median,se,statistic\n64,", 0) == 0);
}

TEST_CASE("bk rate study validates eta") {
  auto p = small_ladder();
  p.eta = 1.0;
  CHECK_THROWS_AS(bk_rate_study(p), DomainError);
}

TEST_CASE("shrinking window does not lower the remainder") {
  StudyParams p;
  p.ladder = {{4096}, 3};
  p.master_seed = 1;
  p.eta = 0.0;
  const auto flat = bk_rate_study(p);
  p.eta = 1.0 / 3.0;
  const auto wide = bk_rate_study(p);
  CHECK(wide.summaries[0].mean >= flat.summaries[0].mean);
  CHECK_FALSE(flat.fit.has_value());
}

TEST_CASE("weighted study") {
  const auto r = weighted_bk_rate_study(small_ladder());
  CHECK(r.study_id == "weighted_bk_rate");
  CHECK(r.fit.has_value());
  CHECK(r.pass_flags.contains("slope_at_most_-0.08"));
  CHECK(r.sample_field->times.front() == 0.0);
  CHECK(r.ties.violations == 0);
}

TEST_CASE("kernel validation study") {
  StudyParams p;
  p.n = 100;
  p.replications = 300;
  p.T = 4;
  p.master_seed = 2;
  const auto r = kernel_validation_study(p);
  CHECK(r.details["G_pairs"].size() == 78);
  CHECK(r.details["K_pairs"].size() == 78);
  CHECK(r.pass_flags.at("tie_bound"));
  p.times = {0.5, 1.0, 3.0};
  const auto u = kernel_validation_study(p);
  CHECK(u.details["G_pairs"].size() == 45);
  CHECK_FALSE(u.warnings.empty());
  p.times = {0.0, 1.0};
  CHECK_THROWS_AS(kernel_validation_study(p), DomainError);
}

TEST_CASE("swanson study") {
  StudyParams p;
  p.n = 101;
  p.replications = 400;
  p.T = 4;
  p.H = 0.3;
  const auto r = swanson_median_study(p);
  CHECK(r.config["H"] == 0.5);
  CHECK(r.details["pairs"].size() == 36);
  CHECK(r.pass_flags.contains("var_t1_within_5pct"));
  CHECK(r.pass_flags.contains("cov_1_4_within_10pct"));
  CHECK(r.details["var_t1_relative_error"].get<double>() < 0.2);
}

TEST_CASE("lil trace study") {
  auto p = small_ladder();
  const auto r = lil_trace_study(p);
  CHECK(r.pass_flags.at("trace_bounded"));
  CHECK(r.details["sigma_kappa"] == doctest::Approx(std::sqrt(2.0) / 2));
  for (const auto& s : r.summaries) CHECK(s.mean > 0.0);
  p.ladder.ns = {8, 64};
  CHECK_THROWS_AS(lil_trace_study(p), DomainError);
}

TEST_CASE("classical BK study") {
  StudyParams p;
  p.ladder = {{1024, 2048, 4096}, 5};
  const auto r = classical_bk_study(p);
  CHECK(r.fit.has_value());
  for (const auto& s : r.summaries) CHECK(s.mean > 0.0);
  CHECK(r.details["limit_constant"] == doctest::Approx(0.8408964));
}

TEST_CASE("tail fit study") {
  StudyParams p;
  p.n = 20000;
  p.T = 1;
  const auto r = tail_fit_study(p);
  CHECK(r.pass_flags.at("c_hat_positive"));
  CHECK(r.pass_flags.at("r_squared_at_least_0.95"));
  CHECK(r.summaries.size() == 4);
}

TEST_CASE("deviation study") {
  StudyParams p;
  p.ladder = {{128, 512}, 10};
  p.M_t = 17;
  const auto r = deviation_study(p);
  CHECK(r.details["median_ratio"].get<double>() >= 1.0);
  CHECK(r.pass_flags.at("tie_bound"));
}

TEST_CASE("tie check bookkeeping") {
  TieCheck c;
  empirical::TieStats a;
  a.nodes = 3;
  a.violations = 0;
  a.max_violation = -0.2;
  a.m_bound = 10;
  empirical::TieStats b = a;
  b.nodes = 2;
  b.violations = 1;
  b.max_violation = 0.1;
  c.absorb(a);
  c.absorb(b);
  CHECK(c.nodes == 5);
  CHECK(c.violations == 1);
  CHECK(c.max_violation == 0.1);
  CHECK(c.m_bound == 10);
  StudyResult r;
  r.pass_flags["x"] = true;
  CHECK(r.all_passed());
  r.pass_flags["y"] = false;
  CHECK_FALSE(r.all_passed());
}
