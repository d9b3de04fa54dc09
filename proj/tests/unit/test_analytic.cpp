#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <vector>

#include "tqproc/analytic.hpp"
#include "tqproc/errors.hpp"

using namespace tqproc;
using namespace tqproc::analytic;

namespace {

constexpr double kPi = std::numbers::pi;

// Composite Simpson of phi(u) Phi((y - rho u) / sqrt(1 - rho^2)) over (-12, x].
double phi2_oracle(double x, double y, double rho) {
  const double lo = -12.0;
  const double hi = std::min(x, 12.0);
  if (hi <= lo) return 0.0;
  const int m = 20000;
  const double h = (hi - lo) / m;
  const double s = std::sqrt(1.0 - rho * rho);
  auto f = [&](double u) {
    return std::exp(-0.5 * u * u) / std::sqrt(2.0 * kPi) * 0.5 *
           std::erfc(-((y - rho * u) / s) / std::sqrt(2.0));
  };
  double acc = f(lo) + f(hi);
  for (int i = 1; i < m; ++i) acc += f(lo + i * h) * (i % 2 ? 4.0 : 2.0);
  return acc * h / 3.0;
}

double bisect_quantile(double alpha) {
  double lo = -40.0, hi = 40.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (0.5 * std::erfc(-mid / std::sqrt(2.0)) < alpha ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("HurstIndex rejects values outside (0, 1)") {
  CHECK_THROWS_AS(HurstIndex(0.0), DomainError);
  CHECK_THROWS_AS(HurstIndex(1.0), DomainError);
  CHECK_THROWS_AS(HurstIndex(std::nan("")), DomainError);
  CHECK(HurstIndex(0.3).value() == 0.3);
}

TEST_CASE("standard normal cdf and pdf") {
  CHECK(std_normal_cdf(0.0) == 0.5);
  CHECK(std_normal_cdf(1.959964) == doctest::Approx(0.975).epsilon(1e-6));
  CHECK(std_normal_cdf(-40.0) < 1e-300);
  CHECK(std_normal_pdf(0.0) == doctest::Approx(1.0 / std::sqrt(2.0 * kPi)));
}

TEST_CASE("normal quantile matches bisection") {
  CHECK(std_normal_quantile(0.5) == 0.0);
  CHECK(std_normal_quantile(0.975) == doctest::Approx(1.959964).epsilon(1e-6));
  CHECK(std_normal_cdf(std_normal_quantile(0.3)) == doctest::Approx(0.3).epsilon(1e-10));
  for (double a : {1e-12, 1e-8, 1e-4, 0.01, 0.1, 0.25, 0.4, 0.6, 0.9, 0.99, 1 - 1e-6}) {
    CAPTURE(a);
    CHECK(std::abs(std_normal_quantile(a) - bisect_quantile(a)) < 1e-9);
  }
  CHECK_THROWS_AS(std_normal_quantile(0.0), DomainError);
  CHECK_THROWS_AS(std_normal_quantile(1.0), DomainError);
}

TEST_CASE("bivariate normal cdf special values") {
  CHECK(bivariate_normal_cdf(0, 0, 0) == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(bivariate_normal_cdf(0, 0, 0.5) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(std::abs(bivariate_normal_cdf(0.7, 40, 0.3) - std_normal_cdf(0.7)) < 1e-10);
  CHECK(bivariate_normal_cdf(0.7, INFINITY, 0.3) == doctest::Approx(std_normal_cdf(0.7)));
  CHECK(bivariate_normal_cdf(-INFINITY, 1.0, 0.3) == 0.0);
  CHECK(bivariate_normal_cdf(0.3, -0.2, 1.0) == doctest::Approx(std_normal_cdf(-0.2)));
  CHECK(bivariate_normal_cdf(0.3, -0.2, -1.0) == doctest::Approx(std_normal_cdf(0.3) - std_normal_cdf(0.2)));
  CHECK(bivariate_normal_cdf(-0.3, -0.2, -1.0) == 0.0);
  CHECK_THROWS_AS(bivariate_normal_cdf(0, 0, 1.5), DomainError);
}

TEST_CASE("orthant identity on 201 correlations") {
  double worst = 0.0;
  for (int i = 0; i <= 200; ++i) {
    const double rho = -0.999 + 1.998 * i / 200.0;
    worst = std::max(worst, std::abs(bivariate_normal_cdf(0, 0, rho) - (0.25 + std::asin(rho) / (2 * kPi))));
  }
  CHECK(worst <= 1e-10);
}

TEST_CASE("bivariate normal cdf against Simpson oracle") {
  const double cases[][3] = {{0.3, -0.4, 0.2}, {1.5, 0.7, -0.6}, {-1.0, -1.2, 0.9},
                             {2.0, -2.0, -0.95}, {0.0, 1.0, 0.999}, {-2.5, 0.5, 0.4}};
  for (const auto& c : cases) {
    CAPTURE(c[0]);
    CAPTURE(c[1]);
    CAPTURE(c[2]);
    CHECK(std::abs(bivariate_normal_cdf(c[0], c[1], c[2]) - phi2_oracle(c[0], c[1], c[2])) < 1e-9);
  }
}

TEST_CASE("bivariate normal cdf symmetries") {
  for (double rho : {-0.8, -0.2, 0.35, 0.9}) {
    for (double x : {-1.1, 0.4}) {
      for (double y : {-0.3, 1.7}) {
        const double p = bivariate_normal_cdf(x, y, rho);
        CHECK(p == doctest::Approx(bivariate_normal_cdf(y, x, rho)).epsilon(1e-13));
        CHECK(bivariate_normal_cdf(x, y, -rho) ==
              doctest::Approx(std_normal_cdf(x) - bivariate_normal_cdf(x, -y, rho)).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("fBm marginals") {
  const HurstIndex h(0.5);
  CHECK(marginal_cdf(1, 0, HurstIndex(0.3)) == 0.5);
  CHECK(marginal_cdf(4, 2, h) == doctest::Approx(0.841345).epsilon(1e-6));
  CHECK(marginal_cdf(0, -1, h) == 0.0);
  CHECK(marginal_cdf(0, 0, h) == 1.0);
  CHECK(density_quantile(1, 0.5, h) == doctest::Approx(0.398942).epsilon(1e-6));
  CHECK(density_quantile(4, 0.5, h) == doctest::Approx(0.199471).epsilon(1e-6));
  CHECK(density_quantile(1, 1e-8, h) < 1e-7);
  CHECK(true_quantile(2.5, 0.5, HurstIndex(0.7)) == 0.0);
  CHECK(true_quantile(4, 0.975, h) == doctest::Approx(3.919928).epsilon(1e-6));
  CHECK(true_quantile(0, 0.2, h) == 0.0);
}

TEST_CASE("fBm covariance and correlation") {
  CHECK(fbm_covariance(1, 2, HurstIndex(0.5)) == doctest::Approx(1.0));
  CHECK(fbm_covariance(1, 2, HurstIndex(0.75)) == doctest::Approx(std::sqrt(2.0)));
  CHECK(fbm_covariance(1.3, 0, HurstIndex(0.3)) == 0.0);
  CHECK(fbm_correlation(1.7, 1.7, HurstIndex(0.2)) == 1.0);
  CHECK(fbm_correlation(1, 2, HurstIndex(0.5)) == doctest::Approx(1 / std::sqrt(2.0)));
  for (double H : {0.1, 0.4, 0.8}) {
    CHECK(fbm_correlation(1, 2, HurstIndex(H)) == doctest::Approx(std::pow(2.0, H - 1)));
  }
}

TEST_CASE("limit kernel G") {
  const HurstIndex h(0.5);
  CHECK(limit_kernel_G(1, 0, 1, 0, HurstIndex(0.8)).value == doctest::Approx(0.25));
  CHECK(limit_kernel_G(1, 0, 4, 0, h).value == doctest::Approx(1.0 / 12.0).epsilon(1e-12));
  CHECK(std::abs(limit_kernel_G(1, 40, 4, 0, h).value) < 1e-10);
  CHECK(limit_kernel_G(1, 0, 4, 0, h).kind == KernelKind::G);
}

TEST_CASE("limit kernel G is positive semidefinite") {
  for (double H : {0.3, 0.5, 0.75}) {
    std::vector<std::pair<double, double>> nodes;
    for (double t : {0.5, 1.0, 2.0, 3.5}) {
      for (double x : {-1.0, 0.0, 0.8}) nodes.emplace_back(t, x);
    }
    const auto n = static_cast<Eigen::Index>(nodes.size());
    Eigen::MatrixXd G(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        G(i, j) = limit_kernel_G(nodes[i].first, nodes[i].second, nodes[j].first, nodes[j].second,
                                 HurstIndex(H)).value;
      }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G);
    CHECK(es.eigenvalues().minCoeff() > -1e-12);
  }
}

TEST_CASE("quantile kernel K") {
  const HurstIndex h(0.5);
  for (double a : {0.1, 0.5, 0.8}) {
    CHECK(quantile_kernel_K(2, a, 2, a, HurstIndex(0.3), false).value == doctest::Approx(a * (1 - a)));
  }
  CHECK(quantile_kernel_K(1, 0.5, 4, 0.5, h, true).value == doctest::Approx(1.0 / 6.0).epsilon(1e-12));
  CHECK(quantile_kernel_K(0, 0.3, 2, 0.3, h, true).value == 0.0);
  CHECK(quantile_kernel_K(1, 0.5, 4, 0.5, h, true).kind == KernelKind::WeightedK);
  CHECK_THROWS_AS(quantile_kernel_K(0, 0.3, 2, 0.3, h, false), DomainError);
  CHECK_THROWS_AS(quantile_kernel_K(1, 1.0, 2, 0.3, h, true), DomainError);
}

TEST_CASE("swanson kernel") {
  CHECK(swanson_kernel(1, 1).value == doctest::Approx(kPi / 2));
  CHECK(swanson_kernel(1, 4).value == doctest::Approx(kPi / 3));
  CHECK(swanson_kernel(0, 3).value == 0.0);
  for (double t1 : {0.3, 1.0, 2.5}) {
    for (double t2 : {0.7, 3.9}) {
      CHECK(2 * kPi * quantile_kernel_K(t1, 0.5, t2, 0.5, HurstIndex(0.5), true).value ==
            doctest::Approx(swanson_kernel(t1, t2).value).epsilon(1e-12));
    }
  }
}

TEST_CASE("kernel kind names round-trip") {
  for (auto k : {KernelKind::G, KernelKind::K, KernelKind::WeightedK, KernelKind::Swanson}) {
    CHECK(kernel_kind_from_string(to_string(k)) == k);
  }
  CHECK_THROWS(kernel_kind_from_string("nope"));
}

TEST_CASE("LIL constants") {
  CHECK(lil_constants(0.25, 2, 0.7).sigma == 0.5);
  CHECK(lil_constants(0.25, 2, 0.5).sigma_kappa == doctest::Approx(std::sqrt(2.0) / 2));
  for (double k : {0.1, 0.5, 2.0}) CHECK(lil_constants(1, 1, k).sigma_kappa == 0.5);
  CHECK_THROWS_AS(lil_constants(0, 2, 0.5), DomainError);
  CHECK_THROWS_AS(lil_constants(0.5, 2, 0), DomainError);
}

TEST_CASE("modulus gauge") {
  const HurstIndex h(0.5);
  CHECK(modulus_gauge(1, HurstIndex(0.3)) == 1.0);
  CHECK(modulus_gauge(std::exp(-1.0), h) == doctest::Approx(0.606531).epsilon(1e-6));
  CHECK(modulus_gauge(0, h) == 0.0);
}

TEST_CASE("tie bound m") {
  CHECK(tie_bound_m(HurstIndex(0.5)) == 10);
  CHECK(tie_bound_m(HurstIndex(0.3)) == 16);
}

TEST_CASE("rate exponents") {
  const auto r = rate_exponents(HurstIndex(0.5), 0.5, std::nullopt);
  CHECK(r.nu0 == doctest::Approx(6));
  CHECK(r.H0 == doctest::Approx(1.5));
  CHECK(r.tau1_0 == doctest::Approx(0.03125));
  CHECK(r.tau2 == doctest::Approx(1.078125));
  CHECK(r.tau1_prime == doctest::Approx(0.5 / 23.5));
  CHECK(std::isnan(r.tau_of_alpha));
  CHECK(rate_exponents(HurstIndex(0.5), 0.5, 24.0).tau_of_alpha == doctest::Approx(0.01));
  CHECK(coupling_rate(1.0 / 32.0, 24) == doctest::Approx(0.01));
  CHECK_THROWS_AS(rate_exponents(HurstIndex(0.5), 0.5, 10.0), DomainError);
  CHECK_THROWS_AS(rate_exponents(HurstIndex(0.5), 0.5, 40.0), DomainError);
  const double tp = 0.5 / 23.5;
  CHECK(std::isfinite(rate_exponents(HurstIndex(0.5), 0.5, std::nullopt, 0.75 / tp).tau_prime_of_alpha));
  CHECK_THROWS_AS(rate_exponents(HurstIndex(0.5), 0.5, std::nullopt, 0.4 / tp), DomainError);
}

TEST_CASE("thresholds") {
  const HurstIndex h(0.5);
  CHECK(thresholds(h, {1000, 0.125, 0.0}).gamma_n == 1.0);
  CHECK(thresholds(h, {1e6, 0.125, 0.0}).gamma_n == 1.0);
  CHECK(thresholds(h, {1000, 0.125, 1.0 / 3.0}).gamma_n == doctest::Approx(0.1));
  CHECK(a_n_from_ratio(1, 0.125, 1e-2) == doctest::Approx(1e-8));
  const auto th = thresholds(h, {4096, 0.125, 0.5});
  CHECK(th.a_below_gamma);
  CHECK(th.eps_n > 0.0);
  CHECK_THROWS_AS(thresholds(h, {1000, 0.125, 1.0}), DomainError);
  CHECK_THROWS_AS(thresholds(h, {1000, 0.6, 0.0}), DomainError);
  CHECK_THROWS_AS(thresholds(h, {8, 0.125, 0.0}), DomainError);
}
