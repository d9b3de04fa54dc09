#pragma once

// Closed-form Gaussian analytics for the time dependent empirical and
// quantile processes of fractional Brownian motion ensembles.

#include <optional>
#include <string>
#include <string_view>

namespace tqproc::analytic {

/// Hurst index, validated to lie in (0, 1).
class HurstIndex {
 public:
  explicit HurstIndex(double value);
  [[nodiscard]] double value() const noexcept { return value_; }
  friend bool operator==(HurstIndex, HurstIndex) = default;

 private:
  double value_;
};

enum class KernelKind { G, K, WeightedK, Swanson };

std::string_view to_string(KernelKind kind);
KernelKind kernel_kind_from_string(std::string_view name);

struct KernelEval {
  double value;
  KernelKind kind;
};

// Standard normal ---------------------------------------------------------

double std_normal_cdf(double x);
double std_normal_pdf(double x);
/// z with Phi(z) = alpha; throws DomainError unless 0 < alpha < 1.
double std_normal_quantile(double alpha);

/// P{Z1 <= x, Z2 <= y} for standard normals with correlation rho.
///
/// Evaluated from Plackett's identity d/drho Phi2 = phi2, integrated in
/// theta = asin(r) so the integrand stays bounded as |rho| -> 1. The
/// adaptive Gauss-Kronrod rule targets an absolute error below 1e-13.
/// rho = +-1 return the comonotone / antimonotone limits.
double bivariate_normal_cdf(double x, double y, double rho);

// fBm marginals and covariance -------------------------------------------

/// F(t, x) = Phi(x / t^H); unit step at x = 0 when t = 0.
double marginal_cdf(double t, double x, HurstIndex H);
/// Marginal density at the true quantile, t^{-H} phi(z_alpha). Requires t > 0.
double density_quantile(double t, double alpha, HurstIndex H);
/// tau_alpha(t) = t^H z_alpha.
double true_quantile(double t, double alpha, HurstIndex H);

double fbm_covariance(double s, double t, HurstIndex H);
/// Covariance normalized by s^H t^H; requires s, t > 0.
double fbm_correlation(double s, double t, HurstIndex H);

// Limit kernels ----------------------------------------------------------

/// Covariance of the limiting Gaussian process G at (s,x) and (t,y):
/// P{B(s) <= x, B(t) <= y} - F(s,x) F(t,y).
KernelEval limit_kernel_G(double s, double x, double t, double y, HurstIndex H);

/// Quantile-domain kernel G(t1, tau_{a1}(t1)) x G(t2, tau_{a2}(t2)); the
/// weighted form multiplies by t1^H t2^H and is 0 when either time is 0.
KernelEval quantile_kernel_K(double t1, double alpha1, double t2, double alpha2, HurstIndex H,
                             bool weighted);

/// Covariance of the limiting median process of Brownian motions:
/// sqrt(t1 t2) asin(min(t1,t2) / sqrt(t1 t2)).
KernelEval swanson_kernel(double t1, double t2);

struct LilConstants {
  double sigma;        // sqrt of sup variance over [gamma,T] x R, = 1/2
  double sigma_kappa;  // sqrt of sup of t^{2 kappa} G variance, = T^kappa / 2
};

LilConstants lil_constants(double gamma, double T, double kappa);

/// f_H(u) = u^H sqrt(max(1, log(1/u))), with f_H(0) = 0.
double modulus_gauge(double u, HurstIndex H);

/// Number of coincident path values that can occur with positive
/// probability is below m = 2 ceil(2/H) + 2.
int tie_bound_m(HurstIndex H);

// Exponent and threshold arithmetic --------------------------------------

struct RateExponents {
  double nu0;
  double H0;
  double tau1_0;
  double tau_of_alpha;
  double tau2;
  double tau1_prime;
  double tau_prime_of_alpha;
};

/// Strong-approximation rate exponents.
///
/// `alpha1` is the coupling parameter of the fixed-gamma approximation
/// and must lie strictly inside (1/(2 tau1_0), 1/tau1_0); `alpha2`
/// belongs to the t^kappa-weighted approximation with window
/// (1/(2 tau1'), 1/tau1'). Either may be omitted, leaving the dependent
/// exponent NaN. An out-of-window value throws DomainError naming the bound.
RateExponents rate_exponents(HurstIndex H, double kappa, std::optional<double> alpha1,
                             std::optional<double> alpha2 = std::nullopt);

/// tau(alpha) = (alpha tau1 - 1/2) / (1 + alpha); tau1 is tau1(0) or tau1'.
double coupling_rate(double tau1, double alpha_cpl);

struct ThresholdInputs {
  double n;
  double delta;
  double eta;
  double C = 1.0;
  double c1 = 1.0;
};

struct Thresholds {
  double gamma_n;
  double a_n;
  double eps_n;
  double C;
  double c1;
  double delta;
  double eta;
  bool a_below_gamma;
};

/// gamma_n = n^{-eta}, a_n = C (loglog n / n)^{1/(2 delta)},
/// eps_n = c1 gamma_n^{-H/2} (loglog n / n)^{1/4}.
Thresholds thresholds(HurstIndex H, const ThresholdInputs& in);

/// a_n(delta) evaluated from the ratio loglog n / n directly.
double a_n_from_ratio(double C, double delta, double loglog_over_n);

}  // namespace tqproc::analytic
