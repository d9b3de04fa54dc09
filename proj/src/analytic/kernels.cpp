#include "tqproc/analytic.hpp"
#include "tqproc/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace tqproc::analytic {

std::string_view to_string(KernelKind kind) {
  switch (kind) {
    case KernelKind::G: return "G";
    case KernelKind::K: return "K";
    case KernelKind::WeightedK: return "weightedK";
    case KernelKind::Swanson: return "swanson";
  }
  return "unknown";
}

KernelKind kernel_kind_from_string(std::string_view name) {
  if (name == "G") return KernelKind::G;
  if (name == "K") return KernelKind::K;
  if (name == "weightedK") return KernelKind::WeightedK;
  if (name == "swanson") return KernelKind::Swanson;
  throw DomainError("unknown kernel kind '" + std::string(name) +
                    "' (expected G, K, weightedK or swanson)");
}

namespace {

void require_nonnegative_time(double t, const char* op) {
  if (!(t >= 0.0)) throw DomainError(std::string(op) + ": time must be >= 0");
}

void require_positive_time(double t, const char* op) {
  if (!(t > 0.0)) throw DomainError(std::string(op) + ": time must be > 0");
}

}  // namespace

double marginal_cdf(double t, double x, HurstIndex H) {
  require_nonnegative_time(t, "marginal_cdf");
  if (t == 0.0) return x >= 0.0 ? 1.0 : 0.0;
  return std_normal_cdf(x / std::pow(t, H.value()));
}

double density_quantile(double t, double alpha, HurstIndex H) {
  require_positive_time(t, "density_quantile");
  const double z = std_normal_quantile(alpha);
  return std_normal_pdf(z) / std::pow(t, H.value());
}

double true_quantile(double t, double alpha, HurstIndex H) {
  require_nonnegative_time(t, "true_quantile");
  const double z = std_normal_quantile(alpha);
  return std::pow(t, H.value()) * z + 0.0;
}

double fbm_covariance(double s, double t, HurstIndex H) {
  require_nonnegative_time(s, "fbm_covariance");
  require_nonnegative_time(t, "fbm_covariance");
  const double two_h = 2.0 * H.value();
  return 0.5 * ((std::pow(s, two_h) + std::pow(t, two_h)) - std::pow(std::abs(s - t), two_h));
}

double fbm_correlation(double s, double t, HurstIndex H) {
  require_positive_time(s, "fbm_correlation");
  require_positive_time(t, "fbm_correlation");
  if (s == t) return 1.0;
  const double h = H.value();
  const double r = fbm_covariance(s, t, H) / (std::pow(s, h) * std::pow(t, h));
  return std::clamp(r, -1.0, 1.0);
}

KernelEval limit_kernel_G(double s, double x, double t, double y, HurstIndex H) {
  require_positive_time(s, "limit_kernel_G");
  require_positive_time(t, "limit_kernel_G");
  const double h = H.value();
  const double rho = fbm_correlation(s, t, H);
  const double joint = bivariate_normal_cdf(x / std::pow(s, h), y / std::pow(t, h), rho);
  return {joint - marginal_cdf(s, x, H) * marginal_cdf(t, y, H), KernelKind::G};
}

KernelEval quantile_kernel_K(double t1, double alpha1, double t2, double alpha2, HurstIndex H,
                             bool weighted) {
  const KernelKind kind = weighted ? KernelKind::WeightedK : KernelKind::K;
  if (weighted) {
    require_nonnegative_time(t1, "quantile_kernel_K");
    require_nonnegative_time(t2, "quantile_kernel_K");
    // Still validate the levels before short-circuiting on a zero weight.
    (void)std_normal_quantile(alpha1);
    (void)std_normal_quantile(alpha2);
    if (t1 == 0.0 || t2 == 0.0) return {0.0, kind};
  } else {
    require_positive_time(t1, "quantile_kernel_K");
    require_positive_time(t2, "quantile_kernel_K");
  }
  const double z1 = std_normal_quantile(alpha1);
  const double z2 = std_normal_quantile(alpha2);
  const double rho = fbm_correlation(t1, t2, H);
  double value = bivariate_normal_cdf(z1, z2, rho) - alpha1 * alpha2;
  if (weighted) value *= std::pow(t1, H.value()) * std::pow(t2, H.value());
  return {value, kind};
}

KernelEval swanson_kernel(double t1, double t2) {
  require_nonnegative_time(t1, "swanson_kernel");
  require_nonnegative_time(t2, "swanson_kernel");
  if (t1 == 0.0 || t2 == 0.0) return {0.0, KernelKind::Swanson};
  const double root = std::sqrt(t1 * t2);
  const double ratio = std::min(1.0, std::min(t1, t2) / root);
  return {root * std::asin(ratio), KernelKind::Swanson};
}

LilConstants lil_constants(double gamma, double T, double kappa) {
  if (!(gamma > 0.0 && gamma <= 1.0)) throw DomainError("lil_constants: need 0 < gamma <= 1");
  if (!(T > 0.0)) throw DomainError("lil_constants: need T > 0");
  if (!(kappa > 0.0)) throw DomainError("lil_constants: need kappa > 0");
  return {0.5, 0.5 * std::pow(T, kappa)};
}

double modulus_gauge(double u, HurstIndex H) {
  if (!(u >= 0.0)) throw DomainError("modulus_gauge: need u >= 0");
  if (u == 0.0) return 0.0;
  return std::pow(u, H.value()) * std::sqrt(std::max(1.0, -std::log(u)));
}

int tie_bound_m(HurstIndex H) { return 2 * static_cast<int>(std::ceil(2.0 / H.value())) + 2; }

}  // namespace tqproc::analytic
