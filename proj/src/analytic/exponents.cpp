#include "tqproc/analytic.hpp"
#include "tqproc/errors.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace tqproc::analytic {

double coupling_rate(double tau1, double alpha_cpl) {
  return (alpha_cpl * tau1 - 0.5) / (1.0 + alpha_cpl);
}

namespace {

void check_window(double alpha, double tau1, const char* which) {
  const double lo = 1.0 / (2.0 * tau1);
  const double hi = 1.0 / tau1;
  if (!(alpha > lo)) {
    std::ostringstream msg;
    msg << which << " coupling parameter " << alpha << " violates lower bound alpha > "
        << lo << " = 1/(2 tau1)";
    throw DomainError(msg.str());
  }
  if (!(alpha < hi)) {
    std::ostringstream msg;
    msg << which << " coupling parameter " << alpha << " violates upper bound alpha < "
        << hi << " = 1/tau1";
    throw DomainError(msg.str());
  }
}

}  // namespace

RateExponents rate_exponents(HurstIndex H, double kappa, std::optional<double> alpha1,
                             std::optional<double> alpha2) {
  if (!(kappa > 0.0)) throw DomainError("rate_exponents: need kappa > 0");
  const double h = H.value();
  RateExponents r{};
  r.nu0 = 2.0 + 2.0 / h;
  r.H0 = 1.0 + h;
  r.tau1_0 = 1.0 / (2.0 + 5.0 * r.nu0);
  r.tau2 = (19.0 * h + 25.0) / (24.0 * h + 20.0);
  r.tau1_prime = kappa / (5.0 * r.H0 + kappa * (2.0 + 5.0 * r.nu0));
  r.tau_of_alpha = std::numeric_limits<double>::quiet_NaN();
  r.tau_prime_of_alpha = std::numeric_limits<double>::quiet_NaN();
  if (alpha1) {
    check_window(*alpha1, r.tau1_0, "fixed-gamma");
    r.tau_of_alpha = coupling_rate(r.tau1_0, *alpha1);
  }
  if (alpha2) {
    check_window(*alpha2, r.tau1_prime, "kappa-weighted");
    r.tau_prime_of_alpha = coupling_rate(r.tau1_prime, *alpha2);
  }
  return r;
}

double a_n_from_ratio(double C, double delta, double loglog_over_n) {
  return C * std::pow(loglog_over_n, 1.0 / (2.0 * delta));
}

Thresholds thresholds(HurstIndex H, const ThresholdInputs& in) {
  const double h = H.value();
  if (!(in.n >= 16.0)) throw DomainError("thresholds: need n >= 16 so that loglog n > 0");
  if (!(in.delta > 0.0 && in.delta <= h)) throw DomainError("thresholds: need 0 < delta <= H");
  if (!(in.eta >= 0.0 && in.eta < 1.0 / (2.0 * h))) {
    throw DomainError("eta must satisfy 0 <= eta < 1/(2H)");
  }
  if (!(in.C > 0.0) || !(in.c1 > 0.0)) throw DomainError("thresholds: need C > 0 and c1 > 0");
  const double ratio = std::log(std::log(in.n)) / in.n;
  Thresholds th{};
  th.gamma_n = std::pow(in.n, -in.eta);
  th.a_n = a_n_from_ratio(in.C, in.delta, ratio);
  th.eps_n = in.c1 * std::pow(th.gamma_n, -h / 2.0) * std::pow(ratio, 0.25);
  th.C = in.C;
  th.c1 = in.c1;
  th.delta = in.delta;
  th.eta = in.eta;
  th.a_below_gamma = th.a_n < th.gamma_n;
  return th;
}

}  // namespace tqproc::analytic
