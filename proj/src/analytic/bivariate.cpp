#include "tqproc/analytic.hpp"
#include "tqproc/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>

namespace tqproc::analytic {

namespace {

// QUADPACK qk15 abscissae and weights.
constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Estimate {
  double value;
  double error;
};

template <class F>
Estimate gauss_kronrod15(const F& f, double a, double b) {
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double fc = f(center);
  double kronrod = fc * kWgk[7];
  double gauss = fc * kWg[3];
  for (int j = 0; j < 7; ++j) {
    const double dx = half * kXgk[j];
    const double sum = f(center - dx) + f(center + dx);
    kronrod += kWgk[j] * sum;
    if (j % 2 == 1) gauss += kWg[j / 2] * sum;
  }
  return {kronrod * half, std::abs((kronrod - gauss) * half)};
}

template <class F>
double adaptive_integrate(const F& f, double a, double b, double tol, int depth) {
  const Estimate whole = gauss_kronrod15(f, a, b);
  if (whole.error <= tol || depth == 0) return whole.value;
  const double mid = 0.5 * (a + b);
  return adaptive_integrate(f, a, mid, 0.5 * tol, depth - 1) +
         adaptive_integrate(f, mid, b, 0.5 * tol, depth - 1);
}

constexpr double kAbsTol = 1e-13;

}  // namespace

double bivariate_normal_cdf(double x, double y, double rho) {
  if (!(rho >= -1.0 && rho <= 1.0)) {
    throw DomainError("bivariate normal correlation must satisfy |rho| <= 1, got " +
                      std::to_string(rho));
  }
  if (std::isnan(x) || std::isnan(y)) throw DomainError("bivariate normal cdf: NaN argument");
  if (x == -INFINITY || y == -INFINITY) return 0.0;
  if (x == INFINITY) return std_normal_cdf(y);
  if (y == INFINITY) return std_normal_cdf(x);

  const double px = std_normal_cdf(x);
  const double py = std_normal_cdf(y);
  if (rho == 1.0) return std::min(px, py);
  if (rho == -1.0) return std::max(0.0, px + py - 1.0);
  if (rho == 0.0) return px * py;

  // Plackett: Phi2(x,y,rho) = Phi(x)Phi(y) + int_0^rho phi2(x,y;r) dr.
  // With r = sin(theta) the integrand is
  //   exp(-(x^2 - 2xy sin(theta) + y^2) / (2 cos^2 theta)) / (2 pi),
  // bounded by 1/(2 pi) on the whole range.
  const double sum_sq = x * x + y * y;
  const double cross = 2.0 * (x * y);
  auto integrand = [sum_sq, cross](double theta) {
    const double c = std::cos(theta);
    const double c2 = c * c;
    if (c2 <= 0.0) return 0.0;
    return std::exp(-(sum_sq - cross * std::sin(theta)) / (2.0 * c2));
  };
  const double upper = std::asin(rho);
  const double integral =
      adaptive_integrate(integrand, 0.0, upper, kAbsTol * 2.0 * std::numbers::pi, 40);
  const double value = px * py + integral / (2.0 * std::numbers::pi);
  return std::clamp(value, std::max(0.0, px + py - 1.0), std::min(px, py));
}

}  // namespace tqproc::analytic
