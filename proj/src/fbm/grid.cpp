#include "tqproc/errors.hpp"
#include "tqproc/fbm.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace tqproc::fbm {

std::string_view to_string(SamplerId id) {
  return id == SamplerId::Cholesky ? "cholesky" : "circulant";
}

SamplerId sampler_id_from_string(std::string_view name) {
  if (name == "cholesky") return SamplerId::Cholesky;
  if (name == "circulant") return SamplerId::Circulant;
  throw DomainError("unknown sampler '" + std::string(name) + "' (expected cholesky or circulant)");
}

GridSpec GridSpec::uniform(double T, std::size_t M, bool include_zero) {
  if (!(T > 0.0)) throw DomainError("grid horizon T must be > 0");
  if (M == 0) throw DomainError("grid must have at least one point");
  if (include_zero && M < 2) throw DomainError("a grid including 0 needs at least 2 points");
  std::vector<double> pts(M);
  for (std::size_t k = 0; k < M; ++k) {
    pts[k] = include_zero ? T * static_cast<double>(k) / static_cast<double>(M - 1)
                          : T * static_cast<double>(k + 1) / static_cast<double>(M);
  }
  pts.back() = T;
  return GridSpec(T, std::move(pts), true);
}

GridSpec GridSpec::from_points(std::vector<double> points, double T) {
  if (points.empty()) throw DomainError("grid must have at least one point");
  for (std::size_t k = 0; k < points.size(); ++k) {
    if (!std::isfinite(points[k]) || points[k] < 0.0 || points[k] > T) {
      throw DomainError("grid point " + std::to_string(points[k]) + " outside [0, T]");
    }
    if (k > 0 && !(points[k] > points[k - 1])) {
      throw DomainError("grid points must be strictly increasing");
    }
  }
  // Uniform means t_k = (k + offset) * step with offset 0 when the grid
  // starts at 0 and 1 otherwise, so increments start at B(0) = 0 either way.
  const bool zero = points[0] == 0.0;
  bool uniform = !(zero && points.size() < 2);
  if (uniform) {
    const double step = zero ? points[1] : points[0];
    const double offset = zero ? 0.0 : 1.0;
    const double tol = 1e-12 * std::max(1.0, points.back());
    for (std::size_t k = 0; k < points.size() && uniform; ++k) {
      uniform = std::abs(points[k] - (static_cast<double>(k) + offset) * step) <= tol;
    }
  }
  return GridSpec(T, std::move(points), uniform);
}

double GridSpec::step() const {
  if (!uniform_) throw DomainError("grid is not uniform");
  return includes_zero() ? points_[1] - points_[0] : points_[0];
}

std::size_t GridSpec::index_of(double t) const {
  const auto it = std::lower_bound(points_.begin(), points_.end(), t);
  if (it == points_.end() || *it != t) {
    throw DomainError("time " + std::to_string(t) + " is not a grid point");
  }
  return static_cast<std::size_t>(it - points_.begin());
}

}  // namespace tqproc::fbm
