#include "tqproc/errors.hpp"
#include "tqproc/fbm.hpp"
#include "tqproc/format.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <mutex>
#include <random>
#include <sstream>
#include <tuple>

namespace tqproc::fbm {

namespace {

// FFTW planning is not thread-safe; execution with the new-array API is.
std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

std::vector<double> covariance_matrix(std::span<const double> times, HurstIndex H) {
  const std::size_t d = times.size();
  std::vector<double> cov(d * d);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      const double c = analytic::fbm_covariance(times[i], times[j], H);
      cov[i * d + j] = c;
      cov[j * d + i] = c;
    }
  }
  return cov;
}

struct CholeskyResult {
  bool ok;
  double smallest_pivot;
  std::vector<double> packed;
};

// Packed row-major lower factor: row i occupies [i(i+1)/2, i(i+1)/2 + i].
CholeskyResult cholesky_packed(const std::vector<double>& cov, std::size_t d, double jitter) {
  CholeskyResult r{true, INFINITY, std::vector<double>(d * (d + 1) / 2)};
  auto L = [&](std::size_t i, std::size_t j) -> double& { return r.packed[i * (i + 1) / 2 + j]; };
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double sum = cov[i * d + j];
      if (i == j) sum += jitter;
      for (std::size_t k = 0; k < j; ++k) sum -= L(i, k) * L(j, k);
      if (i == j) {
        r.smallest_pivot = std::min(r.smallest_pivot, sum);
        if (!(sum > 0.0)) {
          r.ok = false;
          return r;
        }
        L(i, i) = std::sqrt(sum);
      } else {
        L(i, j) = sum / L(j, j);
      }
    }
  }
  return r;
}

double fgn_autocovariance(std::size_t k, double step, double H) {
  const double two_h = 2.0 * H;
  const double kk = static_cast<double>(k);
  const double core = std::pow(kk + 1.0, two_h) + std::pow(std::abs(kk - 1.0), two_h) -
                      2.0 * std::pow(kk, two_h);
  return 0.5 * std::pow(step, two_h) * core;
}

}  // namespace

CholeskySampler::CholeskySampler(GridSpec grid, HurstIndex H) : Sampler(std::move(grid), H) {
  const std::size_t M = grid_.size();
  if (M > kMaxPoints) {
    throw DomainError("cholesky sampler supports at most 4096 grid points, got " +
                      std::to_string(M));
  }
  offset_ = grid_.includes_zero() ? 1 : 0;
  dim_ = M - offset_;
  if (dim_ == 0) return;
  const auto times = grid_.points().subspan(offset_);
  const auto cov = covariance_matrix(times, H);
  auto result = cholesky_packed(cov, dim_, 0.0);
  if (!result.ok) {
    jitter_ = 1e-12 * std::pow(times.back(), 2.0 * H.value());
    result = cholesky_packed(cov, dim_, jitter_);
    if (!result.ok) {
      std::ostringstream msg;
      msg << "covariance factorization failed even with diagonal jitter " << jitter_
          << "; smallest pivot " << result.smallest_pivot;
      throw NumericError(msg.str());
    }
    warnings_.push_back("cholesky: added diagonal jitter " + format_double(jitter_));
  }
  factor_ = std::move(result.packed);
}

void CholeskySampler::sample(std::uint64_t seed, std::span<double> out) const {
  if (out.size() != grid_.size()) throw DomainError("output span does not match grid size");
  std::mt19937_64 engine(seed);
  std::normal_distribution<double> normal;
  thread_local std::vector<double> z;
  z.resize(dim_);
  for (auto& v : z) v = normal(engine);
  if (offset_ == 1) out[0] = 0.0;
  for (std::size_t i = 0; i < dim_; ++i) {
    const double* row = factor_.data() + i * (i + 1) / 2;
    double acc = 0.0;
    for (std::size_t j = 0; j <= i; ++j) acc += row[j] * z[j];
    out[offset_ + i] = acc;
  }
}

struct CirculantSampler::Plan {
  fftw_plan handle = nullptr;
  Plan() = default;
  Plan(const Plan&) = delete;
  Plan& operator=(const Plan&) = delete;
  ~Plan() {
    if (handle != nullptr) {
      std::lock_guard lock(fftw_planner_mutex());
      fftw_destroy_plan(handle);
    }
  }
};

CirculantSampler::CirculantSampler(GridSpec grid, HurstIndex H)
    : Sampler(std::move(grid), H), plan_(std::make_unique<Plan>()) {
  if (!grid_.is_uniform()) throw DomainError("circulant sampler requires a uniform grid");
  if (grid_.size() < 2) throw DomainError("circulant sampler requires at least 2 grid points");
  step_ = grid_.step();
  increments_ = grid_.includes_zero() ? grid_.size() - 1 : grid_.size();
  const double h = H.value();
  if (increments_ == 1) {
    embedding_ = 1;
    eigenvalues_ = {fgn_autocovariance(0, step_, h)};
    scale_ = {std::sqrt(eigenvalues_[0])};
    return;
  }
  // Minimal embedding: first row (g0, g1, ..., g_{m-1}, g_{m-2}, ..., g1), size 2(m-1).
  const std::size_t m = increments_;
  embedding_ = 2 * (m - 1);
  const std::size_t N = embedding_;
  std::vector<std::complex<double>> row(N), spectrum(N);
  {
    std::lock_guard lock(fftw_planner_mutex());
    plan_->handle = fftw_plan_dft_1d(static_cast<int>(N),
                                     reinterpret_cast<fftw_complex*>(row.data()),
                                     reinterpret_cast<fftw_complex*>(spectrum.data()),
                                     FFTW_FORWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
  }
  if (plan_->handle == nullptr) throw NumericError("fftw planning failed");
  for (std::size_t k = 0; k < m; ++k) row[k] = fgn_autocovariance(k, step_, h);
  for (std::size_t k = m; k < N; ++k) row[k] = row[N - k];
  fftw_execute_dft(plan_->handle, reinterpret_cast<fftw_complex*>(row.data()),
                   reinterpret_cast<fftw_complex*>(spectrum.data()));
  eigenvalues_.resize(N);
  double max_eig = 0.0;
  for (std::size_t k = 0; k < N; ++k) {
    eigenvalues_[k] = spectrum[k].real();
    max_eig = std::max(max_eig, eigenvalues_[k]);
  }
  const double tol = kNegativeTolerance * max_eig;
  std::size_t clipped = 0;
  double most_negative = 0.0;
  scale_.resize(N);
  for (std::size_t k = 0; k < N; ++k) {
    double lam = eigenvalues_[k];
    if (lam < 0.0) {
      most_negative = std::min(most_negative, lam);
      if (lam < -tol) {
        std::ostringstream msg;
        msg << "circulant embedding has eigenvalue " << lam << " below -" << kNegativeTolerance
            << " * max eigenvalue (" << max_eig << ")";
        throw NumericError(msg.str());
      }
      ++clipped;
      lam = 0.0;
    }
    scale_[k] = std::sqrt(lam / static_cast<double>(N));
  }
  if (clipped > 0) {
    warnings_.push_back("circulant: clipped " + std::to_string(clipped) +
                        " negative eigenvalues (most negative " + format_double(most_negative) +
                        ")");
  }
}

CirculantSampler::~CirculantSampler() = default;

void CirculantSampler::sample(std::uint64_t seed, std::span<double> out) const {
  if (out.size() != grid_.size()) throw DomainError("output span does not match grid size");
  std::mt19937_64 engine(seed);
  std::normal_distribution<double> normal;
  const std::size_t offset = grid_.includes_zero() ? 1 : 0;
  if (offset == 1) out[0] = 0.0;
  if (embedding_ == 1) {
    out[offset] = scale_[0] * normal(engine);
    return;
  }
  const std::size_t N = embedding_;
  thread_local std::vector<std::complex<double>> in, res;
  in.resize(N);
  res.resize(N);
  for (std::size_t k = 0; k < N; ++k) {
    const double re = normal(engine);
    const double im = normal(engine);
    in[k] = {scale_[k] * re, scale_[k] * im};
  }
  fftw_execute_dft(plan_->handle, reinterpret_cast<fftw_complex*>(in.data()),
                   reinterpret_cast<fftw_complex*>(res.data()));
  double acc = 0.0;
  for (std::size_t k = 0; k < increments_; ++k) {
    acc += res[k].real();
    out[offset + k] = acc;
  }
}

std::shared_ptr<const Sampler> make_sampler(const GridSpec& grid, HurstIndex H, SamplerId id) {
  using Key = std::tuple<int, double, double, std::vector<double>>;
  static std::mutex mutex;
  static std::map<Key, std::shared_ptr<const Sampler>> cache;
  Key key{static_cast<int>(id), H.value(), grid.horizon(),
          std::vector<double>(grid.points().begin(), grid.points().end())};
  std::lock_guard lock(mutex);
  if (auto it = cache.find(key); it != cache.end()) return it->second;
  std::shared_ptr<const Sampler> sampler;
  if (id == SamplerId::Cholesky) {
    sampler = std::make_shared<const CholeskySampler>(grid, H);
  } else {
    sampler = std::make_shared<const CirculantSampler>(grid, H);
  }
  if (cache.size() >= 64) cache.clear();
  cache.emplace(std::move(key), sampler);
  return sampler;
}

namespace {

FbmPath sample_with(const GridSpec& grid, HurstIndex H, SamplerId id, std::uint64_t seed) {
  const auto sampler = make_sampler(grid, H, id);
  FbmPath path{H, grid, std::vector<double>(grid.size())};
  sampler->sample(seed, path.values);
  return path;
}

}  // namespace

FbmPath cholesky_sample(const GridSpec& grid, HurstIndex H, std::uint64_t seed) {
  return sample_with(grid, H, SamplerId::Cholesky, seed);
}

FbmPath circulant_sample(const GridSpec& grid, HurstIndex H, std::uint64_t seed) {
  return sample_with(grid, H, SamplerId::Circulant, seed);
}

}  // namespace tqproc::fbm
