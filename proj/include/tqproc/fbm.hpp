#pragma once

// Exact finite-dimensional sampling of fractional Brownian motion.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tqproc/analytic.hpp"

namespace tqproc::fbm {

using analytic::HurstIndex;

/// Strictly increasing time grid inside [0, T].
class GridSpec {
 public:
  /// Uniform grid with M points. With `include_zero` the points are
  /// k T / (M - 1), k = 0..M-1; otherwise (k + 1) T / M, k = 0..M-1.
  static GridSpec uniform(double T, std::size_t M, bool include_zero);
  /// Arbitrary grid; detects uniform spacing (relative tolerance 1e-12).
  static GridSpec from_points(std::vector<double> points, double T);

  [[nodiscard]] double horizon() const noexcept { return T_; }
  [[nodiscard]] std::span<const double> points() const noexcept { return points_; }
  [[nodiscard]] std::size_t size() const noexcept { return points_.size(); }
  [[nodiscard]] double operator[](std::size_t k) const { return points_[k]; }
  [[nodiscard]] bool is_uniform() const noexcept { return uniform_; }
  [[nodiscard]] bool includes_zero() const noexcept { return !points_.empty() && points_[0] == 0.0; }
  /// Spacing of a uniform grid; DomainError otherwise.
  [[nodiscard]] double step() const;
  /// Index of a grid time by exact match; DomainError if t is not on the grid.
  [[nodiscard]] std::size_t index_of(double t) const;

  friend bool operator==(const GridSpec&, const GridSpec&) = default;

 private:
  GridSpec(double T, std::vector<double> points, bool uniform)
      : T_(T), points_(std::move(points)), uniform_(uniform) {}
  double T_ = 0.0;
  std::vector<double> points_;
  bool uniform_ = false;
};

enum class SamplerId { Cholesky, Circulant };

std::string_view to_string(SamplerId id);
SamplerId sampler_id_from_string(std::string_view name);

struct FbmPath {
  HurstIndex H;
  GridSpec grid;
  std::vector<double> values;
};

/// A sampler is immutable after construction and safe to share across threads.
class Sampler {
 public:
  virtual ~Sampler() = default;
  [[nodiscard]] virtual SamplerId id() const noexcept = 0;
  [[nodiscard]] const GridSpec& grid() const noexcept { return grid_; }
  [[nodiscard]] HurstIndex hurst() const noexcept { return H_; }
  /// Numerical adjustments made while building the sampler (jitter, clipping).
  [[nodiscard]] const std::vector<std::string>& warnings() const noexcept { return warnings_; }
  /// Writes one path (grid().size() values) drawn from the stream `seed`.
  virtual void sample(std::uint64_t seed, std::span<double> out) const = 0;

 protected:
  Sampler(GridSpec grid, HurstIndex H) : grid_(std::move(grid)), H_(H) {}
  GridSpec grid_;
  HurstIndex H_;
  std::vector<std::string> warnings_;
};

/// L z with L the lower Cholesky factor of the fBm covariance on the
/// positive grid times. Times equal to 0 are pinned to 0.
class CholeskySampler final : public Sampler {
 public:
  static constexpr std::size_t kMaxPoints = 4096;
  CholeskySampler(GridSpec grid, HurstIndex H);
  [[nodiscard]] SamplerId id() const noexcept override { return SamplerId::Cholesky; }
  void sample(std::uint64_t seed, std::span<double> out) const override;
  /// Packed lower-triangular factor over the positive times, row-major.
  [[nodiscard]] std::span<const double> factor() const noexcept { return factor_; }
  [[nodiscard]] std::size_t factor_dim() const noexcept { return dim_; }
  [[nodiscard]] double jitter() const noexcept { return jitter_; }

 private:
  std::size_t offset_ = 0;  // number of leading zero times (0 or 1)
  std::size_t dim_ = 0;
  double jitter_ = 0.0;
  std::vector<double> factor_;
};

/// Davies-Harte circulant embedding of fractional Gaussian noise on a
/// uniform grid, cumulated into a path anchored at B(0) = 0.
class CirculantSampler final : public Sampler {
 public:
  static constexpr double kNegativeTolerance = 1e-8;
  CirculantSampler(GridSpec grid, HurstIndex H);
  ~CirculantSampler() override;
  CirculantSampler(const CirculantSampler&) = delete;
  CirculantSampler& operator=(const CirculantSampler&) = delete;
  [[nodiscard]] SamplerId id() const noexcept override { return SamplerId::Circulant; }
  void sample(std::uint64_t seed, std::span<double> out) const override;
  [[nodiscard]] std::size_t embedding_size() const noexcept { return embedding_; }
  /// Eigenvalues of the circulant embedding before clipping.
  [[nodiscard]] std::span<const double> eigenvalues() const noexcept { return eigenvalues_; }

 private:
  struct Plan;
  std::size_t increments_ = 0;
  std::size_t embedding_ = 0;
  double step_ = 0.0;
  std::vector<double> eigenvalues_;
  std::vector<double> scale_;  // sqrt(max(lambda, 0) / N)
  std::unique_ptr<Plan> plan_;
};

/// Shared, cached sampler for (grid, H, id). Construction happens once per
/// key; the returned object is immutable.
std::shared_ptr<const Sampler> make_sampler(const GridSpec& grid, HurstIndex H, SamplerId id);

FbmPath cholesky_sample(const GridSpec& grid, HurstIndex H, std::uint64_t seed);
FbmPath circulant_sample(const GridSpec& grid, HurstIndex H, std::uint64_t seed);

/// n i.i.d. paths on a common grid, stored path-major.
class Ensemble {
 public:
  Ensemble(std::size_t n, std::shared_ptr<const Sampler> sampler, std::uint64_t master_seed,
           std::vector<double> values);

  [[nodiscard]] std::size_t size() const noexcept { return n_; }
  [[nodiscard]] const GridSpec& grid() const noexcept { return sampler_->grid(); }
  [[nodiscard]] HurstIndex hurst() const noexcept { return sampler_->hurst(); }
  [[nodiscard]] SamplerId sampler_id() const noexcept { return sampler_->id(); }
  [[nodiscard]] std::uint64_t master_seed() const noexcept { return master_seed_; }
  [[nodiscard]] const std::vector<std::string>& warnings() const noexcept {
    return sampler_->warnings();
  }
  [[nodiscard]] std::span<const double> path(std::size_t i) const;
  [[nodiscard]] FbmPath path_copy(std::size_t i) const;
  [[nodiscard]] double value(std::size_t i, std::size_t k) const {
    return values_[i * grid().size() + k];
  }
  /// All path values at grid index k, in path order.
  [[nodiscard]] std::vector<double> column(std::size_t k) const;
  [[nodiscard]] std::span<const double> data() const noexcept { return values_; }

 private:
  std::size_t n_;
  std::shared_ptr<const Sampler> sampler_;
  std::uint64_t master_seed_;
  std::vector<double> values_;
};

/// Seed of path i: mix_seed(master_seed, i).
std::uint64_t path_seed(std::uint64_t master_seed, std::size_t i);

Ensemble make_ensemble(std::size_t n, const GridSpec& grid, HurstIndex H, SamplerId id,
                       std::uint64_t master_seed, unsigned threads = 1);
Ensemble make_ensemble(std::size_t n, std::shared_ptr<const Sampler> sampler,
                       std::uint64_t master_seed, unsigned threads = 1);

/// max over grid pairs s < t of |B(t) - B(s)| / f_H(t - s); `maxlag` > 0
/// restricts to index lags <= maxlag.
double modulus_statistic(const FbmPath& path, std::size_t maxlag = 0);
double modulus_statistic(std::span<const double> values, const GridSpec& grid, HurstIndex H,
                         std::size_t maxlag = 0);

struct TailFit {
  std::vector<double> levels;
  std::vector<double> tail_probs;
  double c_hat = 0.0;
  double d_hat = 0.0;
  double r_squared = 0.0;
  std::vector<std::string> warnings;
};

/// Least-squares fit of log P{max_grid |B| > y} = log d - c y^2.
TailFit tail_fit(const Ensemble& ensemble, std::span<const double> levels);

// Export ------------------------------------------------------------------

/// CSV with header `path_id,t,value`, one row per (path, grid time).
void write_ensemble_csv(std::ostream& out, const Ensemble& ensemble);
/// Sidecar manifest as canonical JSON text.
std::string ensemble_manifest(const Ensemble& ensemble);

}  // namespace tqproc::fbm
