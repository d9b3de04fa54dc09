#include "tqproc/errors.hpp"
#include "tqproc/fbm.hpp"
#include "tqproc/parallel.hpp"
#include "tqproc/seeding.hpp"

#include <string>

namespace tqproc::fbm {

Ensemble::Ensemble(std::size_t n, std::shared_ptr<const Sampler> sampler,
                   std::uint64_t master_seed, std::vector<double> values)
    : n_(n), sampler_(std::move(sampler)), master_seed_(master_seed), values_(std::move(values)) {
  if (!sampler_) throw DomainError("ensemble requires a sampler");
  if (values_.size() != n_ * sampler_->grid().size()) {
    throw DomainError("ensemble value count does not match n x grid size");
  }
}

std::span<const double> Ensemble::path(std::size_t i) const {
  const std::size_t M = grid().size();
  return std::span<const double>(values_).subspan(i * M, M);
}

FbmPath Ensemble::path_copy(std::size_t i) const {
  const auto p = path(i);
  return FbmPath{hurst(), grid(), std::vector<double>(p.begin(), p.end())};
}

std::vector<double> Ensemble::column(std::size_t k) const {
  const std::size_t M = grid().size();
  std::vector<double> col(n_);
  for (std::size_t i = 0; i < n_; ++i) col[i] = values_[i * M + k];
  return col;
}

std::uint64_t path_seed(std::uint64_t master_seed, std::size_t i) {
  return mix_seed(master_seed, static_cast<std::uint64_t>(i));
}

Ensemble make_ensemble(std::size_t n, std::shared_ptr<const Sampler> sampler,
                       std::uint64_t master_seed, unsigned threads) {
  if (n == 0) throw DomainError("ensemble size n must be >= 1");
  const std::size_t M = sampler->grid().size();
  std::vector<double> values(n * M);
  parallel_for(n, threads, [&](std::size_t i) {
    try {
      sampler->sample(path_seed(master_seed, i), std::span<double>(values).subspan(i * M, M));
    } catch (const NumericError& e) {
      throw NumericError("path " + std::to_string(i) + ": " + e.what());
    } catch (const DomainError& e) {
      throw DomainError("path " + std::to_string(i) + ": " + e.what());
    }
  });
  return Ensemble(n, std::move(sampler), master_seed, std::move(values));
}

Ensemble make_ensemble(std::size_t n, const GridSpec& grid, HurstIndex H, SamplerId id,
                       std::uint64_t master_seed, unsigned threads) {
  return make_ensemble(n, make_sampler(grid, H, id), master_seed, threads);
}

}  // namespace tqproc::fbm
