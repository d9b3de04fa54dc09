#include "tqproc/fbm.hpp"
#include "tqproc/format.hpp"

#include <json.hpp>

#include <ostream>

namespace tqproc::fbm {

void write_ensemble_csv(std::ostream& out, const Ensemble& ensemble) {
  out << "path_id,t,value\n";
  const auto t = ensemble.grid().points();
  for (std::size_t i = 0; i < ensemble.size(); ++i) {
    const auto p = ensemble.path(i);
    for (std::size_t k = 0; k < p.size(); ++k) {
      out << i << ',' << format_double(t[k]) << ',' << format_double(p[k]) << '\n';
    }
  }
}

std::string ensemble_manifest(const Ensemble& ensemble) {
  const auto& grid = ensemble.grid();
  nlohmann::json m;
  m["H"] = ensemble.hurst().value();
  m["n"] = ensemble.size();
  m["grid"] = {{"T", grid.horizon()},
               {"points", std::vector<double>(grid.points().begin(), grid.points().end())},
               {"uniform", grid.is_uniform()},
               {"includes_zero", grid.includes_zero()}};
  m["sampler_id"] = std::string(to_string(ensemble.sampler_id()));
  m["master_seed"] = ensemble.master_seed();
  m["path_seed"] = "splitmix64(master_seed ^ splitmix64(path_id))";
  m["code_version"] = std::string(kVersion);
  m["warnings"] = ensemble.warnings();
  return m.dump(2) + "\n";
}

}  // namespace tqproc::fbm
