#include "tqproc/errors.hpp"
#include "tqproc/format.hpp"
#include "tqproc/parallel.hpp"
#include "tqproc/runner.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <set>
#include <utility>

namespace tqproc::runner {

using nlohmann::json;

namespace {

constexpr std::array<std::pair<StudyKind, std::string_view>, 10> kStudyNames{{
    {StudyKind::BkRate, "bk_rate"},
    {StudyKind::WeightedBkRate, "weighted_bk_rate"},
    {StudyKind::KernelValidation, "kernel_validation"},
    {StudyKind::Swanson, "swanson"},
    {StudyKind::LilTrace, "lil_trace"},
    {StudyKind::ClassicalBk, "classical_bk"},
    {StudyKind::FbmGen, "fbm_gen"},
    {StudyKind::KernelEval, "kernel_eval"},
    {StudyKind::TailFit, "tail_fit"},
    {StudyKind::Deviation, "deviation"},
}};

const std::set<std::string> kKnownKeys{
    "study", "H",     "T",       "rho",          "eta",         "gamma",      "kappa",
    "delta", "C",     "c1",      "ladder",       "n",           "replications", "M_t",
    "M_alpha", "sampler", "master_seed", "threads", "out_dir",   "times",      "xs",
    "alphas", "tail_levels", "include_zero", "kernel"};

[[noreturn]] void fail(const std::string& field, const std::string& what) {
  throw ConfigError(field + ": " + what);
}

double get_real(const json& j, const char* key, double fallback) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if (!v.is_number()) fail(key, "must be a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) fail(key, "must be finite");
  return x;
}

std::uint64_t get_count(const json& j, const char* key, std::uint64_t fallback) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer()) fail(key, "must be a non-negative integer");
  if (v.is_number_float()) {
    const double x = v.get<double>();
    if (x >= 0.0 && x == std::floor(x) && x < 1.8e19) return static_cast<std::uint64_t>(x);
  }
  fail(key, "must be a non-negative integer");
}

std::vector<double> get_reals(const json& j, const char* key, std::vector<double> fallback) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if (!v.is_array()) fail(key, "must be an array of numbers");
  std::vector<double> out;
  for (const auto& e : v) {
    if (!e.is_number() || !std::isfinite(e.get<double>())) fail(key, "must be an array of finite numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

experiments::NLadder default_ladder(StudyKind kind) {
  if (kind == StudyKind::ClassicalBk) return {{1024, 2048, 4096, 8192, 16384, 32768, 65536}, 20};
  return {{256, 512, 1024, 2048, 4096, 8192}, 50};
}

experiments::NLadder get_ladder(const json& j, StudyKind kind) {
  auto ladder = default_ladder(kind);
  if (!j.contains("ladder")) return ladder;
  const auto& v = j.at("ladder");
  if (!v.is_object()) fail("ladder", "must be an object {\"ns\": [...], \"replications\": R}");
  for (const auto& [k, _] : v.items()) {
    if (k != "ns" && k != "replications") fail("ladder." + k, "unknown key");
  }
  if (v.contains("ns")) {
    const auto& ns = v.at("ns");
    if (!ns.is_array()) fail("ladder.ns", "must be an array of sample sizes");
    ladder.ns.clear();
    for (const auto& e : ns) {
      if (!e.is_number_unsigned()) fail("ladder.ns", "entries must be positive integers");
      ladder.ns.push_back(e.get<std::size_t>());
    }
  }
  ladder.replications = get_count(v, "replications", ladder.replications);
  return ladder;
}

std::size_t default_n(StudyKind kind) {
  switch (kind) {
    case StudyKind::Swanson: return 1001;
    case StudyKind::TailFit: return 100000;
    case StudyKind::FbmGen: return 100;
    default: return 500;
  }
}

std::size_t default_replications(StudyKind kind) {
  return kind == StudyKind::Swanson ? 5000 : 4000;
}

bool uses_ladder(StudyKind k) {
  return k == StudyKind::BkRate || k == StudyKind::WeightedBkRate || k == StudyKind::LilTrace ||
         k == StudyKind::ClassicalBk || k == StudyKind::Deviation;
}

bool uses_nodes(StudyKind k) {
  return k == StudyKind::KernelValidation || k == StudyKind::Swanson;
}

KernelRequest get_kernel(const json& j) {
  KernelRequest req;
  if (!j.contains("kernel")) return req;
  const auto& v = j.at("kernel");
  if (!v.is_object()) fail("kernel", "must be an object");
  for (const auto& [k, _] : v.items()) {
    if (k != "kind" && k != "t1" && k != "a1" && k != "t2" && k != "a2" && k != "kappa") {
      fail("kernel." + k, "unknown key");
    }
  }
  if (v.contains("kind")) {
    if (!v.at("kind").is_string()) fail("kernel.kind", "must be a string");
    try {
      req.kind = analytic::kernel_kind_from_string(v.at("kind").get<std::string>());
    } catch (const std::exception& e) {
      fail("kernel.kind", e.what());
    }
  }
  req.t1 = get_real(v, "t1", req.t1);
  req.a1 = get_real(v, "a1", req.a1);
  req.t2 = get_real(v, "t2", req.t2);
  req.a2 = get_real(v, "a2", req.a2);
  if (v.contains("kappa") && !v.at("kappa").is_null()) req.kappa = get_real(v, "kappa", 0.0);
  return req;
}

void validate(const RunConfig& c) {
  const auto& p = c.params;
  const StudyKind k = c.study;
  if (!(p.H > 0.0 && p.H < 1.0)) fail("H", "must lie in (0, 1)");
  if (!(p.T > 0.0)) fail("T", "must be > 0");
  if (!(p.rho > 0.0 && p.rho < 0.5)) fail("rho", "must lie in (0, 1/2)");
  if (k == StudyKind::BkRate && !(p.eta >= 0.0 && p.eta < 1.0 / (2.0 * p.H))) {
    fail("eta", "eta must satisfy 0 <= eta < 1/(2H) = " + format_double(1.0 / (2.0 * p.H)));
  }
  if (!(p.eta >= 0.0)) fail("eta", "must be >= 0");
  if (p.gamma && !(*p.gamma > 0.0 && *p.gamma < p.T)) fail("gamma", "must lie in (0, T)");
  if (!(p.kappa > 0.0)) fail("kappa", "must be > 0");
  if (!(p.delta > 0.0 && p.delta <= p.H)) fail("delta", "must satisfy 0 < delta <= H");
  if (!(p.C > 0.0)) fail("C", "must be > 0");
  if (!(p.c1 > 0.0)) fail("c1", "must be > 0");
  if (uses_ladder(k)) {
    if (p.ladder.ns.size() < 2) fail("ladder.ns", "needs at least 2 distinct sample sizes");
    for (std::size_t i = 0; i < p.ladder.ns.size(); ++i) {
      if (p.ladder.ns[i] < 16) fail("ladder.ns", "sample sizes must be >= 16");
      if (i > 0 && p.ladder.ns[i] <= p.ladder.ns[i - 1]) fail("ladder.ns", "must be strictly increasing");
    }
    if (p.ladder.replications < 1) fail("ladder.replications", "must be >= 1");
  }
  if (p.n < 1) fail("n", "must be >= 1");
  if (uses_nodes(k) && p.replications < 2) fail("replications", "must be >= 2");
  if (p.M_t < 2) fail("M_t", "must be >= 2");
  if (p.M_alpha < 1) fail("M_alpha", "must be >= 1");
  if (p.sampler == fbm::SamplerId::Cholesky && p.M_t > fbm::CholeskySampler::kMaxPoints) {
    fail("M_t", "cholesky sampler supports at most " +
                    std::to_string(fbm::CholeskySampler::kMaxPoints) + " points");
  }
  if (p.threads < 1) fail("threads", "must be >= 1");
  for (double t : p.times) {
    if (!(t > 0.0 && t <= p.T)) fail("times", "node times must lie in (0, T]");
  }
  for (double a : p.alphas) {
    if (!(a > 0.0 && a < 1.0)) fail("alphas", "levels must lie in (0, 1)");
  }
  if (k == StudyKind::KernelValidation && (p.xs.empty() || p.alphas.empty())) {
    fail(p.xs.empty() ? "xs" : "alphas", "must not be empty");
  }
  if (k == StudyKind::TailFit) {
    if (p.tail_levels.size() < 3) fail("tail_levels", "needs at least 3 levels");
    for (double y : p.tail_levels) {
      if (!(y > 0.0)) fail("tail_levels", "levels must be > 0");
    }
  }
  if (k == StudyKind::Deviation) {
    for (std::size_t n : p.ladder.ns) {
      const double ratio = std::log(std::log(static_cast<double>(n))) / static_cast<double>(n);
      if (!(analytic::a_n_from_ratio(p.C, p.delta, ratio) < p.T)) {
        fail("delta", "a_n >= T at n = " + std::to_string(n) + "; the deviation window is empty");
      }
    }
  }
  if (k == StudyKind::KernelEval) {
    const auto& r = c.kernel;
    if (!(r.t1 >= 0.0 && r.t2 >= 0.0)) fail("kernel", "times must be >= 0");
    if (r.kappa && !(*r.kappa > 0.0)) fail("kernel.kappa", "must be > 0");
  }
}

}  // namespace

std::string_view to_string(StudyKind kind) {
  for (const auto& [k, name] : kStudyNames) {
    if (k == kind) return name;
  }
  return "unknown";
}

StudyKind study_kind_from_string(std::string_view name) {
  for (const auto& [k, n] : kStudyNames) {
    if (n == name) return k;
  }
  std::string known;
  for (const auto& [k, n] : kStudyNames) known += (known.empty() ? "" : ", ") + std::string(n);
  throw ConfigError("study: unknown study '" + std::string(name) + "' (expected one of " + known + ")");
}

RunConfig config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (!kKnownKeys.contains(key)) fail(key, "unknown key");
  }
  if (!j.contains("study") || !j.at("study").is_string()) fail("study", "required string");
  RunConfig c;
  c.study = study_kind_from_string(j.at("study").get<std::string>());
  const StudyKind k = c.study;
  auto& p = c.params;
  p.H = get_real(j, "H", p.H);
  if (k == StudyKind::Swanson) p.H = 0.5;
  p.T = get_real(j, "T", uses_nodes(k) ? 4.0 : 2.0);
  p.rho = get_real(j, "rho", p.rho);
  p.eta = get_real(j, "eta", p.eta);
  if (j.contains("gamma") && !j.at("gamma").is_null()) p.gamma = get_real(j, "gamma", 0.0);
  p.kappa = get_real(j, "kappa", p.kappa);
  p.delta = get_real(j, "delta", p.H / 4.0);
  p.C = get_real(j, "C", p.C);
  p.c1 = get_real(j, "c1", p.c1);
  p.ladder = get_ladder(j, k);
  p.n = get_count(j, "n", default_n(k));
  p.replications = get_count(j, "replications", default_replications(k));
  p.M_t = get_count(j, "M_t", p.M_t);
  p.M_alpha = get_count(j, "M_alpha", p.M_alpha);
  if (j.contains("sampler")) {
    if (!j.at("sampler").is_string()) fail("sampler", "must be a string");
    try {
      p.sampler = fbm::sampler_id_from_string(j.at("sampler").get<std::string>());
    } catch (const std::exception& e) {
      fail("sampler", e.what());
    }
  }
  p.master_seed = get_count(j, "master_seed", 0);
  p.threads = static_cast<unsigned>(get_count(j, "threads", default_thread_count()));
  p.times = get_reals(j, "times", {});
  p.xs = get_reals(j, "xs", p.xs);
  p.alphas = get_reals(j, "alphas", p.alphas);
  p.tail_levels = get_reals(j, "tail_levels", p.tail_levels);
  if (j.contains("include_zero")) {
    if (!j.at("include_zero").is_boolean()) fail("include_zero", "must be a boolean");
    c.include_zero = j.at("include_zero").get<bool>();
  }
  c.kernel = get_kernel(j);
  if (j.contains("out_dir")) {
    if (!j.at("out_dir").is_string()) fail("out_dir", "must be a string");
    c.out_dir = j.at("out_dir").get<std::string>();
  }
  validate(c);
  return c;
}

RunConfig parse_config(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return config_from_json(j);
}

json to_json(const RunConfig& c) {
  json j = experiments::to_json(c.params);
  j["ladder"] = {{"ns", c.params.ladder.ns}, {"replications", c.params.ladder.replications}};
  j["study"] = std::string(to_string(c.study));
  j["threads"] = c.params.threads;
  j["include_zero"] = c.include_zero;
  j["kernel"] = {{"kind", std::string(analytic::to_string(c.kernel.kind))},
                 {"t1", c.kernel.t1},
                 {"a1", c.kernel.a1},
                 {"t2", c.kernel.t2},
                 {"a2", c.kernel.a2},
                 {"kappa", c.kernel.kappa ? json(*c.kernel.kappa) : json(nullptr)}};
  j["out_dir"] = c.out_dir;
  return j;
}

std::string serialize_config(const RunConfig& c) { return to_json(c).dump(2) + "\n"; }

std::string config_hash(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace tqproc::runner
