#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tqproc/errors.hpp"
#include "tqproc/format.hpp"
#include "tqproc/runner.hpp"

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_config(const std::string& path, tqproc::runner::RunOptions options,
               std::optional<tqproc::runner::StudyKind> required) {
  std::string text;
  tqproc::runner::RunConfig config;
  try {
    text = read_file(path);
    config = tqproc::runner::parse_config(text);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  if (required && config.study != *required) {
    std::cerr << "error: study: this command needs study \"" << tqproc::runner::to_string(*required)
              << "\", got \"" << tqproc::runner::to_string(config.study) << "\"\n";
    return 1;
  }
  options.log = &std::cerr;
  const auto outcome = tqproc::runner::run_study(config, text, options);
  if (outcome.exit_code == 2) std::cerr << outcome.message << '\n';
  return outcome.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Time dependent quantile processes of fractional Brownian motion ensembles"};
  app.set_version_flag("--version", std::string(tqproc::kVersion));
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  bool force = false;
  unsigned threads = 0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON config file")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "output directory (overrides config and TQPROC_OUT)");
    sub->add_flag("--force", force, "overwrite a non-empty output directory");
    sub->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
  };

  auto* run = app.add_subcommand("run", "run a study and write its outputs");
  add_common(run);
  auto* check = app.add_subcommand("check", "run a study; exit 2 if any pass flag is false");
  add_common(check);
  auto* gen = app.add_subcommand("gen", "export an fBm ensemble (study fbm_gen)");
  add_common(gen);

  std::vector<std::string> kernel_args;
  auto* kernel = app.add_subcommand("kernel", "evaluate a limit kernel");
  kernel->prefix_command();
  kernel->allow_extras();
  kernel->footer(
      "  kernel swanson t1 t2\n"
      "  kernel G t1 x1 t2 x2 H\n"
      "  kernel K t1 a1 t2 a2 H [--weighted] [--kappa k]");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  tqproc::runner::RunOptions options;
  options.force = force;
  if (threads > 0) options.threads = threads;
  if (!out_dir.empty()) options.out_dir = out_dir;

  if (*kernel) {
    const auto extras = kernel->remaining();
    return tqproc::runner::kernel_eval_cmd(extras, std::cout, std::cerr);
  }
  if (*gen) return run_config(config_path, options, tqproc::runner::StudyKind::FbmGen);
  options.check = static_cast<bool>(*check);
  return run_config(config_path, options, std::nullopt);
}
