#include <cstdlib>
#include <iostream>
#include <string>
#include <utility>

#include <CLI11.hpp>

#include "cli/commands.hpp"

namespace {

std::size_t workers_from_env() {
  const char* env = std::getenv("CONCENTRIX_WORKERS");
  if (env == nullptr || *env == '\0') return 1;
  try {
    std::size_t used = 0;
    const long long v = std::stoll(env, &used);
    if (used == std::string(env).size() && v >= 1) {
      return static_cast<std::size_t>(v);
    }
  } catch (const std::exception&) {
  }
  std::cerr << "concentrix: ignoring invalid CONCENTRIX_WORKERS='" << env
            << "'\n";
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Concentration certificates for random dynamical systems, "
               "with Monte Carlo verification"};
  app.set_version_flag("--version",
                       std::string(concentrix::library_version()));
  app.require_subcommand(1, 1);

  std::string config_path;
  std::uint64_t seed = 0;
  std::size_t workers = 0;
  std::string out_dir = ".";

  const std::pair<const char*, const char*> commands[] = {
      {"certify", "Closed-form certificates (pipeline \"certify\")"},
      {"verify",
       "Monte Carlo checks (verify-deviation, verify-lyapunov, contraction)"},
      {"sweep", "Bound or constant over a parameter grid (pipeline \"sweep\")"},
  };
  for (const auto& [name, description] : commands) {
    auto* sub = app.add_subcommand(name, description);
    sub->add_option("--config", config_path, "Experiment config (JSON)")
        ->required();
    sub->add_option("--seed", seed, "Master seed; overrides the config");
    sub->add_option("--workers", workers,
                    "Worker threads (default: $CONCENTRIX_WORKERS or 1)")
        ->check(CLI::PositiveNumber);
    sub->add_option("--out", out_dir, "Output directory");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : concentrix::cli::kConfigError;
  }

  const auto* sub = app.get_subcommands().front();
  concentrix::cli::RunOptions options;
  if (sub->count("--seed") > 0) options.seed = seed;
  options.workers = sub->count("--workers") > 0 ? workers : workers_from_env();
  options.out_dir = out_dir;

  const auto result =
      concentrix::cli::run(sub->get_name(), config_path, options);
  std::cout << result.summary.dump(2) << '\n';
  return result.exit_code;
}
