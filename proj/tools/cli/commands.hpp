#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <concentrix/serialization.hpp>

namespace concentrix::cli {

enum ExitCode : int { kPass = 0, kVerificationFailed = 1, kConfigError = 2 };

/// Everything the command line contributes on top of the config document.
struct RunOptions {
  std::optional<std::uint64_t> seed;  // overrides config "seed"
  std::size_t workers = 1;
  std::filesystem::path out_dir = ".";
};

/// A parsed config with the system resolved and the effective seed applied.
struct LoadedConfig {
  json document;  // effective config (seed filled in, system inlined)
  std::string pipeline;
  SystemSpec system;
  std::uint64_t seed = 0;
  json params;
};

struct CommandResult {
  int exit_code = kPass;
  /// Printed to stdout: status, pass flag and the files written.
  json summary;
};

/// Reads and validates a config document. `base_dir` resolves a relative
/// "system_path". Throws Error(kConfig / kInvalidSpec) on bad input.
LoadedConfig load_config(const json& document,
                         const std::filesystem::path& base_dir,
                         const RunOptions& options);

LoadedConfig load_config_file(const std::filesystem::path& path,
                              const RunOptions& options);

/// Pipeline "certify": closed-form certificates for lds or slds.
CommandResult cmd_certify(const LoadedConfig& config, const RunOptions& options);

/// Pipelines "verify-deviation", "verify-lyapunov" and "contraction".
CommandResult cmd_verify(const LoadedConfig& config, const RunOptions& options);

/// Pipeline "sweep": one CSV row per grid value of N, eps, lambda_hat or
/// alpha_hat.
CommandResult cmd_sweep(const LoadedConfig& config, const RunOptions& options);

/// Loads `config_path`, dispatches `command` (certify|verify|sweep) and maps
/// every error to exit code 2 with an error document. Never throws.
CommandResult run(const std::string& command,
                  const std::filesystem::path& config_path,
                  const RunOptions& options);

/// Error document printed on exit code 2.
json error_document(const std::string& kind, const std::string& message);

}  // namespace concentrix::cli
