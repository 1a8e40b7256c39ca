#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace hmmforget::cli {

inline constexpr std::string_view kVersion = "0.1.0";

enum class ExperimentKind { kForgetting, kTwoSided, kRisk, kClusterReport };

std::string_view to_string(ExperimentKind kind);
// Throws ConfigParseError on an unknown name.
ExperimentKind parse_kind(std::string_view name);

enum ExitCode : int {
  kExitOk = 0,
  kExitValidation = 1,
  kExitViolation = 2,
  kExitIo = 3,
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::kClusterReport;
  std::filesystem::path model_path;
  std::filesystem::path out_dir = ".";
  std::uint64_t seed = 1;
  int replicates = 100;
  // forgetting: largest right end n (default 2 max t); two-sided: half width w of
  // the wide window (default 10 t*); risk: largest n of the grid (default 2^16).
  std::optional<std::int64_t> length;
  std::optional<std::filesystem::path> loss_path;
  // forgetting: t values; two-sided: window margins. Empty means kind default.
  std::vector<std::int64_t> t_grid;
  std::int64_t z1 = 0;
  std::int64_t z2 = -10;
};

// "a:b:step" (inclusive) or a single integer. Throws ConfigParseError.
std::vector<std::int64_t> parse_grid(std::string_view text);

struct ValidationReport {
  int exit_code = kExitOk;
  std::string message;  // diagnostic when exit_code != 0
  std::string summary;  // cluster / Assumption A listing
};

// Dry run: loads the model, checks the config and lists clusters. Never throws.
ValidationReport validate(const ExperimentConfig& config);

struct RunResult {
  int exit_code = kExitOk;
  std::string message;
  std::vector<std::filesystem::path> outputs;
};

// Runs the experiment and writes its CSV/JSON outputs plus manifest.json into
// out_dir. Never throws; failures map onto ExitCode.
RunResult run(const ExperimentConfig& config);

}  // namespace hmmforget::cli
