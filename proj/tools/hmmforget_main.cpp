// hmmforget: experiment harness for smoothing-probability forgetting and
// segmentation risk convergence.
//
//   hmmforget <kind> --model PATH --out DIR --seed U64 --replicates N --length N
//             [--loss PATH] [--t-grid a:b:step] [--z1 INT --z2 INT]
//   hmmforget run --kind <kind> ...
//   hmmforget validate [--kind <kind>] --model PATH ...
//
// kind is one of forgetting, two-sided, risk, cluster-report.

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "hmmforget/cli.hpp"
#include "hmmforget/errors.hpp"

namespace {

using hmmforget::cli::ExperimentConfig;

struct RawOptions {
  std::string model;
  std::string out = ".";
  std::uint64_t seed = 1;
  int replicates = 100;
  std::int64_t length = 0;
  std::string loss;
  std::string t_grid;
  std::int64_t z1 = 0;
  std::int64_t z2 = -10;
  std::string kind = "cluster-report";
};

void add_options(CLI::App* app, RawOptions& o, bool model_required) {
  auto* model = app->add_option("--model", o.model, "model JSON file");
  if (model_required) model->required();
  app->add_option("--out", o.out, "output directory")->capture_default_str();
  app->add_option("--seed", o.seed, "base RNG seed")->capture_default_str();
  app->add_option("--replicates", o.replicates, "number of replicates")->capture_default_str();
  app->add_option("--length", o.length, "sequence length (meaning depends on kind)");
  app->add_option("--loss", o.loss, "loss matrix JSON file (risk)");
  app->add_option("--t-grid", o.t_grid, "a:b:step grid (t values or window margins)");
  app->add_option("--z1", o.z1, "near left window end")->capture_default_str();
  app->add_option("--z2", o.z2, "far left window end")->capture_default_str();
}

ExperimentConfig to_config(const RawOptions& o, hmmforget::cli::ExperimentKind kind) {
  ExperimentConfig c;
  c.kind = kind;
  c.model_path = o.model;
  c.out_dir = o.out;
  c.seed = o.seed;
  c.replicates = o.replicates;
  if (o.length != 0) c.length = o.length;
  if (!o.loss.empty()) c.loss_path = o.loss;
  if (!o.t_grid.empty()) c.t_grid = hmmforget::cli::parse_grid(o.t_grid);
  c.z1 = o.z1;
  c.z2 = o.z2;
  return c;
}

int execute(const ExperimentConfig& config) {
  const auto result = hmmforget::cli::run(config);
  if (result.exit_code == hmmforget::cli::kExitOk) {
    if (!result.message.empty()) std::cout << result.message;
    for (const auto& p : result.outputs) std::cout << "wrote " << p.string() << "\n";
  } else {
    std::cerr << "hmmforget: " << result.message << "\n";
  }
  return result.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"HMM smoothing forgetting and segmentation risk experiments"};
  app.set_version_flag("--version", std::string(hmmforget::cli::kVersion));
  app.require_subcommand(1);

  RawOptions opts;
  const char* kinds[] = {"forgetting", "two-sided", "risk", "cluster-report"};
  for (const char* k : kinds) add_options(app.add_subcommand(k, std::string("run the ") + k + " experiment"), opts, true);

  auto* run = app.add_subcommand("run", "run the experiment named by --kind");
  add_options(run, opts, true);
  run->add_option("--kind", opts.kind, "experiment kind")->required();

  auto* validate = app.add_subcommand("validate", "check model and config without simulating");
  add_options(validate, opts, true);
  validate->add_option("--kind", opts.kind, "experiment kind")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : hmmforget::cli::kExitValidation;
  }

  try {
    auto* chosen = app.get_subcommands().front();
    const std::string name = chosen->get_name();
    if (name == "validate") {
      const auto config = to_config(opts, hmmforget::cli::parse_kind(opts.kind));
      const auto report = hmmforget::cli::validate(config);
      if (!report.summary.empty()) std::cout << report.summary;
      if (report.exit_code != 0) std::cerr << "hmmforget: " << report.message << "\n";
      return report.exit_code;
    }
    const auto kind = hmmforget::cli::parse_kind(name == "run" ? opts.kind : name);
    return execute(to_config(opts, kind));
  } catch (const hmmforget::ConfigParseError& e) {
    std::cerr << "hmmforget: " << e.what() << "\n";
    return hmmforget::cli::kExitValidation;
  }
}
