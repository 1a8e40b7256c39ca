#include "hmmforget/cli.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "hmmforget/contraction.hpp"
#include "hmmforget/errors.hpp"
#include "hmmforget/model.hpp"
#include "hmmforget/model_io.hpp"
#include "hmmforget/segmentation.hpp"

namespace hmmforget::cli {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, res.ptr};
}

std::string join_ints(const std::vector<int>& xs) {
  std::string out = "{";
  for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? "," : "") + std::to_string(xs[i]);
  return out + "}";
}

class OutputFile {
 public:
  explicit OutputFile(const fs::path& path) : path_(path), out_(path, std::ios::binary) {
    if (!out_) throw IoError("cannot write " + path.string());
  }
  std::ofstream& stream() { return out_; }
  void close() {
    out_.close();
    if (!out_) throw IoError("error writing " + path_.string());
  }

 private:
  fs::path path_;
  std::ofstream out_;
};

void write_text(const fs::path& path, const std::string& text) {
  OutputFile f(path);
  f.stream() << text;
  f.close();
}

json config_json(const ExperimentConfig& c) {
  json j;
  j["kind"] = std::string(to_string(c.kind));
  j["model"] = c.model_path.string();
  j["out"] = c.out_dir.string();
  j["seed"] = c.seed;
  j["replicates"] = c.replicates;
  j["length"] = c.length ? json(*c.length) : json(nullptr);
  j["loss"] = c.loss_path ? json(c.loss_path->string()) : json(nullptr);
  j["t_grid"] = c.t_grid;
  j["z1"] = c.z1;
  j["z2"] = c.z2;
  return j;
}

json cluster_json(const Cluster& c) {
  json j;
  j["states"] = c.states;
  j["common_support"] = c.common_support;
  j["eps_lower"] = c.eps_lower;
  j["density_ceiling"] = c.density_ceiling;
  j["assumption_a"] = c.assumption_a_verified();
  j["r"] = c.primitivity_exponent ? json(*c.primitivity_exponent) : json(nullptr);
  j["rho"] = c.rho ? json(*c.rho) : json(nullptr);
  j["p_r"] = c.p_r ? json(*c.p_r) : json(nullptr);
  return j;
}

// Every detected cluster, enriched where Assumption A holds.
std::vector<Cluster> report_clusters(const HmmModel& model) {
  std::vector<Cluster> out;
  for (const auto& c : detect_clusters(model)) {
    try {
      out.push_back(verify_assumption_a(model, c));
    } catch (const AssumptionAError&) {
      out.push_back(c);
    }
  }
  return out;
}

std::string cluster_summary(const HmmModel& model, const std::vector<Cluster>& clusters) {
  std::ostringstream s;
  s << "model '" << model.name() << "': K=" << model.num_states()
    << " M=" << model.num_symbols() << ", " << clusters.size() << " cluster(s)\n";
  bool any = false;
  for (const auto& c : clusters) {
    s << "  cluster " << join_ints(c.states) << " X_o=" << join_ints(c.common_support)
      << " |C|=" << c.states.size() << " eps=" << fmt(c.eps_lower)
      << " ceiling=" << fmt(c.density_ceiling);
    if (c.assumption_a_verified()) {
      any = true;
      s << " r=" << *c.primitivity_exponent << " rho=" << fmt(*c.rho) << " p_r=" << fmt(*c.p_r)
        << "\n";
    } else {
      s << " (block not primitive)\n";
    }
  }
  s << "Assumption A: " << (any ? "holds" : "fails") << "\n";
  return s.str();
}

void check_config(const ExperimentConfig& c) {
  if (c.replicates < 1) throw ConfigParseError("--replicates must be >= 1");
  if (c.length && *c.length < 2) throw ConfigParseError("--length must be >= 2");
  if (c.model_path.empty()) throw ConfigParseError("--model is required");
  if (c.kind == ExperimentKind::kForgetting) {
    if (!(c.z2 <= c.z1 && c.z1 <= 1)) throw ConfigParseError("need z2 <= z1 <= 1");
    for (auto t : c.t_grid) {
      if (t < 1) throw ConfigParseError("t grid values must be >= 1");
      if (c.length && t > *c.length) throw ConfigParseError("t grid exceeds --length");
    }
  }
  if (c.kind == ExperimentKind::kTwoSided) {
    for (auto m : c.t_grid) {
      if (m < 0) throw ConfigParseError("two-sided margins must be >= 0");
      if (c.length && m > *c.length) throw ConfigParseError("margin exceeds the half width");
    }
  }
}

LossMatrix load_loss(const ExperimentConfig& c, const HmmModel& model) {
  if (!c.loss_path) return LossMatrix::zero_one(model.num_states());
  LossMatrix loss(load_matrix(*c.loss_path, "loss"));
  if (loss.size() != model.num_states()) {
    throw ConfigParseError("loss matrix must be K x K with K = " +
                           std::to_string(model.num_states()));
  }
  return loss;
}

Cluster best_cluster(const HmmModel& model) {
  auto clusters = admissible_clusters(model);
  if (clusters.empty()) throw AssumptionAError("no cluster of the model satisfies Assumption A");
  return clusters.front();
}

struct KindOutcome {
  bool violation = false;
  std::string message;
  std::vector<fs::path> outputs;
};

KindOutcome run_forgetting(const ExperimentConfig& c, const HmmModel& model) {
  const Cluster cluster = best_cluster(model);
  const int r = *cluster.primitivity_exponent;
  ForgettingConfig cfg;
  cfg.t_grid = c.t_grid;
  if (cfg.t_grid.empty()) {
    const std::int64_t hi = c.length ? std::min<std::int64_t>(200, *c.length) : 200;
    for (std::int64_t t = r + 2; t <= hi; ++t) cfg.t_grid.push_back(t);
    if (cfg.t_grid.empty()) cfg.t_grid.push_back(hi);
  }
  const std::int64_t t_max = *std::max_element(cfg.t_grid.begin(), cfg.t_grid.end());
  cfg.n_values = {t_max, c.length ? std::max(*c.length, t_max) : 2 * t_max};
  cfg.z1 = c.z1;
  cfg.z2 = c.z2;
  cfg.replicates = c.replicates;
  cfg.seed = c.seed;
  const auto run = run_forgetting_experiment(model, cluster, cfg);

  KindOutcome out;
  const fs::path csv = c.out_dir / "forgetting.csv";
  {
    OutputFile f(csv);
    auto& s = f.stream();
    s << "replicate,seed,t,z1,z2,n,tv,kappa,bound,violation\n";
    for (const auto& rec : run.records) {
      const auto& x = rec.sample;
      s << rec.replicate << ',' << rec.seed << ',' << x.t << ',' << x.z1 << ',' << x.z2 << ','
        << x.n << ',' << fmt(x.tv) << ',' << x.kappa << ',' << fmt(x.bound) << ','
        << (x.violation ? 1 : 0) << '\n';
    }
    f.close();
  }
  out.outputs.push_back(csv);

  json decay;
  decay["p_r"] = *cluster.p_r;
  decay["r"] = r;
  decay["rho"] = *cluster.rho;
  decay["theory_slope"] = *cluster.p_r / r * std::log(*cluster.rho);
  decay["cluster"] = cluster.states;
  decay["violations"] = run.violations;
  try {
    const auto est = fit_decay(run, cluster);
    decay["slope"] = est.slope;
    decay["slope_stderr"] = est.slope_stderr;
    decay["fitted_points"] = est.fitted_points;
    decay["within_theory"] = est.within_theory;
    decay["degenerate"] = false;
  } catch (const DegenerateDataError& e) {
    decay["slope"] = nullptr;
    decay["slope_stderr"] = nullptr;
    decay["degenerate"] = true;
    decay["note"] = e.what();
  }
  const fs::path js = c.out_dir / "decay.json";
  write_text(js, decay.dump(2) + "\n");
  out.outputs.push_back(js);

  out.violation = run.violations > 0;
  if (out.violation) {
    out.message = std::to_string(run.violations) + " forgetting bound violation(s)";
  }
  return out;
}

KindOutcome run_two_sided(const ExperimentConfig& c, const HmmModel& model) {
  const auto ctx = make_two_sided_context(model);
  TwoSidedConfig cfg;
  cfg.replicates = c.replicates;
  cfg.seed = c.seed;
  cfg.half_width = c.length.value_or(0);
  cfg.margins = c.t_grid;
  if (cfg.margins.empty()) {
    const std::int64_t m = certified_margin(ctx, cfg.target);
    cfg.margins = {std::max<std::int64_t>(1, m / 8), std::max<std::int64_t>(1, m / 4),
                   std::max<std::int64_t>(1, m / 2), m};
    if (cfg.half_width > 0) {
      for (auto& v : cfg.margins) v = std::min(v, cfg.half_width);
    }
    std::sort(cfg.margins.begin(), cfg.margins.end());
    cfg.margins.erase(std::unique(cfg.margins.begin(), cfg.margins.end()), cfg.margins.end());
  }
  const auto run = run_two_sided_experiment(ctx, cfg);

  KindOutcome out;
  const fs::path csv = c.out_dir / "two_sided.csv";
  {
    OutputFile f(csv);
    auto& s = f.stream();
    s << "replicate,seed,t,z,n,w,tv,kappa_fwd,kappa_rev,bound,proxy_bound,violation\n";
    for (const auto& rec : run.records) {
      const auto& x = rec.sample;
      s << rec.replicate << ',' << rec.seed << ',' << x.t << ',' << x.z << ',' << x.n << ','
        << x.w << ',' << fmt(x.tv) << ',' << x.kappa_fwd << ',' << x.kappa_rev << ','
        << fmt(x.bound) << ',' << fmt(x.proxy_bound) << ',' << (x.violation ? 1 : 0) << '\n';
    }
    f.close();
  }
  out.outputs.push_back(csv);

  json summary;
  summary["certified_margin"] = run.certified_margin;
  summary["half_width"] = run.half_width;
  summary["target"] = cfg.target;
  summary["margins"] = run.margins;
  summary["median_tv"] = run.median_tv;
  summary["violations"] = run.violations;
  summary["rho"] = *ctx.forward_cluster.rho;
  summary["rho_reversed"] = *ctx.reverse_cluster.rho;
  const fs::path js = c.out_dir / "two_sided.json";
  write_text(js, summary.dump(2) + "\n");
  out.outputs.push_back(js);

  out.violation = run.violations > 0;
  if (out.violation) {
    out.message = std::to_string(run.violations) + " two-sided certificate violation(s)";
  }
  return out;
}

KindOutcome run_risk(const ExperimentConfig& c, const HmmModel& model) {
  const LossMatrix loss = load_loss(c, model);
  RiskConfig cfg;
  cfg.replicates = c.replicates;
  cfg.seed = c.seed;
  if (c.length) {
    const auto top = static_cast<std::size_t>(*c.length);
    cfg.n_grid.clear();
    for (std::size_t div : {64u, 16u, 4u, 1u}) {
      if (top / div >= 2) cfg.n_grid.push_back(top / div);
    }
    cfg.n_grid.erase(std::unique(cfg.n_grid.begin(), cfg.n_grid.end()), cfg.n_grid.end());
  }
  const auto est = asymptotic_risk_estimate(model, loss, cfg);

  KindOutcome out;
  const fs::path csv = c.out_dir / "risk.csv";
  {
    OutputFile f(csv);
    auto& s = f.stream();
    s << "n,replicate,seed,pmap_risk,viterbi_risk\n";
    for (const auto& row : est.rows) {
      s << row.n << ',' << row.replicate << ',' << row.seed << ',' << fmt(row.pmap_risk) << ','
        << fmt(row.viterbi_risk) << '\n';
    }
    f.close();
  }
  out.outputs.push_back(csv);

  json summary;
  json per_n = json::array();
  for (const auto& s : est.summaries) {
    json row;
    row["n"] = s.n;
    row["mean"] = s.pmap_mean;
    row["stderr"] = s.pmap_stderr;
    row["variance"] = s.pmap_variance;
    row["viterbi_mean"] = s.viterbi_mean;
    row["viterbi_stderr"] = s.viterbi_stderr;
    row["successive_difference"] =
        std::isnan(s.successive_difference) ? json(nullptr) : json(s.successive_difference);
    per_n.push_back(std::move(row));
  }
  summary["per_n"] = std::move(per_n);
  summary["R_hat"] = est.risk_estimate;
  summary["R_hat_ci95"] = est.risk_ci;
  summary["R_v_hat"] = est.viterbi_risk_estimate;
  summary["R_v_hat_ci95"] = est.viterbi_risk_ci;
  summary["zero_diagonal_loss"] = loss.zero_diagonal();
  const fs::path js = c.out_dir / "risk_summary.json";
  write_text(js, summary.dump(2) + "\n");
  out.outputs.push_back(js);
  if (!loss.zero_diagonal()) out.message = "warning: loss matrix has a nonzero diagonal";
  return out;
}

KindOutcome run_cluster_report(const ExperimentConfig& c, const HmmModel& model) {
  const auto clusters = report_clusters(model);
  json doc;
  doc["model"] = model.name();
  doc["num_states"] = model.num_states();
  doc["num_symbols"] = model.num_symbols();
  doc["stationary"] = std::vector<double>(model.stationary().begin(), model.stationary().end());
  json list = json::array();
  bool any = false;
  for (const auto& cl : clusters) {
    any = any || cl.assumption_a_verified();
    list.push_back(cluster_json(cl));
  }
  doc["clusters"] = std::move(list);
  doc["assumption_a"] = any;
  KindOutcome out;
  const fs::path js = c.out_dir / "clusters.json";
  write_text(js, doc.dump(2) + "\n");
  out.outputs.push_back(js);
  out.message = cluster_summary(model, clusters);
  return out;
}

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream s;
  s << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return s.str();
}

}  // namespace

std::string_view to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::kForgetting:
      return "forgetting";
    case ExperimentKind::kTwoSided:
      return "two-sided";
    case ExperimentKind::kRisk:
      return "risk";
    case ExperimentKind::kClusterReport:
      return "cluster-report";
  }
  return "unknown";
}

ExperimentKind parse_kind(std::string_view name) {
  for (auto k : {ExperimentKind::kForgetting, ExperimentKind::kTwoSided, ExperimentKind::kRisk,
                 ExperimentKind::kClusterReport}) {
    if (to_string(k) == name) return k;
  }
  throw ConfigParseError("unknown experiment kind '" + std::string(name) + "'");
}

std::vector<std::int64_t> parse_grid(std::string_view text) {
  auto parse_int = [&](std::string_view part) {
    std::int64_t v = 0;
    const auto res = std::from_chars(part.data(), part.data() + part.size(), v);
    if (res.ec != std::errc() || res.ptr != part.data() + part.size()) {
      throw ConfigParseError("bad integer '" + std::string(part) + "' in grid '" +
                             std::string(text) + "'");
    }
    return v;
  };
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const auto colon = text.find(':', start);
    parts.push_back(text.substr(start, colon == std::string_view::npos ? colon : colon - start));
    if (colon == std::string_view::npos) break;
    start = colon + 1;
  }
  if (parts.size() == 1) return {parse_int(parts[0])};
  if (parts.size() != 3) throw ConfigParseError("grid must be 'a:b:step', got '" + std::string(text) + "'");
  const auto a = parse_int(parts[0]), b = parse_int(parts[1]), step = parse_int(parts[2]);
  if (step <= 0 || b < a) throw ConfigParseError("grid needs a <= b and step > 0");
  std::vector<std::int64_t> out;
  for (auto v = a; v <= b; v += step) out.push_back(v);
  return out;
}

ValidationReport validate(const ExperimentConfig& config) {
  ValidationReport report;
  try {
    check_config(config);
    const HmmModel model = load_model(config.model_path);
    const auto clusters = report_clusters(model);
    report.summary = cluster_summary(model, clusters);
    if (config.kind == ExperimentKind::kRisk) load_loss(config, model);
    if (config.kind != ExperimentKind::kClusterReport) best_cluster(model);
  } catch (const IoError& e) {
    report.exit_code = kExitIo;
    report.message = e.what();
  } catch (const std::exception& e) {
    report.exit_code = kExitValidation;
    report.message = e.what();
  }
  return report;
}

RunResult run(const ExperimentConfig& config) {
  RunResult result;
  const auto started = std::chrono::steady_clock::now();
  const std::string started_at = utc_now();
  try {
    check_config(config);
    const HmmModel model = load_model(config.model_path);
    std::error_code ec;
    fs::create_directories(config.out_dir, ec);
    if (ec) throw IoError("cannot create " + config.out_dir.string() + ": " + ec.message());

    KindOutcome outcome;
    switch (config.kind) {
      case ExperimentKind::kForgetting:
        outcome = run_forgetting(config, model);
        break;
      case ExperimentKind::kTwoSided:
        outcome = run_two_sided(config, model);
        break;
      case ExperimentKind::kRisk:
        outcome = run_risk(config, model);
        break;
      case ExperimentKind::kClusterReport:
        outcome = run_cluster_report(config, model);
        break;
    }
    result.outputs = outcome.outputs;
    result.message = outcome.message;
    if (outcome.violation) result.exit_code = kExitViolation;

    json manifest;
    manifest["config"] = config_json(config);
    manifest["version"] = std::string(kVersion);
    manifest["started_at"] = started_at;
    manifest["elapsed_s"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    manifest["seed"] = config.seed;
    manifest["exit_code"] = result.exit_code;
    const fs::path mf = config.out_dir / "manifest.json";
    write_text(mf, manifest.dump(2) + "\n");
    result.outputs.push_back(mf);
  } catch (const IoError& e) {
    result.exit_code = kExitIo;
    result.message = e.what();
  } catch (const ConfigParseError& e) {
    result.exit_code = kExitValidation;
    result.message = e.what();
  } catch (const ModelValidationError& e) {
    result.exit_code = kExitValidation;
    result.message = e.what();
  } catch (const AssumptionAError& e) {
    result.exit_code = kExitValidation;
    result.message = e.what();
  } catch (const DimensionMismatchError& e) {
    result.exit_code = kExitValidation;
    result.message = e.what();
  } catch (const std::logic_error& e) {
    result.exit_code = kExitValidation;
    result.message = e.what();
  } catch (const std::exception& e) {
    result.exit_code = kExitViolation;
    result.message = e.what();
  }
  return result;
}

}  // namespace hmmforget::cli
