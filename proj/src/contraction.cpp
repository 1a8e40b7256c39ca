#include "hmmforget/contraction.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>

#include "hmmforget/errors.hpp"
#include "hmmforget/parallel.hpp"
#include "hmmforget/rng.hpp"
#include "hmmforget/stats.hpp"

namespace hmmforget {

namespace {

constexpr double kSimplexTolerance = 1e-9;
constexpr double kViolationSlack = 1e-9;

void check_probability(const Vector& p, const char* which) {
  double sum = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (!std::isfinite(p(i)) || p(i) < -kSimplexTolerance) {
      throw NotAProbabilityError(std::string(which) + " has a negative or non-finite entry");
    }
    sum += p(i);
  }
  if (std::abs(sum - 1.0) > kSimplexTolerance) {
    throw NotAProbabilityError(std::string(which) + " sums to " + std::to_string(sum));
  }
}

double half_max_row_distance(const Matrix& a, const std::vector<Eigen::Index>& rows) {
  double worst = 0.0;
  for (std::size_t p = 0; p < rows.size(); ++p) {
    for (std::size_t q = p + 1; q < rows.size(); ++q) {
      worst = std::max(worst, (a.row(rows[p]) - a.row(rows[q])).lpNorm<1>());
    }
  }
  return 0.5 * worst;
}

std::vector<Eigen::Index> nonzero_rows(const Matrix& a) {
  std::vector<Eigen::Index> rows;
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    if (a.row(i).cwiseAbs().sum() > 0.0) rows.push_back(i);
  }
  return rows;
}

double certificate(double rho, int kappa) { return 2.0 * std::pow(rho, kappa); }

std::vector<int> reversed_symbols(ObservationWindow x) {
  return {x.symbols.rbegin(), x.symbols.rend()};
}

int reverse_kappa(ObservationWindow x_t_to_n, const Cluster& cluster) {
  const auto rev = reversed_symbols(x_t_to_n);
  return kappa(rev, cluster);
}

}  // namespace

double tv_distance(const Vector& p, const Vector& q) {
  if (p.size() != q.size()) throw DimensionMismatchError("tv_distance: vectors differ in length");
  check_probability(p, "p");
  check_probability(q, "q");
  return (p - q).lpNorm<1>();
}

double dobrushin(const Matrix& a) {
  const auto rows = nonzero_rows(a);
  if (rows.empty()) throw NoValidRowsError("dobrushin: every row is zero");
  return half_max_row_distance(a, rows);
}

bool has_zero_rows(const Matrix& a) {
  return nonzero_rows(a).size() != static_cast<std::size_t>(a.rows());
}

bool doeblin_check(const Matrix& a, const Vector& lambda, double eps) {
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      if (a(i, j) < eps * lambda(j)) return false;
    }
  }
  return true;
}

double rho_constant(const Cluster& cluster) {
  if (!cluster.primitivity_exponent || !cluster.block_power_ratio) {
    throw AssumptionAError("rho requires a cluster with verified Assumption A");
  }
  if (cluster.density_ceiling <= 0.0) throw AssumptionAError("cluster has zero density ceiling");
  const int r = *cluster.primitivity_exponent;
  const double rho =
      1.0 - *cluster.block_power_ratio * std::pow(cluster.eps_lower / cluster.density_ceiling, r);
  return std::clamp(rho, std::numeric_limits<double>::min(), 1.0);
}

int kappa(std::span<const int> x, const Cluster& cluster, int r) {
  if (r < 1) throw std::invalid_argument("kappa: block length must be positive");
  const auto t = static_cast<std::int64_t>(x.size());
  const std::int64_t blocks = t >= 2 ? (t - 2) / r : 0;
  int count = 0;
  for (std::int64_t u = 0; u < blocks; ++u) {
    // Times ur+2 .. (u+1)r+1 sit at indices ur+1 .. (u+1)r.
    bool inside = true;
    for (std::int64_t i = u * r + 1; i <= (u + 1) * r && inside; ++i) {
      inside = cluster.in_support(x[static_cast<std::size_t>(i)]);
    }
    count += inside ? 1 : 0;
  }
  return count;
}

int kappa(std::span<const int> x, const Cluster& cluster) {
  if (!cluster.primitivity_exponent) throw AssumptionAError("kappa requires a verified cluster");
  return kappa(x, cluster, *cluster.primitivity_exponent);
}

ForwardProduct forward_product(const Smoother& smoother, std::int64_t k, int count) {
  const auto states = smoother.forward().scaled(smoother.first()).size();
  ForwardProduct out{Matrix::Identity(states, states), false};
  for (int i = 0; i < count; ++i) {
    const auto f = smoother.forward_smoothing_matrix(k + i);
    out.zero_rows = out.zero_rows || !f.zero_rows.empty();
    out.matrix = out.matrix * f.matrix;
  }
  return out;
}

BlockContraction block_contraction(const Smoother& smoother, const Cluster& cluster,
                                   std::int64_t k) {
  if (!cluster.primitivity_exponent) throw AssumptionAError("block contraction needs r");
  const int r = *cluster.primitivity_exponent;
  if (k < smoother.first() || k + r > smoother.last()) {
    throw std::out_of_range("r-block starting at k does not fit in the window");
  }
  BlockContraction out;
  out.k = k;
  const auto x = smoother.window();
  out.applicable = true;
  for (std::int64_t i = k + 1; i <= k + r; ++i) {
    out.applicable = out.applicable && cluster.in_support(x.at(i));
  }
  const auto product = forward_product(smoother, k, r);
  out.zero_rows = product.zero_rows;
  const auto rows = nonzero_rows(product.matrix);
  if (rows.empty()) throw NoValidRowsError("forward smoothing product has no nonzero row");
  out.dobrushin_all_rows = half_max_row_distance(product.matrix, rows);
  std::vector<Eigen::Index> in_cluster;
  for (auto i : rows) {
    if (cluster.contains(static_cast<int>(i))) in_cluster.push_back(i);
  }
  out.dobrushin_cluster_rows = half_max_row_distance(product.matrix, in_cluster);
  return out;
}

namespace {

ForgettingSample compare_windows(const Smoother& near, const Smoother& far,
                                 const Cluster& cluster, ObservationWindow x_from_one,
                                 std::int64_t t) {
  ForgettingSample s;
  s.t = t;
  s.z1 = near.first();
  s.z2 = far.first();
  s.n = near.last();
  s.tv = tv_distance(near.smoothing_vector(t).probs, far.smoothing_vector(t).probs);
  s.kappa = kappa(x_from_one.slice(1, t).symbols, cluster);
  s.bound = certificate(*cluster.rho, s.kappa);
  s.violation = s.tv > s.bound + kViolationSlack;
  return s;
}

void check_forgetting_indices(const SamplePath& path, std::int64_t t, std::int64_t z1,
                              std::int64_t z2, std::int64_t n) {
  if (!(z2 <= z1 && z1 <= 1 && 1 <= t && t <= n)) {
    throw std::invalid_argument("forgetting check needs z2 <= z1 <= 1 <= t <= n");
  }
  if (z2 < path.first() || n > path.last()) {
    throw std::out_of_range("forgetting check windows extend beyond the sample path");
  }
}

}  // namespace

ForgettingSample forgetting_bound_check(const HmmModel& model, const Cluster& cluster,
                                        const SamplePath& path, std::int64_t t, std::int64_t z1,
                                        std::int64_t z2, std::int64_t n) {
  if (!cluster.rho) throw AssumptionAError("forgetting check needs a verified cluster");
  check_forgetting_indices(path, t, z1, z2, n);
  const auto x = window_of(path);
  const Smoother far(model, x.slice(z2, n));
  if (!far.positive_likelihood()) {
    throw ZeroLikelihoodError("window [z2, n] has zero likelihood");
  }
  const Smoother near(model, x.slice(z1, n));
  return compare_windows(near, far, cluster, x, t);
}

ForgettingRun run_forgetting_experiment(const HmmModel& model, const Cluster& cluster,
                                        const ForgettingConfig& config) {
  if (!cluster.rho) throw AssumptionAError("forgetting experiment needs a verified cluster");
  if (config.t_grid.empty()) throw std::invalid_argument("empty t grid");
  if (config.replicates < 1) throw std::invalid_argument("replicates must be >= 1");
  ForgettingRun run;
  run.config = config;
  const std::int64_t t_max = *std::max_element(config.t_grid.begin(), config.t_grid.end());
  if (run.config.n_values.empty()) run.config.n_values = {t_max, 2 * t_max};
  std::sort(run.config.n_values.begin(), run.config.n_values.end());
  const std::int64_t n_max = run.config.n_values.back();
  const auto& cfg = run.config;
  const std::int64_t t_min = *std::min_element(cfg.t_grid.begin(), cfg.t_grid.end());
  if (!(cfg.z2 <= cfg.z1 && cfg.z1 <= 1 && 1 <= t_min && t_max <= n_max)) {
    throw std::invalid_argument("forgetting experiment needs z2 <= z1 <= 1 <= t <= n");
  }

  std::vector<std::vector<ForgettingRecord>> per_replicate(static_cast<std::size_t>(cfg.replicates));
  parallel_for(per_replicate.size(), [&](std::size_t rep) {
    const std::uint64_t seed = derive_seed(cfg.seed, rep);
    const auto path = simulate(model, static_cast<std::size_t>(n_max - cfg.z2 + 1), cfg.z2, seed);
    const auto x = window_of(path);
    auto& out = per_replicate[rep];
    for (std::int64_t n : cfg.n_values) {
      const Smoother far(model, x.slice(cfg.z2, n));
      const Smoother near(model, x.slice(cfg.z1, n));
      for (std::int64_t t : cfg.t_grid) {
        if (t > n) continue;
        out.push_back({static_cast<int>(rep), seed, compare_windows(near, far, cluster, x, t)});
      }
    }
  });
  for (auto& recs : per_replicate) {
    for (auto& r : recs) {
      run.violations += r.sample.violation ? 1 : 0;
      run.records.push_back(r);
    }
  }
  return run;
}

DecayEstimate fit_decay(const ForgettingRun& run, const Cluster& cluster) {
  if (!cluster.rho || !cluster.p_r) throw AssumptionAError("decay fit needs a verified cluster");
  DecayEstimate est;
  est.t_grid = run.config.t_grid;
  std::sort(est.t_grid.begin(), est.t_grid.end());
  est.t_grid.erase(std::unique(est.t_grid.begin(), est.t_grid.end()), est.t_grid.end());
  std::map<std::int64_t, std::size_t> slot;
  for (std::size_t i = 0; i < est.t_grid.size(); ++i) slot[est.t_grid[i]] = i;

  // sup over n of TV, per (replicate, t).
  std::map<int, std::vector<double>> sup;
  for (const auto& rec : run.records) {
    auto& row = sup.try_emplace(rec.replicate, est.t_grid.size(), 0.0).first->second;
    auto& cell = row[slot.at(rec.sample.t)];
    cell = std::max(cell, rec.sample.tv);
  }

  const double floor = 10.0 * std::numeric_limits<double>::epsilon();
  std::vector<double> xs, ys;
  std::vector<double> log_sum(est.t_grid.size(), 0.0);
  est.uncensored.assign(est.t_grid.size(), 0);
  bool any_positive = false;
  for (const auto& [rep, row] : sup) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      any_positive = any_positive || row[i] > 0.0;
      if (row[i] <= floor) continue;
      xs.push_back(static_cast<double>(est.t_grid[i]));
      ys.push_back(std::log(row[i]));
      log_sum[i] += ys.back();
      ++est.uncensored[i];
    }
  }
  if (!any_positive) {
    throw DegenerateDataError("every sampled TV distance is exactly zero: forgetting is instant");
  }
  est.mean_log_tv.resize(est.t_grid.size());
  std::size_t distinct = 0;
  for (std::size_t i = 0; i < est.t_grid.size(); ++i) {
    if (est.uncensored[i] > 0) ++distinct;
    est.mean_log_tv[i] = est.uncensored[i] > 0
                             ? log_sum[i] / static_cast<double>(est.uncensored[i])
                             : std::numeric_limits<double>::quiet_NaN();
  }
  if (distinct < 2) {
    throw DegenerateDataError("fewer than two t values with TV above the censoring floor");
  }
  const auto fit = stats::least_squares(xs, ys);
  est.slope = fit.slope;
  est.slope_stderr = fit.slope_stderr;
  est.fitted_points = fit.points;
  est.r = *cluster.primitivity_exponent;
  est.rho = *cluster.rho;
  est.p_r = *cluster.p_r;
  est.theory_slope = est.p_r / est.r * std::log(est.rho);
  est.within_theory = est.slope <= est.theory_slope + 2.0 * est.slope_stderr;
  return est;
}

DecayEstimate decay_rate_experiment(const HmmModel& model, const Cluster& cluster,
                                    const ForgettingConfig& config) {
  return fit_decay(run_forgetting_experiment(model, cluster, config), cluster);
}

HmmModel reverse_model(const HmmModel& model) {
  const auto& pi = model.stationary();
  const auto& p = model.transition();
  const int k = model.num_states();
  Matrix rev(k, k);
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) rev(i, j) = pi(j) * p(j, i) / pi(i);
  }
  return build_model(rev, model.emission(), model.name());
}

TwoSidedContext make_two_sided_context(const HmmModel& model) {
  auto forward = admissible_clusters(model);
  if (forward.empty()) throw AssumptionAError("no cluster satisfies Assumption A");
  HmmModel reversed = reverse_model(model);
  auto backward = admissible_clusters(reversed);
  if (backward.empty()) throw AssumptionAError("reversed model has no admissible cluster");
  return {model, std::move(reversed), std::move(forward.front()), std::move(backward.front())};
}

TwoSidedContext swap_directions(const TwoSidedContext& context) {
  return {context.reversed, context.model, context.reverse_cluster, context.forward_cluster};
}

SamplePath reverse_path(const SamplePath& path) {
  SamplePath out;
  out.states.assign(path.states.rbegin(), path.states.rend());
  out.observations.assign(path.observations.rbegin(), path.observations.rend());
  out.origin_offset = -path.last();
  out.seed = path.seed;
  return out;
}

namespace {

TwoSidedSample two_sided_from(const TwoSidedContext& ctx, ObservationWindow x,
                              const Smoother& proxy, std::int64_t t, std::int64_t z,
                              std::int64_t n) {
  TwoSidedSample s;
  s.t = t;
  s.z = z;
  s.n = n;
  s.w = t - proxy.first();
  const Smoother window(ctx.model, x.slice(z, n));
  if (!window.positive_likelihood()) throw ZeroLikelihoodError("window [z, n] has zero likelihood");
  s.tv = tv_distance(window.smoothing_vector(t).probs, proxy.smoothing_vector(t).probs);
  s.kappa_fwd = kappa(x.slice(z, t).symbols, ctx.forward_cluster);
  s.kappa_rev = reverse_kappa(x.slice(t, n), ctx.reverse_cluster);
  s.bound = certificate(*ctx.forward_cluster.rho, s.kappa_fwd) +
            certificate(*ctx.reverse_cluster.rho, s.kappa_rev);
  s.proxy_kappa_fwd = kappa(x.slice(proxy.first(), t).symbols, ctx.forward_cluster);
  s.proxy_kappa_rev = reverse_kappa(x.slice(t, proxy.last()), ctx.reverse_cluster);
  s.proxy_bound = certificate(*ctx.forward_cluster.rho, s.proxy_kappa_fwd) +
                  certificate(*ctx.reverse_cluster.rho, s.proxy_kappa_rev);
  s.violation = s.tv > s.bound + kViolationSlack;
  return s;
}

}  // namespace

TwoSidedSample two_sided_approximation(const TwoSidedContext& context, const SamplePath& path,
                                       std::int64_t t, std::int64_t z, std::int64_t n,
                                       std::int64_t w) {
  if (!(t - w <= z && z <= t && t <= n && n <= t + w)) {
    throw std::invalid_argument("two-sided approximation needs t - w <= z <= t <= n <= t + w");
  }
  const auto x = window_of(path);
  const Smoother proxy(context.model, x.slice(t - w, t + w));
  if (!proxy.positive_likelihood()) throw ZeroLikelihoodError("wide window has zero likelihood");
  return two_sided_from(context, x, proxy, t, z, n);
}

std::int64_t certified_margin(const TwoSidedContext& context, double target) {
  auto blocks_needed = [target](const Cluster& c) -> std::int64_t {
    // Each direction gets target / 2: 2 rho^(p_r j) <= target / 2.
    const double per_block = *c.p_r * std::log(*c.rho);
    const double j = std::ceil(std::log(target / 4.0) / per_block);
    return static_cast<std::int64_t>(std::max(0.0, j)) * *c.primitivity_exponent + 1;
  };
  return std::max(blocks_needed(context.forward_cluster), blocks_needed(context.reverse_cluster));
}

TwoSidedRun run_two_sided_experiment(const TwoSidedContext& context, const TwoSidedConfig& config) {
  if (config.replicates < 1) throw std::invalid_argument("replicates must be >= 1");
  TwoSidedRun run;
  run.certified_margin = certified_margin(context, config.target);
  run.margins = config.margins.empty() ? std::vector<std::int64_t>{run.certified_margin}
                                       : config.margins;
  const std::int64_t widest = *std::max_element(run.margins.begin(), run.margins.end());
  run.half_width = config.half_width > 0 ? config.half_width
                                         : 10 * std::max(run.certified_margin, widest);
  if (widest > run.half_width) throw std::invalid_argument("margin exceeds the half width");
  const std::int64_t w = run.half_width;
  const std::int64_t t = 0;

  std::vector<std::vector<TwoSidedRecord>> per_replicate(static_cast<std::size_t>(config.replicates));
  parallel_for(per_replicate.size(), [&](std::size_t rep) {
    const std::uint64_t seed = derive_seed(config.seed, rep);
    const auto path = simulate(context.model, static_cast<std::size_t>(2 * w + 1), t - w, seed);
    const auto x = window_of(path);
    const Smoother proxy(context.model, x);
    for (std::int64_t m : run.margins) {
      per_replicate[rep].push_back(
          {static_cast<int>(rep), seed, two_sided_from(context, x, proxy, t, t - m, t + m)});
    }
  });
  std::vector<std::vector<double>> tv_by_margin(run.margins.size());
  for (auto& recs : per_replicate) {
    for (std::size_t i = 0; i < recs.size(); ++i) {
      tv_by_margin[i].push_back(recs[i].sample.tv);
      run.violations += recs[i].sample.violation ? 1 : 0;
      run.records.push_back(recs[i]);
    }
  }
  for (auto& tvs : tv_by_margin) run.median_tv.push_back(stats::median(std::move(tvs)));
  return run;
}

}  // namespace hmmforget
