#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hmmforget/model.hpp"
#include "hmmforget/smoothing.hpp"

namespace hmmforget {

// L1 distance sum_s |p_s - q_s|, so two point masses are at distance 2. Both inputs
// must be probability vectors within 1e-9 (NotAProbabilityError otherwise).
double tv_distance(const Vector& p, const Vector& q);

// Half the largest L1 distance between two rows; all-zero rows are skipped.
// Throws NoValidRowsError when every row is zero.
double dobrushin(const Matrix& a);
bool has_zero_rows(const Matrix& a);

// A(i, j) >= eps * lambda_j for all i, j.
bool doeblin_check(const Matrix& a, const Vector& lambda, double eps);

// 1 - (min R^r / max R^r) (eps / ceiling)^r for a cluster enriched by
// verify_assumption_a. The degenerate value 0 is lifted to the smallest positive
// double so the constant stays in (0, 1). Throws AssumptionAError.
double rho_constant(const Cluster& cluster);

// Number of disjoint r-blocks x_{ur+2}^{(u+1)r+1}, u < floor((t-2)/r), lying in
// X_o^r, where t = x.size() and x[0] is time 1. Passing any window x_z^t counts the
// blocks relative to z instead of 1.
int kappa(std::span<const int> x, const Cluster& cluster, int r);
int kappa(std::span<const int> x, const Cluster& cluster);

// F_k F_{k+1} ... F_{k+count-1} of one smoother.
struct ForwardProduct {
  Matrix matrix;
  bool zero_rows = false;
};
ForwardProduct forward_product(const Smoother& smoother, std::int64_t k, int count);

// Contraction of the r-step block starting at k, split by whether the row belongs
// to the cluster. `applicable` says whether x_{k+1}^{k+r} lies in X_o^r.
struct BlockContraction {
  std::int64_t k = 0;
  bool applicable = false;
  bool zero_rows = false;
  double dobrushin_all_rows = 0.0;
  double dobrushin_cluster_rows = 0.0;
};
BlockContraction block_contraction(const Smoother& smoother, const Cluster& cluster,
                                   std::int64_t k);

struct ForgettingSample {
  std::int64_t t = 0, z1 = 0, z2 = 0, n = 0;
  double tv = 0.0;
  int kappa = 0;
  double bound = 2.0;
  bool violation = false;
};

// Compares pi_t[x_{z1}^n] with pi_t[x_{z2}^n] against 2 rho^kappa(x_1^t). Requires
// z2 <= z1 <= 1 <= t <= n inside the path; throws ZeroLikelihoodError.
ForgettingSample forgetting_bound_check(const HmmModel& model, const Cluster& cluster,
                                        const SamplePath& path, std::int64_t t, std::int64_t z1,
                                        std::int64_t z2, std::int64_t n);

struct ForgettingConfig {
  std::vector<std::int64_t> t_grid;
  // Right window ends; every t is compared at each n >= t. Empty means
  // {max t, 2 max t}.
  std::vector<std::int64_t> n_values;
  std::int64_t z1 = 0;
  std::int64_t z2 = -10;
  int replicates = 100;
  std::uint64_t seed = 1;
};

struct ForgettingRecord {
  int replicate = 0;
  std::uint64_t seed = 0;
  ForgettingSample sample;
};

struct ForgettingRun {
  ForgettingConfig config;
  std::vector<ForgettingRecord> records;  // replicate, then n, then t order
  std::size_t violations = 0;
};

ForgettingRun run_forgetting_experiment(const HmmModel& model, const Cluster& cluster,
                                        const ForgettingConfig& config);

struct DecayEstimate {
  std::vector<std::int64_t> t_grid;
  std::vector<double> mean_log_tv;     // over uncensored replicates; NaN if none
  std::vector<std::size_t> uncensored;  // per t
  double slope = 0.0;
  double slope_stderr = 0.0;
  double theory_slope = 0.0;  // (p_r / r) log rho
  double p_r = 0.0;
  int r = 0;
  double rho = 0.0;
  std::size_t fitted_points = 0;
  bool within_theory = false;  // slope <= theory_slope + 2 slope_stderr
};

// Least-squares slope of log sup_{n >= t} TV against t, dropping points with
// TV <= 10 machine epsilon. Throws DegenerateDataError when fewer than two
// distinct t survive.
DecayEstimate fit_decay(const ForgettingRun& run, const Cluster& cluster);

DecayEstimate decay_rate_experiment(const HmmModel& model, const Cluster& cluster,
                                    const ForgettingConfig& config);

// Time-reversed HMM: P'(i, j) = pi_j P(j, i) / pi_i with the same emissions.
HmmModel reverse_model(const HmmModel& model);

// Model plus its time reversal, each with the admissible cluster of smallest rho.
struct TwoSidedContext {
  HmmModel model;
  HmmModel reversed;
  Cluster forward_cluster;
  Cluster reverse_cluster;
};
// Throws AssumptionAError when the model has no admissible cluster.
TwoSidedContext make_two_sided_context(const HmmModel& model);
TwoSidedContext swap_directions(const TwoSidedContext& context);

// Path of (Y', X') with Y'_k = Y_{-k}.
SamplePath reverse_path(const SamplePath& path);

struct TwoSidedSample {
  std::int64_t t = 0, z = 0, n = 0, w = 0;
  double tv = 0.0;  // between pi_t[x_z^n] and pi_t[x_{t-w}^{t+w}]
  int kappa_fwd = 0;  // r-blocks of x_z^t
  int kappa_rev = 0;  // reversed r-blocks of x_t^n
  double bound = 4.0;  // 2 rho^kappa_fwd + 2 rho~^kappa_rev, certifies tv
  int proxy_kappa_fwd = 0;
  int proxy_kappa_rev = 0;
  double proxy_bound = 4.0;  // same certificate for the wide window itself
  bool violation = false;
};

// Requires t - w <= z <= t <= n <= t + w inside the path.
TwoSidedSample two_sided_approximation(const TwoSidedContext& context, const SamplePath& path,
                                       std::int64_t t, std::int64_t z, std::int64_t n,
                                       std::int64_t w);

// Smallest margin m of the form r j + 1 with 2 rho^(p_r j) <= target / 2 in each
// direction (max over the two), so the certificate is below target when kappa
// sits at its ergodic mean.
std::int64_t certified_margin(const TwoSidedContext& context, double target);

struct TwoSidedConfig {
  std::vector<std::int64_t> margins;  // symmetric margins m: z = t - m, n = t + m
  std::int64_t half_width = 0;        // 0 means 10 * certified_margin
  double target = 1e-6;
  int replicates = 100;
  std::uint64_t seed = 1;
};

struct TwoSidedRecord {
  int replicate = 0;
  std::uint64_t seed = 0;
  TwoSidedSample sample;
};

struct TwoSidedRun {
  std::int64_t certified_margin = 0;
  std::int64_t half_width = 0;
  std::vector<std::int64_t> margins;
  std::vector<double> median_tv;  // per margin
  std::vector<TwoSidedRecord> records;
  std::size_t violations = 0;
};

TwoSidedRun run_two_sided_experiment(const TwoSidedContext& context, const TwoSidedConfig& config);

}  // namespace hmmforget
