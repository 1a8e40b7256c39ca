#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hmmforget/model.hpp"
#include "hmmforget/smoothing.hpp"

namespace hmmforget {

// l(a, b): loss of labelling true state a as b. Entries must be finite and >= 0.
class LossMatrix {
 public:
  explicit LossMatrix(Matrix values);
  static LossMatrix zero_one(int states);

  int size() const { return static_cast<int>(values_.rows()); }
  double operator()(int truth, int guess) const { return values_(truth, guess); }
  const Matrix& values() const { return values_; }
  // The usual convention l(s, s) = 0; not required.
  bool zero_diagonal() const;

 private:
  Matrix values_;
};

// R_t(s | x^n) = sum_a l(a, s) pi_t[x^n](a).
double pointwise_risk(const SmoothingVector& pi, int s, const LossMatrix& loss);
double pointwise_risk(const HmmModel& model, std::span<const int> x, std::int64_t t, int s,
                      const LossMatrix& loss);

// (1/n) sum_i l(a_i, b_i). Throws LengthMismatchError.
double sequence_loss(std::span<const int> truth, std::span<const int> guess,
                     const LossMatrix& loss);

// R(s^n | x^n) from precomputed smoothing vectors of x^n.
double sequence_risk(std::span<const SmoothingVector> posteriors, std::span<const int> labels,
                     const LossMatrix& loss);
double sequence_risk(const HmmModel& model, std::span<const int> x, std::span<const int> labels,
                     const LossMatrix& loss);

struct RiskReport {
  std::size_t n = 0;
  std::uint64_t seed = 0;
  std::vector<int> labels;               // PMAP
  std::vector<double> pointwise_min_risk;  // min_s R_t(s | x^n)
  double pmap_risk = 0.0;                // R(x^n)
  std::vector<int> viterbi_path;
  double viterbi_risk = 0.0;             // R(v^n | x^n)
};

struct PmapResult {
  std::vector<int> labels;
  std::vector<double> pointwise_min_risk;
  double total_risk = 0.0;
};

// Per-position argmin of R_t(. | x^n), lowest index on ties. x holds x_1^n.
// Throws ZeroLikelihoodError.
PmapResult pmap_classify(const HmmModel& model, std::span<const int> x, const LossMatrix& loss);

// Most probable hidden path. Max-product in the log domain; ties go to the lowest
// state index both at the final state and at every backtracking step. Throws
// ZeroLikelihoodError.
std::vector<int> viterbi(const HmmModel& model, std::span<const int> x);

// PMAP and Viterbi segmentations of one sequence with their risks.
RiskReport risk_report(const HmmModel& model, std::span<const int> x, const LossMatrix& loss);

struct RiskConfig {
  std::vector<std::size_t> n_grid{1u << 10, 1u << 12, 1u << 14, 1u << 16};
  int replicates = 64;
  std::uint64_t seed = 1;
};

struct RiskRow {
  std::size_t n = 0;
  int replicate = 0;
  std::uint64_t seed = 0;
  double pmap_risk = 0.0;
  double viterbi_risk = 0.0;
};

struct RiskSummary {
  std::size_t n = 0;
  double pmap_mean = 0.0;
  double pmap_stderr = 0.0;
  double pmap_variance = 0.0;
  double viterbi_mean = 0.0;
  double viterbi_stderr = 0.0;
  // |mean_n - mean_{next n}|; NaN on the last grid point.
  double successive_difference = 0.0;
};

struct RiskConvergence {
  std::vector<RiskRow> rows;  // grid order, then replicate order
  std::vector<RiskSummary> summaries;
  double risk_estimate = 0.0;          // R-hat at the last grid point
  double risk_ci = 0.0;                // 95% half width
  double viterbi_risk_estimate = 0.0;  // R_v-hat
  double viterbi_risk_ci = 0.0;
};

// Replicate i at grid index g uses derive_seed(derive_seed(seed, g), i). Throws
// AssumptionAError when no cluster satisfies Assumption A.
RiskConvergence asymptotic_risk_estimate(const HmmModel& model, const LossMatrix& loss,
                                         const RiskConfig& config);

}  // namespace hmmforget
