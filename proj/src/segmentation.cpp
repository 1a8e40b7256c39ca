#include "hmmforget/segmentation.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "hmmforget/errors.hpp"
#include "hmmforget/parallel.hpp"
#include "hmmforget/rng.hpp"
#include "hmmforget/stats.hpp"

namespace hmmforget {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kZ95 = 1.959963984540054;

void check_loss(const HmmModel& model, const LossMatrix& loss) {
  if (loss.size() != model.num_states()) {
    throw DimensionMismatchError("loss matrix is " + std::to_string(loss.size()) +
                                 " x " + std::to_string(loss.size()) + " but the model has " +
                                 std::to_string(model.num_states()) + " states");
  }
}

double safe_log(double p) { return p > 0.0 ? std::log(p) : kNegInf; }

}  // namespace

LossMatrix::LossMatrix(Matrix values) : values_(std::move(values)) {
  if (values_.rows() == 0 || values_.rows() != values_.cols()) {
    throw DimensionMismatchError("loss matrix must be square and nonempty");
  }
  if (!values_.allFinite() || (values_.array() < 0.0).any()) {
    throw NegativeEntryError("loss matrix entries must be finite and nonnegative");
  }
}

LossMatrix LossMatrix::zero_one(int states) {
  return LossMatrix(Matrix::Ones(states, states) - Matrix::Identity(states, states));
}

bool LossMatrix::zero_diagonal() const { return (values_.diagonal().array() == 0.0).all(); }

double pointwise_risk(const SmoothingVector& pi, int s, const LossMatrix& loss) {
  return loss.values().col(s).dot(pi.probs);
}

double pointwise_risk(const HmmModel& model, std::span<const int> x, std::int64_t t, int s,
                      const LossMatrix& loss) {
  check_loss(model, loss);
  return pointwise_risk(smoothing_vector(model, {x, 1}, t), s, loss);
}

double sequence_loss(std::span<const int> truth, std::span<const int> guess,
                     const LossMatrix& loss) {
  if (truth.size() != guess.size()) {
    throw LengthMismatchError("sequence_loss: sequences have lengths " +
                              std::to_string(truth.size()) + " and " +
                              std::to_string(guess.size()));
  }
  if (truth.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) total += loss(truth[i], guess[i]);
  return total / static_cast<double>(truth.size());
}

double sequence_risk(std::span<const SmoothingVector> posteriors, std::span<const int> labels,
                     const LossMatrix& loss) {
  if (posteriors.size() != labels.size()) {
    throw LengthMismatchError("sequence_risk: labels and posteriors differ in length");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    total += pointwise_risk(posteriors[i], labels[i], loss);
  }
  return total / static_cast<double>(labels.size());
}

double sequence_risk(const HmmModel& model, std::span<const int> x, std::span<const int> labels,
                     const LossMatrix& loss) {
  check_loss(model, loss);
  const auto posteriors = Smoother(model, {x, 1}).smoothing_vectors();
  return sequence_risk(posteriors, labels, loss);
}

namespace {

PmapResult pmap_from(std::span<const SmoothingVector> posteriors, const LossMatrix& loss) {
  PmapResult out;
  out.labels.reserve(posteriors.size());
  out.pointwise_min_risk.reserve(posteriors.size());
  double total = 0.0;
  for (const auto& pi : posteriors) {
    int best = 0;
    double best_risk = pointwise_risk(pi, 0, loss);
    for (int s = 1; s < loss.size(); ++s) {
      const double r = pointwise_risk(pi, s, loss);
      if (r < best_risk) {
        best = s;
        best_risk = r;
      }
    }
    out.labels.push_back(best);
    out.pointwise_min_risk.push_back(best_risk);
    total += best_risk;
  }
  out.total_risk = total / static_cast<double>(posteriors.size());
  return out;
}

}  // namespace

PmapResult pmap_classify(const HmmModel& model, std::span<const int> x, const LossMatrix& loss) {
  check_loss(model, loss);
  const auto posteriors = Smoother(model, {x, 1}).smoothing_vectors();
  return pmap_from(posteriors, loss);
}

std::vector<int> viterbi(const HmmModel& model, std::span<const int> x) {
  const int k = model.num_states();
  const std::size_t n = x.size();
  if (n == 0) return {};
  for (int s : x) {
    if (s < 0 || s >= model.num_symbols()) {
      throw DimensionMismatchError("observation symbol outside the alphabet");
    }
  }
  Matrix log_p(k, k);
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) log_p(i, j) = safe_log(model.transition()(i, j));
  }
  auto log_f = [&](int s, int symbol) { return safe_log(model.emit(s, symbol)); };

  std::vector<double> delta(k), next(k);
  std::vector<std::vector<int>> back(n, std::vector<int>(k, 0));
  for (int s = 0; s < k; ++s) delta[s] = safe_log(model.stationary()(s)) + log_f(s, x[0]);
  for (std::size_t t = 1; t < n; ++t) {
    for (int j = 0; j < k; ++j) {
      double best = kNegInf;
      int arg = 0;
      for (int i = 0; i < k; ++i) {
        const double score = delta[i] + log_p(i, j);
        if (score > best) {
          best = score;
          arg = i;
        }
      }
      next[j] = best + log_f(j, x[t]);
      back[t][j] = arg;
    }
    delta.swap(next);
  }
  int last = 0;
  for (int s = 1; s < k; ++s) {
    if (delta[s] > delta[last]) last = s;
  }
  if (delta[last] == kNegInf) throw ZeroLikelihoodError("viterbi: observations have zero likelihood");
  std::vector<int> path(n);
  path[n - 1] = last;
  for (std::size_t t = n - 1; t > 0; --t) path[t - 1] = back[t][path[t]];
  return path;
}

RiskReport risk_report(const HmmModel& model, std::span<const int> x, const LossMatrix& loss) {
  check_loss(model, loss);
  const auto posteriors = Smoother(model, {x, 1}).smoothing_vectors();
  auto pmap = pmap_from(posteriors, loss);
  RiskReport report;
  report.n = x.size();
  report.labels = std::move(pmap.labels);
  report.pointwise_min_risk = std::move(pmap.pointwise_min_risk);
  report.pmap_risk = pmap.total_risk;
  report.viterbi_path = viterbi(model, x);
  report.viterbi_risk = sequence_risk(posteriors, report.viterbi_path, loss);
  return report;
}

RiskConvergence asymptotic_risk_estimate(const HmmModel& model, const LossMatrix& loss,
                                         const RiskConfig& config) {
  check_loss(model, loss);
  if (admissible_clusters(model).empty()) {
    throw AssumptionAError("risk convergence needs a cluster satisfying Assumption A");
  }
  if (config.replicates < 1 || config.n_grid.empty()) {
    throw std::invalid_argument("risk estimate needs a nonempty grid and >= 1 replicate");
  }
  RiskConvergence out;
  const auto reps = static_cast<std::size_t>(config.replicates);
  out.rows.resize(config.n_grid.size() * reps);
  parallel_for(out.rows.size(), [&](std::size_t cell) {
    const std::size_t g = cell / reps;
    const std::size_t rep = cell % reps;
    const std::uint64_t seed = derive_seed(derive_seed(config.seed, g), rep);
    const auto path = simulate(model, config.n_grid[g], 1, seed);
    const auto report = risk_report(model, path.observations, loss);
    out.rows[cell] = {config.n_grid[g], static_cast<int>(rep), seed, report.pmap_risk,
                      report.viterbi_risk};
  });

  for (std::size_t g = 0; g < config.n_grid.size(); ++g) {
    std::vector<double> pmap, vit;
    for (std::size_t rep = 0; rep < reps; ++rep) {
      pmap.push_back(out.rows[g * reps + rep].pmap_risk);
      vit.push_back(out.rows[g * reps + rep].viterbi_risk);
    }
    RiskSummary s;
    s.n = config.n_grid[g];
    s.pmap_mean = stats::mean(pmap);
    s.pmap_stderr = stats::standard_error(pmap);
    s.pmap_variance = stats::variance(pmap);
    s.viterbi_mean = stats::mean(vit);
    s.viterbi_stderr = stats::standard_error(vit);
    s.successive_difference = std::numeric_limits<double>::quiet_NaN();
    out.summaries.push_back(s);
  }
  for (std::size_t g = 0; g + 1 < out.summaries.size(); ++g) {
    out.summaries[g].successive_difference =
        std::abs(out.summaries[g].pmap_mean - out.summaries[g + 1].pmap_mean);
  }
  const auto& final = out.summaries.back();
  out.risk_estimate = final.pmap_mean;
  out.risk_ci = kZ95 * final.pmap_stderr;
  out.viterbi_risk_estimate = final.viterbi_mean;
  out.viterbi_risk_ci = kZ95 * final.viterbi_stderr;
  return out;
}

}  // namespace hmmforget
