#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace hmmforget {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Finite-alphabet HMM with a stationary double-sided hidden chain.
//
// transition(i, j) = P(Y_{t+1} = j | Y_t = i); emission(i, x) = P(X_t = x | Y_t = i).
// Instances are only produced by build_model and are immutable afterwards.
class HmmModel {
 public:
  int num_states() const { return static_cast<int>(transition_.rows()); }
  int num_symbols() const { return static_cast<int>(emission_.cols()); }

  const Matrix& transition() const { return transition_; }
  const Matrix& emission() const { return emission_; }
  const Vector& stationary() const { return stationary_; }
  const std::string& name() const { return name_; }

  double emit(int state, int symbol) const { return emission_(state, symbol); }

 private:
  friend HmmModel build_model(const Matrix&, const Matrix&, std::string);
  HmmModel(Matrix transition, Matrix emission, Vector stationary, std::string name)
      : transition_(std::move(transition)),
        emission_(std::move(emission)),
        stationary_(std::move(stationary)),
        name_(std::move(name)) {}

  Matrix transition_;
  Matrix emission_;
  Vector stationary_;
  std::string name_;
};

// Validates and renormalizes the matrices, then computes the stationary law.
// Throws RowSumError, NegativeEntryError, ReducibleChainError, PeriodicChainError,
// DimensionMismatchError.
HmmModel build_model(const Matrix& transition, const Matrix& emission, std::string name = {});

// Stationary distribution of an irreducible aperiodic stochastic matrix: a direct
// linear solve polished by power iteration until ||pi P - pi||_1 < 1e-12.
Vector stationary_distribution(const Matrix& transition);

// A maximal state subset whose emission supports share symbols no other state can
// emit. The optional fields are filled by verify_assumption_a.
struct Cluster {
  std::vector<int> states;          // sorted
  std::vector<int> common_support;  // X_o, sorted
  double eps_lower = 0.0;           // min f_i(x), i in states, x in X_o
  double density_ceiling = 0.0;     // max f_i(x), i in states, x in X_o

  std::optional<int> primitivity_exponent;  // least r with R^r > 0
  std::optional<double> block_power_ratio;   // min R^r / max R^r
  std::optional<double> rho;
  std::optional<double> p_r;

  bool contains(int state) const;
  bool in_support(int symbol) const;
  bool assumption_a_verified() const { return primitivity_exponent.has_value(); }
};

std::vector<Cluster> detect_clusters(const HmmModel& model);

// Restricted block R = (P(i, j))_{i, j in C}.
Matrix cluster_block(const HmmModel& model, const Cluster& cluster);

// Fills primitivity_exponent, rho and p_r. Throws NotPrimitiveError when no power
// up to the Wielandt bound (|C| - 1)^2 + 1 of the block is strictly positive.
Cluster verify_assumption_a(const HmmModel& model, const Cluster& cluster);

// Clusters satisfying Assumption A, enriched, sorted by increasing rho. Empty when
// Assumption A fails for the model.
std::vector<Cluster> admissible_clusters(const HmmModel& model);

// P(X_1^r in X_o^r) under stationarity; r defaults to the cluster's exponent.
double compute_p_r(const HmmModel& model, const Cluster& cluster);
double compute_p_r(const HmmModel& model, const Cluster& cluster, int r);

// Realization x_u^v, y_u^v of the stationary HMM, u = origin_offset.
struct SamplePath {
  std::vector<int> states;
  std::vector<int> observations;
  std::int64_t origin_offset = 1;
  std::uint64_t seed = 0;

  std::int64_t first() const { return origin_offset; }
  std::int64_t last() const {
    return origin_offset + static_cast<std::int64_t>(observations.size()) - 1;
  }
  std::size_t size() const { return observations.size(); }
  int observation_at(std::int64_t t) const {
    return observations[static_cast<std::size_t>(t - origin_offset)];
  }
  int state_at(std::int64_t t) const {
    return states[static_cast<std::size_t>(t - origin_offset)];
  }
};

// Draws y_u from the stationary law, then the chain and emissions forward. The draw
// order per step is (state, observation), each one Rng::categorical call.
SamplePath simulate(const HmmModel& model, std::size_t length, std::int64_t origin_offset,
                    std::uint64_t seed);

}  // namespace hmmforget
