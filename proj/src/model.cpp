#include "hmmforget/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>
#include <sstream>

#include "hmmforget/contraction.hpp"
#include "hmmforget/errors.hpp"
#include "hmmforget/rng.hpp"

namespace hmmforget {

namespace {

constexpr double kIngestRowTolerance = 1e-9;
constexpr double kStationaryResidual = 1e-12;
constexpr long kMaxPowerIterations = 1'000'000;

void check_and_normalize_rows(Matrix& m, const char* what) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      const double v = m(i, j);
      if (!std::isfinite(v) || v < 0.0) {
        std::ostringstream msg;
        msg << what << "(" << i << ", " << j << ") = " << v << " is not a nonnegative number";
        throw NegativeEntryError(msg.str());
      }
    }
    const double sum = m.row(i).sum();
    if (std::abs(sum - 1.0) > kIngestRowTolerance) {
      std::ostringstream msg;
      msg << what << " row " << i << " sums to " << sum;
      throw RowSumError(msg.str());
    }
    m.row(i) /= sum;
  }
}

// Breadth-first levels from state 0 along positive transitions; -1 = unreachable.
std::vector<int> bfs_levels(const Matrix& p, bool transpose) {
  const int k = static_cast<int>(p.rows());
  std::vector<int> level(k, -1);
  std::queue<int> q;
  level[0] = 0;
  q.push(0);
  while (!q.empty()) {
    const int i = q.front();
    q.pop();
    for (int j = 0; j < k; ++j) {
      const double w = transpose ? p(j, i) : p(i, j);
      if (w > 0.0 && level[j] < 0) {
        level[j] = level[i] + 1;
        q.push(j);
      }
    }
  }
  return level;
}

void check_irreducible_aperiodic(const Matrix& p) {
  const auto forward = bfs_levels(p, false);
  const auto backward = bfs_levels(p, true);
  for (std::size_t i = 0; i < forward.size(); ++i) {
    if (forward[i] < 0 || backward[i] < 0) {
      throw ReducibleChainError("transition matrix is reducible: state " + std::to_string(i) +
                                " does not communicate with state 0");
    }
  }
  // The period of an irreducible chain is the gcd of level(i) + 1 - level(j) over
  // all edges i -> j.
  int period = 0;
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    for (Eigen::Index j = 0; j < p.cols(); ++j) {
      if (p(i, j) > 0.0) period = std::gcd(period, std::abs(forward[i] + 1 - forward[j]));
    }
  }
  if (period != 1) {
    throw PeriodicChainError("transition matrix is periodic with period " +
                             std::to_string(period));
  }
}

double stationary_residual(const Matrix& p, const Vector& pi) {
  return (p.transpose() * pi - pi).lpNorm<1>();
}

}  // namespace

Vector stationary_distribution(const Matrix& transition) {
  const Eigen::Index k = transition.rows();
  Matrix a = transition.transpose() - Matrix::Identity(k, k);
  a.row(k - 1).setOnes();
  Vector b = Vector::Zero(k);
  b(k - 1) = 1.0;
  Vector pi = a.fullPivLu().solve(b);
  if (!pi.allFinite()) pi = Vector::Constant(k, 1.0 / static_cast<double>(k));
  pi = pi.cwiseMax(0.0);
  pi /= pi.sum();
  // two unconditional power steps: cheap, and they restore exact symmetry the LU
  // solve can break by an ulp (matters for tie-breaking downstream)
  for (int it = 0; it < 2; ++it) {
    pi = transition.transpose() * pi;
    pi /= pi.sum();
  }

  for (long it = 0; it < kMaxPowerIterations; ++it) {
    if (stationary_residual(transition, pi) < kStationaryResidual) return pi;
    pi = transition.transpose() * pi;
    pi /= pi.sum();
  }
  if (stationary_residual(transition, pi) < kStationaryResidual) return pi;
  throw StationaryConvergenceError("power iteration did not reach residual 1e-12");
}

HmmModel build_model(const Matrix& transition, const Matrix& emission, std::string name) {
  if (transition.rows() == 0 || transition.rows() != transition.cols()) {
    throw DimensionMismatchError("transition matrix must be square and nonempty");
  }
  if (emission.rows() != transition.rows() || emission.cols() == 0) {
    throw DimensionMismatchError("emission matrix must have one nonempty row per state");
  }
  Matrix p = transition;
  Matrix f = emission;
  check_and_normalize_rows(p, "transition");
  check_and_normalize_rows(f, "emission");
  check_irreducible_aperiodic(p);
  Vector pi = stationary_distribution(p);
  return HmmModel(std::move(p), std::move(f), std::move(pi), std::move(name));
}

bool Cluster::contains(int state) const {
  return std::binary_search(states.begin(), states.end(), state);
}

bool Cluster::in_support(int symbol) const {
  return std::binary_search(common_support.begin(), common_support.end(), symbol);
}

std::vector<Cluster> detect_clusters(const HmmModel& model) {
  // For a finite alphabet C is a cluster exactly when C = supp(x) := {i : f_i(x) > 0}
  // for some symbol x and no other supp(x') strictly contains C. X_o is then the set
  // of symbols with supp(x) = C.
  const int k = model.num_states();
  const int m = model.num_symbols();
  std::vector<std::vector<int>> signature(m);
  for (int x = 0; x < m; ++x) {
    for (int i = 0; i < k; ++i) {
      if (model.emit(i, x) > 0.0) signature[x].push_back(i);
    }
  }
  auto strictly_contains = [](const std::vector<int>& big, const std::vector<int>& small) {
    return big.size() > small.size() &&
           std::includes(big.begin(), big.end(), small.begin(), small.end());
  };

  std::vector<Cluster> clusters;
  for (int x = 0; x < m; ++x) {
    const auto& sig = signature[x];
    if (sig.empty()) continue;
    const bool seen = std::any_of(clusters.begin(), clusters.end(),
                                  [&](const Cluster& c) { return c.states == sig; });
    if (seen) continue;
    const bool dominated = std::any_of(signature.begin(), signature.end(),
                                       [&](const auto& other) { return strictly_contains(other, sig); });
    if (dominated) continue;

    Cluster c;
    c.states = sig;
    c.eps_lower = std::numeric_limits<double>::infinity();
    for (int y = 0; y < m; ++y) {
      if (signature[y] != sig) continue;
      c.common_support.push_back(y);
      for (int i : sig) {
        c.eps_lower = std::min(c.eps_lower, model.emit(i, y));
        c.density_ceiling = std::max(c.density_ceiling, model.emit(i, y));
      }
    }
    clusters.push_back(std::move(c));
  }
  std::sort(clusters.begin(), clusters.end(),
            [](const Cluster& a, const Cluster& b) { return a.states < b.states; });
  return clusters;
}

Matrix cluster_block(const HmmModel& model, const Cluster& cluster) {
  const auto n = static_cast<Eigen::Index>(cluster.states.size());
  Matrix r(n, n);
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index b = 0; b < n; ++b) {
      r(a, b) = model.transition()(cluster.states[a], cluster.states[b]);
    }
  }
  return r;
}

Cluster verify_assumption_a(const HmmModel& model, const Cluster& cluster) {
  if (cluster.states.empty() || cluster.common_support.empty()) {
    throw AssumptionAError("cluster has no states or an empty common support");
  }
  const Matrix block = cluster_block(model, cluster);
  const auto size = static_cast<int>(cluster.states.size());
  const int cutoff = (size - 1) * (size - 1) + 1;

  using BoolMatrix = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;
  const BoolMatrix pattern = (block.array() > 0.0).matrix();
  BoolMatrix reach = pattern;
  Matrix power = block;
  for (int r = 1; r <= cutoff; ++r) {
    if (reach.all()) {
      Cluster out = cluster;
      out.primitivity_exponent = r;
      out.block_power_ratio = power.minCoeff() / power.maxCoeff();
      out.rho = rho_constant(out);
      out.p_r = compute_p_r(model, out, r);
      return out;
    }
    // Boolean product: reach <- reach * pattern.
    BoolMatrix next = BoolMatrix::Constant(size, size, false);
    for (int i = 0; i < size; ++i) {
      for (int l = 0; l < size; ++l) {
        if (!reach(i, l)) continue;
        next.row(i) = next.row(i).array() || pattern.row(l).array();
      }
    }
    reach = std::move(next);
    power = power * block;
  }
  std::ostringstream msg;
  msg << "cluster block of size " << size << " has no strictly positive power up to "
      << cutoff;
  throw NotPrimitiveError(msg.str());
}

std::vector<Cluster> admissible_clusters(const HmmModel& model) {
  std::vector<Cluster> out;
  for (const auto& c : detect_clusters(model)) {
    try {
      out.push_back(verify_assumption_a(model, c));
    } catch (const AssumptionAError&) {
    }
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const Cluster& a, const Cluster& b) { return *a.rho < *b.rho; });
  return out;
}

double compute_p_r(const HmmModel& model, const Cluster& cluster) {
  if (!cluster.primitivity_exponent) {
    throw AssumptionAError("p_r requires a cluster with verified Assumption A");
  }
  return compute_p_r(model, cluster, *cluster.primitivity_exponent);
}

double compute_p_r(const HmmModel& model, const Cluster& cluster, int r) {
  const int k = model.num_states();
  Vector d = Vector::Zero(k);
  for (int i = 0; i < k; ++i) {
    for (int x : cluster.common_support) d(i) += model.emit(i, x);
  }
  // pi^T (D P)^{r-1} D 1, evaluated right to left.
  Vector v = d;
  for (int step = 1; step < r; ++step) {
    v = (d.array() * (model.transition() * v).array()).matrix();
  }
  return model.stationary().dot(v);
}

SamplePath simulate(const HmmModel& model, std::size_t length, std::int64_t origin_offset,
                    std::uint64_t seed) {
  const int k = model.num_states();
  std::vector<std::vector<double>> trans(k), emit(k);
  for (int i = 0; i < k; ++i) {
    trans[i].assign(model.transition().row(i).begin(), model.transition().row(i).end());
    emit[i].assign(model.emission().row(i).begin(), model.emission().row(i).end());
  }
  const std::vector<double> init(model.stationary().begin(), model.stationary().end());

  SamplePath path;
  path.origin_offset = origin_offset;
  path.seed = seed;
  path.states.reserve(length);
  path.observations.reserve(length);
  Rng rng(seed);
  int y = 0;
  for (std::size_t t = 0; t < length; ++t) {
    y = rng.categorical(t == 0 ? std::span<const double>(init) : std::span<const double>(trans[y]));
    path.states.push_back(y);
    path.observations.push_back(rng.categorical(emit[y]));
  }
  return path;
}

}  // namespace hmmforget
