#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hmmforget/model.hpp"

namespace hmmforget {

// Observations x_u^v with absolute time indices: symbols[0] is x_u, u = first.
struct ObservationWindow {
  std::span<const int> symbols;
  std::int64_t first = 1;

  std::int64_t last() const { return first + static_cast<std::int64_t>(symbols.size()) - 1; }
  std::size_t size() const { return symbols.size(); }
  int at(std::int64_t t) const { return symbols[static_cast<std::size_t>(t - first)]; }

  // Sub-window [from, to] of this window; both ends must lie inside it.
  ObservationWindow slice(std::int64_t from, std::int64_t to) const;
};

ObservationWindow window_of(const SamplePath& path);
ObservationWindow window_of(const SamplePath& path, std::int64_t from, std::int64_t to);

// Per-time vectors with max-norm 1 (or identically 0) and cumulative natural-log
// scales: the unscaled quantity at time t is vectors[t] * exp(log_scale[t]).
struct ScaledTable {
  std::int64_t first = 1;
  std::vector<Vector> vectors;
  std::vector<double> log_scale;

  std::size_t size() const { return vectors.size(); }
  const Vector& scaled(std::int64_t t) const { return vectors[index(t)]; }
  double scale(std::int64_t t) const { return log_scale[index(t)]; }
  // exp-reconstructed values; may underflow on long windows.
  Vector unscaled(std::int64_t t) const;

 private:
  std::size_t index(std::int64_t t) const { return static_cast<std::size_t>(t - first); }
};

// Entry t holds alpha(x_u^t, .) = p(x_u^t | Y_t = .) P(Y_t = .).
struct ScaledForwardTable : ScaledTable {};
// Entry t holds beta(x_{t+1}^v | .), equal to 1 at t = v.
struct ScaledBackwardTable : ScaledTable {};

ScaledForwardTable forward_table(const HmmModel& model, ObservationWindow x);
ScaledBackwardTable backward_table(const HmmModel& model, ObservationWindow x);

// log p(x_u^v); -infinity when the window is impossible under the model.
double log_likelihood(const ScaledForwardTable& forward);
double log_likelihood(const HmmModel& model, ObservationWindow x);

// pi_t[x_u^v] = P(Y_t in . | X_u^v = x_u^v).
struct SmoothingVector {
  std::int64_t t = 0;
  std::int64_t window_first = 0;
  std::int64_t window_last = 0;
  Vector probs;
};

// Transition matrix of the hidden chain conditioned on x_{k+1}^n. Row i is zero,
// and listed in zero_rows, when beta(x_{k+1}^n | i) = 0.
struct ForwardSmoothingMatrix {
  std::int64_t k = 0;
  Matrix matrix;
  std::vector<int> zero_rows;
};

// Forward and backward tables of one window, computed once and queried many times.
class Smoother {
 public:
  Smoother(const HmmModel& model, ObservationWindow x);

  std::int64_t first() const { return first_; }
  std::int64_t last() const { return first_ + static_cast<std::int64_t>(symbols_.size()) - 1; }
  ObservationWindow window() const { return {std::span<const int>(symbols_), first_}; }
  double log_likelihood() const { return log_likelihood_; }
  bool positive_likelihood() const;

  const ScaledForwardTable& forward() const { return forward_; }
  const ScaledBackwardTable& backward() const { return backward_; }

  // Throws ZeroLikelihoodError on an impossible window, std::out_of_range when t
  // lies outside it.
  SmoothingVector smoothing_vector(std::int64_t t) const;
  std::vector<SmoothingVector> smoothing_vectors() const;

  // Defined for first() <= k < last().
  ForwardSmoothingMatrix forward_smoothing_matrix(std::int64_t k) const;

 private:
  HmmModel model_;
  std::vector<int> symbols_;
  std::int64_t first_;
  ScaledForwardTable forward_;
  ScaledBackwardTable backward_;
  double log_likelihood_;
};

SmoothingVector smoothing_vector(const HmmModel& model, ObservationWindow x, std::int64_t t);

ForwardSmoothingMatrix forward_smoothing_matrix(const HmmModel& model, ObservationWindow x,
                                                std::int64_t k,
                                                const ScaledBackwardTable& backward);

// pi'_z F_z ... F_{t-1}; the matrices must be K x K with consecutive k starting at
// pi_z.t. Zero rows absorb whatever mass reaches them. Throws DimensionMismatchError.
SmoothingVector propagate(const SmoothingVector& pi_z,
                          std::span<const ForwardSmoothingMatrix> matrices);

}  // namespace hmmforget
