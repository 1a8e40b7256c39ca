#pragma once

// Brute-force reference implementations used only by tests. Everything here sums
// over explicit state sequences, so it shares no code with the library recursions.

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <vector>

#include "hmmforget/errors.hpp"
#include "hmmforget/model.hpp"
#include "hmmforget/rng.hpp"

namespace oracle {

using hmmforget::HmmModel;
using hmmforget::Matrix;
using hmmforget::Vector;

// Calls fn(seq) for every sequence in {0..k-1}^n, odometer order with seq[0]
// changing fastest.
inline void for_each_sequence(int k, std::size_t n, const std::function<void(const std::vector<int>&)>& fn) {
  std::vector<int> seq(n, 0);
  while (true) {
    fn(seq);
    std::size_t i = 0;
    while (i < n && ++seq[i] == k) seq[i++] = 0;
    if (i == n) return;
  }
}

// P(Y_1^n = y, X_1^n = x) with Y_1 stationary.
inline double joint(const HmmModel& m, const std::vector<int>& y, const std::vector<int>& x) {
  double p = m.stationary()(y[0]) * m.emit(y[0], x[0]);
  for (std::size_t t = 1; t < y.size(); ++t) p *= m.transition()(y[t - 1], y[t]) * m.emit(y[t], x[t]);
  return p;
}

inline double likelihood(const HmmModel& m, const std::vector<int>& x) {
  double total = 0.0;
  for_each_sequence(m.num_states(), x.size(), [&](const std::vector<int>& y) { total += joint(m, y, x); });
  return total;
}

// alpha(x_1^t, s), t is a 0-based position.
inline Vector alpha(const HmmModel& m, const std::vector<int>& x, std::size_t t) {
  Vector a = Vector::Zero(m.num_states());
  std::vector<int> prefix(x.begin(), x.begin() + static_cast<long>(t) + 1);
  for_each_sequence(m.num_states(), t + 1, [&](const std::vector<int>& y) { a(y[t]) += joint(m, y, prefix); });
  return a;
}

// beta(x_{t+1}^n | s): sum over suffixes y_{t+1..n} of prod P f.
inline Vector beta(const HmmModel& m, const std::vector<int>& x, std::size_t t) {
  const int k = m.num_states();
  const std::size_t rest = x.size() - t - 1;
  Vector b = Vector::Zero(k);
  for (int s = 0; s < k; ++s) {
    if (rest == 0) {
      b(s) = 1.0;
      continue;
    }
    for_each_sequence(k, rest, [&](const std::vector<int>& y) {
      double p = 1.0;
      int prev = s;
      for (std::size_t i = 0; i < rest; ++i) {
        p *= m.transition()(prev, y[i]) * m.emit(y[i], x[t + 1 + i]);
        prev = y[i];
      }
      b(s) += p;
    });
  }
  return b;
}

// P(Y_t = . | X_1^n = x), t 0-based. Zero vector when p(x) = 0.
inline Vector posterior(const HmmModel& m, const std::vector<int>& x, std::size_t t) {
  Vector p = Vector::Zero(m.num_states());
  for_each_sequence(m.num_states(), x.size(), [&](const std::vector<int>& y) { p(y[t]) += joint(m, y, x); });
  const double z = p.sum();
  return z > 0 ? Vector(p / z) : p;
}

// P(Y_{k+1} = j | Y_k = i, X_{k+1}^n = x_{k+1}^n); row i is zero when the
// conditioning event has probability 0. k is 0-based.
inline Matrix conditional_transition(const HmmModel& m, const std::vector<int>& x, std::size_t k) {
  const int K = m.num_states();
  const std::size_t rest = x.size() - k - 1;
  Matrix f = Matrix::Zero(K, K);
  for (int i = 0; i < K; ++i) {
    for_each_sequence(K, rest, [&](const std::vector<int>& y) {
      double p = 1.0;
      int prev = i;
      for (std::size_t u = 0; u < rest; ++u) {
        p *= m.transition()(prev, y[u]) * m.emit(y[u], x[k + 1 + u]);
        prev = y[u];
      }
      f(i, y[0]) += p;
    });
    const double z = f.row(i).sum();
    if (z > 0) f.row(i) /= z;
  }
  return f;
}

// Subsets C (bitmask) satisfying min_{j in C} P_j(G_C) > 0 and
// max_{j not in C} P_j(G_C) = 0, returned with their G_C.
struct ClusterCandidate {
  std::vector<int> states;
  std::vector<int> symbols;
};

inline std::vector<ClusterCandidate> clusters(const HmmModel& m) {
  const int K = m.num_states(), M = m.num_symbols();
  std::vector<ClusterCandidate> out;
  for (unsigned mask = 1; mask < (1u << K); ++mask) {
    std::vector<int> g;
    for (int x = 0; x < M; ++x) {
      bool all = true;
      for (int i = 0; i < K; ++i)
        if ((mask >> i & 1u) && m.emit(i, x) <= 0) all = false;
      if (all) g.push_back(x);
    }
    double min_in = std::numeric_limits<double>::infinity(), max_out = 0.0;
    for (int j = 0; j < K; ++j) {
      double mass = 0.0;
      for (int x : g) mass += m.emit(j, x);
      if (mask >> j & 1u) min_in = std::min(min_in, mass);
      else max_out = std::max(max_out, mass);
    }
    if (min_in > 0 && max_out == 0.0) {
      ClusterCandidate c;
      for (int i = 0; i < K; ++i)
        if (mask >> i & 1u) c.states.push_back(i);
      c.symbols = g;
      out.push_back(c);
    }
  }
  return out;
}

// P(X_1^r in X_o^r) by summing over all r-state sequences.
inline double p_r(const HmmModel& m, const std::vector<int>& xo, int r) {
  const int K = m.num_states();
  Vector mass = Vector::Zero(K);
  for (int i = 0; i < K; ++i)
    for (int x : xo) mass(i) += m.emit(i, x);
  double total = 0.0;
  for_each_sequence(K, static_cast<std::size_t>(r), [&](const std::vector<int>& y) {
    double p = m.stationary()(y[0]) * mass(y[0]);
    for (int t = 1; t < r; ++t) p *= m.transition()(y[t - 1], y[t]) * mass(y[t]);
    total += p;
  });
  return total;
}

struct McEstimate {
  double mean = 0.0;
  double se = 0.0;
};

// Independent stationary r-blocks drawn with a sampler written here, not simulate().
inline McEstimate p_r_monte_carlo(const HmmModel& m, const std::vector<int>& xo, int r,
                                  std::size_t samples, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int M = m.num_symbols();
  auto draw = [&](auto row) {
    double v = u(gen), acc = 0.0;
    int last = 0;
    for (int i = 0; i < static_cast<int>(row.size()); ++i) {
      if (row(i) <= 0) continue;
      acc += row(i);
      last = i;
      if (v < acc) return i;
    }
    return last;
  };
  std::vector<char> in_xo(static_cast<std::size_t>(M), 0);
  for (int x : xo) in_xo[static_cast<std::size_t>(x)] = 1;
  std::size_t hits = 0;
  for (std::size_t s = 0; s < samples; ++s) {
    int y = draw(m.stationary());
    bool ok = true;
    for (int t = 0; t < r; ++t) {
      if (t > 0) y = draw(Vector(m.transition().row(y).transpose()));
      const int x = draw(Vector(m.emission().row(y).transpose()));
      if (!in_xo[static_cast<std::size_t>(x)]) ok = false;
    }
    hits += ok;
  }
  const double p = static_cast<double>(hits) / static_cast<double>(samples);
  return {p, std::sqrt(p * (1 - p) / static_cast<double>(samples))};
}

// Sequence minimizing (1/n) sum_t sum_a l(a, s_t) pi_t(a) over all K^n labelings.
inline double min_risk(const HmmModel& m, const std::vector<int>& x, const Matrix& loss) {
  const std::size_t n = x.size();
  std::vector<Vector> post;
  for (std::size_t t = 0; t < n; ++t) post.push_back(posterior(m, x, t));
  double best = std::numeric_limits<double>::infinity();
  for_each_sequence(m.num_states(), n, [&](const std::vector<int>& s) {
    double r = 0.0;
    for (std::size_t t = 0; t < n; ++t) r += loss.col(s[t]).dot(post[t]);
    best = std::min(best, r / static_cast<double>(n));
  });
  return best;
}

// Argmax of the log joint, accumulated as log pi + log f, then + log P + log f per
// step. Among exact ties the winner is the smallest sequence compared from the last
// position backwards.
inline std::vector<int> viterbi(const HmmModel& m, const std::vector<int>& x) {
  auto lg = [](double p) { return p > 0 ? std::log(p) : -std::numeric_limits<double>::infinity(); };
  std::vector<int> best;
  double best_score = -std::numeric_limits<double>::infinity();
  auto reverse_less = [](const std::vector<int>& a, const std::vector<int>& b) {
    for (std::size_t i = a.size(); i-- > 0;)
      if (a[i] != b[i]) return a[i] < b[i];
    return false;
  };
  for_each_sequence(m.num_states(), x.size(), [&](const std::vector<int>& y) {
    double s = lg(m.stationary()(y[0])) + lg(m.emit(y[0], x[0]));
    for (std::size_t t = 1; t < y.size(); ++t) {
      s = s + lg(m.transition()(y[t - 1], y[t]));
      s = s + lg(m.emit(y[t], x[t]));
    }
    if (best.empty() || s > best_score || (s == best_score && reverse_less(y, best))) {
      best = y;
      best_score = s;
    }
  });
  return best;
}

// Random probability row with entries zeroed with probability zero_prob (never all).
inline Vector random_row(hmmforget::Rng& rng, int n, double zero_prob) {
  Vector v(n);
  for (int i = 0; i < n; ++i) v(i) = rng.uniform() < zero_prob ? 0.0 : 0.05 + rng.uniform();
  if (v.sum() == 0) v(static_cast<int>(rng.below(static_cast<std::uint64_t>(n)))) = 1.0;
  return v / v.sum();
}

// Random valid model; retries until build_model accepts it.
inline HmmModel random_model(hmmforget::Rng& rng, int k, int m, double p_zero = 0.0,
                             double f_zero = 0.0) {
  while (true) {
    Matrix P(k, k), F(k, m);
    for (int i = 0; i < k; ++i) P.row(i) = random_row(rng, k, p_zero).transpose();
    for (int i = 0; i < k; ++i) F.row(i) = random_row(rng, m, f_zero).transpose();
    try {
      return hmmforget::build_model(P, F);
    } catch (const hmmforget::ModelValidationError&) {
    }
  }
}

inline std::vector<int> random_symbols(hmmforget::Rng& rng, int m, std::size_t n) {
  std::vector<int> x(n);
  for (auto& s : x) s = static_cast<int>(rng.below(static_cast<std::uint64_t>(m)));
  return x;
}

inline double max_rel_diff(const Vector& a, const Vector& b) {
  double worst = 0.0;
  for (int i = 0; i < a.size(); ++i) {
    const double scale = std::max({std::abs(a(i)), std::abs(b(i)), 1e-300});
    worst = std::max(worst, std::abs(a(i) - b(i)) / scale);
  }
  return worst;
}

}  // namespace oracle
