#include "hmmforget/smoothing.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "hmmforget/errors.hpp"

namespace hmmforget {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void check_symbols(const HmmModel& model, ObservationWindow x) {
  if (x.symbols.empty()) throw DimensionMismatchError("empty observation window");
  for (int s : x.symbols) {
    if (s < 0 || s >= model.num_symbols()) {
      throw DimensionMismatchError("observation symbol " + std::to_string(s) +
                                   " outside alphabet of size " +
                                   std::to_string(model.num_symbols()));
    }
  }
}

// Divides v by its max entry and returns log(max); a zero vector is left alone and
// contributes nothing to the running scale.
double max_normalize(Vector& v) {
  const double m = v.maxCoeff();
  if (m <= 0.0) {
    v.setZero();
    return 0.0;
  }
  v /= m;
  return std::log(m);
}

}  // namespace

ObservationWindow ObservationWindow::slice(std::int64_t from, std::int64_t to) const {
  if (from < first || to > last() || from > to) {
    throw std::out_of_range("window slice [" + std::to_string(from) + ", " + std::to_string(to) +
                            "] outside [" + std::to_string(first) + ", " +
                            std::to_string(last()) + "]");
  }
  return {symbols.subspan(static_cast<std::size_t>(from - first),
                          static_cast<std::size_t>(to - from + 1)),
          from};
}

ObservationWindow window_of(const SamplePath& path) {
  return {std::span<const int>(path.observations), path.origin_offset};
}

ObservationWindow window_of(const SamplePath& path, std::int64_t from, std::int64_t to) {
  return window_of(path).slice(from, to);
}

Vector ScaledTable::unscaled(std::int64_t t) const {
  return scaled(t) * std::exp(scale(t));
}

ScaledForwardTable forward_table(const HmmModel& model, ObservationWindow x) {
  check_symbols(model, x);
  ScaledForwardTable table;
  table.first = x.first;
  table.vectors.reserve(x.size());
  table.log_scale.reserve(x.size());
  const Matrix pt = model.transition().transpose();

  Vector a = model.stationary().cwiseProduct(model.emission().col(x.symbols[0]));
  double scale = max_normalize(a);
  table.vectors.push_back(a);
  table.log_scale.push_back(scale);
  for (std::size_t i = 1; i < x.size(); ++i) {
    a = (pt * a).cwiseProduct(model.emission().col(x.symbols[i]));
    scale += max_normalize(a);
    table.vectors.push_back(a);
    table.log_scale.push_back(scale);
  }
  return table;
}

ScaledBackwardTable backward_table(const HmmModel& model, ObservationWindow x) {
  check_symbols(model, x);
  const std::size_t n = x.size();
  ScaledBackwardTable table;
  table.first = x.first;
  table.vectors.assign(n, Vector());
  table.log_scale.assign(n, 0.0);

  Vector b = Vector::Ones(model.num_states());
  double scale = 0.0;
  table.vectors[n - 1] = b;
  for (std::size_t i = n - 1; i-- > 0;) {
    b = model.transition() * b.cwiseProduct(model.emission().col(x.symbols[i + 1]));
    scale += max_normalize(b);
    table.vectors[i] = b;
    table.log_scale[i] = scale;
  }
  return table;
}

double log_likelihood(const ScaledForwardTable& forward) {
  const double mass = forward.vectors.back().sum();
  if (mass <= 0.0) return kNegInf;
  return forward.log_scale.back() + std::log(mass);
}

double log_likelihood(const HmmModel& model, ObservationWindow x) {
  return log_likelihood(forward_table(model, x));
}

Smoother::Smoother(const HmmModel& model, ObservationWindow x)
    : model_(model),
      symbols_(x.symbols.begin(), x.symbols.end()),
      first_(x.first),
      forward_(forward_table(model, x)),
      backward_(backward_table(model, x)),
      log_likelihood_(hmmforget::log_likelihood(forward_)) {}

bool Smoother::positive_likelihood() const { return log_likelihood_ > kNegInf; }

SmoothingVector Smoother::smoothing_vector(std::int64_t t) const {
  if (!positive_likelihood()) {
    throw ZeroLikelihoodError("observation window [" + std::to_string(first()) + ", " +
                              std::to_string(last()) + "] has zero likelihood");
  }
  if (t < first() || t > last()) {
    throw std::out_of_range("time " + std::to_string(t) + " outside the observation window");
  }
  // Combine in the log domain so that products of two small scaled entries cannot
  // underflow to zero together.
  const Vector& a = forward_.scaled(t);
  const Vector& b = backward_.scaled(t);
  const auto k = a.size();
  Vector logw(k);
  double top = kNegInf;
  for (Eigen::Index s = 0; s < k; ++s) {
    logw(s) = (a(s) > 0.0 && b(s) > 0.0) ? std::log(a(s)) + std::log(b(s)) : kNegInf;
    top = std::max(top, logw(s));
  }
  Vector probs(k);
  for (Eigen::Index s = 0; s < k; ++s) {
    probs(s) = logw(s) == kNegInf ? 0.0 : std::exp(logw(s) - top);
  }
  probs /= probs.sum();
  return {t, first(), last(), std::move(probs)};
}

std::vector<SmoothingVector> Smoother::smoothing_vectors() const {
  std::vector<SmoothingVector> out;
  out.reserve(symbols_.size());
  for (std::int64_t t = first(); t <= last(); ++t) out.push_back(smoothing_vector(t));
  return out;
}

ForwardSmoothingMatrix Smoother::forward_smoothing_matrix(std::int64_t k) const {
  return hmmforget::forward_smoothing_matrix(model_, {std::span<const int>(symbols_), first_}, k,
                                             backward_);
}

SmoothingVector smoothing_vector(const HmmModel& model, ObservationWindow x, std::int64_t t) {
  return Smoother(model, x).smoothing_vector(t);
}

ForwardSmoothingMatrix forward_smoothing_matrix(const HmmModel& model, ObservationWindow x,
                                                std::int64_t k,
                                                const ScaledBackwardTable& backward) {
  if (k < x.first || k >= x.last()) {
    throw std::out_of_range("F_k needs first <= k < last; got k = " + std::to_string(k));
  }
  if (backward.first != x.first || backward.size() != x.size()) {
    throw DimensionMismatchError("backward table does not cover the observation window");
  }
  const int states = model.num_states();
  // Row i of P diag(f(x_{k+1})) diag(b_{k+1}) sums to b_k(i) e^{d_k - d_{k+1}}, so
  // normalizing each row cancels the scale factors exactly.
  const Vector weight = model.emission().col(x.at(k + 1)).cwiseProduct(backward.scaled(k + 1));
  ForwardSmoothingMatrix out;
  out.k = k;
  out.matrix = model.transition() * weight.asDiagonal();
  const Vector& beta_k = backward.scaled(k);
  for (int i = 0; i < states; ++i) {
    const double row_sum = out.matrix.row(i).sum();
    if (beta_k(i) <= 0.0 || row_sum <= 0.0) {
      out.matrix.row(i).setZero();
      out.zero_rows.push_back(i);
    } else {
      out.matrix.row(i) /= row_sum;
    }
  }
  return out;
}

SmoothingVector propagate(const SmoothingVector& pi_z,
                          std::span<const ForwardSmoothingMatrix> matrices) {
  const auto k = pi_z.probs.size();
  Vector row = pi_z.probs;
  std::int64_t expected = pi_z.t;
  for (const auto& f : matrices) {
    if (f.matrix.rows() != k || f.matrix.cols() != k) {
      throw DimensionMismatchError("forward smoothing matrix has the wrong shape");
    }
    if (f.k != expected) {
      throw DimensionMismatchError("forward smoothing matrices are not contiguous: expected k = " +
                                   std::to_string(expected) + ", got " + std::to_string(f.k));
    }
    row = f.matrix.transpose() * row;
    ++expected;
  }
  return {expected, pi_z.window_first, pi_z.window_last, std::move(row)};
}

}  // namespace hmmforget
