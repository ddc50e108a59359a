#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "dcmpr/errors.hpp"
#include "dcmpr/random.hpp"

namespace dcmpr {

using Degree = std::int64_t;

/// Parameters of the floor(Pareto + exponential) degree family.
///
/// In-degrees are floor(X1 + Y1) with X1 ~ Pareto(alpha, x1) and
/// Y1 ~ Exp(lambda1); out-degrees likewise with (beta, x2, lambda2). The
/// Pareto scales are tied to the shapes so that both Pareto parts have mean 1.
struct DegreeParams {
  double alpha = 2.0;
  double beta = 2.5;
  double lambda1 = 1.0;
  double lambda2 = 1.0;

  double x1() const { return (alpha - 1.0) / alpha; }
  double x2() const { return (beta - 1.0) / beta; }

  void validate() const {
    if (!(alpha > 1.0)) throw InvalidParameter("alpha", "must be > 1");
    if (!(beta > 2.0)) throw InvalidParameter("beta", "must be > 2");
    if (!(lambda1 > 0.0)) throw InvalidParameter("lambda1", "must be > 0");
    if (!(lambda2 > 0.0)) throw InvalidParameter("lambda2", "must be > 0");
  }

  /// E[floor(X1 + Y1)], evaluated numerically (see expected_floor_sum).
  double mu() const;
};

namespace detail {

// P(X + Y >= t) for X ~ Pareto(shape, scale) and Y ~ Exp(rate), independent.
inline double floor_sum_survival(double t, double shape, double scale, double rate) {
  if (t <= scale) return 1.0;
  const double gap = t - scale;
  double p = std::exp(-rate * gap);
  const double rt = rate * t;
  if (rt >= 200.0 && (shape + 40.0) / rt < 0.5 && gap > 0.5 * t) {
    // Far tail: expand (1 - y/t)^-shape under the exponential weight, giving
    // (scale/t)^shape * sum_m (shape)_m / (rate t)^m.
    double term = 1.0;
    double series = 1.0;
    for (int m = 0; m < 40 && term > 1e-18 * series; ++m) {
      term *= (shape + m) / rt;
      series += term;
    }
    return p + std::pow(scale / t, shape) * series;
  }
  // Beyond 60/rate the exponential weight is below e^-60.
  const double upper = std::min(gap, 60.0 / rate);
  auto integrand = [&](double y) {
    return rate * std::exp(-rate * y) * std::pow(scale / (t - y), shape);
  };
  p += boost::math::quadrature::gauss_kronrod<double, 15>::integrate(integrand, 0.0, upper, 10,
                                                                      1e-13);
  return p;
}

}  // namespace detail

/// E[floor(X + Y)] = sum_{t >= 1} P(X + Y >= t), truncated once a term drops
/// below `cutoff`.
inline double expected_floor_sum(double shape, double scale, double rate, double cutoff = 1e-12) {
  double sum = 0.0;
  for (std::int64_t t = 1;; ++t) {
    const double term = detail::floor_sum_survival(static_cast<double>(t), shape, scale, rate);
    sum += term;
    if (term < cutoff) break;
  }
  return sum;
}

inline double DegreeParams::mu() const { return expected_floor_sum(alpha, x1(), lambda1); }

/// Finds lambda2 matching E[floor(X2 + Y2)] to E[floor(X1 + Y1)] within
/// `tol`, writes it into `params` and returns it. Bisection runs on a
/// logarithmic scale over [lo, hi]; lambda1 is tried first.
inline double calibrate_lambda2(DegreeParams& params, double tol = 1e-8, double lo = 1e-3,
                                double hi = 1e3) {
  if (!(params.alpha > 1.0)) throw InvalidParameter("alpha", "must be > 1");
  if (!(params.beta > 2.0)) throw InvalidParameter("beta", "must be > 2");
  if (!(params.lambda1 > 0.0)) throw InvalidParameter("lambda1", "must be > 0");
  if (!(tol > 0.0)) throw NoRoot("calibrate_lambda2: tolerance must be positive");
  if (!(lo > 0.0 && hi > lo)) throw InvalidParameter("bracket", "need 0 < lo < hi");

  const double target = expected_floor_sum(params.alpha, params.x1(), params.lambda1);
  const double shape = params.beta;
  const double scale = params.x2();
  auto gap = [&](double rate) { return expected_floor_sum(shape, scale, rate) - target; };

  auto accept = [&](double rate) {
    params.lambda2 = rate;
    return rate;
  };

  if (std::abs(gap(params.lambda1)) <= tol) return accept(params.lambda1);

  // The gap decreases in the rate: a larger rate shrinks the exponential part.
  const double g_lo = gap(lo);
  const double g_hi = gap(hi);
  if (std::abs(g_lo) <= tol) return accept(lo);
  if (std::abs(g_hi) <= tol) return accept(hi);
  if (g_lo < 0.0 || g_hi > 0.0) {
    throw NoRoot("calibrate_lambda2: no sign change of the mean gap over the bracket");
  }
  for (int iter = 0; iter < 400; ++iter) {
    const double mid = std::sqrt(lo * hi);
    const double g = gap(mid);
    if (std::abs(g) <= tol) return accept(mid);
    (g > 0.0 ? lo : hi) = mid;
    if (hi / lo - 1.0 < 4e-16) break;
  }
  throw NoRoot("calibrate_lambda2: bracket collapsed before reaching tolerance");
}

/// kappa0 = min{1 - 1/alpha, 1 - 1/beta, 1/2}.
inline double kappa0(const DegreeParams& params) {
  return std::min({1.0 - 1.0 / params.alpha, 1.0 - 1.0 / params.beta, 0.5});
}

struct Algorithm1Config {
  double delta0 = 0.25;
  double kappa0 = 0.5;
  int max_resamples = 1000;

  /// Config for `params` with kappa0 derived; delta0 defaults to kappa0 / 2.
  static Algorithm1Config for_params(const DegreeParams& params, double delta0 = -1.0,
                                     int max_resamples = 1000) {
    Algorithm1Config cfg;
    cfg.kappa0 = dcmpr::kappa0(params);
    cfg.delta0 = delta0 < 0.0 ? cfg.kappa0 / 2.0 : delta0;
    cfg.max_resamples = max_resamples;
    return cfg;
  }

  void validate(const DegreeParams& params) const {
    if (kappa0 != dcmpr::kappa0(params)) {
      throw InvalidParameter("kappa0", "does not match min{1-1/alpha, 1-1/beta, 1/2}");
    }
    if (!(delta0 > 0.0 && delta0 < kappa0)) throw InvalidParameter("delta0", "must lie in (0, kappa0)");
    if (max_resamples < 1) throw InvalidParameter("max_resamples", "must be positive");
  }

  /// Largest accepted |Delta_n| for a sample of size n: n^(1 - kappa0 + delta0).
  double threshold(std::size_t n) const {
    return std::pow(static_cast<double>(n), 1.0 - kappa0 + delta0);
  }
};

/// Paired in/out degree vectors with equal totals.
class BiDegreeSequence {
 public:
  BiDegreeSequence() = default;

  BiDegreeSequence(std::vector<Degree> in, std::vector<Degree> out)
      : in_(std::move(in)), out_(std::move(out)) {
    if (in_.size() != out_.size()) {
      throw DimensionMismatch("in/out degree vectors differ in length");
    }
    if (in_.empty()) throw InvalidParameter("n", "must be positive");
    const auto negative = [](Degree d) { return d < 0; };
    if (std::any_of(in_.begin(), in_.end(), negative) ||
        std::any_of(out_.begin(), out_.end(), negative)) {
      throw InvalidParameter("degrees", "must be nonnegative");
    }
    const Degree in_sum = std::accumulate(in_.begin(), in_.end(), Degree{0});
    const Degree out_sum = std::accumulate(out_.begin(), out_.end(), Degree{0});
    if (in_sum != out_sum) {
      throw DegreeMismatch("sum of in-degrees " + std::to_string(in_sum) +
                           " != sum of out-degrees " + std::to_string(out_sum));
    }
    total_ = in_sum;
  }

  std::size_t size() const noexcept { return in_.size(); }
  std::span<const Degree> in_degrees() const noexcept { return in_; }
  std::span<const Degree> out_degrees() const noexcept { return out_; }
  Degree in_degree(std::size_t i) const { return in_[i]; }
  Degree out_degree(std::size_t i) const { return out_[i]; }
  Degree total_stubs() const noexcept { return total_; }
  double mean_degree() const { return static_cast<double>(total_) / static_cast<double>(size()); }

  bool operator==(const BiDegreeSequence&) const = default;

 private:
  std::vector<Degree> in_;
  std::vector<Degree> out_;
  Degree total_ = 0;
};

/// Empirical counterpart of E[D^2] / mu: sum D_i^2 / L_n. Diagnostic only.
inline double empirical_lambda(const BiDegreeSequence& seq) {
  double sq = 0.0;
  for (Degree d : seq.out_degrees()) sq += static_cast<double>(d) * static_cast<double>(d);
  return sq / static_cast<double>(seq.total_stubs());
}

struct TargetSequences {
  std::vector<Degree> in;
  std::vector<Degree> out;
};

/// i.i.d. draws of floor(X1 + Y1) (all of them first) then floor(X2 + Y2).
inline TargetSequences sample_target_sequences(std::size_t n, const DegreeParams& params,
                                               RandomStream& rng) {
  if (n == 0) throw InvalidParameter("n", "must be positive");
  params.validate();
  TargetSequences seq;
  seq.in.resize(n);
  seq.out.resize(n);
  const double x1 = params.x1();
  const double x2 = params.x2();
  for (auto& d : seq.in) {
    const double x = rng.pareto(params.alpha, x1);
    d = static_cast<Degree>(std::floor(x + rng.exponential(params.lambda1)));
  }
  for (auto& d : seq.out) {
    const double x = rng.pareto(params.beta, x2);
    d = static_cast<Degree>(std::floor(x + rng.exponential(params.lambda2)));
  }
  return seq;
}

inline std::int64_t degree_imbalance(std::span<const Degree> in, std::span<const Degree> out) {
  std::int64_t delta = 0;
  for (std::size_t i = 0; i < in.size(); ++i) delta += in[i] - out[i];
  return delta;
}

/// Result of the balancing step: the repaired sequence plus what was done.
struct BalanceResult {
  BiDegreeSequence sequence;
  std::int64_t delta = 0;
  std::vector<std::size_t> selected;  // distinct indices that were incremented
};

/// Picks |delta| distinct nodes uniformly without replacement and adds one
/// in-stub to each when delta < 0, or one out-stub when delta > 0.
inline BalanceResult balance_sequences(std::vector<Degree> in, std::vector<Degree> out,
                                       RandomStream& rng) {
  if (in.size() != out.size()) throw DimensionMismatch("in/out sequences differ in length");
  const std::size_t n = in.size();
  BalanceResult result;
  result.delta = degree_imbalance(in, out);
  const auto count = static_cast<std::uint64_t>(std::abs(result.delta));
  if (count > n) {
    throw InvalidParameter("delta", "imbalance exceeds the number of nodes");
  }
  if (count > 0) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = 0; i < count; ++i) {
      const auto j = i + static_cast<std::size_t>(rng.index(n - i));
      std::swap(order[i], order[j]);
    }
    order.resize(count);
    auto& side = result.delta < 0 ? in : out;
    for (std::size_t i : order) ++side[i];
    result.selected = std::move(order);
  }
  result.sequence = BiDegreeSequence(std::move(in), std::move(out));
  return result;
}

struct Algorithm1Trace {
  BiDegreeSequence sequence;
  TargetSequences raw;              // the accepted sample
  std::int64_t delta = 0;
  std::vector<std::size_t> selected;
  int attempts = 0;
};

/// Resamples target sequences until |Delta_n| <= n^(1 - kappa0 + delta0),
/// then balances them. Throws ResampleLimitExceeded after max_resamples
/// rejected samples.
inline Algorithm1Trace run_algorithm1_traced(std::size_t n, const DegreeParams& params,
                                             const Algorithm1Config& config, RandomStream& rng) {
  if (n == 0) throw InvalidParameter("n", "must be positive");
  params.validate();
  config.validate(params);
  const double limit = config.threshold(n);
  for (int attempt = 1; attempt <= config.max_resamples; ++attempt) {
    TargetSequences raw = sample_target_sequences(n, params, rng);
    const std::int64_t delta = degree_imbalance(raw.in, raw.out);
    if (static_cast<double>(std::abs(delta)) > limit) continue;
    Algorithm1Trace trace;
    auto balanced = balance_sequences(raw.in, raw.out, rng);
    trace.sequence = std::move(balanced.sequence);
    trace.raw = std::move(raw);
    trace.delta = delta;
    trace.selected = std::move(balanced.selected);
    trace.attempts = attempt;
    return trace;
  }
  throw ResampleLimitExceeded("no sample within the imbalance threshold after " +
                              std::to_string(config.max_resamples) + " attempts");
}

inline BiDegreeSequence run_algorithm1(std::size_t n, const DegreeParams& params,
                                       const Algorithm1Config& config, RandomStream& rng) {
  return std::move(run_algorithm1_traced(n, params, config, rng).sequence);
}

}  // namespace dcmpr
