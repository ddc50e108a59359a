#pragma once

#include <cmath>
#include <cstdint>

#include "dcmpr/degree_model.hpp"
#include "dcmpr/experiments.hpp"

// Default configurations for the published experiments. All share
// alpha = 2, beta = 2.5, lambda1 = 1 with lambda2 calibrated to match means.
namespace dcmpr::presets {

inline DegreeParams reference_params() {
  static const DegreeParams params = [] {
    DegreeParams p;
    p.alpha = 2.0;
    p.beta = 2.5;
    p.lambda1 = 1.0;
    calibrate_lambda2(p);
    return p;
  }();
  return params;
}

inline ExperimentConfig base() {
  ExperimentConfig cfg;
  cfg.params = reference_params();
  cfg.alg1 = Algorithm1Config::for_params(cfg.params);
  cfg.c = 0.5;
  cfg.r0 = 1.0;
  cfg.eps0 = 1e-6;
  cfg.replications = 100;
  return cfg;
}

/// Varying n with k_n = floor(log n).
inline ExperimentConfig table1() {
  ExperimentConfig cfg = base();
  cfg.sizes = {10, 100, 1000, 10000};
  cfg.rule = IterationRule::log_scaled(1.0);
  return cfg;
}

/// n = 10000, varying k.
inline ExperimentConfig table2() {
  ExperimentConfig cfg = base();
  cfg.sizes = {10000};
  cfg.k_sweep = {2, 4, 6, 8, 10, 15};
  return cfg;
}

/// n = 10000, k = floor(log n) = 9, varying c.
inline ExperimentConfig table3() {
  ExperimentConfig cfg = base();
  cfg.sizes = {10000};
  cfg.rule = IterationRule::log_scaled(1.0);
  cfg.c_sweep = {0.1, 0.3, 0.5, 0.7, 0.9};
  return cfg;
}

/// k_n = floor(0.4 log n / log mu_hat), mu_hat from a pilot run of size 1e5.
inline ExperimentConfig coupling(std::uint64_t seed, double scale = 0.4) {
  ExperimentConfig cfg = base();
  cfg.master_seed = seed;
  cfg.sizes = {1000, 10000, 100000};
  cfg.replications = 500;
  const double mu_hat = estimate_mu(cfg.params, cfg.alg1, seed);
  cfg.rule = IterationRule::log_scaled(scale / std::log(mu_hat));
  return cfg;
}

/// One graph with n = 100, k = 4 and 1000 tree roots.
inline ExperimentConfig cdf() {
  ExperimentConfig cfg = base();
  cfg.sizes = {100};
  cfg.rule = IterationRule::fixed(4);
  cfg.replications = 1;
  cfg.tbt_root_samples = 1000;
  return cfg;
}

}  // namespace dcmpr::presets
