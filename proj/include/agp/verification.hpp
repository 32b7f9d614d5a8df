#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace agp {

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

// Dense direct-solve oracle comparison for GP prediction (mean and variance)
// on random instances with d <= 4, m <= 3, s <= 10.
CheckResult check_gp_oracle(int instances = 200, std::uint64_t seed = 91);

// Central finite-difference suite for dGamma/dtau_i, de^KL/dGamma,
// de^L2/dGamma and dtau/dW.
CheckResult check_derivative_suite(int instances = 100, std::uint64_t seed = 92);

// Mean-deviation identity: E||ybar - y||^2_{Sigma^{-2}} = tr(Sigma^{-2} Gamma)
// under y ~ N(ybar, Gamma), within 3 MC standard errors.
CheckResult check_lemma_mean_deviation(int pairs = 10, int draws = 100000,
                                       std::uint64_t seed = 93);

// KL bound with exact alpha on random 1D configurations by grid quadrature.
CheckResult check_theorem_bound(int configs = 20, std::uint64_t seed = 94);

// Marginalization identity of the full likelihood against a Monte Carlo
// average of the exact-likelihood kernel over predictive draws.
CheckResult check_full_likelihood_identity(int instances = 10, int draws = 100000,
                                           std::uint64_t seed = 95);

// Standard-Gaussian target moments within 3 batch-means standard errors.
CheckResult check_sampler_moments(std::uint64_t seed = 96);

// Brute-force transition-matrix reversibility and stationarity on a 3-state
// discretized target, exercising the production acceptance rules.
CheckResult check_detailed_balance();

// Tolerance optimizer against an exhaustive grid oracle on the
// one-old-point-plus-one-candidate instance.
CheckResult check_tolerance_optimizer_oracle(std::uint64_t seed = 97);

std::vector<CheckResult> run_all_checks();

}  // namespace agp
