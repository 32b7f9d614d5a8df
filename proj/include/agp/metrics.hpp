#pragma once

#include "agp/bayes.hpp"
#include "agp/forward_models.hpp"
#include "agp/sampler.hpp"

#include <functional>
#include <string>

namespace agp {

// Ground-truth reference for one simulated measurement, shared across
// strategies and repetitions. d <= 2 problems use a tensor quadrature grid;
// d >= 3 problems use exact-posterior MCMC samples plus importance-sampling
// draws for evidence estimation from a Gaussian fit to those samples.
struct TruthReference {
  std::string problem_id;
  bool is_grid = false;

  // Grid branch (midpoint rule, equal cell weights).
  MatrixXd grid_points;    // G x d cell centers
  double cell_weight = 0;  // h^d
  MatrixXd grid_y;         // G x m exact forward values
  VectorXd grid_log_like;  // normalized exact log likelihood at nodes

  // Sample branch.
  MatrixXd ref_points;    // N x d exact-posterior samples
  MatrixXd ref_y;         // N x m
  VectorXd ref_log_like;  // normalized exact log likelihood at samples
  MatrixXd is_points;     // K x d importance draws
  VectorXd is_log_g;      // proposal log density at draws
  VectorXd is_log_like;   // exact log likelihood at draws (-inf outside domain)

  // Exact-model evidence log Z = log integral_Omega (1/|Omega|) L(p) dp.
  double log_evidence = 0.0;
  double evidence_rel_err = 0.0;
};

TruthReference build_reference_grid(const ForwardModel& fm, const Measurement& meas,
                                    int resolution);
TruthReference build_reference_sampled(const ForwardModel& fm, const Measurement& meas,
                                       int n_samples, int n_is_draws, std::uint64_t seed);

// Posterior-weighted squared L2 error of the surrogate mean against the exact
// forward values stored in the reference.
double metric_l2(const TruthReference& ref,
                 const std::function<VectorXd(const ParamPoint&)>& surrogate_mean);
double metric_l2(const TruthReference& ref, const SurrogateModel& model);

struct KlEstimate {
  double value = 0.0;
  double stderr_est = 0.0;
  bool reliable = true;  // false when an evidence estimate has > 10% rel. error
};

// KL(pi || pi_D) between the true posterior and the surrogate posterior whose
// normalized log-likelihood is `log_like_surr`.
KlEstimate metric_kl(const TruthReference& ref, const LogDensity& log_like_surr);
KlEstimate metric_kl(const TruthReference& ref, const SurrogateModel& model,
                     const Measurement& meas, const PriorBox& prior);

// Content-addressed cache key for a reference (problem, measurement, setup).
std::string reference_cache_key(const std::string& problem_id, const Measurement& meas,
                                int resolution_or_samples, std::uint64_t seed);

}  // namespace agp
