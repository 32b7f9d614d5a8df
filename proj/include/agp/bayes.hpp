#pragma once

#include "agp/gp.hpp"
#include "agp/types.hpp"

namespace agp {

// Measurement y^m with isotropic noise, Sigma = sigma * I_m.
struct Measurement {
  VectorXd y;
  double noise_std = 1.0;

  int dim() const { return static_cast<int>(y.size()); }
  void validate() const {
    if (!(noise_std > 0.0)) throw std::invalid_argument("Measurement: sigma must be > 0");
  }
};

// Flat prior over the box domain.
struct PriorBox {
  BoxDomain box;
};

// ||r||^2_{Sigma^{-2}} = r'r / sigma^2.
inline double sigma_quad_norm(const VectorXd& r, double sigma) {
  return r.squaredNorm() / (sigma * sigma);
}

// log of the unnormalized exact likelihood, -1/2 ||y^m - y||^2_{Sigma^{-2}}.
double log_likelihood_exact(const Measurement& meas, const VectorXd& y_val);

// Plug-in likelihood (surrogate mean treated as deterministic response).
double log_likelihood_plugin(const Measurement& meas, const PredictiveDistribution& pred);

// Full likelihood marginalizing over the surrogate predictive distribution:
//   -(m/2) log 2pi - 1/2 log det(Sigma^2 + Gamma) - 1/2 ||y^m - ybar||^2_{(Sigma^2+Gamma)^{-1}}.
// Normalization retained because Gamma varies with p.
double log_likelihood_full(const Measurement& meas, const PredictiveDistribution& pred);
// Diagonal-Gamma path used by hot loops.
double log_likelihood_full_diag(const Measurement& meas, const VectorXd& mean,
                                const VectorXd& var_diag);

// Unnormalized log posterior of the surrogate-based problem; -inf outside the box.
double log_posterior_unnorm(const Measurement& meas, const PriorBox& prior,
                            const SurrogateModel& model, const ParamPoint& p);

}  // namespace agp
