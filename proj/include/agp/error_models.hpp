#pragma once

#include "agp/bayes.hpp"
#include "agp/gp.hpp"
#include "agp/types.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace agp {

enum class ErrorModelKind { KL, L2 };

const char* to_string(ErrorModelKind kind);
ErrorModelKind error_kind_from_string(const std::string& s);

// Terms entering psi-bar: tr(Sigma^{-2} Gamma), ||y^m - ybar||_{Sigma^{-2}},
// and log alpha (fixed 0 in the online pipeline).
struct PsiBarTerms {
  double trace_term = 0.0;
  double residual_norm = 0.0;
  double log_alpha = 0.0;
};

PsiBarTerms psi_bar_terms(const Measurement& meas, const PredictiveDistribution& pred);

// psi_bar = tr + resid * sqrt(tr) + log alpha.
double psi_bar(const Measurement& meas, const PredictiveDistribution& pred);

// The exp argument is clamped at kExpCap and the indicator value at
// kIndicatorCap; a clamped evaluation sets the saturation flag. Saturated
// points dominate the objective, which is the intended qualitative behavior,
// and the caps keep sample sums and gradients finite.
constexpr double kExpCap = 700.0;
constexpr double kIndicatorCap = 1e300;
constexpr double kJacobianCap = 1e280;
// Floor for tr(Sigma^{-2} Gamma) in the Jacobian sqrt term; the indicator is
// already 0 at Gamma = 0, so the limit direction is immaterial.
constexpr double kTraceFloor = 1e-30;

struct IndicatorValue {
  double value = 0.0;
  bool saturated = false;
};

// Local error indicator: KL -> psi_bar * exp(psi_bar); L2 -> tr(Gamma) * exp(psi_bar).
IndicatorValue indicator_ex(ErrorModelKind kind, const Measurement& meas,
                            const PredictiveDistribution& pred);
double indicator(ErrorModelKind kind, const Measurement& meas,
                 const PredictiveDistribution& pred);

// d e / d Gamma as an m x m matrix (analytic, per the predictive-variance
// chain rule used for the acquisition and tolerance gradients).
MatrixXd indicator_jacobian(ErrorModelKind kind, const Measurement& meas,
                            const PredictiveDistribution& pred);

// Scalar building blocks shared with the design module, which works with
// componentwise (diagonal) predictive variances.
double psi_bar_scalar(double trace_term, double residual_norm, double log_alpha = 0.0);
double indicator_scalar(ErrorModelKind kind, double psi, double trace_gamma);
// Jacobian structure c_sigma * Sigma^{-2} + c_id * I_m.
struct JacobianScalars {
  double c_sigma = 0.0;
  double c_id = 0.0;
};
JacobianScalars indicator_jacobian_scalars(ErrorModelKind kind, double psi,
                                           double residual_norm, double trace_term,
                                           double trace_gamma);

// Monte Carlo estimate of E(D) = mean of the indicator over posterior samples.
double error_model_estimate(ErrorModelKind kind, const Measurement& meas,
                            const SurrogateModel& model,
                            const std::vector<ParamPoint>& samples);

// Offline verification of the KL bound (Theorem) and the mean-deviation Lemma
// on a 1D problem with grid-computable posteriors and the exact alpha.
struct KlBoundToy {
  std::function<double(double)> forward;  // exact 1D model, m = 1
  BoxDomain box;                          // 1D
  Measurement meas;                       // m = 1
  const SurrogateModel* model = nullptr;  // fitted surrogate, d = 1, m = 1
  int grid_n = 4001;
  int lemma_draws = 100000;
  std::uint64_t seed = 1;
};

struct KlBoundReport {
  double kl = 0.0;              // exact KL(pi || pi_D) by quadrature
  double bound = 0.0;           // integral of pi * psi with exact y and exact alpha
  double slack = 0.0;           // bound - kl
  double alpha = 0.0;           // pi_D(y^m) / pi(y^m)
  double lemma_mc_mean = 0.0;   // MC mean of ||ybar - y||^2_{Sigma^{-2}}
  double lemma_expected = 0.0;  // tr(Sigma^{-2} Gamma)
  double lemma_stderr = 0.0;
  bool bound_holds = false;
  bool lemma_holds = false;
};

KlBoundReport verify_kl_bound(const KlBoundToy& toy, double quad_tolerance = 1e-6);

}  // namespace agp
