#pragma once

#include "agp/error_models.hpp"
#include "agp/forward_models.hpp"
#include "agp/gp.hpp"
#include "agp/work_model.hpp"

#include <vector>

namespace agp {

struct CandidateSet {
  MatrixXd points;  // r x d, distinct, inside the domain
  VectorXd acquisition_values;

  int size() const { return static_cast<int>(points.rows()); }
  bool empty() const { return points.rows() == 0; }
};

// Tolerance assignment for (old design entries ++ candidates). +inf on a
// candidate entry excludes it from the design.
struct ToleranceVector {
  VectorXd values;
  int old_count = 0;

  int size() const { return static_cast<int>(values.size()); }
  double candidate(int k) const { return values[old_count + k]; }
};

// Scaled infinity-norm threshold (relative to box width) under which two
// candidate locations are treated as the same local optimum. Maxima closer
// than this carry nearly the same information at the lengthscales the
// experiments operate at.
constexpr double kCandidateDedupScaled = 1e-2;
// Tighter zone around existing design points: a candidate this close is a
// numerical twin of the stored point and is dropped (refining the stored
// point covers it); farther near-by candidates stay and the tolerance
// optimizer arbitrates between them and refinement.
constexpr double kDesignCollisionScaled = 1e-4;

// Frozen-mean error machinery shared by the acquisition function and the
// tolerance objective: predictive means (and hence residuals) are pinned to
// the current model, only variances respond to tolerance changes.
class FrozenErrorState {
 public:
  FrozenErrorState(const SurrogateModel& model, const Measurement& meas,
                   ErrorModelKind kind, const MatrixXd& samples, const WorkModel& wm);

  // Acquisition A_hat(p) >= 0: sensitivity of the sample-averaged error model
  // to computational work spent at p, with the hypothetical point entering at
  // tolerance tau_p = mean predictive standard deviation. Saturated samples
  // contribute at the indicator cap, putting them on a nearly equal footing:
  // the acquisition then aggregates variance reduction over the whole sample
  // cloud instead of chasing the single worst sample.
  double acquisition(const ParamPoint& p) const;

  // Sample-averaged indicator under trial tolerances for the point set
  // old ++ extra rows; entries with +inf tolerance are excluded. Gradient is
  // with respect to the tolerances of included points (0 for excluded).
  double objective(const MatrixXd& extra_points, const VectorXd& tolerances,
                   VectorXd* grad_dtau) const;

  const SurrogateModel& model() const { return model_; }
  const Measurement& measurement() const { return meas_; }
  ErrorModelKind kind() const { return kind_; }
  const WorkModel& work_model() const { return wm_; }
  int sample_count() const { return static_cast<int>(samples_.rows()); }

 private:
  const SurrogateModel& model_;
  Measurement meas_;
  ErrorModelKind kind_;
  WorkModel wm_;
  MatrixXd samples_;             // N x d
  VectorXd resid_;               // ||y^m - ybar_old||_{Sigma^{-2}} per sample
  MatrixXd ks_old_;              // N x s kappa(sample, old point)
  std::vector<MatrixXd> w_old_;  // per component: A_j^{-1} ks_old' (s x N)
  std::vector<VectorXd> q_old_;  // per component: kappa' A_j^{-1} kappa per sample
};

// One-shot acquisition (builds the frozen state internally).
double acquisition(const ParamPoint& p, const SurrogateModel& model,
                   const Measurement& meas, ErrorModelKind kind,
                   const std::vector<ParamPoint>& samples, const WorkModel& wm);

// Multi-start maximization of the acquisition from 10*d Halton starts;
// distinct local maximizers (top max_count by value) are returned. An
// acquisition that vanishes everywhere yields an empty set.
CandidateSet select_candidates(const SurrogateModel& model, const Measurement& meas,
                               ErrorModelKind kind, const std::vector<ParamPoint>& samples,
                               const WorkModel& wm, int max_count, const BoxDomain& box);

// Budget-constrained minimization of the frozen-mean error model in work
// coordinates (linear budget constraint, bounds enforcing refinement).
// Candidates whose optimized work falls below W(10 * tau_default) are excluded.
ToleranceVector optimize_tolerances(const Design& old_design, const CandidateSet& cands,
                                    double budget_increment, const SurrogateModel& model,
                                    const Measurement& meas, ErrorModelKind kind,
                                    const std::vector<ParamPoint>& samples,
                                    const WorkModel& wm, double tau_default);

struct ApplyResult {
  TrainingData data;
  int evaluations = 0;         // forward model calls performed
  std::vector<int> refreshed;  // indices of re-evaluated old entries
};

// Evaluates accepted candidates and re-evaluates old points whose tolerance
// strictly decreased; re-evaluation replaces the stored observation.
ApplyResult apply_design_update(const TrainingData& old_data, const CandidateSet& cands,
                                const ToleranceVector& T, SimulatedEvaluator& evaluator);

}  // namespace agp
