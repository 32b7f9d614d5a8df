#pragma once

#include "agp/types.hpp"

#include <optional>
#include <vector>

namespace agp {

// Separable stationary Gauss kernel k(p,p') = kappa(p,p') * diag(Kc) with
// kappa(p,p') = exp(-sum_a ((p_a - p'_a)/l_a)^2). One ARD lengthscale per
// input axis, one variance per output component.
struct Kernel {
  VectorXd lengthscales;        // length d, all > 0
  VectorXd component_variances; // length m, all > 0 (diagonal of Kc)

  int dim() const { return static_cast<int>(lengthscales.size()); }
  int out_dim() const { return static_cast<int>(component_variances.size()); }
  void validate() const;
};

double kappa(const Kernel& k, const ParamPoint& a, const ParamPoint& b);
// Full m-by-m kernel matrix (diagonal under this kernel family).
MatrixXd kernel_eval(const Kernel& k, const ParamPoint& a, const ParamPoint& b);
// kappa(points_i, p) for all rows of `points`.
VectorXd kappa_vector(const Kernel& k, const MatrixXd& points, const ParamPoint& p);
// kappa(points_i, points_j).
MatrixXd kappa_matrix(const Kernel& k, const MatrixXd& points);

// Experimental design: ordered (point, tolerance) pairs. Tolerances are
// strictly positive and finite. Points closer than kMergeThreshold (per axis,
// in the coordinates as given) are merged, keeping the smaller tolerance.
struct Design {
  struct Entry {
    ParamPoint point;
    double tolerance;
  };
  std::vector<Entry> entries;

  static constexpr double kMergeThreshold = 1e-9;

  int size() const { return static_cast<int>(entries.size()); }
  // Index of an entry within the merge threshold of p, or -1.
  int find(const ParamPoint& p) const;
  // Adds (p, tol) or merges into an existing entry; returns the entry index.
  int add(const ParamPoint& p, double tol);
  MatrixXd points_matrix() const;
  VectorXd tolerances() const;
};

struct TrainingData {
  Design design;
  std::vector<VectorXd> values;  // one length-m vector per design entry

  int size() const { return design.size(); }
  void validate(int m) const;
  // Column of the j-th output component across all entries.
  VectorXd component(int j) const;
};

struct PredictiveDistribution {
  VectorXd mean;        // length m
  MatrixXd covariance;  // m x m, symmetric PSD (diagonal under this kernel)
};

// Trained GP with zero prior mean. Per output component j the factored system
// is A_j = Kc_j * Kappa + diag(tau_i^2); predictions follow
//   mean_j(p)  = Kc_j * kappa_*(p)' A_j^{-1} y_j
//   Gamma_j(p) = Kc_j - Kc_j^2 * kappa_*(p)' A_j^{-1} kappa_*(p),
// clamped into [0, Kc_j] against roundoff.
class SurrogateModel {
 public:
  static SurrogateModel fit(Kernel kernel, TrainingData data);

  PredictiveDistribution predict(const ParamPoint& p) const;
  // Allocation-free prediction path for hot loops.
  void predict_diag(const ParamPoint& p, VectorXd& mean, VectorXd& var) const;

  // d Gamma(p) / d tau_i (m x m, diagonal):
  //   2 tau_i * K_*' (K + T^2)^{-1} E_i (K + T^2)^{-1} K_*.
  MatrixXd dvariance_dtol(const ParamPoint& p, int i) const;

  // Mean of the predictive standard deviation, (1/m) sum_j sqrt(Gamma_jj(p)).
  double mean_pred_std(const ParamPoint& p) const;

  // A_j^{-1} rhs using the cached factorization of component j.
  VectorXd solve_component(int j, const VectorXd& rhs) const;

  const Kernel& kernel() const { return kernel_; }
  const TrainingData& data() const { return data_; }
  const MatrixXd& points() const { return points_; }
  int size() const { return static_cast<int>(points_.rows()); }
  int out_dim() const { return kernel_.out_dim(); }
  bool jitter_applied() const { return jitter_applied_; }

 private:
  SurrogateModel() = default;

  Kernel kernel_;
  TrainingData data_;
  MatrixXd points_;                      // s x d
  std::vector<Eigen::LLT<MatrixXd>> llt_;  // one per output component
  std::vector<VectorXd> alpha_;          // A_j^{-1} y_j
  bool jitter_applied_ = false;
};

struct TuneOptions {
  int max_iterations = 150;
  double learning_rate = 0.05;
  double lengthscale_prior_rate = 10.0;  // Gamma(1, 10) prior on each lengthscale
};

struct TuneResult {
  Kernel kernel;
  bool improved = false;
  bool degenerate = false;  // all training points (nearly) identical
  double objective = 0.0;   // penalized log marginal likelihood at `kernel`
};

// Penalized log marginal likelihood: sum over components of the Gaussian
// evidence plus the Gamma(1, rate) log-prior on each lengthscale.
double log_marginal_likelihood(const Kernel& kernel, const TrainingData& data,
                               double lengthscale_prior_rate = 10.0);

// First-order ascent (Adam in log-parameter space) with a fixed iteration
// budget; returns init unchanged when no improvement is found.
TuneResult tune_hyperparameters(const TrainingData& data, const Kernel& init,
                                const TuneOptions& opts = {});

}  // namespace agp
