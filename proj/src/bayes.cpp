#include "agp/bayes.hpp"

#include <cmath>
#include <numbers>

namespace agp {

double log_likelihood_exact(const Measurement& meas, const VectorXd& y_val) {
  if (y_val.size() != meas.dim())
    throw std::invalid_argument("log_likelihood_exact: dimension mismatch");
  return -0.5 * sigma_quad_norm(meas.y - y_val, meas.noise_std);
}

double log_likelihood_plugin(const Measurement& meas, const PredictiveDistribution& pred) {
  return log_likelihood_exact(meas, pred.mean);
}

double log_likelihood_full_diag(const Measurement& meas, const VectorXd& mean,
                                const VectorXd& var_diag) {
  const int m = meas.dim();
  if (mean.size() != m || var_diag.size() != m)
    throw std::invalid_argument("log_likelihood_full: dimension mismatch");
  const double s2 = meas.noise_std * meas.noise_std;
  double logdet = 0.0, quad = 0.0;
  for (int j = 0; j < m; ++j) {
    const double c = s2 + var_diag[j];
    if (!(c > 0.0)) throw std::runtime_error("log_likelihood_full: non-PD covariance");
    logdet += std::log(c);
    const double r = meas.y[j] - mean[j];
    quad += r * r / c;
  }
  return -0.5 * m * std::log(2.0 * std::numbers::pi) - 0.5 * logdet - 0.5 * quad;
}

double log_likelihood_full(const Measurement& meas, const PredictiveDistribution& pred) {
  const int m = meas.dim();
  if (pred.mean.size() != m || pred.covariance.rows() != m)
    throw std::invalid_argument("log_likelihood_full: dimension mismatch");
  const double s2 = meas.noise_std * meas.noise_std;
  MatrixXd C = pred.covariance;
  C.diagonal().array() += s2;
  Eigen::LLT<MatrixXd> llt(C);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("log_likelihood_full: Sigma^2 + Gamma not positive definite");
  double logdet = 0.0;
  for (int j = 0; j < m; ++j) logdet += 2.0 * std::log(llt.matrixL()(j, j));
  const VectorXd r = meas.y - pred.mean;
  return -0.5 * m * std::log(2.0 * std::numbers::pi) - 0.5 * logdet -
         0.5 * r.dot(llt.solve(r));
}

double log_posterior_unnorm(const Measurement& meas, const PriorBox& prior,
                            const SurrogateModel& model, const ParamPoint& p) {
  if (!prior.box.contains(p)) return -kInf;
  VectorXd mean, var;
  model.predict_diag(p, mean, var);
  return log_likelihood_full_diag(meas, mean, var);
}

}  // namespace agp
