#include "agp/gp.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace agp {

void Kernel::validate() const {
  if (lengthscales.size() == 0 || component_variances.size() == 0)
    throw std::invalid_argument("Kernel: empty hyperparameters");
  if ((lengthscales.array() <= 0.0).any())
    throw std::invalid_argument("Kernel: lengthscales must be > 0");
  if ((component_variances.array() <= 0.0).any())
    throw std::invalid_argument("Kernel: component variances must be > 0");
}

double kappa(const Kernel& k, const ParamPoint& a, const ParamPoint& b) {
  if (a.size() != k.dim() || b.size() != k.dim())
    throw std::invalid_argument("kappa: dimension mismatch");
  double s = 0.0;
  for (int i = 0; i < a.size(); ++i) {
    const double t = (a[i] - b[i]) / k.lengthscales[i];
    s += t * t;
  }
  return std::exp(-s);
}

MatrixXd kernel_eval(const Kernel& k, const ParamPoint& a, const ParamPoint& b) {
  return kappa(k, a, b) * MatrixXd(k.component_variances.asDiagonal());
}

VectorXd kappa_vector(const Kernel& k, const MatrixXd& points, const ParamPoint& p) {
  const int s = static_cast<int>(points.rows());
  VectorXd v(s);
  for (int i = 0; i < s; ++i) {
    double acc = 0.0;
    for (int a = 0; a < p.size(); ++a) {
      const double t = (points(i, a) - p[a]) / k.lengthscales[a];
      acc += t * t;
    }
    v[i] = std::exp(-acc);
  }
  return v;
}

MatrixXd kappa_matrix(const Kernel& k, const MatrixXd& points) {
  const int s = static_cast<int>(points.rows());
  MatrixXd m(s, s);
  for (int i = 0; i < s; ++i) {
    m(i, i) = 1.0;
    for (int j = i + 1; j < s; ++j) {
      double acc = 0.0;
      for (int a = 0; a < points.cols(); ++a) {
        const double t = (points(i, a) - points(j, a)) / k.lengthscales[a];
        acc += t * t;
      }
      m(i, j) = m(j, i) = std::exp(-acc);
    }
  }
  return m;
}

int Design::find(const ParamPoint& p) const {
  for (int i = 0; i < size(); ++i) {
    if ((entries[i].point - p).cwiseAbs().maxCoeff() <= kMergeThreshold) return i;
  }
  return -1;
}

int Design::add(const ParamPoint& p, double tol) {
  if (!(tol > 0.0) || !std::isfinite(tol))
    throw std::invalid_argument("Design::add: tolerance must be positive and finite");
  const int idx = find(p);
  if (idx >= 0) {
    entries[idx].tolerance = std::min(entries[idx].tolerance, tol);
    return idx;
  }
  entries.push_back({p, tol});
  return size() - 1;
}

MatrixXd Design::points_matrix() const {
  if (entries.empty()) return MatrixXd(0, 0);
  MatrixXd m(size(), entries[0].point.size());
  for (int i = 0; i < size(); ++i) m.row(i) = entries[i].point.transpose();
  return m;
}

VectorXd Design::tolerances() const {
  VectorXd t(size());
  for (int i = 0; i < size(); ++i) t[i] = entries[i].tolerance;
  return t;
}

void TrainingData::validate(int m) const {
  if (static_cast<int>(values.size()) != design.size())
    throw std::invalid_argument("TrainingData: values/design length mismatch");
  for (const auto& v : values)
    if (v.size() != m) throw std::invalid_argument("TrainingData: value dimension mismatch");
}

VectorXd TrainingData::component(int j) const {
  VectorXd y(size());
  for (int i = 0; i < size(); ++i) y[i] = values[i][j];
  return y;
}

namespace {

// Factor A = Kc_j * Kappa + diag(tau^2) with one retry after a fixed relative
// jitter; second failure is a hard error.
Eigen::LLT<MatrixXd> factor_with_jitter(MatrixXd A, bool& jitter_applied) {
  Eigen::LLT<MatrixXd> llt(A);
  if (llt.info() == Eigen::Success) return llt;
  const double jitter = 1e-10 * A.diagonal().maxCoeff();
  A.diagonal().array() += jitter;
  llt.compute(A);
  jitter_applied = true;
  if (llt.info() != Eigen::Success)
    throw std::runtime_error(
        "SurrogateModel::fit: kernel system not positive definite (after jitter); "
        "diagonal max = " + std::to_string(A.diagonal().maxCoeff()));
  return llt;
}

}  // namespace

SurrogateModel SurrogateModel::fit(Kernel kernel, TrainingData data) {
  kernel.validate();
  data.validate(kernel.out_dim());
  for (const auto& e : data.design.entries)
    if (!(e.tolerance > 0.0) || !std::isfinite(e.tolerance))
      throw std::invalid_argument("fit: tolerances must be positive and finite");

  SurrogateModel m;
  m.kernel_ = std::move(kernel);
  m.data_ = std::move(data);
  m.points_ = m.data_.design.points_matrix();

  const int s = m.data_.size();
  const int mdim = m.kernel_.out_dim();
  if (s == 0) return m;  // prior-only model

  const MatrixXd kap = kappa_matrix(m.kernel_, m.points_);
  const VectorXd tau2 = m.data_.design.tolerances().array().square();
  m.llt_.reserve(mdim);
  m.alpha_.reserve(mdim);
  for (int j = 0; j < mdim; ++j) {
    MatrixXd A = m.kernel_.component_variances[j] * kap;
    A.diagonal() += tau2;
    m.llt_.push_back(factor_with_jitter(std::move(A), m.jitter_applied_));
    m.alpha_.push_back(m.llt_.back().solve(m.data_.component(j)));
  }
  return m;
}

void SurrogateModel::predict_diag(const ParamPoint& p, VectorXd& mean, VectorXd& var) const {
  const int mdim = out_dim();
  mean.resize(mdim);
  var.resize(mdim);
  if (size() == 0) {
    mean.setZero();
    var = kernel_.component_variances;
    return;
  }
  const VectorXd ks = kappa_vector(kernel_, points_, p);
  for (int j = 0; j < mdim; ++j) {
    const double kc = kernel_.component_variances[j];
    mean[j] = kc * ks.dot(alpha_[j]);
    const double q = ks.dot(llt_[j].solve(ks));
    // Posterior variance never exceeds the prior variance; clamp roundoff.
    var[j] = std::clamp(kc - kc * kc * q, 0.0, kc);
  }
}

PredictiveDistribution SurrogateModel::predict(const ParamPoint& p) const {
  VectorXd mean, var;
  predict_diag(p, mean, var);
  PredictiveDistribution out;
  out.mean = std::move(mean);
  out.covariance = MatrixXd(var.asDiagonal());
  return out;
}

MatrixXd SurrogateModel::dvariance_dtol(const ParamPoint& p, int i) const {
  if (i < 0 || i >= size()) throw std::out_of_range("dvariance_dtol: index out of range");
  const int mdim = out_dim();
  const double tau = data_.design.entries[i].tolerance;
  const VectorXd ks = kappa_vector(kernel_, points_, p);
  VectorXd diag(mdim);
  for (int j = 0; j < mdim; ++j) {
    const double kc = kernel_.component_variances[j];
    const double vi = kc * llt_[j].solve(ks)[i];  // e_i' A_j^{-1} K_{*,j}
    diag[j] = 2.0 * tau * vi * vi;
  }
  return MatrixXd(diag.asDiagonal());
}

double SurrogateModel::mean_pred_std(const ParamPoint& p) const {
  VectorXd mean, var;
  predict_diag(p, mean, var);
  return var.array().sqrt().mean();
}

VectorXd SurrogateModel::solve_component(int j, const VectorXd& rhs) const {
  return llt_[j].solve(rhs);
}

namespace {

struct MlGrad {
  double value = 0.0;
  VectorXd d_log_len;  // gradient wrt log lengthscales
  VectorXd d_log_var;  // gradient wrt log component variances
};

// Penalized log marginal likelihood and its gradient in log-parameter space.
MlGrad penalized_lml(const Kernel& k, const TrainingData& data, const MatrixXd& pts,
                     double prior_rate, bool want_grad) {
  const int s = data.size();
  const int d = k.dim();
  const int m = k.out_dim();
  MlGrad out;
  out.d_log_len = VectorXd::Zero(d);
  out.d_log_var = VectorXd::Zero(m);

  const MatrixXd kap = kappa_matrix(k, pts);
  const VectorXd tau2 = data.design.tolerances().array().square();

  // d kappa / d log l_a = kappa * 2 * ((p_i - p_j)_a / l_a)^2
  std::vector<MatrixXd> dkap_dlogl;
  if (want_grad) {
    dkap_dlogl.assign(d, MatrixXd::Zero(s, s));
    for (int a = 0; a < d; ++a) {
      for (int i = 0; i < s; ++i)
        for (int j2 = 0; j2 < s; ++j2) {
          const double t = (pts(i, a) - pts(j2, a)) / k.lengthscales[a];
          dkap_dlogl[a](i, j2) = kap(i, j2) * 2.0 * t * t;
        }
    }
  }

  for (int j = 0; j < m; ++j) {
    const double kc = k.component_variances[j];
    MatrixXd A = kc * kap;
    A.diagonal() += tau2;
    Eigen::LLT<MatrixXd> llt(A);
    if (llt.info() != Eigen::Success) {
      out.value = -kInf;
      return out;
    }
    const VectorXd y = data.component(j);
    const VectorXd alpha = llt.solve(y);
    double logdet = 0.0;
    for (int i = 0; i < s; ++i) logdet += 2.0 * std::log(llt.matrixL()(i, i));
    out.value += -0.5 * y.dot(alpha) - 0.5 * logdet -
                 0.5 * s * std::log(2.0 * std::numbers::pi);

    if (want_grad) {
      const MatrixXd Ainv = llt.solve(MatrixXd::Identity(s, s));
      // d lml / d theta = 0.5 tr((alpha alpha' - A^{-1}) dA/dtheta)
      const MatrixXd G = alpha * alpha.transpose() - Ainv;
      for (int a = 0; a < d; ++a)
        out.d_log_len[a] += 0.5 * kc * (G.array() * dkap_dlogl[a].array()).sum();
      // dA/d log kc = kc * kappa
      out.d_log_var[j] += 0.5 * kc * (G.array() * kap.array()).sum();
    }
  }

  // Gamma(1, rate) prior on each lengthscale: log p = -rate * l (+ const).
  for (int a = 0; a < d; ++a) {
    out.value -= prior_rate * k.lengthscales[a];
    if (want_grad) out.d_log_len[a] -= prior_rate * k.lengthscales[a];
  }
  return out;
}

}  // namespace

double log_marginal_likelihood(const Kernel& kernel, const TrainingData& data,
                               double lengthscale_prior_rate) {
  const MatrixXd pts = data.design.points_matrix();
  return penalized_lml(kernel, data, pts, lengthscale_prior_rate, false).value;
}

namespace {

// Adam ascent from one starting kernel inside the log-parameter box; returns
// the best (theta, value) seen.
std::pair<VectorXd, double> adam_ascent(const TrainingData& data, const MatrixXd& pts,
                                        const Kernel& start, const VectorXd& theta_lo,
                                        const TuneOptions& opts) {
  const int d = start.dim();
  const int m = start.out_dim();
  VectorXd theta(d + m);  // log lengthscales, then log component variances
  theta.head(d) = start.lengthscales.array().log();
  theta.tail(m) = start.component_variances.array().log();
  theta = theta.cwiseMax(theta_lo).cwiseMin(12.0);
  double best_value = -kInf;
  VectorXd best_theta = theta;

  VectorXd mom = VectorXd::Zero(theta.size());
  VectorXd vel = VectorXd::Zero(theta.size());
  const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  Kernel cur = start;
  for (int it = 1; it <= opts.max_iterations; ++it) {
    cur.lengthscales = theta.head(d).array().exp();
    cur.component_variances = theta.tail(m).array().exp();
    const MlGrad g = penalized_lml(cur, data, pts, opts.lengthscale_prior_rate, true);
    if (std::isfinite(g.value) && g.value > best_value) {
      best_value = g.value;
      best_theta = theta;
    }
    if (!std::isfinite(g.value)) break;
    VectorXd grad(d + m);
    grad.head(d) = g.d_log_len;
    grad.tail(m) = g.d_log_var;
    mom = b1 * mom + (1.0 - b1) * grad;
    vel = b2 * vel + (1.0 - b2) * grad.cwiseProduct(grad);
    const double corr = std::sqrt(1.0 - std::pow(b2, it)) / (1.0 - std::pow(b1, it));
    theta += opts.learning_rate * corr *
             mom.cwiseQuotient((vel.cwiseSqrt().array() + eps).matrix());
    theta = theta.cwiseMax(theta_lo).cwiseMin(12.0);
  }
  return {best_theta, best_value};
}

}  // namespace

TuneResult tune_hyperparameters(const TrainingData& data, const Kernel& init,
                                const TuneOptions& opts) {
  init.validate();
  if (data.size() < 2)
    throw std::invalid_argument("tune_hyperparameters: need at least 2 training points");

  TuneResult result;
  result.kernel = init;

  const MatrixXd pts = data.design.points_matrix();
  double max_spread = 0.0;
  for (int i = 1; i < data.size(); ++i)
    max_spread = std::max(max_spread, (pts.row(i) - pts.row(0)).cwiseAbs().maxCoeff());
  if (max_spread < 10.0 * Design::kMergeThreshold) {
    result.degenerate = true;
    result.objective = penalized_lml(init, data, pts, opts.lengthscale_prior_rate, false).value;
    return result;
  }

  const int d = init.dim();
  const int m = init.out_dim();

  // Search box: lengthscales are floored at a fraction of the per-axis point
  // spread. The evidence of small designs favors the collapsed (delta-kernel)
  // state, under which the surrogate carries no information between points;
  // bounded hyperparameter search keeps the model usable while the data are
  // still sparse.
  VectorXd theta_lo = VectorXd::Constant(d + m, -18.0);
  for (int a = 0; a < d; ++a) {
    const double spread = pts.col(a).maxCoeff() - pts.col(a).minCoeff();
    theta_lo[a] = std::log(std::max(0.05 * spread, 1e-6));
  }

  Kernel clamped_init = init;
  clamped_init.lengthscales =
      clamped_init.lengthscales.cwiseMax(theta_lo.head(d).array().exp().matrix());
  const double init_value =
      penalized_lml(clamped_init, data, pts, opts.lengthscale_prior_rate, false).value;

  // Multi-start: warm start plus fresh data-scaled starts. A floor-pinned warm
  // start cannot reach the smooth basin once lost; the fresh starts recover it
  // when the data supports it.
  std::vector<Kernel> starts{clamped_init};
  {
    Kernel fresh;
    fresh.lengthscales.resize(d);
    for (int a = 0; a < d; ++a) {
      const double spread = pts.col(a).maxCoeff() - pts.col(a).minCoeff();
      fresh.lengthscales[a] = std::max(0.25 * spread, 1e-3);
    }
    fresh.component_variances.resize(m);
    for (int j = 0; j < m; ++j) {
      const VectorXd y = data.component(j);
      const double mean = y.mean();
      fresh.component_variances[j] =
          std::max((y.array() - mean).square().sum() / std::max(1, data.size() - 1), 1e-8);
    }
    starts.push_back(fresh);
    Kernel wide = fresh;
    wide.lengthscales *= 2.5;
    starts.push_back(wide);
  }

  double best_value = init_value;
  VectorXd best_theta(d + m);
  best_theta.head(d) = clamped_init.lengthscales.array().log();
  best_theta.tail(m) = clamped_init.component_variances.array().log();
  for (const Kernel& start : starts) {
    const auto [theta, value] = adam_ascent(data, pts, start, theta_lo, opts);
    if (value > best_value) {
      best_value = value;
      best_theta = theta;
    }
  }

  result.kernel.lengthscales = best_theta.head(d).array().exp();
  result.kernel.component_variances = best_theta.tail(m).array().exp();
  result.improved = best_value > init_value;
  result.objective = best_value;
  return result;
}

}  // namespace agp
