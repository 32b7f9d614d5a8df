#include "agp/error_models.hpp"

#include "agp/rng.hpp"

#include <cmath>
#include <numbers>

namespace agp {

const char* to_string(ErrorModelKind kind) {
  return kind == ErrorModelKind::KL ? "KL" : "L2";
}

ErrorModelKind error_kind_from_string(const std::string& s) {
  if (s == "KL" || s == "kl") return ErrorModelKind::KL;
  if (s == "L2" || s == "l2") return ErrorModelKind::L2;
  throw std::invalid_argument("unknown error model kind: " + s);
}

PsiBarTerms psi_bar_terms(const Measurement& meas, const PredictiveDistribution& pred) {
  meas.validate();
  PsiBarTerms t;
  const double s2 = meas.noise_std * meas.noise_std;
  t.trace_term = pred.covariance.trace() / s2;
  t.residual_norm = std::sqrt(sigma_quad_norm(meas.y - pred.mean, meas.noise_std));
  t.log_alpha = 0.0;
  return t;
}

double psi_bar_scalar(double trace_term, double residual_norm, double log_alpha) {
  return trace_term + residual_norm * std::sqrt(trace_term) + log_alpha;
}

double psi_bar(const Measurement& meas, const PredictiveDistribution& pred) {
  const PsiBarTerms t = psi_bar_terms(meas, pred);
  return psi_bar_scalar(t.trace_term, t.residual_norm, t.log_alpha);
}

double indicator_scalar(ErrorModelKind kind, double psi, double trace_gamma) {
  const double lead = kind == ErrorModelKind::KL ? psi : trace_gamma;
  if (lead == 0.0) return 0.0;
  return std::min(lead * std::exp(std::min(psi, kExpCap)), kIndicatorCap);
}

IndicatorValue indicator_ex(ErrorModelKind kind, const Measurement& meas,
                            const PredictiveDistribution& pred) {
  const PsiBarTerms t = psi_bar_terms(meas, pred);
  const double psi = psi_bar_scalar(t.trace_term, t.residual_norm, t.log_alpha);
  IndicatorValue out;
  out.value = indicator_scalar(kind, psi, pred.covariance.trace());
  out.saturated = psi > kExpCap || out.value >= kIndicatorCap;
  return out;
}

double indicator(ErrorModelKind kind, const Measurement& meas,
                 const PredictiveDistribution& pred) {
  return indicator_ex(kind, meas, pred).value;
}

JacobianScalars indicator_jacobian_scalars(ErrorModelKind kind, double psi,
                                           double residual_norm, double trace_term,
                                           double trace_gamma) {
  const double e = std::exp(std::min(psi, kExpCap));
  const double dpsi = 1.0 + residual_norm / (2.0 * std::sqrt(std::max(trace_term, kTraceFloor)));
  JacobianScalars j;
  if (kind == ErrorModelKind::KL) {
    j.c_sigma = e * (1.0 + psi) * dpsi;
    j.c_id = 0.0;
  } else {
    j.c_sigma = trace_gamma * e * dpsi;
    j.c_id = e;
  }
  j.c_sigma = std::min(j.c_sigma, kJacobianCap);
  j.c_id = std::min(j.c_id, kJacobianCap);
  return j;
}

MatrixXd indicator_jacobian(ErrorModelKind kind, const Measurement& meas,
                            const PredictiveDistribution& pred) {
  const PsiBarTerms t = psi_bar_terms(meas, pred);
  const double psi = psi_bar_scalar(t.trace_term, t.residual_norm, t.log_alpha);
  const JacobianScalars js = indicator_jacobian_scalars(kind, psi, t.residual_norm,
                                                        t.trace_term, pred.covariance.trace());
  const int m = meas.dim();
  const double inv_s2 = 1.0 / (meas.noise_std * meas.noise_std);
  MatrixXd out = MatrixXd::Zero(m, m);
  out.diagonal().array() = js.c_sigma * inv_s2 + js.c_id;
  return out;
}

double error_model_estimate(ErrorModelKind kind, const Measurement& meas,
                            const SurrogateModel& model,
                            const std::vector<ParamPoint>& samples) {
  if (samples.empty()) throw std::invalid_argument("error_model_estimate: empty sample list");
  const double s2 = meas.noise_std * meas.noise_std;
  const double inv_n = 1.0 / static_cast<double>(samples.size());
  double acc = 0.0;
  VectorXd mean, var;
  for (const auto& p : samples) {
    model.predict_diag(p, mean, var);
    const double tr = var.sum();
    const double resid = std::sqrt(sigma_quad_norm(meas.y - mean, meas.noise_std));
    const double psi = psi_bar_scalar(tr / s2, resid);
    acc += inv_n * indicator_scalar(kind, psi, tr);
  }
  return acc;
}

KlBoundReport verify_kl_bound(const KlBoundToy& toy, double quad_tolerance) {
  if (toy.model == nullptr) throw std::invalid_argument("verify_kl_bound: missing model");
  if (toy.box.dim() != 1) throw std::invalid_argument("verify_kl_bound: 1D only");
  const int n = toy.grid_n;
  const double lo = toy.box.lo[0], hi = toy.box.hi[0];
  const double h = (hi - lo) / (n - 1);
  const double sigma = toy.meas.noise_std;
  const double s2 = sigma * sigma;

  // Trapezoid weights; flat prior density 1/|Omega|.
  VectorXd log_like_true(n), log_like_surr(n), psi_no_alpha(n);
  VectorXd mean(1), var(1);
  const double log_norm_true = -0.5 * std::log(2.0 * std::numbers::pi) - std::log(sigma);
  for (int i = 0; i < n; ++i) {
    const double p = lo + i * h;
    const double y = toy.forward(p);
    const double r_meas = (toy.meas.y[0] - y);
    log_like_true[i] = log_norm_true - 0.5 * r_meas * r_meas / s2;

    ParamPoint pp(1);
    pp[0] = p;
    toy.model->predict_diag(pp, mean, var);
    log_like_surr[i] = log_likelihood_full_diag(toy.meas, mean, var);

    // psi per the Theorem, exact-y form: 1/2 tr + phi(||ybar-y||^2, ||y^m-y||) + log alpha.
    const double tr = var[0] / s2;
    const double a = (mean[0] - y) * (mean[0] - y) / s2;
    const double b = std::abs(r_meas) / sigma;
    psi_no_alpha[i] = 0.5 * tr + 0.5 * a + b * std::sqrt(a);
  }

  auto trap = [&](const VectorXd& f) {
    double s = 0.5 * (f[0] + f[n - 1]);
    for (int i = 1; i < n - 1; ++i) s += f[i];
    return s * h;
  };

  const double prior = 1.0 / (hi - lo);
  const VectorXd like_true = log_like_true.array().exp();
  const VectorXd like_surr = log_like_surr.array().exp();
  const double z_true = prior * trap(like_true);
  const double z_surr = prior * trap(like_surr);
  KlBoundReport rep;
  rep.alpha = z_surr / z_true;

  VectorXd kl_integrand(n), bound_integrand(n);
  for (int i = 0; i < n; ++i) {
    const double pi_true = prior * like_true[i] / z_true;
    const double log_ratio = (log_like_true[i] - std::log(z_true)) -
                             (log_like_surr[i] - std::log(z_surr));
    kl_integrand[i] = pi_true > 0.0 ? pi_true * log_ratio : 0.0;
    bound_integrand[i] = pi_true * (psi_no_alpha[i] + std::log(rep.alpha));
  }
  rep.kl = trap(kl_integrand);
  rep.bound = trap(bound_integrand);
  rep.slack = rep.bound - rep.kl;
  rep.bound_holds = rep.slack >= -quad_tolerance;

  // Lemma check at the box midpoint's predictive distribution.
  ParamPoint mid(1);
  mid[0] = 0.5 * (lo + hi);
  toy.model->predict_diag(mid, mean, var);
  rep.lemma_expected = var[0] / s2;
  RandomStream rng(toy.seed);
  double acc = 0.0, acc2 = 0.0;
  const double sd = std::sqrt(var[0]);
  for (int k = 0; k < toy.lemma_draws; ++k) {
    const double dev = sd * rng.normal();
    const double v = dev * dev / s2;
    acc += v;
    acc2 += v * v;
  }
  const double nmc = toy.lemma_draws;
  rep.lemma_mc_mean = acc / nmc;
  rep.lemma_stderr = std::sqrt(std::max(acc2 / nmc - rep.lemma_mc_mean * rep.lemma_mc_mean, 0.0) / nmc);
  rep.lemma_holds = std::abs(rep.lemma_mc_mean - rep.lemma_expected) <= 3.0 * rep.lemma_stderr + 1e-12;
  return rep;
}

}  // namespace agp
