#include "agp/metrics.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace agp {

namespace {

double logsumexp(const VectorXd& v) {
  const double mx = v.maxCoeff();
  if (!std::isfinite(mx)) return mx;
  double s = 0.0;
  for (int i = 0; i < v.size(); ++i) s += std::exp(v[i] - mx);
  return mx + std::log(s);
}

// Normalized Gaussian log likelihood of the residual with Sigma = sigma I.
double log_like_exact_normalized(const Measurement& meas, const VectorXd& y) {
  const int m = meas.dim();
  return -0.5 * m * std::log(2.0 * std::numbers::pi) - m * std::log(meas.noise_std) -
         0.5 * sigma_quad_norm(meas.y - y, meas.noise_std);
}

struct LogMeanEstimate {
  double log_mean = 0.0;
  double rel_err = 0.0;  // relative standard error of the mean of the ratios
};

LogMeanEstimate log_mean_of_ratios(const VectorXd& log_ratios) {
  const int n = static_cast<int>(log_ratios.size());
  LogMeanEstimate e;
  e.log_mean = logsumexp(log_ratios) - std::log(static_cast<double>(n));
  double var = 0.0;
  double mean = 0.0;
  for (int i = 0; i < n; ++i) mean += std::exp(log_ratios[i] - e.log_mean);
  mean /= n;
  for (int i = 0; i < n; ++i) {
    const double t = std::exp(log_ratios[i] - e.log_mean) - mean;
    var += t * t;
  }
  var /= (n - 1.0);
  e.rel_err = std::sqrt(var / n) / mean;
  return e;
}

}  // namespace

TruthReference build_reference_grid(const ForwardModel& fm, const Measurement& meas,
                                    int resolution) {
  const int d = fm.dim_param;
  if (d > 2) throw std::invalid_argument("build_reference_grid: d <= 2 only");
  TruthReference ref;
  ref.problem_id = fm.id;
  ref.is_grid = true;

  const int g = d == 1 ? resolution : resolution * resolution;
  ref.grid_points.resize(g, d);
  ref.grid_y.resize(g, fm.dim_out);
  ref.grid_log_like.resize(g);
  double w = 1.0;
  for (int a = 0; a < d; ++a) w *= fm.domain.width(a) / resolution;
  ref.cell_weight = w;

  int idx = 0;
  const auto fill = [&](const ParamPoint& p) {
    ref.grid_points.row(idx) = p.transpose();
    const VectorXd y = fm.eval_exact(p);
    ref.grid_y.row(idx) = y.transpose();
    ref.grid_log_like[idx] = log_like_exact_normalized(meas, y);
    ++idx;
  };
  if (d == 1) {
    for (int i = 0; i < resolution; ++i) {
      ParamPoint p(1);
      p[0] = fm.domain.lo[0] + (i + 0.5) * fm.domain.width(0) / resolution;
      fill(p);
    }
  } else {
    for (int i = 0; i < resolution; ++i)
      for (int j = 0; j < resolution; ++j) {
        ParamPoint p(2);
        p[0] = fm.domain.lo[0] + (i + 0.5) * fm.domain.width(0) / resolution;
        p[1] = fm.domain.lo[1] + (j + 0.5) * fm.domain.width(1) / resolution;
        fill(p);
      }
  }

  // log Z with the normalized flat prior folded in.
  const double log_prior = -std::log(fm.domain.volume());
  ref.log_evidence = log_prior + std::log(ref.cell_weight) + logsumexp(ref.grid_log_like);
  ref.evidence_rel_err = 0.0;
  return ref;
}

TruthReference build_reference_sampled(const ForwardModel& fm, const Measurement& meas,
                                       int n_samples, int n_is_draws, std::uint64_t seed) {
  TruthReference ref;
  ref.problem_id = fm.id;
  ref.is_grid = false;
  const int d = fm.dim_param;

  LogDensity log_post = [&](const ParamPoint& p) {
    if (!fm.domain.contains(p)) return -kInf;
    return log_like_exact_normalized(meas, fm.eval_exact(p));
  };

  RandomStream rng(seed);
  Ensemble e = make_ensemble(fm.domain, default_walker_count(d), log_post, rng.child("ens"));
  auto [samples, efinal] = draw_from_logpdf(log_post, std::move(e), n_samples, 400);

  ref.ref_points.resize(n_samples, d);
  ref.ref_y.resize(n_samples, fm.dim_out);
  ref.ref_log_like.resize(n_samples);
  for (int i = 0; i < n_samples; ++i) {
    ref.ref_points.row(i) = samples[i].transpose();
    const VectorXd y = fm.eval_exact(samples[i]);
    ref.ref_y.row(i) = y.transpose();
    ref.ref_log_like[i] = log_like_exact_normalized(meas, y);
  }

  // Gaussian proposal fitted to the reference samples, covariance inflated.
  const VectorXd mu = ref.ref_points.colwise().mean().transpose();
  MatrixXd centered = ref.ref_points.rowwise() - mu.transpose();
  MatrixXd cov = (centered.transpose() * centered) / (n_samples - 1);
  cov *= 2.0;
  cov.diagonal().array() += 1e-12;
  Eigen::LLT<MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("build_reference_sampled: degenerate sample covariance");
  const MatrixXd L = llt.matrixL();
  double logdet = 0.0;
  for (int a = 0; a < d; ++a) logdet += 2.0 * std::log(L(a, a));
  const double log_norm = -0.5 * d * std::log(2.0 * std::numbers::pi) - 0.5 * logdet;

  RandomStream is_rng = rng.child("is");
  ref.is_points.resize(n_is_draws, d);
  ref.is_log_g.resize(n_is_draws);
  ref.is_log_like.resize(n_is_draws);
  for (int kk = 0; kk < n_is_draws; ++kk) {
    const VectorXd x = mu + L * is_rng.normal_vector(d);
    ref.is_points.row(kk) = x.transpose();
    const VectorXd z = llt.matrixL().solve(x - mu);
    ref.is_log_g[kk] = log_norm - 0.5 * z.squaredNorm();
    ref.is_log_like[kk] =
        fm.domain.contains(x) ? log_like_exact_normalized(meas, fm.eval_exact(x)) : -kInf;
  }

  const LogMeanEstimate est = log_mean_of_ratios(ref.is_log_like - ref.is_log_g);
  const double log_prior = -std::log(fm.domain.volume());
  ref.log_evidence = log_prior + est.log_mean;
  ref.evidence_rel_err = est.rel_err;
  return ref;
}

double metric_l2(const TruthReference& ref,
                 const std::function<VectorXd(const ParamPoint&)>& surrogate_mean) {
  if (ref.is_grid) {
    const int g = static_cast<int>(ref.grid_points.rows());
    const double log_z = logsumexp(ref.grid_log_like);
    double acc = 0.0;
    for (int i = 0; i < g; ++i) {
      const double w = std::exp(ref.grid_log_like[i] - log_z);  // normalized node mass
      if (w == 0.0) continue;
      const VectorXd diff =
          ref.grid_y.row(i).transpose() - surrogate_mean(ref.grid_points.row(i).transpose());
      acc += w * diff.squaredNorm();
    }
    return acc;
  }
  const int n = static_cast<int>(ref.ref_points.rows());
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    const VectorXd diff =
        ref.ref_y.row(i).transpose() - surrogate_mean(ref.ref_points.row(i).transpose());
    acc += diff.squaredNorm();
  }
  return acc / n;
}

double metric_l2(const TruthReference& ref, const SurrogateModel& model) {
  return metric_l2(ref, [&model](const ParamPoint& p) {
    VectorXd mean, var;
    model.predict_diag(p, mean, var);
    return mean;
  });
}

KlEstimate metric_kl(const TruthReference& ref, const LogDensity& log_like_surr) {
  KlEstimate out;
  if (ref.is_grid) {
    const int g = static_cast<int>(ref.grid_points.rows());
    VectorXd log_like_d(g);
    for (int i = 0; i < g; ++i)
      log_like_d[i] = log_like_surr(ref.grid_points.row(i).transpose());
    const double log_z_true = logsumexp(ref.grid_log_like);
    const double log_z_surr = logsumexp(log_like_d);
    double acc = 0.0;
    for (int i = 0; i < g; ++i) {
      const double w = std::exp(ref.grid_log_like[i] - log_z_true);
      if (w == 0.0) continue;
      acc += w * ((ref.grid_log_like[i] - log_z_true) - (log_like_d[i] - log_z_surr));
    }
    out.value = acc;
    out.stderr_est = 0.0;
    out.reliable = true;
    return out;
  }

  // KL = E_pi[log L - log L_D] - log E_g[L/g] + log E_g[L_D/g]; the flat-prior
  // constants cancel between the expectation and the evidence terms.
  const int n = static_cast<int>(ref.ref_points.rows());
  const int kdraws = static_cast<int>(ref.is_points.rows());
  VectorXd diff(n);
  for (int i = 0; i < n; ++i)
    diff[i] = ref.ref_log_like[i] - log_like_surr(ref.ref_points.row(i).transpose());
  const double mean_diff = diff.mean();
  const double var_diff = (diff.array() - mean_diff).square().sum() / (n - 1.0);

  VectorXd log_ratio_surr(kdraws);
  for (int kk = 0; kk < kdraws; ++kk) {
    const double ll = std::isfinite(ref.is_log_like[kk])
                          ? log_like_surr(ref.is_points.row(kk).transpose())
                          : -kInf;
    log_ratio_surr[kk] = ll - ref.is_log_g[kk];
  }
  const LogMeanEstimate z_surr = log_mean_of_ratios(log_ratio_surr);
  const LogMeanEstimate z_true = log_mean_of_ratios(ref.is_log_like - ref.is_log_g);

  out.value = mean_diff - z_true.log_mean + z_surr.log_mean;
  out.stderr_est = std::sqrt(var_diff / n + z_true.rel_err * z_true.rel_err +
                             z_surr.rel_err * z_surr.rel_err);
  out.reliable = z_true.rel_err <= 0.1 && z_surr.rel_err <= 0.1;
  return out;
}

KlEstimate metric_kl(const TruthReference& ref, const SurrogateModel& model,
                     const Measurement& meas, const PriorBox& prior) {
  return metric_kl(ref, [&](const ParamPoint& p) {
    return log_posterior_unnorm(meas, prior, model, p);
  });
}

std::string reference_cache_key(const std::string& problem_id, const Measurement& meas,
                                int resolution_or_samples, std::uint64_t seed) {
  std::ostringstream os;
  os.precision(17);
  os << problem_id << '|' << meas.noise_std << '|' << resolution_or_samples << '|' << seed;
  for (int i = 0; i < meas.dim(); ++i) os << '|' << meas.y[i];
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(hash64(os.str())));
  return std::string("ref_") + buf;
}

}  // namespace agp
