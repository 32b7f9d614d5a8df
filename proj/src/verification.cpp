#include "agp/verification.hpp"

#include "agp/design.hpp"
#include "agp/error_models.hpp"
#include "agp/gp.hpp"
#include "agp/optim.hpp"
#include "agp/rng.hpp"
#include "agp/sampler.hpp"
#include "agp/work_model.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace agp {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

// Relative error with a unit floor for near-zero reference values.
double rel_err(double got, double want) {
  return std::abs(got - want) / std::max(1.0, std::abs(want));
}

struct RandomInstance {
  Kernel kernel;
  TrainingData data;
};

RandomInstance random_instance(RandomStream& rng, int d, int m, int s) {
  RandomInstance inst;
  inst.kernel.lengthscales.resize(d);
  for (int a = 0; a < d; ++a) inst.kernel.lengthscales[a] = rng.uniform(0.3, 2.0);
  inst.kernel.component_variances.resize(m);
  for (int j = 0; j < m; ++j) inst.kernel.component_variances[j] = rng.uniform(0.5, 2.0);
  for (int i = 0; i < s; ++i) {
    ParamPoint p(d);
    for (int a = 0; a < d; ++a) p[a] = rng.uniform(-1.0, 1.0);
    inst.data.design.add(p, rng.uniform(0.05, 0.5));
    inst.data.values.push_back(rng.normal_vector(m));
  }
  return inst;
}

}  // namespace

CheckResult check_gp_oracle(int instances, std::uint64_t seed) {
  CheckResult res{"gp-oracle", true, ""};
  RandomStream rng(seed);
  double worst = 0.0;
  for (int t = 0; t < instances; ++t) {
    const int d = 1 + static_cast<int>(rng.uniform_index(4));
    const int m = 1 + static_cast<int>(rng.uniform_index(3));
    const int s = 1 + static_cast<int>(rng.uniform_index(10));
    const RandomInstance inst = random_instance(rng, d, m, s);
    const SurrogateModel model = SurrogateModel::fit(inst.kernel, inst.data);

    ParamPoint p(d);
    for (int a = 0; a < d; ++a) p[a] = rng.uniform(-1.0, 1.0);
    VectorXd mean, var;
    model.predict_diag(p, mean, var);

    // Dense oracle over the stacked (s*m)-dimensional joint system, solved by
    // full-pivot LU (an independent algorithm path).
    const int n = s * m;
    MatrixXd K(n, n);
    VectorXd Y(n);
    MatrixXd Kstar(n, m);
    const MatrixXd pts = inst.data.design.points_matrix();
    for (int i = 0; i < s; ++i) {
      Y.segment(i * m, m) = inst.data.values[i];
      for (int k2 = 0; k2 < s; ++k2) {
        const double kap = kappa(inst.kernel, pts.row(i).transpose(), pts.row(k2).transpose());
        for (int j = 0; j < m; ++j)
          for (int l = 0; l < m; ++l)
            K(i * m + j, k2 * m + l) =
                j == l ? kap * inst.kernel.component_variances[j] : 0.0;
      }
      const double kapp = kappa(inst.kernel, pts.row(i).transpose(), p);
      for (int j = 0; j < m; ++j)
        for (int l = 0; l < m; ++l)
          Kstar(i * m + j, l) = j == l ? kapp * inst.kernel.component_variances[j] : 0.0;
    }
    MatrixXd A = K;
    for (int i = 0; i < s; ++i) {
      const double t2 = inst.data.design.entries[i].tolerance;
      for (int j = 0; j < m; ++j) A(i * m + j, i * m + j) += t2 * t2;
    }
    const Eigen::FullPivLU<MatrixXd> lu(A);
    const VectorXd mean_oracle = Kstar.transpose() * lu.solve(Y);
    const MatrixXd gamma_oracle =
        MatrixXd(inst.kernel.component_variances.asDiagonal()) -
        Kstar.transpose() * lu.solve(Kstar);

    for (int j = 0; j < m; ++j) {
      worst = std::max(worst, rel_err(mean[j], mean_oracle[j]));
      worst = std::max(worst, rel_err(var[j], gamma_oracle(j, j)));
    }
  }
  res.pass = worst <= 1e-10;
  res.detail = "max relative error " + fmt(worst) + " over " + std::to_string(instances) +
               " instances (tolerance 1e-10)";
  return res;
}

CheckResult check_derivative_suite(int instances, std::uint64_t seed) {
  CheckResult res{"derivative-suite", true, ""};
  RandomStream rng(seed);
  double worst_var = 0.0, worst_jac = 0.0, worst_work = 0.0;

  for (int t = 0; t < instances; ++t) {
    // dGamma/dtau_i against refit-based central differences.
    {
      const int d = 1 + static_cast<int>(rng.uniform_index(3));
      const int m = 1 + static_cast<int>(rng.uniform_index(3));
      const int s = 2 + static_cast<int>(rng.uniform_index(6));
      const RandomInstance inst = random_instance(rng, d, m, s);
      const SurrogateModel model = SurrogateModel::fit(inst.kernel, inst.data);
      const int i = static_cast<int>(rng.uniform_index(s));
      ParamPoint p(d);
      for (int a = 0; a < d; ++a) p[a] = rng.uniform(-1.0, 1.0);
      const MatrixXd analytic = model.dvariance_dtol(p, i);

      const double tau = inst.data.design.entries[i].tolerance;
      const double h = 1e-4 * tau;
      TrainingData up = inst.data, dn = inst.data;
      up.design.entries[i].tolerance = tau + h;
      dn.design.entries[i].tolerance = tau - h;
      VectorXd mean_u, var_u, mean_d, var_d;
      SurrogateModel::fit(inst.kernel, up).predict_diag(p, mean_u, var_u);
      SurrogateModel::fit(inst.kernel, dn).predict_diag(p, mean_d, var_d);
      for (int j = 0; j < m; ++j) {
        const double fd = (var_u[j] - var_d[j]) / (2.0 * h);
        worst_var = std::max(worst_var, rel_err(analytic(j, j), fd));
      }
    }

    // de/dGamma (both kinds) against entrywise central differences.
    {
      const int m = rng.uniform01() < 0.5 ? 1 : 3;
      Measurement meas;
      meas.noise_std = rng.uniform(0.3, 2.0);
      meas.y = rng.normal_vector(m);
      PredictiveDistribution pred;
      pred.mean = rng.normal_vector(m);
      pred.covariance = MatrixXd::Zero(m, m);
      for (int j = 0; j < m; ++j) pred.covariance(j, j) = rng.uniform(0.01, 1.0);

      for (ErrorModelKind kind : {ErrorModelKind::KL, ErrorModelKind::L2}) {
        const MatrixXd jac = indicator_jacobian(kind, meas, pred);
        for (int a = 0; a < m; ++a)
          for (int b = 0; b < m; ++b) {
            const double h = 1e-6 * (1.0 + std::abs(pred.covariance(a, b)));
            PredictiveDistribution up = pred, dn = pred;
            up.covariance(a, b) += h;
            dn.covariance(a, b) -= h;
            const double fd =
                (indicator(kind, meas, up) - indicator(kind, meas, dn)) / (2.0 * h);
            worst_jac = std::max(worst_jac, rel_err(jac(a, b), fd));
          }
      }
    }

    // dtau/dW against central differences of the inverse work map.
    {
      const double qs[] = {1.0, 1.5, 2.0, 3.0};
      const WorkModel wm(qs[rng.uniform_index(4)]);
      const double w = rng.uniform(0.5, 100.0);
      const double h = 1e-5 * w;
      const double fd = (tol_of_work(wm, w + h) - tol_of_work(wm, w - h)) / (2.0 * h);
      worst_work = std::max(worst_work, rel_err(dtol_dwork(wm, w), fd));
    }
  }

  const double worst = std::max({worst_var, worst_jac, worst_work});
  res.pass = worst <= 1e-5;
  res.detail = "max relative errors: dGamma/dtau " + fmt(worst_var) + ", de/dGamma " +
               fmt(worst_jac) + ", dtau/dW " + fmt(worst_work) + " (tolerance 1e-5)";
  return res;
}

CheckResult check_lemma_mean_deviation(int pairs, int draws, std::uint64_t seed) {
  CheckResult res{"lemma-mean-deviation", true, ""};
  RandomStream rng(seed);
  double worst_sigmas = 0.0;
  for (int t = 0; t < pairs; ++t) {
    const int m = 1 + static_cast<int>(rng.uniform_index(3));
    const double sigma = rng.uniform(0.3, 2.0);
    MatrixXd G(m, m);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) G(i, j) = rng.normal();
    const MatrixXd gamma = G * G.transpose();
    const double expected = gamma.trace() / (sigma * sigma);

    double acc = 0.0, acc2 = 0.0;
    for (int k = 0; k < draws; ++k) {
      const VectorXd dev = G * rng.normal_vector(m);
      const double v = dev.squaredNorm() / (sigma * sigma);
      acc += v;
      acc2 += v * v;
    }
    const double mean = acc / draws;
    const double se =
        std::sqrt(std::max(acc2 / draws - mean * mean, 0.0) / draws);
    worst_sigmas = std::max(worst_sigmas, std::abs(mean - expected) / se);
  }
  res.pass = worst_sigmas <= 3.0;
  res.detail = "max deviation " + fmt(worst_sigmas) + " sigma over " +
               std::to_string(pairs) + " (Sigma, Gamma) pairs (limit 3)";
  return res;
}

CheckResult check_theorem_bound(int configs, std::uint64_t seed) {
  CheckResult res{"theorem-kl-bound", true, ""};
  RandomStream rng(seed);
  double min_slack = kInf;
  for (int t = 0; t < configs; ++t) {
    const double a = rng.uniform(-0.5, 0.5);
    const double b = rng.uniform(-3.0, 3.0);
    const double c = rng.uniform(0.2, 1.0);
    const double omega = rng.uniform(2.0, 12.0);
    const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    auto forward = [=](double p) { return a + b * p + c * std::sin(omega * p + phase); };

    Measurement meas;
    meas.noise_std = rng.uniform(0.05, 0.3);
    const double p_star = rng.uniform(0.1, 0.9);
    meas.y = VectorXd::Constant(1, forward(p_star) + meas.noise_std * rng.normal());

    Kernel k;
    k.lengthscales = VectorXd::Constant(1, rng.uniform(0.1, 0.5));
    k.component_variances = VectorXd::Constant(1, rng.uniform(0.5, 2.0));
    TrainingData data;
    const int s = 2 + static_cast<int>(rng.uniform_index(5));
    for (int i = 0; i < s; ++i) {
      ParamPoint p(1);
      p[0] = rng.uniform(0.0, 1.0);
      const double tau = rng.uniform(0.02, 0.3);
      data.design.add(p, tau);
      data.values.push_back(VectorXd::Constant(1, forward(p[0]) + tau * rng.normal()));
    }
    const SurrogateModel model = SurrogateModel::fit(k, data);

    KlBoundToy toy;
    toy.forward = forward;
    toy.box = BoxDomain::cube(1, 0.0, 1.0);
    toy.meas = meas;
    toy.model = &model;
    toy.grid_n = 20001;
    toy.lemma_draws = 20000;
    toy.seed = rng.next_u64();
    const KlBoundReport rep = verify_kl_bound(toy, 1e-6);
    min_slack = std::min(min_slack, rep.slack);
    if (!rep.bound_holds || !rep.lemma_holds) res.pass = false;
  }
  if (min_slack < -1e-6) res.pass = false;
  res.detail = "min slack (bound - KL) " + fmt(min_slack) + " over " +
               std::to_string(configs) + " 1D configurations (must be >= -1e-6)";
  return res;
}

CheckResult check_full_likelihood_identity(int instances, int draws, std::uint64_t seed) {
  CheckResult res{"full-likelihood-identity", true, ""};
  RandomStream rng(seed);
  double worst = 0.0;
  for (int t = 0; t < instances; ++t) {
    const int m = 1 + static_cast<int>(rng.uniform_index(3));
    Measurement meas;
    meas.noise_std = rng.uniform(0.5, 2.0);
    PredictiveDistribution pred;
    pred.mean = rng.normal_vector(m);
    meas.y = pred.mean + meas.noise_std * rng.normal_vector(m);
    pred.covariance = MatrixXd::Zero(m, m);
    VectorXd sd(m);
    for (int j = 0; j < m; ++j) {
      const double v = rng.uniform(0.1, 1.0) * meas.noise_std * meas.noise_std;
      pred.covariance(j, j) = v;
      sd[j] = std::sqrt(v);
    }

    double acc = 0.0;
    VectorXd y(m);
    for (int k = 0; k < draws; ++k) {
      for (int j = 0; j < m; ++j) y[j] = pred.mean[j] + sd[j] * rng.normal();
      acc += std::exp(log_likelihood_exact(meas, y));
    }
    const double mc = acc / draws;
    // E[exp kernel] = L_D * (2 pi)^{m/2} * det(Sigma^2)^{1/2}.
    const double closed =
        std::exp(log_likelihood_full(meas, pred) +
                 0.5 * m * std::log(2.0 * std::numbers::pi) + m * std::log(meas.noise_std));
    worst = std::max(worst, std::abs(mc - closed) / closed);
  }
  res.pass = worst <= 0.02;
  res.detail = "max relative deviation " + fmt(worst) + " over " +
               std::to_string(instances) + " instances at " + std::to_string(draws) +
               " draws (tolerance 2%)";
  return res;
}

CheckResult check_sampler_moments(std::uint64_t seed) {
  CheckResult res{"sampler-moments", true, ""};
  const int d = 2;
  LogDensity logpdf = [](const ParamPoint& p) { return -0.5 * p.squaredNorm(); };
  const BoxDomain box = BoxDomain::cube(d, -10.0, 10.0);
  RandomStream rng(seed);
  const int nw = default_walker_count(d);
  MatrixXd init(nw, d);
  for (int i = 0; i < nw; ++i)
    for (int a = 0; a < d; ++a) init(i, a) = 0.5 * rng.normal();
  Ensemble e = make_ensemble_at(box, init, logpdf, rng.child("ens"));

  for (int w = 0; w < 500; ++w) ensemble_step(e, logpdf);

  const int sweeps = 3000, batches = 30;
  const int per_batch = sweeps / batches;
  MatrixXd batch_mean = MatrixXd::Zero(batches, d);
  MatrixXd batch_second = MatrixXd::Zero(batches, d);
  for (int b2 = 0; b2 < batches; ++b2) {
    for (int s2 = 0; s2 < per_batch; ++s2) {
      ensemble_step(e, logpdf);
      batch_mean.row(b2) += e.walkers.colwise().mean();
      for (int a = 0; a < d; ++a)
        batch_second(b2, a) += e.walkers.col(a).array().square().mean();
    }
    batch_mean.row(b2) /= per_batch;
    batch_second.row(b2) /= per_batch;
  }

  double worst_sigmas = 0.0;
  for (int a = 0; a < d; ++a) {
    const double mean = batch_mean.col(a).mean();
    const double sd_b = std::sqrt(
        (batch_mean.col(a).array() - mean).square().sum() / (batches - 1.0));
    const double se = sd_b / std::sqrt(static_cast<double>(batches));
    worst_sigmas = std::max(worst_sigmas, std::abs(mean - 0.0) / se);

    const double second = batch_second.col(a).mean();
    const double sd2 = std::sqrt(
        (batch_second.col(a).array() - second).square().sum() / (batches - 1.0));
    const double se2 = sd2 / std::sqrt(static_cast<double>(batches));
    worst_sigmas = std::max(worst_sigmas, std::abs(second - 1.0) / se2);
  }
  res.pass = worst_sigmas <= 3.0;
  res.detail = "standard-normal target: max moment deviation " + fmt(worst_sigmas) +
               " batch-means sigma (limit 3), acceptance rate " + fmt(e.acceptance_rate());
  return res;
}

CheckResult check_detailed_balance() {
  CheckResult res{"detailed-balance", true, ""};
  const Eigen::Vector3d pi(0.2, 0.3, 0.5);
  double worst = 0.0;

  // Metropolis rule (differential-evolution move path) with a symmetric
  // 3-state proposal.
  {
    MatrixXd P = MatrixXd::Zero(3, 3);
    for (int i = 0; i < 3; ++i) {
      double out = 0.0;
      for (int j = 0; j < 3; ++j) {
        if (i == j) continue;
        const double acc =
            std::min(1.0, std::exp(log_accept_metropolis(std::log(pi[j]), std::log(pi[i]))));
        P(i, j) = 0.5 * acc;
        out += P(i, j);
      }
      P(i, i) = 1.0 - out;
    }
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        worst = std::max(worst, std::abs(pi[i] * P(i, j) - pi[j] * P(j, i)));
    const Eigen::RowVector3d station = pi.transpose() * P;
    for (int j = 0; j < 3; ++j) worst = std::max(worst, std::abs(station[j] - pi[j]));
  }

  // Stretch rule in 1D: flow identity pi(x) q(x->y) a(x->y) = pi(y) q(y->x)
  // a(y->x), with q(x->y) = g(z) / |x - c| for y = c + z (x - c).
  {
    const double c = 0.0;
    const double xs[] = {0.6, 0.9, 1.5};
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        if (i == j) continue;
        const double zf = (xs[j] - c) / (xs[i] - c);
        const double zb = (xs[i] - c) / (xs[j] - c);
        const double qf = stretch_z_density(zf) / std::abs(xs[i] - c);
        const double qb = stretch_z_density(zb) / std::abs(xs[j] - c);
        if ((qf == 0.0) != (qb == 0.0)) {
          worst = std::max(worst, 1.0);  // inconsistent support
          continue;
        }
        if (qf == 0.0) continue;
        const double af = std::min(
            1.0, std::exp(log_accept_stretch(1, zf, std::log(pi[j]), std::log(pi[i]))));
        const double ab = std::min(
            1.0, std::exp(log_accept_stretch(1, zb, std::log(pi[i]), std::log(pi[j]))));
        worst = std::max(worst, std::abs(pi[i] * qf * af - pi[j] * qb * ab));
      }
  }

  res.pass = worst <= 1e-12;
  res.detail = "max reversibility/stationarity defect " + fmt(worst) + " (tolerance 1e-12)";
  return res;
}

CheckResult check_tolerance_optimizer_oracle(std::uint64_t seed) {
  CheckResult res{"tolerance-optimizer-oracle", true, ""};
  RandomStream rng(seed);

  Kernel k;
  k.lengthscales = VectorXd::Constant(2, 0.5);
  k.component_variances = VectorXd::Constant(1, 1.0);
  TrainingData data;
  ParamPoint p0(2);
  p0 << 0.0, 0.0;
  data.design.add(p0, 0.2);
  data.values.push_back(VectorXd::Constant(1, 0.3));
  const SurrogateModel model = SurrogateModel::fit(k, data);

  Measurement meas;
  meas.noise_std = 0.3;
  meas.y = VectorXd::Constant(1, 0.25);

  std::vector<ParamPoint> samples;
  for (int i = 0; i < 200; ++i) {
    ParamPoint p(2);
    p[0] = rng.uniform(-1.0, 1.0);
    p[1] = rng.uniform(-1.0, 1.0);
    samples.push_back(p);
  }
  MatrixXd sample_mat(samples.size(), 2);
  for (size_t i = 0; i < samples.size(); ++i) sample_mat.row(i) = samples[i].transpose();

  CandidateSet cands;
  cands.points.resize(1, 2);
  cands.points << 0.3, 0.2;
  cands.acquisition_values = VectorXd::Constant(1, 1.0);

  const WorkModel wm(1.0);
  const double budget = 30.0;
  const double tau_default = 0.05;

  const FrozenErrorState state(model, meas, ErrorModelKind::KL, sample_mat, wm);
  const double w_old_lb = work_of_tol(wm, 0.2);
  const double cap = w_old_lb + budget;

  // Exhaustive oracle over 200 work splits (full spend is optimal since the
  // objective decreases in every coordinate).
  double oracle = kInf;
  for (int t = 0; t < 200; ++t) {
    const double w_old = w_old_lb + budget * t / 199.0;
    const double w_cand = cap - w_old;
    VectorXd tau(2);
    tau[0] = tol_of_work(wm, w_old);
    tau[1] = w_cand > 1e-12 ? tol_of_work(wm, w_cand) : kInf;
    oracle = std::min(oracle, state.objective(cands.points, tau, nullptr));
  }

  const ToleranceVector T = optimize_tolerances(data.design, cands, budget, model, meas,
                                                ErrorModelKind::KL, samples, wm, tau_default);
  const double returned = state.objective(cands.points, T.values, nullptr);

  double spent = 0.0;
  for (int i = 0; i < T.size(); ++i)
    if (std::isfinite(T.values[i])) spent += work_of_tol(wm, T.values[i]);
  const bool budget_ok = spent <= cap + 1e-9;
  const bool refinement_ok = T.values[0] <= 0.2 + 1e-12;
  const double gap = (returned - oracle) / std::max(oracle, 1e-300);

  res.pass = budget_ok && refinement_ok && returned <= oracle * 1.01 + 1e-12 &&
             std::abs(gap) <= 0.01;
  res.detail = "objective " + fmt(returned) + " vs grid oracle " + fmt(oracle) +
               " (gap " + fmt(gap * 100.0) + "%), spent " + fmt(spent) + " of cap " +
               fmt(cap);
  return res;
}

std::vector<CheckResult> run_all_checks() {
  return {check_gp_oracle(),
          check_derivative_suite(),
          check_lemma_mean_deviation(),
          check_theorem_bound(),
          check_full_likelihood_identity(),
          check_sampler_moments(),
          check_detailed_balance(),
          check_tolerance_optimizer_oracle()};
}

}  // namespace agp
