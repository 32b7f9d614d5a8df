#include "agp/design.hpp"

#include "agp/optim.hpp"

#include <algorithm>
#include <cmath>

namespace agp {

FrozenErrorState::FrozenErrorState(const SurrogateModel& model, const Measurement& meas,
                                   ErrorModelKind kind, const MatrixXd& samples,
                                   const WorkModel& wm)
    : model_(model), meas_(meas), kind_(kind), wm_(wm), samples_(samples) {
  if (samples_.rows() == 0) throw std::invalid_argument("FrozenErrorState: no samples");
  const int n = static_cast<int>(samples_.rows());
  const int s = model_.size();
  const int m = model_.out_dim();
  const Kernel& k = model_.kernel();

  resid_.resize(n);
  VectorXd mean, var;
  for (int i = 0; i < n; ++i) {
    const ParamPoint p = samples_.row(i).transpose();
    model_.predict_diag(p, mean, var);
    resid_[i] = std::sqrt(sigma_quad_norm(meas_.y - mean, meas_.noise_std));
  }

  ks_old_.resize(n, s);
  for (int i = 0; i < n; ++i)
    ks_old_.row(i) = kappa_vector(k, model_.points(), samples_.row(i).transpose()).transpose();

  w_old_.resize(m);
  q_old_.assign(m, VectorXd::Zero(n));
  if (s > 0) {
    for (int j = 0; j < m; ++j) {
      MatrixXd w(s, n);
      for (int i = 0; i < n; ++i) w.col(i) = model_.solve_component(j, ks_old_.row(i).transpose());
      for (int i = 0; i < n; ++i) q_old_[j][i] = ks_old_.row(i).dot(w.col(i));
      w_old_[j] = std::move(w);
    }
  }
}

double FrozenErrorState::acquisition(const ParamPoint& p) const {
  const double tau_p = model_.mean_pred_std(p);
  if (!(tau_p > 1e-300)) return 0.0;  // converged surrogate: nothing to gain

  const int n = static_cast<int>(samples_.rows());
  const int s = model_.size();
  const int m = model_.out_dim();
  const Kernel& k = model_.kernel();
  const double sigma2 = meas_.noise_std * meas_.noise_std;

  const VectorXd kp = s > 0 ? kappa_vector(k, model_.points(), p) : VectorXd();
  VectorXd kc(n);
  for (int i = 0; i < n; ++i) kc[i] = kappa(k, samples_.row(i).transpose(), p);

  // Schur-complement extension of the cached old-design factorizations by the
  // hypothetical point (p, tau_p).
  VectorXd sc(m);
  MatrixXd g(m, n);
  for (int j = 0; j < m; ++j) {
    const double beta = k.component_variances[j];
    if (s > 0) {
      const VectorXd u = model_.solve_component(j, kp);
      sc[j] = beta + tau_p * tau_p - beta * beta * kp.dot(u);
      g.row(j) = kp.transpose() * w_old_[j];
    } else {
      sc[j] = beta + tau_p * tau_p;
      g.row(j).setZero();
    }
    sc[j] = std::max(sc[j], 1e-300);
  }

  // Frobenius contraction of the indicator Jacobian with dGamma/dtau_p per
  // sample, averaged; the Jacobian weights saturate at the cap.
  double acc = 0.0;
  const double inv_n = 1.0 / n;
  for (int i = 0; i < n; ++i) {
    double trace_gamma = 0.0, contraction = 0.0;
    for (int j = 0; j < m; ++j) {
      const double beta = k.component_variances[j];
      const double q = s > 0 ? q_old_[j][i] : 0.0;
      const double resfac = kc[i] - beta * g(j, i);
      const double qform = beta * beta * (q + resfac * resfac / sc[j]);
      const double gamma = std::clamp(beta - qform, 0.0, beta);
      trace_gamma += gamma;
      contraction += 2.0 * tau_p * beta * beta * resfac * resfac / (sc[j] * sc[j]);
    }
    const double tr = trace_gamma / sigma2;
    const double psi = psi_bar_scalar(tr, resid_[i]);
    const JacobianScalars js =
        indicator_jacobian_scalars(kind_, psi, resid_[i], tr, trace_gamma);
    const double diag_scale = std::min(js.c_sigma / sigma2 + js.c_id, kJacobianCap);
    acc += inv_n * std::min(diag_scale * contraction, kJacobianCap);
  }
  const double dtdw = dtol_dwork(wm_, work_of_tol(wm_, tau_p));
  return std::max(-acc * dtdw, 0.0);
}

double FrozenErrorState::objective(const MatrixXd& extra_points, const VectorXd& tolerances,
                                   VectorXd* grad_dtau) const {
  const int s = model_.size();
  const int r = static_cast<int>(extra_points.rows());
  const int total = s + r;
  if (tolerances.size() != total)
    throw std::invalid_argument("FrozenErrorState: tolerance length mismatch");
  const int n = static_cast<int>(samples_.rows());
  const int m = model_.out_dim();
  const Kernel& k = model_.kernel();
  const double sigma2 = meas_.noise_std * meas_.noise_std;
  const double inv_n = 1.0 / n;

  std::vector<int> active;
  for (int i = 0; i < total; ++i)
    if (std::isfinite(tolerances[i])) active.push_back(i);
  const int na = static_cast<int>(active.size());
  if (grad_dtau) grad_dtau->setZero(total);

  // Per-sample predictive variances under the trial tolerances.
  MatrixXd gamma;                    // m x n
  std::vector<MatrixXd> v(m);        // per component: na x n solves
  VectorXd tau2(na);
  if (na == 0) {
    gamma = k.component_variances.replicate(1, n);
  } else {
    MatrixXd pts(na, samples_.cols());
    for (int a = 0; a < na; ++a) {
      const int idx = active[a];
      pts.row(a) = idx < s ? model_.points().row(idx) : extra_points.row(idx - s);
      tau2[a] = tolerances[idx] * tolerances[idx];
    }
    MatrixXd ks(n, na);
    for (int a = 0; a < na; ++a) {
      const int idx = active[a];
      if (idx < s) {
        ks.col(a) = ks_old_.col(idx);
      } else {
        const ParamPoint p = extra_points.row(idx - s).transpose();
        for (int i = 0; i < n; ++i) ks(i, a) = kappa(k, samples_.row(i).transpose(), p);
      }
    }
    const MatrixXd kap = kappa_matrix(k, pts);
    gamma.resize(m, n);
    for (int j = 0; j < m; ++j) {
      const double beta = k.component_variances[j];
      MatrixXd A = beta * kap;
      A.diagonal() += tau2;
      Eigen::LLT<MatrixXd> llt(A);
      if (llt.info() != Eigen::Success) {
        A.diagonal().array() += 1e-10 * A.diagonal().maxCoeff();
        llt.compute(A);
        if (llt.info() != Eigen::Success)
          throw std::runtime_error("FrozenErrorState: trial system not positive definite");
      }
      v[j] = llt.solve(ks.transpose());  // na x n
      for (int i = 0; i < n; ++i) {
        const double qform = beta * beta * ks.row(i).dot(v[j].col(i));
        gamma(j, i) = std::clamp(beta - qform, 0.0, beta);
      }
    }
  }

  // Mean indicator over the samples with the saturating caps applied, plus
  // the capped Jacobian-weighted gradient.
  double value = 0.0;
  for (int i = 0; i < n; ++i) {
    const double tg = gamma.col(i).sum();
    const double tr = tg / sigma2;
    const double psi = psi_bar_scalar(tr, resid_[i]);
    value += inv_n * indicator_scalar(kind_, psi, tg);
    if (grad_dtau && na > 0) {
      const JacobianScalars js = indicator_jacobian_scalars(kind_, psi, resid_[i], tr, tg);
      const double weight = inv_n * std::min(js.c_sigma / sigma2 + js.c_id, kJacobianCap);
      for (int a = 0; a < na; ++a) {
        double dsum = 0.0;
        for (int j = 0; j < m; ++j) {
          const double beta = k.component_variances[j];
          const double vai = v[j](a, i);
          dsum += 2.0 * std::sqrt(tau2[a]) * beta * beta * vai * vai;
        }
        (*grad_dtau)[active[a]] += std::min(weight * dsum, kJacobianCap);
      }
    }
  }
  return value;
}

double acquisition(const ParamPoint& p, const SurrogateModel& model,
                   const Measurement& meas, ErrorModelKind kind,
                   const std::vector<ParamPoint>& samples, const WorkModel& wm) {
  if (samples.empty()) throw std::invalid_argument("acquisition: empty sample list");
  MatrixXd pts(samples.size(), samples[0].size());
  for (size_t i = 0; i < samples.size(); ++i) pts.row(i) = samples[i].transpose();
  return FrozenErrorState(model, meas, kind, pts, wm).acquisition(p);
}

namespace {

bool same_location_scaled(const VectorXd& a, const VectorXd& b, const BoxDomain& box,
                          double threshold) {
  for (int i = 0; i < a.size(); ++i)
    if (std::abs(a[i] - b[i]) / box.scale(i) > threshold) return false;
  return true;
}

}  // namespace

CandidateSet select_candidates(const SurrogateModel& model, const Measurement& meas,
                               ErrorModelKind kind, const std::vector<ParamPoint>& samples,
                               const WorkModel& wm, int max_count, const BoxDomain& box) {
  if (max_count < 1) throw std::invalid_argument("select_candidates: max_count must be >= 1");
  if (samples.empty()) throw std::invalid_argument("select_candidates: empty sample list");

  MatrixXd sample_mat(samples.size(), samples[0].size());
  for (size_t i = 0; i < samples.size(); ++i) sample_mat.row(i) = samples[i].transpose();
  const FrozenErrorState state(model, meas, kind, sample_mat, wm);
  auto fn = [&state](const VectorXd& x) { return state.acquisition(x); };

  const int d = box.dim();
  const MatrixXd starts = halton_points(box, 10 * d);
  OptimOptions opts;
  opts.max_iterations = 40;

  std::vector<std::pair<double, VectorXd>> optima;  // (acquisition value, location)
  for (int i = 0; i < starts.rows(); ++i) {
    const OptimResult res = maximize_box(fn, starts.row(i).transpose(), box, opts);
    if (!(res.value > 0.0) || !std::isfinite(res.value)) continue;
    bool merged = false;
    for (auto& [val, loc] : optima) {
      if (same_location_scaled(res.x, loc, box, kCandidateDedupScaled)) {
        if (res.value > val) {
          val = res.value;
          loc = res.x;
        }
        merged = true;
        break;
      }
    }
    if (!merged) optima.emplace_back(res.value, res.x);
  }

  // Drop optima that are numerical twins of existing design points;
  // refinement of those is the tolerance optimizer's job.
  std::erase_if(optima, [&](const auto& pr) {
    for (int i = 0; i < model.size(); ++i)
      if (same_location_scaled(pr.second, model.points().row(i).transpose(), box,
                               kDesignCollisionScaled))
        return true;
    return false;
  });

  double top = 0.0;
  for (const auto& [val, loc] : optima) top = std::max(top, val);
  // Keep optima within a relative factor 1e-12 of the strongest; an absolute
  // floor removes pure roundoff residue of a vanished acquisition.
  std::erase_if(optima, [&](const auto& pr) {
    return pr.first <= 1e-12 * top || pr.first <= 1e-12;
  });

  std::sort(optima.begin(), optima.end(),
            [](const auto& a, const auto& b) { return a.first > b.first; });
  const int r = std::min<int>(max_count, static_cast<int>(optima.size()));

  CandidateSet out;
  out.points.resize(r, d);
  out.acquisition_values.resize(r);
  for (int i = 0; i < r; ++i) {
    out.points.row(i) = optima[i].second.transpose();
    out.acquisition_values[i] = optima[i].first;
  }
  return out;
}

ToleranceVector optimize_tolerances(const Design& old_design, const CandidateSet& cands,
                                    double budget_increment, const SurrogateModel& model,
                                    const Measurement& meas, ErrorModelKind kind,
                                    const std::vector<ParamPoint>& samples,
                                    const WorkModel& wm, double tau_default) {
  const int s = old_design.size();
  const int r = cands.size();
  ToleranceVector result;
  result.old_count = s;
  result.values.resize(s + r);
  for (int i = 0; i < s; ++i) result.values[i] = old_design.entries[i].tolerance;
  for (int kk = 0; kk < r; ++kk) result.values[s + kk] = kInf;
  if (!(budget_increment > 0.0)) return result;  // infeasible: keep old design
  if (samples.empty()) throw std::invalid_argument("optimize_tolerances: empty sample list");

  MatrixXd sample_mat(samples.size(), samples[0].size());
  for (size_t i = 0; i < samples.size(); ++i) sample_mat.row(i) = samples[i].transpose();
  const FrozenErrorState state(model, meas, kind, sample_mat, wm);

  // Work coordinates: w_i >= W(tau_i_old) for old points, w_i >= 0 for
  // candidates, sum(w) <= W(old) + increment. Zero work means exclusion.
  const int total = s + r;
  VectorXd lb(total);
  for (int i = 0; i < s; ++i) lb[i] = work_of_tol(wm, old_design.entries[i].tolerance);
  lb.tail(r).setZero();
  const double cap = lb.head(s).sum() + budget_increment;
  constexpr double kWorkEps = 1e-12;

  auto tau_of = [&](const VectorXd& w) {
    VectorXd tau(total);
    for (int i = 0; i < total; ++i)
      tau[i] = w[i] > kWorkEps ? tol_of_work(wm, w[i]) : kInf;
    return tau;
  };

  // Objective and gradient in work coordinates.
  BudgetObjective obj;
  obj.eval = [&](const VectorXd& w, VectorXd* grad) -> double {
    const VectorXd tau = tau_of(w);
    if (!grad) return state.objective(cands.points, tau, nullptr);
    VectorXd gtau;
    const double f = state.objective(cands.points, tau, &gtau);
    grad->setZero(total);
    for (int i = 0; i < total; ++i)
      if (w[i] > kWorkEps) (*grad)[i] = gtau[i] * dtol_dwork(wm, w[i]);
    return f;
  };

  const double noop_objective = obj.eval(lb, nullptr);

  // Multi-start: even split over candidates, all-in per candidate,
  // refine-only, default-tolerance entry, mixed, and low-discrepancy interior
  // allocations.
  std::vector<VectorXd> starts;
  {
    VectorXd w = lb;
    if (r > 0) w.tail(r).array() += budget_increment / r;
    starts.push_back(w);
  }
  for (int kk = 0; kk < r; ++kk) {
    VectorXd w = lb;
    w[s + kk] += budget_increment;
    starts.push_back(w);
  }
  if (s > 0) {
    VectorXd w = lb;
    w.head(s).array() += budget_increment / s;
    starts.push_back(w);
  }
  VectorXd default_alloc = lb;
  if (r > 0) {
    // Candidates entering at the default tolerance, remainder refining old
    // points: the fixed-tolerance baseline allocation.
    const double w_def = work_of_tol(wm, tau_default);
    const double per_cand = std::min(w_def, budget_increment / r);
    default_alloc.tail(r).array() += per_cand;
    const double leftover = budget_increment - per_cand * r;
    if (s > 0 && leftover > 0.0) default_alloc.head(s).array() += leftover / s;
    starts.push_back(default_alloc);
    if (s > 0) {
      VectorXd half = lb;
      half.tail(r).array() += 0.5 * budget_increment / r;
      half.head(s).array() += 0.5 * budget_increment / s;
      starts.push_back(half);
    }
  }
  {
    const BoxDomain unit = BoxDomain::cube(std::min(total, 8), 0.0, 1.0);
    const MatrixXd h = halton_points(unit, 3);
    for (int i = 0; i < h.rows(); ++i) {
      VectorXd w = lb;
      double norm = 0.0;
      for (int a = 0; a < total; ++a) norm += h(i, a % unit.dim());
      if (norm <= 0.0) continue;
      for (int a = 0; a < total; ++a)
        w[a] += budget_increment * h(i, a % unit.dim()) / norm;
      starts.push_back(w);
    }
  }

  double best = noop_objective;
  VectorXd best_w = lb;
  for (const auto& w0 : starts) {
    const OptimResult res = minimize_budget_constrained(obj, w0, lb, cap, 200, 1e-8);
    if (res.value < best) {
      best = res.value;
      best_w = res.x;
    }
  }
  const double margin = 1e-9 * std::max(1.0, std::abs(noop_objective));
  if (!(best < noop_objective - margin)) {
    // Flat regime: dominant (saturated) samples are out of reach of every
    // feasible allocation and the model cannot rank them. Spending the budget
    // anyway strictly refines the design (objective <= no-op by monotonicity),
    // so enter the candidates at the default tolerance rather than stalling.
    if (r == 0) return result;
    best_w = default_alloc;
  }

  // Exclude candidates not worth a very coarse evaluation.
  const double w_min = work_of_tol(wm, 10.0 * tau_default);
  for (int kk = 0; kk < r; ++kk)
    if (best_w[s + kk] < w_min) best_w[s + kk] = 0.0;
  best_w = best_w.cwiseMax(lb);

  const VectorXd tau = tau_of(best_w);
  for (int i = 0; i < s; ++i)
    result.values[i] = std::min(tau[i], old_design.entries[i].tolerance);
  for (int kk = 0; kk < r; ++kk) result.values[s + kk] = tau[s + kk];
  return result;
}

ApplyResult apply_design_update(const TrainingData& old_data, const CandidateSet& cands,
                                const ToleranceVector& T, SimulatedEvaluator& evaluator) {
  const int s = old_data.size();
  if (T.old_count != s || T.size() != s + cands.size())
    throw std::invalid_argument("apply_design_update: tolerance vector shape mismatch");

  ApplyResult out;
  out.data = old_data;
  for (int i = 0; i < s; ++i) {
    const double told = old_data.design.entries[i].tolerance;
    const double tnew = T.values[i];
    if (tnew < told * (1.0 - 1e-12)) {
      out.data.design.entries[i].tolerance = tnew;
      out.data.values[i] =
          evaluator.eval_with_tolerance(old_data.design.entries[i].point, tnew);
      out.refreshed.push_back(i);
      ++out.evaluations;
    }
  }
  for (int kk = 0; kk < cands.size(); ++kk) {
    const double tau = T.candidate(kk);
    if (!std::isfinite(tau)) continue;
    const ParamPoint p = cands.points.row(kk).transpose();
    const int idx = out.data.design.add(p, tau);
    const VectorXd v = evaluator.eval_with_tolerance(p, tau);
    if (idx == out.data.design.size() - 1 &&
        static_cast<int>(out.data.values.size()) < out.data.design.size()) {
      out.data.values.push_back(v);
    } else {
      out.data.values[idx] = v;  // merged into an existing entry
    }
    ++out.evaluations;
  }
  return out;
}

}  // namespace agp
