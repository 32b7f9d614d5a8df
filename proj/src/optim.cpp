#include "agp/optim.hpp"

#include <algorithm>
#include <cmath>

namespace agp {

namespace {

VectorXd fd_gradient(const std::function<double(const VectorXd&)>& f, const VectorXd& x,
                     const BoxDomain& box, double rel_step) {
  const int d = static_cast<int>(x.size());
  VectorXd g(d);
  VectorXd xp = x, xm = x;
  for (int a = 0; a < d; ++a) {
    const double h = rel_step * box.scale(a);
    // One-sided at the bounds, central inside.
    const double up = std::min(x[a] + h, box.hi[a]);
    const double dn = std::max(x[a] - h, box.lo[a]);
    xp[a] = up;
    xm[a] = dn;
    g[a] = up > dn ? (f(xp) - f(xm)) / (up - dn) : 0.0;
    if (!std::isfinite(g[a])) g[a] = 0.0;
    xp[a] = x[a];
    xm[a] = x[a];
  }
  return g;
}

}  // namespace

OptimResult maximize_box(const std::function<double(const VectorXd&)>& f,
                         const VectorXd& x0, const BoxDomain& box,
                         const OptimOptions& opts) {
  const int d = static_cast<int>(x0.size());
  VectorXd x = box.clamp(x0);
  double fx = f(x);
  if (!std::isfinite(fx)) {
    // Objective vanishes (log scale: -inf) at the start; nothing to climb.
    OptimResult res;
    res.x = x;
    res.value = fx;
    return res;
  }
  MatrixXd H = MatrixXd::Identity(d, d);  // inverse Hessian approximation
  VectorXd g = fd_gradient(f, x, box, opts.gradient_step);

  OptimResult res;
  for (int it = 0; it < opts.max_iterations; ++it) {
    res.iterations = it + 1;
    VectorXd dir = H * g;  // ascent direction
    if (dir.dot(g) <= 0.0) {
      H.setIdentity();
      dir = g;
    }
    const double dirnorm = dir.norm();
    if (dirnorm < 1e-300) break;

    // Backtracking line search with projection onto the box.
    double step = 1.0;
    // Scale first trial so the move is a modest fraction of the box.
    double maxcomp = 0.0;
    for (int a = 0; a < d; ++a) maxcomp = std::max(maxcomp, std::abs(dir[a]) / box.scale(a));
    if (maxcomp > 0.25) step = 0.25 / maxcomp;

    VectorXd xn;
    double fn = fx;
    bool accepted = false;
    for (int ls = 0; ls < 30; ++ls) {
      xn = box.clamp(x + step * dir);
      fn = f(xn);
      if (fn > fx + 1e-4 * g.dot(xn - x)) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;

    const VectorXd gn = fd_gradient(f, xn, box, opts.gradient_step);
    const VectorXd s = xn - x;
    const VectorXd yv = g - gn;  // gradient change sign-flipped for ascent
    const double sy = s.dot(yv);
    if (sy > 1e-12 * s.norm() * yv.norm()) {
      const VectorXd Hy = H * yv;
      H += ((sy + yv.dot(Hy)) / (sy * sy)) * (s * s.transpose()) -
           (Hy * s.transpose() + s * Hy.transpose()) / sy;
    } else {
      H.setIdentity();
    }

    const double rel_change = std::abs(fn - fx) / std::max(1.0, std::abs(fx));
    x = xn;
    fx = fn;
    g = gn;
    if (rel_change < opts.tolerance) break;
  }
  res.x = x;
  res.value = fx;
  return res;
}

VectorXd project_budget_set(const VectorXd& w, const VectorXd& lb, double cap) {
  const int n = static_cast<int>(w.size());
  if (lb.sum() > cap + 1e-9)
    throw std::invalid_argument("project_budget_set: infeasible bounds");
  VectorXd v = w.cwiseMax(lb);
  if (v.sum() <= cap) return v;
  // Solve sum(max(w - lambda, lb)) = cap by bisection on lambda >= 0.
  double lambda_lo = 0.0, lambda_hi = (w - lb).maxCoeff();
  for (int it = 0; it < 200; ++it) {
    const double lambda = 0.5 * (lambda_lo + lambda_hi);
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += std::max(w[i] - lambda, lb[i]);
    if (s > cap)
      lambda_lo = lambda;
    else
      lambda_hi = lambda;
  }
  const double lambda = lambda_hi;
  for (int i = 0; i < n; ++i) v[i] = std::max(w[i] - lambda, lb[i]);
  // Guard roundoff: rescale the slack above lb if still over cap.
  const double over = v.sum() - cap;
  if (over > 0.0) {
    const double slack = (v - lb).sum();
    if (slack > 0.0) v = lb + (v - lb) * std::max(0.0, 1.0 - over / slack);
  }
  return v;
}

OptimResult minimize_budget_constrained(const BudgetObjective& obj, const VectorXd& w0,
                                        const VectorXd& lb, double cap,
                                        int max_iterations, double rel_tolerance) {
  VectorXd w = project_budget_set(w0, lb, cap);
  VectorXd grad(w.size());
  double fw = obj.eval(w, &grad);
  double step = 1.0;

  OptimResult res;
  for (int it = 0; it < max_iterations; ++it) {
    res.iterations = it + 1;
    // Scale the first trial step to a fraction of the budget scale.
    const double gn = grad.norm();
    if (gn < 1e-300) break;
    double trial = step;
    if (it == 0) trial = 0.1 * std::max(cap, 1.0) / gn;

    bool accepted = false;
    VectorXd wn;
    double fn = fw;
    for (int ls = 0; ls < 40; ++ls) {
      wn = project_budget_set(w - trial * grad, lb, cap);
      fn = obj.eval(wn, nullptr);
      if (fn < fw - 1e-4 * grad.dot(w - wn) || fn < fw) {
        accepted = true;
        break;
      }
      trial *= 0.5;
    }
    if (!accepted) break;
    step = trial * 2.0;

    const double rel_change = std::abs(fw - fn) / std::max(std::abs(fw), 1e-300);
    w = wn;
    fw = obj.eval(w, &grad);
    if (rel_change < rel_tolerance) break;
  }
  res.x = w;
  res.value = fw;
  return res;
}

}  // namespace agp
