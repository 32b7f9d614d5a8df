#pragma once

#include "agp/types.hpp"

#include <functional>

namespace agp {

struct OptimOptions {
  int max_iterations = 100;
  double gradient_step = 1e-5;   // central-difference step, scaled per axis
  double tolerance = 1e-10;      // relative objective change stopping rule
};

struct OptimResult {
  VectorXd x;
  double value = 0.0;
  int iterations = 0;
};

// Maximizes f over the box with BFGS steps, central finite-difference
// gradients and projection onto the bounds. Intended for smooth,
// low-dimensional objectives (d <= 8).
OptimResult maximize_box(const std::function<double(const VectorXd&)>& f,
                         const VectorXd& x0, const BoxDomain& box,
                         const OptimOptions& opts = {});

// Euclidean projection onto { w : w >= lb, sum(w) <= cap }.
VectorXd project_budget_set(const VectorXd& w, const VectorXd& lb, double cap);

// Minimizes f (value + gradient) over { w >= lb, sum(w) <= cap } by projected
// gradient descent with Armijo backtracking.
struct BudgetObjective {
  // Returns the objective; fills grad if non-null.
  std::function<double(const VectorXd&, VectorXd*)> eval;
};

OptimResult minimize_budget_constrained(const BudgetObjective& obj, const VectorXd& w0,
                                        const VectorXd& lb, double cap,
                                        int max_iterations = 200,
                                        double rel_tolerance = 1e-8);

}  // namespace agp
