#pragma once

#include "agp/types.hpp"

#include <vector>

namespace agp {

struct Design;  // gp.hpp

// Asymptotic cost of one forward evaluation at tolerance tau: W(tau) = tau^{-q},
// q = l/r for adaptive finite elements of degree r in spatial dimension l.
// tau = +inf maps to zero work (the excluded-candidate convention).
struct WorkModel {
  double exponent = 1.0;  // q > 0

  explicit WorkModel(double q = 1.0) : exponent(q) {
    if (!(q > 0.0)) throw std::invalid_argument("WorkModel: exponent must be > 0");
  }
};

double work_of_tol(const WorkModel& wm, double tau);
double tol_of_work(const WorkModel& wm, double w);
// d tau / d W at work w (negative; more work buys a smaller tolerance).
double dtol_dwork(const WorkModel& wm, double w);

double design_work(const WorkModel& wm, const Design& d);
// Incremental cost W(refined) - W(old). Throws if `refined` does not refine `old`
// (every old point present with tolerance <= its old tolerance).
double refinement_cost(const WorkModel& wm, const Design& refined, const Design& old);

enum class ScheduleKind { Constant, Geometric };

struct BudgetSchedule {
  ScheduleKind kind = ScheduleKind::Constant;
  double per_iteration_base = 1.0;
  int iterations = 1;
  double alpha = 1.0;  // geometric ratio, ignored for constant
};

// Per-iteration budget increments. Constant: base each iteration.
// Geometric: alpha^{j-1} * base at iteration j.
std::vector<double> schedule_increments(const BudgetSchedule& s);

}  // namespace agp
