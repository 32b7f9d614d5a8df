#include "agp/work_model.hpp"

#include "agp/gp.hpp"

#include <cmath>

namespace agp {

double work_of_tol(const WorkModel& wm, double tau) {
  if (std::isinf(tau) && tau > 0.0) return 0.0;
  if (!(tau > 0.0)) throw std::invalid_argument("work_of_tol: tau must be > 0");
  return std::pow(tau, -wm.exponent);
}

double tol_of_work(const WorkModel& wm, double w) {
  if (!(w > 0.0)) throw std::invalid_argument("tol_of_work: work must be > 0");
  return std::pow(w, -1.0 / wm.exponent);
}

double dtol_dwork(const WorkModel& wm, double w) {
  if (!(w > 0.0)) throw std::invalid_argument("dtol_dwork: work must be > 0");
  const double inv_q = 1.0 / wm.exponent;
  return -inv_q * std::pow(w, -inv_q - 1.0);
}

double design_work(const WorkModel& wm, const Design& d) {
  double w = 0.0;
  for (const auto& e : d.entries) w += work_of_tol(wm, e.tolerance);
  return w;
}

double refinement_cost(const WorkModel& wm, const Design& refined, const Design& old) {
  for (const auto& e : old.entries) {
    const int idx = refined.find(e.point);
    if (idx < 0 || refined.entries[idx].tolerance > e.tolerance * (1.0 + 1e-12))
      throw std::invalid_argument("refinement_cost: refined design does not refine old design");
  }
  return design_work(wm, refined) - design_work(wm, old);
}

std::vector<double> schedule_increments(const BudgetSchedule& s) {
  if (s.iterations < 1) throw std::invalid_argument("schedule: iterations must be >= 1");
  std::vector<double> inc(s.iterations);
  double factor = 1.0;
  for (int j = 0; j < s.iterations; ++j) {
    inc[j] = s.kind == ScheduleKind::Constant ? s.per_iteration_base
                                              : factor * s.per_iteration_base;
    factor *= s.alpha;
  }
  return inc;
}

}  // namespace agp
