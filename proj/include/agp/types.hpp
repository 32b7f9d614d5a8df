#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace agp {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// A parameter point p in the problem domain Omega.
using ParamPoint = Eigen::VectorXd;

constexpr double kInf = std::numeric_limits<double>::infinity();

// Axis-aligned box domain. Bounds may be infinite (used by test targets);
// all experiment domains are finite.
struct BoxDomain {
  VectorXd lo;
  VectorXd hi;

  BoxDomain() = default;
  BoxDomain(VectorXd lower, VectorXd upper) : lo(std::move(lower)), hi(std::move(upper)) {
    if (lo.size() != hi.size()) throw std::invalid_argument("BoxDomain: bound size mismatch");
    for (int i = 0; i < lo.size(); ++i)
      if (!(lo[i] < hi[i])) throw std::invalid_argument("BoxDomain: empty box");
  }

  static BoxDomain cube(int d, double lower, double upper) {
    return BoxDomain(VectorXd::Constant(d, lower), VectorXd::Constant(d, upper));
  }

  int dim() const { return static_cast<int>(lo.size()); }

  bool contains(const VectorXd& p) const {
    if (p.size() != lo.size()) return false;
    for (int i = 0; i < p.size(); ++i)
      if (p[i] < lo[i] || p[i] > hi[i]) return false;
    return true;
  }

  double width(int axis) const { return hi[axis] - lo[axis]; }

  // Width used for scaling heuristics; finite even for unbounded axes.
  double scale(int axis) const {
    const double w = hi[axis] - lo[axis];
    return std::isfinite(w) ? w : 1.0;
  }

  double volume() const {
    double v = 1.0;
    for (int i = 0; i < lo.size(); ++i) v *= width(i);
    return v;
  }

  VectorXd clamp(const VectorXd& p) const {
    VectorXd q = p;
    for (int i = 0; i < q.size(); ++i) q[i] = std::min(std::max(q[i], lo[i]), hi[i]);
    return q;
  }

  VectorXd center() const { return 0.5 * (lo + hi); }
};

}  // namespace agp
