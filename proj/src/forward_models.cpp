#include "agp/forward_models.hpp"

#include <array>
#include <cmath>
#include <numbers>

namespace agp {

namespace {
constexpr double kPi = std::numbers::pi;
}

VectorXd eval_synthetic_2d(const ParamPoint& p) {
  if (p.size() != 2) throw std::invalid_argument("eval_synthetic_2d: dim != 2");
  const double x = p[0], y = p[1];
  const double phi = (std::sin(20.0 * x - 2.0) + std::sin(20.0 * y - 2.0)) / 10.0;
  VectorXd out(3);
  int i = 0;
  for (double k : {0.0, 10.0, 20.0}) {
    out[i++] = (std::sin(k) + std::cos(k)) * x + (std::sin(k) - std::cos(k)) * y + phi;
  }
  return out;
}

double eval_diffusion_3d(double t, const Eigen::Vector3d& sensor, const ParamPoint& x0) {
  if (!(t > 0.0)) throw std::domain_error("eval_diffusion_3d: t must be > 0");
  if (x0.size() != 3) throw std::invalid_argument("eval_diffusion_3d: dim != 3");
  const double r2 = (sensor - Eigen::Vector3d(x0)).squaredNorm();
  return std::pow(4.0 * kPi * t, -1.5) * std::exp(-r2 / (4.0 * t));
}

double eval_poisson_4d(const Eigen::Vector2d& sensor, const Eigen::Vector2d& x1,
                       const Eigen::Vector2d& x2) {
  const double r1 = (sensor - x1).norm();
  const double r2 = (sensor - x2).norm();
  if (r1 < 1e-12 || r2 < 1e-12)
    throw std::domain_error("eval_poisson_4d: sensor coincides with a source");
  return -std::log(r1) + std::log(r2);
}

namespace {

// Sensor stacking orders are fixed here; any fixed order is valid because the
// measurement covariance is scalar * identity.

// Diffusion: times {0.5, 0.7, 1} outer; sensors +x,-x,+y,-y,+z,-z inner.
const std::array<double, 3> kDiffusionTimes = {0.5, 0.7, 1.0};
const std::array<Eigen::Vector3d, 6> kDiffusionSensors = {
    Eigen::Vector3d(1, 0, 0),  Eigen::Vector3d(-1, 0, 0), Eigen::Vector3d(0, 1, 0),
    Eigen::Vector3d(0, -1, 0), Eigen::Vector3d(0, 0, 1),  Eigen::Vector3d(0, 0, -1)};

VectorXd diffusion_stack(const ParamPoint& x0) {
  VectorXd out(18);
  int i = 0;
  for (double t : kDiffusionTimes)
    for (const auto& x : kDiffusionSensors) out[i++] = eval_diffusion_3d(t, x, x0);
  return out;
}

// Poisson: 12 unit-circle sensors at angles 2*pi*i/12, i = 0..11.
VectorXd poisson_stack(const ParamPoint& p) {
  if (p.size() != 4) throw std::invalid_argument("poisson4d: dim != 4");
  const Eigen::Vector2d x1(p[0], p[1]), x2(p[2], p[3]);
  VectorXd out(12);
  for (int i = 0; i < 12; ++i) {
    const double a = 2.0 * kPi * i / 12.0;
    out[i] = eval_poisson_4d(Eigen::Vector2d(std::cos(a), std::sin(a)), x1, x2);
  }
  return out;
}

}  // namespace

ForwardModel make_forward_model(const std::string& id) {
  ForwardModel fm;
  fm.id = id;
  if (id == "synthetic2d") {
    fm.dim_param = 2;
    fm.dim_out = 3;
    fm.domain = BoxDomain::cube(2, -0.5, 0.5);
    const BoxDomain box = fm.domain;
    fm.eval_exact = [box](const ParamPoint& p) {
      if (!box.contains(p)) throw std::domain_error("synthetic2d: point outside domain");
      return eval_synthetic_2d(p);
    };
  } else if (id == "diffusion3d") {
    fm.dim_param = 3;
    fm.dim_out = 18;
    fm.domain = BoxDomain::cube(3, -1.0, 1.0);
    const BoxDomain box = fm.domain;
    fm.eval_exact = [box](const ParamPoint& p) {
      if (!box.contains(p)) throw std::domain_error("diffusion3d: point outside domain");
      return diffusion_stack(p);
    };
  } else if (id == "poisson4d") {
    fm.dim_param = 4;
    fm.dim_out = 12;
    fm.domain = BoxDomain::cube(4, -1.0, 1.0);
    const BoxDomain box = fm.domain;
    fm.eval_exact = [box](const ParamPoint& p) {
      if (!box.contains(p)) throw std::domain_error("poisson4d: point outside domain");
      return poisson_stack(p);
    };
  } else {
    throw std::invalid_argument("unknown forward model id: " + id);
  }
  return fm;
}

VectorXd SimulatedEvaluator::eval_with_tolerance(const ParamPoint& p, double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("eval_with_tolerance: tau must be > 0");
  if (!model_.domain.contains(p))
    throw std::domain_error("eval_with_tolerance: point outside domain");
  VectorXd v = model_.eval_exact(p);
  for (int i = 0; i < v.size(); ++i) v[i] += tau * rng_.normal();
  return v;
}

}  // namespace agp
