#pragma once

#include "agp/rng.hpp"
#include "agp/types.hpp"

#include <functional>
#include <string>

namespace agp {

// Analytic forward map y: Omega in R^d -> R^m, evaluated exactly.
struct ForwardModel {
  std::string id;
  int dim_param = 0;
  int dim_out = 0;
  BoxDomain domain;
  std::function<VectorXd(const ParamPoint&)> eval_exact;

  VectorXd operator()(const ParamPoint& p) const { return eval_exact(p); }
};

// The three experiment forward maps.
VectorXd eval_synthetic_2d(const ParamPoint& p);
double eval_diffusion_3d(double t, const Eigen::Vector3d& sensor, const ParamPoint& x0);
double eval_poisson_4d(const Eigen::Vector2d& sensor, const Eigen::Vector2d& x1,
                       const Eigen::Vector2d& x2);

// Lookup by id: "synthetic2d", "diffusion3d", "poisson4d".
ForwardModel make_forward_model(const std::string& id);

// Tolerance-limited evaluator standing in for an adaptive FE solver: returns
// y(p) + eps with eps componentwise N(0, tau^2). Owns a named seeded stream so
// experiment repetitions are reproducible.
class SimulatedEvaluator {
 public:
  SimulatedEvaluator(ForwardModel model, std::uint64_t rng_seed)
      : model_(std::move(model)), rng_(rng_seed) {}

  // tau is the componentwise noise standard deviation; tau <= 0 is invalid.
  VectorXd eval_with_tolerance(const ParamPoint& p, double tau);

  const ForwardModel& model() const { return model_; }

 private:
  ForwardModel model_;
  RandomStream rng_;
};

}  // namespace agp
