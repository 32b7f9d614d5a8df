#pragma once

#include "agp/bayes.hpp"
#include "agp/rng.hpp"
#include "agp/types.hpp"

#include <functional>
#include <utility>
#include <vector>

namespace agp {

using LogDensity = std::function<double(const ParamPoint&)>;

// Affine-invariant ensemble of walkers updated in half-batches. Moves are a
// mixture of the differential-evolution move (weight 0.85), the stretch move
// with scale a = 2 (weight 0.1) and, on finite boxes, a flat independence
// proposal over the box (weight 0.05). The independence component gives
// walkers a route between separated modes, which the pure stretch/DE mixture
// lacks once the ensemble has collapsed onto one of them.
struct Ensemble {
  MatrixXd walkers;      // count x d, all inside the box
  VectorXd log_density;  // cached target values
  BoxDomain box;
  RandomStream rng{0};

  long proposed = 0;
  long accepted = 0;
  long nan_rejected = 0;  // proposals whose log density evaluated to NaN

  int count() const { return static_cast<int>(walkers.rows()); }
  int dim() const { return static_cast<int>(walkers.cols()); }
  double acceptance_rate() const {
    return proposed > 0 ? static_cast<double>(accepted) / proposed : 0.0;
  }
};

constexpr double kStretchScale = 2.0;
constexpr double kStretchWeight = 0.1;
constexpr double kIndependenceWeight = 0.05;  // finite boxes only

// Walker count used by the pipeline: 2 * max(2(d+1), 16).
int default_walker_count(int d);

// Walkers initialized by Latin hypercube over the box (requires finite box).
Ensemble make_ensemble(const BoxDomain& box, int count, const LogDensity& logpdf,
                       RandomStream rng);
// Walkers at explicitly given rows (used by tests and unbounded targets).
Ensemble make_ensemble_at(const BoxDomain& box, const MatrixXd& walkers,
                          const LogDensity& logpdf, RandomStream rng);

// One full sweep: each half-batch updated against the frozen complementary half.
void ensemble_step(Ensemble& e, const LogDensity& logpdf);

// Move primitives, exposed so the detailed-balance checks can exercise the
// production acceptance rules directly.
double stretch_z_density(double z, double a = kStretchScale);
double stretch_sample_z(RandomStream& rng, double a = kStretchScale);
double log_accept_stretch(int d, double z, double logp_prop, double logp_cur);
double log_accept_metropolis(double logp_prop, double logp_cur);

// Runs `warmup` sweeps, then collects all walker states once per sweep until
// n samples accumulated; returns exactly n (truncating the last sweep) along
// with the advanced ensemble for warm-starting.
std::pair<std::vector<ParamPoint>, Ensemble> draw_from_logpdf(const LogDensity& logpdf,
                                                              Ensemble e, int n,
                                                              int warmup);

// Surrogate-posterior wrapper of the generic draw.
std::pair<std::vector<ParamPoint>, Ensemble> draw(const Measurement& meas,
                                                  const PriorBox& prior,
                                                  const SurrogateModel& model, int n,
                                                  int warmup, Ensemble e0);

// Sliding-window sample store with iteration-of-birth tags, oldest first.
struct SampleChain {
  struct Tagged {
    int iteration;
    ParamPoint point;
  };
  std::vector<Tagged> samples;

  int size() const { return static_cast<int>(samples.size()); }
  std::vector<ParamPoint> points() const;
  MatrixXd points_matrix() const;
};

// Discards the h oldest samples then appends `fresh` tagged with `iteration`.
// h > size() clamps to a full discard and reports it via `clamped`.
SampleChain update_chain(SampleChain chain, const std::vector<ParamPoint>& fresh, int h,
                         int iteration, bool* clamped = nullptr);

// Quadratic (floor-free) growth between the per-problem endpoints. `every` = 2
// restricts sampling to odd iterations (the 4D experiment).
struct SamplingSchedule {
  int iterations = 1;  // J; schedule entries run j = 1 .. J+1
  double draw_base = 0.0;
  double draw_growth = 0.0;
  double discard_base = 0.0;
  double discard_growth = 0.0;
  int every = 1;
};

std::pair<int, int> sample_schedule(const SamplingSchedule& s, int j);
SamplingSchedule schedule_for_problem(const std::string& problem_id);

}  // namespace agp
