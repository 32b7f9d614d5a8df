#pragma once

#include "agp/design.hpp"
#include "agp/error_models.hpp"
#include "agp/forward_models.hpp"
#include "agp/metrics.hpp"
#include "agp/sampler.hpp"
#include "agp/work_model.hpp"

#include <optional>
#include <string>
#include <vector>

namespace agp {

// One strategy instance. posAGP and LHSGP ignore the error kind for tolerance
// assignment (all evaluations at tau_default) but still log the error model.
struct StrategyConfig {
  std::string kind;  // "AGP-const" | "AGP-geom" | "posAGP" | "LHSGP"
  ErrorModelKind error_kind = ErrorModelKind::KL;
  double work_exponent = 1.0;
  double geometric_alpha = 1.0;  // AGP-geom only

  bool adaptive_tolerances() const { return kind == "AGP-const" || kind == "AGP-geom"; }
  std::string label() const;
};

struct ExperimentConfig {
  std::string problem_id;
  int measurements = 1;
  int repetitions = 1;
  std::uint64_t master_seed = 1;
  int initial_design_size = 5;
  double tau_default = 0.05;
  double noise_sigma = 0.02;
  int iterations = 13;  // J
  int candidates_per_iteration = 3;
  SamplingSchedule sampling;
  int metric_grid_resolution = 201;  // d <= 2 reference grids
  int reference_samples = 10000;     // d >= 3 reference chains
  int importance_draws = 20000;
  bool dump_chains = false;  // per-iteration chain CSVs in addition to the final one
  std::vector<StrategyConfig> strategies;

  void validate() const;
};

// Paper-scale configuration for one of the three experiments.
ExperimentConfig default_config(const std::string& problem_id);
// Reduced CI-scale preset: J = 6, 2 measurements x 2 repetitions, chains up
// to 4000 samples, strategies {AGP-const, posAGP, LHSGP} x {KL, L2} at q = 1.
void apply_desk_preset(ExperimentConfig& cfg);

struct IterationRow {
  int iteration = 0;
  double cumulative_work = 0.0;  // work spent beyond the initial design
  int design_size = 0;
  double error_model = 0.0;
  double metric_kl = 0.0;
  double metric_l2 = 0.0;
  bool metric_kl_reliable = true;
  int chain_size = 0;
  int evaluations = 0;
  double wall_seconds = 0.0;
};

struct DesignDump {
  MatrixXd points;
  VectorXd tolerances;
};

struct RunRecord {
  StrategyConfig strategy;
  std::string problem_id;
  int measurement = 0;
  int repetition = 0;
  std::uint64_t seed = 0;
  std::vector<IterationRow> rows;
  std::vector<DesignDump> designs;  // after each iteration (index 0 = initial)
  double total_budget = 0.0;
  bool audits_ok = true;
  std::string audit_message;
  std::string chain_csv;  // final chain, relative to the output directory
};

// Latin hypercube initial design, all points at tau_default, evaluated through
// the simulated evaluator.
std::pair<Design, TrainingData> initial_design(const ForwardModel& fm, int size,
                                               double tau_default,
                                               SimulatedEvaluator& evaluator,
                                               RandomStream& rng);

// Executes one (strategy, measurement, repetition) run: J iterations of the
// interleaved sample/select/optimize/evaluate loop plus the final sampling.
RunRecord run_single(const ExperimentConfig& cfg, const StrategyConfig& strat,
                     int measurement_idx, int repetition, const Measurement& meas,
                     const TruthReference& ref, const std::string& out_dir);

// Full experiment: simulated measurements, cached truth references, all
// strategies and repetitions. Completed runs found on disk are reused so
// interrupted experiments resume. Returns all records (loaded or computed).
std::vector<RunRecord> run_experiment(const ExperimentConfig& cfg,
                                      const std::string& out_dir);

// Report CSVs (convergence, tolerance distribution, averaged curves, summary)
// from the run records stored under out_dir.
void write_reports(const std::string& runs_dir, const std::string& report_dir);

}  // namespace agp
