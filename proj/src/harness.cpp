#include "agp/harness.hpp"

#include "agp/optim.hpp"
#include "agp/serialize.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <thread>

namespace fs = std::filesystem;

namespace agp {

namespace {

std::string format_g(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

}  // namespace

std::string StrategyConfig::label() const {
  return kind + "_" + to_string(error_kind) + "_q" + format_g(work_exponent);
}

void ExperimentConfig::validate() const {
  if (measurements < 1 || repetitions < 1 || initial_design_size < 1 || iterations < 1 ||
      candidates_per_iteration < 1)
    throw std::invalid_argument("ExperimentConfig: counts must be >= 1");
  if (!(tau_default > 0.0) || !(noise_sigma > 0.0))
    throw std::invalid_argument("ExperimentConfig: tau_default and noise_sigma must be > 0");
  for (const auto& s : strategies) {
    if (s.kind != "AGP-const" && s.kind != "AGP-geom" && s.kind != "posAGP" &&
        s.kind != "LHSGP")
      throw std::invalid_argument("ExperimentConfig: unknown strategy kind " + s.kind);
  }
}

ExperimentConfig default_config(const std::string& problem_id) {
  ExperimentConfig c;
  c.problem_id = problem_id;
  c.master_seed = 20260801;
  c.sampling = schedule_for_problem(problem_id);
  std::vector<double> exponents;
  double alpha = 1.0;
  if (problem_id == "synthetic2d") {
    c.measurements = 5;
    c.repetitions = 5;
    c.initial_design_size = 5;
    c.tau_default = 0.05;
    c.noise_sigma = 0.02;
    c.iterations = 13;
    c.candidates_per_iteration = 3;
    exponents = {1.0, 1.5, 2.0, 3.0};
    alpha = 1.173;
  } else if (problem_id == "diffusion3d") {
    c.measurements = 3;
    c.repetitions = 5;
    c.initial_design_size = 9;
    c.tau_default = 0.02;
    c.noise_sigma = 0.01;
    c.iterations = 15;
    c.candidates_per_iteration = 4;
    exponents = {1.0, 2.0};
    alpha = 1.178;
  } else if (problem_id == "poisson4d") {
    c.measurements = 3;
    c.repetitions = 4;
    c.initial_design_size = 17;
    c.tau_default = 0.04;
    c.noise_sigma = 0.05;
    c.iterations = 20;
    c.candidates_per_iteration = 5;
    exponents = {1.0, 2.0};
    alpha = 1.148;
  } else {
    throw std::invalid_argument("default_config: unknown problem " + problem_id);
  }
  for (double q : exponents)
    for (ErrorModelKind kind : {ErrorModelKind::KL, ErrorModelKind::L2})
      for (const char* kindname : {"AGP-geom", "AGP-const", "posAGP", "LHSGP"}) {
        StrategyConfig s;
        s.kind = kindname;
        s.error_kind = kind;
        s.work_exponent = q;
        s.geometric_alpha = alpha;
        c.strategies.push_back(s);
      }
  return c;
}

void apply_desk_preset(ExperimentConfig& cfg) {
  cfg.iterations = 6;
  cfg.measurements = 2;
  cfg.repetitions = 2;
  // Chains grow to 4000 fresh draws in the final entry; discards stay below
  // the accumulated length so the sliding window never empties.
  cfg.sampling = SamplingSchedule{6, 600, 3400, 200, 1800, 1};
  cfg.reference_samples = 8000;
  cfg.importance_draws = 8000;
  cfg.strategies.clear();
  for (ErrorModelKind kind : {ErrorModelKind::KL, ErrorModelKind::L2})
    for (const char* kindname : {"AGP-const", "posAGP", "LHSGP"}) {
      StrategyConfig s;
      s.kind = kindname;
      s.error_kind = kind;
      s.work_exponent = 1.0;
      s.geometric_alpha = 1.0;
      cfg.strategies.push_back(s);
    }
}

std::pair<Design, TrainingData> initial_design(const ForwardModel& fm, int size,
                                               double tau_default,
                                               SimulatedEvaluator& evaluator,
                                               RandomStream& rng) {
  if (size < 1) throw std::invalid_argument("initial_design: size must be >= 1");
  const MatrixXd pts = latin_hypercube(fm.domain, size, rng);
  Design d;
  TrainingData data;
  for (int i = 0; i < size; ++i) {
    const ParamPoint p = pts.row(i).transpose();
    d.add(p, tau_default);
    data.values.push_back(evaluator.eval_with_tolerance(p, tau_default));
  }
  data.design = d;
  return {d, data};
}

namespace {

Kernel initial_kernel(const ForwardModel& fm, const TrainingData& data) {
  Kernel k;
  k.lengthscales.resize(fm.dim_param);
  for (int a = 0; a < fm.dim_param; ++a) k.lengthscales[a] = 0.2 * fm.domain.width(a);
  k.component_variances.resize(fm.dim_out);
  for (int j = 0; j < fm.dim_out; ++j) {
    const VectorXd y = data.component(j);
    const double mean = y.mean();
    const double var = (y.array() - mean).square().sum() / std::max<int>(1, y.size() - 1);
    k.component_variances[j] = std::max(var, 1e-8);
  }
  return k;
}

Kernel retune(const TrainingData& data, const Kernel& current) {
  return tune_hyperparameters(data, current).kernel;
}

struct Audit {
  bool ok = true;
  std::string message;

  void fail(const std::string& msg) {
    ok = false;
    if (!message.empty()) message += "; ";
    message += msg;
  }
};

// Fill posAGP candidate shortfall with distinct chain samples so the strategy
// performs exactly (candidates_per_iteration) evaluations per iteration.
void fill_candidates_from_chain(CandidateSet& cands, int target, const SampleChain& chain,
                                const Design& design, const BoxDomain& box,
                                RandomStream& rng) {
  const int d = box.dim();
  auto distinct = [&](const ParamPoint& p) {
    for (int i = 0; i < cands.size(); ++i) {
      bool close = true;
      for (int a = 0; a < d; ++a)
        if (std::abs(cands.points(i, a) - p[a]) / box.scale(a) > kCandidateDedupScaled)
          close = false;
      if (close) return false;
    }
    for (const auto& e : design.entries) {
      bool close = true;
      for (int a = 0; a < d; ++a)
        if (std::abs(e.point[a] - p[a]) / box.scale(a) > kCandidateDedupScaled) close = false;
      if (close) return false;
    }
    return true;
  };
  int guard = 0;
  while (cands.size() < target && guard < 20 * target + 200) {
    ++guard;
    ParamPoint p;
    if (!chain.samples.empty() && guard <= 10 * target + 100) {
      p = chain.samples[rng.uniform_index(chain.samples.size())].point;
    } else {
      p.resize(d);
      for (int a = 0; a < d; ++a) p[a] = rng.uniform(box.lo[a], box.hi[a]);
    }
    if (!distinct(p)) continue;
    MatrixXd pts(cands.size() + 1, d);
    if (cands.size() > 0) pts.topRows(cands.size()) = cands.points;
    pts.row(cands.size()) = p.transpose();
    cands.points = std::move(pts);
    VectorXd vals(cands.size());
    vals.head(cands.size() - 1) = cands.acquisition_values;
    vals[cands.size() - 1] = 0.0;
    cands.acquisition_values = std::move(vals);
  }
}

void write_chain_csv(const SampleChain& chain, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  if (chain.samples.empty()) {
    f << "iteration\n";
    return;
  }
  const int d = static_cast<int>(chain.samples[0].point.size());
  f << "iteration";
  for (int a = 0; a < d; ++a) f << ",p" << a;
  f << "\n";
  for (const auto& s : chain.samples) {
    f << s.iteration;
    for (int a = 0; a < d; ++a) f << ',' << format_g(s.point[a]);
    f << "\n";
  }
}

}  // namespace

RunRecord run_single(const ExperimentConfig& cfg, const StrategyConfig& strat,
                     int measurement_idx, int repetition, const Measurement& meas,
                     const TruthReference& ref, const std::string& out_dir) {
  const ForwardModel fm = make_forward_model(cfg.problem_id);
  const PriorBox prior{fm.domain};
  const WorkModel wm(strat.work_exponent);
  const ErrorModelKind kind = strat.error_kind;
  const std::string run_name = strat.label() + "_m" + std::to_string(measurement_idx) +
                               "_r" + std::to_string(repetition);

  RunRecord rec;
  rec.strategy = strat;
  rec.problem_id = cfg.problem_id;
  rec.measurement = measurement_idx;
  rec.repetition = repetition;

  RandomStream master(cfg.master_seed);
  RandomStream run_rng = master.child("run-" + run_name);
  rec.seed = run_rng.seed();

  // The initial design is shared across strategies of a (measurement,
  // repetition) pair for paired comparison.
  const std::string pair_tag =
      "m" + std::to_string(measurement_idx) + "-r" + std::to_string(repetition);
  RandomStream init_rng = master.child("init-design-" + pair_tag);
  SimulatedEvaluator init_eval(fm, master.child("init-eval-" + pair_tag).seed());
  auto [design0, data] = initial_design(fm, cfg.initial_design_size, cfg.tau_default,
                                        init_eval, init_rng);

  SimulatedEvaluator evaluator(fm, run_rng.child("evaluator").seed());
  Kernel kernel = retune(data, initial_kernel(fm, data));
  SurrogateModel model = SurrogateModel::fit(kernel, data);

  // Budget schedule.
  BudgetSchedule sched;
  sched.iterations = cfg.iterations;
  const double w_def = work_of_tol(wm, cfg.tau_default);
  if (strat.kind == "AGP-geom") {
    sched.kind = ScheduleKind::Geometric;
    sched.per_iteration_base = w_def;
    sched.alpha = strat.geometric_alpha;
  } else {
    sched.kind = ScheduleKind::Constant;
    sched.per_iteration_base = cfg.candidates_per_iteration * w_def;
  }
  const std::vector<double> increments = schedule_increments(sched);
  double total_budget = 0.0;
  for (double w : increments) total_budget += w;
  rec.total_budget = total_budget;

  Audit audit;
  const double initial_work = design_work(wm, data.design);
  SampleChain chain;
  std::optional<Ensemble> ensemble;
  double carryover = 0.0;
  long expected_chain = 0;

  rec.designs.push_back({data.design.points_matrix(), data.design.tolerances()});

  auto sample_step = [&](int j) {
    const auto [n, h] = sample_schedule(cfg.sampling, j);
    if (n <= 0) return;
    LogDensity logpdf = [&](const ParamPoint& p) {
      return log_posterior_unnorm(meas, prior, model, p);
    };
    int warmup = 50;
    if (!ensemble) {
      ensemble = make_ensemble(fm.domain, default_walker_count(fm.dim_param), logpdf,
                               run_rng.child("ensemble"));
      warmup = 200;
    } else {
      // Cached walker densities are stale after a refit.
      for (int i = 0; i < ensemble->count(); ++i)
        ensemble->log_density[i] = logpdf(ensemble->walkers.row(i).transpose());
    }
    auto [fresh, e2] = draw_from_logpdf(logpdf, std::move(*ensemble), n, warmup);
    ensemble = std::move(e2);
    const int h_actual = std::min<int>(h, chain.size());
    bool clamped = false;
    chain = update_chain(std::move(chain), fresh, h, j, &clamped);
    expected_chain += n - h_actual;
    if (chain.size() != expected_chain) audit.fail("chain bookkeeping mismatch");
    for (const auto& s : chain.samples)
      if (!fm.domain.contains(s.point)) {
        audit.fail("sample outside domain");
        break;
      }
  };

  auto record_row = [&](int j, int evals, double wall) {
    IterationRow row;
    row.iteration = j;
    row.cumulative_work = design_work(wm, data.design) - initial_work;
    row.design_size = data.design.size();
    row.error_model =
        chain.size() > 0
            ? error_model_estimate(kind, meas, model, chain.points())
            : 0.0;
    const KlEstimate kl = metric_kl(ref, model, meas, prior);
    row.metric_kl = kl.value;
    row.metric_kl_reliable = kl.reliable;
    row.metric_l2 = metric_l2(ref, model);
    row.chain_size = chain.size();
    row.evaluations = evals;
    row.wall_seconds = wall;
    if (row.cumulative_work > total_budget + 1e-9) audit.fail("budget exceeded");
    rec.rows.push_back(row);
  };

  for (int j = 1; j <= cfg.iterations; ++j) {
    const auto t0 = std::chrono::steady_clock::now();
    sample_step(j);
    int evals = 0;

    const Design design_before = data.design;
    if (strat.kind == "LHSGP") {
      RandomStream lhs_rng = run_rng.child("lhs-iter-" + std::to_string(j));
      const MatrixXd pts =
          latin_hypercube(fm.domain, cfg.candidates_per_iteration, lhs_rng);
      for (int i = 0; i < pts.rows(); ++i) {
        const ParamPoint p = pts.row(i).transpose();
        const int idx = data.design.add(p, cfg.tau_default);
        const VectorXd v = evaluator.eval_with_tolerance(p, cfg.tau_default);
        if (idx == data.design.size() - 1 &&
            static_cast<int>(data.values.size()) < data.design.size())
          data.values.push_back(v);
        else
          data.values[idx] = v;
        ++evals;
      }
      kernel = retune(data, kernel);
      model = SurrogateModel::fit(kernel, data);
    } else if (strat.kind == "posAGP") {
      CandidateSet cands =
          select_candidates(model, meas, kind, chain.points(), wm,
                            cfg.candidates_per_iteration, fm.domain);
      RandomStream fill_rng = run_rng.child("fill-iter-" + std::to_string(j));
      fill_candidates_from_chain(cands, cfg.candidates_per_iteration, chain, data.design,
                                 fm.domain, fill_rng);
      for (int i = 0; i < cands.size(); ++i) {
        const ParamPoint p = cands.points.row(i).transpose();
        const int idx = data.design.add(p, cfg.tau_default);
        const VectorXd v = evaluator.eval_with_tolerance(p, cfg.tau_default);
        if (idx == data.design.size() - 1 &&
            static_cast<int>(data.values.size()) < data.design.size())
          data.values.push_back(v);
        else
          data.values[idx] = v;
        ++evals;
      }
      kernel = retune(data, kernel);
      model = SurrogateModel::fit(kernel, data);
    } else {
      // AGP-const / AGP-geom: the full interleaved method.
      const double avail = increments[j - 1] + carryover;
      CandidateSet cands =
          select_candidates(model, meas, kind, chain.points(), wm,
                            cfg.candidates_per_iteration, fm.domain);
      if (cands.empty()) {
        carryover = avail;  // no-op iteration, budget carries forward
      } else {
        const ToleranceVector T =
            optimize_tolerances(data.design, cands, avail, model, meas, kind,
                                chain.points(), wm, cfg.tau_default);
        const double before = design_work(wm, data.design);
        ApplyResult res = apply_design_update(data, cands, T, evaluator);
        double spent = 0.0;
        try {
          spent = refinement_cost(wm, res.data.design, data.design);
        } catch (const std::exception& ex) {
          audit.fail(std::string("refinement violated: ") + ex.what());
          spent = design_work(wm, res.data.design) - before;
        }
        if (spent > avail + 1e-9) audit.fail("iteration budget exceeded");
        carryover = avail - spent;
        data = std::move(res.data);
        evals = res.evaluations;
        if (evals > 0) {
          kernel = retune(data, kernel);
          model = SurrogateModel::fit(kernel, data);
        }
      }
    }

    // Designs only ever refine.
    try {
      refinement_cost(wm, data.design, design_before);
    } catch (const std::exception& ex) {
      audit.fail(std::string("design monotonicity violated at iteration ") +
                 std::to_string(j) + ": " + ex.what());
    }

    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    record_row(j, evals, wall);
    rec.designs.push_back({data.design.points_matrix(), data.design.tolerances()});

    if (cfg.dump_chains) {
      fs::create_directories(fs::path(out_dir) / "chains");
      write_chain_csv(chain, (fs::path(out_dir) / "chains" /
                              (run_name + "_iter" + std::to_string(j) + ".csv"))
                                 .string());
    }
  }

  // Final sampling step (schedule entry J+1) from the last surrogate.
  sample_step(cfg.iterations + 1);
  {
    const auto t0 = std::chrono::steady_clock::now();
    record_row(cfg.iterations + 1, 0,
               std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }

  fs::create_directories(fs::path(out_dir) / "chains");
  rec.chain_csv = "chains/" + run_name + ".csv";
  write_chain_csv(chain, (fs::path(out_dir) / rec.chain_csv).string());

  rec.audits_ok = audit.ok;
  rec.audit_message = audit.message;
  return rec;
}

std::vector<RunRecord> run_experiment(const ExperimentConfig& cfg,
                                      const std::string& out_dir) {
  cfg.validate();
  const ForwardModel fm = make_forward_model(cfg.problem_id);
  fs::create_directories(fs::path(out_dir) / "runs");
  fs::create_directories(fs::path(out_dir) / "cache");

  RandomStream master(cfg.master_seed);

  // Simulated measurements: truth parameters by LHS, exact evaluation plus
  // measurement noise. Shared across strategies and repetitions.
  RandomStream truth_rng = master.child("truth-params");
  const MatrixXd truths = latin_hypercube(fm.domain, cfg.measurements, truth_rng);
  std::vector<Measurement> measurements(cfg.measurements);
  for (int i = 0; i < cfg.measurements; ++i) {
    RandomStream noise = master.child("meas-noise-" + std::to_string(i));
    Measurement meas;
    meas.noise_std = cfg.noise_sigma;
    meas.y = fm.eval_exact(truths.row(i).transpose());
    for (int j = 0; j < meas.y.size(); ++j) meas.y[j] += cfg.noise_sigma * noise.normal();
    measurements[i] = std::move(meas);
  }

  // Truth references, cached under content-addressed filenames.
  std::vector<TruthReference> refs(cfg.measurements);
  for (int i = 0; i < cfg.measurements; ++i) {
    const std::uint64_t ref_seed = master.child("reference-" + std::to_string(i)).seed();
    const int scale = fm.dim_param <= 2 ? cfg.metric_grid_resolution : cfg.reference_samples;
    const std::string key =
        reference_cache_key(cfg.problem_id, measurements[i], scale, ref_seed);
    const fs::path cache_path = fs::path(out_dir) / "cache" / (key + ".json");
    if (fs::exists(cache_path)) {
      refs[i] = reference_from_json(load_json(cache_path.string()));
    } else {
      refs[i] = fm.dim_param <= 2
                    ? build_reference_grid(fm, measurements[i], cfg.metric_grid_resolution)
                    : build_reference_sampled(fm, measurements[i], cfg.reference_samples,
                                              cfg.importance_draws, ref_seed);
      save_json(to_json(refs[i]), cache_path.string());
    }
  }

  struct Task {
    const StrategyConfig* strat;
    int measurement;
    int repetition;
  };
  std::vector<Task> tasks;
  for (const auto& s : cfg.strategies)
    for (int mi = 0; mi < cfg.measurements; ++mi)
      for (int r = 0; r < cfg.repetitions; ++r) tasks.push_back({&s, mi, r});

  std::vector<RunRecord> records(tasks.size());
  std::atomic<size_t> next{0};
  std::mutex io_mutex;
  const unsigned workers =
      std::max(1u, std::min<unsigned>(std::thread::hardware_concurrency(),
                                      static_cast<unsigned>(tasks.size())));

  auto worker = [&]() {
    for (;;) {
      const size_t t = next.fetch_add(1);
      if (t >= tasks.size()) return;
      const Task& task = tasks[t];
      const std::string name = task.strat->label() + "_m" + std::to_string(task.measurement) +
                               "_r" + std::to_string(task.repetition);
      const fs::path rec_path = fs::path(out_dir) / "runs" / (name + ".json");
      try {
        if (fs::exists(rec_path)) {
          std::lock_guard<std::mutex> lock(io_mutex);
          records[t] = run_record_from_json(load_json(rec_path.string()));
          continue;
        }
        RunRecord rec;
        try {
          rec = run_single(cfg, *task.strat, task.measurement, task.repetition,
                           measurements[task.measurement], refs[task.measurement], out_dir);
        } catch (const std::exception& ex) {
          rec.strategy = *task.strat;
          rec.problem_id = cfg.problem_id;
          rec.measurement = task.measurement;
          rec.repetition = task.repetition;
          rec.audits_ok = false;
          rec.audit_message = std::string("run failed: ") + ex.what();
        }
        std::lock_guard<std::mutex> lock(io_mutex);
        save_json(to_json(rec), rec_path.string());
        records[t] = std::move(rec);
      } catch (const std::exception& ex) {
        // I/O failure: keep already-written results intact, mark this slot.
        std::lock_guard<std::mutex> lock(io_mutex);
        records[t].strategy = *task.strat;
        records[t].measurement = task.measurement;
        records[t].repetition = task.repetition;
        records[t].audits_ok = false;
        records[t].audit_message = std::string("record I/O failed: ") + ex.what();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  return records;
}

namespace {

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

struct Key {
  std::string strategy;
  std::string error_kind;
  double q;
  bool operator<(const Key& o) const {
    if (strategy != o.strategy) return strategy < o.strategy;
    if (error_kind != o.error_kind) return error_kind < o.error_kind;
    return q < o.q;
  }
};

}  // namespace

void write_reports(const std::string& runs_dir, const std::string& report_dir) {
  std::vector<std::string> files;
  for (const auto& entry : fs::directory_iterator(runs_dir))
    if (entry.path().extension() == ".json") files.push_back(entry.path().string());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw std::runtime_error("write_reports: no run records in " + runs_dir);

  std::vector<RunRecord> records;
  for (const auto& f : files) records.push_back(run_record_from_json(load_json(f)));

  fs::create_directories(report_dir);

  {
    std::ofstream f(fs::path(report_dir) / "convergence.csv");
    f << "strategy,error_kind,work_exponent,measurement,repetition,iteration,"
         "cumulative_work,error_model,metric_kl,metric_l2,design_size\n";
    for (const auto& r : records)
      for (const auto& row : r.rows)
        f << r.strategy.kind << ',' << to_string(r.strategy.error_kind) << ','
          << format_g(r.strategy.work_exponent) << ',' << r.measurement << ','
          << r.repetition << ',' << row.iteration << ',' << format_g(row.cumulative_work)
          << ',' << format_g(row.error_model) << ',' << format_g(row.metric_kl) << ','
          << format_g(row.metric_l2) << ',' << row.design_size << "\n";
  }

  {
    std::ofstream f(fs::path(report_dir) / "tolerances.csv");
    f << "strategy,error_kind,work_exponent,measurement,repetition,point_index,"
         "tolerance,work\n";
    for (const auto& r : records) {
      if (r.designs.empty()) continue;
      const DesignDump& fin = r.designs.back();
      const WorkModel wm(r.strategy.work_exponent);
      for (int i = 0; i < fin.tolerances.size(); ++i)
        f << r.strategy.kind << ',' << to_string(r.strategy.error_kind) << ','
          << format_g(r.strategy.work_exponent) << ',' << r.measurement << ','
          << r.repetition << ',' << i << ',' << format_g(fin.tolerances[i]) << ','
          << format_g(work_of_tol(wm, fin.tolerances[i])) << "\n";
    }
  }

  // Averaged convergence curves: per-measurement mean over repetitions and the
  // overall mean over all runs, per strategy instance and iteration.
  {
    std::ofstream f(fs::path(report_dir) / "averaged.csv");
    f << "strategy,error_kind,work_exponent,level,measurement,iteration,"
         "cumulative_work,error_model,metric_kl,metric_l2,design_size\n";
    std::map<Key, std::vector<const RunRecord*>> groups;
    for (const auto& r : records)
      groups[{r.strategy.kind, to_string(r.strategy.error_kind), r.strategy.work_exponent}]
          .push_back(&r);
    for (const auto& [key, runs] : groups) {
      std::map<int, std::vector<const RunRecord*>> by_meas;
      for (const auto* r : runs) by_meas[r->measurement].push_back(r);

      auto emit = [&](const std::string& level, int meas_id,
                      const std::vector<const RunRecord*>& rs) {
        if (rs.empty()) return;
        const size_t nrows = rs.front()->rows.size();
        for (size_t i = 0; i < nrows; ++i) {
          double cw = 0, em = 0, mk = 0, ml = 0, ds = 0;
          int count = 0;
          for (const auto* r : rs) {
            if (i >= r->rows.size()) continue;
            cw += r->rows[i].cumulative_work;
            em += r->rows[i].error_model;
            mk += r->rows[i].metric_kl;
            ml += r->rows[i].metric_l2;
            ds += r->rows[i].design_size;
            ++count;
          }
          if (count == 0) continue;
          f << key.strategy << ',' << key.error_kind << ',' << format_g(key.q) << ','
            << level << ',' << meas_id << ',' << rs.front()->rows[i].iteration << ','
            << format_g(cw / count) << ',' << format_g(em / count) << ','
            << format_g(mk / count) << ',' << format_g(ml / count) << ','
            << format_g(ds / count) << "\n";
        }
      };
      for (const auto& [meas_id, rs] : by_meas) emit("measurement", meas_id, rs);
      emit("overall", -1, runs);
    }
  }

  // Table-style summary: average final design size and median final metrics.
  {
    std::ofstream f(fs::path(report_dir) / "summary.csv");
    f << "strategy,error_kind,work_exponent,runs,mean_final_design_size,"
         "median_final_metric_kl,median_final_metric_l2,mean_spent_work\n";
    std::map<Key, std::vector<const RunRecord*>> groups;
    for (const auto& r : records)
      groups[{r.strategy.kind, to_string(r.strategy.error_kind), r.strategy.work_exponent}]
          .push_back(&r);
    for (const auto& [key, runs] : groups) {
      double size_acc = 0, work_acc = 0;
      std::vector<double> kl, l2;
      int count = 0;
      for (const auto* r : runs) {
        if (r->rows.empty()) continue;
        const IterationRow& last = r->rows.back();
        size_acc += last.design_size;
        work_acc += last.cumulative_work;
        kl.push_back(last.metric_kl);
        l2.push_back(last.metric_l2);
        ++count;
      }
      if (count == 0) continue;
      f << key.strategy << ',' << key.error_kind << ',' << format_g(key.q) << ',' << count
        << ',' << format_g(size_acc / count) << ',' << format_g(median(kl)) << ','
        << format_g(median(l2)) << ',' << format_g(work_acc / count) << "\n";
    }
  }
}

}  // namespace agp
