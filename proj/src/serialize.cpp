#include "agp/serialize.hpp"

#include <fstream>

namespace agp {

json to_json(const VectorXd& v) {
  json a = json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

json to_json(const MatrixXd& m) {
  json rows = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

VectorXd vector_from_json(const json& j) {
  VectorXd v(j.size());
  for (size_t i = 0; i < j.size(); ++i) v[static_cast<int>(i)] = j[i].get<double>();
  return v;
}

MatrixXd matrix_from_json(const json& j) {
  if (j.empty()) return MatrixXd(0, 0);
  MatrixXd m(j.size(), j[0].size());
  for (size_t i = 0; i < j.size(); ++i)
    for (size_t k = 0; k < j[i].size(); ++k)
      m(static_cast<int>(i), static_cast<int>(k)) = j[i][k].get<double>();
  return m;
}

json to_json(const Kernel& k) {
  return json{{"lengthscales", to_json(k.lengthscales)},
              {"component_variances", to_json(k.component_variances)}};
}

Kernel kernel_from_json(const json& j) {
  Kernel k;
  k.lengthscales = vector_from_json(j.at("lengthscales"));
  k.component_variances = vector_from_json(j.at("component_variances"));
  return k;
}

json to_json(const Design& d) {
  json entries = json::array();
  for (const auto& e : d.entries)
    entries.push_back(json{{"point", to_json(e.point)}, {"tolerance", e.tolerance}});
  return json{{"entries", std::move(entries)}};
}

Design design_from_json(const json& j) {
  Design d;
  for (const auto& e : j.at("entries"))
    d.entries.push_back({vector_from_json(e.at("point")), e.at("tolerance").get<double>()});
  return d;
}

json to_json(const TrainingData& t) {
  json values = json::array();
  for (const auto& v : t.values) values.push_back(to_json(v));
  return json{{"design", to_json(t.design)}, {"values", std::move(values)}};
}

TrainingData training_data_from_json(const json& j) {
  TrainingData t;
  t.design = design_from_json(j.at("design"));
  for (const auto& v : j.at("values")) t.values.push_back(vector_from_json(v));
  return t;
}

json to_json(const StrategyConfig& s) {
  return json{{"kind", s.kind},
              {"error_kind", to_string(s.error_kind)},
              {"work_exponent", s.work_exponent},
              {"geometric_alpha", s.geometric_alpha}};
}

StrategyConfig strategy_from_json(const json& j) {
  StrategyConfig s;
  s.kind = j.at("kind").get<std::string>();
  s.error_kind = error_kind_from_string(j.at("error_kind").get<std::string>());
  s.work_exponent = j.value("work_exponent", 1.0);
  s.geometric_alpha = j.value("geometric_alpha", 1.0);
  return s;
}

json to_json(const ExperimentConfig& c) {
  json strategies = json::array();
  for (const auto& s : c.strategies) strategies.push_back(to_json(s));
  return json{{"problem", c.problem_id},
              {"measurements", c.measurements},
              {"repetitions", c.repetitions},
              {"master_seed", c.master_seed},
              {"initial_design_size", c.initial_design_size},
              {"tau_default", c.tau_default},
              {"noise_sigma", c.noise_sigma},
              {"iterations", c.iterations},
              {"candidates_per_iteration", c.candidates_per_iteration},
              {"sampling",
               {{"draw_base", c.sampling.draw_base},
                {"draw_growth", c.sampling.draw_growth},
                {"discard_base", c.sampling.discard_base},
                {"discard_growth", c.sampling.discard_growth},
                {"every", c.sampling.every}}},
              {"metric_grid_resolution", c.metric_grid_resolution},
              {"reference_samples", c.reference_samples},
              {"importance_draws", c.importance_draws},
              {"dump_chains", c.dump_chains},
              {"strategies", std::move(strategies)}};
}

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig c;
  c.problem_id = j.at("problem").get<std::string>();
  c.measurements = j.at("measurements").get<int>();
  c.repetitions = j.at("repetitions").get<int>();
  c.master_seed = j.at("master_seed").get<std::uint64_t>();
  c.initial_design_size = j.at("initial_design_size").get<int>();
  c.tau_default = j.at("tau_default").get<double>();
  c.noise_sigma = j.at("noise_sigma").get<double>();
  c.iterations = j.at("iterations").get<int>();
  c.candidates_per_iteration = j.at("candidates_per_iteration").get<int>();
  const auto& s = j.at("sampling");
  c.sampling.iterations = c.iterations;
  c.sampling.draw_base = s.at("draw_base").get<double>();
  c.sampling.draw_growth = s.at("draw_growth").get<double>();
  c.sampling.discard_base = s.at("discard_base").get<double>();
  c.sampling.discard_growth = s.at("discard_growth").get<double>();
  c.sampling.every = s.value("every", 1);
  c.metric_grid_resolution = j.value("metric_grid_resolution", 201);
  c.reference_samples = j.value("reference_samples", 10000);
  c.importance_draws = j.value("importance_draws", 20000);
  c.dump_chains = j.value("dump_chains", false);
  for (const auto& sj : j.at("strategies")) c.strategies.push_back(strategy_from_json(sj));
  return c;
}

json to_json(const RunRecord& r) {
  json rows = json::array();
  for (const auto& row : r.rows) {
    rows.push_back(json{{"iteration", row.iteration},
                        {"cumulative_work", row.cumulative_work},
                        {"design_size", row.design_size},
                        {"error_model", row.error_model},
                        {"metric_kl", row.metric_kl},
                        {"metric_l2", row.metric_l2},
                        {"metric_kl_reliable", row.metric_kl_reliable},
                        {"chain_size", row.chain_size},
                        {"evaluations", row.evaluations},
                        {"wall_seconds", row.wall_seconds}});
  }
  json designs = json::array();
  for (const auto& d : r.designs)
    designs.push_back(
        json{{"points", to_json(d.points)}, {"tolerances", to_json(d.tolerances)}});
  return json{{"strategy", to_json(r.strategy)},
              {"problem", r.problem_id},
              {"measurement", r.measurement},
              {"repetition", r.repetition},
              {"seed", r.seed},
              {"rows", std::move(rows)},
              {"designs", std::move(designs)},
              {"total_budget", r.total_budget},
              {"audits_ok", r.audits_ok},
              {"audit_message", r.audit_message},
              {"chain_csv", r.chain_csv}};
}

RunRecord run_record_from_json(const json& j) {
  RunRecord r;
  r.strategy = strategy_from_json(j.at("strategy"));
  r.problem_id = j.at("problem").get<std::string>();
  r.measurement = j.at("measurement").get<int>();
  r.repetition = j.at("repetition").get<int>();
  r.seed = j.at("seed").get<std::uint64_t>();
  for (const auto& rj : j.at("rows")) {
    IterationRow row;
    row.iteration = rj.at("iteration").get<int>();
    row.cumulative_work = rj.at("cumulative_work").get<double>();
    row.design_size = rj.at("design_size").get<int>();
    row.error_model = rj.at("error_model").get<double>();
    row.metric_kl = rj.at("metric_kl").get<double>();
    row.metric_l2 = rj.at("metric_l2").get<double>();
    row.metric_kl_reliable = rj.at("metric_kl_reliable").get<bool>();
    row.chain_size = rj.at("chain_size").get<int>();
    row.evaluations = rj.at("evaluations").get<int>();
    row.wall_seconds = rj.at("wall_seconds").get<double>();
    r.rows.push_back(row);
  }
  for (const auto& dj : j.at("designs"))
    r.designs.push_back(
        {matrix_from_json(dj.at("points")), vector_from_json(dj.at("tolerances"))});
  r.total_budget = j.at("total_budget").get<double>();
  r.audits_ok = j.at("audits_ok").get<bool>();
  r.audit_message = j.at("audit_message").get<std::string>();
  r.chain_csv = j.at("chain_csv").get<std::string>();
  return r;
}

json to_json(const TruthReference& ref) {
  return json{{"problem", ref.problem_id},
              {"is_grid", ref.is_grid},
              {"grid_points", to_json(ref.grid_points)},
              {"cell_weight", ref.cell_weight},
              {"grid_y", to_json(ref.grid_y)},
              {"grid_log_like", to_json(ref.grid_log_like)},
              {"ref_points", to_json(ref.ref_points)},
              {"ref_y", to_json(ref.ref_y)},
              {"ref_log_like", to_json(ref.ref_log_like)},
              {"is_points", to_json(ref.is_points)},
              {"is_log_g", to_json(ref.is_log_g)},
              {"is_log_like", to_json(ref.is_log_like)},
              {"log_evidence", ref.log_evidence},
              {"evidence_rel_err", ref.evidence_rel_err}};
}

TruthReference reference_from_json(const json& j) {
  TruthReference ref;
  ref.problem_id = j.at("problem").get<std::string>();
  ref.is_grid = j.at("is_grid").get<bool>();
  ref.grid_points = matrix_from_json(j.at("grid_points"));
  ref.cell_weight = j.at("cell_weight").get<double>();
  ref.grid_y = matrix_from_json(j.at("grid_y"));
  ref.grid_log_like = vector_from_json(j.at("grid_log_like"));
  ref.ref_points = matrix_from_json(j.at("ref_points"));
  ref.ref_y = matrix_from_json(j.at("ref_y"));
  ref.ref_log_like = vector_from_json(j.at("ref_log_like"));
  ref.is_points = matrix_from_json(j.at("is_points"));
  ref.is_log_g = vector_from_json(j.at("is_log_g"));
  ref.is_log_like = vector_from_json(j.at("is_log_like"));
  ref.log_evidence = j.at("log_evidence").get<double>();
  ref.evidence_rel_err = j.at("evidence_rel_err").get<double>();
  return ref;
}

ExperimentConfig load_config(const std::string& path) {
  return config_from_json(load_json(path));
}

void save_json(const json& j, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << j.dump(1) << '\n';
}

json load_json(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read " + path);
  json j;
  f >> j;
  return j;
}

}  // namespace agp
