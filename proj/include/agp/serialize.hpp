#pragma once

#include "agp/gp.hpp"
#include "agp/harness.hpp"
#include "agp/metrics.hpp"

#include <json.hpp>

#include <string>

namespace agp {

using nlohmann::json;

json to_json(const VectorXd& v);
json to_json(const MatrixXd& m);
VectorXd vector_from_json(const json& j);
MatrixXd matrix_from_json(const json& j);

json to_json(const Kernel& k);
Kernel kernel_from_json(const json& j);
json to_json(const Design& d);
Design design_from_json(const json& j);
json to_json(const TrainingData& t);
TrainingData training_data_from_json(const json& j);

json to_json(const StrategyConfig& s);
StrategyConfig strategy_from_json(const json& j);
json to_json(const ExperimentConfig& c);
ExperimentConfig config_from_json(const json& j);

json to_json(const RunRecord& r);
RunRecord run_record_from_json(const json& j);

json to_json(const TruthReference& ref);
TruthReference reference_from_json(const json& j);

ExperimentConfig load_config(const std::string& path);
void save_json(const json& j, const std::string& path);
json load_json(const std::string& path);

}  // namespace agp
