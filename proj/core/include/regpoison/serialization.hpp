#pragma once

#include "regpoison/dataset.hpp"
#include "regpoison/defenses.hpp"
#include "regpoison/grid_search.hpp"
#include "regpoison/metrics.hpp"
#include "regpoison/regressor.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>

namespace regpoison {

using json = nlohmann::json;

json vector_to_json(const Eigen::VectorXd& v);
Eigen::VectorXd vector_from_json(const json& j);
json matrix_to_json(const Eigen::MatrixXd& m);
Eigen::MatrixXd matrix_from_json(const json& j);

void to_json(json& j, const ScalingParams& p);
void from_json(const json& j, ScalingParams& p);

void to_json(json& j, const RegressorSpec& spec);
void from_json(const json& j, RegressorSpec& spec);

void to_json(json& j, const HyperGrid& grid);
void from_json(const json& j, HyperGrid& grid);

/// Weights as arrays. Meant for audit and for the CLI's train/evaluate
/// round trip, not as a stable interchange format.
void to_json(json& j, const FittedModel& model);
void from_json(const json& j, FittedModel& model);

void to_json(json& j, const MetricsReport& r);

/// Retained indices, loss trace, estimated epsilon and flags.
void to_json(json& j, const DefenseResult& r);

/// Sidecar recording how a prepared dataset was produced.
json splits_sidecar(const ScalingParams& scaling, const DataSplits& splits);

json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const json& j);

}  // namespace regpoison
