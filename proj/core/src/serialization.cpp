#include "regpoison/serialization.hpp"

#include "regpoison/error.hpp"

#include <fstream>

namespace regpoison {

json vector_to_json(const Eigen::VectorXd& v) {
  return json(std::vector<double>(v.data(), v.data() + v.size()));
}

Eigen::VectorXd vector_from_json(const json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(vector_to_json(m.row(i).transpose()));
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j) {
  if (j.empty()) return Eigen::MatrixXd(0, 0);
  const auto cols = static_cast<Eigen::Index>(j.at(0).size());
  Eigen::MatrixXd m(static_cast<Eigen::Index>(j.size()), cols);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const auto row = vector_from_json(j.at(static_cast<std::size_t>(i)));
    if (row.size() != cols) fail(ErrorCode::DimensionMismatch, "ragged matrix in JSON");
    m.row(i) = row.transpose();
  }
  return m;
}

void to_json(json& j, const ScalingParams& p) { j = json{{"min", vector_to_json(p.min)}, {"max", vector_to_json(p.max)}}; }

void from_json(const json& j, ScalingParams& p) {
  p.min = vector_from_json(j.at("min"));
  p.max = vector_from_json(j.at("max"));
  if (p.min.size() != p.max.size()) fail(ErrorCode::DimensionMismatch, "scaling min/max lengths differ");
}

void to_json(json& j, const RegressorSpec& spec) {
  j = json{{"kind", std::string(to_string(spec.kind))}, {"hyperparams", spec.hyperparams}, {"seed", spec.seed}};
}

void from_json(const json& j, RegressorSpec& spec) {
  spec.kind = regressor_kind_from_string(j.at("kind").get<std::string>());
  spec.hyperparams = j.value("hyperparams", std::map<std::string, double>{});
  spec.seed = j.value("seed", std::uint64_t{0});
}

void to_json(json& j, const HyperGrid& grid) { j = json{{"candidates", grid.candidates}, {"folds", grid.folds}}; }

void from_json(const json& j, HyperGrid& grid) {
  if (j.contains("candidates")) {
    grid.candidates = j.at("candidates").get<std::map<std::string, std::vector<double>>>();
    grid.folds = j.value("folds", std::size_t{3});
  } else {
    grid.candidates = j.get<std::map<std::string, std::vector<double>>>();
  }
}

void to_json(json& j, const FittedModel& model) {
  j = json{{"spec", model.spec},
           {"training_loss", model.training_loss},
           {"converged", model.converged},
           {"iterations", model.iterations}};
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, LinearParams>) {
          j["params"] = {{"type", "linear"}, {"weights", vector_to_json(p.weights)}, {"intercept", p.intercept}};
        } else if constexpr (std::is_same_v<T, KernelParams>) {
          j["params"] = {{"type", "kernel"},
                         {"gamma", p.gamma},
                         {"offset", p.offset},
                         {"dual", vector_to_json(p.dual)},
                         {"support", matrix_to_json(p.support)}};
        } else {
          j["params"] = {{"type", "mlp"},
                         {"hidden_weights", matrix_to_json(p.hidden_weights)},
                         {"hidden_bias", vector_to_json(p.hidden_bias)},
                         {"output_weights", vector_to_json(p.output_weights)},
                         {"output_bias", p.output_bias}};
        }
      },
      model.params);
}

void from_json(const json& j, FittedModel& model) {
  model.spec = j.at("spec").get<RegressorSpec>();
  model.training_loss = j.value("training_loss", 0.0);
  model.converged = j.value("converged", true);
  model.iterations = j.value("iterations", std::size_t{0});
  const auto& p = j.at("params");
  const auto type = p.at("type").get<std::string>();
  if (type == "linear") {
    model.params = LinearParams{vector_from_json(p.at("weights")), p.at("intercept").get<double>()};
  } else if (type == "kernel") {
    model.params = KernelParams{matrix_from_json(p.at("support")), vector_from_json(p.at("dual")),
                                p.at("offset").get<double>(), p.at("gamma").get<double>()};
  } else if (type == "mlp") {
    model.params = MlpParams{matrix_from_json(p.at("hidden_weights")), vector_from_json(p.at("hidden_bias")),
                             vector_from_json(p.at("output_weights")), p.at("output_bias").get<double>()};
  } else {
    fail(ErrorCode::InvalidArgument, "unknown model parameter type '" + type + "'");
  }
}

void to_json(json& j, const MetricsReport& r) {
  j = json{{"mse", r.mse},
           {"mae_original_units", r.mae_original_units},
           {"acceptable_rate_pct", r.acceptable_rate_pct},
           {"n_test", r.n_test}};
}

void to_json(json& j, const DefenseResult& r) {
  json trace = json::array();
  for (const auto& e : r.loss_trace) {
    trace.push_back({{"epsilon_hat", e.epsilon_hat}, {"train_loss", e.train_loss}, {"retained", e.retained}});
  }
  j = json{{"retained_indices", r.retained_indices},
           {"retained", r.retained_indices.size()},
           {"estimated_epsilon", r.estimated_epsilon},
           {"loss_trace", trace},
           {"no_kink_found", r.no_kink_found},
           {"iterations", r.iterations},
           {"stop_reason", std::string(to_string(r.stop_reason))},
           {"iteration_losses", r.iteration_losses},
           {"final_model_spec", r.final_model.spec},
           {"final_train_loss", r.final_model.training_loss}};
}

json splits_sidecar(const ScalingParams& scaling, const DataSplits& splits) {
  return json{{"scaling", scaling},
              {"seed", splits.seed},
              {"substitute_indices", splits.substitute_indices},
              {"train_indices", splits.train_indices},
              {"test_indices", splits.test_indices}};
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::MissingFile, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::ConfigInvalid, path.string() + ": " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::MissingFile, "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace regpoison
