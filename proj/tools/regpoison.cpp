// Command line front end: data preparation, single attacks and defenses,
// model training/evaluation, and full experiment grids.

#include "regpoison/attacks.hpp"
#include "regpoison/csv_io.hpp"
#include "regpoison/defenses.hpp"
#include "regpoison/error.hpp"
#include "regpoison/grid_search.hpp"
#include "regpoison/harness.hpp"
#include "regpoison/metrics.hpp"
#include "regpoison/random.hpp"
#include "regpoison/serialization.hpp"
#include "regpoison/synthetic.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>

namespace fs = std::filesystem;
using namespace regpoison;

namespace {

constexpr const char* kWorkersEnv = "REGPOISON_WORKERS";

/// A CSV written by this tool: scaled values, target in the last column,
/// optional sidecar carrying the scaling params.
Dataset load_scaled(const fs::path& path, json* sidecar = nullptr) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::MissingFile, "cannot open " + path.string());
  std::string header;
  std::getline(in, header);
  const auto columns = static_cast<std::size_t>(std::count(header.begin(), header.end(), ',')) + 1;
  if (columns < 2) fail(ErrorCode::DimensionMismatch, path.string() + " needs at least one feature and a target");
  const auto raw = load_csv(path, columns - 1);
  Dataset data = make_dataset(raw.features, raw.targets);
  data.column_names = raw.column_names;
  const auto meta = sidecar_path(path);
  if (fs::exists(meta)) {
    const auto j = read_json_file(meta);
    if (j.contains("scaling")) data.scaling = std::make_shared<const ScalingParams>(j.at("scaling").get<ScalingParams>());
    if (sidecar) *sidecar = j;
  }
  return data;
}

std::size_t resolve_workers(std::optional<std::size_t> flag, std::size_t configured) {
  if (flag) return *flag;
  if (const char* env = std::getenv(kWorkersEnv); env && *env) {
    try {
      return static_cast<std::size_t>(std::stoull(env));
    } catch (const std::exception&) {
      fail(ErrorCode::ConfigInvalid, std::string(kWorkersEnv) + " must be a non-negative integer");
    }
  }
  return configured;
}

RegressorSpec choose_spec(RegressorKind kind, const Dataset& data, std::uint64_t seed, const std::string& spec_file,
                          const std::string& grid_file) {
  if (!spec_file.empty()) {
    const auto j = read_json_file(spec_file);
    auto spec = j.contains("spec") ? j.at("spec").get<RegressorSpec>() : j.get<RegressorSpec>();
    if (spec.kind != kind) fail(ErrorCode::ConfigInvalid, "spec file is for a different regressor");
    return spec;
  }
  const HyperGrid grid = grid_file.empty() ? default_grid(kind) : read_json_file(grid_file).get<HyperGrid>();
  return grid_search(kind, grid, data, seed);
}

int run_synth(const SyntheticSpec& spec, const fs::path& out) {
  const auto raw = make_synthetic(spec);
  write_csv(out, raw.features, raw.targets, raw.column_names);
  std::cout << "wrote " << raw.rows() << " rows to " << out << '\n';
  return 0;
}

int run_prepare(const fs::path& input, const std::string& target, const fs::path& out_dir, std::size_t cap,
                std::uint64_t seed) {
  DatasetSource src;
  src.id = input.stem().string();
  src.path = input;
  src.target = parse_target_column(target);
  const auto data = prepare(src, cap, seed);
  fs::create_directories(out_dir);
  const auto sidecar = splits_sidecar(*data.scaling, data.splits);
  const std::pair<const char*, const Dataset*> parts[] = {
      {"substitute", &data.splits.substitute}, {"train", &data.splits.train}, {"test", &data.splits.test}};
  for (const auto& [role, ds] : parts) {
    const auto path = out_dir / (std::string(role) + ".csv");
    write_csv(path, *ds);
    auto meta = sidecar;
    meta["role"] = role;
    meta["source"] = input.string();
    meta["dropped_rows"] = data.dropped_rows;
    write_json_file(sidecar_path(path), meta);
  }
  std::cout << "substitute " << data.splits.substitute.rows() << ", train " << data.splits.train.rows() << ", test "
            << data.splits.test.rows() << " rows (" << data.dropped_rows << " dropped)\n";
  return 0;
}

struct PoisonArgs {
  std::string attack;
  double epsilon = 0.0;
  fs::path substitute;
  std::size_t train_size = 0;
  fs::path out;
  std::uint64_t seed = 0;
  std::string oracle;
  std::string append_to;
  double gamma_min = 0.0;
  double gamma_max = 1.0;
};

int run_poison(const PoisonArgs& a) {
  json substitute_meta;
  const Dataset substitute = load_scaled(a.substitute, &substitute_meta);
  AttackConfig config;
  config.epsilon = a.epsilon;
  config.target_n = a.train_size;
  config.domain = {a.gamma_min, a.gamma_max};
  config.seed = a.seed;

  PoisonSet poison;
  if (attack_kind_from_string(a.attack) == AttackKind::Flip) {
    poison = flip_attack(substitute, config);
  } else {
    const FittedModel oracle = a.oracle.empty() ? fit_surrogate(substitute, derive_seed(a.seed, {1}))
                                                : read_json_file(a.oracle).get<FittedModel>();
    poison = statp_attack(substitute, config, [&](const Eigen::MatrixXd& x) { return predict(oracle, x); });
  }

  json meta{{"attack", a.attack},
            {"epsilon", a.epsilon},
            {"seed", a.seed},
            {"train_size", a.train_size},
            {"poison_count", poison.size()},
            {"source_indices", poison.source_indices}};
  if (substitute_meta.contains("scaling")) meta["scaling"] = substitute_meta.at("scaling");

  if (a.append_to.empty()) {
    write_csv(a.out, poison.features, poison.targets, substitute.column_names);
  } else {
    const Dataset train = load_scaled(a.append_to);
    if (train.dims() != substitute.dims()) fail(ErrorCode::DimensionMismatch, "train and substitute widths differ");
    const auto poisoned = append_and_shuffle(train, poison, derive_seed(a.seed, {2}));
    write_csv(a.out, poisoned.data);
    meta["is_poison"] = poisoned.is_poison;
    meta["appended_to"] = a.append_to;
  }
  write_json_file(sidecar_path(a.out), meta);
  std::cout << "wrote " << poison.size() << " poison rows" << (a.append_to.empty() ? "" : " (appended)") << " to "
            << a.out << '\n';
  return 0;
}

struct DefendArgs {
  std::string defense;
  fs::path input;
  std::string regressor;
  double epsilon_hat = 0.14;
  double epsilon_max = 0.14;
  std::size_t runs = 6;
  double threshold = 1e-3;
  std::size_t max_iterations = 20;
  fs::path out;
  std::uint64_t seed = 0;
  std::string spec_file;
  std::string grid_file;
  bool full_trace = false;
};

int run_defend(const DefendArgs& a) {
  const Dataset data = load_scaled(a.input);
  const auto kind = regressor_kind_from_string(a.regressor);
  const auto spec = choose_spec(kind, data, a.seed, a.spec_file, a.grid_file);
  DefenseResult result;
  if (a.defense == "trim") {
    TrimConfig config;
    config.epsilon_hat = a.epsilon_hat;
    config.max_iterations = a.max_iterations;
    result = trim(data, spec, config, a.seed);
  } else if (a.defense == "itrim") {
    ITrimConfig config;
    config.epsilon_max = a.epsilon_max;
    config.runs = a.runs;
    config.threshold = a.threshold;
    config.trim.max_iterations = a.max_iterations;
    config.full_trace = a.full_trace;
    result = itrim(data, spec, config, a.seed);
  } else {
    fail(ErrorCode::ConfigInvalid, "unknown defense '" + a.defense + "'");
  }
  json j = result;
  j["defense"] = a.defense;
  j["seed"] = a.seed;
  j["spec"] = spec;
  write_json_file(a.out, j);
  std::cout << a.defense << ": kept " << result.retained_indices.size() << " of " << data.rows()
            << " rows, estimated epsilon " << result.estimated_epsilon
            << (result.no_kink_found ? " (no kink found)" : "") << '\n';
  return 0;
}

int run_train(const fs::path& input, const std::string& regressor, const fs::path& out, std::uint64_t seed,
              const std::string& spec_file, const std::string& grid_file) {
  const Dataset data = load_scaled(input);
  const auto spec = choose_spec(regressor_kind_from_string(regressor), data, seed, spec_file, grid_file);
  const auto model = fit(spec, data);
  write_json_file(out, json(model));
  std::cout << regressor << ": train MSE " << model.training_loss << (model.converged ? "" : " (not converged)")
            << '\n';
  return 0;
}

int run_evaluate(const fs::path& model_path, const fs::path& input, const std::string& out) {
  const auto model = read_json_file(model_path).get<FittedModel>();
  const Dataset data = load_scaled(input);
  const auto report = evaluate(data.targets, predict(model, data.features), data.scaling.get());
  const json j = report;
  if (out.empty()) {
    std::cout << j.dump(2) << '\n';
  } else {
    write_json_file(out, j);
  }
  return 0;
}

int run_experiment_cmd(const fs::path& config_path, const fs::path& out_dir, std::optional<std::size_t> workers,
                       bool quiet) {
  auto config = load_experiment_config(config_path);
  config.workers = resolve_workers(workers, config.workers);
  const auto rows = run_experiment(config, [quiet](std::size_t done, std::size_t total) {
    if (!quiet) std::cerr << "\r" << done << "/" << total << " jobs" << (done == total ? "\n" : "") << std::flush;
  });
  write_experiment_outputs(out_dir, rows);
  const auto failed = count_failed(rows);
  std::cout << rows.size() << " rows, " << failed << " failed; report in " << (out_dir / "report.csv") << '\n';
  return failed == 0 ? 0 : 2;
}

int run_report(const fs::path& report_path, const fs::path& out_dir, std::string cells_dir) {
  auto rows = read_report_csv(report_path);
  if (cells_dir.empty()) cells_dir = (report_path.parent_path() / "cells").string();
  if (fs::exists(cells_dir)) load_cell_traces(cells_dir, rows);
  fs::create_directories(out_dir);
  for (const auto figure : {FigureKind::AttackCurve, FigureKind::DefenseCurve, FigureKind::KinkTrace}) {
    const std::string name(to_string(figure));
    try {
      write_figure_csv(out_dir / (name + ".csv"), emit_figure_series(rows, figure));
      std::cout << "wrote " << (out_dir / (name + ".csv")) << '\n';
    } catch (const Error& e) {
      if (e.code() != ErrorCode::MissingCells) throw;
      std::cerr << "skipping " << name << ": " << e.what() << '\n';
    }
  }
  return count_failed(rows) == 0 ? 0 : 2;
}

int run_warfarin(const fs::path& input, const std::string& target, const fs::path& out, std::uint64_t seed,
                 std::optional<std::size_t> workers) {
  ScenarioConfig config;
  config.path = input;
  config.target = parse_target_column(target);
  config.seed = seed;
  config.workers = resolve_workers(workers, 1);
  try {
    const auto report = warfarin_scenario(config);
    write_json_file(out, to_json(report));
    std::cout << "median MAE clean " << report.median_mae_clean << ", poisoned " << report.median_mae_poisoned
              << ", defended " << report.median_mae_defended << '\n';
    return report.failed_cells == 0 ? 0 : 2;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::DatasetUnavailable) throw;
    std::cerr << "skipped: " << e.what() << '\n';
    return 0;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Data poisoning attacks and trimmed-loss defenses for regression"};
  app.require_subcommand(1);

  SyntheticSpec synth;
  std::string synth_kind = "linear";
  fs::path synth_out;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic regression CSV");
  synth_cmd->add_option("--kind", synth_kind, "linear, piecewise or friedman")->capture_default_str();
  synth_cmd->add_option("--rows", synth.rows)->capture_default_str();
  synth_cmd->add_option("--dims", synth.dims)->capture_default_str();
  synth_cmd->add_option("--noise", synth.noise, "noise std relative to signal std")->capture_default_str();
  synth_cmd->add_option("--seed", synth.seed)->capture_default_str();
  synth_cmd->add_option("--out", synth_out)->required();

  fs::path prep_input, prep_out;
  std::string prep_target;
  std::size_t prep_cap = 10000;
  std::uint64_t prep_seed = 0;
  auto* prep_cmd = app.add_subcommand("prepare", "Subsample, scale to [0,1] and split a raw CSV");
  prep_cmd->add_option("--input", prep_input)->required()->check(CLI::ExistingFile);
  prep_cmd->add_option("--target", prep_target, "target column name or zero-based index")->required();
  prep_cmd->add_option("--out-dir", prep_out)->required();
  prep_cmd->add_option("--cap", prep_cap, "subsample cap")->capture_default_str();
  prep_cmd->add_option("--seed", prep_seed)->capture_default_str();

  PoisonArgs poison;
  auto* poison_cmd = app.add_subcommand("poison", "Craft poison rows from a substitute set");
  poison_cmd->add_option("--attack", poison.attack)->required()->check(CLI::IsMember({"flip", "statp"}));
  poison_cmd->add_option("--epsilon", poison.epsilon)->required();
  poison_cmd->add_option("--substitute", poison.substitute)->required()->check(CLI::ExistingFile);
  poison_cmd->add_option("--train-size", poison.train_size, "victim train size n")->required();
  poison_cmd->add_option("--out", poison.out)->required();
  poison_cmd->add_option("--seed", poison.seed)->capture_default_str();
  poison_cmd->add_option("--oracle", poison.oracle, "StatP query model (JSON from `train`)");
  poison_cmd->add_option("--append-to", poison.append_to, "write the shuffled poisoned train set instead");
  poison_cmd->add_option("--gamma-min", poison.gamma_min)->capture_default_str();
  poison_cmd->add_option("--gamma-max", poison.gamma_max)->capture_default_str();

  DefendArgs defend;
  auto* defend_cmd = app.add_subcommand("defend", "Run Trim or iTrim on a (possibly poisoned) train set");
  defend_cmd->add_option("--defense", defend.defense)->required()->check(CLI::IsMember({"trim", "itrim"}));
  defend_cmd->add_option("--input", defend.input)->required()->check(CLI::ExistingFile);
  defend_cmd->add_option("--regressor", defend.regressor)->required();
  defend_cmd->add_option("--epsilon-hat", defend.epsilon_hat, "trim: assumed poison rate")->capture_default_str();
  defend_cmd->add_option("--epsilon-max", defend.epsilon_max, "itrim: largest candidate")->capture_default_str();
  defend_cmd->add_option("--runs", defend.runs, "itrim: number of candidates")->capture_default_str();
  defend_cmd->add_option("--threshold", defend.threshold, "itrim: kink threshold")->capture_default_str();
  defend_cmd->add_option("--max-iterations", defend.max_iterations)->capture_default_str();
  defend_cmd->add_flag("--full-trace", defend.full_trace, "itrim: evaluate every candidate");
  defend_cmd->add_option("--spec", defend.spec_file, "fixed hyperparameters (JSON) instead of grid search");
  defend_cmd->add_option("--grid", defend.grid_file, "grid (JSON) for the hyperparameter search");
  defend_cmd->add_option("--out", defend.out)->required();
  defend_cmd->add_option("--seed", defend.seed)->capture_default_str();

  fs::path train_input, train_out;
  std::string train_regressor, train_spec, train_grid;
  std::uint64_t train_seed = 0;
  auto* train_cmd = app.add_subcommand("train", "Grid-search and fit a regressor");
  train_cmd->add_option("--input", train_input)->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--regressor", train_regressor)->required();
  train_cmd->add_option("--out", train_out)->required();
  train_cmd->add_option("--seed", train_seed)->capture_default_str();
  train_cmd->add_option("--spec", train_spec, "fixed hyperparameters (JSON) instead of grid search");
  train_cmd->add_option("--grid", train_grid, "grid (JSON) for the hyperparameter search");

  fs::path eval_model, eval_input;
  std::string eval_out;
  auto* eval_cmd = app.add_subcommand("evaluate", "Score a fitted model on a scaled CSV");
  eval_cmd->add_option("--model", eval_model)->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--input", eval_input)->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--out", eval_out, "write the metrics JSON here instead of stdout");

  fs::path exp_config, exp_out;
  std::optional<std::size_t> exp_workers;
  bool exp_quiet = false;
  auto* exp_cmd = app.add_subcommand("experiment", "Run a full experiment grid");
  exp_cmd->add_option("--config", exp_config)->required();
  exp_cmd->add_option("--out", exp_out)->required();
  exp_cmd->add_option("--workers", exp_workers, std::string("worker threads (overrides ") + kWorkersEnv + ")");
  exp_cmd->add_flag("--quiet", exp_quiet, "no progress output");

  fs::path report_in, report_out;
  std::string report_cells;
  auto* report_cmd = app.add_subcommand("report", "Re-derive figure series from an existing report.csv");
  report_cmd->add_option("--report", report_in)->required()->check(CLI::ExistingFile);
  report_cmd->add_option("--out", report_out)->required();
  report_cmd->add_option("--cells", report_cells, "cells directory (default: next to the report)");

  fs::path war_input, war_out;
  std::string war_target = "Therapeutic Dose of Warfarin";
  std::uint64_t war_seed = 0;
  std::optional<std::size_t> war_workers;
  auto* war_cmd = app.add_subcommand("warfarin", "Clean/poisoned/defended comparison on a dosing CSV");
  war_cmd->add_option("--input", war_input)->required();
  war_cmd->add_option("--target", war_target)->capture_default_str();
  war_cmd->add_option("--out", war_out)->required();
  war_cmd->add_option("--seed", war_seed)->capture_default_str();
  war_cmd->add_option("--workers", war_workers);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (*synth_cmd) {
      synth.kind = synthetic_kind_from_string(synth_kind);
      return run_synth(synth, synth_out);
    }
    if (*prep_cmd) return run_prepare(prep_input, prep_target, prep_out, prep_cap, prep_seed);
    if (*poison_cmd) return run_poison(poison);
    if (*defend_cmd) return run_defend(defend);
    if (*train_cmd) return run_train(train_input, train_regressor, train_out, train_seed, train_spec, train_grid);
    if (*eval_cmd) return run_evaluate(eval_model, eval_input, eval_out);
    if (*exp_cmd) return run_experiment_cmd(exp_config, exp_out, exp_workers, exp_quiet);
    if (*report_cmd) return run_report(report_in, report_out, report_cells);
    if (*war_cmd) return run_warfarin(war_input, war_target, war_out, war_seed, war_workers);
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.code()) << "): " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
