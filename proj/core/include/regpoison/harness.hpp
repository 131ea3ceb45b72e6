#pragma once

#include "regpoison/attacks.hpp"
#include "regpoison/csv_io.hpp"
#include "regpoison/dataset.hpp"
#include "regpoison/defenses.hpp"
#include "regpoison/grid_search.hpp"
#include "regpoison/metrics.hpp"
#include "regpoison/regressor.hpp"
#include "regpoison/synthetic.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace regpoison {

/// A CSV file on disk or a generated synthetic problem.
struct DatasetSource {
  std::string id;
  std::optional<std::filesystem::path> path;
  TargetColumn target = std::size_t{0};
  std::optional<SyntheticSpec> synthetic;

  RawDataset load() const;
};

enum class AttackKind { Flip, StatP };
std::string_view to_string(AttackKind kind) noexcept;
AttackKind attack_kind_from_string(std::string_view name);

enum class DefenseType { None, Trim, ITrim };
std::string_view to_string(DefenseType type) noexcept;

struct DefenseSpec {
  /// Column value in the report; unique within a config.
  std::string id;
  DefenseType type = DefenseType::None;
  TrimConfig trim;
  ITrimConfig itrim;
  /// Trim only: use the cell's true poisoning rate as the assumed one.
  bool oracle_epsilon = false;
};

struct ExperimentConfig {
  std::vector<DatasetSource> datasets;
  std::size_t subsample_cap = 10000;
  std::vector<RegressorKind> regressors;
  /// Replaces the default grid for a regressor kind.
  std::map<RegressorKind, HyperGrid> grids;
  std::vector<double> epsilons = {0.0, 0.02, 0.04, 0.06, 0.08, 0.10};
  std::vector<AttackKind> attacks = {AttackKind::Flip};
  std::vector<DefenseSpec> defenses;
  FeasibilityDomain domain;
  std::uint64_t seed = 0;
  /// 0 picks the hardware concurrency.
  std::size_t workers = 1;

  HyperGrid grid_for(RegressorKind kind) const;
  /// Throws ConfigInvalid.
  void validate() const;
};

/// Parses the JSON config format documented in the README. Relative dataset
/// paths are resolved against `base_dir`. Throws ConfigInvalid.
ExperimentConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

/// Subsampled, scaled and split dataset, plus the seeds used.
struct PreparedData {
  std::string id;
  std::shared_ptr<const ScalingParams> scaling;
  DataSplits splits;
  std::size_t dropped_rows = 0;
  std::size_t raw_rows = 0;
};

PreparedData prepare(const DatasetSource& source, std::size_t subsample_cap, std::uint64_t seed);

/// Kernel ridge surrogate grid-searched on the substitute set; the default
/// StatP query model when the attacker cannot reach the victim.
FittedModel fit_surrogate(const Dataset& substitute, std::uint64_t seed);

enum class CellStatus { Pending, Done, Failed };
std::string_view to_string(CellStatus status) noexcept;

struct TracePoint {
  double epsilon_hat = 0.0;
  double train_loss = 0.0;
  std::optional<double> test_loss;
};

/// One experiment cell. Ratio columns compare against the clean baseline
/// row (epsilon 0, defense none) of the same dataset and regressor.
struct ReportRow {
  std::string dataset;
  std::string attack;
  double epsilon = 0.0;
  std::string regressor;
  std::string defense;
  std::uint64_t seed = 0;
  CellStatus status = CellStatus::Pending;
  std::string error;

  std::size_t n_train = 0;
  std::size_t n_poison = 0;
  /// Chosen hyperparameters as "key=value;..." (grid search on the cell's train set).
  std::string hyperparams;
  MetricsReport metrics;

  std::optional<double> clean_mse;
  std::optional<double> mse_ratio;
  std::optional<double> mae_ratio;
  std::optional<double> accbl_decrease_pct;

  std::optional<double> estimated_epsilon;
  std::optional<std::size_t> retained;
  /// Evaluation only: share of the true poison rows the defense dropped,
  /// and share of clean rows it dropped.
  std::optional<double> poison_removed_pct;
  std::optional<double> clean_removed_pct;
  std::optional<bool> no_kink_found;

  double fit_seconds = 0.0;
  double defense_seconds = 0.0;

  /// Not written to report.csv; kept for figures and cells/*.json.
  std::vector<TracePoint> trace;
  nlohmann::json audit;
};

/// Called after each finished job with (finished, total).
using ProgressFn = std::function<void(std::size_t, std::size_t)>;

/// Runs the full grid. Every cell yields rows even if it fails; rows come
/// back sorted by (dataset, attack, epsilon, regressor, defense) in config
/// order, independent of scheduling.
std::vector<ReportRow> run_experiment(const ExperimentConfig& config, const ProgressFn& progress = {});

std::size_t count_failed(const std::vector<ReportRow>& rows);

/// Column names of report.csv, in order.
const std::vector<std::string>& report_header();
void write_report_csv(const std::filesystem::path& path, const std::vector<ReportRow>& rows);
std::vector<ReportRow> read_report_csv(const std::filesystem::path& path);

enum class FigureKind { AttackCurve, DefenseCurve, KinkTrace };
std::string_view to_string(FigureKind kind) noexcept;

struct FigureSeries {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

/// attack_curve: mean test MSE over datasets per (attack, regressor, epsilon).
/// defense_curve: per (attack, defense, epsilon), the lower median over
///   regressors of dataset-mean defended MSE / dataset-mean clean MSE.
/// kink_trace: (epsilon_hat, train loss, test loss) for every traced cell.
/// Throws MissingCells when the rows cannot support the figure.
FigureSeries emit_figure_series(const std::vector<ReportRow>& rows, FigureKind figure);
void write_figure_csv(const std::filesystem::path& path, const FigureSeries& series);

/// Writes report.csv, figures/*.csv and cells/*.json under `out_dir`.
/// Figures the rows cannot support are skipped.
void write_experiment_outputs(const std::filesystem::path& out_dir, const std::vector<ReportRow>& rows);

/// Attaches loss traces from `cells_dir` (as written by write_experiment_outputs).
void load_cell_traces(const std::filesystem::path& cells_dir, std::vector<ReportRow>& rows);

/// Clean / poisoned / defended comparison for one regressor.
struct ScenarioRow {
  std::string regressor;
  MetricsReport clean;
  MetricsReport poisoned;
  MetricsReport defended;
  RatioRow ratios;
};

struct ScenarioReport {
  std::vector<ScenarioRow> rows;
  /// Lower medians over regressors.
  double median_mae_clean = 0.0;
  double median_mae_poisoned = 0.0;
  double median_mae_defended = 0.0;
  std::optional<double> median_mae_pc;
  std::optional<double> median_mae_dc;
  std::optional<double> median_accbl_pc;
  std::optional<double> median_accbl_dc;
  std::size_t failed_cells = 0;
};

struct ScenarioConfig {
  std::filesystem::path path;
  TargetColumn target = std::string("Therapeutic Dose of Warfarin");
  std::vector<RegressorKind> regressors;
  double epsilon = 0.02;
  ITrimConfig itrim;
  std::size_t subsample_cap = 10000;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
};

/// Clean, Flip-poisoned and iTrim-defended runs on a user-supplied dosing
/// CSV. Throws DatasetUnavailable when the file is missing.
ScenarioReport warfarin_scenario(const ScenarioConfig& config);
nlohmann::json to_json(const ScenarioReport& report);

}  // namespace regpoison
