#include "regpoison/error.hpp"
#include "regpoison/harness.hpp"
#include "regpoison/random.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>

using namespace regpoison;
using nlohmann::json;

namespace {

json small_config() {
  return json::parse(R"({
    "datasets": [{"synthetic": "linear", "rows": 300, "dims": 3, "seed": 3, "id": "lin"},
                 {"synthetic": "friedman", "rows": 300, "dims": 5, "seed": 4, "id": "fried"}],
    "regressors": ["ridge", "lasso"],
    "epsilons": [0, 0.04],
    "attacks": ["flip"],
    "defenses": ["none", "trim", "itrim"],
    "seed": 12
  })");
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorCode::InvalidArgument;
}

std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "regpoison_harness_tests" / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

const std::vector<ReportRow>& small_run() {
  static const auto rows = run_experiment(config_from_json(small_config()));
  return rows;
}

}  // namespace

TEST(Config, DefaultsAndNoneFirst) {
  auto j = small_config();
  j["defenses"] = {"itrim", "none"};
  j.erase("epsilons");
  const auto c = config_from_json(j);
  ASSERT_EQ(c.defenses.size(), 2u);
  EXPECT_EQ(c.defenses[0].id, "none");
  EXPECT_EQ(c.defenses[1].type, DefenseType::ITrim);
  EXPECT_DOUBLE_EQ(c.defenses[1].itrim.epsilon_max, 0.14);
  EXPECT_DOUBLE_EQ(c.defenses[1].itrim.threshold, 1e-3);
  EXPECT_EQ(c.epsilons, (std::vector<double>{0.0, 0.02, 0.04, 0.06, 0.08, 0.10}));
  EXPECT_EQ(c.subsample_cap, 10000u);
  EXPECT_EQ(c.seed, 12u);
}

TEST(Config, AllRegressorsAndDefenseObjects) {
  auto j = small_config();
  j["regressors"] = "all";
  j["defenses"] = json::array({"none", {{"id", "trim_04"}, {"type", "trim"}, {"epsilon_hat", 0.04}},
                               {{"id", "oracle"}, {"type", "trim"}, {"oracle_epsilon", true}}});
  const auto c = config_from_json(j);
  EXPECT_EQ(c.regressors.size(), 7u);
  ASSERT_EQ(c.defenses.size(), 3u);
  EXPECT_DOUBLE_EQ(c.defenses[1].trim.epsilon_hat, 0.04);
  EXPECT_TRUE(c.defenses[2].oracle_epsilon);
}

TEST(Config, RelativePathsResolveAgainstConfigDir) {
  const auto dir = scratch_dir("paths");
  std::ofstream(dir / "data.csv") << "a,b,y\n1,2,3\n";
  std::ofstream(dir / "config.json") << R"({"datasets": [{"path": "data.csv", "target": "y"}], "regressors": ["ridge"]})";
  const auto c = load_experiment_config(dir / "config.json");
  ASSERT_EQ(c.datasets.size(), 1u);
  EXPECT_EQ(*c.datasets[0].path, dir / "data.csv");
  EXPECT_EQ(c.datasets[0].id, "data");
}

TEST(Config, Errors) {
  const auto expect_invalid = [](const std::function<void(json&)>& edit) {
    auto j = small_config();
    edit(j);
    EXPECT_EQ(code_of([&] { config_from_json(j); }), ErrorCode::ConfigInvalid) << j.dump();
  };
  expect_invalid([](json& j) { j["unknown_key"] = 1; });
  expect_invalid([](json& j) { j["epsilons"] = {0.04, 0.02}; });
  expect_invalid([](json& j) { j["epsilons"] = {1.5}; });
  expect_invalid([](json& j) { j["regressors"] = {"ridge", "ridge"}; });
  expect_invalid([](json& j) { j["regressors"] = {"forest"}; });
  expect_invalid([](json& j) { j["attacks"] = {"label_noise"}; });
  expect_invalid([](json& j) { j["defenses"] = {"sphere"}; });
  expect_invalid([](json& j) { j["datasets"] = json::array(); });
  expect_invalid([](json& j) { j["datasets"] = {{{"path", "x.csv"}}}; });
  expect_invalid([](json& j) { j["domain"] = {{"gamma_min", 1.0}, {"gamma_max", 0.0}}; });
  expect_invalid([](json& j) { j["seed"] = "seven"; });
  EXPECT_EQ(code_of([] { load_experiment_config("/nonexistent/config.json"); }), ErrorCode::ConfigInvalid);
}

TEST(Run, GridShapeOrderAndStatus) {
  const auto& rows = small_run();
  // 2 datasets x (clean + 1 attack eps) x 2 regressors x 3 defenses.
  ASSERT_EQ(rows.size(), 24u);
  EXPECT_EQ(count_failed(rows), 0u);
  EXPECT_EQ(rows[0].dataset, "lin");
  EXPECT_EQ(rows[0].attack, "none");
  EXPECT_EQ(rows[0].regressor, "ridge");
  EXPECT_EQ(rows[0].defense, "none");
  EXPECT_EQ(rows[1].defense, "trim");
  EXPECT_EQ(rows[2].defense, "itrim");
  EXPECT_EQ(rows[3].regressor, "lasso");
  EXPECT_EQ(rows[6].attack, "flip");
  EXPECT_EQ(rows[12].dataset, "fried");
  for (const auto& r : rows) {
    EXPECT_EQ(r.status, CellStatus::Done) << r.error;
    EXPECT_FALSE(r.hyperparams.empty());
    EXPECT_EQ(r.n_poison, r.attack == "none" ? 0u : ceil_count(0.04, 180));
  }
}

TEST(Run, CleanBaselineRatiosAreOne) {
  for (const auto& r : small_run()) {
    ASSERT_TRUE(r.mse_ratio.has_value());
    if (r.attack == "none" && r.defense == "none") {
      EXPECT_EQ(*r.mse_ratio, 1.0);
      EXPECT_EQ(*r.mae_ratio, 1.0);
      EXPECT_EQ(*r.accbl_decrease_pct, 0.0);
    }
  }
}

TEST(Run, DefenseColumns) {
  for (const auto& r : small_run()) {
    if (r.defense == "none") {
      EXPECT_FALSE(r.estimated_epsilon.has_value());
      continue;
    }
    ASSERT_TRUE(r.estimated_epsilon.has_value());
    ASSERT_TRUE(r.retained.has_value());
    EXPECT_EQ(*r.retained, retained_count(r.n_train, *r.estimated_epsilon));
    if (r.defense == "trim") EXPECT_DOUBLE_EQ(*r.estimated_epsilon, 0.14);
    if (r.defense == "itrim") {
      EXPECT_TRUE(r.no_kink_found.has_value());
      EXPECT_FALSE(r.trace.empty());
    }
    if (r.attack == "none") {
      EXPECT_FALSE(r.poison_removed_pct.has_value());
    } else {
      EXPECT_TRUE(r.poison_removed_pct.has_value());
    }
  }
}

TEST(Run, SeedsAreDistinctPerCell) {
  std::set<std::uint64_t> seeds;
  for (const auto& r : small_run()) seeds.insert(r.seed);
  EXPECT_EQ(seeds.size(), small_run().size());
}

TEST(Run, IdenticalAcrossWorkerCounts) {
  auto config = config_from_json(small_config());
  config.workers = 3;
  const auto parallel = run_experiment(config);
  const auto& serial = small_run();
  ASSERT_EQ(parallel.size(), serial.size());
  for (std::size_t i = 0; i < serial.size(); ++i) {
    EXPECT_EQ(parallel[i].metrics.mse, serial[i].metrics.mse) << i;
    EXPECT_EQ(parallel[i].metrics.mae_original_units, serial[i].metrics.mae_original_units) << i;
    EXPECT_EQ(parallel[i].hyperparams, serial[i].hyperparams) << i;
    EXPECT_EQ(parallel[i].estimated_epsilon, serial[i].estimated_epsilon) << i;
    EXPECT_EQ(parallel[i].seed, serial[i].seed) << i;
  }
}

TEST(Run, FailedCellsAreRecordedNotFatal) {
  auto j = small_config();
  j["datasets"] = {j["datasets"][0]};
  j["regressors"] = {"ridge"};
  // The substitute holds 25% of the rows, too few for a 50% budget.
  j["epsilons"] = {0, 0.04, 0.5};
  const auto rows = run_experiment(config_from_json(j));
  ASSERT_EQ(rows.size(), 9u);
  EXPECT_EQ(count_failed(rows), 3u);
  for (const auto& r : rows) {
    if (r.epsilon == 0.5) {
      EXPECT_EQ(r.status, CellStatus::Failed);
      EXPECT_NE(r.error.find("attack failed"), std::string::npos);
    } else {
      EXPECT_EQ(r.status, CellStatus::Done);
    }
  }
}

TEST(Report, CsvRoundTrip) {
  const auto dir = scratch_dir("roundtrip");
  const auto& rows = small_run();
  write_report_csv(dir / "report.csv", rows);
  std::ifstream in(dir / "report.csv");
  std::string header;
  std::getline(in, header);
  std::string expected;
  for (const auto& h : report_header()) expected += (expected.empty() ? "" : ",") + h;
  EXPECT_EQ(header, expected);

  const auto back = read_report_csv(dir / "report.csv");
  ASSERT_EQ(back.size(), rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(back[i].dataset, rows[i].dataset);
    EXPECT_EQ(back[i].defense, rows[i].defense);
    EXPECT_EQ(back[i].seed, rows[i].seed);
    EXPECT_EQ(back[i].metrics.mse, rows[i].metrics.mse);
    EXPECT_EQ(back[i].mse_ratio, rows[i].mse_ratio);
    EXPECT_EQ(back[i].estimated_epsilon, rows[i].estimated_epsilon);
    EXPECT_EQ(back[i].retained, rows[i].retained);
    EXPECT_EQ(back[i].status, rows[i].status);
  }
}

TEST(Report, OutputsAndTraces) {
  const auto dir = scratch_dir("outputs");
  const auto& rows = small_run();
  write_experiment_outputs(dir, rows);
  EXPECT_TRUE(std::filesystem::exists(dir / "report.csv"));
  for (const auto* f : {"attack_curve.csv", "defense_curve.csv", "kink_trace.csv"}) {
    EXPECT_TRUE(std::filesystem::exists(dir / "figures" / f)) << f;
  }
  std::size_t cells = 0;
  for (const auto& entry : std::filesystem::directory_iterator(dir / "cells")) cells += entry.path().extension() == ".json";
  EXPECT_EQ(cells, rows.size());

  auto back = read_report_csv(dir / "report.csv");
  load_cell_traces(dir / "cells", back);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    ASSERT_EQ(back[i].trace.size(), rows[i].trace.size()) << i;
    for (std::size_t k = 0; k < rows[i].trace.size(); ++k) {
      EXPECT_EQ(back[i].trace[k].train_loss, rows[i].trace[k].train_loss);
    }
  }
}

TEST(Figures, SeriesShapes) {
  const auto& rows = small_run();
  const auto attack = emit_figure_series(rows, FigureKind::AttackCurve);
  // (flip + clean) rows per regressor: none/0 and flip/0.04.
  EXPECT_EQ(attack.rows.size(), 4u);
  const auto defense = emit_figure_series(rows, FigureKind::DefenseCurve);
  EXPECT_FALSE(defense.rows.empty());
  for (const auto& row : defense.rows) EXPECT_EQ(row.size(), defense.header.size());
  const auto kink = emit_figure_series(rows, FigureKind::KinkTrace);
  EXPECT_FALSE(kink.rows.empty());
}

TEST(Figures, MissingCells) {
  EXPECT_EQ(code_of([] { emit_figure_series({}, FigureKind::AttackCurve); }), ErrorCode::MissingCells);
  std::vector<ReportRow> undefended;
  for (const auto& r : small_run()) {
    if (r.defense == "none") undefended.push_back(r);
  }
  std::vector<ReportRow> poisoned_only;
  for (const auto& r : small_run()) {
    if (r.attack != "none") poisoned_only.push_back(r);
  }
  EXPECT_EQ(code_of([&] { emit_figure_series(poisoned_only, FigureKind::DefenseCurve); }), ErrorCode::MissingCells);
  EXPECT_EQ(code_of([&] { emit_figure_series(undefended, FigureKind::KinkTrace); }), ErrorCode::MissingCells);
}

TEST(Scenario, MissingDosingFile) {
  ScenarioConfig c;
  c.path = "/nonexistent/iwpc.csv";
  c.regressors = {RegressorKind::Ridge};
  EXPECT_EQ(code_of([&] { warfarin_scenario(c); }), ErrorCode::DatasetUnavailable);
}

TEST(Scenario, RunsOnASuppliedCsv) {
  const auto dir = scratch_dir("scenario");
  auto spec = SyntheticSpec{};
  spec.rows = 400;
  spec.dims = 4;
  auto raw = make_synthetic(spec);
  raw.targets = raw.targets.array() * 10.0 + 30.0;
  raw.column_names.back() = "dose";
  write_csv(dir / "dose.csv", raw.features, raw.targets, raw.column_names);
  ScenarioConfig c;
  c.path = dir / "dose.csv";
  c.target = std::string("dose");
  c.regressors = {RegressorKind::Ridge, RegressorKind::Lasso, RegressorKind::Huber};
  c.seed = 5;
  const auto report = warfarin_scenario(c);
  EXPECT_EQ(report.rows.size(), 3u);
  EXPECT_EQ(report.failed_cells, 0u);
  EXPECT_GT(report.median_mae_poisoned, report.median_mae_clean);
  ASSERT_TRUE(report.median_mae_pc.has_value());
  EXPECT_GT(*report.median_mae_pc, 1.0);
  EXPECT_TRUE(to_json(report).contains("rows"));
}
