#include "regpoison/harness.hpp"

#include "regpoison/error.hpp"
#include "regpoison/random.hpp"
#include "regpoison/serialization.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <charconv>
#include <chrono>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

namespace regpoison {

namespace {

constexpr std::string_view kNone = "none";

// Seed-derivation tags, one per random stream in the pipeline.
enum : std::uint64_t { kTagSubsample = 1, kTagSplit, kTagSurrogate, kTagAttack, kTagShuffle, kTagSearch };

std::string fmt(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return ec == std::errc{} ? std::string(buf, ptr) : std::to_string(v);
}

template <class T>
std::string fmt_opt(const std::optional<T>& v) {
  if (!v) return {};
  if constexpr (std::is_same_v<T, bool>) {
    return *v ? "1" : "0";
  } else if constexpr (std::is_integral_v<T>) {
    return std::to_string(*v);
  } else {
    return fmt(*v);
  }
}

std::string sanitize(std::string s) {
  for (char& c : s) {
    if (c == ',' || c == '\n' || c == '\r' || c == '"') c = c == ',' ? ';' : ' ';
  }
  return s;
}

std::uint64_t epsilon_key(double eps) { return std::bit_cast<std::uint64_t>(eps); }

std::string hyperparam_string(const RegressorSpec& spec) {
  std::string out;
  for (const auto& [k, v] : spec.hyperparams) {
    if (!out.empty()) out += ';';
    out += k + "=" + fmt(v);
  }
  return out;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

[[noreturn]] void config_error(const std::string& msg) { fail(ErrorCode::ConfigInvalid, msg); }

void check_keys(const json& j, std::initializer_list<std::string_view> allowed, const std::string& where) {
  if (!j.is_object()) config_error(where + " must be an object");
  for (const auto& [key, value] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      config_error("unknown key '" + key + "' in " + where);
    }
  }
}

TrimConfig parse_trim(const json& j, TrimConfig base, const std::string& where) {
  if (j.contains("epsilon_hat")) base.epsilon_hat = j.at("epsilon_hat").get<double>();
  if (j.contains("max_iterations")) base.max_iterations = j.at("max_iterations").get<std::size_t>();
  if (j.contains("convergence_tol")) base.convergence_tol = j.at("convergence_tol").get<double>();
  (void)where;
  return base;
}

ITrimConfig parse_itrim(const json& j, ITrimConfig base) {
  if (j.contains("epsilon_max")) base.epsilon_max = j.at("epsilon_max").get<double>();
  if (j.contains("runs")) base.runs = j.at("runs").get<std::size_t>();
  if (j.contains("threshold")) base.threshold = j.at("threshold").get<double>();
  if (j.contains("full_trace")) base.full_trace = j.at("full_trace").get<bool>();
  if (j.contains("max_iterations")) base.trim.max_iterations = j.at("max_iterations").get<std::size_t>();
  if (j.contains("convergence_tol")) base.trim.convergence_tol = j.at("convergence_tol").get<double>();
  return base;
}

DatasetSource parse_synthetic(const json& j, const std::string& kind) {
  SyntheticSpec spec;
  spec.kind = synthetic_kind_from_string(kind);
  spec.rows = j.value("rows", spec.rows);
  spec.dims = j.value("dims", spec.dims);
  spec.noise = j.value("noise", spec.noise);
  spec.seed = j.value("seed", spec.seed);
  DatasetSource src;
  src.synthetic = spec;
  src.id = j.value("id", spec.name());
  return src;
}

void parse_datasets(const json& list, const std::filesystem::path& base_dir, std::vector<DatasetSource>& out) {
  if (!list.is_array()) config_error("datasets must be an array");
  for (const auto& entry : list) {
    if (entry.is_string() && entry.get<std::string>() == "synthetic_suite") {
      for (const auto& spec : synthetic_suite(1)) out.push_back({spec.name(), std::nullopt, std::size_t{0}, spec});
      continue;
    }
    check_keys(entry, {"id", "path", "target", "synthetic", "synthetic_suite", "rows", "dims", "noise", "seed"},
               "dataset entry");
    if (entry.contains("synthetic_suite")) {
      const auto seed = entry.value("seed", std::uint64_t{1});
      const auto rows = entry.value("rows", std::size_t{2000});
      for (auto spec : synthetic_suite(seed, rows)) {
        spec.noise = entry.value("noise", spec.noise);
        out.push_back({spec.name(), std::nullopt, std::size_t{0}, spec});
      }
    } else if (entry.contains("synthetic")) {
      out.push_back(parse_synthetic(entry, entry.at("synthetic").get<std::string>()));
    } else if (entry.contains("path")) {
      DatasetSource src;
      std::filesystem::path p = entry.at("path").get<std::string>();
      if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
      src.path = p;
      if (!entry.contains("target")) config_error("dataset " + p.string() + " needs a target column");
      const auto& t = entry.at("target");
      src.target = t.is_number_unsigned() ? TargetColumn(t.get<std::size_t>()) : TargetColumn(t.get<std::string>());
      src.id = entry.value("id", p.stem().string());
      out.push_back(std::move(src));
    } else {
      config_error("dataset entry needs 'path', 'synthetic' or 'synthetic_suite'");
    }
  }
  for (auto& src : out) src.id = sanitize(src.id);
}

DefenseSpec defense_from_name(const std::string& name, const TrimConfig& trim, const ITrimConfig& itrim) {
  DefenseSpec d;
  d.id = name;
  d.trim = trim;
  d.itrim = itrim;
  if (name == "none") {
    d.type = DefenseType::None;
  } else if (name == "trim") {
    d.type = DefenseType::Trim;
  } else if (name == "itrim") {
    d.type = DefenseType::ITrim;
  } else {
    config_error("unknown defense '" + name + "'");
  }
  return d;
}

/// Guarantees an undefended row per cell, which every ratio column needs.
std::vector<DefenseSpec> with_none_first(std::vector<DefenseSpec> defenses) {
  const auto it = std::find_if(defenses.begin(), defenses.end(),
                               [](const DefenseSpec& d) { return d.type == DefenseType::None; });
  if (it == defenses.end()) {
    defenses.insert(defenses.begin(), DefenseSpec{std::string(kNone), DefenseType::None, {}, {}, false});
  } else if (it != defenses.begin()) {
    std::rotate(defenses.begin(), it, it + 1);
  }
  return defenses;
}

std::string cell_file_name(const ReportRow& r) {
  std::string name = r.dataset + "__" + r.attack + "__" + fmt(r.epsilon) + "__" + r.regressor + "__" + r.defense;
  for (char& c : name) {
    if (c == '/' || c == '\\' || c == ' ' || c == ':') c = '_';
  }
  return name + ".json";
}

}  // namespace

RawDataset DatasetSource::load() const {
  if (synthetic) return make_synthetic(*synthetic);
  if (!path) fail(ErrorCode::ConfigInvalid, "dataset '" + id + "' has neither a path nor a generator");
  auto raw = load_csv(*path, target);
  raw.name = id;
  return raw;
}

std::string_view to_string(AttackKind kind) noexcept { return kind == AttackKind::Flip ? "flip" : "statp"; }

AttackKind attack_kind_from_string(std::string_view name) {
  if (name == "flip") return AttackKind::Flip;
  if (name == "statp") return AttackKind::StatP;
  fail(ErrorCode::ConfigInvalid, "unknown attack '" + std::string(name) + "'");
}

std::string_view to_string(DefenseType type) noexcept {
  switch (type) {
    case DefenseType::None: return "none";
    case DefenseType::Trim: return "trim";
    case DefenseType::ITrim: return "itrim";
  }
  return "none";
}

std::string_view to_string(CellStatus status) noexcept {
  switch (status) {
    case CellStatus::Pending: return "pending";
    case CellStatus::Done: return "done";
    case CellStatus::Failed: return "failed";
  }
  return "pending";
}

std::string_view to_string(FigureKind kind) noexcept {
  switch (kind) {
    case FigureKind::AttackCurve: return "attack_curve";
    case FigureKind::DefenseCurve: return "defense_curve";
    case FigureKind::KinkTrace: return "kink_trace";
  }
  return "attack_curve";
}

HyperGrid ExperimentConfig::grid_for(RegressorKind kind) const {
  if (const auto it = grids.find(kind); it != grids.end()) return it->second;
  return default_grid(kind);
}

void ExperimentConfig::validate() const {
  try {
    if (datasets.empty()) config_error("no datasets");
    if (regressors.empty()) config_error("no regressors");
    if (epsilons.empty()) config_error("no epsilons");
    if (attacks.empty()) config_error("no attacks");
    if (defenses.empty()) config_error("no defenses");
    if (subsample_cap < 10) config_error("subsample_cap must be at least 10");
    std::set<std::string> ids;
    for (const auto& d : datasets) {
      if (d.id.empty()) config_error("dataset with empty id");
      if (!ids.insert(d.id).second) config_error("duplicate dataset id '" + d.id + "'");
    }
    for (std::size_t i = 0; i < epsilons.size(); ++i) {
      if (!(epsilons[i] >= 0.0 && epsilons[i] < 1.0)) config_error("epsilons must lie in [0, 1)");
      if (i > 0 && !(epsilons[i] > epsilons[i - 1])) config_error("epsilons must be strictly ascending");
    }
    if (std::set<RegressorKind>(regressors.begin(), regressors.end()).size() != regressors.size()) {
      config_error("duplicate regressor");
    }
    if (std::set<AttackKind>(attacks.begin(), attacks.end()).size() != attacks.size()) config_error("duplicate attack");
    std::set<std::string> defense_ids;
    for (const auto& d : defenses) {
      if (!defense_ids.insert(d.id).second) config_error("duplicate defense id '" + d.id + "'");
      if (d.type == DefenseType::Trim) d.trim.validate();
      if (d.type == DefenseType::ITrim) d.itrim.validate();
    }
    for (const auto& [kind, grid] : grids) grid.validate();
    domain.validate();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ConfigInvalid) throw;
    config_error(e.what());
  }
}

ExperimentConfig config_from_json(const json& j, const std::filesystem::path& base_dir) {
  ExperimentConfig config;
  try {
    check_keys(j,
               {"datasets", "subsample_cap", "regressors", "grids", "folds", "epsilons", "attacks", "defenses", "trim",
                "itrim", "seed", "workers", "domain"},
               "experiment config");
    if (!j.contains("datasets")) config_error("config needs 'datasets'");
    parse_datasets(j.at("datasets"), base_dir, config.datasets);
    config.subsample_cap = j.value("subsample_cap", config.subsample_cap);
    config.seed = j.value("seed", config.seed);
    config.workers = j.value("workers", config.workers);

    if (!j.contains("regressors") || j.at("regressors") == "all") {
      const auto& all = all_regressor_kinds();
      config.regressors.assign(all.begin(), all.end());
    } else {
      for (const auto& name : j.at("regressors")) {
        config.regressors.push_back(regressor_kind_from_string(name.get<std::string>()));
      }
    }
    if (j.contains("grids")) {
      for (const auto& [name, grid] : j.at("grids").items()) {
        config.grids[regressor_kind_from_string(name)] = grid.get<HyperGrid>();
      }
    }
    if (j.contains("folds")) {
      const auto folds = j.at("folds").get<std::size_t>();
      for (const auto kind : config.regressors) {
        auto grid = config.grid_for(kind);
        grid.folds = folds;
        config.grids[kind] = grid;
      }
    }
    if (j.contains("epsilons")) config.epsilons = j.at("epsilons").get<std::vector<double>>();
    if (j.contains("attacks")) {
      config.attacks.clear();
      for (const auto& name : j.at("attacks")) config.attacks.push_back(attack_kind_from_string(name.get<std::string>()));
    }
    TrimConfig trim;
    ITrimConfig itrim;
    if (j.contains("trim")) {
      check_keys(j.at("trim"), {"epsilon_hat", "max_iterations", "convergence_tol"}, "trim");
      trim = parse_trim(j.at("trim"), trim, "trim");
    }
    itrim.trim.max_iterations = trim.max_iterations;
    itrim.trim.convergence_tol = trim.convergence_tol;
    if (j.contains("itrim")) {
      check_keys(j.at("itrim"), {"epsilon_max", "runs", "threshold", "full_trace", "max_iterations", "convergence_tol"},
                 "itrim");
      itrim = parse_itrim(j.at("itrim"), itrim);
    }
    if (j.contains("domain")) {
      check_keys(j.at("domain"), {"gamma_min", "gamma_max"}, "domain");
      config.domain.gamma_min = j.at("domain").value("gamma_min", 0.0);
      config.domain.gamma_max = j.at("domain").value("gamma_max", 1.0);
    }
    if (!j.contains("defenses")) {
      for (const auto* name : {"none", "trim", "itrim"}) config.defenses.push_back(defense_from_name(name, trim, itrim));
    } else {
      for (const auto& entry : j.at("defenses")) {
        if (entry.is_string()) {
          config.defenses.push_back(defense_from_name(entry.get<std::string>(), trim, itrim));
          continue;
        }
        check_keys(entry,
                   {"id", "type", "epsilon_hat", "oracle_epsilon", "max_iterations", "convergence_tol", "epsilon_max",
                    "runs", "threshold", "full_trace"},
                   "defense entry");
        auto d = defense_from_name(entry.at("type").get<std::string>(), trim, itrim);
        d.id = sanitize(entry.value("id", d.id));
        if (d.type == DefenseType::Trim) d.trim = parse_trim(entry, trim, "defense");
        if (d.type == DefenseType::ITrim) d.itrim = parse_itrim(entry, itrim);
        d.oracle_epsilon = entry.value("oracle_epsilon", false);
        config.defenses.push_back(std::move(d));
      }
    }
    config.defenses = with_none_first(std::move(config.defenses));
  } catch (const json::exception& e) {
    config_error(std::string("malformed config: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ConfigInvalid) throw;
    config_error(e.what());
  }
  config.validate();
  return config;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) config_error("config file not found: " + path.string());
  return config_from_json(read_json_file(path), path.parent_path());
}

PreparedData prepare(const DatasetSource& source, std::size_t subsample_cap, std::uint64_t seed) {
  const auto key = hash_name(source.id);
  RawDataset raw = source.load();
  PreparedData out;
  out.id = source.id;
  out.raw_rows = raw.rows();
  out.dropped_rows = raw.dropped_rows;
  raw = subsample(raw, subsample_cap, derive_seed(seed, {key, kTagSubsample}));
  out.scaling = std::make_shared<const ScalingParams>(fit_scaler(raw));
  out.splits = split(apply_scaler(raw, out.scaling), derive_seed(seed, {key, kTagSplit}));
  return out;
}

FittedModel fit_surrogate(const Dataset& substitute, std::uint64_t seed) {
  const auto spec = grid_search(RegressorKind::KernelRidge, default_grid(RegressorKind::KernelRidge), substitute, seed);
  return fit(spec, substitute);
}

namespace {

struct Variant {
  std::string attack;
  double epsilon = 0.0;
  std::optional<PoisonedTrain> train;
  std::string error;
};

struct Job {
  std::size_t dataset = 0;
  std::size_t variant = 0;
  std::size_t regressor = 0;
};

PoisonedTrain clean_train(const Dataset& train) {
  return PoisonedTrain{train, std::vector<bool>(train.rows(), false)};
}

std::vector<Variant> build_variants(const ExperimentConfig& config, const PreparedData& data) {
  const auto key = hash_name(data.id);
  std::vector<Variant> out;
  out.push_back({std::string(kNone), 0.0, clean_train(data.splits.train), {}});

  std::optional<FittedModel> surrogate;
  std::string surrogate_error;
  for (const auto attack : config.attacks) {
    const auto attack_key = hash_name(to_string(attack));
    for (const double eps : config.epsilons) {
      if (eps == 0.0) continue;
      Variant v{std::string(to_string(attack)), eps, std::nullopt, {}};
      try {
        AttackConfig ac;
        ac.epsilon = eps;
        ac.target_n = data.splits.train.rows();
        ac.domain = config.domain;
        ac.seed = derive_seed(config.seed, {key, attack_key, epsilon_key(eps), kTagAttack});
        PoisonSet poison;
        if (attack == AttackKind::Flip) {
          poison = flip_attack(data.splits.substitute, ac);
        } else {
          if (!surrogate && surrogate_error.empty()) {
            try {
              surrogate = fit_surrogate(data.splits.substitute, derive_seed(config.seed, {key, kTagSurrogate}));
            } catch (const std::exception& e) {
              surrogate_error = std::string("surrogate fit failed: ") + e.what();
            }
          }
          if (!surrogate) fail(ErrorCode::OracleFailure, surrogate_error);
          const FittedModel& model = *surrogate;
          poison = statp_attack(data.splits.substitute, ac,
                                [&model](const Eigen::MatrixXd& x) { return predict(model, x); });
        }
        v.train = append_and_shuffle(data.splits.train, poison,
                                     derive_seed(config.seed, {key, attack_key, epsilon_key(eps), kTagShuffle}));
      } catch (const std::exception& e) {
        v.error = e.what();
      }
      out.push_back(std::move(v));
    }
  }
  return out;
}

void fill_removal(ReportRow& row, const PoisonedTrain& train, const std::vector<std::size_t>& retained) {
  std::vector<bool> kept(train.is_poison.size(), false);
  for (const auto i : retained) kept[i] = true;
  std::size_t poison = 0, poison_dropped = 0, clean = 0, clean_dropped = 0;
  for (std::size_t i = 0; i < kept.size(); ++i) {
    if (train.is_poison[i]) {
      ++poison;
      poison_dropped += kept[i] ? 0 : 1;
    } else {
      ++clean;
      clean_dropped += kept[i] ? 0 : 1;
    }
  }
  if (poison > 0) row.poison_removed_pct = 100.0 * static_cast<double>(poison_dropped) / static_cast<double>(poison);
  if (clean > 0) row.clean_removed_pct = 100.0 * static_cast<double>(clean_dropped) / static_cast<double>(clean);
}

json row_audit(const ReportRow& row) {
  json trace = json::array();
  for (const auto& t : row.trace) {
    trace.push_back({{"epsilon_hat", t.epsilon_hat},
                     {"train_loss", t.train_loss},
                     {"test_loss", t.test_loss ? json(*t.test_loss) : json(nullptr)}});
  }
  return json{{"dataset", row.dataset},     {"attack", row.attack},
              {"epsilon", row.epsilon},     {"regressor", row.regressor},
              {"defense", row.defense},     {"seed", row.seed},
              {"status", std::string(to_string(row.status))},
              {"error", row.error},         {"n_train", row.n_train},
              {"n_poison", row.n_poison},   {"hyperparams", row.hyperparams},
              {"hyperparams_source", "grid search on this cell's (possibly poisoned) train set; reused for the defended refit"},
              {"metrics", row.metrics},     {"trace", trace}};
}

std::vector<ReportRow> run_job(const ExperimentConfig& config, const PreparedData& data, const Variant& variant,
                               RegressorKind kind) {
  const auto key = hash_name(data.id);
  const auto attack_key = hash_name(variant.attack);
  const auto reg_key = hash_name(to_string(kind));
  const auto eps_key = epsilon_key(variant.epsilon);

  std::vector<ReportRow> rows;
  for (const auto& d : config.defenses) {
    ReportRow r;
    r.dataset = data.id;
    r.attack = variant.attack;
    r.epsilon = variant.epsilon;
    r.regressor = std::string(to_string(kind));
    r.defense = d.id;
    r.seed = derive_seed(config.seed, {key, attack_key, eps_key, reg_key, hash_name(d.id)});
    rows.push_back(std::move(r));
  }
  const auto fail_all = [&](const std::string& msg) {
    for (auto& r : rows) {
      r.status = CellStatus::Failed;
      r.error = sanitize(msg);
    }
    return rows;
  };
  if (!variant.train) return fail_all("attack failed: " + variant.error);

  const PoisonedTrain& train = *variant.train;
  const Dataset& test = data.splits.test;
  const ScalingParams* scaling = data.scaling.get();
  for (auto& r : rows) {
    r.n_train = train.data.rows();
    r.n_poison = train.poison_count();
  }

  RegressorSpec spec;
  MetricsReport undefended;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    auto base = default_spec(kind);
    base.seed = derive_seed(config.seed, {key, attack_key, eps_key, reg_key, kTagSearch});
    spec = grid_search_detailed(base, config.grid_for(kind), train.data, base.seed).best;
    const auto model = fit(spec, train.data);
    undefended = evaluate(test.targets, predict(model, test.features), scaling);
  } catch (const std::exception& e) {
    return fail_all(std::string("fit failed: ") + e.what());
  }
  const double fit_seconds = seconds_since(t0);

  for (std::size_t i = 0; i < rows.size(); ++i) {
    auto& r = rows[i];
    const auto& d = config.defenses[i];
    r.hyperparams = hyperparam_string(spec);
    r.fit_seconds = fit_seconds;
    if (d.type == DefenseType::None) {
      r.metrics = undefended;
      r.status = CellStatus::Done;
      r.audit = row_audit(r);
      continue;
    }
    const auto t1 = std::chrono::steady_clock::now();
    try {
      DefenseResult result;
      if (d.type == DefenseType::Trim) {
        TrimConfig tc = d.trim;
        if (d.oracle_epsilon) tc.epsilon_hat = variant.epsilon;
        result = trim(train.data, spec, tc, r.seed);
      } else {
        result = itrim(train.data, spec, d.itrim, r.seed);
        r.no_kink_found = result.no_kink_found;
      }
      r.metrics = evaluate(test.targets, predict(result.final_model, test.features), scaling);
      r.estimated_epsilon = result.estimated_epsilon;
      r.retained = result.retained_indices.size();
      fill_removal(r, train, result.retained_indices);
      for (const auto& e : result.loss_trace) {
        TracePoint p{e.epsilon_hat, e.train_loss, std::nullopt};
        if (e.model) {
          p.test_loss = mse(test.targets, predict(*e.model, test.features));
        } else if (result.loss_trace.size() == 1) {
          p.test_loss = r.metrics.mse;
        }
        r.trace.push_back(p);
      }
      r.status = CellStatus::Done;
      r.defense_seconds = seconds_since(t1);
      r.audit = row_audit(r);
      r.audit["defense_result"] = result;
      r.audit["defense_type"] = std::string(to_string(d.type));
    } catch (const std::exception& e) {
      r.status = CellStatus::Failed;
      r.error = sanitize(std::string("defense failed: ") + e.what());
      r.defense_seconds = seconds_since(t1);
      r.audit = row_audit(r);
    }
  }
  return rows;
}

struct CleanKey {
  std::string dataset;
  std::string regressor;
  auto operator<=>(const CleanKey&) const = default;
};

void attach_ratios(std::vector<ReportRow>& rows) {
  std::map<CleanKey, MetricsReport> clean;
  for (const auto& r : rows) {
    if (r.status == CellStatus::Done && r.attack == kNone && r.defense == kNone) {
      clean[{r.dataset, r.regressor}] = r.metrics;
    }
  }
  for (auto& r : rows) {
    if (r.status != CellStatus::Done) continue;
    const auto it = clean.find({r.dataset, r.regressor});
    if (it == clean.end()) continue;
    const auto& c = it->second;
    r.clean_mse = c.mse;
    if (c.mse != 0.0) r.mse_ratio = r.metrics.mse / c.mse;
    const auto ratios = ratio_report(c, r.metrics, std::nullopt);
    r.mae_ratio = ratios.mae_pc;
    r.accbl_decrease_pct = ratios.accbl_pc;
  }
}

}  // namespace

std::vector<ReportRow> run_experiment(const ExperimentConfig& input, const ProgressFn& progress) {
  ExperimentConfig config = input;
  config.defenses = with_none_first(std::move(config.defenses));
  config.validate();

  std::vector<PreparedData> data;
  std::vector<std::vector<Variant>> variants;
  for (const auto& source : config.datasets) {
    data.push_back(prepare(source, config.subsample_cap, config.seed));
    variants.push_back(build_variants(config, data.back()));
  }

  std::vector<Job> jobs;
  for (std::size_t di = 0; di < data.size(); ++di) {
    for (std::size_t vi = 0; vi < variants[di].size(); ++vi) {
      for (std::size_t ri = 0; ri < config.regressors.size(); ++ri) jobs.push_back({di, vi, ri});
    }
  }

  std::vector<std::vector<ReportRow>> results(jobs.size());
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> finished{0};
  std::mutex progress_mutex;
  const auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      const auto& job = jobs[i];
      results[i] = run_job(config, data[job.dataset], variants[job.dataset][job.variant],
                           config.regressors[job.regressor]);
      const auto done = ++finished;
      if (progress) {
        std::lock_guard lock(progress_mutex);
        progress(done, jobs.size());
      }
    }
  };

  std::size_t workers = config.workers == 0 ? std::max(1u, std::thread::hardware_concurrency()) : config.workers;
  workers = std::min(workers, std::max<std::size_t>(jobs.size(), 1));
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  }

  std::vector<ReportRow> rows;
  for (auto& r : results) std::move(r.begin(), r.end(), std::back_inserter(rows));
  attach_ratios(rows);
  return rows;
}

std::size_t count_failed(const std::vector<ReportRow>& rows) {
  return static_cast<std::size_t>(
      std::count_if(rows.begin(), rows.end(), [](const ReportRow& r) { return r.status == CellStatus::Failed; }));
}

const std::vector<std::string>& report_header() {
  static const std::vector<std::string> header = {
      "dataset",         "attack",           "epsilon",           "regressor",          "defense",
      "seed",            "status",           "n_train",           "n_poison",           "hyperparams",
      "mse",             "mae",              "acceptable_pct",    "n_test",             "clean_mse",
      "mse_ratio",       "mae_ratio",        "accbl_decrease_pct", "estimated_epsilon", "retained",
      "poison_removed_pct", "clean_removed_pct", "no_kink_found", "fit_seconds",        "defense_seconds",
      "error"};
  return header;
}

void write_report_csv(const std::filesystem::path& path, const std::vector<ReportRow>& rows) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::MissingFile, "cannot write " + path.string());
  const auto& header = report_header();
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << '\n';
  for (const auto& r : rows) {
    const bool done = r.status == CellStatus::Done;
    const std::vector<std::string> cells = {
        r.dataset,
        r.attack,
        fmt(r.epsilon),
        r.regressor,
        r.defense,
        std::to_string(r.seed),
        std::string(to_string(r.status)),
        std::to_string(r.n_train),
        std::to_string(r.n_poison),
        r.hyperparams,
        done ? fmt(r.metrics.mse) : "",
        done ? fmt(r.metrics.mae_original_units) : "",
        done ? fmt(r.metrics.acceptable_rate_pct) : "",
        done ? std::to_string(r.metrics.n_test) : "",
        fmt_opt(r.clean_mse),
        fmt_opt(r.mse_ratio),
        fmt_opt(r.mae_ratio),
        fmt_opt(r.accbl_decrease_pct),
        fmt_opt(r.estimated_epsilon),
        fmt_opt(r.retained),
        fmt_opt(r.poison_removed_pct),
        fmt_opt(r.clean_removed_pct),
        fmt_opt(r.no_kink_found),
        fmt(r.fit_seconds),
        fmt(r.defense_seconds),
        sanitize(r.error),
    };
    for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << cells[i];
    out << '\n';
  }
}

namespace {

std::vector<std::string> split_plain(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

double parse_double(const std::string& s) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    fail(ErrorCode::ConfigInvalid, "report: not a number '" + s + "'");
  }
  return v;
}

std::optional<double> parse_opt(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return parse_double(s);
}

}  // namespace

std::vector<ReportRow> read_report_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::MissingFile, "cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) fail(ErrorCode::ConfigInvalid, path.string() + " is empty");
  const auto header = split_plain(line);
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
  for (const auto& name : report_header()) {
    if (!col.count(name)) fail(ErrorCode::ConfigInvalid, "report is missing column '" + name + "'");
  }
  std::vector<ReportRow> rows;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split_plain(line);
    if (cells.size() != header.size()) fail(ErrorCode::ConfigInvalid, "ragged report row: " + line);
    const auto get = [&](const char* name) -> const std::string& { return cells[col.at(name)]; };
    ReportRow r;
    r.dataset = get("dataset");
    r.attack = get("attack");
    r.epsilon = parse_double(get("epsilon"));
    r.regressor = get("regressor");
    r.defense = get("defense");
    r.seed = std::stoull(get("seed"));
    const auto& status = get("status");
    r.status = status == "done" ? CellStatus::Done : status == "failed" ? CellStatus::Failed : CellStatus::Pending;
    r.n_train = std::stoull(get("n_train"));
    r.n_poison = std::stoull(get("n_poison"));
    r.hyperparams = get("hyperparams");
    if (r.status == CellStatus::Done) {
      r.metrics.mse = parse_double(get("mse"));
      r.metrics.mae_original_units = parse_double(get("mae"));
      r.metrics.acceptable_rate_pct = parse_double(get("acceptable_pct"));
      r.metrics.n_test = std::stoull(get("n_test"));
    }
    r.clean_mse = parse_opt(get("clean_mse"));
    r.mse_ratio = parse_opt(get("mse_ratio"));
    r.mae_ratio = parse_opt(get("mae_ratio"));
    r.accbl_decrease_pct = parse_opt(get("accbl_decrease_pct"));
    r.estimated_epsilon = parse_opt(get("estimated_epsilon"));
    if (const auto v = parse_opt(get("retained"))) r.retained = static_cast<std::size_t>(*v);
    r.poison_removed_pct = parse_opt(get("poison_removed_pct"));
    r.clean_removed_pct = parse_opt(get("clean_removed_pct"));
    if (const auto v = parse_opt(get("no_kink_found"))) r.no_kink_found = *v != 0.0;
    r.fit_seconds = parse_double(get("fit_seconds"));
    r.defense_seconds = parse_double(get("defense_seconds"));
    r.error = get("error");
    rows.push_back(std::move(r));
  }
  return rows;
}

namespace {

template <class T>
void push_unique(std::vector<T>& v, const T& value) {
  if (std::find(v.begin(), v.end(), value) == v.end()) v.push_back(value);
}

FigureSeries attack_curve(const std::vector<ReportRow>& rows) {
  std::vector<std::string> attacks, regressors;
  std::vector<double> epsilons;
  for (const auto& r : rows) {
    if (r.status != CellStatus::Done || r.defense != kNone) continue;
    if (r.attack != kNone) push_unique(attacks, r.attack);
    push_unique(regressors, r.regressor);
    push_unique(epsilons, r.epsilon);
  }
  if (regressors.empty()) fail(ErrorCode::MissingCells, "attack_curve needs undefended cells");
  if (attacks.empty()) attacks.emplace_back(kNone);
  std::sort(epsilons.begin(), epsilons.end());

  FigureSeries out;
  out.header = {"attack", "regressor", "epsilon", "mean_mse", "datasets"};
  for (const auto& attack : attacks) {
    for (const auto& reg : regressors) {
      for (const double eps : epsilons) {
        double sum = 0.0;
        std::size_t count = 0;
        for (const auto& r : rows) {
          if (r.status != CellStatus::Done || r.defense != kNone || r.regressor != reg || r.epsilon != eps) continue;
          if (r.attack != attack && !(eps == 0.0 && r.attack == kNone)) continue;
          sum += r.metrics.mse;
          ++count;
        }
        if (count == 0) continue;
        out.rows.push_back({attack, reg, fmt(eps), fmt(sum / static_cast<double>(count)), std::to_string(count)});
      }
    }
  }
  return out;
}

FigureSeries defense_curve(const std::vector<ReportRow>& rows) {
  std::map<CleanKey, double> clean;
  std::vector<std::string> attacks, defenses, regressors;
  std::vector<double> epsilons;
  for (const auto& r : rows) {
    if (r.status != CellStatus::Done) continue;
    if (r.attack == kNone && r.defense == kNone) clean[{r.dataset, r.regressor}] = r.metrics.mse;
    if (r.attack != kNone) push_unique(attacks, r.attack);
    push_unique(defenses, r.defense);
    push_unique(regressors, r.regressor);
    push_unique(epsilons, r.epsilon);
  }
  if (clean.empty()) fail(ErrorCode::MissingCells, "defense_curve needs clean baseline cells");
  if (attacks.empty()) attacks.emplace_back(kNone);
  std::sort(epsilons.begin(), epsilons.end());

  FigureSeries out;
  out.header = {"attack", "defense", "epsilon", "median_normalized_mse", "regressors"};
  for (const auto& attack : attacks) {
    for (const auto& defense : defenses) {
      for (const double eps : epsilons) {
        std::vector<double> per_regressor;
        for (const auto& reg : regressors) {
          double defended = 0.0, baseline = 0.0;
          std::size_t count = 0;
          for (const auto& r : rows) {
            if (r.status != CellStatus::Done || r.defense != defense || r.regressor != reg || r.epsilon != eps) continue;
            if (r.attack != attack && !(eps == 0.0 && r.attack == kNone)) continue;
            const auto it = clean.find({r.dataset, r.regressor});
            if (it == clean.end()) continue;
            defended += r.metrics.mse;
            baseline += it->second;
            ++count;
          }
          if (count > 0 && baseline > 0.0) per_regressor.push_back(defended / baseline);
        }
        if (per_regressor.empty()) continue;
        out.rows.push_back({attack, defense, fmt(eps), fmt(lower_median(per_regressor)),
                            std::to_string(per_regressor.size())});
      }
    }
  }
  return out;
}

FigureSeries kink_trace(const std::vector<ReportRow>& rows) {
  FigureSeries out;
  out.header = {"dataset", "attack", "epsilon", "regressor", "defense", "epsilon_hat", "train_loss", "test_loss"};
  for (const auto& r : rows) {
    if (r.status != CellStatus::Done) continue;
    for (const auto& t : r.trace) {
      out.rows.push_back({r.dataset, r.attack, fmt(r.epsilon), r.regressor, r.defense, fmt(t.epsilon_hat),
                          fmt(t.train_loss), fmt_opt(t.test_loss)});
    }
  }
  if (out.rows.empty()) fail(ErrorCode::MissingCells, "kink_trace needs defended cells with a loss trace");
  return out;
}

}  // namespace

FigureSeries emit_figure_series(const std::vector<ReportRow>& rows, FigureKind figure) {
  switch (figure) {
    case FigureKind::AttackCurve: return attack_curve(rows);
    case FigureKind::DefenseCurve: return defense_curve(rows);
    case FigureKind::KinkTrace: return kink_trace(rows);
  }
  fail(ErrorCode::InvalidArgument, "unknown figure");
}

void write_figure_csv(const std::filesystem::path& path, const FigureSeries& series) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::MissingFile, "cannot write " + path.string());
  for (std::size_t i = 0; i < series.header.size(); ++i) out << (i ? "," : "") << series.header[i];
  out << '\n';
  for (const auto& row : series.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
    out << '\n';
  }
}

void write_experiment_outputs(const std::filesystem::path& out_dir, const std::vector<ReportRow>& rows) {
  std::filesystem::create_directories(out_dir / "figures");
  std::filesystem::create_directories(out_dir / "cells");
  write_report_csv(out_dir / "report.csv", rows);
  for (const auto figure : {FigureKind::AttackCurve, FigureKind::DefenseCurve, FigureKind::KinkTrace}) {
    try {
      write_figure_csv(out_dir / "figures" / (std::string(to_string(figure)) + ".csv"),
                       emit_figure_series(rows, figure));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::MissingCells) throw;
    }
  }
  for (const auto& r : rows) {
    json audit = r.audit.is_null() ? row_audit(r) : r.audit;
    audit["fit_seconds"] = r.fit_seconds;
    audit["defense_seconds"] = r.defense_seconds;
    write_json_file(out_dir / "cells" / cell_file_name(r), audit);
  }
}

void load_cell_traces(const std::filesystem::path& cells_dir, std::vector<ReportRow>& rows) {
  for (auto& r : rows) {
    const auto path = cells_dir / cell_file_name(r);
    if (!std::filesystem::exists(path)) continue;
    const auto j = read_json_file(path);
    r.trace.clear();
    for (const auto& t : j.value("trace", json::array())) {
      TracePoint p;
      p.epsilon_hat = t.at("epsilon_hat").get<double>();
      p.train_loss = t.at("train_loss").get<double>();
      if (!t.at("test_loss").is_null()) p.test_loss = t.at("test_loss").get<double>();
      r.trace.push_back(p);
    }
  }
}

ScenarioReport warfarin_scenario(const ScenarioConfig& sc) {
  if (!std::filesystem::exists(sc.path)) {
    fail(ErrorCode::DatasetUnavailable, "dosing dataset not found at " + sc.path.string());
  }
  ExperimentConfig config;
  DatasetSource src;
  src.id = "warfarin";
  src.path = sc.path;
  src.target = sc.target;
  config.datasets = {src};
  config.subsample_cap = sc.subsample_cap;
  config.regressors = sc.regressors;
  if (config.regressors.empty()) {
    const auto& all = all_regressor_kinds();
    config.regressors.assign(all.begin(), all.end());
  }
  config.epsilons = {0.0, sc.epsilon};
  config.attacks = {AttackKind::Flip};
  DefenseSpec itrim_spec;
  itrim_spec.id = "itrim";
  itrim_spec.type = DefenseType::ITrim;
  itrim_spec.itrim = sc.itrim;
  config.defenses = {DefenseSpec{std::string(kNone), DefenseType::None, {}, {}, false}, itrim_spec};
  config.seed = sc.seed;
  config.workers = sc.workers;

  const auto rows = run_experiment(config);
  ScenarioReport report;
  report.failed_cells = count_failed(rows);
  const auto find = [&](const std::string& reg, const std::string& attack, const std::string& defense)
      -> const ReportRow* {
    for (const auto& r : rows) {
      if (r.regressor == reg && r.attack == attack && r.defense == defense && r.status == CellStatus::Done &&
          (attack == kNone || r.epsilon == sc.epsilon)) {
        return &r;
      }
    }
    return nullptr;
  };
  std::vector<double> c, p, d, pc, dc, apc, adc;
  for (const auto kind : config.regressors) {
    const std::string reg(to_string(kind));
    const auto* rc = find(reg, std::string(kNone), std::string(kNone));
    const auto* rp = find(reg, "flip", std::string(kNone));
    const auto* rd = find(reg, "flip", "itrim");
    if (!rc || !rp || !rd) continue;
    ScenarioRow row{reg, rc->metrics, rp->metrics, rd->metrics, ratio_report(rc->metrics, rp->metrics, rd->metrics)};
    c.push_back(row.clean.mae_original_units);
    p.push_back(row.poisoned.mae_original_units);
    d.push_back(row.defended.mae_original_units);
    if (row.ratios.mae_pc) pc.push_back(*row.ratios.mae_pc);
    if (row.ratios.mae_dc) dc.push_back(*row.ratios.mae_dc);
    if (row.ratios.accbl_pc) apc.push_back(*row.ratios.accbl_pc);
    if (row.ratios.accbl_dc) adc.push_back(*row.ratios.accbl_dc);
    report.rows.push_back(std::move(row));
  }
  if (report.rows.empty()) fail(ErrorCode::MissingCells, "every scenario cell failed");
  const auto med = [](const std::vector<double>& v) -> std::optional<double> {
    if (v.empty()) return std::nullopt;
    return lower_median(v);
  };
  report.median_mae_clean = lower_median(c);
  report.median_mae_poisoned = lower_median(p);
  report.median_mae_defended = lower_median(d);
  report.median_mae_pc = med(pc);
  report.median_mae_dc = med(dc);
  report.median_accbl_pc = med(apc);
  report.median_accbl_dc = med(adc);
  return report;
}

json to_json(const ScenarioReport& report) {
  const auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  json rows = json::array();
  for (const auto& r : report.rows) {
    rows.push_back({{"regressor", r.regressor},
                    {"clean", r.clean},
                    {"poisoned", r.poisoned},
                    {"defended", r.defended},
                    {"mae_pc", opt(r.ratios.mae_pc)},
                    {"mae_dc", opt(r.ratios.mae_dc)},
                    {"accbl_decrease_pc", opt(r.ratios.accbl_pc)},
                    {"accbl_decrease_dc", opt(r.ratios.accbl_dc)}});
  }
  return json{{"rows", rows},
              {"median",
               {{"mae_clean", report.median_mae_clean},
                {"mae_poisoned", report.median_mae_poisoned},
                {"mae_defended", report.median_mae_defended},
                {"mae_pc", opt(report.median_mae_pc)},
                {"mae_dc", opt(report.median_mae_dc)},
                {"accbl_decrease_pc", opt(report.median_accbl_pc)},
                {"accbl_decrease_dc", opt(report.median_accbl_dc)}}},
              {"failed_cells", report.failed_cells}};
}

}  // namespace regpoison
