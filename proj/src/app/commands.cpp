#include "survml/app.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <iostream>

#include <CLI11.hpp>

#include "survml/csv.hpp"
#include "survml/data.hpp"
#include "survml/estimators.hpp"
#include "survml/explain.hpp"
#include "survml/hpo.hpp"
#include "survml/metrics.hpp"
#include "survml/preprocess.hpp"
#include "survml/serialize.hpp"

namespace survml::app {

namespace fs = std::filesystem;

namespace {

const char* const kDefaultFamilies = "rsf,gbsa,ssvm,gb_cox,gb_aft,gb_reg_weighted,horizon";

std::uint64_t parse_seed(const std::string& text) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw ConfigError("seed must be a non-negative integer, got '" + text + "'");
  }
  return v;
}

std::string fixed4(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

std::string horizon_label(double h) { return csv::format_double(h); }

Cohort load_cohort(const fs::path& path, const char* what) {
  if (!fs::exists(path)) {
    throw DataError(std::string(what) + " cohort not found at " + path.string() + " (run prep first)");
  }
  return read_cohort_csv(path);
}

fs::path train_path(const RunConfig& cfg) {
  return cfg.values.get_or("train", (cfg.prep_dir() / "train.csv").string());
}

fs::path test_path(const RunConfig& cfg) {
  return cfg.values.get_or("test", (cfg.prep_dir() / "test.csv").string());
}

// Value of a params.<family>.<name> entry: a number when it parses as one.
ParamValue parse_param_value(const std::string& text) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec == std::errc{} && ptr == text.data() + text.size()) return v;
  return text;
}

ParamMap configured_params(const RunConfig& cfg, Family f, const Json* winners) {
  ParamMap p;
  const std::string id = family_id(f);
  if (winners && winners->contains(id)) p = params_from_json(winners->at(id).at("params"));
  for (const auto& [k, v] : cfg.values.with_prefix("params." + id + ".")) p[k] = parse_param_value(v);
  return p;
}

SearchSpace configured_space(const RunConfig& cfg, Family f) {
  SearchSpace space = default_space(f);
  for (const auto& [name, text] : cfg.values.with_prefix("space." + family_id(f) + ".")) {
    ParamSpec spec = parse_param_spec(name, text);
    auto it = std::find_if(space.begin(), space.end(), [&](const ParamSpec& s) { return s.name == name; });
    if (it != space.end()) {
      *it = std::move(spec);
    } else {
      space.push_back(std::move(spec));
    }
  }
  return space;
}

std::vector<double> horizons(const RunConfig& cfg) {
  std::vector<double> out;
  for (const auto& s : cfg.values.get_list("horizons")) {
    const ParamValue v = parse_param_value(s);
    if (!std::holds_alternative<double>(v) || !(std::get<double>(v) > 0.0)) {
      throw ConfigError("horizons must be positive numbers, got '" + s + "'");
    }
    out.push_back(std::get<double>(v));
  }
  if (out.empty()) out = {12.0, 36.0, 60.0};
  return out;
}

// Log-time losses cannot take a death at time zero; such times are raised to
// the configured floor (half a day by default) for the AFT family only.
Cohort training_view(const RunConfig& cfg, const Cohort& train, Family f) {
  if (f != Family::GbAft) return train;
  const double dpm = cfg.values.get_double("target.days_per_month", kDaysPerMonth);
  const double floor = cfg.values.get_double("aft.time_floor", 0.5 / dpm);
  if (!(floor > 0.0)) throw ConfigError("aft.time_floor must be > 0");
  Cohort out = train;
  std::size_t raised = 0;
  for (auto& t : out.targets) {
    if (t.event && t.time < floor) {
      t.time = floor;
      ++raised;
    }
  }
  if (raised > 0) warn("gb_aft: " + std::to_string(raised) + " event times raised to " + csv::format_double(floor));
  return out;
}

}  // namespace

RunConfig RunConfig::from(const KeyValueConfig& values) {
  RunConfig cfg;
  cfg.values = values;
  if (auto s = values.get("seed")) cfg.seed = parse_seed(*s);
  cfg.out = values.get_or("out", "out");
  std::vector<std::string> ids = values.get_list("families");
  if (!values.contains("families")) ids = split_list(kDefaultFamilies);
  if (ids.empty()) throw ConfigError("no model families configured");
  for (const auto& id : ids) {
    const Family f = family_from_id(id);
    if (std::find(cfg.families.begin(), cfg.families.end(), f) == cfg.families.end()) cfg.families.push_back(f);
  }
  return cfg;
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return 2;
  if (dynamic_cast<const DataError*>(&e)) return 3;
  if (dynamic_cast<const FitError*>(&e)) return 4;
  return 1;
}

// ------------------------------------------------------------------ prep

void cmd_prep(const RunConfig& cfg) {
  const fs::path input = cfg.values.require("input");
  const CsvSchema schema = CsvSchema::from_config(cfg.values);
  auto records = ingest_csv(input, schema);
  FilterResult filtered = apply_filters(std::move(records), FilterRules::from_config(cfg.values));
  FilterReport report = filtered.report;
  records = drop_incomplete(std::move(filtered.records), schema, report);
  report.final = records.size();

  TargetConfig tc;
  tc.days_per_month = cfg.values.get_double("target.days_per_month", kDaysPerMonth);
  if (cfg.values.contains("target.death_codes")) tc.death_codes = cfg.values.get_list("target.death_codes");
  const Cohort cohort = assemble_cohort(records, schema, tc);
  if (cohort.size() < 2) throw DataError("fewer than two records survive the filters");

  const double test_fraction = cfg.values.get_double("split.test_fraction", 0.2);
  const bool stratify = cfg.values.get_bool("split.stratify", true);
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw ConfigError("split.test_fraction must be in (0, 1)");
  const TrainTest tt = split(cohort, test_fraction, stratify, derive_seed(cfg.seed, "split"));
  const EncoderState encoder = fit_encoder(tt.train, schema.category_orders);
  const Cohort train = transform(encoder, tt.train);
  const Cohort test = transform(encoder, tt.test);

  const fs::path dir = cfg.prep_dir();
  write_text_atomic(dir / "train.csv", write_cohort_csv(train));
  write_text_atomic(dir / "test.csv", write_cohort_csv(test));
  write_text_atomic(dir / "filter_report.json", dump_json(filter_report_to_json(report)));
  write_text_atomic(dir / "encoder.json", dump_json(encoder_to_json(encoder)));

  auto events = [](const Cohort& c) {
    return std::count_if(c.targets.begin(), c.targets.end(), [](const SurvivalTarget& t) { return t.event; });
  };
  Json meta{{"seed", cfg.seed},
            {"test_fraction", test_fraction},
            {"train_fraction", 1.0 - test_fraction},
            {"stratified_split", stratify},
            {"days_per_month", tc.days_per_month},
            {"n_records_after_filters", cohort.size()},
            {"n_train", train.size()},
            {"n_test", test.size()},
            {"events_train", events(train)},
            {"events_test", events(test)},
            {"columns", train.column_names()},
            {"lexicographic_fallbacks", encoder.lexicographic_fallbacks()}};
  write_text_atomic(dir / "prep_meta.json", dump_json(meta));
  std::cout << "prep: " << report.initial << " records, " << report.final << " retained; train " << train.size()
            << ", test " << test.size() << "\n";
}

// ----------------------------------------------------------------- synth

void cmd_synth(const RunConfig& cfg) {
  const std::string kind = cfg.values.get_or("synth.kind", "cohort");
  const long long n = cfg.values.get_int("synth.n", 1000);
  if (n < 2) throw ConfigError("synth.n must be >= 2");
  const std::uint64_t seed = derive_seed(cfg.seed, "synth");
  if (kind == "registry") {
    const auto records = synth_registry(static_cast<std::size_t>(n), seed);
    write_text_atomic(cfg.synth_dir() / "registry.csv", write_raw_csv(records, CsvSchema::from_config(cfg.values)));
    std::cout << "synth: wrote " << n << " registry records\n";
    return;
  }
  if (kind != "cohort") throw ConfigError("synth.kind must be 'cohort' or 'registry'");
  SynthConfig sc;
  sc.n = static_cast<std::size_t>(n);
  sc.d = static_cast<std::size_t>(cfg.values.get_int("synth.d", 5));
  const std::string model = cfg.values.get_or("synth.model", "ph");
  if (model == "ph") {
    sc.model = SynthModel::ProportionalHazards;
  } else if (model == "aft") {
    sc.model = SynthModel::LognormalAft;
  } else {
    throw ConfigError("synth.model must be 'ph' or 'aft'");
  }
  for (const auto& b : cfg.values.get_list("synth.beta")) {
    const ParamValue v = parse_param_value(b);
    if (!std::holds_alternative<double>(v)) throw ConfigError("synth.beta must be numeric");
    sc.beta.push_back(std::get<double>(v));
  }
  sc.censor_rate = cfg.values.get_double("synth.censor_rate", 0.3);
  sc.noise_sd = cfg.values.get_double("synth.noise_sd", 1.0);
  sc.seed = seed;
  const SynthCohort s = synth_cohort(sc);
  write_text_atomic(cfg.synth_dir() / "cohort.csv", write_cohort_csv(s.cohort));
  std::cout << "synth: wrote " << n << " synthetic subjects\n";
}

// ------------------------------------------------------------------- hpo

void cmd_hpo(const RunConfig& cfg) {
  const Cohort train = load_cohort(train_path(cfg), "training");
  const std::string sampler_text = cfg.values.get_or("sampler", "all");
  std::vector<SamplerId> samplers;
  if (sampler_text == "all") {
    samplers = {SamplerId::Random, SamplerId::Tpe, SamplerId::CmaEs};
  } else {
    for (const auto& s : split_list(sampler_text)) samplers.push_back(sampler_from_name(s));
  }
  const long long n_trials = cfg.values.get_int("trials", 150);
  const long long k_folds = cfg.values.get_int("folds", 10);
  if (n_trials < 1) throw ConfigError("trials must be >= 1");
  if (k_folds < 2) throw ConfigError("folds must be >= 2");
  StudyOptions base;
  base.stratified = cfg.values.get_bool("hpo.stratified", true);
  const std::string objective = cfg.values.get_or("hpo.objective", "harrell_c");
  if (objective != "harrell_c" && objective != "ipcw_c") throw ConfigError("hpo.objective must be harrell_c or ipcw_c");
  base.ipcw_objective = objective == "ipcw_c";
  const bool resume = cfg.values.get_bool("hpo.resume", true);

  Json winners = Json::object();
  Json failures = Json::object();
  for (Family f : cfg.families) {
    const std::string id = family_id(f);
    const SearchSpace space = configured_space(cfg, f);
    std::optional<Study> best_study;
    for (SamplerId s : samplers) {
      const fs::path path = cfg.hpo_dir() / "studies" / (id + "_" + sampler_name(s) + ".json");
      StudyOptions opts = base;
      if (resume && fs::exists(path)) opts.resume = study_from_json(read_json(path));
      try {
        Study study = run_study(training_view(cfg, train, f), f, space, s, static_cast<std::size_t>(n_trials),
                                static_cast<std::size_t>(k_folds),
                                derive_seed(cfg.seed, "hpo/" + id + "/" + sampler_name(s)), opts);
        write_text_atomic(path, dump_json(study_to_json(study)));
        const double v = *study.trials[*study.best_index()].value;
        if (!best_study || v > *best_study->trials[*best_study->best_index()].value) best_study = std::move(study);
        std::cout << "hpo: " << id << "/" << sampler_name(s) << " best " << fixed4(v) << "\n";
      } catch (const FitError& e) {
        failures[id + "/" + sampler_name(s)] = e.what();
        std::cerr << "hpo: " << id << "/" << sampler_name(s) << " failed: " << e.what() << "\n";
      }
    }
    if (best_study) {
      const Trial& t = best_study->trials[*best_study->best_index()];
      winners[id] = Json{{"sampler", sampler_name(best_study->sampler)},
                         {"value", *t.value},
                         {"trial", t.index},
                         {"params", params_to_json(t.params)}};
    }
  }
  if (winners.empty()) throw FitError("every study failed");
  Json out{{"n_trials", n_trials},     {"k_folds", k_folds},     {"stratified_folds", base.stratified},
           {"objective", objective},   {"winners", std::move(winners)}, {"failures", std::move(failures)}};
  write_text_atomic(cfg.hpo_dir() / "winners.json", dump_json(out));
}

// ------------------------------------------------------------ train-eval

void cmd_train_eval(const RunConfig& cfg) {
  const Cohort train = load_cohort(train_path(cfg), "training");
  const Cohort test = load_cohort(test_path(cfg), "test");
  if (train.dims() != test.dims()) throw DataError("train and test cohorts have different columns");

  std::optional<Json> winners;
  const fs::path winners_path = cfg.values.get_or("hpo.winners", (cfg.hpo_dir() / "winners.json").string());
  if (cfg.values.get_bool("use_winners", true) && fs::exists(winners_path)) {
    winners = read_json(winners_path).at("winners");
  }
  const Json* w = winners ? &*winners : nullptr;

  const StepFunction g = censoring_survival(train.targets);
  double tau = default_tau(train.targets, g);
  if (cfg.values.contains("metrics.tau")) tau = std::min(tau, cfg.values.get_double("metrics.tau", tau));
  const auto grid_points = static_cast<std::size_t>(cfg.values.get_int("metrics.grid_points", 100));
  const TimeGrid grid = make_time_grid(test.targets, g, grid_points);

  const auto curve_points = static_cast<std::size_t>(cfg.values.get_int("curves.points", 121));
  if (curve_points < 2) throw ConfigError("curves.points must be >= 2");
  double t_max = 0.0;
  for (const auto& t : test.targets) t_max = std::max(t_max, t.time);
  std::vector<double> curve_times(curve_points);
  for (std::size_t k = 0; k < curve_points; ++k) {
    curve_times[k] = t_max * static_cast<double>(k) / static_cast<double>(curve_points - 1);
  }
  const StepFunction km = kaplan_meier(test.targets);
  std::vector<std::pair<std::string, std::vector<double>>> mean_curves;

  const fs::path dir = cfg.train_eval_dir();
  Json rows = Json::array();
  Json failures = Json::object();
  Json horizon_rows = Json::array();
  std::string comparison = "model,c_index,c_index_ipcw,ibs,mean_td_auc\n";
  std::string horizon_csv =
      "horizon,kaplan_meier,classifier_survival_fraction,classifier_mean_survival,excluded_train,excluded_fraction\n";
  std::size_t fitted = 0;

  for (Family f : cfg.families) {
    const std::string id = family_id(f);
    const ParamMap params = configured_params(cfg, f, w);
    if (f == Family::Horizon) {
      for (double h : horizons(cfg)) {
        const std::string label = "horizon_" + horizon_label(h);
        try {
          ParamMap p = params;
          p["horizon"] = h;
          const FittedModel m = fit_horizon_classifier(train, p, derive_seed(cfg.seed, "fit/horizon/" + horizon_label(h)));
          save_model(dir / "models" / (label + ".json"), m);
          const auto prob = predict_horizon_probability(m, test.features);
          double surv_frac = 0.0, mean_surv = 0.0;
          for (double q : prob) {
            surv_frac += q < 0.5 ? 1.0 : 0.0;
            mean_surv += 1.0 - q;
          }
          surv_frac /= static_cast<double>(prob.size());
          mean_surv /= static_cast<double>(prob.size());
          const double excluded_fraction = static_cast<double>(m.excluded) / static_cast<double>(train.size());
          horizon_rows.push_back(Json{{"horizon", h},
                                      {"kaplan_meier", km(h)},
                                      {"classifier_survival_fraction", surv_frac},
                                      {"classifier_mean_survival", mean_surv},
                                      {"excluded_train", m.excluded},
                                      {"excluded_fraction", excluded_fraction}});
          horizon_csv += csv::join_row({horizon_label(h), fixed4(km(h)), fixed4(surv_frac), fixed4(mean_surv),
                                        std::to_string(m.excluded), fixed4(excluded_fraction)}) + "\n";
          ++fitted;
        } catch (const Error& e) {
          failures[label] = e.what();
          std::cerr << "train-eval: " << label << " failed: " << e.what() << "\n";
        }
      }
      continue;
    }
    try {
      const FittedModel m = fit_model(f, training_view(cfg, train, f), params, derive_seed(cfg.seed, "fit/" + id));
      save_model(dir / "models" / (id + ".json"), m);
      const auto risk = predict_risk(m, test.features);
      Json row{{"family", id}, {"model", family_display_name(f)}};
      row["c_index"] = harrell_c(test.targets, risk).c_index;
      row["c_index_ipcw"] = ipcw_c(test.targets, risk, g, tau).c_index;
      if (has_survival_function(f)) {
        try {
          const auto curves = predict_curves(m, test.features);
          row["ibs"] = ibs(grid, curves, test.targets, g);
          std::vector<double> mean(curve_times.size(), 0.0);
          for (const auto& c : curves) {
            for (std::size_t k = 0; k < curve_times.size(); ++k) mean[k] += c(curve_times[k]);
          }
          for (double& v : mean) v /= static_cast<double>(curves.size());
          mean_curves.emplace_back(family_display_name(f), std::move(mean));
        } catch (const NoSurvivalFunction& e) {
          std::cerr << "train-eval: " << id << ": " << e.what() << "\n";
        }
      }
      if (reports_td_auc(f)) {
        const TdAucResult auc = td_auc(test.targets, risk, grid, g);
        row["mean_td_auc"] = auc.mean;
        row["endpoint_mean_td_auc"] = auc.endpoint_mean;
        Json per_time = Json::array();
        for (std::size_t k = 0; k < auc.times.size(); ++k) {
          per_time.push_back(Json{{"time", auc.times[k]}, {"auc", auc.values[k]}});
        }
        row["per_time_auc"] = std::move(per_time);
      }
      auto field = [&](const char* key) { return row.contains(key) ? fixed4(row[key].get<double>()) : std::string(); };
      comparison += csv::join_row({family_display_name(f), field("c_index"), field("c_index_ipcw"), field("ibs"),
                                   field("mean_td_auc")}) + "\n";
      rows.push_back(std::move(row));
      ++fitted;
      std::cout << "train-eval: " << id << " done\n";
    } catch (const Error& e) {
      failures[id] = e.what();
      std::cerr << "train-eval: " << id << " failed: " << e.what() << "\n";
    }
  }
  if (fitted == 0) throw FitError("every model family failed to train");

  std::string curves_csv = "time,Kaplan-Meier";
  for (const auto& [name, _] : mean_curves) curves_csv += "," + name;
  curves_csv += "\n";
  for (std::size_t k = 0; k < curve_times.size(); ++k) {
    std::vector<std::string> fields = {csv::format_double(curve_times[k]), csv::format_double(km(curve_times[k]))};
    for (const auto& [_, values] : mean_curves) fields.push_back(csv::format_double(values[k]));
    curves_csv += csv::join_row(fields) + "\n";
  }

  Json metrics{{"seed", cfg.seed},
               {"n_train", train.size()},
               {"n_test", test.size()},
               {"tau", tau},
               {"grid", Json{{"points", grid.times.size()}, {"start", grid.times.front()}, {"end", grid.times.back()}}},
               {"models", std::move(rows)},
               {"horizon_classifiers", std::move(horizon_rows)},
               {"failures", std::move(failures)}};
  write_text_atomic(dir / "metrics.json", dump_json(metrics));
  write_text_atomic(dir / "comparison.csv", comparison);
  write_text_atomic(dir / "curves.csv", curves_csv);
  if (std::find(cfg.families.begin(), cfg.families.end(), Family::Horizon) != cfg.families.end()) {
    write_text_atomic(dir / "horizons.csv", horizon_csv);
  }
}

// --------------------------------------------------------------- explain

void cmd_explain(const RunConfig& cfg) {
  std::string name = cfg.values.get_or("explain.model", "");
  if (name.empty() && cfg.values.contains("model")) name = fs::path(*cfg.values.get("model")).stem().string();
  if (name.empty()) {
    const Family first = cfg.families.front();
    name = first == Family::Horizon ? "horizon_12" : family_id(first);
  }
  const fs::path model_path = cfg.values.get_or("model", (cfg.train_eval_dir() / "models" / (name + ".json")).string());
  if (!fs::exists(model_path)) throw DataError("model file not found: " + model_path.string());
  const FittedModel model = load_model(model_path);

  const Cohort train = load_cohort(train_path(cfg), "training");
  const std::string on = cfg.values.get_or("explain.on", "validation");
  Cohort eval;
  if (on == "validation") {
    eval = load_cohort(test_path(cfg), "test");
  } else if (on == "train") {
    eval = train;
  } else {
    throw ConfigError("explain.on must be 'validation' or 'train'");
  }
  if (eval.dims() != model.n_features) throw DataError("evaluation cohort does not match the model's features");
  const RiskFunction risk = risk_function(model);

  PermutationOptions pi;
  pi.n_repeats = static_cast<std::size_t>(cfg.values.get_int("explain.repeats", 5));
  pi.seed = derive_seed(cfg.seed, "explain/" + name + "/pi");
  const std::string metric = cfg.values.get_or("explain.metric", "harrell_c");
  if (metric == "ipcw_c") {
    pi.metric = ImportanceMetric::IpcwC;
  } else if (metric != "harrell_c") {
    throw ConfigError("explain.metric must be harrell_c or ipcw_c");
  }
  const ImportanceReport pi_report = permutation_importance(risk, eval, pi);

  ShapleyOptions so;
  const std::string mode = cfg.values.get_or("explain.shap_mode", "auto");
  if (mode == "exact" || (mode == "auto" && eval.dims() <= kMaxExactShapleyDims)) {
    so.mode = ShapleyMode::Exact;
  } else if (mode == "montecarlo" || mode == "auto") {
    so.mode = ShapleyMode::MonteCarlo;
  } else {
    throw ConfigError("explain.shap_mode must be auto, exact or montecarlo");
  }
  so.n_permutations = static_cast<std::size_t>(cfg.values.get_int("explain.permutations", 200));
  so.seed = derive_seed(cfg.seed, "explain/" + name + "/shap");
  const Matrix background = background_sample(
      train.features, static_cast<std::size_t>(cfg.values.get_int("explain.background", 100)),
      derive_seed(cfg.seed, "explain/" + name + "/background"));
  const auto samples = std::min<std::size_t>(static_cast<std::size_t>(cfg.values.get_int("explain.samples", 50)),
                                             eval.size());
  const ImportanceReport shap = global_attribution(risk, eval, background, samples, so);

  write_text_atomic(cfg.explain_dir() / (name + "_permutation_importance.csv"), importance_csv(pi_report));
  write_text_atomic(cfg.explain_dir() / (name + "_shap_global.csv"), importance_csv(shap));
  std::cout << "explain: " << name << " top feature " << shap.features[shap.ranking().front()] << "\n";
}

// ------------------------------------------------------------------ main

int run(int argc, char** argv) {
  CLI::App cli{"Survival analysis toolkit: data preparation, model training, tuning and attribution"};
  cli.require_subcommand(1);
  struct Flags {
    std::string config, seed, out, families, sampler, trials, folds, input, model, kind;
  } flags;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", flags.config, "flat key = value configuration file");
    sub->add_option("--seed", flags.seed, "master seed");
    sub->add_option("--out", flags.out, "output directory");
    sub->add_option("--families", flags.families, "comma-separated model families");
    sub->add_option("--sampler", flags.sampler, "random, tpe, cmaes or all");
    sub->add_option("--trials", flags.trials, "trials per study");
    sub->add_option("--folds", flags.folds, "cross-validation folds");
  };
  CLI::App* prep = cli.add_subcommand("prep", "filter, encode and split a registry CSV");
  CLI::App* synth = cli.add_subcommand("synth", "write a synthetic cohort or registry CSV");
  CLI::App* hpo = cli.add_subcommand("hpo", "cross-validated hyperparameter search");
  CLI::App* train_eval = cli.add_subcommand("train-eval", "train every family and evaluate on the test split");
  CLI::App* explain = cli.add_subcommand("explain", "permutation importance and Shapley attribution");
  for (CLI::App* sub : {prep, synth, hpo, train_eval, explain}) add_common(sub);
  prep->add_option("--input", flags.input, "registry CSV");
  synth->add_option("--kind", flags.kind, "cohort or registry");
  explain->add_option("--model", flags.model, "saved model file");

  try {
    cli.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = cli.exit(e);
    return rc == 0 ? 0 : 2;
  }

  set_warning_sink([](std::string_view msg) { std::cerr << "warning: " << msg << "\n"; });
  try {
    KeyValueConfig values = flags.config.empty() ? KeyValueConfig{} : KeyValueConfig::load(flags.config);
    const std::pair<const char*, const std::string*> overrides[] = {
        {"seed", &flags.seed},       {"out", &flags.out},     {"families", &flags.families},
        {"sampler", &flags.sampler}, {"trials", &flags.trials}, {"folds", &flags.folds},
        {"input", &flags.input},     {"model", &flags.model}, {"synth.kind", &flags.kind}};
    for (const auto& [key, value] : overrides) {
      if (!value->empty()) values.set(key, *value);
    }
    const RunConfig cfg = RunConfig::from(values);
    if (prep->parsed()) cmd_prep(cfg);
    if (synth->parsed()) cmd_synth(cfg);
    if (hpo->parsed()) cmd_hpo(cfg);
    if (train_eval->parsed()) cmd_train_eval(cfg);
    if (explain->parsed()) cmd_explain(cfg);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
  return 0;
}

}  // namespace survml::app
