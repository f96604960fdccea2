#include "survml/models.hpp"

#include <algorithm>
#include <cmath>

#include "survml/csv.hpp"
#include "survml/losses.hpp"

namespace survml {

const std::vector<Family>& all_families() {
  static const std::vector<Family> families = {Family::Rsf,   Family::Gbsa,          Family::Ssvm,
                                               Family::GbCox, Family::GbAft,         Family::GbRegWeighted,
                                               Family::Horizon};
  return families;
}

std::string family_id(Family f) {
  switch (f) {
    case Family::Rsf: return "rsf";
    case Family::Gbsa: return "gbsa";
    case Family::Ssvm: return "ssvm";
    case Family::GbCox: return "gb_cox";
    case Family::GbAft: return "gb_aft";
    case Family::GbRegWeighted: return "gb_reg_weighted";
    case Family::Horizon: return "horizon";
  }
  return "unknown";
}

std::string family_display_name(Family f) {
  switch (f) {
    case Family::Rsf: return "RSF";
    case Family::Gbsa: return "GBSA";
    case Family::Ssvm: return "SSVM";
    case Family::GbCox: return "GB-Cox";
    case Family::GbAft: return "GB-AFT";
    case Family::GbRegWeighted: return "GB-RegWeighted";
    case Family::Horizon: return "HorizonClassifier";
  }
  return "unknown";
}

Family family_from_id(const std::string& id) {
  for (Family f : all_families()) {
    if (family_id(f) == id) return f;
  }
  throw ConfigError("unknown model family '" + id + "'");
}

bool has_survival_function(Family f) {
  return f == Family::Rsf || f == Family::Gbsa || f == Family::Ssvm;
}

bool reports_td_auc(Family f) { return has_survival_function(f) || f == Family::GbCox; }

std::string param_to_string(const ParamValue& v) {
  if (const auto* s = std::get_if<std::string>(&v)) return *s;
  return csv::format_double(std::get<double>(v));
}

namespace {

ParamMap boosting_defaults() {
  return {{"n_rounds", 100.0},      {"learning_rate", 0.1}, {"max_depth", 3.0},
          {"min_samples_leaf", 5.0}, {"min_child_weight", 1e-3}, {"reg_lambda", 1.0},
          {"min_split_gain", 0.0},  {"subsample", 1.0}};
}

}  // namespace

ParamMap default_params(Family f) {
  switch (f) {
    case Family::Rsf:
      return {{"n_trees", 100.0}, {"mtry", 0.0}, {"max_depth", 8.0}, {"min_samples_leaf", 5.0},
              {"bootstrap", 1.0}};
    case Family::Gbsa:
      return {{"n_rounds", 100.0}, {"learning_rate", 0.1}, {"max_depth", 3.0},
              {"min_samples_leaf", 5.0}, {"subsample", 1.0}};
    case Family::GbCox: return boosting_defaults();
    case Family::GbAft: {
      ParamMap p = boosting_defaults();
      p["distribution"] = std::string("normal");
      p["sigma"] = 1.0;
      return p;
    }
    case Family::GbRegWeighted: {
      ParamMap p = boosting_defaults();
      p["censored_weight"] = 0.5;
      return p;
    }
    case Family::Horizon: {
      ParamMap p = boosting_defaults();
      p["horizon"] = 12.0;
      return p;
    }
    case Family::Ssvm:
      return {{"gamma", 1.0}, {"pair_mode", std::string("nearest")}, {"max_pairs", 0.0},
              {"epochs", 300.0}, {"step_size", 1.0}};
  }
  return {};
}

namespace {

ParamMap resolve_params(Family f, const ParamMap& given) {
  ParamMap p = default_params(f);
  for (const auto& [k, v] : given) {
    auto it = p.find(k);
    if (it == p.end()) {
      throw ConfigError("unknown parameter '" + k + "' for family " + family_id(f));
    }
    if (it->second.index() != v.index()) {
      throw ConfigError("parameter '" + k + "' for family " + family_id(f) + " has the wrong type");
    }
    it->second = v;
  }
  return p;
}

double num(const ParamMap& p, const std::string& key) { return std::get<double>(p.at(key)); }

std::size_t count_param(const ParamMap& p, const std::string& key, double min_value) {
  const double v = num(p, key);
  if (!(v >= min_value) || v != std::floor(v)) {
    throw ConfigError("parameter '" + key + "' must be an integer >= " + csv::format_double(min_value));
  }
  return static_cast<std::size_t>(v);
}

double positive_param(const ParamMap& p, const std::string& key, bool allow_zero) {
  const double v = num(p, key);
  if (!std::isfinite(v) || v < 0.0 || (!allow_zero && v == 0.0)) {
    throw ConfigError("parameter '" + key + "' must be " + (allow_zero ? ">= 0" : "> 0"));
  }
  return v;
}

void check_train(const Cohort& train) {
  if (!train.encoded()) throw DataError("training cohort must be encoded");
  train.validate();
  if (train.size() == 0) throw DataError("training cohort is empty");
}

bool any_event(std::span<const SurvivalTarget> t) {
  return std::any_of(t.begin(), t.end(), [](const SurvivalTarget& s) { return s.event != 0; });
}

FittedModel base_model(Family f, const Cohort& train, ParamMap params, std::uint64_t seed) {
  FittedModel m;
  m.family = f;
  m.params = std::move(params);
  m.seed = seed;
  m.n_features = train.dims();
  m.feature_names = train.column_names();
  m.event_grid = event_times(train.targets);
  m.training_rows = train.size();
  return m;
}

std::vector<double> cohort_weights(const Cohort& c) {
  return c.weights ? *c.weights : std::vector<double>{};
}

BoostParams boost_params(const ParamMap& p, std::uint64_t seed) {
  BoostParams b;
  b.n_rounds = count_param(p, "n_rounds", 0);
  b.learning_rate = positive_param(p, "learning_rate", true);
  b.tree.max_depth = static_cast<int>(count_param(p, "max_depth", 0));
  b.tree.min_samples_leaf = count_param(p, "min_samples_leaf", 1);
  if (p.count("min_child_weight")) b.tree.min_child_weight = positive_param(p, "min_child_weight", true);
  if (p.count("reg_lambda")) b.tree.reg_lambda = positive_param(p, "reg_lambda", true);
  if (p.count("min_split_gain")) b.tree.min_split_gain = positive_param(p, "min_split_gain", true);
  b.subsample = num(p, "subsample");
  if (!(b.subsample > 0.0 && b.subsample <= 1.0)) throw ConfigError("subsample must be in (0, 1]");
  b.seed = derive_seed(seed, "boost");
  return b;
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// Sum of a step function over the grid, walking both in order.
double sum_over_grid(const StepFunction& f, const std::vector<double>& grid) {
  double total = 0.0;
  const auto& times = f.times();
  const auto& values = f.values();
  for (std::size_t k = 0; k < times.size(); ++k) {
    const auto lo = std::lower_bound(grid.begin(), grid.end(), times[k]);
    const auto hi = k + 1 < times.size() ? std::lower_bound(lo, grid.end(), times[k + 1]) : grid.end();
    total += values[k] * static_cast<double>(hi - lo);
  }
  const auto first = times.empty() ? grid.end() : std::lower_bound(grid.begin(), grid.end(), times[0]);
  total += f.before_first() * static_cast<double>(first - grid.begin());
  return total;
}

void check_dims(const FittedModel& m, const Matrix& x) {
  if (x.cols() != m.n_features) {
    throw DataError("expected " + std::to_string(m.n_features) + " features, got " +
                    std::to_string(x.cols()));
  }
}

}  // namespace

FittedModel fit_rsf(const Cohort& train, const ParamMap& given, std::uint64_t seed) {
  check_train(train);
  if (!any_event(train.targets)) throw FitError("rsf: training cohort has no events");
  ParamMap p = resolve_params(Family::Rsf, given);
  const std::size_t n_trees = count_param(p, "n_trees", 1);
  SurvivalTreeParams tp;
  tp.mtry = count_param(p, "mtry", 0);
  tp.max_depth = static_cast<int>(count_param(p, "max_depth", 0));
  tp.min_samples_leaf = count_param(p, "min_samples_leaf", 1);
  const double bootstrap = positive_param(p, "bootstrap", true);

  FittedModel m = base_model(Family::Rsf, train, std::move(p), seed);
  const std::size_t n = train.size();
  RsfForest forest;
  forest.trees.resize(n_trees);
  forest.leaf_chf.resize(n_trees);
  const auto& targets = train.targets;
  parallel_for(n_trees, [&](std::size_t t) {
    Rng rng(derive_seed(seed, "bootstrap", t));
    std::vector<std::size_t> rows;
    if (bootstrap > 0.0) {
      const auto size = static_cast<std::size_t>(
          std::max<long long>(1, std::llround(bootstrap * static_cast<double>(n))));
      rows.resize(size);
      for (auto& r : rows) r = uniform_index(rng, n);
      std::sort(rows.begin(), rows.end());
    } else {
      rows = iota_indices(n);
    }
    bool sample_has_event = false;
    for (std::size_t r : rows) sample_has_event = sample_has_event || targets[r].event;
    Tree tree;
    if (sample_has_event) {
      SurvivalTreeParams local = tp;
      local.seed = derive_seed(seed, "split", t);
      tree = fit_survival_tree(train.features, targets, local, rows);
    } else {
      TreeNode leaf;
      leaf.count = rows.size();
      leaf.members = rows;
      tree.nodes.push_back(std::move(leaf));
    }
    std::vector<StepFunction> chf(tree.nodes.size());
    for (std::size_t k = 0; k < tree.nodes.size(); ++k) {
      auto& node = tree.nodes[k];
      if (!node.is_leaf()) continue;
      std::vector<SurvivalTarget> leaf_targets;
      for (std::size_t r : node.members) leaf_targets.push_back(targets[r]);
      chf[k] = nelson_aalen(leaf_targets);
      node.value = sum_over_grid(chf[k], m.event_grid);
      node.members.clear();
      node.members.shrink_to_fit();
    }
    forest.trees[t] = std::move(tree);
    forest.leaf_chf[t] = std::move(chf);
  });
  m.forest = std::move(forest);
  return m;
}

FittedModel fit_gbsa(const Cohort& train, const ParamMap& given, std::uint64_t seed) {
  check_train(train);
  if (!any_event(train.targets)) throw FitError("gbsa: training cohort has no events");
  ParamMap p = resolve_params(Family::Gbsa, given);
  BoostParams bp = boost_params(p, seed);
  FittedModel m = base_model(Family::Gbsa, train, std::move(p), seed);
  auto loss = make_cox_loss(train.targets, cohort_weights(train), true);
  m.ensemble = boost(train.features, *loss, bp);
  const auto eta = predict_ensemble(*m.ensemble, train.features);
  m.baseline_hazard = breslow_baseline(train.targets, eta);
  return m;
}

FittedModel fit_gb_cox(const Cohort& train, const ParamMap& given, std::uint64_t seed) {
  check_train(train);
  if (!any_event(train.targets)) throw FitError("gb_cox: training cohort has no events");
  ParamMap p = resolve_params(Family::GbCox, given);
  BoostParams bp = boost_params(p, seed);
  FittedModel m = base_model(Family::GbCox, train, std::move(p), seed);
  auto loss = make_cox_loss(train.targets, cohort_weights(train), false);
  m.ensemble = boost(train.features, *loss, bp);
  return m;
}

FittedModel fit_gb_aft(const Cohort& train, const ParamMap& given, std::uint64_t seed) {
  check_train(train);
  ParamMap p = resolve_params(Family::GbAft, given);
  for (const auto& t : train.targets) {
    if (t.time < 0.0 || (t.event && !(t.time > 0.0))) {
      throw DataError("gb_aft: event times must be > 0");
    }
  }
  AftLossConfig cfg;
  const std::string dist = std::get<std::string>(p.at("distribution"));
  if (dist == "normal") {
    cfg.distribution = AftDistribution::Normal;
  } else if (dist == "logistic") {
    cfg.distribution = AftDistribution::Logistic;
  } else {
    throw ConfigError("gb_aft: distribution must be 'normal' or 'logistic'");
  }
  cfg.sigma = positive_param(p, "sigma", false);
  BoostParams bp = boost_params(p, seed);
  FittedModel m = base_model(Family::GbAft, train, std::move(p), seed);
  auto loss = make_aft_loss(train.targets, cohort_weights(train), cfg);
  m.ensemble = boost(train.features, *loss, bp);
  return m;
}

FittedModel fit_gb_reg_weighted(const Cohort& train, const ParamMap& given, std::uint64_t seed) {
  check_train(train);
  ParamMap p = resolve_params(Family::GbRegWeighted, given);
  const double cw = positive_param(p, "censored_weight", true);
  BoostParams bp = boost_params(p, seed);
  FittedModel m = base_model(Family::GbRegWeighted, train, std::move(p), seed);
  std::vector<double> times, weights;
  for (std::size_t i = 0; i < train.size(); ++i) {
    times.push_back(train.targets[i].time);
    const double base = train.weights ? (*train.weights)[i] : 1.0;
    weights.push_back(base * (train.targets[i].event ? 1.0 : cw));
  }
  auto loss = make_squared_loss(std::move(times), std::move(weights));
  m.ensemble = boost(train.features, *loss, bp);
  return m;
}

FittedModel fit_horizon_classifier(const Cohort& train, const ParamMap& given, std::uint64_t seed) {
  check_train(train);
  ParamMap p = resolve_params(Family::Horizon, given);
  const double h = positive_param(p, "horizon", false);
  BoostParams bp = boost_params(p, seed);
  std::vector<std::size_t> kept;
  std::size_t excluded = 0;
  for (std::size_t i = 0; i < train.size(); ++i) {
    const auto& t = train.targets[i];
    if (t.time < h && !t.event) {
      ++excluded;
    } else {
      kept.push_back(i);
    }
  }
  if (kept.empty()) throw FitError("horizon classifier: no subjects retained at horizon " + csv::format_double(h));
  const Cohort sub = train.subset(kept);
  std::vector<int> labels;
  for (const auto& t : sub.targets) labels.push_back(t.event && t.time <= h ? 1 : 0);
  FittedModel m = base_model(Family::Horizon, train, std::move(p), seed);
  m.horizon = h;
  m.excluded = excluded;
  m.training_rows = kept.size();
  auto loss = make_logistic_loss(std::move(labels), cohort_weights(sub));
  m.ensemble = boost(sub.features, *loss, bp);
  return m;
}

std::vector<std::pair<std::size_t, std::size_t>> ssvm_pairs(std::span<const SurvivalTarget> targets,
                                                            const std::string& mode,
                                                            std::size_t max_pairs, std::uint64_t seed) {
  if (mode != "nearest" && mode != "all") throw ConfigError("ssvm: pair_mode must be 'nearest' or 'all'");
  std::vector<std::size_t> order = iota_indices(targets.size());
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return targets[a].time < targets[b].time; });
  std::vector<double> sorted_times;
  for (std::size_t i : order) sorted_times.push_back(targets[i].time);
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t k = 0; k < order.size(); ++k) {
    const std::size_t i = order[k];
    if (!targets[i].event) continue;
    const auto first = static_cast<std::size_t>(
        std::upper_bound(sorted_times.begin(), sorted_times.end(), targets[i].time) - sorted_times.begin());
    if (first == order.size()) continue;
    if (mode == "nearest") {
      pairs.emplace_back(i, order[first]);
    } else {
      for (std::size_t j = first; j < order.size(); ++j) pairs.emplace_back(i, order[j]);
    }
  }
  if (max_pairs > 0 && pairs.size() > max_pairs) {
    std::vector<std::size_t> pick = iota_indices(pairs.size());
    Rng rng(seed);
    shuffle_indices(pick, rng);
    pick.resize(max_pairs);
    std::sort(pick.begin(), pick.end());
    std::vector<std::pair<std::size_t, std::size_t>> kept;
    for (std::size_t k : pick) kept.push_back(pairs[k]);
    pairs = std::move(kept);
  }
  return pairs;
}

FittedModel fit_ssvm(const Cohort& train, const ParamMap& given, std::uint64_t seed) {
  check_train(train);
  ParamMap p = resolve_params(Family::Ssvm, given);
  const double gamma = positive_param(p, "gamma", true);
  const std::string mode = std::get<std::string>(p.at("pair_mode"));
  const std::size_t max_pairs = count_param(p, "max_pairs", 0);
  const std::size_t epochs = count_param(p, "epochs", 0);
  const double step0 = positive_param(p, "step_size", false);
  const auto pairs = ssvm_pairs(train.targets, mode, max_pairs, derive_seed(seed, "pairs"));
  if (pairs.empty()) throw FitError("ssvm: no comparable pairs");

  const std::size_t d = train.dims();
  Matrix diff(pairs.size(), d);
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const auto xi = train.features.row(pairs[k].first);
    const auto xj = train.features.row(pairs[k].second);
    for (std::size_t c = 0; c < d; ++c) diff(k, c) = xi[c] - xj[c];
  }
  auto objective = [&](const std::vector<double>& w, std::vector<double>* grad) {
    double value = 0.0;
    for (double v : w) value += 0.5 * v * v;
    if (grad) *grad = w;
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      const auto row = diff.row(k);
      double margin = 1.0;
      for (std::size_t c = 0; c < d; ++c) margin -= w[c] * row[c];
      if (margin <= 0.0) continue;
      value += gamma * margin * margin;
      if (grad) {
        for (std::size_t c = 0; c < d; ++c) (*grad)[c] -= 2.0 * gamma * margin * row[c];
      }
    }
    return value;
  };

  std::vector<double> w(d, 0.0), g, trial(d);
  double f = objective(w, &g);
  double step = step0;
  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    double gnorm2 = 0.0;
    for (double v : g) gnorm2 += v * v;
    if (gnorm2 < 1e-20) break;
    double f_new = 0.0;
    int halvings = 0;
    while (true) {
      for (std::size_t c = 0; c < d; ++c) trial[c] = w[c] - step * g[c];
      f_new = objective(trial, nullptr);
      if (f_new <= f - 0.5 * step * gnorm2 || halvings >= 60) break;
      step *= 0.5;
      ++halvings;
    }
    if (!(f_new <= f)) break;
    w = trial;
    f = objective(w, &g);
    step = std::min(step * 2.0, step0);
  }
  for (double v : w) {
    if (!std::isfinite(v)) throw FitError("ssvm: weights diverged");
  }

  FittedModel m = base_model(Family::Ssvm, train, std::move(p), seed);
  SsvmModel s;
  s.weights = w;
  s.n_pairs = pairs.size();
  std::vector<double> scores(train.size());
  for (std::size_t i = 0; i < train.size(); ++i) {
    const auto x = train.features.row(i);
    double v = 0.0;
    for (std::size_t c = 0; c < d; ++c) v += w[c] * x[c];
    scores[i] = v;
  }
  try {
    s.calibration = cox_calibrate(scores, train.targets);
  } catch (const Error& e) {
    s.calibration_error = e.what();
    warn(std::string("ssvm: survival curves unavailable: ") + e.what());
  }
  m.ssvm = std::move(s);
  return m;
}

FittedModel fit_model(Family family, const Cohort& train, const ParamMap& params, std::uint64_t seed) {
  switch (family) {
    case Family::Rsf: return fit_rsf(train, params, seed);
    case Family::Gbsa: return fit_gbsa(train, params, seed);
    case Family::Ssvm: return fit_ssvm(train, params, seed);
    case Family::GbCox: return fit_gb_cox(train, params, seed);
    case Family::GbAft: return fit_gb_aft(train, params, seed);
    case Family::GbRegWeighted: return fit_gb_reg_weighted(train, params, seed);
    case Family::Horizon: return fit_horizon_classifier(train, params, seed);
  }
  throw ConfigError("unknown family");
}

std::vector<double> predict_risk(const FittedModel& m, const Matrix& x) {
  check_dims(m, x);
  for (double v : x.data()) {
    if (!std::isfinite(v)) throw DataError("predict: non-finite feature value");
  }
  std::vector<double> out(x.rows());
  switch (m.family) {
    case Family::Rsf: {
      const auto& f = *m.forest;
      for (std::size_t i = 0; i < x.rows(); ++i) {
        double s = 0.0;
        for (const auto& t : f.trees) s += t.predict(x.row(i));
        out[i] = s / static_cast<double>(f.trees.size());
      }
      return out;
    }
    case Family::Gbsa:
    case Family::GbCox: return predict_ensemble(*m.ensemble, x);
    case Family::GbAft:
    case Family::GbRegWeighted: {
      out = predict_ensemble(*m.ensemble, x);
      for (double& v : out) v = -v;
      return out;
    }
    case Family::Horizon: return predict_horizon_probability(m, x);
    case Family::Ssvm: {
      const auto& w = m.ssvm->weights;
      for (std::size_t i = 0; i < x.rows(); ++i) {
        const auto row = x.row(i);
        double v = 0.0;
        for (std::size_t c = 0; c < w.size(); ++c) v += w[c] * row[c];
        out[i] = v;
      }
      return out;
    }
  }
  return out;
}

std::vector<double> predict_horizon_probability(const FittedModel& m, const Matrix& x) {
  if (m.family != Family::Horizon) throw ConfigError("model is not a horizon classifier");
  check_dims(m, x);
  auto f = predict_ensemble(*m.ensemble, x);
  for (double& v : f) v = sigmoid(v);
  return f;
}

std::vector<StepFunction> predict_curves(const FittedModel& m, const Matrix& x) {
  if (!has_survival_function(m.family)) throw NoSurvivalFunction(family_display_name(m.family));
  if (m.family == Family::Ssvm && !m.ssvm->calibration) {
    throw NoSurvivalFunction("SSVM calibration failed (" + m.ssvm->calibration_error + ")");
  }
  check_dims(m, x);
  std::vector<StepFunction> curves;
  curves.reserve(x.rows());
  if (m.family == Family::Rsf) {
    const auto& f = *m.forest;
    const auto& grid = m.event_grid;
    std::vector<double> acc(grid.size());
    for (std::size_t i = 0; i < x.rows(); ++i) {
      std::fill(acc.begin(), acc.end(), 0.0);
      for (std::size_t t = 0; t < f.trees.size(); ++t) {
        const StepFunction& chf = f.leaf_chf[t][f.trees[t].leaf_index(x.row(i))];
        const auto& times = chf.times();
        const auto& values = chf.values();
        std::size_t k = 0;
        double current = chf.before_first();
        for (std::size_t g = 0; g < grid.size(); ++g) {
          while (k < times.size() && times[k] <= grid[g]) current = values[k++];
          acc[g] += current;
        }
      }
      std::vector<double> s(grid.size());
      for (std::size_t g = 0; g < grid.size(); ++g) {
        s[g] = std::exp(-acc[g] / static_cast<double>(f.trees.size()));
      }
      curves.emplace_back(grid, std::move(s), 1.0);
    }
    return curves;
  }
  if (m.family == Family::Gbsa) {
    const auto eta = predict_ensemble(*m.ensemble, x);
    for (double e : eta) curves.push_back(subject_survival(*m.baseline_hazard, e));
    return curves;
  }
  const auto scores = predict_risk(m, x);
  const auto& cal = *m.ssvm->calibration;
  for (double s : scores) curves.push_back(subject_survival(cal.baseline, cal.beta * s));
  return curves;
}

Matrix survival_on_grid(const FittedModel& m, const Matrix& x, const TimeGrid& grid) {
  const auto curves = predict_curves(m, x);
  Matrix out(x.rows(), grid.times.size());
  for (std::size_t i = 0; i < curves.size(); ++i) {
    for (std::size_t k = 0; k < grid.times.size(); ++k) out(i, k) = curves[i](grid.times[k]);
  }
  return out;
}

}  // namespace survml
