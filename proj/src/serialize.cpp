#include "survml/serialize.hpp"

#include <fstream>
#include <sstream>

namespace survml {

std::string dump_json(const Json& j) { return j.dump(2) + "\n"; }

Json read_json(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return Json::parse(ss.str());
  } catch (const Json::exception& e) {
    throw DataError("invalid JSON in " + path.string() + ": " + e.what());
  }
}

void write_text_atomic(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << content;
    if (!out.flush()) throw Error("cannot write " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

namespace {

// Converts nlohmann access errors into DataError with context.
template <typename F>
auto guarded(const std::string& what, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Json::exception& e) {
    throw DataError("malformed " + what + ": " + e.what());
  }
}

}  // namespace

Json params_to_json(const ParamMap& params) {
  Json j = Json::object();
  for (const auto& [k, v] : params) {
    if (const auto* s = std::get_if<std::string>(&v)) {
      j[k] = *s;
    } else {
      j[k] = std::get<double>(v);
    }
  }
  return j;
}

ParamMap params_from_json(const Json& j) {
  ParamMap out;
  for (const auto& [k, v] : j.items()) {
    if (v.is_string()) {
      out[k] = v.get<std::string>();
    } else if (v.is_number()) {
      out[k] = v.get<double>();
    } else {
      throw DataError("parameter '" + k + "' must be a number or string");
    }
  }
  return out;
}

Json step_function_to_json(const StepFunction& f) {
  return Json{{"times", f.times()}, {"values", f.values()}, {"before_first", f.before_first()}};
}

StepFunction step_function_from_json(const Json& j) {
  return guarded("step function", [&] {
    return StepFunction(j.at("times").get<std::vector<double>>(), j.at("values").get<std::vector<double>>(),
                        j.at("before_first").get<double>());
  });
}

namespace {

Json node_to_json(const Tree& tree, std::size_t id, const std::vector<StepFunction>* chf) {
  const TreeNode& n = tree.nodes[id];
  Json j = Json::object();
  j["count"] = n.count;
  if (n.is_leaf()) {
    j["value"] = n.value;
    j["sum_grad"] = n.sum_grad;
    j["sum_hess"] = n.sum_hess;
    if (!n.members.empty()) j["members"] = n.members;
    if (chf) j["chf"] = step_function_to_json((*chf)[id]);
    return j;
  }
  j["feature"] = n.feature;
  j["threshold"] = n.threshold;
  j["gain"] = n.gain;
  j["sum_grad"] = n.sum_grad;
  j["sum_hess"] = n.sum_hess;
  j["value"] = n.value;
  j["left"] = node_to_json(tree, static_cast<std::size_t>(n.left), chf);
  j["right"] = node_to_json(tree, static_cast<std::size_t>(n.right), chf);
  return j;
}

int node_from_json(const Json& j, Tree& tree, std::vector<StepFunction>* chf) {
  const int id = static_cast<int>(tree.nodes.size());
  tree.nodes.emplace_back();
  if (chf) chf->emplace_back();
  TreeNode n;
  n.count = j.at("count").get<std::size_t>();
  n.value = j.at("value").get<double>();
  n.sum_grad = j.value("sum_grad", 0.0);
  n.sum_hess = j.value("sum_hess", 0.0);
  if (j.contains("feature")) {
    n.feature = j.at("feature").get<int>();
    n.threshold = j.at("threshold").get<double>();
    n.gain = j.at("gain").get<double>();
    n.left = node_from_json(j.at("left"), tree, chf);
    n.right = node_from_json(j.at("right"), tree, chf);
  } else {
    if (j.contains("members")) n.members = j.at("members").get<std::vector<std::size_t>>();
    if (chf && j.contains("chf")) (*chf)[static_cast<std::size_t>(id)] = step_function_from_json(j.at("chf"));
  }
  tree.nodes[static_cast<std::size_t>(id)] = std::move(n);
  return id;
}

}  // namespace

Json tree_to_json(const Tree& tree, const std::vector<StepFunction>* leaf_chf) {
  if (tree.nodes.empty()) throw DataError("cannot serialize an empty tree");
  return node_to_json(tree, 0, leaf_chf);
}

Tree tree_from_json(const Json& j, std::vector<StepFunction>* leaf_chf) {
  return guarded("tree", [&] {
    Tree t;
    if (leaf_chf) leaf_chf->clear();
    node_from_json(j, t, leaf_chf);
    return t;
  });
}

Json ensemble_to_json(const BoostedEnsemble& e) {
  Json trees = Json::array();
  for (const auto& t : e.trees) trees.push_back(tree_to_json(t));
  return Json{{"loss", loss_name(e.loss)},         {"base_score", e.base_score},
              {"learning_rate", e.learning_rate}, {"n_features", e.n_features},
              {"loss_trace", e.loss_trace},       {"trees", std::move(trees)}};
}

BoostedEnsemble ensemble_from_json(const Json& j) {
  return guarded("ensemble", [&] {
    BoostedEnsemble e;
    e.loss = loss_from_name(j.at("loss").get<std::string>());
    e.base_score = j.at("base_score").get<double>();
    e.learning_rate = j.at("learning_rate").get<double>();
    e.n_features = j.at("n_features").get<std::size_t>();
    e.loss_trace = j.at("loss_trace").get<std::vector<double>>();
    for (const auto& t : j.at("trees")) e.trees.push_back(tree_from_json(t));
    return e;
  });
}

Json model_to_json(const FittedModel& m) {
  Json j = Json::object();
  j["format"] = "survml-model";
  j["version"] = kModelFormatVersion;
  j["family"] = family_id(m.family);
  j["params"] = params_to_json(m.params);
  j["seed"] = m.seed;
  j["n_features"] = m.n_features;
  j["feature_names"] = m.feature_names;
  j["training_rows"] = m.training_rows;
  j["event_grid"] = m.event_grid;
  if (m.forest) {
    Json trees = Json::array();
    for (std::size_t t = 0; t < m.forest->trees.size(); ++t) {
      trees.push_back(tree_to_json(m.forest->trees[t], &m.forest->leaf_chf[t]));
    }
    j["forest"] = Json{{"trees", std::move(trees)}};
  }
  if (m.ensemble) j["ensemble"] = ensemble_to_json(*m.ensemble);
  if (m.baseline_hazard) j["baseline_hazard"] = step_function_to_json(*m.baseline_hazard);
  if (m.ssvm) {
    Json s{{"weights", m.ssvm->weights}, {"n_pairs", m.ssvm->n_pairs}};
    if (m.ssvm->calibration) {
      s["calibration"] = Json{{"beta", m.ssvm->calibration->beta},
                              {"iterations", m.ssvm->calibration->iterations},
                              {"baseline", step_function_to_json(m.ssvm->calibration->baseline)}};
    } else {
      s["calibration_error"] = m.ssvm->calibration_error;
    }
    j["ssvm"] = std::move(s);
  }
  if (m.family == Family::Horizon) {
    j["horizon"] = m.horizon;
    j["excluded"] = m.excluded;
  }
  return j;
}

FittedModel model_from_json(const Json& j) {
  return guarded("model file", [&] {
    if (j.value("format", std::string()) != "survml-model") throw DataError("not a survml model file");
    const int version = j.at("version").get<int>();
    if (version != kModelFormatVersion) {
      throw DataError("unsupported model file version " + std::to_string(version));
    }
    FittedModel m;
    m.family = family_from_id(j.at("family").get<std::string>());
    m.params = params_from_json(j.at("params"));
    m.seed = j.at("seed").get<std::uint64_t>();
    m.n_features = j.at("n_features").get<std::size_t>();
    m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    m.training_rows = j.at("training_rows").get<std::size_t>();
    m.event_grid = j.at("event_grid").get<std::vector<double>>();
    if (j.contains("forest")) {
      RsfForest f;
      for (const auto& t : j.at("forest").at("trees")) {
        std::vector<StepFunction> chf;
        f.trees.push_back(tree_from_json(t, &chf));
        f.leaf_chf.push_back(std::move(chf));
      }
      m.forest = std::move(f);
    }
    if (j.contains("ensemble")) m.ensemble = ensemble_from_json(j.at("ensemble"));
    if (j.contains("baseline_hazard")) m.baseline_hazard = step_function_from_json(j.at("baseline_hazard"));
    if (j.contains("ssvm")) {
      const Json& s = j.at("ssvm");
      SsvmModel sm;
      sm.weights = s.at("weights").get<std::vector<double>>();
      sm.n_pairs = s.at("n_pairs").get<std::size_t>();
      if (s.contains("calibration")) {
        CoxCalibration c;
        c.beta = s.at("calibration").at("beta").get<double>();
        c.iterations = s.at("calibration").at("iterations").get<int>();
        c.baseline = step_function_from_json(s.at("calibration").at("baseline"));
        sm.calibration = std::move(c);
      } else {
        sm.calibration_error = s.value("calibration_error", std::string());
      }
      m.ssvm = std::move(sm);
    }
    if (m.family == Family::Horizon) {
      m.horizon = j.at("horizon").get<double>();
      m.excluded = j.at("excluded").get<std::size_t>();
    }
    const bool complete = (m.family == Family::Rsf && m.forest) || (m.family == Family::Ssvm && m.ssvm) ||
                          (m.family == Family::Gbsa && m.ensemble && m.baseline_hazard) ||
                          (m.family != Family::Rsf && m.family != Family::Ssvm && m.family != Family::Gbsa &&
                           m.ensemble);
    if (!complete) throw DataError("model file lacks the artifact for family " + family_id(m.family));
    return m;
  });
}

void save_model(const std::filesystem::path& path, const FittedModel& model) {
  write_text_atomic(path, dump_json(model_to_json(model)));
}

FittedModel load_model(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw DataError("model file not found: " + path.string());
  return model_from_json(read_json(path));
}

Json study_to_json(const Study& s) {
  Json space = Json::object();
  for (const auto& p : s.space) space[p.name] = format_param_spec(p);
  Json trials = Json::array();
  for (const auto& t : s.trials) {
    Json tj{{"index", t.index}, {"params", params_to_json(t.params)}};
    if (t.value) {
      tj["value"] = *t.value;
      tj["fold_values"] = t.fold_values;
    } else {
      tj["failure"] = t.failure;
    }
    if (!t.note.empty()) tj["note"] = t.note;
    trials.push_back(std::move(tj));
  }
  Json j{{"format", "survml-study"},
         {"version", kStudyFormatVersion},
         {"family", s.family},
         {"sampler", sampler_name(s.sampler)},
         {"seed", s.seed},
         {"k_folds", s.k_folds},
         {"stratified_folds", s.stratified},
         {"objective", s.objective},
         {"space", std::move(space)},
         {"n_trials", s.trials.size()}};
  if (const auto best = s.best_index()) {
    j["best"] = Json{{"index", *best}, {"value", *s.trials[*best].value},
                     {"params", params_to_json(s.trials[*best].params)}};
  } else {
    j["best"] = nullptr;
  }
  j["trials"] = std::move(trials);
  return j;
}

Study study_from_json(const Json& j) {
  return guarded("study file", [&] {
    if (j.value("format", std::string()) != "survml-study") throw DataError("not a survml study file");
    if (j.at("version").get<int>() != kStudyFormatVersion) throw DataError("unsupported study file version");
    Study s;
    s.family = j.at("family").get<std::string>();
    s.sampler = sampler_from_name(j.at("sampler").get<std::string>());
    s.seed = j.at("seed").get<std::uint64_t>();
    s.k_folds = j.at("k_folds").get<std::size_t>();
    s.stratified = j.at("stratified_folds").get<bool>();
    s.objective = j.at("objective").get<std::string>();
    for (const auto& [name, spec] : j.at("space").items()) {
      s.space.push_back(parse_param_spec(name, spec.get<std::string>()));
    }
    for (const auto& tj : j.at("trials")) {
      Trial t;
      t.index = tj.at("index").get<std::size_t>();
      t.params = params_from_json(tj.at("params"));
      if (tj.contains("value")) {
        t.value = tj.at("value").get<double>();
        t.fold_values = tj.at("fold_values").get<std::vector<double>>();
      } else {
        t.failure = tj.at("failure").get<std::string>();
      }
      t.note = tj.value("note", std::string());
      s.trials.push_back(std::move(t));
    }
    return s;
  });
}

Json encoder_to_json(const EncoderState& state) {
  Json cols = Json::array();
  for (const auto& c : state.columns()) {
    Json cj{{"name", c.name}, {"kind", c.kind == ColumnKind::Ordinal ? "ordinal" : "numeric"}};
    if (c.kind == ColumnKind::Ordinal) {
      cj["categories"] = c.categories;
      cj["lexicographic_fallback"] = c.lexicographic_fallback;
    } else {
      cj["mean"] = c.mean;
      cj["sd"] = c.sd;
    }
    cols.push_back(std::move(cj));
  }
  return Json{{"format", "survml-encoder"}, {"version", 1}, {"columns", std::move(cols)}};
}

EncoderState encoder_from_json(const Json& j) {
  return guarded("encoder file", [&] {
    std::vector<ColumnEncoding> cols;
    for (const auto& cj : j.at("columns")) {
      ColumnEncoding c;
      c.name = cj.at("name").get<std::string>();
      const std::string kind = cj.at("kind").get<std::string>();
      if (kind == "ordinal") {
        c.kind = ColumnKind::Ordinal;
        c.categories = cj.at("categories").get<std::vector<std::string>>();
        c.lexicographic_fallback = cj.at("lexicographic_fallback").get<bool>();
      } else if (kind == "numeric") {
        c.mean = cj.at("mean").get<double>();
        c.sd = cj.at("sd").get<double>();
      } else {
        throw DataError("unknown column kind '" + kind + "'");
      }
      cols.push_back(std::move(c));
    }
    return EncoderState(std::move(cols));
  });
}

Json filter_report_to_json(const FilterReport& r) {
  Json removed = Json::array();
  for (const auto& [rule, count] : r.removed) removed.push_back(Json{{"rule", rule}, {"removed", count}});
  return Json{{"initial", r.initial},
              {"final", r.final},
              {"total_removed", r.total_removed()},
              {"steps", std::move(removed)}};
}

}  // namespace survml
