#include "survml/hpo.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "survml/config.hpp"
#include "survml/csv.hpp"
#include "survml/metrics.hpp"
#include "survml/estimators.hpp"
#include "survml/preprocess.hpp"

namespace survml {

void ParamSpec::validate() const {
  if (name.empty()) throw ConfigError("parameter spec without a name");
  if (kind == ParamKind::Categorical) {
    if (choices.empty()) throw ConfigError("parameter '" + name + "' has no choices");
    return;
  }
  if (!std::isfinite(low) || !std::isfinite(high) || !(low < high)) {
    throw ConfigError("parameter '" + name + "' needs min < max");
  }
  if (log && !(low > 0.0)) throw ConfigError("log-scaled parameter '" + name + "' needs min > 0");
  if (kind == ParamKind::Int && (low != std::floor(low) || high != std::floor(high))) {
    throw ConfigError("integer parameter '" + name + "' needs integer bounds");
  }
}

bool ParamSpec::contains(const ParamValue& v) const {
  if (kind == ParamKind::Categorical) {
    const auto* s = std::get_if<std::string>(&v);
    return s && std::find(choices.begin(), choices.end(), *s) != choices.end();
  }
  const auto* d = std::get_if<double>(&v);
  if (!d || !(*d >= low && *d <= high)) return false;
  return kind != ParamKind::Int || *d == std::floor(*d);
}

ParamSpec parse_param_spec(const std::string& name, const std::string& text) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = text.find(':', start);
    parts.push_back(trim(text.substr(start, pos - start)));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  ParamSpec s;
  s.name = name;
  auto number = [&](const std::string& t) {
    try {
      std::size_t used = 0;
      const double v = std::stod(t, &used);
      if (used != t.size()) throw std::invalid_argument(t);
      return v;
    } catch (const std::exception&) {
      throw ConfigError("parameter '" + name + "': invalid number '" + t + "'");
    }
  };
  if (parts[0] == "cat" && parts.size() == 2) {
    s.kind = ParamKind::Categorical;
    std::size_t b = 0;
    const std::string& body = parts[1];
    while (true) {
      const auto pos = body.find('|', b);
      const std::string choice = trim(body.substr(b, pos - b));
      if (!choice.empty()) s.choices.push_back(choice);
      if (pos == std::string::npos) break;
      b = pos + 1;
    }
  } else if ((parts[0] == "float" && (parts.size() == 3 || (parts.size() == 4 && parts[3] == "log"))) ||
             (parts[0] == "int" && parts.size() == 3)) {
    s.kind = parts[0] == "int" ? ParamKind::Int : ParamKind::Float;
    s.low = number(parts[1]);
    s.high = number(parts[2]);
    s.log = parts.size() == 4;
  } else {
    throw ConfigError("parameter '" + name + "': cannot parse search range '" + text + "'");
  }
  s.validate();
  return s;
}

std::string format_param_spec(const ParamSpec& s) {
  switch (s.kind) {
    case ParamKind::Categorical: {
      std::string out = "cat:";
      for (std::size_t i = 0; i < s.choices.size(); ++i) out += (i ? "|" : "") + s.choices[i];
      return out;
    }
    case ParamKind::Int:
      return "int:" + csv::format_double(s.low) + ":" + csv::format_double(s.high);
    case ParamKind::Float:
      return "float:" + csv::format_double(s.low) + ":" + csv::format_double(s.high) + (s.log ? ":log" : "");
  }
  return "";
}

SearchSpace default_space(Family f) {
  auto p = [](const std::string& n, const std::string& t) { return parse_param_spec(n, t); };
  SearchSpace boosting = {p("n_rounds", "int:20:300"), p("learning_rate", "float:0.01:0.3:log"),
                          p("max_depth", "int:1:5"), p("min_samples_leaf", "int:3:30"),
                          p("reg_lambda", "float:0.01:10:log"), p("subsample", "float:0.5:1")};
  switch (f) {
    case Family::Rsf:
      return {p("n_trees", "int:20:150"), p("max_depth", "int:2:10"), p("min_samples_leaf", "int:3:30")};
    case Family::Gbsa:
      return {p("n_rounds", "int:20:300"), p("learning_rate", "float:0.01:0.3:log"),
              p("max_depth", "int:1:5"), p("min_samples_leaf", "int:3:30"), p("subsample", "float:0.5:1")};
    case Family::Ssvm: return {p("gamma", "float:0.001:10:log")};
    case Family::GbCox:
    case Family::GbRegWeighted:
    case Family::Horizon: return boosting;
    case Family::GbAft:
      boosting.push_back(p("sigma", "float:0.5:2"));
      boosting.push_back(p("distribution", "cat:normal|logistic"));
      return boosting;
  }
  return {};
}

bool in_space(const SearchSpace& space, const ParamMap& params) {
  for (const auto& s : space) {
    auto it = params.find(s.name);
    if (it == params.end() || !s.contains(it->second)) return false;
  }
  return true;
}

std::string sampler_name(SamplerId s) {
  switch (s) {
    case SamplerId::Random: return "random";
    case SamplerId::Tpe: return "tpe";
    case SamplerId::CmaEs: return "cmaes";
  }
  return "unknown";
}

SamplerId sampler_from_name(const std::string& name) {
  for (SamplerId s : {SamplerId::Random, SamplerId::Tpe, SamplerId::CmaEs}) {
    if (sampler_name(s) == name) return s;
  }
  throw ConfigError("unknown sampler '" + name + "'");
}

namespace {

// Numeric parameters live in [0, 1] internally: linear or log scaled, with
// integers rounded on decoding.
double to_unit(const ParamSpec& s, double v) {
  if (s.log) return (std::log(v) - std::log(s.low)) / (std::log(s.high) - std::log(s.low));
  return (v - s.low) / (s.high - s.low);
}

double from_unit(const ParamSpec& s, double u) {
  u = std::clamp(u, 0.0, 1.0);
  double v = s.log ? std::exp(std::log(s.low) + u * (std::log(s.high) - std::log(s.low)))
                   : s.low + u * (s.high - s.low);
  v = std::clamp(v, s.low, s.high);
  if (s.kind == ParamKind::Int) v = std::clamp(std::round(v), s.low, s.high);
  return v;
}

ParamValue random_value(const ParamSpec& s, Rng& rng) {
  if (s.kind == ParamKind::Categorical) return s.choices[uniform_index(rng, s.choices.size())];
  if (s.kind == ParamKind::Int) {
    const auto span = static_cast<std::size_t>(s.high - s.low) + 1;
    return s.low + static_cast<double>(uniform_index(rng, span));
  }
  return from_unit(s, uniform01(rng));
}

void validate_space(const SearchSpace& space) {
  if (space.empty()) throw ConfigError("search space is empty");
  for (const auto& s : space) s.validate();
}

// ---------------------------------------------------------------- TPE

struct Parzen {
  std::vector<double> centers;
  double bandwidth = 1.0;

  static Parzen fit(std::vector<double> points) {
    Parzen p;
    p.centers = std::move(points);
    const double n = static_cast<double>(p.centers.size());
    if (p.centers.size() >= 2) {
      double mean = 0.0;
      for (double c : p.centers) mean += c;
      mean /= n;
      double var = 0.0;
      for (double c : p.centers) var += (c - mean) * (c - mean);
      const double sd = std::sqrt(var / (n - 1.0));
      p.bandwidth = sd * std::pow(n, -0.2);
    } else {
      p.bandwidth = 0.5;
    }
    const double floor = 1.0 / std::min(100.0, n + 1.0);
    p.bandwidth = std::clamp(p.bandwidth, floor, 1.0);
    return p;
  }

  // Kernel mass of N(c, h) inside [0, 1].
  double mass(double c) const {
    const double a = (0.0 - c) / (bandwidth * std::numbers::sqrt2);
    const double b = (1.0 - c) / (bandwidth * std::numbers::sqrt2);
    return 0.5 * (std::erf(b) - std::erf(a));
  }

  // Mixture of truncated kernels plus one uniform prior component.
  double density(double x) const {
    const double k = static_cast<double>(centers.size()) + 1.0;
    double s = 1.0;
    for (double c : centers) {
      const double z = (x - c) / bandwidth;
      s += std::exp(-0.5 * z * z) / (bandwidth * std::sqrt(2.0 * std::numbers::pi) * mass(c));
    }
    return s / k;
  }

  double sample(Rng& rng) const {
    const std::size_t comp = uniform_index(rng, centers.size() + 1);
    if (comp == centers.size()) return uniform01(rng);
    for (int attempt = 0; attempt < 100; ++attempt) {
      const double x = centers[comp] + bandwidth * standard_normal(rng);
      if (x >= 0.0 && x <= 1.0) return x;
    }
    return std::clamp(centers[comp], 0.0, 1.0);
  }
};

std::vector<double> category_weights(const ParamSpec& s, const std::vector<const Trial*>& group) {
  std::vector<double> w(s.choices.size(), 1.0);
  for (const Trial* t : group) {
    const auto it = t->params.find(s.name);
    if (it == t->params.end()) continue;
    const auto* v = std::get_if<std::string>(&it->second);
    if (!v) continue;
    const auto pos = std::find(s.choices.begin(), s.choices.end(), *v);
    if (pos != s.choices.end()) w[static_cast<std::size_t>(pos - s.choices.begin())] += 1.0;
  }
  double total = 0.0;
  for (double x : w) total += x;
  for (double& x : w) x /= total;
  return w;
}

std::vector<double> unit_values(const ParamSpec& s, const std::vector<const Trial*>& group) {
  std::vector<double> out;
  for (const Trial* t : group) {
    const auto it = t->params.find(s.name);
    if (it == t->params.end()) continue;
    if (const auto* v = std::get_if<double>(&it->second)) out.push_back(std::clamp(to_unit(s, *v), 0.0, 1.0));
  }
  return out;
}

// Best first; failed trials last; earlier index first on ties.
std::vector<const Trial*> ranked(std::span<const Trial> history) {
  std::vector<const Trial*> out;
  for (const auto& t : history) out.push_back(&t);
  std::stable_sort(out.begin(), out.end(), [](const Trial* a, const Trial* b) {
    if (a->ok() != b->ok()) return a->ok();
    if (!a->ok()) return false;
    return *a->value > *b->value;
  });
  return out;
}

}  // namespace

ParamMap sample_random(const SearchSpace& space, Rng& rng) {
  validate_space(space);
  ParamMap out;
  for (const auto& s : space) out[s.name] = random_value(s, rng);
  return out;
}

std::size_t tpe_good_count(std::size_t m, double gamma) {
  const auto n = static_cast<std::size_t>(std::ceil(gamma * static_cast<double>(m) - 1e-12));
  return std::clamp<std::size_t>(n, 1, std::max<std::size_t>(m, 1));
}

ParamMap sample_tpe(const SearchSpace& space, std::span<const Trial> history, const TpeConfig& config,
                    Rng& rng) {
  validate_space(space);
  if (!(config.gamma > 0.0 && config.gamma <= 1.0)) throw ConfigError("tpe gamma must be in (0, 1]");
  if (history.size() < config.n_startup) return sample_random(space, rng);
  auto done = ranked(history);
  const auto ok_end = std::find_if(done.begin(), done.end(), [](const Trial* t) { return !t->ok(); });
  done.erase(ok_end, done.end());
  if (done.size() < 2) return sample_random(space, rng);
  const std::size_t n_good = tpe_good_count(done.size(), config.gamma);
  const std::vector<const Trial*> good(done.begin(), done.begin() + static_cast<long>(n_good));
  const std::vector<const Trial*> bad(done.begin() + static_cast<long>(n_good), done.end());
  const std::size_t n_cand = std::max<std::size_t>(config.n_candidates, 1);

  ParamMap out;
  for (const auto& s : space) {
    if (s.kind == ParamKind::Categorical) {
      const auto l = category_weights(s, good);
      const auto g = category_weights(s, bad);
      std::size_t best = 0;
      double best_score = -std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < n_cand; ++c) {
        double u = uniform01(rng);
        std::size_t k = 0;
        while (k + 1 < l.size() && u >= l[k]) u -= l[k++];
        const double score = std::log(l[k]) - std::log(g[k]);
        if (score > best_score) {
          best_score = score;
          best = k;
        }
      }
      out[s.name] = s.choices[best];
      continue;
    }
    const Parzen l = Parzen::fit(unit_values(s, good));
    const Parzen g = Parzen::fit(unit_values(s, bad));
    double best_x = 0.0, best_score = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < n_cand; ++c) {
      const double x = l.sample(rng);
      const double score = std::log(l.density(x)) - std::log(g.density(x));
      if (std::isfinite(score) && score > best_score) {
        best_score = score;
        best_x = x;
      }
    }
    if (!std::isfinite(best_score)) {
      warn("tpe: degenerate density for '" + s.name + "', sampling at random");
      out[s.name] = random_value(s, rng);
    } else {
      out[s.name] = from_unit(s, best_x);
    }
  }
  return out;
}

// ---------------------------------------------------------------- CMA-ES

namespace {

struct CmaesConstants {
  std::size_t n = 0, lambda = 0, mu = 0;
  Eigen::VectorXd weights;
  double mu_eff = 0, c_sigma = 0, d_sigma = 0, c_c = 0, c_1 = 0, c_mu = 0, chi_n = 0;
};

CmaesConstants cmaes_constants(std::size_t n, const CmaesConfig& config) {
  CmaesConstants k;
  const double N = static_cast<double>(n);
  k.n = n;
  k.lambda = config.population > 0 ? config.population
                                   : 4 + static_cast<std::size_t>(std::floor(3.0 * std::log(N)));
  k.lambda = std::max<std::size_t>(k.lambda, 2);
  k.mu = k.lambda / 2;
  k.weights.resize(static_cast<Eigen::Index>(k.mu));
  for (std::size_t i = 0; i < k.mu; ++i) {
    k.weights(static_cast<Eigen::Index>(i)) =
        std::log(static_cast<double>(k.mu) + 0.5) - std::log(static_cast<double>(i + 1));
  }
  k.weights /= k.weights.sum();
  k.mu_eff = 1.0 / k.weights.squaredNorm();
  k.c_sigma = (k.mu_eff + 2.0) / (N + k.mu_eff + 5.0);
  k.d_sigma = 1.0 + 2.0 * std::max(0.0, std::sqrt((k.mu_eff - 1.0) / (N + 1.0)) - 1.0) + k.c_sigma;
  k.c_c = (4.0 + k.mu_eff / N) / (N + 4.0 + 2.0 * k.mu_eff / N);
  k.c_1 = 2.0 / ((N + 1.3) * (N + 1.3) + k.mu_eff);
  k.c_mu = std::min(1.0 - k.c_1,
                    2.0 * (k.mu_eff - 2.0 + 1.0 / k.mu_eff) / ((N + 2.0) * (N + 2.0) + k.mu_eff));
  k.chi_n = std::sqrt(N) * (1.0 - 1.0 / (4.0 * N) + 1.0 / (21.0 * N * N));
  return k;
}

std::vector<const ParamSpec*> numeric_specs(const SearchSpace& space) {
  std::vector<const ParamSpec*> out;
  for (const auto& s : space) {
    if (s.kind != ParamKind::Categorical) out.push_back(&s);
  }
  return out;
}

struct Decomposition {
  Eigen::MatrixXd basis;
  Eigen::VectorXd scales;  // square roots of eigenvalues
};

Decomposition decompose(const Eigen::MatrixXd& cov) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  Decomposition d;
  d.basis = es.eigenvectors();
  d.scales = es.eigenvalues().cwiseMax(1e-300).cwiseSqrt();
  return d;
}

}  // namespace

CmaesState cmaes_state(const SearchSpace& space, std::span<const Trial> history, const CmaesConfig& config) {
  validate_space(space);
  const auto specs = numeric_specs(space);
  if (specs.empty()) throw ConfigError("cmaes needs at least one numeric parameter");
  const CmaesConstants k = cmaes_constants(specs.size(), config);
  const auto n = static_cast<Eigen::Index>(k.n);
  CmaesState st;
  st.population = k.lambda;
  st.mean = Eigen::VectorXd::Constant(n, 0.5);
  st.cov = Eigen::MatrixXd::Identity(n, n);
  st.sigma = config.sigma0;
  Eigen::VectorXd p_sigma = Eigen::VectorXd::Zero(n), p_c = Eigen::VectorXd::Zero(n);

  const std::size_t generations = history.size() / k.lambda;
  for (std::size_t gen = 0; gen < generations; ++gen) {
    const auto batch = history.subspan(gen * k.lambda, k.lambda);
    const auto order = ranked(batch);
    std::vector<Eigen::VectorXd> y;
    for (std::size_t i = 0; i < k.mu; ++i) {
      Eigen::VectorXd x(n);
      for (std::size_t c = 0; c < k.n; ++c) {
        const auto it = order[i]->params.find(specs[c]->name);
        const double v = (it != order[i]->params.end() && std::holds_alternative<double>(it->second))
                             ? std::clamp(to_unit(*specs[c], std::get<double>(it->second)), 0.0, 1.0)
                             : st.mean(static_cast<Eigen::Index>(c));
        x(static_cast<Eigen::Index>(c)) = v;
      }
      y.push_back((x - st.mean) / st.sigma);
    }
    Eigen::VectorXd y_w = Eigen::VectorXd::Zero(n);
    for (std::size_t i = 0; i < k.mu; ++i) y_w += k.weights(static_cast<Eigen::Index>(i)) * y[i];
    st.mean += st.sigma * y_w;

    const Decomposition dec = decompose(st.cov);
    const Eigen::MatrixXd inv_sqrt =
        dec.basis * dec.scales.cwiseInverse().asDiagonal() * dec.basis.transpose();
    p_sigma = (1.0 - k.c_sigma) * p_sigma + std::sqrt(k.c_sigma * (2.0 - k.c_sigma) * k.mu_eff) * (inv_sqrt * y_w);
    const double norm_ps = p_sigma.norm();
    const double denom = std::sqrt(1.0 - std::pow(1.0 - k.c_sigma, 2.0 * static_cast<double>(gen + 1)));
    const bool h_sigma = norm_ps / denom < (1.4 + 2.0 / (static_cast<double>(k.n) + 1.0)) * k.chi_n;
    p_c = (1.0 - k.c_c) * p_c + (h_sigma ? std::sqrt(k.c_c * (2.0 - k.c_c) * k.mu_eff) : 0.0) * y_w;

    Eigen::MatrixXd rank_mu = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t i = 0; i < k.mu; ++i) {
      rank_mu += k.weights(static_cast<Eigen::Index>(i)) * y[i] * y[i].transpose();
    }
    const double delta_h = h_sigma ? 0.0 : k.c_c * (2.0 - k.c_c);
    st.cov = (1.0 - k.c_1 - k.c_mu) * st.cov + k.c_1 * (p_c * p_c.transpose() + delta_h * st.cov) +
             k.c_mu * rank_mu;
    st.cov = 0.5 * (st.cov + st.cov.transpose());
    st.sigma *= std::exp((k.c_sigma / k.d_sigma) * (norm_ps / k.chi_n - 1.0));
    st.sigma = std::clamp(st.sigma, 1e-12, 1e3);
    ++st.generation;
  }
  return st;
}

ParamMap sample_cmaes(const SearchSpace& space, std::span<const Trial> history,
                      const CmaesConfig& config, Rng& rng, std::string* note) {
  const CmaesState st = cmaes_state(space, history, config);
  const auto specs = numeric_specs(space);
  const Decomposition dec = decompose(st.cov);
  Eigen::VectorXd z(static_cast<Eigen::Index>(specs.size()));
  for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = standard_normal(rng);
  const Eigen::VectorXd x = st.mean + st.sigma * (dec.basis * dec.scales.asDiagonal() * z);
  ParamMap out;
  bool categorical = false;
  std::size_t c = 0;
  for (const auto& s : space) {
    if (s.kind == ParamKind::Categorical) {
      out[s.name] = random_value(s, rng);
      categorical = true;
    } else {
      out[s.name] = from_unit(s, x(static_cast<Eigen::Index>(c++)));
    }
  }
  if (categorical && note) *note = "categorical parameters sampled at random";
  return out;
}

std::optional<std::size_t> Study::best_index() const {
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < trials.size(); ++i) {
    if (trials[i].ok() && (!best || *trials[i].value > *trials[*best].value)) best = i;
  }
  return best;
}

ParamMap suggest(const SearchSpace& space, SamplerId sampler, std::span<const Trial> history,
                 std::uint64_t seed, std::size_t index, std::string* note) {
  Rng rng(derive_seed(seed, "trial", index));
  switch (sampler) {
    case SamplerId::Random: return sample_random(space, rng);
    case SamplerId::Tpe: return sample_tpe(space, history, TpeConfig{}, rng);
    case SamplerId::CmaEs: return sample_cmaes(space, history, CmaesConfig{}, rng, note);
  }
  throw ConfigError("unknown sampler");
}

void optimize(Study& study, const Objective& objective, std::size_t n_trials) {
  validate_space(study.space);
  for (std::size_t i = study.trials.size(); i < n_trials; ++i) {
    Trial t;
    t.index = i;
    t.params = suggest(study.space, study.sampler, study.trials, study.seed, i, &t.note);
    try {
      std::vector<double> folds;
      const double v = objective(t.params, folds);
      if (!std::isfinite(v)) throw MetricError("objective is not finite");
      t.value = v;
      t.fold_values = std::move(folds);
    } catch (const Error& e) {
      t.failure = e.what();
      warn("trial " + std::to_string(i) + " failed: " + e.what());
    }
    study.trials.push_back(std::move(t));
  }
}

Study run_study(const Cohort& train, Family family, const SearchSpace& space, SamplerId sampler,
                std::size_t n_trials, std::size_t k_folds, std::uint64_t seed, const StudyOptions& options) {
  if (n_trials < 1) throw ConfigError("n_trials must be >= 1");
  if (k_folds < 2) throw ConfigError("k_folds must be >= 2");
  if (k_folds > train.size()) throw ConfigError("k_folds exceeds the number of training rows");
  Study study;
  if (options.resume) {
    study = *options.resume;
    if (study.family != family_id(family) || study.sampler != sampler || study.seed != seed ||
        study.k_folds != k_folds || !(study.space == space) || study.stratified != options.stratified ||
        study.objective != (options.ipcw_objective ? "ipcw_c" : "harrell_c")) {
      throw ConfigError("resumed study does not match the requested family, sampler, seed, folds, space or objective");
    }
  } else {
    study.family = family_id(family);
    study.space = space;
    study.sampler = sampler;
    study.seed = seed;
    study.k_folds = k_folds;
    study.stratified = options.stratified;
  }
  study.objective = options.ipcw_objective ? "ipcw_c" : "harrell_c";

  const auto held_out = options.stratified ? stratified_kfold(train.targets, k_folds, derive_seed(seed, "folds"))
                                           : kfold(train.size(), k_folds, derive_seed(seed, "folds"));
  std::vector<Cohort> fold_train, fold_test;
  for (const auto& test_rows : held_out) {
    std::vector<char> in_test(train.size(), 0);
    for (std::size_t r : test_rows) in_test[r] = 1;
    std::vector<std::size_t> train_rows;
    for (std::size_t r = 0; r < train.size(); ++r) {
      if (!in_test[r]) train_rows.push_back(r);
    }
    fold_train.push_back(train.subset(train_rows));
    fold_test.push_back(train.subset(test_rows));
  }

  Objective objective = [&](const ParamMap& params, std::vector<double>& fold_values) {
    const std::size_t index = study.trials.size();
    fold_values.assign(k_folds, 0.0);
    std::vector<std::string> errors(k_folds);
    parallel_for(k_folds, [&](std::size_t f) {
      try {
        const FittedModel m =
            fit_model(family, fold_train[f], params, derive_seed(seed, "fit", index * k_folds + f));
        const auto risk = predict_risk(m, fold_test[f].features);
        if (options.ipcw_objective) {
          const StepFunction g = censoring_survival(fold_train[f].targets);
          fold_values[f] = ipcw_c(fold_test[f].targets, risk, g, default_tau(fold_train[f].targets, g)).c_index;
        } else {
          fold_values[f] = harrell_c(fold_test[f].targets, risk).c_index;
        }
      } catch (const std::exception& e) {
        errors[f] = "fold " + std::to_string(f) + ": " + e.what();
      }
    });
    for (const auto& e : errors) {
      if (!e.empty()) throw FitError(e);
    }
    double sum = 0.0;
    for (double v : fold_values) sum += v;
    return sum / static_cast<double>(k_folds);
  };
  optimize(study, objective, n_trials);
  if (!study.best_index()) throw FitError("every trial of the " + family_id(family) + " study failed");
  return study;
}

}  // namespace survml
