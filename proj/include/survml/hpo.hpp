#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "survml/data.hpp"
#include "survml/models.hpp"

namespace survml {

enum class ParamKind { Float, Int, Categorical };

struct ParamSpec {
  std::string name;
  ParamKind kind = ParamKind::Float;
  double low = 0.0;
  double high = 1.0;
  bool log = false;
  std::vector<std::string> choices;

  void validate() const;
  bool contains(const ParamValue& v) const;
  friend bool operator==(const ParamSpec&, const ParamSpec&) = default;
};

using SearchSpace = std::vector<ParamSpec>;

/// Parses "float:lo:hi", "float:lo:hi:log", "int:lo:hi" or "cat:a|b|c".
ParamSpec parse_param_spec(const std::string& name, const std::string& text);
std::string format_param_spec(const ParamSpec& spec);

/// Editable default ranges per family.
SearchSpace default_space(Family f);
bool in_space(const SearchSpace& space, const ParamMap& params);

struct Trial {
  std::size_t index = 0;
  ParamMap params;
  std::optional<double> value;  // mean fold objective
  std::string failure;          // set when the trial failed
  std::vector<double> fold_values;
  std::string note;

  bool ok() const { return value.has_value(); }
  friend bool operator==(const Trial&, const Trial&) = default;
};

enum class SamplerId { Random, Tpe, CmaEs };
std::string sampler_name(SamplerId s);
SamplerId sampler_from_name(const std::string& name);

struct TpeConfig {
  double gamma = 0.25;
  std::size_t n_startup = 10;
  std::size_t n_candidates = 24;
};

struct CmaesConfig {
  double sigma0 = 0.2;
  std::size_t population = 0;  // 0: 4 + floor(3 ln d)
};

ParamMap sample_random(const SearchSpace& space, Rng& rng);
ParamMap sample_tpe(const SearchSpace& space, std::span<const Trial> history, const TpeConfig& config,
                    Rng& rng);
ParamMap sample_cmaes(const SearchSpace& space, std::span<const Trial> history,
                      const CmaesConfig& config, Rng& rng, std::string* note = nullptr);

/// Size of the good group for m completed trials.
std::size_t tpe_good_count(std::size_t m, double gamma);

/// CMA-ES state reconstructed from the completed generations in `history`,
/// in coordinates where every numeric parameter spans [0, 1].
struct CmaesState {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
  double sigma = 0.2;
  std::size_t generation = 0;
  std::size_t population = 0;
};
CmaesState cmaes_state(const SearchSpace& space, std::span<const Trial> history,
                       const CmaesConfig& config);

struct Study {
  std::string family;
  SearchSpace space;
  SamplerId sampler = SamplerId::Random;
  std::uint64_t seed = 0;
  std::size_t k_folds = 0;
  bool stratified = true;
  std::string objective = "harrell_c";
  std::vector<Trial> trials;

  /// Completed trial with the highest value, lowest index on ties.
  std::optional<std::size_t> best_index() const;
  friend bool operator==(const Study&, const Study&) = default;
};

/// Parameters for trial `index` given the trials before it. Each trial draws
/// from its own stream derive_seed(seed, "trial", index).
ParamMap suggest(const SearchSpace& space, SamplerId sampler, std::span<const Trial> history,
                 std::uint64_t seed, std::size_t index, std::string* note = nullptr);

/// Objective to maximize. Throwing marks the trial failed.
using Objective = std::function<double(const ParamMap&, std::vector<double>& fold_values)>;

/// Runs trials until `study` holds n_trials, continuing any existing ones.
void optimize(Study& study, const Objective& objective, std::size_t n_trials);

struct StudyOptions {
  bool stratified = true;
  bool ipcw_objective = false;
  std::optional<Study> resume;
};

/// Cross-validated search maximizing mean held-out concordance. Folds are
/// fixed once per study from derive_seed(seed, "folds").
Study run_study(const Cohort& train, Family family, const SearchSpace& space, SamplerId sampler,
                std::size_t n_trials, std::size_t k_folds, std::uint64_t seed,
                const StudyOptions& options = {});

}  // namespace survml
