#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "survml/data.hpp"
#include "survml/engine.hpp"
#include "survml/estimators.hpp"
#include "survml/metrics.hpp"

namespace survml {

enum class Family { Rsf, Gbsa, Ssvm, GbCox, GbAft, GbRegWeighted, Horizon };

const std::vector<Family>& all_families();
/// Stable lower-case identifier used in configs, file names and seeds.
std::string family_id(Family f);
/// Name used in report tables.
std::string family_display_name(Family f);
Family family_from_id(const std::string& id);

/// Families with a survival-curve prediction (IBS and curves reported).
bool has_survival_function(Family f);
/// Families whose risk score is reported with time-dependent AUC.
bool reports_td_auc(Family f);

/// Raised by predict_curves for families without a survival function.
class NoSurvivalFunction : public Error {
 public:
  explicit NoSurvivalFunction(const std::string& detail)
      : Error("no survival function defined" + (detail.empty() ? "" : ": " + detail)) {}
};

/// Hyperparameter values: numbers (integers included) or category labels.
using ParamValue = std::variant<double, std::string>;
using ParamMap = std::map<std::string, ParamValue>;

std::string param_to_string(const ParamValue& v);

/// Hyperparameters accepted by each family, with defaults.
ParamMap default_params(Family f);

struct RsfForest {
  std::vector<Tree> trees;
  /// Leaf cumulative hazards, indexed [tree][node]; empty for internal nodes.
  std::vector<std::vector<StepFunction>> leaf_chf;
};

struct SsvmModel {
  std::vector<double> weights;
  std::size_t n_pairs = 0;
  std::optional<CoxCalibration> calibration;
  std::string calibration_error;  // set when calibration failed
};

struct FittedModel {
  Family family = Family::Rsf;
  ParamMap params;
  std::uint64_t seed = 0;
  std::size_t n_features = 0;
  std::vector<std::string> feature_names;
  /// Distinct training event times, the support of predicted curves.
  std::vector<double> event_grid;

  std::optional<RsfForest> forest;
  std::optional<BoostedEnsemble> ensemble;
  std::optional<StepFunction> baseline_hazard;  // GBSA Breslow H0
  std::optional<SsvmModel> ssvm;

  double horizon = 0.0;        // HorizonClassifier only
  std::size_t excluded = 0;    // subjects censored before the horizon
  std::size_t training_rows = 0;  // rows the ensemble was fitted on
};

/// Fits any family. Unknown parameter names raise ConfigError; missing ones
/// take default_params values. `seed` drives all randomness of the fit.
FittedModel fit_model(Family family, const Cohort& train, const ParamMap& params, std::uint64_t seed);

FittedModel fit_rsf(const Cohort& train, const ParamMap& params, std::uint64_t seed);
FittedModel fit_gbsa(const Cohort& train, const ParamMap& params, std::uint64_t seed);
FittedModel fit_gb_cox(const Cohort& train, const ParamMap& params, std::uint64_t seed);
FittedModel fit_gb_aft(const Cohort& train, const ParamMap& params, std::uint64_t seed);
FittedModel fit_gb_reg_weighted(const Cohort& train, const ParamMap& params, std::uint64_t seed);
FittedModel fit_horizon_classifier(const Cohort& train, const ParamMap& params, std::uint64_t seed);
FittedModel fit_ssvm(const Cohort& train, const ParamMap& params, std::uint64_t seed);

/// Comparable pairs (i, j): i is an event with T_i < T_j. "nearest" keeps
/// for each event the comparable j closest in time; max_pairs > 0 caps the
/// count by seeded subsampling.
std::vector<std::pair<std::size_t, std::size_t>> ssvm_pairs(std::span<const SurvivalTarget> targets,
                                                            const std::string& mode,
                                                            std::size_t max_pairs, std::uint64_t seed);

/// Risk scores, higher meaning earlier expected event.
std::vector<double> predict_risk(const FittedModel& model, const Matrix& features);

/// Per-row survival curves on the training event-time grid. Throws
/// NoSurvivalFunction for families without one.
std::vector<StepFunction> predict_curves(const FittedModel& model, const Matrix& features);

/// Survival probabilities at the grid times: row i, column k.
Matrix survival_on_grid(const FittedModel& model, const Matrix& features, const TimeGrid& grid);

/// Predicted event-by-horizon probabilities of a HorizonClassifier.
std::vector<double> predict_horizon_probability(const FittedModel& model, const Matrix& features);

}  // namespace survml
