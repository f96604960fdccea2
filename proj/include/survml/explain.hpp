#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "survml/data.hpp"
#include "survml/models.hpp"

namespace survml {

/// Batch risk prediction, the quantity every attribution explains.
using RiskFunction = std::function<std::vector<double>(const Matrix&)>;

RiskFunction risk_function(const FittedModel& model);

struct ImportanceReport {
  std::vector<std::string> features;
  std::vector<double> values;      // mean drop (PI) or mean |phi| (Shapley)
  std::vector<double> dispersion;  // standard deviation of the raw values
  std::vector<std::vector<double>> raw;  // [feature][repeat or row]

  /// Feature indices by decreasing value, lower index first on ties.
  std::vector<std::size_t> ranking() const;
};

/// feature,value,dispersion with rows in ranking order.
std::string importance_csv(const ImportanceReport& report);

enum class ImportanceMetric { HarrellC, IpcwC };

struct PermutationOptions {
  std::size_t n_repeats = 5;
  std::uint64_t seed = 0;
  ImportanceMetric metric = ImportanceMetric::HarrellC;
  /// Test hook: leaves every column in place.
  bool identity_permutation = false;
};

/// Drop in the metric when one column is shuffled, per feature and repeat.
ImportanceReport permutation_importance(const RiskFunction& risk, const Cohort& eval,
                                        const PermutationOptions& options);

enum class ShapleyMode { Exact, MonteCarlo };

struct ShapleyOptions {
  ShapleyMode mode = ShapleyMode::Exact;
  std::size_t n_permutations = 2000;
  std::uint64_t seed = 0;
};

inline constexpr std::size_t kMaxExactShapleyDims = 12;

struct ShapleyResult {
  std::vector<double> phi;
  double v_full = 0.0;
  double v_empty = 0.0;
  double residual = 0.0;  // sum(phi) - (v_full - v_empty)
};

/// Interventional Shapley values of the risk at `instance`, with v(S) the
/// mean risk over background rows whose columns in S are replaced by the
/// instance values.
ShapleyResult shapley_values(const RiskFunction& risk, std::span<const double> instance,
                             const Matrix& background, const ShapleyOptions& options);

/// `n` rows drawn without replacement (all rows when n >= size).
Matrix background_sample(const Matrix& features, std::size_t n, std::uint64_t seed);

/// Mean |phi| over a seeded subsample of `sample_size` rows of eval. Row k
/// uses derive_seed(options.seed, "row", k).
ImportanceReport global_attribution(const RiskFunction& risk, const Cohort& eval, const Matrix& background,
                                    std::size_t sample_size, const ShapleyOptions& options);

}  // namespace survml
