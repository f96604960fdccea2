#pragma once

#include <span>
#include <vector>

#include "survml/data.hpp"
#include "survml/step_function.hpp"

namespace survml {

// Every metric takes risks with the convention higher = earlier event.

struct ConcordanceResult {
  double c_index = 0.0;
  // Pair counts for Harrell, weighted sums for IPCW.
  double concordant = 0.0;
  double discordant = 0.0;
  double tied_risk = 0.0;
  double comparable = 0.0;

  friend bool operator==(const ConcordanceResult&, const ConcordanceResult&) = default;
};

/// Harrell's C. A pair is comparable when the shorter time is an event, or
/// when times tie and exactly one of the two is an event. Risk ties score 0.5.
/// Runs in O(n log n).
ConcordanceResult harrell_c(std::span<const SurvivalTarget> targets, std::span<const double> risks);

/// Largest event time t in `targets` with censor_dist(t) > 0.
double default_tau(std::span<const SurvivalTarget> targets, const StepFunction& censor_dist);

/// Uno's IPCW concordance: event i with T_i < tau is paired with every j
/// with T_j > T_i, weighted by G(T_i)^-2.
ConcordanceResult ipcw_c(std::span<const SurvivalTarget> targets, std::span<const double> risks,
                         const StepFunction& censor_dist, double tau);

/// Evaluation times for the Brier score and time-dependent AUC.
struct TimeGrid {
  std::vector<double> times;
};

/// `resolution` equally spaced points between the lower and upper quantiles
/// of observed times, the upper end capped at default_tau.
TimeGrid make_time_grid(std::span<const SurvivalTarget> targets, const StepFunction& censor_dist,
                        std::size_t resolution = 100, double lower_quantile = 0.05,
                        double upper_quantile = 0.95);

/// Throws MetricError unless times are nonempty, strictly increasing and
/// have G(t) > 0.
void validate_grid(const TimeGrid& grid, const StepFunction& censor_dist);

/// Graf's IPCW Brier score at time t.
double brier(double t, std::span<const double> predicted_survival,
             std::span<const SurvivalTarget> targets, const StepFunction& censor_dist);

/// Trapezoidal integral of the Brier score over the grid, divided by its span.
double ibs(const TimeGrid& grid, std::span<const StepFunction> curves,
           std::span<const SurvivalTarget> targets, const StepFunction& censor_dist);

/// Same, with survival probabilities already evaluated: row i, column k is
/// subject i at grid.times[k].
double ibs(const TimeGrid& grid, const Matrix& survival_on_grid,
           std::span<const SurvivalTarget> targets, const StepFunction& censor_dist);

struct TdAucResult {
  std::vector<double> times;   // times that had both cases and controls
  std::vector<double> values;  // AUC at each retained time
  std::vector<double> dropped; // times without cases or controls
  double mean = 0.0;           // simple mean over retained times
  double endpoint_mean = 0.0;  // mean of first and last retained values
};

/// Cumulative/dynamic AUC(t). Cases (T_i <= t, event) carry weight
/// 1 / G(T_i-); controls are subjects with T_j > t.
TdAucResult td_auc(std::span<const SurvivalTarget> targets, std::span<const double> risks,
                   const TimeGrid& grid, const StepFunction& censor_dist);

}  // namespace survml
