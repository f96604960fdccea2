#pragma once

#include <span>

#include "survml/data.hpp"
#include "survml/step_function.hpp"

namespace survml {

/// Product-limit survival estimate with steps at distinct event times.
StepFunction kaplan_meier(std::span<const SurvivalTarget> targets);

/// Cumulative hazard sum of d_i / n_i over distinct event times.
StepFunction nelson_aalen(std::span<const SurvivalTarget> targets);

/// Kaplan-Meier of the censoring distribution G. At a tied time deaths
/// leave the risk set before censorings are counted.
StepFunction censoring_survival(std::span<const SurvivalTarget> targets);

/// Breslow cumulative baseline hazard for linear predictor `eta`.
StepFunction breslow_baseline(std::span<const SurvivalTarget> targets, std::span<const double> eta);

/// exp(-H0(t) * exp(eta)) on the support of H0.
StepFunction subject_survival(const StepFunction& baseline_hazard, double eta);

struct CoxCalibration {
  double beta = 0.0;
  StepFunction baseline;  // Breslow H0 at eta = beta * score
  int iterations = 0;
};

/// Single-coefficient Cox fit of eta = beta * score by Newton iteration with
/// step halving (|delta beta| < 1e-8, at most 100 iterations). Throws
/// FitError when the iteration diverges, e.g. under perfect separation.
CoxCalibration cox_calibrate(std::span<const double> scores, std::span<const SurvivalTarget> targets);

}  // namespace survml
