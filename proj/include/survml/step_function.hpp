#pragma once

#include <span>
#include <string>
#include <vector>

namespace survml {

/// Right-continuous piecewise-constant function of time. The value at t is
/// the value of the largest step time <= t, `before_first` ahead of the
/// first step, and the last value beyond the last step.
class StepFunction {
 public:
  StepFunction() = default;
  StepFunction(std::vector<double> times, std::vector<double> values, double before_first);

  static StepFunction constant(double value) { return StepFunction({}, {}, value); }

  double operator()(double t) const;
  /// Left limit: value of the largest step time strictly below t.
  double left_limit(double t) const;
  std::vector<double> evaluate(std::span<const double> ts) const;

  const std::vector<double>& times() const { return times_; }
  const std::vector<double>& values() const { return values_; }
  double before_first() const { return before_first_; }
  std::size_t size() const { return times_.size(); }

  /// Survival-curve invariants: starts at 1, nonincreasing, within [0, 1].
  bool is_survival_curve(double tol = 1e-12) const;
  /// Cumulative-hazard invariants: starts at 0, nondecreasing, >= 0.
  bool is_cumulative_hazard(double tol = 1e-12) const;

  /// Two-column CSV (time,value) with a header row.
  std::string to_csv() const;

  friend bool operator==(const StepFunction&, const StepFunction&) = default;

 private:
  std::vector<double> times_;
  std::vector<double> values_;
  double before_first_ = 0.0;
};

}  // namespace survml
