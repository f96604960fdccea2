#include "survml/step_function.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "survml/csv.hpp"

namespace survml {

StepFunction::StepFunction(std::vector<double> times, std::vector<double> values, double before_first)
    : times_(std::move(times)), values_(std::move(values)), before_first_(before_first) {
  if (times_.size() != values_.size()) throw std::invalid_argument("step function: size mismatch");
  for (std::size_t i = 1; i < times_.size(); ++i) {
    if (!(times_[i] > times_[i - 1])) {
      throw std::invalid_argument("step function: times must be strictly increasing");
    }
  }
}

double StepFunction::operator()(double t) const {
  auto it = std::upper_bound(times_.begin(), times_.end(), t);
  if (it == times_.begin()) return before_first_;
  return values_[static_cast<std::size_t>(it - times_.begin()) - 1];
}

double StepFunction::left_limit(double t) const {
  auto it = std::lower_bound(times_.begin(), times_.end(), t);
  if (it == times_.begin()) return before_first_;
  return values_[static_cast<std::size_t>(it - times_.begin()) - 1];
}

std::vector<double> StepFunction::evaluate(std::span<const double> ts) const {
  std::vector<double> out;
  out.reserve(ts.size());
  for (double t : ts) out.push_back((*this)(t));
  return out;
}

bool StepFunction::is_survival_curve(double tol) const {
  if (std::abs(before_first_ - 1.0) > tol) return false;
  double prev = before_first_;
  for (double v : values_) {
    if (v > prev + tol || v < -tol || v > 1.0 + tol) return false;
    prev = v;
  }
  return true;
}

bool StepFunction::is_cumulative_hazard(double tol) const {
  if (std::abs(before_first_) > tol) return false;
  double prev = before_first_;
  for (double v : values_) {
    if (v < prev - tol || v < -tol) return false;
    prev = v;
  }
  return true;
}

std::string StepFunction::to_csv() const {
  std::string out = "time,value\n";
  for (std::size_t i = 0; i < times_.size(); ++i) {
    out += csv::format_double(times_[i]) + "," + csv::format_double(values_[i]) + "\n";
  }
  return out;
}

}  // namespace survml
