#include "survml/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace survml {

namespace {

// Counts per distinct time, ascending.
struct RiskTable {
  std::vector<double> times;
  std::vector<double> deaths;
  std::vector<double> censored;
  std::vector<double> at_risk;  // subjects with T >= time
};

RiskTable risk_table(std::span<const SurvivalTarget> targets) {
  if (targets.empty()) throw DataError("estimator requires at least one subject");
  validate_targets(targets);
  std::vector<std::size_t> order = iota_indices(targets.size());
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return targets[a].time < targets[b].time; });
  RiskTable t;
  for (std::size_t k = 0; k < order.size();) {
    const double time = targets[order[k]].time;
    double d = 0, c = 0;
    std::size_t j = k;
    for (; j < order.size() && targets[order[j]].time == time; ++j) {
      (targets[order[j]].event ? d : c) += 1.0;
    }
    t.times.push_back(time);
    t.deaths.push_back(d);
    t.censored.push_back(c);
    t.at_risk.push_back(static_cast<double>(order.size() - k));
    k = j;
  }
  return t;
}

}  // namespace

StepFunction kaplan_meier(std::span<const SurvivalTarget> targets) {
  const RiskTable rt = risk_table(targets);
  std::vector<double> times, values;
  double s = 1.0;
  for (std::size_t i = 0; i < rt.times.size(); ++i) {
    if (rt.deaths[i] == 0) continue;
    s *= 1.0 - rt.deaths[i] / rt.at_risk[i];
    times.push_back(rt.times[i]);
    values.push_back(s);
  }
  return {std::move(times), std::move(values), 1.0};
}

StepFunction nelson_aalen(std::span<const SurvivalTarget> targets) {
  const RiskTable rt = risk_table(targets);
  std::vector<double> times, values;
  double h = 0.0;
  for (std::size_t i = 0; i < rt.times.size(); ++i) {
    if (rt.deaths[i] == 0) continue;
    h += rt.deaths[i] / rt.at_risk[i];
    times.push_back(rt.times[i]);
    values.push_back(h);
  }
  return {std::move(times), std::move(values), 0.0};
}

StepFunction censoring_survival(std::span<const SurvivalTarget> targets) {
  const RiskTable rt = risk_table(targets);
  std::vector<double> times, values;
  double g = 1.0;
  for (std::size_t i = 0; i < rt.times.size(); ++i) {
    if (rt.censored[i] == 0) continue;
    g *= 1.0 - rt.censored[i] / (rt.at_risk[i] - rt.deaths[i]);
    times.push_back(rt.times[i]);
    values.push_back(g);
  }
  return {std::move(times), std::move(values), 1.0};
}

StepFunction breslow_baseline(std::span<const SurvivalTarget> targets, std::span<const double> eta) {
  if (targets.size() != eta.size()) throw DataError("breslow_baseline: length mismatch");
  if (targets.empty()) throw DataError("breslow_baseline: empty input");
  validate_targets(targets);
  double shift = -std::numeric_limits<double>::infinity();
  for (double e : eta) {
    if (!std::isfinite(e)) throw DataError("breslow_baseline: non-finite linear predictor");
    shift = std::max(shift, e);
  }
  std::vector<std::size_t> order = iota_indices(targets.size());
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return targets[a].time > targets[b].time; });
  // Walk descending in time accumulating the risk-set sum, then emit steps
  // in ascending order.
  std::vector<double> step_times, increments;
  double risk_sum = 0.0;
  for (std::size_t k = 0; k < order.size();) {
    const double time = targets[order[k]].time;
    double deaths = 0;
    std::size_t j = k;
    for (; j < order.size() && targets[order[j]].time == time; ++j) {
      risk_sum += std::exp(eta[order[j]] - shift);
      deaths += targets[order[j]].event;
    }
    if (deaths > 0) {
      step_times.push_back(time);
      increments.push_back(deaths / risk_sum);
    }
    k = j;
  }
  std::reverse(step_times.begin(), step_times.end());
  std::reverse(increments.begin(), increments.end());
  std::vector<double> values(increments.size());
  const double scale = std::exp(-shift);
  double h = 0.0;
  for (std::size_t i = 0; i < increments.size(); ++i) {
    h += increments[i];
    values[i] = h * scale;
  }
  return {std::move(step_times), std::move(values), 0.0};
}

StepFunction subject_survival(const StepFunction& baseline_hazard, double eta) {
  const double mult = std::exp(eta);
  std::vector<double> values;
  values.reserve(baseline_hazard.size());
  for (double h : baseline_hazard.values()) values.push_back(std::exp(-h * mult));
  return {baseline_hazard.times(), std::move(values), 1.0};
}

namespace {

struct PartialLikelihood {
  double loglik = 0.0;
  double score = 0.0;        // first derivative in beta
  double information = 0.0;  // negative second derivative
};

PartialLikelihood cox_single(std::span<const double> s, std::span<const SurvivalTarget> targets,
                             std::span<const std::size_t> desc_order, double beta) {
  double shift = -std::numeric_limits<double>::infinity();
  for (double v : s) shift = std::max(shift, beta * v);
  PartialLikelihood pl;
  double s0 = 0.0, s1 = 0.0, s2 = 0.0;
  for (std::size_t k = 0; k < desc_order.size();) {
    const double time = targets[desc_order[k]].time;
    std::size_t j = k;
    for (; j < desc_order.size() && targets[desc_order[j]].time == time; ++j) {
      const double x = s[desc_order[j]];
      const double w = std::exp(beta * x - shift);
      s0 += w;
      s1 += w * x;
      s2 += w * x * x;
    }
    const double mean = s1 / s0;
    const double var = std::max(0.0, s2 / s0 - mean * mean);
    for (std::size_t m = k; m < j; ++m) {
      if (!targets[desc_order[m]].event) continue;
      const double x = s[desc_order[m]];
      pl.loglik += beta * x - shift - std::log(s0);
      pl.score += x - mean;
      pl.information += var;
    }
    k = j;
  }
  return pl;
}

}  // namespace

CoxCalibration cox_calibrate(std::span<const double> scores, std::span<const SurvivalTarget> targets) {
  if (scores.size() != targets.size()) throw DataError("cox_calibrate: length mismatch");
  validate_targets(targets);
  std::size_t events = 0;
  for (const auto& t : targets) events += static_cast<std::size_t>(t.event);
  if (events == 0) throw FitError("cox_calibrate: no events");
  if (events < 2) throw FitError("cox_calibrate: at least two events are required");
  for (double v : scores) {
    if (!std::isfinite(v)) throw DataError("cox_calibrate: non-finite score");
  }
  std::vector<std::size_t> order = iota_indices(targets.size());
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return targets[a].time > targets[b].time; });

  CoxCalibration out;
  double beta = 0.0;
  PartialLikelihood cur = cox_single(scores, targets, order, beta);
  bool converged = false;
  for (int it = 1; it <= 100; ++it) {
    out.iterations = it;
    if (cur.information <= 0.0) {
      if (std::abs(cur.score) < 1e-12) {
        converged = true;
        break;
      }
      throw FitError("cox_calibrate: singular information with nonzero score");
    }
    double step = cur.score / cur.information;
    PartialLikelihood next = cox_single(scores, targets, order, beta + step);
    int halvings = 0;
    while (!(next.loglik >= cur.loglik - 1e-12 * std::abs(cur.loglik)) && halvings < 40) {
      step *= 0.5;
      next = cox_single(scores, targets, order, beta + step);
      ++halvings;
    }
    if (!std::isfinite(next.loglik)) throw FitError("cox_calibrate: non-finite likelihood");
    beta += step;
    cur = next;
    if (std::abs(step) < 1e-8) {
      converged = true;
      break;
    }
  }
  if (!converged || !std::isfinite(beta)) {
    throw FitError("cox_calibrate: Newton iteration diverged (beta = " + std::to_string(beta) +
                   " after " + std::to_string(out.iterations) + " iterations)");
  }
  out.beta = beta;
  std::vector<double> eta(scores.size());
  for (std::size_t i = 0; i < eta.size(); ++i) eta[i] = beta * scores[i];
  out.baseline = breslow_baseline(targets, eta);
  return out;
}

}  // namespace survml
