#include "survml/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace survml {

namespace {

void check_inputs(std::span<const SurvivalTarget> targets, std::span<const double> risks) {
  if (targets.size() != risks.size()) throw MetricError("risk and target lengths differ");
  for (double r : risks) {
    if (!std::isfinite(r)) throw MetricError("non-finite risk score");
  }
  validate_targets(targets);
}

// Counts of inserted risks by rank.
class Fenwick {
 public:
  explicit Fenwick(std::size_t n) : tree_(n + 1, 0) {}
  void add(std::size_t rank) {
    for (std::size_t i = rank + 1; i < tree_.size(); i += i & (~i + 1)) ++tree_[i];
    ++total_;
  }
  // Number of inserted entries with rank < r.
  long long below(std::size_t r) const {
    long long s = 0;
    for (std::size_t i = r; i > 0; i -= i & (~i + 1)) s += tree_[i];
    return s;
  }
  long long total() const { return total_; }

 private:
  std::vector<long long> tree_;
  long long total_ = 0;
};

std::vector<std::size_t> risk_ranks(std::span<const double> risks) {
  std::vector<double> sorted(risks.begin(), risks.end());
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  std::vector<std::size_t> ranks(risks.size());
  for (std::size_t i = 0; i < risks.size(); ++i) {
    ranks[i] = static_cast<std::size_t>(std::lower_bound(sorted.begin(), sorted.end(), risks[i]) -
                                        sorted.begin());
  }
  return ranks;
}

std::vector<std::size_t> by_time_desc(std::span<const SurvivalTarget> targets) {
  std::vector<std::size_t> order = iota_indices(targets.size());
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return targets[a].time > targets[b].time; });
  return order;
}

void finish(ConcordanceResult& r) {
  if (!(r.comparable > 0.0)) throw MetricError("no comparable pairs");
  r.c_index = (r.concordant + 0.5 * r.tied_risk) / r.comparable;
}

}  // namespace

ConcordanceResult harrell_c(std::span<const SurvivalTarget> targets, std::span<const double> risks) {
  check_inputs(targets, risks);
  const auto ranks = risk_ranks(risks);
  const auto order = by_time_desc(targets);
  Fenwick fw(targets.size());
  long long conc = 0, disc = 0, tied = 0;
  // Descending time groups. Censored members of a group join the comparison
  // set before its events are queried, events only after.
  for (std::size_t k = 0; k < order.size();) {
    std::size_t j = k;
    while (j < order.size() && targets[order[j]].time == targets[order[k]].time) ++j;
    for (std::size_t m = k; m < j; ++m) {
      if (!targets[order[m]].event) fw.add(ranks[order[m]]);
    }
    for (std::size_t m = k; m < j; ++m) {
      if (!targets[order[m]].event) continue;
      const std::size_t r = ranks[order[m]];
      const long long lower = fw.below(r);
      const long long not_above = fw.below(r + 1);
      conc += lower;
      tied += not_above - lower;
      disc += fw.total() - not_above;
    }
    for (std::size_t m = k; m < j; ++m) {
      if (targets[order[m]].event) fw.add(ranks[order[m]]);
    }
    k = j;
  }
  ConcordanceResult out;
  out.concordant = static_cast<double>(conc);
  out.discordant = static_cast<double>(disc);
  out.tied_risk = static_cast<double>(tied);
  out.comparable = static_cast<double>(conc + disc + tied);
  finish(out);
  return out;
}

double default_tau(std::span<const SurvivalTarget> targets, const StepFunction& censor_dist) {
  double tau = -1.0;
  for (const auto& t : targets) {
    if (t.event && t.time > tau && censor_dist(t.time) > 0.0) tau = t.time;
  }
  if (tau < 0.0) throw MetricError("no event time with positive censoring survival");
  return tau;
}

ConcordanceResult ipcw_c(std::span<const SurvivalTarget> targets, std::span<const double> risks,
                         const StepFunction& censor_dist, double tau) {
  check_inputs(targets, risks);
  const auto ranks = risk_ranks(risks);
  const auto order = by_time_desc(targets);
  Fenwick fw(targets.size());
  ConcordanceResult out;
  for (std::size_t k = 0; k < order.size();) {
    std::size_t j = k;
    while (j < order.size() && targets[order[j]].time == targets[order[k]].time) ++j;
    const double time = targets[order[k]].time;
    if (time < tau) {
      for (std::size_t m = k; m < j; ++m) {
        if (!targets[order[m]].event) continue;
        const double g = censor_dist(time);
        if (!(g > 0.0)) throw MetricError("censoring survival is zero at a contributing event time");
        const double w = 1.0 / (g * g);
        const std::size_t r = ranks[order[m]];
        const auto lower = static_cast<double>(fw.below(r));
        const auto not_above = static_cast<double>(fw.below(r + 1));
        const auto total = static_cast<double>(fw.total());
        out.concordant += w * lower;
        out.tied_risk += w * (not_above - lower);
        out.discordant += w * (total - not_above);
        out.comparable += w * total;
      }
    }
    for (std::size_t m = k; m < j; ++m) fw.add(ranks[order[m]]);
    k = j;
  }
  if (!(out.comparable > 0.0)) throw MetricError("zero weighted comparable mass");
  out.c_index = (out.concordant + 0.5 * out.tied_risk) / out.comparable;
  return out;
}

namespace {

double quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

}  // namespace

TimeGrid make_time_grid(std::span<const SurvivalTarget> targets, const StepFunction& censor_dist,
                        std::size_t resolution, double lower_quantile, double upper_quantile) {
  if (targets.empty()) throw MetricError("time grid: no subjects");
  if (resolution < 2) throw MetricError("time grid: resolution must be >= 2");
  std::vector<double> times;
  for (const auto& t : targets) times.push_back(t.time);
  double lo = quantile(times, lower_quantile);
  double hi = std::min(quantile(times, upper_quantile), default_tau(targets, censor_dist));
  if (!(hi > lo)) throw MetricError("time grid: empty evaluation window");
  TimeGrid g;
  g.times.resize(resolution);
  for (std::size_t k = 0; k < resolution; ++k) {
    g.times[k] = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(resolution - 1);
  }
  g.times.back() = hi;
  validate_grid(g, censor_dist);
  return g;
}

void validate_grid(const TimeGrid& grid, const StepFunction& censor_dist) {
  if (grid.times.empty()) throw MetricError("time grid is empty");
  for (std::size_t k = 0; k < grid.times.size(); ++k) {
    if (k > 0 && !(grid.times[k] > grid.times[k - 1])) {
      throw MetricError("time grid must be strictly increasing");
    }
    if (!(censor_dist(grid.times[k]) > 0.0)) {
      throw MetricError("censoring survival is zero at grid time " + std::to_string(grid.times[k]));
    }
  }
}

double brier(double t, std::span<const double> predicted_survival,
             std::span<const SurvivalTarget> targets, const StepFunction& censor_dist) {
  if (predicted_survival.size() != targets.size()) throw MetricError("brier: length mismatch");
  const double g_t = censor_dist(t);
  if (!(g_t > 0.0)) throw MetricError("brier: censoring survival is zero at t");
  double sum = 0.0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const double s = predicted_survival[i];
    if (targets[i].time <= t && targets[i].event) {
      const double g = censor_dist.left_limit(targets[i].time);
      if (!(g > 0.0)) throw MetricError("brier: censoring survival is zero before an event");
      sum += s * s / g;
    } else if (targets[i].time > t) {
      sum += (1.0 - s) * (1.0 - s) / g_t;
    }
  }
  return sum / static_cast<double>(targets.size());
}

double ibs(const TimeGrid& grid, const Matrix& survival_on_grid,
           std::span<const SurvivalTarget> targets, const StepFunction& censor_dist) {
  if (grid.times.size() < 2) throw MetricError("ibs: grid needs at least two points");
  if (survival_on_grid.rows() != targets.size() || survival_on_grid.cols() != grid.times.size()) {
    throw MetricError("ibs: survival matrix shape does not match targets x grid");
  }
  std::vector<double> scores(grid.times.size());
  std::vector<double> column(targets.size());
  for (std::size_t k = 0; k < grid.times.size(); ++k) {
    for (std::size_t i = 0; i < targets.size(); ++i) column[i] = survival_on_grid(i, k);
    scores[k] = brier(grid.times[k], column, targets, censor_dist);
  }
  double integral = 0.0;
  for (std::size_t k = 1; k < grid.times.size(); ++k) {
    integral += 0.5 * (scores[k] + scores[k - 1]) * (grid.times[k] - grid.times[k - 1]);
  }
  return integral / (grid.times.back() - grid.times.front());
}

double ibs(const TimeGrid& grid, std::span<const StepFunction> curves,
           std::span<const SurvivalTarget> targets, const StepFunction& censor_dist) {
  if (curves.size() != targets.size()) throw MetricError("ibs: curve and target counts differ");
  Matrix m(curves.size(), grid.times.size());
  for (std::size_t i = 0; i < curves.size(); ++i) {
    for (std::size_t k = 0; k < grid.times.size(); ++k) m(i, k) = curves[i](grid.times[k]);
  }
  return ibs(grid, m, targets, censor_dist);
}

TdAucResult td_auc(std::span<const SurvivalTarget> targets, std::span<const double> risks,
                   const TimeGrid& grid, const StepFunction& censor_dist) {
  check_inputs(targets, risks);
  TdAucResult out;
  std::vector<double> control_risks;
  for (double t : grid.times) {
    control_risks.clear();
    for (std::size_t j = 0; j < targets.size(); ++j) {
      if (targets[j].time > t) control_risks.push_back(risks[j]);
    }
    std::sort(control_risks.begin(), control_risks.end());
    double num = 0.0, case_weight = 0.0;
    for (std::size_t i = 0; i < targets.size(); ++i) {
      if (!(targets[i].time <= t && targets[i].event)) continue;
      const double g = censor_dist.left_limit(targets[i].time);
      if (!(g > 0.0)) throw MetricError("td_auc: censoring survival is zero before a case");
      const double w = 1.0 / g;
      const auto lower = std::lower_bound(control_risks.begin(), control_risks.end(), risks[i]);
      const auto upper = std::upper_bound(lower, control_risks.end(), risks[i]);
      num += w * (static_cast<double>(lower - control_risks.begin()) +
                  0.5 * static_cast<double>(upper - lower));
      case_weight += w;
    }
    if (case_weight == 0.0 || control_risks.empty()) {
      out.dropped.push_back(t);
      continue;
    }
    out.times.push_back(t);
    out.values.push_back(num / (case_weight * static_cast<double>(control_risks.size())));
  }
  if (!out.dropped.empty()) {
    warn("td_auc: dropped " + std::to_string(out.dropped.size()) +
         " evaluation time(s) lacking cases or controls");
  }
  if (out.values.empty()) throw MetricError("td_auc: no evaluation time has both cases and controls");
  out.mean = std::accumulate(out.values.begin(), out.values.end(), 0.0) /
             static_cast<double>(out.values.size());
  out.endpoint_mean = 0.5 * (out.values.front() + out.values.back());
  return out;
}

}  // namespace survml
