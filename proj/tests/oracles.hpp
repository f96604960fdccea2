#pragma once

// Brute-force reference implementations used by the unit and acceptance
// tests. Each one is written directly from the textbook definition and
// shares no code with the library.

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <vector>

#include "survml/data.hpp"

namespace oracle {

using survml::SurvivalTarget;

struct Concordance {
  long long concordant = 0;
  long long discordant = 0;
  long long tied = 0;
  long long comparable = 0;
  double c() const { return (static_cast<double>(concordant) + 0.5 * static_cast<double>(tied)) / comparable; }
};

// All ordered pairs; the earlier subject must be an event. Equal times count
// only when exactly one of the two is an event, which then plays "earlier".
inline Concordance harrell(const std::vector<SurvivalTarget>& t, const std::vector<double>& r) {
  Concordance out;
  for (std::size_t i = 0; i < t.size(); ++i) {
    for (std::size_t j = 0; j < t.size(); ++j) {
      if (i == j || !t[i].event) continue;
      const bool earlier = t[i].time < t[j].time;
      const bool tie_one_event = t[i].time == t[j].time && !t[j].event;
      if (!earlier && !tie_one_event) continue;
      ++out.comparable;
      if (r[i] > r[j]) {
        ++out.concordant;
      } else if (r[i] < r[j]) {
        ++out.discordant;
      } else {
        ++out.tied;
      }
    }
  }
  return out;
}

// Product-limit estimate evaluated at t, right-continuous.
inline double km_at(const std::vector<SurvivalTarget>& t, double at) {
  std::set<double> times;
  for (const auto& s : t) {
    if (s.event) times.insert(s.time);
  }
  double surv = 1.0;
  for (double u : times) {
    if (u > at) break;
    double n = 0, d = 0;
    for (const auto& s : t) {
      if (s.time >= u) ++n;
      if (s.time == u && s.event) ++d;
    }
    surv *= 1.0 - d / n;
  }
  return surv;
}

// Censoring survival with deaths leaving the risk set before tied censorings.
inline double censor_km_at(const std::vector<SurvivalTarget>& t, double at, bool left_limit = false) {
  std::set<double> times;
  for (const auto& s : t) {
    if (!s.event) times.insert(s.time);
  }
  double g = 1.0;
  for (double u : times) {
    if (left_limit ? u >= at : u > at) break;
    double n = 0, c = 0;
    for (const auto& s : t) {
      if (s.time > u || (s.time == u && !s.event)) ++n;
      if (s.time == u && !s.event) ++c;
    }
    g *= 1.0 - c / n;
  }
  return g;
}

inline double nelson_aalen_at(const std::vector<SurvivalTarget>& t, double at) {
  std::set<double> times;
  for (const auto& s : t) {
    if (s.event) times.insert(s.time);
  }
  double h = 0.0;
  for (double u : times) {
    if (u > at) break;
    double n = 0, d = 0;
    for (const auto& s : t) {
      if (s.time >= u) ++n;
      if (s.time == u && s.event) ++d;
    }
    h += d / n;
  }
  return h;
}

// Graf's estimator written as a plain loop; surv(i, t) is the prediction.
inline double brier(const std::vector<SurvivalTarget>& t, double at,
                    const std::function<double(std::size_t, double)>& surv) {
  double total = 0.0;
  const double g_at = censor_km_at(t, at);
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double s = surv(i, at);
    if (t[i].time <= at && t[i].event) {
      total += (0.0 - s) * (0.0 - s) / censor_km_at(t, t[i].time, true);
    } else if (t[i].time > at) {
      total += (1.0 - s) * (1.0 - s) / g_at;
    }
  }
  return total / static_cast<double>(t.size());
}

inline double ibs(const std::vector<SurvivalTarget>& t, const std::vector<double>& grid,
                  const std::function<double(std::size_t, double)>& surv) {
  double area = 0.0;
  double prev = brier(t, grid[0], surv);
  for (std::size_t k = 1; k < grid.size(); ++k) {
    const double cur = brier(t, grid[k], surv);
    area += (grid[k] - grid[k - 1]) * (prev + cur) / 2.0;
    prev = cur;
  }
  return area / (grid.back() - grid.front());
}

// Two-sample log-rank z for the subjects flagged in `left` against the rest.
inline double logrank_z(const std::vector<SurvivalTarget>& t, const std::vector<bool>& left) {
  std::set<double> times;
  for (const auto& s : t) {
    if (s.event) times.insert(s.time);
  }
  double num = 0.0, var = 0.0;
  for (double u : times) {
    double n = 0, d = 0, n1 = 0, d1 = 0;
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (t[i].time < u) continue;
      ++n;
      if (left[i]) ++n1;
      if (t[i].time == u && t[i].event) {
        ++d;
        if (left[i]) ++d1;
      }
    }
    num += d1 - n1 * d / n;
    if (n > 1) var += n1 * (n - n1) * d * (n - d) / (n * n * (n - 1));
  }
  return var > 1e-12 ? std::abs(num) / std::sqrt(var) : 0.0;
}

// Binary AUC of risk against label, ties counting one half.
inline double binary_auc(const std::vector<int>& label, const std::vector<double>& r) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    for (std::size_t j = 0; j < r.size(); ++j) {
      if (label[i] != 1 || label[j] != 0) continue;
      den += 1.0;
      num += r[i] > r[j] ? 1.0 : (r[i] == r[j] ? 0.5 : 0.0);
    }
  }
  return num / den;
}

inline std::vector<double> central_difference(const std::function<double(const std::vector<double>&)>& f,
                                              std::vector<double> x, double h = 1e-5) {
  std::vector<double> g(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double x0 = x[k];
    x[k] = x0 + h;
    const double up = f(x);
    x[k] = x0 - h;
    const double down = f(x);
    x[k] = x0;
    g[k] = (up - down) / (2.0 * h);
  }
  return g;
}

inline double relative_error(double analytic, double numeric, double floor = 1e-3) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

// Two-sample Kolmogorov-Smirnov statistic and its asymptotic p-value.
inline double ks_pvalue(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / a.size() - static_cast<double>(j) / b.size()));
  }
  const double ne = static_cast<double>(a.size() * b.size()) / static_cast<double>(a.size() + b.size());
  const double lambda = (std::sqrt(ne) + 0.12 + 0.11 / std::sqrt(ne)) * d;
  double p = 0.0;
  for (int k = 1; k <= 100; ++k) {
    p += 2.0 * ((k % 2) ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lambda * lambda);
  }
  return std::clamp(p, 0.0, 1.0);
}

// Random survival data with censoring and deliberate ties in time and risk.
struct Instance {
  std::vector<SurvivalTarget> targets;
  std::vector<double> risks;
};

inline Instance random_instance(std::mt19937_64& rng, std::size_t n, double censor_p, int time_levels,
                                int risk_levels) {
  std::uniform_int_distribution<int> tdist(1, time_levels);
  std::uniform_int_distribution<int> rdist(1, risk_levels);
  std::bernoulli_distribution cens(censor_p);
  Instance out;
  for (std::size_t i = 0; i < n; ++i) {
    out.targets.push_back({static_cast<double>(tdist(rng)) * 0.5, cens(rng) ? 0 : 1});
    out.risks.push_back(static_cast<double>(rdist(rng)) * 0.25);
  }
  return out;
}

}  // namespace oracle
