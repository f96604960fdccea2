#include "survml/explain.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <optional>

#include "survml/csv.hpp"
#include "survml/estimators.hpp"
#include "survml/metrics.hpp"

namespace survml {

RiskFunction risk_function(const FittedModel& model) {
  return [&model](const Matrix& x) { return predict_risk(model, x); };
}

std::vector<std::size_t> ImportanceReport::ranking() const {
  std::vector<std::size_t> order = iota_indices(values.size());
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });
  return order;
}

std::string importance_csv(const ImportanceReport& report) {
  std::string out = "feature,value,dispersion\n";
  for (std::size_t i : report.ranking()) {
    out += csv::join_row({report.features[i], csv::format_double(report.values[i]),
                          csv::format_double(report.dispersion[i])});
    out += '\n';
  }
  return out;
}

namespace {

void summarize(ImportanceReport& r) {
  r.values.clear();
  r.dispersion.clear();
  for (const auto& raw : r.raw) {
    double mean = 0.0;
    for (double v : raw) mean += v;
    mean /= static_cast<double>(std::max<std::size_t>(raw.size(), 1));
    double var = 0.0;
    for (double v : raw) var += (v - mean) * (v - mean);
    r.values.push_back(mean);
    r.dispersion.push_back(raw.size() > 1 ? std::sqrt(var / static_cast<double>(raw.size() - 1)) : 0.0);
  }
}

}  // namespace

ImportanceReport permutation_importance(const RiskFunction& risk, const Cohort& eval,
                                        const PermutationOptions& options) {
  if (eval.size() == 0) throw DataError("permutation_importance: empty evaluation cohort");
  if (options.n_repeats == 0) throw ConfigError("permutation_importance: n_repeats must be >= 1");
  std::optional<StepFunction> g;
  double tau = 0.0;
  if (options.metric == ImportanceMetric::IpcwC) {
    g = censoring_survival(eval.targets);
    tau = default_tau(eval.targets, *g);
  }
  auto metric = [&](const Matrix& x) {
    const auto r = risk(x);
    return g ? ipcw_c(eval.targets, r, *g, tau).c_index : harrell_c(eval.targets, r).c_index;
  };
  const double baseline = metric(eval.features);

  ImportanceReport rep;
  rep.features = eval.column_names();
  rep.raw.assign(eval.dims(), {});
  const std::size_t n = eval.size();
  for (std::size_t f = 0; f < eval.dims(); ++f) {
    Rng rng(derive_seed(options.seed, "feature", f));
    const std::vector<double> column = eval.features.column(f);
    Matrix x = eval.features;
    for (std::size_t rep_i = 0; rep_i < options.n_repeats; ++rep_i) {
      std::vector<std::size_t> perm = iota_indices(n);
      if (!options.identity_permutation) shuffle_indices(perm, rng);
      for (std::size_t i = 0; i < n; ++i) x(i, f) = column[perm[i]];
      rep.raw[f].push_back(baseline - metric(x));
    }
  }
  summarize(rep);
  return rep;
}

namespace {

// Mean risk for each coalition mask, one batched prediction for all of them.
std::vector<double> coalition_values(const RiskFunction& risk, std::span<const double> instance,
                                     const Matrix& background, const std::vector<std::uint32_t>& masks) {
  const std::size_t b = background.rows(), d = background.cols();
  Matrix hybrid(masks.size() * b, d);
  for (std::size_t m = 0; m < masks.size(); ++m) {
    for (std::size_t r = 0; r < b; ++r) {
      const auto src = background.row(r);
      auto dst = hybrid.row(m * b + r);
      for (std::size_t c = 0; c < d; ++c) dst[c] = (masks[m] >> c) & 1u ? instance[c] : src[c];
    }
  }
  const auto pred = risk(hybrid);
  if (pred.size() != hybrid.rows()) throw DataError("risk function returned the wrong number of rows");
  std::vector<double> v(masks.size(), 0.0);
  for (std::size_t m = 0; m < masks.size(); ++m) {
    double s = 0.0;
    for (std::size_t r = 0; r < b; ++r) s += pred[m * b + r];
    v[m] = s / static_cast<double>(b);
  }
  return v;
}

}  // namespace

ShapleyResult shapley_values(const RiskFunction& risk, std::span<const double> instance,
                             const Matrix& background, const ShapleyOptions& options) {
  const std::size_t d = background.cols();
  if (background.rows() == 0) throw DataError("shapley_values: empty background");
  if (instance.size() != d) throw DataError("shapley_values: instance has the wrong dimension");
  if (d == 0) throw DataError("shapley_values: no features");
  if (d > 31) throw DataError("shapley_values: at most 31 features are supported");
  ShapleyResult res;
  res.phi.assign(d, 0.0);
  const std::uint32_t full = (d == 32) ? ~0u : ((1u << d) - 1u);

  if (options.mode == ShapleyMode::Exact) {
    if (d > kMaxExactShapleyDims) {
      throw ConfigError("exact Shapley values need at most " + std::to_string(kMaxExactShapleyDims) +
                        " features, got " + std::to_string(d));
    }
    std::vector<std::uint32_t> masks(std::size_t{1} << d);
    for (std::size_t m = 0; m < masks.size(); ++m) masks[m] = static_cast<std::uint32_t>(m);
    const auto v = coalition_values(risk, instance, background, masks);
    // weight[k] = k! (d-k-1)! / d!
    std::vector<double> weight(d);
    for (std::size_t k = 0; k < d; ++k) {
      weight[k] = std::exp(std::lgamma(static_cast<double>(k) + 1.0) +
                           std::lgamma(static_cast<double>(d - k)) - std::lgamma(static_cast<double>(d) + 1.0));
    }
    for (std::uint32_t m = 0; m <= full; ++m) {
      const auto size = static_cast<std::size_t>(std::popcount(m));
      for (std::size_t i = 0; i < d; ++i) {
        if ((m >> i) & 1u) continue;
        res.phi[i] += weight[size] * (v[m | (1u << i)] - v[m]);
      }
      if (m == full) break;
    }
    res.v_full = v[full];
    res.v_empty = v[0];
  } else {
    if (options.n_permutations == 0) throw ConfigError("shapley_values: n_permutations must be >= 1");
    Rng rng(options.seed);
    const std::vector<std::uint32_t> ends = {0u, full};
    const auto v_ends = coalition_values(risk, instance, background, ends);
    res.v_empty = v_ends[0];
    res.v_full = v_ends[1];
    std::vector<std::uint32_t> masks(d);
    for (std::size_t p = 0; p < options.n_permutations; ++p) {
      std::vector<std::size_t> order = iota_indices(d);
      shuffle_indices(order, rng);
      std::uint32_t m = 0;
      for (std::size_t k = 0; k < d; ++k) {
        m |= 1u << order[k];
        masks[k] = m;
      }
      const auto v = coalition_values(risk, instance, background, masks);
      double prev = res.v_empty;
      for (std::size_t k = 0; k < d; ++k) {
        res.phi[order[k]] += v[k] - prev;
        prev = v[k];
      }
    }
    for (double& x : res.phi) x /= static_cast<double>(options.n_permutations);
  }
  double sum = 0.0;
  for (double x : res.phi) sum += x;
  res.residual = sum - (res.v_full - res.v_empty);
  return res;
}

Matrix background_sample(const Matrix& features, std::size_t n, std::uint64_t seed) {
  if (features.rows() == 0) throw DataError("background_sample: no rows");
  if (n >= features.rows()) return features;
  std::vector<std::size_t> idx = iota_indices(features.rows());
  Rng rng(seed);
  shuffle_indices(idx, rng);
  idx.resize(n);
  std::sort(idx.begin(), idx.end());
  return features.select_rows(idx);
}

ImportanceReport global_attribution(const RiskFunction& risk, const Cohort& eval, const Matrix& background,
                                    std::size_t sample_size, const ShapleyOptions& options) {
  if (sample_size == 0 || sample_size > eval.size()) {
    throw ConfigError("global_attribution: sample size must be in [1, " + std::to_string(eval.size()) + "]");
  }
  std::vector<std::size_t> rows = iota_indices(eval.size());
  if (sample_size < eval.size()) {
    Rng rng(derive_seed(options.seed, "rows"));
    shuffle_indices(rows, rng);
    rows.resize(sample_size);
    std::sort(rows.begin(), rows.end());
  }
  std::vector<std::vector<double>> phis(rows.size());
  parallel_for(rows.size(), [&](std::size_t k) {
    ShapleyOptions local = options;
    local.seed = derive_seed(options.seed, "row", k);
    phis[k] = shapley_values(risk, eval.features.row(rows[k]), background, local).phi;
  });
  ImportanceReport rep;
  rep.features = eval.column_names();
  rep.raw.assign(eval.dims(), {});
  for (const auto& phi : phis) {
    for (std::size_t f = 0; f < phi.size(); ++f) rep.raw[f].push_back(std::abs(phi[f]));
  }
  summarize(rep);
  return rep;
}

}  // namespace survml
