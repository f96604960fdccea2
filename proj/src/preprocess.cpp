#include "survml/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace survml {

EncoderState::EncoderState(std::vector<ColumnEncoding> columns) : columns_(std::move(columns)) {
  ranks_.resize(columns_.size());
  for (std::size_t c = 0; c < columns_.size(); ++c) {
    if (columns_[c].kind != ColumnKind::Ordinal) {
      if (!(columns_[c].sd >= 0.0)) throw DataError("encoder: negative sd for " + columns_[c].name);
      continue;
    }
    for (std::size_t r = 0; r < columns_[c].categories.size(); ++r) {
      if (!ranks_[c].emplace(columns_[c].categories[r], r).second) {
        throw DataError("encoder: duplicate category '" + columns_[c].categories[r] +
                        "' in column " + columns_[c].name);
      }
    }
  }
}

std::size_t EncoderState::rank(std::size_t col, const std::string& category) const {
  auto it = ranks_.at(col).find(category);
  if (it == ranks_[col].end()) {
    throw DataError("column '" + columns_[col].name + "': category '" + category +
                    "' was not seen when the encoder was fitted");
  }
  return it->second;
}

std::vector<std::string> EncoderState::lexicographic_fallbacks() const {
  std::vector<std::string> out;
  for (const auto& c : columns_) {
    if (c.kind == ColumnKind::Ordinal && c.lexicographic_fallback) out.push_back(c.name);
  }
  return out;
}

EncoderState fit_encoder(const Cohort& train, const CategoryOrders& category_orders) {
  if (train.size() == 0) throw DataError("fit_encoder: empty cohort");
  std::vector<ColumnEncoding> cols;
  const double n = static_cast<double>(train.size());
  for (std::size_t c = 0; c < train.dims(); ++c) {
    const ColumnInfo& info = train.columns[c];
    ColumnEncoding enc;
    enc.name = info.name;
    enc.kind = info.kind;
    if (info.kind == ColumnKind::Ordinal) {
      if (auto it = category_orders.find(info.name); it != category_orders.end()) {
        enc.categories = it->second;
      } else if (!info.categories.empty()) {
        enc.categories = info.categories;
      } else {
        std::set<std::string> seen;
        if (train.category_labels[c].empty()) {
          throw DataError("fit_encoder: ordinal column '" + info.name +
                          "' has no labels and no configured order");
        }
        seen.insert(train.category_labels[c].begin(), train.category_labels[c].end());
        enc.categories.assign(seen.begin(), seen.end());
        enc.lexicographic_fallback = true;
        warn("ordinal column '" + info.name + "' has no configured order; using lexicographic order");
      }
    } else {
      double sum = 0.0;
      for (std::size_t r = 0; r < train.size(); ++r) sum += train.features(r, c);
      enc.mean = sum / n;
      double ss = 0.0;
      for (std::size_t r = 0; r < train.size(); ++r) {
        const double dlt = train.features(r, c) - enc.mean;
        ss += dlt * dlt;
      }
      enc.sd = std::sqrt(ss / n);
      if (enc.sd == 0.0) warn("numeric column '" + info.name + "' is constant; it will encode to 0");
    }
    cols.push_back(std::move(enc));
  }
  return EncoderState(std::move(cols));
}

Cohort transform(const EncoderState& state, const Cohort& cohort) {
  if (state.columns().size() != cohort.dims()) {
    throw DataError("transform: encoder has " + std::to_string(state.columns().size()) +
                    " columns, cohort has " + std::to_string(cohort.dims()));
  }
  Cohort out = cohort;
  for (std::size_t c = 0; c < cohort.dims(); ++c) {
    const ColumnEncoding& enc = state.columns()[c];
    if (enc.name != cohort.columns[c].name) {
      throw DataError("transform: column " + std::to_string(c) + " is '" + cohort.columns[c].name +
                      "', encoder expects '" + enc.name + "'");
    }
    if (enc.kind == ColumnKind::Ordinal) {
      const auto& labels = cohort.category_labels[c];
      if (labels.empty()) throw DataError("transform: column '" + enc.name + "' is already encoded");
      for (std::size_t r = 0; r < cohort.size(); ++r) {
        out.features(r, c) = static_cast<double>(state.rank(c, labels[r]));
      }
      out.category_labels[c].clear();
      out.columns[c].categories = enc.categories;
    } else {
      for (std::size_t r = 0; r < cohort.size(); ++r) {
        out.features(r, c) = enc.sd > 0.0 ? (cohort.features(r, c) - enc.mean) / enc.sd : 0.0;
      }
    }
  }
  return out;
}

double inverse_numeric(const ColumnEncoding& enc, double z) { return z * enc.sd + enc.mean; }

TrainTest split(const Cohort& cohort, double test_fraction, bool stratify_on_event,
                std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw ConfigError("split: test_fraction must be in (0, 1)");
  }
  const std::size_t n = cohort.size();
  Rng rng(seed);
  std::vector<std::vector<std::size_t>> strata(stratify_on_event ? 2 : 1);
  for (std::size_t i = 0; i < n; ++i) {
    strata[stratify_on_event ? cohort.targets[i].event : 0].push_back(i);
  }
  TrainTest tt;
  for (auto& s : strata) {
    shuffle_indices(s, rng);
    const auto n_test = static_cast<std::size_t>(std::llround(test_fraction * double(s.size())));
    tt.test_rows.insert(tt.test_rows.end(), s.begin(), s.begin() + n_test);
    tt.train_rows.insert(tt.train_rows.end(), s.begin() + n_test, s.end());
  }
  if (tt.train_rows.empty() || tt.test_rows.empty()) {
    throw DataError("split: cohort of " + std::to_string(n) +
                    " rows is too small to populate both parts");
  }
  std::sort(tt.train_rows.begin(), tt.train_rows.end());
  std::sort(tt.test_rows.begin(), tt.test_rows.end());
  tt.train = cohort.subset(tt.train_rows);
  tt.test = cohort.subset(tt.test_rows);
  return tt;
}

namespace {

std::vector<std::vector<std::size_t>> deal(const std::vector<std::size_t>& order, std::size_t k) {
  std::vector<std::vector<std::size_t>> folds(k);
  for (std::size_t i = 0; i < order.size(); ++i) folds[i % k].push_back(order[i]);
  for (auto& f : folds) std::sort(f.begin(), f.end());
  return folds;
}

void check_folds(std::size_t n, std::size_t k) {
  if (k < 2) throw DataError("kfold: k must be >= 2");
  if (k > n) throw DataError("kfold: k = " + std::to_string(k) + " exceeds n = " + std::to_string(n));
}

}  // namespace

std::vector<std::vector<std::size_t>> kfold(std::size_t n, std::size_t k, std::uint64_t seed) {
  check_folds(n, k);
  Rng rng(seed);
  auto order = iota_indices(n);
  shuffle_indices(order, rng);
  return deal(order, k);
}

std::vector<std::vector<std::size_t>> stratified_kfold(std::span<const SurvivalTarget> targets,
                                                       std::size_t k, std::uint64_t seed) {
  check_folds(targets.size(), k);
  Rng rng(seed);
  std::vector<std::size_t> events, censored;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    (targets[i].event ? events : censored).push_back(i);
  }
  shuffle_indices(events, rng);
  shuffle_indices(censored, rng);
  std::vector<std::size_t> order = std::move(events);
  order.insert(order.end(), censored.begin(), censored.end());
  return deal(order, k);
}

}  // namespace survml
