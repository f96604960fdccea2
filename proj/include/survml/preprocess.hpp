#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "survml/data.hpp"

namespace survml {

struct ColumnEncoding {
  std::string name;
  ColumnKind kind = ColumnKind::Numeric;
  // ordinal
  std::vector<std::string> categories;  // rank = position
  bool lexicographic_fallback = false;
  // numeric
  double mean = 0.0;
  double sd = 0.0;  // population standard deviation
};

/// Fitted per-column encoding: category ranks for ordinal columns, mean and
/// population sd for numeric ones. Immutable after fit_encoder.
class EncoderState {
 public:
  EncoderState() = default;
  explicit EncoderState(std::vector<ColumnEncoding> columns);

  const std::vector<ColumnEncoding>& columns() const { return columns_; }
  /// Rank of `category` in ordinal column `col`; throws DataError naming
  /// the column and category when unseen.
  std::size_t rank(std::size_t col, const std::string& category) const;
  /// Ordinal columns whose order came from sorting observed labels.
  std::vector<std::string> lexicographic_fallbacks() const;

 private:
  std::vector<ColumnEncoding> columns_;
  std::vector<std::map<std::string, std::size_t>> ranks_;
};

using CategoryOrders = std::map<std::string, std::vector<std::string>>;

/// Ordinal columns take the supplied order (argument first, then column
/// metadata), falling back to the lexicographic order of observed labels.
EncoderState fit_encoder(const Cohort& train, const CategoryOrders& category_orders = {});

/// Ordinal labels become ranks; numeric columns become (x - mean) / sd,
/// or 0 where the fitted sd is 0. Targets and weights pass through.
Cohort transform(const EncoderState& state, const Cohort& cohort);

/// Exact inverse of the numeric standardization for one column.
double inverse_numeric(const ColumnEncoding& enc, double z);

struct TrainTest {
  Cohort train;
  Cohort test;
  std::vector<std::size_t> train_rows;
  std::vector<std::size_t> test_rows;
};

/// Seeded shuffle split. With stratification each event stratum contributes
/// round(fraction * stratum size) test rows.
TrainTest split(const Cohort& cohort, double test_fraction, bool stratify_on_event,
                std::uint64_t seed);

/// k disjoint folds covering 0..n-1, sizes differing by at most one.
std::vector<std::vector<std::size_t>> kfold(std::size_t n, std::size_t k, std::uint64_t seed);

/// Same contract as kfold, with events and non-events dealt round-robin
/// so every fold has close to the overall event rate.
std::vector<std::vector<std::size_t>> stratified_kfold(std::span<const SurvivalTarget> targets,
                                                       std::size_t k, std::uint64_t seed);

}  // namespace survml
