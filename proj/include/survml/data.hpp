#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "survml/common.hpp"
#include "survml/config.hpp"

namespace survml {

/// Observed follow-up in months and whether it ended in death (1) or
/// censoring (0).
struct SurvivalTarget {
  double time = 0.0;
  int event = 0;

  friend bool operator==(const SurvivalTarget&, const SurvivalTarget&) = default;
};

void validate_targets(std::span<const SurvivalTarget> targets);

enum class ColumnKind { Numeric, Ordinal };

struct ColumnInfo {
  std::string name;
  ColumnKind kind = ColumnKind::Numeric;
  /// Category order for ordinal columns, lowest rank first. Empty means
  /// "not fixed by configuration".
  std::vector<std::string> categories;
};

/// Feature matrix plus survival labels. Ordinal columns that are not yet
/// encoded keep their labels in `category_labels[column]` and hold NaN in
/// `features`; encoded cohorts have every `category_labels` entry empty.
struct Cohort {
  Matrix features;
  std::vector<ColumnInfo> columns;
  std::vector<SurvivalTarget> targets;
  std::optional<std::vector<double>> weights;
  std::vector<std::vector<std::string>> category_labels;

  std::size_t size() const { return targets.size(); }
  std::size_t dims() const { return columns.size(); }
  bool encoded() const;

  Cohort subset(std::span<const std::size_t> rows) const;
  std::vector<std::string> column_names() const;
  /// Checks shape consistency, target ranges, weights and, for encoded
  /// cohorts, that every feature is finite.
  void validate() const;
};

std::vector<double> event_times(std::span<const SurvivalTarget> targets);

// ---------------------------------------------------------------------------
// Registry records

using Date = std::chrono::sys_days;

std::optional<Date> parse_date(const std::string& text);
std::string format_date(Date d);

struct RawRecord {
  /// Table-1 covariates keyed by column name; nullopt when blank or unparseable.
  std::map<std::string, std::optional<std::string>> covariates;
  std::optional<int> age;
  std::optional<Date> diagnosis_date;
  std::optional<Date> first_consult_date;
  std::optional<Date> treatment_date;
  std::optional<Date> last_info_date;
  std::optional<std::string> vital_status;
  std::optional<std::string> morphology;
  std::optional<std::string> residence_state;
  std::optional<std::string> microscopic_confirmation;
  std::optional<std::string> bone_marrow_transplant;
  std::optional<std::string> staging;
};

/// Maps logical record fields and covariates onto CSV header names.
struct CsvSchema {
  /// Logical field (e.g. "diagnosis_date") to CSV column. Unmapped fields
  /// are always missing.
  std::map<std::string, std::string> fields;
  /// CSV columns carried through as model covariates, in output order.
  std::vector<std::string> covariates;
  /// Covariates encoded ordinally; the rest are parsed as numbers.
  std::vector<std::string> ordinal;
  /// Explicit category order per ordinal covariate.
  std::map<std::string, std::vector<std::string>> category_orders;

  static const std::vector<std::string>& field_names();
  static CsvSchema defaults();
  /// Defaults overridden by `schema.<field>`, `schema.covariates`,
  /// `schema.ordinal` and `order.<column>` keys.
  static CsvSchema from_config(const KeyValueConfig& cfg);
};

std::vector<RawRecord> ingest_csv(const std::filesystem::path& path, const CsvSchema& schema);
std::vector<RawRecord> ingest_csv_text(const std::string& text, const CsvSchema& schema);
std::string write_raw_csv(std::span<const RawRecord> records, const CsvSchema& schema);

// ---------------------------------------------------------------------------
// Exclusion filters

enum class FilterRule {
  AgeBelowMinimum,
  NonResident,
  UndefinedOrInSituStaging,
  NoMicroscopicConfirmation,
  BoneMarrowTransplant,
  Morphology,
};

inline constexpr FilterRule kFilterOrder[] = {
    FilterRule::AgeBelowMinimum,           FilterRule::NonResident,
    FilterRule::UndefinedOrInSituStaging,  FilterRule::NoMicroscopicConfirmation,
    FilterRule::BoneMarrowTransplant,      FilterRule::Morphology,
};

std::string filter_rule_name(FilterRule rule);

/// Which exclusions are active plus the dataset codes each one tests.
/// A missing field fails the rule that reads it.
struct FilterRules {
  bool age_active = true;
  int min_age = 20;
  bool residence_active = true;
  std::vector<std::string> resident_codes{"SP"};
  bool staging_active = true;
  std::vector<std::string> excluded_staging{"0", "X", "Y"};
  bool microscopic_active = true;
  std::vector<std::string> confirmed_codes{"3"};
  bool bmt_active = true;
  std::vector<std::string> bmt_codes{"1"};
  bool morphology_active = true;
  std::vector<std::string> allowed_morphologies{"8140/3"};

  static FilterRules none_active();
  static FilterRules from_config(const KeyValueConfig& cfg);

  bool active(FilterRule rule) const;
  /// True when the record is rejected by `rule` (regardless of activity).
  bool rejects(FilterRule rule, const RawRecord& r) const;
};

struct FilterReport {
  std::size_t initial = 0;
  std::size_t final = 0;
  std::vector<std::pair<std::string, std::size_t>> removed;

  std::size_t total_removed() const;
  std::size_t count(const std::string& rule) const;
};

struct FilterResult {
  std::vector<RawRecord> records;
  FilterReport report;
};

/// Drops records rejected by any active rule. Each removal is attributed to
/// the first rejecting rule in kFilterOrder.
FilterResult apply_filters(std::vector<RawRecord> records, const FilterRules& rules);

/// Second cleaning stage: removes rows with a missing mapped covariate
/// ("missing_covariate") or dates that cannot produce targets/intervals
/// ("inconsistent_dates"), appending both counts to `report`.
std::vector<RawRecord> drop_incomplete(std::vector<RawRecord> records, const CsvSchema& schema,
                                       FilterReport& report);

// ---------------------------------------------------------------------------
// Derived columns and targets

enum class IntervalCategory { UpTo60, From61To90, Over90, Untreated };

IntervalCategory categorize_interval(std::optional<long long> days);
std::string interval_label(IntervalCategory c);
/// Ordinal order used for encoding: ≤60 < 61–90 < >90 < untreated.
const std::vector<std::string>& interval_category_order();

inline constexpr double kDaysPerMonth = 30.4375;

struct TargetConfig {
  double days_per_month = kDaysPerMonth;
  std::vector<std::string> death_codes{"3", "4"};
};

std::vector<SurvivalTarget> build_targets(std::span<const RawRecord> records,
                                          const TargetConfig& config = {});

/// Builds an unencoded cohort: schema covariates followed by the two derived
/// interval columns TRATCONS_CAT (consultation to treatment) and
/// DIAGTRAT_CAT (diagnosis to treatment).
Cohort assemble_cohort(std::span<const RawRecord> records, const CsvSchema& schema,
                       const TargetConfig& config = {});

// ---------------------------------------------------------------------------
// Synthetic data

enum class SynthModel { ProportionalHazards, LognormalAft };

struct SynthConfig {
  std::size_t n = 1000;
  std::size_t d = 5;
  SynthModel model = SynthModel::ProportionalHazards;
  std::vector<double> beta;  // empty means all zeros
  double censor_rate = 0.3;
  double noise_sd = 1.0;     // AFT error scale
  std::uint64_t seed = 0;
};

struct SynthCohort {
  Cohort cohort;
  std::vector<double> linear_predictor;  // true beta'x per row
  std::vector<double> latent_times;      // uncensored event times
  double censoring_rate_parameter = 0.0; // exponential censoring rate (0: none)
};

/// Standard-normal features, event times from the chosen model and
/// independent exponential censoring whose rate is solved so that the
/// expected censored fraction given the latent times equals censor_rate.
SynthCohort synth_cohort(const SynthConfig& config);

/// Registry-shaped synthetic records (Table-1 columns, dates, filter fields)
/// for exercising the full prep pipeline. A small share of rows violates
/// each exclusion rule.
std::vector<RawRecord> synth_registry(std::size_t n, std::uint64_t seed);

// Prepared cohort files: feature columns then time, event[, weight].
std::string write_cohort_csv(const Cohort& cohort);
Cohort read_cohort_csv(const std::filesystem::path& path);
Cohort parse_cohort_csv(const std::string& text);

}  // namespace survml
