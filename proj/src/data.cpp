#include "survml/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "survml/csv.hpp"

namespace survml {

void validate_targets(std::span<const SurvivalTarget> targets) {
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const auto& t = targets[i];
    if (!std::isfinite(t.time) || t.time < 0.0) {
      throw DataError("target " + std::to_string(i) + ": time must be finite and >= 0");
    }
    if (t.event != 0 && t.event != 1) {
      throw DataError("target " + std::to_string(i) + ": event must be 0 or 1");
    }
  }
}

bool Cohort::encoded() const {
  return std::all_of(category_labels.begin(), category_labels.end(),
                     [](const auto& c) { return c.empty(); });
}

Cohort Cohort::subset(std::span<const std::size_t> rows) const {
  Cohort out;
  out.features = features.select_rows(rows);
  out.columns = columns;
  out.targets.reserve(rows.size());
  for (auto r : rows) out.targets.push_back(targets[r]);
  if (weights) {
    std::vector<double> w;
    w.reserve(rows.size());
    for (auto r : rows) w.push_back((*weights)[r]);
    out.weights = std::move(w);
  }
  out.category_labels.resize(category_labels.size());
  for (std::size_t c = 0; c < category_labels.size(); ++c) {
    if (category_labels[c].empty()) continue;
    out.category_labels[c].reserve(rows.size());
    for (auto r : rows) out.category_labels[c].push_back(category_labels[c][r]);
  }
  return out;
}

std::vector<std::string> Cohort::column_names() const {
  std::vector<std::string> names;
  names.reserve(columns.size());
  for (const auto& c : columns) names.push_back(c.name);
  return names;
}

void Cohort::validate() const {
  if (features.rows() != targets.size()) throw DataError("cohort: feature rows != targets");
  if (features.cols() != columns.size()) throw DataError("cohort: feature cols != column metadata");
  if (category_labels.size() != columns.size()) {
    throw DataError("cohort: category label table does not match columns");
  }
  validate_targets(targets);
  if (weights) {
    if (weights->size() != targets.size()) throw DataError("cohort: weights length mismatch");
    bool any_positive = false;
    for (double w : *weights) {
      if (!std::isfinite(w) || w < 0.0) throw DataError("cohort: weights must be finite and >= 0");
      any_positive = any_positive || w > 0.0;
    }
    if (!any_positive && !weights->empty()) throw DataError("cohort: all weights are zero");
  }
  for (std::size_t c = 0; c < columns.size(); ++c) {
    if (!category_labels[c].empty()) {
      if (category_labels[c].size() != targets.size()) {
        throw DataError("cohort: category labels for '" + columns[c].name + "' have wrong length");
      }
      continue;
    }
    for (std::size_t r = 0; r < features.rows(); ++r) {
      if (!std::isfinite(features(r, c))) {
        throw DataError("cohort: non-finite value in column '" + columns[c].name + "' row " +
                        std::to_string(r));
      }
    }
  }
}

std::vector<double> event_times(std::span<const SurvivalTarget> targets) {
  std::vector<double> out;
  for (const auto& t : targets) {
    if (t.event) out.push_back(t.time);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

// ---------------------------------------------------------------------------

namespace {

std::optional<int> parse_int(const std::string& s) {
  const std::string t = trim(s);
  if (t.empty()) return std::nullopt;
  int v = 0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc{} || ptr != t.data() + t.size()) return std::nullopt;
  return v;
}

std::optional<double> parse_number(const std::string& s) {
  const std::string t = trim(s);
  if (t.empty()) return std::nullopt;
  double v = 0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc{} || ptr != t.data() + t.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::optional<std::string> non_empty(const std::string& s) {
  std::string t = trim(s);
  if (t.empty()) return std::nullopt;
  return t;
}

std::string normalize_code(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c != '/' && c != ' ' && c != '-' && c != '.') out.push_back(c);
  }
  return out;
}

bool code_in(const std::optional<std::string>& value, const std::vector<std::string>& codes) {
  if (!value) return false;
  const std::string v = normalize_code(*value);
  return std::any_of(codes.begin(), codes.end(),
                     [&](const std::string& c) { return normalize_code(c) == v; });
}

}  // namespace

std::optional<Date> parse_date(const std::string& text) {
  const std::string t = trim(text);
  if (t.size() != 10) return std::nullopt;
  int y = 0, m = 0, d = 0;
  if (t[4] == '-' && t[7] == '-') {
    if (std::sscanf(t.c_str(), "%4d-%2d-%2d", &y, &m, &d) != 3) return std::nullopt;
  } else if (t[2] == '/' && t[5] == '/') {
    if (std::sscanf(t.c_str(), "%2d/%2d/%4d", &d, &m, &y) != 3) return std::nullopt;
  } else {
    return std::nullopt;
  }
  if (m < 1 || m > 12 || d < 1 || d > 31) return std::nullopt;
  const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{unsigned(m)},
                                        std::chrono::day{unsigned(d)}};
  if (!ymd.ok()) return std::nullopt;
  return Date{ymd};
}

std::string format_date(Date d) {
  const std::chrono::year_month_day ymd{d};
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", int(ymd.year()), unsigned(ymd.month()),
                unsigned(ymd.day()));
  return buf;
}

const std::vector<std::string>& CsvSchema::field_names() {
  static const std::vector<std::string> names{
      "age",         "diagnosis_date",    "first_consult_date",       "treatment_date",
      "last_info_date", "vital_status",   "morphology",               "residence_state",
      "microscopic_confirmation",         "bone_marrow_transplant",   "staging"};
  return names;
}

CsvSchema CsvSchema::defaults() {
  CsvSchema s;
  s.fields = {{"age", "IDADE"},
              {"diagnosis_date", "DTDIAG"},
              {"first_consult_date", "DTCONSULT"},
              {"treatment_date", "DTTRAT"},
              {"last_info_date", "DTULTINFO"},
              {"vital_status", "ULTINFO"},
              {"morphology", "MORFO"},
              {"residence_state", "UFRESID"},
              {"microscopic_confirmation", "BASEDIAG"},
              {"bone_marrow_transplant", "TMO"},
              {"staging", "EC"}};
  s.covariates = {"INSTITU", "ESCOLARI", "IDADE", "SEXO",     "IBGE",     "CATEATEND", "DIAGPREV",
                  "TOPO",    "EC",       "ANODIAG", "DRS",    "IBGEATEN", "HABILIT2",  "DRS_INST"};
  s.ordinal = {"EC", "TOPO"};
  s.category_orders["EC"] = {"I", "II", "III", "IV"};
  return s;
}

CsvSchema CsvSchema::from_config(const KeyValueConfig& cfg) {
  CsvSchema s = defaults();
  for (const auto& f : field_names()) {
    if (auto v = cfg.get("schema." + f)) {
      if (v->empty()) {
        s.fields.erase(f);
      } else {
        s.fields[f] = *v;
      }
    }
  }
  if (cfg.contains("schema.covariates")) s.covariates = cfg.get_list("schema.covariates");
  if (cfg.contains("schema.ordinal")) s.ordinal = cfg.get_list("schema.ordinal");
  for (const auto& [col, order] : cfg.with_prefix("order.")) {
    s.category_orders[col] = split_list(order);
  }
  for (const auto& o : s.ordinal) {
    if (std::find(s.covariates.begin(), s.covariates.end(), o) == s.covariates.end()) {
      throw ConfigError("schema.ordinal lists '" + o + "' which is not a covariate");
    }
  }
  return s;
}

std::vector<RawRecord> ingest_csv(const std::filesystem::path& path, const CsvSchema& schema) {
  if (!std::filesystem::exists(path)) throw DataError("missing file: " + path.string());
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return ingest_csv_text(buf.str(), schema);
}

std::vector<RawRecord> ingest_csv_text(const std::string& text, const CsvSchema& schema) {
  const csv::Table table = csv::parse(text);
  auto column_of = [&](const std::string& name) {
    const int idx = table.find(name);
    if (idx < 0) throw DataError("missing column '" + name + "'");
    return static_cast<std::size_t>(idx);
  };
  std::map<std::string, std::size_t> field_col;
  for (const auto& [field, col] : schema.fields) field_col[field] = column_of(col);
  std::vector<std::pair<std::string, std::size_t>> cov_cols;
  for (const auto& c : schema.covariates) cov_cols.emplace_back(c, column_of(c));
  if (table.rows.empty()) throw DataError("csv has zero data rows");

  std::vector<RawRecord> out;
  out.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    RawRecord r;
    auto cell = [&](const std::string& field) -> std::optional<std::string> {
      auto it = field_col.find(field);
      if (it == field_col.end()) return std::nullopt;
      return non_empty(row[it->second]);
    };
    auto date = [&](const std::string& field) -> std::optional<Date> {
      auto v = cell(field);
      return v ? parse_date(*v) : std::nullopt;
    };
    if (auto v = cell("age")) r.age = parse_int(*v);
    r.diagnosis_date = date("diagnosis_date");
    r.first_consult_date = date("first_consult_date");
    r.treatment_date = date("treatment_date");
    r.last_info_date = date("last_info_date");
    r.vital_status = cell("vital_status");
    r.morphology = cell("morphology");
    r.residence_state = cell("residence_state");
    r.microscopic_confirmation = cell("microscopic_confirmation");
    r.bone_marrow_transplant = cell("bone_marrow_transplant");
    r.staging = cell("staging");
    for (const auto& [name, idx] : cov_cols) r.covariates[name] = non_empty(row[idx]);
    out.push_back(std::move(r));
  }
  return out;
}

std::string write_raw_csv(std::span<const RawRecord> records, const CsvSchema& schema) {
  std::vector<std::string> header;
  std::vector<std::string> field_order;
  for (const auto& c : schema.covariates) header.push_back(c);
  for (const auto& f : CsvSchema::field_names()) {
    auto it = schema.fields.find(f);
    if (it == schema.fields.end()) continue;
    if (std::find(header.begin(), header.end(), it->second) != header.end()) continue;
    header.push_back(it->second);
    field_order.push_back(f);
  }
  std::string out = csv::join_row(header) + "\n";
  auto opt = [](const std::optional<std::string>& v) { return v.value_or(""); };
  auto opt_date = [](const std::optional<Date>& d) { return d ? format_date(*d) : std::string(); };
  for (const auto& r : records) {
    std::vector<std::string> row;
    for (const auto& c : schema.covariates) {
      auto it = r.covariates.find(c);
      row.push_back(it == r.covariates.end() ? "" : opt(it->second));
    }
    for (const auto& f : field_order) {
      if (f == "age") row.push_back(r.age ? std::to_string(*r.age) : "");
      else if (f == "diagnosis_date") row.push_back(opt_date(r.diagnosis_date));
      else if (f == "first_consult_date") row.push_back(opt_date(r.first_consult_date));
      else if (f == "treatment_date") row.push_back(opt_date(r.treatment_date));
      else if (f == "last_info_date") row.push_back(opt_date(r.last_info_date));
      else if (f == "vital_status") row.push_back(opt(r.vital_status));
      else if (f == "morphology") row.push_back(opt(r.morphology));
      else if (f == "residence_state") row.push_back(opt(r.residence_state));
      else if (f == "microscopic_confirmation") row.push_back(opt(r.microscopic_confirmation));
      else if (f == "bone_marrow_transplant") row.push_back(opt(r.bone_marrow_transplant));
      else if (f == "staging") row.push_back(opt(r.staging));
    }
    out += csv::join_row(row) + "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------

std::string filter_rule_name(FilterRule rule) {
  switch (rule) {
    case FilterRule::AgeBelowMinimum: return "age_below_minimum";
    case FilterRule::NonResident: return "non_resident";
    case FilterRule::UndefinedOrInSituStaging: return "undefined_or_in_situ_staging";
    case FilterRule::NoMicroscopicConfirmation: return "no_microscopic_confirmation";
    case FilterRule::BoneMarrowTransplant: return "bone_marrow_transplant";
    case FilterRule::Morphology: return "morphology";
  }
  return "unknown";
}

FilterRules FilterRules::none_active() {
  FilterRules r;
  r.age_active = r.residence_active = r.staging_active = false;
  r.microscopic_active = r.bmt_active = r.morphology_active = false;
  return r;
}

FilterRules FilterRules::from_config(const KeyValueConfig& cfg) {
  FilterRules r;
  r.age_active = cfg.get_bool("filter.age", r.age_active);
  r.min_age = static_cast<int>(cfg.get_int("filter.min_age", r.min_age));
  r.residence_active = cfg.get_bool("filter.residence", r.residence_active);
  if (cfg.contains("filter.resident_codes")) r.resident_codes = cfg.get_list("filter.resident_codes");
  r.staging_active = cfg.get_bool("filter.staging", r.staging_active);
  if (cfg.contains("filter.excluded_staging")) r.excluded_staging = cfg.get_list("filter.excluded_staging");
  r.microscopic_active = cfg.get_bool("filter.microscopic", r.microscopic_active);
  if (cfg.contains("filter.confirmed_codes")) r.confirmed_codes = cfg.get_list("filter.confirmed_codes");
  r.bmt_active = cfg.get_bool("filter.bmt", r.bmt_active);
  if (cfg.contains("filter.bmt_codes")) r.bmt_codes = cfg.get_list("filter.bmt_codes");
  r.morphology_active = cfg.get_bool("filter.morphology", r.morphology_active);
  if (cfg.contains("filter.allowed_morphologies")) {
    r.allowed_morphologies = cfg.get_list("filter.allowed_morphologies");
  }
  return r;
}

bool FilterRules::active(FilterRule rule) const {
  switch (rule) {
    case FilterRule::AgeBelowMinimum: return age_active;
    case FilterRule::NonResident: return residence_active;
    case FilterRule::UndefinedOrInSituStaging: return staging_active;
    case FilterRule::NoMicroscopicConfirmation: return microscopic_active;
    case FilterRule::BoneMarrowTransplant: return bmt_active;
    case FilterRule::Morphology: return morphology_active;
  }
  return false;
}

bool FilterRules::rejects(FilterRule rule, const RawRecord& r) const {
  switch (rule) {
    case FilterRule::AgeBelowMinimum: return !r.age || *r.age < min_age;
    case FilterRule::NonResident: return !code_in(r.residence_state, resident_codes);
    case FilterRule::UndefinedOrInSituStaging:
      return !r.staging || code_in(r.staging, excluded_staging);
    case FilterRule::NoMicroscopicConfirmation:
      return !code_in(r.microscopic_confirmation, confirmed_codes);
    case FilterRule::BoneMarrowTransplant: return code_in(r.bone_marrow_transplant, bmt_codes);
    case FilterRule::Morphology: return !code_in(r.morphology, allowed_morphologies);
  }
  return false;
}

std::size_t FilterReport::total_removed() const {
  std::size_t s = 0;
  for (const auto& [_, c] : removed) s += c;
  return s;
}

std::size_t FilterReport::count(const std::string& rule) const {
  for (const auto& [name, c] : removed) {
    if (name == rule) return c;
  }
  return 0;
}

FilterResult apply_filters(std::vector<RawRecord> records, const FilterRules& rules) {
  FilterResult result;
  result.report.initial = records.size();
  std::vector<std::size_t> counts(std::size(kFilterOrder), 0);
  for (auto& r : records) {
    bool kept = true;
    for (std::size_t k = 0; k < std::size(kFilterOrder); ++k) {
      if (rules.active(kFilterOrder[k]) && rules.rejects(kFilterOrder[k], r)) {
        ++counts[k];
        kept = false;
        break;
      }
    }
    if (kept) result.records.push_back(std::move(r));
  }
  for (std::size_t k = 0; k < std::size(kFilterOrder); ++k) {
    result.report.removed.emplace_back(filter_rule_name(kFilterOrder[k]), counts[k]);
  }
  result.report.final = result.records.size();
  return result;
}

namespace {

long long days_between(Date from, Date to) { return (to - from).count(); }

bool dates_consistent(const RawRecord& r) {
  if (!r.diagnosis_date || !r.last_info_date || !r.vital_status) return false;
  if (*r.last_info_date < *r.diagnosis_date) return false;
  if (r.treatment_date) {
    if (!r.first_consult_date) return false;
    if (*r.treatment_date < *r.diagnosis_date || *r.treatment_date < *r.first_consult_date) {
      return false;
    }
  }
  return true;
}

}  // namespace

std::vector<RawRecord> drop_incomplete(std::vector<RawRecord> records, const CsvSchema& schema,
                                       FilterReport& report) {
  std::size_t missing = 0, inconsistent = 0;
  std::vector<RawRecord> kept;
  kept.reserve(records.size());
  const std::set<std::string> ordinal(schema.ordinal.begin(), schema.ordinal.end());
  for (auto& r : records) {
    bool complete = true;
    for (const auto& c : schema.covariates) {
      auto it = r.covariates.find(c);
      if (it == r.covariates.end() || !it->second ||
          (!ordinal.contains(c) && !parse_number(*it->second))) {
        complete = false;
        break;
      }
    }
    if (!complete) {
      ++missing;
    } else if (!dates_consistent(r)) {
      ++inconsistent;
    } else {
      kept.push_back(std::move(r));
    }
  }
  report.removed.emplace_back("missing_covariate", missing);
  report.removed.emplace_back("inconsistent_dates", inconsistent);
  report.final = kept.size();
  return kept;
}

IntervalCategory categorize_interval(std::optional<long long> days) {
  if (!days) return IntervalCategory::Untreated;
  if (*days < 0) throw DataError("treatment precedes reference date");
  if (*days <= 60) return IntervalCategory::UpTo60;
  if (*days <= 90) return IntervalCategory::From61To90;
  return IntervalCategory::Over90;
}

std::string interval_label(IntervalCategory c) {
  return interval_category_order()[static_cast<std::size_t>(c)];
}

const std::vector<std::string>& interval_category_order() {
  static const std::vector<std::string> order{"≤60", "61–90", ">90", "untreated"};
  return order;
}

std::vector<SurvivalTarget> build_targets(std::span<const RawRecord> records,
                                          const TargetConfig& config) {
  if (!(config.days_per_month > 0.0)) throw DataError("days_per_month must be > 0");
  std::vector<SurvivalTarget> out;
  out.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (!r.diagnosis_date || !r.last_info_date) {
      throw DataError("record " + std::to_string(i) + ": missing diagnosis or last-information date");
    }
    const long long days = days_between(*r.diagnosis_date, *r.last_info_date);
    if (days < 0) {
      throw DataError("record " + std::to_string(i) +
                      ": last-information date earlier than diagnosis date");
    }
    SurvivalTarget t;
    t.time = static_cast<double>(days) / config.days_per_month;
    t.event = code_in(r.vital_status, config.death_codes) ? 1 : 0;
    out.push_back(t);
  }
  return out;
}

Cohort assemble_cohort(std::span<const RawRecord> records, const CsvSchema& schema,
                       const TargetConfig& config) {
  Cohort c;
  const std::set<std::string> ordinal(schema.ordinal.begin(), schema.ordinal.end());
  for (const auto& name : schema.covariates) {
    ColumnInfo info{name, ordinal.contains(name) ? ColumnKind::Ordinal : ColumnKind::Numeric, {}};
    if (auto it = schema.category_orders.find(name); it != schema.category_orders.end()) {
      info.categories = it->second;
    }
    c.columns.push_back(std::move(info));
  }
  c.columns.push_back({"TRATCONS_CAT", ColumnKind::Ordinal, interval_category_order()});
  c.columns.push_back({"DIAGTRAT_CAT", ColumnKind::Ordinal, interval_category_order()});

  const std::size_t n = records.size();
  const std::size_t d = c.columns.size();
  c.features = Matrix(n, d, std::numeric_limits<double>::quiet_NaN());
  c.category_labels.assign(d, {});
  for (std::size_t j = 0; j < d; ++j) {
    if (c.columns[j].kind == ColumnKind::Ordinal) c.category_labels[j].resize(n);
  }
  for (std::size_t i = 0; i < n; ++i) {
    const auto& r = records[i];
    for (std::size_t j = 0; j < schema.covariates.size(); ++j) {
      auto it = r.covariates.find(schema.covariates[j]);
      if (it == r.covariates.end() || !it->second) {
        throw DataError("record " + std::to_string(i) + ": missing covariate '" +
                        schema.covariates[j] + "'");
      }
      if (c.columns[j].kind == ColumnKind::Ordinal) {
        c.category_labels[j][i] = *it->second;
      } else {
        auto v = parse_number(*it->second);
        if (!v) {
          throw DataError("record " + std::to_string(i) + ": non-numeric value '" + *it->second +
                          "' in column '" + schema.covariates[j] + "'");
        }
        c.features(i, j) = *v;
      }
    }
    std::optional<long long> from_consult, from_diag;
    if (r.treatment_date) {
      if (!r.first_consult_date || !r.diagnosis_date) {
        throw DataError("record " + std::to_string(i) + ": treatment date without reference dates");
      }
      from_consult = days_between(*r.first_consult_date, *r.treatment_date);
      from_diag = days_between(*r.diagnosis_date, *r.treatment_date);
    }
    c.category_labels[d - 2][i] = interval_label(categorize_interval(from_consult));
    c.category_labels[d - 1][i] = interval_label(categorize_interval(from_diag));
  }
  c.targets = build_targets(records, config);
  return c;
}

// ---------------------------------------------------------------------------

SynthCohort synth_cohort(const SynthConfig& config) {
  if (config.n < 1 || config.d < 1) throw ConfigError("synth_cohort: n and d must be >= 1");
  if (!(config.censor_rate >= 0.0) || config.censor_rate >= 1.0) {
    throw ConfigError("synth_cohort: censor_rate must be in [0, 1)");
  }
  std::vector<double> beta = config.beta;
  if (beta.empty()) beta.assign(config.d, 0.0);
  if (beta.size() != config.d) throw DataError("synth_cohort: beta length must equal d");

  Rng rng(config.seed);
  SynthCohort out;
  Cohort& c = out.cohort;
  c.features = Matrix(config.n, config.d);
  for (std::size_t j = 0; j < config.d; ++j) {
    c.columns.push_back({"x" + std::to_string(j), ColumnKind::Numeric, {}});
  }
  c.category_labels.assign(config.d, {});
  for (std::size_t i = 0; i < config.n; ++i) {
    for (std::size_t j = 0; j < config.d; ++j) c.features(i, j) = standard_normal(rng);
  }
  out.linear_predictor.resize(config.n);
  out.latent_times.resize(config.n);
  for (std::size_t i = 0; i < config.n; ++i) {
    double eta = 0.0;
    for (std::size_t j = 0; j < config.d; ++j) eta += beta[j] * c.features(i, j);
    out.linear_predictor[i] = eta;
    if (config.model == SynthModel::ProportionalHazards) {
      double u;
      do {
        u = uniform01(rng);
      } while (u <= 0.0);
      out.latent_times[i] = -std::log(u) / std::exp(eta);
    } else {
      out.latent_times[i] = std::exp(-eta + config.noise_sd * standard_normal(rng));
    }
  }

  // Solve mean_i(1 - exp(-rate * T_i)) = censor_rate for the exponential
  // censoring rate; the left side is increasing in rate.
  double rate = 0.0;
  if (config.censor_rate > 0.0) {
    auto expected = [&](double r) {
      double s = 0.0;
      for (double t : out.latent_times) s += 1.0 - std::exp(-r * t);
      return s / static_cast<double>(config.n);
    };
    double lo = 1e-12, hi = 1.0;
    while (expected(hi) < config.censor_rate && hi < 1e12) hi *= 2.0;
    for (int it = 0; it < 200; ++it) {
      const double mid = std::sqrt(lo * hi);
      (expected(mid) < config.censor_rate ? lo : hi) = mid;
    }
    rate = std::sqrt(lo * hi);
  }
  out.censoring_rate_parameter = rate;

  c.targets.resize(config.n);
  for (std::size_t i = 0; i < config.n; ++i) {
    double censor = std::numeric_limits<double>::infinity();
    if (rate > 0.0) {
      double u;
      do {
        u = uniform01(rng);
      } while (u <= 0.0);
      censor = -std::log(u) / rate;
    }
    const double t = out.latent_times[i];
    c.targets[i] = t <= censor ? SurvivalTarget{t, 1} : SurvivalTarget{censor, 0};
  }
  return out;
}

std::vector<RawRecord> synth_registry(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  auto pick = [&](const std::vector<std::string>& v) { return v[uniform_index(rng, v.size())]; };
  auto chance = [&](double p) { return uniform01(rng) < p; };
  auto range = [&](int lo, int hi) { return lo + static_cast<int>(uniform_index(rng, hi - lo + 1)); };

  const Date study_start{std::chrono::year{2010} / 1 / 1};
  const Date study_end{std::chrono::year{2023} / 12 / 31};
  const long long window = (study_end - study_start).count() - 365;
  const std::vector<std::string> stages{"I", "II", "III", "IV"};
  const std::vector<std::string> topo{"C180", "C182", "C187", "C189", "C199", "C209"};

  std::vector<RawRecord> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    RawRecord r;
    int age = range(20, 90);
    if (chance(0.02)) age = range(14, 19);
    r.age = age;
    r.residence_state = chance(0.03) ? "MG" : "SP";
    const int stage_idx = range(0, 3);
    r.staging = chance(0.04) ? pick({"0", "X"}) : stages[stage_idx];
    r.microscopic_confirmation = chance(0.03) ? "1" : "3";
    r.bone_marrow_transplant = chance(0.005) ? "1" : "0";
    r.morphology = chance(0.08) ? pick({"8480/3", "8490/3", "8240/3"}) : "8140/3";

    const Date diag = study_start + std::chrono::days{range(0, static_cast<int>(window))};
    r.diagnosis_date = diag;
    r.first_consult_date = diag - std::chrono::days{range(0, 30)};
    const bool treated = !chance(0.1);
    long long delay = 0;
    if (treated) {
      delay = static_cast<long long>(-std::log(std::max(uniform01(rng), 1e-12)) * 55.0);
      r.treatment_date = diag + std::chrono::days{delay};
    }
    const int institution = range(1, 40);
    const int city = 3500000 + range(1, 645) * 10;
    r.covariates["INSTITU"] = std::to_string(institution);
    r.covariates["ESCOLARI"] = std::to_string(range(1, 5));
    r.covariates["IDADE"] = std::to_string(age);
    r.covariates["SEXO"] = std::to_string(range(1, 2));
    r.covariates["IBGE"] = std::to_string(city);
    r.covariates["CATEATEND"] = std::to_string(range(1, 3));
    r.covariates["DIAGPREV"] = std::to_string(range(1, 2));
    r.covariates["TOPO"] = pick(topo);
    r.covariates["EC"] = r.staging;
    r.covariates["ANODIAG"] = std::to_string(int(std::chrono::year_month_day{diag}.year()));
    r.covariates["DRS"] = std::to_string(range(1, 17));
    r.covariates["IBGEATEN"] = std::to_string(3500000 + (institution % 30) * 10);
    r.covariates["HABILIT2"] = std::to_string(range(1, 5));
    r.covariates["DRS_INST"] = std::to_string(1 + institution % 17);
    if (chance(0.01)) r.covariates["ESCOLARI"] = std::nullopt;

    // Monthly hazard rises with age, stage, treatment delay and no treatment.
    const double eta = 0.03 * (age - 60) + 0.7 * stage_idx + (treated ? 0.004 * delay : 1.0);
    const double hazard = 0.008 * std::exp(eta);
    double u;
    do {
      u = uniform01(rng);
    } while (u <= 0.0);
    const double event_days = -std::log(u) / hazard * kDaysPerMonth;
    const double loss_days = -std::log(std::max(uniform01(rng), 1e-12)) / 0.004 * kDaysPerMonth;
    const double admin_days = static_cast<double>((study_end - diag).count());
    const double follow = std::min({event_days, loss_days, admin_days});
    const bool died = event_days <= std::min(loss_days, admin_days);
    r.last_info_date = diag + std::chrono::days{static_cast<long long>(std::floor(follow))};
    r.vital_status = died ? pick({"3", "4"}) : pick({"1", "2"});
    out.push_back(std::move(r));
  }
  return out;
}

std::string write_cohort_csv(const Cohort& cohort) {
  if (!cohort.encoded()) throw DataError("write_cohort_csv: cohort is not encoded");
  std::vector<std::string> header = cohort.column_names();
  header.push_back("time");
  header.push_back("event");
  if (cohort.weights) header.push_back("weight");
  std::string out = csv::join_row(header) + "\n";
  for (std::size_t i = 0; i < cohort.size(); ++i) {
    std::vector<std::string> row;
    for (double v : cohort.features.row(i)) row.push_back(csv::format_double(v));
    row.push_back(csv::format_double(cohort.targets[i].time));
    row.push_back(std::to_string(cohort.targets[i].event));
    if (cohort.weights) row.push_back(csv::format_double((*cohort.weights)[i]));
    out += csv::join_row(row) + "\n";
  }
  return out;
}

Cohort parse_cohort_csv(const std::string& text) {
  const csv::Table t = csv::parse(text);
  const int time_col = t.find("time");
  const int event_col = t.find("event");
  const int weight_col = t.find("weight");
  if (time_col < 0 || event_col < 0) throw DataError("cohort csv: missing time/event columns");
  Cohort c;
  std::vector<std::size_t> feature_cols;
  for (std::size_t j = 0; j < t.header.size(); ++j) {
    if (int(j) == time_col || int(j) == event_col || int(j) == weight_col) continue;
    feature_cols.push_back(j);
    c.columns.push_back({t.header[j], ColumnKind::Numeric, {}});
  }
  c.category_labels.assign(c.columns.size(), {});
  c.features = Matrix(t.rows.size(), feature_cols.size());
  if (weight_col >= 0) c.weights.emplace();
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    auto num = [&](std::size_t col) {
      auto v = parse_number(t.rows[i][col]);
      if (!v) throw DataError("cohort csv: row " + std::to_string(i + 2) + " column '" +
                              t.header[col] + "' is not a number");
      return *v;
    };
    for (std::size_t k = 0; k < feature_cols.size(); ++k) c.features(i, k) = num(feature_cols[k]);
    c.targets.push_back({num(time_col), static_cast<int>(num(event_col))});
    if (weight_col >= 0) c.weights->push_back(num(weight_col));
  }
  c.validate();
  return c;
}

Cohort read_cohort_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_cohort_csv(buf.str());
}

}  // namespace survml
