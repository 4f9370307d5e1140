#include "warfgate/cohort.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

#include "text_util.hpp"

namespace warfgate {

namespace {

constexpr std::array<std::string_view, kBinaryCount> kBinaryNames = {
    "amiodarone",   "aspirin",       "atorvastatin", "chf",          "carbamazepine",
    "current_smoker", "dvt_pe",      "diabetes",     "enzyme",       "fluvastatin",
    "lovastatin",   "macrolide",     "phenytoin",    "pravastatin",  "rifampin",
    "rosuvastatin", "simvastatin",   "sulfonamide",  "valve_replacement",
};

constexpr std::string_view kIdColumn = "id";
// Parse-only sources used to derive fields the PharmGKB export does not carry directly.
constexpr std::string_view kIndicationColumn = "indication";
constexpr std::string_view kTargetInrRangeColumn = "target_inr_range";

std::optional<int> parse_code(std::string_view cell, int lo, int hi) {
  auto v = text::parse_real(cell);
  if (!v || *v != std::floor(*v) || *v < lo || *v > hi) return std::nullopt;
  return static_cast<int>(*v);
}

std::optional<double> parse_bounded(std::string_view cell, double lo, double hi) {
  auto v = text::parse_real(cell);
  if (!v || *v < lo || *v > hi) return std::nullopt;
  return v;
}

// Numeric decade code, or a PharmGKB age bin such as "50 - 59" / "90+".
std::optional<int> parse_age(std::string_view cell) {
  if (auto code = parse_code(cell, 1, 9)) return code;
  std::size_t digits = 0;
  while (digits < cell.size() && cell[digits] >= '0' && cell[digits] <= '9') ++digits;
  if (digits == 0 || digits == cell.size()) return std::nullopt;
  int lower = 0;
  std::from_chars(cell.data(), cell.data() + digits, lower);
  if (lower % 10 != 0 || lower < 10 || lower > 90) return std::nullopt;
  return lower / 10;
}

std::optional<Race> parse_race(std::string_view cell) {
  if (auto code = parse_code(cell, 0, 3)) return static_cast<Race>(*code);
  const auto s = text::lower(cell);
  if (s == "white") return Race::White;
  if (s == "black or african american" || s == "black" || s == "african-american" || s == "african american") {
    return Race::AfricanAmerican;
  }
  if (s == "asian") return Race::Asian;
  if (s == "unknown" || s == "mixed or missing") return Race::Unknown;
  return std::nullopt;
}

std::optional<int> parse_gender(std::string_view cell) {
  if (auto code = parse_code(cell, 0, 1)) return code;
  const auto s = text::lower(cell);
  if (s == "male" || s == "m") return 1;
  if (s == "female" || s == "f") return 0;
  return std::nullopt;
}

// Midpoint of a range such as "2-3" or "2.5-3.5".
std::optional<double> parse_range_midpoint(std::string_view cell) {
  const auto dash = cell.find('-', 1);
  if (dash == std::string_view::npos) return text::parse_real(cell);
  auto lo = text::parse_real(text::trim(cell.substr(0, dash)));
  auto hi = text::parse_real(text::trim(cell.substr(dash + 1)));
  if (!lo || !hi) return std::nullopt;
  return (*lo + *hi) / 2.0;
}

// IWPC indication codes: 1 = DVT, 2 = PE, separated by ';' or ','.
std::optional<int> parse_dvt_pe_from_indication(std::string_view cell) {
  if (text::is_missing(cell)) return std::nullopt;
  bool any = false;
  for (auto part : text::split_any(cell, ";,")) {
    auto code = text::parse_real(text::trim(part));
    if (!code) continue;
    any = true;
    if (*code == 1.0 || *code == 2.0) return 1;
  }
  return any ? std::optional<int>(0) : std::nullopt;
}

std::string format_optional(const std::optional<double>& v) { return v ? text::format_real(*v) : "NA"; }
std::string format_optional(const std::optional<int>& v) { return v ? std::to_string(*v) : "NA"; }

}  // namespace

std::string_view binary_name(Binary b) { return kBinaryNames[index(b)]; }

std::optional<Binary> binary_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kBinaryCount; ++i) {
    if (kBinaryNames[i] == name) return static_cast<Binary>(i);
  }
  return std::nullopt;
}

const std::vector<std::string>& canonical_columns() {
  static const std::vector<std::string> cols = [] {
    std::vector<std::string> c = {"id", "age_decade", "height_cm", "weight_kg", "race", "gender"};
    for (auto n : kBinaryNames) c.emplace_back(n);
    c.insert(c.end(), {"inr", "target_inr", "therapeutic_dose_mg_week"});
    return c;
  }();
  return cols;
}

CohortSchema CohortSchema::canonical() {
  CohortSchema s;
  for (const auto& c : canonical_columns()) s.columns[c] = c;
  return s;
}

CohortSchema CohortSchema::parse(std::istream& in) {
  CohortSchema s;
  std::set<std::string> known(canonical_columns().begin(), canonical_columns().end());
  known.emplace(kIndicationColumn);
  known.emplace(kTargetInrRangeColumn);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto t = text::trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string_view::npos) {
      throw SchemaError("schema line " + std::to_string(lineno) + ": expected field=column");
    }
    std::string field(text::trim(t.substr(0, eq)));
    std::string column(text::trim(t.substr(eq + 1)));
    if (!known.count(field)) throw SchemaError("schema line " + std::to_string(lineno) + ": unknown field '" + field + "'");
    if (column.empty()) throw SchemaError("schema line " + std::to_string(lineno) + ": empty column name");
    s.columns[field] = column;
  }
  for (const char* required : {"inr", "therapeutic_dose_mg_week"}) {
    if (!s.columns.count(required)) throw SchemaError(std::string("schema does not map required field '") + required + "'");
  }
  return s;
}

CohortSchema CohortSchema::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open schema file '" + path + "'");
  return parse(in);
}

std::string_view to_string(ExclusionReason r) {
  switch (r) {
    case ExclusionReason::missing_dose: return "missing_dose";
    case ExclusionReason::nonpositive_dose: return "nonpositive_dose";
    case ExclusionReason::missing_inr: return "missing_inr";
    case ExclusionReason::inr_out_of_range: return "inr_out_of_range";
  }
  return "unknown";
}

std::size_t ParsedCohort::count(ExclusionReason r) const {
  return static_cast<std::size_t>(
      std::count_if(excluded.begin(), excluded.end(), [r](const RowExclusion& e) { return e.reason == r; }));
}

ParsedCohort parse_cohort(std::istream& source, const CohortSchema& schema) {
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  while (std::getline(source, line)) {
    ++lineno;
    if (!text::trim(line).empty()) {
      have_header = true;
      break;
    }
  }
  if (!have_header) throw SchemaError("cohort input has no header row");
  text::strip_cr(line);
  const char delim = (line.find('\t') == std::string::npos && line.find(',') != std::string::npos) ? ',' : '\t';

  const auto header = text::split_delimited(line, delim);
  std::map<std::string, std::size_t> position;
  for (std::size_t i = 0; i < header.size(); ++i) position.emplace(std::string(text::trim(header[i])), i);

  std::map<std::string, std::size_t> col;  // field -> cell index
  for (const auto& [field, column] : schema.columns) {
    auto it = position.find(column);
    if (it == position.end()) throw SchemaError("column '" + column + "' (field " + field + ") not found in header");
    col[field] = it->second;
  }
  for (const char* required : {"inr", "therapeutic_dose_mg_week"}) {
    if (!col.count(required)) throw SchemaError(std::string("schema does not map required field '") + required + "'");
  }

  ParsedCohort out;
  std::vector<std::string> cells;
  while (std::getline(source, line)) {
    ++lineno;
    text::strip_cr(line);
    if (text::trim(line).empty()) continue;
    ++out.data_rows;
    cells = text::split_delimited(line, delim);
    auto cell = [&](std::string_view field) -> std::string_view {
      auto it = col.find(std::string(field));
      if (it == col.end() || it->second >= cells.size()) return {};
      auto v = text::trim(cells[it->second]);
      return text::is_missing(v) ? std::string_view{} : v;
    };
    auto has = [&](std::string_view field) { return col.count(std::string(field)) > 0; };

    RawPatientRecord r;
    r.id = has(kIdColumn) && !cell(kIdColumn).empty() ? std::string(cell(kIdColumn)) : "row" + std::to_string(lineno);

    auto dose = text::parse_real(cell("therapeutic_dose_mg_week"));
    auto inr = text::parse_real(cell("inr"));
    std::optional<ExclusionReason> reason;
    if (!dose) reason = ExclusionReason::missing_dose;
    else if (!(*dose > 0.0)) reason = ExclusionReason::nonpositive_dose;
    else if (!inr) reason = ExclusionReason::missing_inr;
    else if (*inr < kInrMin || *inr > kInrMax) reason = ExclusionReason::inr_out_of_range;
    if (reason) {
      out.excluded.push_back({lineno, r.id, *reason});
      continue;
    }
    r.therapeutic_dose_mg_week = *dose;
    r.inr = *inr;

    r.age_decade = parse_age(cell("age_decade"));
    r.height_cm = parse_bounded(cell("height_cm"), kHeightMinCm, kHeightMaxCm);
    r.weight_kg = parse_bounded(cell("weight_kg"), kWeightMinKg, kWeightMaxKg);
    r.race = parse_race(cell("race"));
    r.gender = parse_gender(cell("gender"));
    for (std::size_t b = 0; b < kBinaryCount; ++b) r.binaries[b] = parse_code(cell(kBinaryNames[b]), 0, 1);
    r.target_inr = parse_bounded(cell("target_inr"), kTargetInrMin, kTargetInrMax);

    if (!r.target_inr && has(kTargetInrRangeColumn)) {
      auto mid = parse_range_midpoint(cell(kTargetInrRangeColumn));
      if (mid && *mid >= kTargetInrMin && *mid <= kTargetInrMax) r.target_inr = mid;
    }
    if (!has("dvt_pe") && has(kIndicationColumn)) {
      r.flag(Binary::dvt_pe) = parse_dvt_pe_from_indication(cell(kIndicationColumn));
    }
    if (!has("enzyme")) {
      // Enzyme-inducer status: any of carbamazepine, phenytoin, rifampin.
      const bool any = r.flag(Binary::carbamazepine) == 1 || r.flag(Binary::phenytoin) == 1 ||
                       r.flag(Binary::rifampin) == 1;
      r.flag(Binary::enzyme) = any ? 1 : 0;
    }
    out.records.push_back(std::move(r));
  }
  if (out.records.empty()) {
    throw DataError("empty cohort: no usable rows among " + std::to_string(out.data_rows) + " data rows");
  }
  return out;
}

void write_cohort(std::ostream& out, const std::vector<RawPatientRecord>& records) {
  const auto& cols = canonical_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "\t" : "") << cols[i];
  out << '\n';
  for (const auto& r : records) {
    out << r.id << '\t' << format_optional(r.age_decade) << '\t' << format_optional(r.height_cm) << '\t'
        << format_optional(r.weight_kg) << '\t'
        << (r.race ? std::to_string(static_cast<int>(*r.race)) : std::string("NA")) << '\t'
        << format_optional(r.gender);
    for (const auto& b : r.binaries) out << '\t' << format_optional(b);
    out << '\t' << text::format_real(r.inr) << '\t' << format_optional(r.target_inr) << '\t'
        << text::format_real(r.therapeutic_dose_mg_week) << '\n';
  }
}

// ---------------------------------------------------------------------------

std::vector<std::string> filter_unbalanced(const std::vector<RawPatientRecord>& records,
                                           double min_minority_fraction) {
  if (records.empty()) throw DomainError("filter_unbalanced: no records");
  if (!(min_minority_fraction > 0.0 && min_minority_fraction < 0.5)) {
    throw DomainError("filter_unbalanced: fraction must lie in (0, 0.5)");
  }
  auto unbalanced = [&](auto&& value_of) {
    std::size_t ones = 0, seen = 0;
    for (const auto& r : records) {
      const std::optional<int> v = value_of(r);
      if (!v) continue;
      ++seen;
      ones += *v == 1;
    }
    if (seen == 0) return false;
    const double minority = static_cast<double>(std::min(ones, seen - ones));
    return minority < min_minority_fraction * static_cast<double>(seen);
  };

  std::vector<std::string> removed;
  if (unbalanced([](const RawPatientRecord& r) { return r.gender; })) removed.emplace_back("gender");
  for (std::size_t b = 0; b < kBinaryCount; ++b) {
    if (unbalanced([b](const RawPatientRecord& r) { return r.binaries[b]; })) removed.emplace_back(kBinaryNames[b]);
  }
  return removed;
}

// ---------------------------------------------------------------------------

std::string ImputationPlan::to_text() const {
  std::ostringstream os;
  os << "# warfgate imputation plan\n";
  os << "provenance=" << provenance << '\n';
  for (const auto& [k, v] : means) os << "mean." << k << '=' << text::format_real(v) << '\n';
  for (const auto& [k, v] : modes) os << "mode." << k << '=' << v << '\n';
  return os.str();
}

ImputationPlan ImputationPlan::from_text(std::istream& in) {
  ImputationPlan plan;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto t = text::trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string_view::npos) throw SchemaError("plan line " + std::to_string(lineno) + ": expected key=value");
    const std::string key(t.substr(0, eq));
    const auto value = t.substr(eq + 1);
    if (key == "provenance") {
      plan.provenance = std::string(value);
    } else if (key.rfind("mean.", 0) == 0) {
      auto v = text::parse_real(value);
      if (!v) throw SchemaError("plan line " + std::to_string(lineno) + ": bad number");
      plan.means[key.substr(5)] = *v;
    } else if (key.rfind("mode.", 0) == 0) {
      auto v = parse_code(value, -1000, 1000);
      if (!v) throw SchemaError("plan line " + std::to_string(lineno) + ": bad code");
      plan.modes[key.substr(5)] = *v;
    } else {
      throw SchemaError("plan line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
  }
  return plan;
}

namespace {

template <class Get>
double mean_of(const std::vector<RawPatientRecord>& rs, const char* name, Get get) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& r : rs) {
    if (auto v = get(r)) {
      sum += *v;
      ++n;
    }
  }
  if (n == 0) throw DataError(std::string("unimputable variable '") + name + "': missing in every training row");
  return sum / static_cast<double>(n);
}

// Most frequent code; ties go to the smaller code.
template <class Get>
int mode_of(const std::vector<RawPatientRecord>& rs, const std::string& name, Get get) {
  std::map<int, std::size_t> counts;
  for (const auto& r : rs) {
    if (auto v = get(r)) ++counts[*v];
  }
  if (counts.empty()) throw DataError("unimputable variable '" + name + "': missing in every training row");
  int best = counts.begin()->first;
  std::size_t best_count = 0;
  for (const auto& [code, c] : counts) {
    if (c > best_count) {
      best = code;
      best_count = c;
    }
  }
  return best;
}

template <class T>
T planned(const std::map<std::string, T>& stats, const std::string& name) {
  auto it = stats.find(name);
  if (it == stats.end()) throw DataError("imputation plan incomplete: no statistic for '" + name + "'");
  return it->second;
}

}  // namespace

ImputationPlan fit_imputation(const std::vector<RawPatientRecord>& rs, std::string provenance) {
  ImputationPlan plan;
  plan.provenance = std::move(provenance);
  plan.means["height_cm"] = mean_of(rs, "height_cm", [](const RawPatientRecord& r) { return r.height_cm; });
  plan.means["weight_kg"] = mean_of(rs, "weight_kg", [](const RawPatientRecord& r) { return r.weight_kg; });
  plan.means["target_inr"] = mean_of(rs, "target_inr", [](const RawPatientRecord& r) { return r.target_inr; });
  plan.modes["age_decade"] = mode_of(rs, "age_decade", [](const RawPatientRecord& r) { return r.age_decade; });
  plan.modes["race"] = mode_of(rs, "race", [](const RawPatientRecord& r) -> std::optional<int> {
    if (!r.race) return std::nullopt;
    return static_cast<int>(*r.race);
  });
  plan.modes["gender"] = mode_of(rs, "gender", [](const RawPatientRecord& r) { return r.gender; });
  for (std::size_t b = 0; b < kBinaryCount; ++b) {
    plan.modes[std::string(kBinaryNames[b])] =
        mode_of(rs, std::string(kBinaryNames[b]), [b](const RawPatientRecord& r) { return r.binaries[b]; });
  }
  return plan;
}

ImputedPatientRecord apply_imputation(const ImputationPlan& plan, const RawPatientRecord& r) {
  ImputedPatientRecord out;
  out.id = r.id;
  out.age_decade = r.age_decade ? *r.age_decade : planned(plan.modes, "age_decade");
  out.height_cm = r.height_cm ? *r.height_cm : planned(plan.means, "height_cm");
  out.weight_kg = r.weight_kg ? *r.weight_kg : planned(plan.means, "weight_kg");
  out.race = r.race ? *r.race : static_cast<Race>(planned(plan.modes, "race"));
  out.gender = r.gender ? *r.gender : planned(plan.modes, "gender");
  for (std::size_t b = 0; b < kBinaryCount; ++b) {
    out.binaries[b] = r.binaries[b] ? *r.binaries[b] : planned(plan.modes, std::string(kBinaryNames[b]));
  }
  out.inr = r.inr;
  out.target_inr = r.target_inr ? *r.target_inr : planned(plan.means, "target_inr");
  out.therapeutic_dose_mg_week = r.therapeutic_dose_mg_week;
  return out;
}

std::vector<ImputedPatientRecord> apply_imputation(const ImputationPlan& plan,
                                                   const std::vector<RawPatientRecord>& records) {
  std::vector<ImputedPatientRecord> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(apply_imputation(plan, r));
  return out;
}

ImputedPatientRecord require_complete(const RawPatientRecord& r) {
  auto need = [&](bool present, std::string_view name) {
    if (!present) throw DataError("record '" + r.id + "' is missing '" + std::string(name) + "'");
  };
  need(r.age_decade.has_value(), "age_decade");
  need(r.height_cm.has_value(), "height_cm");
  need(r.weight_kg.has_value(), "weight_kg");
  need(r.race.has_value(), "race");
  need(r.gender.has_value(), "gender");
  for (std::size_t b = 0; b < kBinaryCount; ++b) need(r.binaries[b].has_value(), kBinaryNames[b]);
  need(r.target_inr.has_value(), "target_inr");
  return apply_imputation(ImputationPlan{}, r);
}

// ---------------------------------------------------------------------------

SplitIndices split_indices(std::size_t n, double train_fraction, std::uint64_t seed) {
  if (n == 0) throw DomainError("split_cohort: no records");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw DomainError("split_cohort: fraction must lie in (0, 1)");
  const auto n_train = static_cast<std::size_t>(std::floor(static_cast<double>(n) * train_fraction));
  if (n_train == 0 || n_train == n) {
    throw DegenerateError("degenerate split: " + std::to_string(n_train) + " of " + std::to_string(n) +
                          " records in the training side");
  }
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);
  SplitIndices out;
  out.train.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_train));
  out.test.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_train), perm.end());
  return out;
}

// ---------------------------------------------------------------------------

std::vector<std::string> candidate_features() {
  std::vector<std::string> f = {"age_decade",       "height_cm", "weight_kg", "target_inr", "gender",
                                std::string(kRaceAfricanAmerican), std::string(kRaceAsian)};
  for (auto n : kBinaryNames) f.emplace_back(n);
  return f;
}

std::vector<std::string> classifier_features(const std::vector<std::string>& removed) {
  std::vector<std::string> out;
  for (auto& f : candidate_features()) {
    if (std::find(removed.begin(), removed.end(), f) == removed.end()) out.push_back(std::move(f));
  }
  return out;
}

bool is_binary_feature(std::string_view name) {
  return name == "gender" || name == kRaceAfricanAmerican || name == kRaceAsian || binary_from_name(name).has_value();
}

double feature_value(const ImputedPatientRecord& r, std::string_view name) {
  if (name == "age_decade") return r.age_decade;
  if (name == "height_cm") return r.height_cm;
  if (name == "weight_kg") return r.weight_kg;
  if (name == "target_inr") return r.target_inr;
  if (name == "gender") return r.gender;
  if (name == kRaceAfricanAmerican) return r.race == Race::AfricanAmerican ? 1.0 : 0.0;
  if (name == kRaceAsian) return r.race == Race::Asian ? 1.0 : 0.0;
  if (auto b = binary_from_name(name)) return r.flag(*b);
  throw SchemaError("unknown feature '" + std::string(name) + "'");
}

FeatureMatrix encode_features(const std::vector<ImputedPatientRecord>& records,
                              const std::vector<std::string>& names, const std::optional<Scaler>& given) {
  const std::size_t n = records.size();
  const std::size_t d = names.size();
  std::vector<double> raw(n * d);
  for (std::size_t j = 0; j < d; ++j) {
    if (!is_binary_feature(names[j]) && names[j] != "age_decade" && names[j] != "height_cm" &&
        names[j] != "weight_kg" && names[j] != "target_inr") {
      throw SchemaError("unknown feature '" + names[j] + "'");
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) raw[i * d + j] = feature_value(records[i], names[j]);
  }

  Scaler scaler;
  if (given) {
    if (given->size() != d) throw SchemaError("stored scaler has " + std::to_string(given->size()) + " columns, expected " + std::to_string(d));
    scaler = *given;
  } else {
    if (n == 0) throw DomainError("encode_features: cannot fit a scaler on zero rows");
    scaler = Scaler::identity(d);
    for (std::size_t j = 0; j < d; ++j) {
      if (is_binary_feature(names[j])) continue;
      double sum = 0.0;
      for (std::size_t i = 0; i < n; ++i) sum += raw[i * d + j];
      const double mean = sum / static_cast<double>(n);
      double ss = 0.0;
      for (std::size_t i = 0; i < n; ++i) ss += (raw[i * d + j] - mean) * (raw[i * d + j] - mean);
      const double sd = std::sqrt(ss / static_cast<double>(n));
      scaler.mean[j] = mean;
      scaler.scale[j] = sd > 0.0 ? sd : 1.0;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) raw[i * d + j] = scaler.apply(j, raw[i * d + j]);
  }
  return FeatureMatrix(n, names, std::move(raw), std::move(scaler));
}

}  // namespace warfgate
