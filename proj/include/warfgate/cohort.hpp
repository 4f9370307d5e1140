#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "warfgate/error.hpp"
#include "warfgate/feature_matrix.hpp"

namespace warfgate {

// Unknown is the dose model's "missing or mixed race" category; it is a reported
// value, not an absent cell.
enum class Race : int { Unknown = 0, White = 1, AfricanAmerican = 2, Asian = 3 };

// Medication and comorbidity flags, in canonical column order.
enum class Binary : std::size_t {
  amiodarone,
  aspirin,
  atorvastatin,
  chf,
  carbamazepine,
  current_smoker,
  dvt_pe,
  diabetes,
  enzyme,
  fluvastatin,
  lovastatin,
  macrolide,
  phenytoin,
  pravastatin,
  rifampin,
  rosuvastatin,
  simvastatin,
  sulfonamide,
  valve_replacement,
};
inline constexpr std::size_t kBinaryCount = 19;

std::string_view binary_name(Binary b);
std::optional<Binary> binary_from_name(std::string_view name);
constexpr std::size_t index(Binary b) { return static_cast<std::size_t>(b); }

// Sanity bounds; values outside become missing at parse time.
inline constexpr double kHeightMinCm = 100.0, kHeightMaxCm = 250.0;
inline constexpr double kWeightMinKg = 20.0, kWeightMaxKg = 300.0;
inline constexpr double kTargetInrMin = 1.0, kTargetInrMax = 5.0;
inline constexpr double kInrMin = 2.0, kInrMax = 3.0;

struct RawPatientRecord {
  std::string id;
  std::optional<int> age_decade;  // 1 = 10-19 years ... 9 = 90+
  std::optional<double> height_cm;
  std::optional<double> weight_kg;
  std::optional<Race> race;
  std::optional<int> gender;  // 0 female, 1 male
  std::array<std::optional<int>, kBinaryCount> binaries{};
  double inr = 2.5;
  std::optional<double> target_inr;
  double therapeutic_dose_mg_week = 0.0;

  std::optional<int>& flag(Binary b) { return binaries[index(b)]; }
  const std::optional<int>& flag(Binary b) const { return binaries[index(b)]; }

  bool operator==(const RawPatientRecord&) const = default;
};

struct ImputedPatientRecord {
  std::string id;
  int age_decade = 5;
  double height_cm = 170.0;
  double weight_kg = 80.0;
  Race race = Race::White;
  int gender = 0;
  std::array<int, kBinaryCount> binaries{};
  double inr = 2.5;
  double target_inr = 2.5;
  double therapeutic_dose_mg_week = 0.0;

  int flag(Binary b) const { return binaries[index(b)]; }
  int& flag(Binary b) { return binaries[index(b)]; }

  bool operator==(const ImputedPatientRecord&) const = default;
};

// ---------------------------------------------------------------------------
// Parsing

// Maps record field names (canonical column names) to the column headers of an input file.
struct CohortSchema {
  std::map<std::string, std::string> columns;

  // Canonical names map to themselves; this is the format write_cohort produces.
  static CohortSchema canonical();
  // Plain-text key=value lines, '#' comments.
  static CohortSchema parse(std::istream& in);
  static CohortSchema load(const std::string& path);
};

// Every field name a schema may map, in canonical column order.
const std::vector<std::string>& canonical_columns();

enum class ExclusionReason { missing_dose, nonpositive_dose, missing_inr, inr_out_of_range };
std::string_view to_string(ExclusionReason r);

struct RowExclusion {
  std::size_t line = 0;  // 1-based line number in the source, header is line 1
  std::string id;
  ExclusionReason reason;
};

struct ParsedCohort {
  std::vector<RawPatientRecord> records;
  std::vector<RowExclusion> excluded;
  std::size_t data_rows = 0;

  std::size_t count(ExclusionReason r) const;
};

// Tab-delimited by default, comma when the header has commas but no tabs.
// "NA" and empty cells are missing; unparseable or out-of-range cells become missing.
ParsedCohort parse_cohort(std::istream& source, const CohortSchema& schema);

// Writes records with canonical column names, tab-delimited, "NA" for missing.
void write_cohort(std::ostream& out, const std::vector<RawPatientRecord>& records);

// ---------------------------------------------------------------------------
// Variable filtering

// Binary variables (gender plus every medication/comorbidity flag) whose minority
// category holds strictly less than min_minority_fraction of non-missing values.
std::vector<std::string> filter_unbalanced(const std::vector<RawPatientRecord>& records,
                                           double min_minority_fraction = 0.10);

// ---------------------------------------------------------------------------
// Imputation

struct ImputationPlan {
  std::map<std::string, double> means;  // height_cm, weight_kg, target_inr
  std::map<std::string, int> modes;     // age_decade, race, gender, every binary flag
  std::string provenance;

  std::string to_text() const;
  static ImputationPlan from_text(std::istream& in);

  bool operator==(const ImputationPlan&) const = default;
};

ImputationPlan fit_imputation(const std::vector<RawPatientRecord>& training_records,
                              std::string provenance = "train");
ImputedPatientRecord apply_imputation(const ImputationPlan& plan, const RawPatientRecord& record);
std::vector<ImputedPatientRecord> apply_imputation(const ImputationPlan& plan,
                                                   const std::vector<RawPatientRecord>& records);

// Lifts a complete record; throws DataError naming the first missing field.
ImputedPatientRecord require_complete(const RawPatientRecord& record);

// ---------------------------------------------------------------------------
// Splitting

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

// Seeded uniform permutation; the first floor(n * train_fraction) positions form the training side.
SplitIndices split_indices(std::size_t n, double train_fraction, std::uint64_t seed);

template <class T>
std::pair<std::vector<T>, std::vector<T>> split_cohort(const std::vector<T>& records, double train_fraction,
                                                       std::uint64_t seed) {
  const auto idx = split_indices(records.size(), train_fraction, seed);
  std::pair<std::vector<T>, std::vector<T>> out;
  out.first.reserve(idx.train.size());
  out.second.reserve(idx.test.size());
  for (auto i : idx.train) out.first.push_back(records[i]);
  for (auto i : idx.test) out.second.push_back(records[i]);
  return out;
}

// ---------------------------------------------------------------------------
// Feature encoding

inline constexpr std::string_view kRaceAfricanAmerican = "race_african_american";
inline constexpr std::string_view kRaceAsian = "race_asian";

// Candidate classifier columns before unbalanced-variable removal. Observed INR and
// the therapeutic dose never appear: one is unknown and the other is the target.
std::vector<std::string> candidate_features();

// candidate_features() minus the removed variables.
std::vector<std::string> classifier_features(const std::vector<std::string>& removed_variables);

bool is_binary_feature(std::string_view name);
// Raw (unscaled) value of one named column for a record.
double feature_value(const ImputedPatientRecord& record, std::string_view name);

// Continuous columns are standardized (scaler fit on these rows unless one is given);
// binary columns pass through as 0/1.
FeatureMatrix encode_features(const std::vector<ImputedPatientRecord>& records,
                              const std::vector<std::string>& feature_names,
                              const std::optional<Scaler>& scaler = std::nullopt);

// ---------------------------------------------------------------------------
// Synthetic cohorts

// Ground truth for generated therapeutic doses:
//   sqrt(dose) = IWPC clinical prediction + shift + noise_sd * N(0,1)
//   noise_sd   = base_noise_sd + risk_noise_sd * risk,  risk in [0,1]
// where risk is a clamped weighted sum of classifier-visible covariates.
struct SyntheticDoseModel {
  double base_noise_sd = 0.15;
  double risk_noise_sd = 1.20;
  double risk_valve_replacement = 1.0;
  double risk_chf = 1.0;
  double risk_diabetes = 1.0;
  double risk_elderly = 1.0;       // age_decade >= 8
  double risk_heavy = 1.0;         // weight_kg > 110
  double shift_current_smoker = 0.0;
};

std::vector<RawPatientRecord> generate_synthetic_cohort(std::size_t n, std::uint64_t seed,
                                                        const SyntheticDoseModel& truth = {});

}  // namespace warfgate
