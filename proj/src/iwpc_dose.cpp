#include "warfgate/iwpc_dose.hpp"

#include <cmath>
#include <istream>
#include <string>

namespace warfgate {

namespace {

double* coefficient_slot(IwpcCoefficients& c, const std::string& key) {
  if (key == "intercept") return &c.intercept;
  if (key == "age_per_decade") return &c.age_per_decade;
  if (key == "height_per_cm") return &c.height_per_cm;
  if (key == "weight_per_kg") return &c.weight_per_kg;
  if (key == "asian") return &c.asian;
  if (key == "black") return &c.black;
  if (key == "race_missing") return &c.race_missing;
  if (key == "enzyme") return &c.enzyme;
  if (key == "amiodarone") return &c.amiodarone;
  return nullptr;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

IwpcCoefficients load_coefficients(std::istream& in, bool allow_override) {
  IwpcCoefficients c = kIwpcClinical;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw SchemaError("coefficients line " + std::to_string(lineno) + ": expected key=value");
    const auto key = trim(line.substr(0, eq));
    double* slot = coefficient_slot(c, key);
    if (!slot) throw SchemaError("coefficients line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    try {
      *slot = std::stod(trim(line.substr(eq + 1)));
    } catch (const std::exception&) {
      throw SchemaError("coefficients line " + std::to_string(lineno) + ": bad number");
    }
  }
  if (c != kIwpcClinical && !allow_override) {
    throw UsageError("coefficient file differs from the published IWPC clinical model; pass the override flag to use it");
  }
  return c;
}

DoseCovariates dose_covariates(const ImputedPatientRecord& r) {
  DoseCovariates x;
  x.age_decade = r.age_decade;
  x.height_cm = r.height_cm;
  x.weight_kg = r.weight_kg;
  x.asian = r.race == Race::Asian ? 1.0 : 0.0;
  x.black = r.race == Race::AfricanAmerican ? 1.0 : 0.0;
  x.race_missing = r.race == Race::Unknown ? 1.0 : 0.0;
  x.enzyme = r.flag(Binary::enzyme);
  x.amiodarone = r.flag(Binary::amiodarone);
  return x;
}

double linear_predictor(const DoseCovariates& x, const IwpcCoefficients& c) {
  return c.intercept + c.age_per_decade * x.age_decade + c.height_per_cm * x.height_cm +
         c.weight_per_kg * x.weight_kg + c.asian * x.asian + c.black * x.black + c.race_missing * x.race_missing +
         c.enzyme * x.enzyme + c.amiodarone * x.amiodarone;
}

double predict_sqrt_weekly_dose(const ImputedPatientRecord& record, const IwpcCoefficients& coeffs) {
  if (record.age_decade < 1 || record.age_decade > 9) {
    throw DomainError("age_decade " + std::to_string(record.age_decade) + " outside 1..9");
  }
  const double s = linear_predictor(dose_covariates(record), coeffs);
  if (!(s > 0.0)) {
    throw DomainError("non-physical dose: sqrt-dose predictor " + std::to_string(s) + " <= 0 for patient '" +
                      record.id + "'");
  }
  return s;
}

double predict_weekly_dose(const ImputedPatientRecord& record, const IwpcCoefficients& coeffs) {
  const double s = predict_sqrt_weekly_dose(record, coeffs);
  return s * s;
}

}  // namespace warfgate
