#pragma once

#include <iosfwd>

#include "warfgate/cohort.hpp"

namespace warfgate {

// IWPC clinical dosing model. The linear predictor is sqrt(mg/week).
struct IwpcCoefficients {
  double intercept = 4.0376;
  double age_per_decade = -0.2546;
  double height_per_cm = 0.0118;
  double weight_per_kg = 0.0134;
  double asian = -0.6752;
  double black = 0.406;
  double race_missing = 0.0443;
  double enzyme = 1.2799;
  double amiodarone = -0.5695;

  bool operator==(const IwpcCoefficients&) const = default;
};

inline constexpr IwpcCoefficients kIwpcClinical{};

// Loads key=value overrides (keys as the field names above). Values that differ from
// the published model are rejected unless allow_override is set.
IwpcCoefficients load_coefficients(std::istream& in, bool allow_override);

// Covariates exactly as the model consumes them; no range checks.
struct DoseCovariates {
  double age_decade = 0;
  double height_cm = 0;
  double weight_kg = 0;
  double asian = 0;
  double black = 0;
  double race_missing = 0;
  double enzyme = 0;
  double amiodarone = 0;
};

DoseCovariates dose_covariates(const ImputedPatientRecord& record);
double linear_predictor(const DoseCovariates& x, const IwpcCoefficients& coeffs = kIwpcClinical);

// Throws DomainError when age_decade is outside 1..9 or the predictor is not positive.
double predict_sqrt_weekly_dose(const ImputedPatientRecord& record, const IwpcCoefficients& coeffs = kIwpcClinical);
double predict_weekly_dose(const ImputedPatientRecord& record, const IwpcCoefficients& coeffs = kIwpcClinical);

}  // namespace warfgate
