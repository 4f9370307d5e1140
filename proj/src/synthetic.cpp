// Synthetic IWPC-like cohorts. Marginals follow the published dataset description
// (category frequencies, missingness counts, continuous mean/sd/min/max); doses come
// from SyntheticDoseModel so that the dose model's error depends on visible covariates.

#include <cmath>
#include <cstdio>

#include "warfgate/cohort.hpp"
#include "warfgate/iwpc_dose.hpp"

namespace warfgate {

namespace {

constexpr double kCohortSize = 4237.0;

struct BinaryMarginal {
  double zeros, ones, missing;
};

// Counts per flag, in Binary order. Enzyme is derived from its three inducers.
constexpr std::array<BinaryMarginal, kBinaryCount> kBinaryMarginals = {{
    {3434, 228, 575},   // amiodarone
    {2667, 905, 665},   // aspirin
    {2028, 233, 1976},  // atorvastatin
    {2453, 484, 1300},  // chf
    {2210, 29, 1998},   // carbamazepine
    {2554, 384, 1299},  // current_smoker
    {3846, 391, 0},     // dvt_pe
    {2337, 543, 1357},  // diabetes
    {4150, 87, 0},      // enzyme
    {2350, 10, 1877},   // fluvastatin
    {2203, 38, 1996},   // lovastatin
    {2227, 6, 2004},    // macrolide
    {2210, 24, 2003},   // phenytoin
    {2175, 66, 1996},   // pravastatin
    {2230, 3, 2004},    // rifampin
    {2220, 14, 2003},   // rosuvastatin
    {3035, 558, 644},   // simvastatin
    {2223, 11, 2003},   // sulfonamide
    {2175, 645, 1417},  // valve_replacement
}};

constexpr std::array<double, 9> kAgeCounts = {9, 94, 189, 441, 803, 1020, 1129, 510, 28};
constexpr double kAgeMissing = 14;
constexpr std::array<double, 3> kRaceCounts = {2663, 656, 918};
constexpr double kMaleCount = 2415, kFemaleCount = 1822;

struct ContinuousMarginal {
  double mean, sd, lo, hi, missing;
};
constexpr ContinuousMarginal kHeight{169.7, 10.6, 127.0, 202.0, 696};
constexpr ContinuousMarginal kWeight{81.3, 22.7, 34.0, 237.7, 163};
constexpr ContinuousMarginal kInr{2.5, 0.3, 2.0, 3.0, 0};
constexpr ContinuousMarginal kTargetInr{2.5, 0.1, 1.8, 3.5, 0};
constexpr double kDoseMin = 2.5, kDoseMax = 315.0;

double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI); }
double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double truncated_mean(double loc, double sd, double lo, double hi) {
  const double a = (lo - loc) / sd, b = (hi - loc) / sd;
  return loc + sd * (normal_pdf(a) - normal_pdf(b)) / (normal_cdf(b) - normal_cdf(a));
}

// Location of the parent normal whose truncation to [lo, hi] has the requested mean.
double location_for_mean(const ContinuousMarginal& m) {
  double lo = m.mean - 3.0 * m.sd, hi = m.mean + 3.0 * m.sd;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (truncated_mean(mid, m.sd, m.lo, m.hi) < m.mean ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// Decimal rounding to `decimals` places; dividing by the power of ten keeps the shortest decimal form.
double round_to(double v, int decimals) {
  const double p = std::pow(10.0, decimals);
  return std::round(v * p) / p;
}

class Sampler {
public:
  explicit Sampler(std::uint64_t seed) : rng_(seed) {}

  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(rng_); }
  double normal() { return std::normal_distribution<double>(0.0, 1.0)(rng_); }
  bool bernoulli(double p) { return uniform() < p; }

  double truncated_normal(double loc, double sd, double lo, double hi) {
    for (;;) {
      const double x = loc + sd * normal();
      if (x >= lo && x <= hi) return x;
    }
  }

  template <std::size_t N>
  std::size_t categorical(const std::array<double, N>& weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    double u = uniform() * total;
    for (std::size_t i = 0; i < N; ++i) {
      if (u < weights[i]) return i;
      u -= weights[i];
    }
    return N - 1;
  }

private:
  std::mt19937_64 rng_;
};

}  // namespace

std::vector<RawPatientRecord> generate_synthetic_cohort(std::size_t n, std::uint64_t seed,
                                                        const SyntheticDoseModel& truth) {
  if (n == 0) throw DomainError("generate_synthetic_cohort: n must be positive");
  Sampler s(seed);
  const double height_loc = location_for_mean(kHeight);
  const double weight_loc = location_for_mean(kWeight);
  const double inr_loc = location_for_mean(kInr);
  const double target_loc = location_for_mean(kTargetInr);

  std::vector<RawPatientRecord> out;
  out.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    ImputedPatientRecord t;  // true covariates before masking
    char id[32];
    std::snprintf(id, sizeof id, "S%06zu", k + 1);
    t.id = id;
    t.age_decade = static_cast<int>(s.categorical(kAgeCounts)) + 1;
    t.height_cm = round_to(s.truncated_normal(height_loc, kHeight.sd, kHeight.lo, kHeight.hi), 1);
    t.weight_kg = round_to(s.truncated_normal(weight_loc, kWeight.sd, kWeight.lo, kWeight.hi), 1);
    t.race = static_cast<Race>(s.categorical(kRaceCounts) + 1);
    t.gender = s.bernoulli(kMaleCount / (kMaleCount + kFemaleCount)) ? 1 : 0;
    for (std::size_t b = 0; b < kBinaryCount; ++b) {
      if (b == index(Binary::enzyme) || b == index(Binary::carbamazepine) || b == index(Binary::phenytoin) ||
          b == index(Binary::rifampin)) {
        continue;
      }
      const auto& m = kBinaryMarginals[b];
      t.binaries[b] = s.bernoulli(m.ones / (m.zeros + m.ones)) ? 1 : 0;
    }
    const auto& em = kBinaryMarginals[index(Binary::enzyme)];
    if (s.bernoulli(em.ones / (em.zeros + em.ones))) {
      t.flag(Binary::enzyme) = 1;
      const std::array<double, 3> inducer_weights = {kBinaryMarginals[index(Binary::carbamazepine)].ones,
                                                     kBinaryMarginals[index(Binary::phenytoin)].ones,
                                                     kBinaryMarginals[index(Binary::rifampin)].ones};
      const Binary inducers[3] = {Binary::carbamazepine, Binary::phenytoin, Binary::rifampin};
      t.flag(inducers[s.categorical(inducer_weights)]) = 1;
    }
    t.inr = round_to(s.truncated_normal(inr_loc, kInr.sd, kInr.lo, kInr.hi), 2);
    t.target_inr = round_to(s.truncated_normal(target_loc, kTargetInr.sd, kTargetInr.lo, kTargetInr.hi), 2);

    double risk = truth.risk_valve_replacement * t.flag(Binary::valve_replacement) +
                  truth.risk_chf * t.flag(Binary::chf) + truth.risk_diabetes * t.flag(Binary::diabetes) +
                  truth.risk_elderly * (t.age_decade >= 8 ? 1.0 : 0.0) +
                  truth.risk_heavy * (t.weight_kg > 110.0 ? 1.0 : 0.0);
    risk = std::clamp(risk, 0.0, 1.0);
    const double sd = truth.base_noise_sd + truth.risk_noise_sd * risk;
    double root = linear_predictor(dose_covariates(t)) + truth.shift_current_smoker * t.flag(Binary::current_smoker) +
                  sd * s.normal();
    root = std::clamp(root, std::sqrt(kDoseMin), std::sqrt(kDoseMax));
    t.therapeutic_dose_mg_week = round_to(root * root, 2);

    RawPatientRecord r;
    r.id = t.id;
    r.age_decade = s.bernoulli(kAgeMissing / kCohortSize) ? std::nullopt : std::optional<int>(t.age_decade);
    r.height_cm = s.bernoulli(kHeight.missing / kCohortSize) ? std::nullopt : std::optional<double>(t.height_cm);
    r.weight_kg = s.bernoulli(kWeight.missing / kCohortSize) ? std::nullopt : std::optional<double>(t.weight_kg);
    r.race = t.race;
    r.gender = t.gender;
    for (std::size_t b = 0; b < kBinaryCount; ++b) {
      const double p_missing = kBinaryMarginals[b].missing / kCohortSize;
      r.binaries[b] = s.bernoulli(p_missing) ? std::nullopt : std::optional<int>(t.binaries[b]);
    }
    r.inr = t.inr;
    r.target_inr = t.target_inr;
    r.therapeutic_dose_mg_week = t.therapeutic_dose_mg_week;
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace warfgate
