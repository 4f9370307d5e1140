#pragma once

// Shared fixtures for the unit tests and the acceptance binary.

#include <algorithm>
#include <random>
#include <string>
#include <vector>

#include "warfgate/cohort.hpp"
#include "warfgate/svm.hpp"

namespace warfgate::testing {

struct PreparedSplit {
  std::vector<ImputedPatientRecord> train;
  std::vector<ImputedPatientRecord> test;
  std::vector<std::string> features;
};

// Synthetic cohort taken through split, unbalanced-variable filtering and training-split imputation.
inline PreparedSplit prepare_synthetic(std::size_t n, std::uint64_t seed, double train_fraction = 0.5) {
  const auto raw = generate_synthetic_cohort(n, seed);
  const auto [train_raw, test_raw] = split_cohort(raw, train_fraction, seed);
  const auto removed = filter_unbalanced(train_raw);
  const auto plan = fit_imputation(train_raw);
  return {apply_imputation(plan, train_raw), apply_imputation(plan, test_raw), classifier_features(removed)};
}

struct DualInstance {
  FeatureMatrix x;
  KernelSpec kernel;
  double c = 1.0;
};

// Random small classification problem with both classes present. Kernels cycle through
// every family and C cycles through {0.1, 1, 100}.
inline DualInstance random_dual_instance(std::mt19937_64& rng, std::size_t index) {
  std::uniform_int_distribution<std::size_t> n_dist(2, 10), d_dist(1, 4);
  std::uniform_real_distribution<double> coord(-1.0, 1.0);
  const std::size_t n = n_dist(rng), d = d_dist(rng);
  std::vector<std::vector<double>> rows(n, std::vector<double>(d));
  for (auto& r : rows) {
    for (auto& v : r) v = coord(rng);
  }
  std::vector<int> labels(n);
  for (auto& l : labels) l = std::bernoulli_distribution(0.5)(rng) ? 1 : -1;
  labels[0] = 1;
  labels[1] = -1;
  std::shuffle(labels.begin(), labels.end(), rng);

  static const double kCs[] = {0.1, 1.0, 100.0};
  DualInstance inst;
  inst.c = kCs[index % 3];
  switch ((index / 3) % 5) {
    case 0: inst.kernel = LinearKernel{}; break;
    case 1: inst.kernel = PolynomialKernel{static_cast<int>(2 + index % 2), 1.0}; break;
    case 2: inst.kernel = SigmoidKernel{std::uniform_real_distribution<double>(-0.5, 0.5)(rng)}; break;
    case 3: inst.kernel = RbfKernel{std::uniform_real_distribution<double>(0.5, 2.0)(rng)}; break;
    default: inst.kernel = AnovaKernel{std::uniform_real_distribution<double>(0.5, 2.0)(rng), static_cast<int>(1 + index % 2),
                                       static_cast<int>(d)};
  }
  inst.x = FeatureMatrix::from_rows(rows, labels);
  return inst;
}

// Solver settings for comparisons against the enumeration oracle: unweighted C and a
// tolerance far below the comparison threshold.
inline TrainConfig oracle_train_config(double c) {
  TrainConfig cfg;
  cfg.c_regularization = c;
  cfg.balance_classes = false;
  cfg.kkt_tolerance = 1e-10;
  cfg.max_passes = 100000;
  return cfg;
}

inline double reference_decision(const FeatureMatrix& x, const KernelSpec& kernel, const ReferenceDualSolution& ref,
                                 std::span<const double> probe) {
  double acc = ref.bias;
  for (std::size_t i = 0; i < x.rows(); ++i) acc += ref.alphas[i] * x.label(i) * kernel_eval(kernel, x.row(i), probe);
  return acc;
}

}  // namespace warfgate::testing
