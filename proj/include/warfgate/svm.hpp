#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "warfgate/feature_matrix.hpp"
#include "warfgate/kernel.hpp"

namespace warfgate {

struct TrainConfig {
  double c_regularization = 1.0;
  double kkt_tolerance = 1e-3;
  double numeric_epsilon = 1e-12;
  // Iteration cap is max_passes * n pairwise updates.
  int max_passes = 1000;
  // Explicit (positive, negative) multipliers on C. Takes precedence over balance_classes.
  std::optional<std::pair<double, double>> class_weights;
  // Inverse class frequency weights, n / (2 n_class).
  bool balance_classes = true;
  // Extra seeded starting points for the sigmoid kernel, whose dual is not concave.
  int indefinite_restarts = 8;
  std::uint64_t seed = 0;
};

// Soft-margin kernel classifier in dual form:
//   f(x) = sum_i alpha_i z_i K(sv_i, x) + b
// Support vectors are stored standardized; decision_value() takes raw features.
struct SvmModel {
  KernelSpec kernel;
  std::vector<std::string> feature_names;
  Scaler scaler;
  std::vector<double> support_vectors;  // row-major, n_support x n_features
  std::vector<double> alphas;
  std::vector<int> sv_labels;
  double bias = 0.0;

  double c_regularization = 1.0;
  double c_positive = 1.0;  // effective box bound for z = +1
  double c_negative = 1.0;  // effective box bound for z = -1
  bool converged = true;
  double max_kkt_violation = 0.0;
  double dual_objective = 0.0;
  std::size_t iterations = 0;

  std::size_t n_features() const { return feature_names.size(); }
  std::size_t n_support() const { return alphas.size(); }
  std::span<const double> support_vector(std::size_t i) const {
    return {support_vectors.data() + i * n_features(), n_features()};
  }
};

// Pairwise dual coordinate ascent. Working pair: the maximal KKT violator and the
// partner maximizing |E_i - E_j|; two-variable subproblem solved in closed form.
// Throws DegenerateError when only one class is present. Non-convergence is not an
// error: the model comes back with converged == false and the final violation.
SvmModel train(const FeatureMatrix& x, const KernelSpec& kernel, const TrainConfig& config);

// Raw-feature decision value; the stored scaler is applied first.
double decision_value(const SvmModel& model, std::span<const double> raw_features);
// Decision value for an already standardized row.
double decision_value_standardized(const SvmModel& model, std::span<const double> z);

// +1 (HighRisk) when the decision value is >= 0, otherwise -1.
inline int sign_label(double decision) { return decision >= 0.0 ? 1 : -1; }
int predict(const SvmModel& model, std::span<const double> raw_features);

// Dual objective sum(alpha) - 1/2 sum_ij alpha_i alpha_j z_i z_j K_ij for an explicit alpha vector.
double dual_objective(const GramMatrix& gram, std::span<const int> labels, std::span<const double> alphas);

struct ReferenceDualSolution {
  std::vector<double> alphas;
  double bias = 0.0;
  double objective = 0.0;
};

// Exhaustive active-set enumeration of the dual: every assignment of each alpha to
// {0, C, free} is tried, the free block solved exactly from its stationarity system,
// and the best feasible point kept. Verification oracle for train(); n in [2, 12].
ReferenceDualSolution reference_dual_solve(const FeatureMatrix& x, const KernelSpec& kernel, double c);

// Versioned text format; values written with 17 significant digits.
inline constexpr const char* kModelFormat = "warfgate-svm";
inline constexpr int kModelFormatVersion = 1;
void save_model(std::ostream& out, const SvmModel& model);
std::string model_to_text(const SvmModel& model);
SvmModel load_model(std::istream& in);
SvmModel load_model_file(const std::string& path);
// "warfgate-svm/1#<fnv1a-64 of the serialized text>"
std::string model_version(const SvmModel& model);

}  // namespace warfgate
