#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "warfgate/feature_matrix.hpp"

namespace warfgate {

struct LinearKernel {
  bool operator==(const LinearKernel&) const = default;
};

// (<x,y> + offset)^degree
struct PolynomialKernel {
  int degree = 2;
  double offset = 1.0;
  bool operator==(const PolynomialKernel&) const = default;
};

// tanh(<x,y> + theta). Not positive semidefinite in general.
struct SigmoidKernel {
  double theta = 0.0;
  bool operator==(const SigmoidKernel&) const = default;
};

// exp(-|x-y|^2 / (2 delta^2))
struct RbfKernel {
  double delta = 1.0;
  bool operator==(const RbfKernel&) const = default;
};

// sum_k exp(-sigma (x_k - y_k)^2)^d over n_dims coordinates
struct AnovaKernel {
  double sigma = 1.0;
  int d = 1;
  int n_dims = 0;
  bool operator==(const AnovaKernel&) const = default;
};

using KernelSpec = std::variant<LinearKernel, PolynomialKernel, SigmoidKernel, RbfKernel, AnovaKernel>;

// Throws DomainError on out-of-range parameters.
void validate(const KernelSpec& spec);

// Textual form used by the CLI and model files: "linear", "poly:2:1", "sigmoid:0",
// "rbf:1", "anova:1:2:14".
std::string to_string(const KernelSpec& spec);
KernelSpec parse_kernel(const std::string& text);

double kernel_eval(const KernelSpec& spec, std::span<const double> x, std::span<const double> y);

// Dense symmetric Gram matrix, row-major n x n; each unordered pair evaluated once.
struct GramMatrix {
  std::size_t n = 0;
  std::vector<double> values;

  double operator()(std::size_t i, std::size_t j) const { return values[i * n + j]; }
  std::span<const double> row(std::size_t i) const { return {values.data() + i * n, n}; }
};

GramMatrix gram_matrix(const KernelSpec& spec, const FeatureMatrix& x);

}  // namespace warfgate
