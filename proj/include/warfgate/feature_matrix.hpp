#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace warfgate {

// Per-column affine standardization: z = (x - mean) / scale.
// Binary columns carry mean 0 and scale 1 so they pass through unchanged.
// Scale is the population (divide-by-n) standard deviation; constant columns get scale 1.
struct Scaler {
  std::vector<double> mean;
  std::vector<double> scale;

  static Scaler identity(std::size_t n_features);

  std::size_t size() const { return mean.size(); }
  double apply(std::size_t column, double raw) const { return (raw - mean[column]) / scale[column]; }
  double invert(std::size_t column, double z) const { return z * scale[column] + mean[column]; }
  std::vector<double> apply(std::span<const double> raw) const;

  bool operator==(const Scaler&) const = default;
};

// Dense row-major matrix of standardized feature rows with optional {-1,+1} labels.
class FeatureMatrix {
public:
  FeatureMatrix() = default;
  FeatureMatrix(std::size_t rows, std::vector<std::string> feature_names, std::vector<double> values,
                Scaler scaler, std::vector<int> labels = {});

  // Builds an unscaled matrix (identity scaler) from explicit rows; handy for toy problems.
  static FeatureMatrix from_rows(const std::vector<std::vector<double>>& rows, std::vector<int> labels = {},
                                 std::vector<std::string> feature_names = {});

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return names_.size(); }
  bool empty() const { return rows_ == 0; }

  std::span<const double> row(std::size_t i) const { return {values_.data() + i * cols(), cols()}; }
  double at(std::size_t i, std::size_t j) const { return values_[i * cols() + j]; }

  const std::vector<double>& values() const { return values_; }
  const std::vector<std::string>& feature_names() const { return names_; }
  const Scaler& scaler() const { return scaler_; }

  bool has_labels() const { return !labels_.empty(); }
  const std::vector<int>& labels() const { return labels_; }
  int label(std::size_t i) const { return labels_[i]; }

  FeatureMatrix with_labels(std::vector<int> labels) const;
  FeatureMatrix subset(std::span<const std::size_t> indices) const;

private:
  std::size_t rows_ = 0;
  std::vector<std::string> names_;
  std::vector<double> values_;
  Scaler scaler_;
  std::vector<int> labels_;
};

}  // namespace warfgate
