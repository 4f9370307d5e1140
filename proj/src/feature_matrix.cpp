#include "warfgate/feature_matrix.hpp"

#include "warfgate/error.hpp"

namespace warfgate {

Scaler Scaler::identity(std::size_t n_features) {
  return Scaler{std::vector<double>(n_features, 0.0), std::vector<double>(n_features, 1.0)};
}

std::vector<double> Scaler::apply(std::span<const double> raw) const {
  if (raw.size() != size()) {
    throw DomainError("scaler expects " + std::to_string(size()) + " features, got " + std::to_string(raw.size()));
  }
  std::vector<double> out(raw.size());
  for (std::size_t j = 0; j < raw.size(); ++j) out[j] = apply(j, raw[j]);
  return out;
}

FeatureMatrix::FeatureMatrix(std::size_t rows, std::vector<std::string> feature_names, std::vector<double> values,
                             Scaler scaler, std::vector<int> labels)
    : rows_(rows),
      names_(std::move(feature_names)),
      values_(std::move(values)),
      scaler_(std::move(scaler)),
      labels_(std::move(labels)) {
  if (values_.size() != rows_ * names_.size()) {
    throw SchemaError("feature matrix holds " + std::to_string(values_.size()) + " values, expected " +
                      std::to_string(rows_) + " x " + std::to_string(names_.size()));
  }
  if (scaler_.size() != names_.size() || scaler_.scale.size() != names_.size()) {
    throw SchemaError("scaler width does not match feature count");
  }
  if (!labels_.empty() && labels_.size() != rows_) {
    throw SchemaError("label count " + std::to_string(labels_.size()) + " != row count " + std::to_string(rows_));
  }
  for (int z : labels_) {
    if (z != -1 && z != 1) throw DomainError("labels must be -1 or +1");
  }
}

FeatureMatrix FeatureMatrix::from_rows(const std::vector<std::vector<double>>& rows, std::vector<int> labels,
                                       std::vector<std::string> feature_names) {
  const std::size_t d = rows.empty() ? feature_names.size() : rows.front().size();
  if (feature_names.empty()) {
    for (std::size_t j = 0; j < d; ++j) feature_names.push_back("x" + std::to_string(j));
  }
  std::vector<double> values;
  values.reserve(rows.size() * d);
  for (const auto& r : rows) {
    if (r.size() != d) throw DomainError("ragged rows");
    values.insert(values.end(), r.begin(), r.end());
  }
  return FeatureMatrix(rows.size(), std::move(feature_names), std::move(values), Scaler::identity(d),
                       std::move(labels));
}

FeatureMatrix FeatureMatrix::with_labels(std::vector<int> labels) const {
  return FeatureMatrix(rows_, names_, values_, scaler_, std::move(labels));
}

FeatureMatrix FeatureMatrix::subset(std::span<const std::size_t> indices) const {
  std::vector<double> values;
  values.reserve(indices.size() * cols());
  std::vector<int> labels;
  for (std::size_t i : indices) {
    if (i >= rows_) throw DomainError("row index out of range");
    auto r = row(i);
    values.insert(values.end(), r.begin(), r.end());
    if (has_labels()) labels.push_back(labels_[i]);
  }
  return FeatureMatrix(indices.size(), names_, std::move(values), scaler_, std::move(labels));
}

}  // namespace warfgate
