#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "warfgate/feature_matrix.hpp"
#include "warfgate/gate_label.hpp"
#include "warfgate/svm.hpp"

namespace warfgate {

struct ConfusionMatrix {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;

  std::size_t total() const { return tp + fp + tn + fn; }
  ConfusionMatrix& operator+=(const ConfusionMatrix& o) {
    tp += o.tp;
    fp += o.fp;
    tn += o.tn;
    fn += o.fn;
    return *this;
  }
  bool operator==(const ConfusionMatrix&) const = default;
};

ConfusionMatrix confusion(std::span<const GateLabel> truth, std::span<const GateLabel> predicted);

// Sensitivity or specificity is nullopt when its denominator is zero.
struct ClassificationMetrics {
  double accuracy = 0.0;
  std::optional<double> sensitivity;
  std::optional<double> specificity;

  std::optional<double> balanced_accuracy() const {
    if (!sensitivity || !specificity) return std::nullopt;
    return 0.5 * (*sensitivity + *specificity);
  }
};

ClassificationMetrics metrics(const ConfusionMatrix& cm);

double rmse(std::span<const double> actual, std::span<const double> predicted);
double mae(std::span<const double> actual, std::span<const double> predicted);

// Any classifier over standardized feature rows: returns +1 (HighRisk) or -1.
using Predictor = std::function<int(std::span<const double>)>;
using Trainer = std::function<Predictor(const FeatureMatrix& training_rows)>;

Trainer svm_trainer(const KernelSpec& kernel, const TrainConfig& config);

// ---------------------------------------------------------------------------
// Cross-validation

// Seeded fold assignment; fold sizes differ by at most one. Stratified folds deal each
// class separately so every fold sees both classes in proportion.
std::vector<std::vector<std::size_t>> make_folds(std::span<const int> labels, std::size_t k, std::uint64_t seed,
                                                 bool stratified = true);

struct FoldResult {
  std::size_t fold = 0;
  std::size_t n_train = 0;
  std::size_t n_validation = 0;
  bool skipped = false;
  std::string note;
  ConfusionMatrix confusion;
  ClassificationMetrics metrics;
};

struct MetricSummary {
  std::optional<double> mean;
  std::optional<double> sd;  // sample standard deviation over folds where the metric is defined
  std::size_t n_defined = 0;
};

struct CvReport {
  std::vector<FoldResult> folds;
  MetricSummary accuracy, sensitivity, specificity, balanced_accuracy;
  std::size_t skipped_folds = 0;
};

CvReport kfold_cv(const FeatureMatrix& data, std::size_t k, const Trainer& trainer, std::uint64_t seed,
                  bool stratified = true);

// ---------------------------------------------------------------------------
// Reports

struct EvalReport {
  std::optional<ConfusionMatrix> confusion;  // gate decisions vs true labels
  std::optional<ClassificationMetrics> classification;
  std::size_t n_test = 0;
  std::size_t n_retained = 0;
  double rmse_original = 0.0;
  double mae_original = 0.0;
  std::optional<double> rmse_shrunken;  // present only when shrink_ratio > 0
  std::optional<double> mae_shrunken;
  double shrink_ratio = 0.0;  // retained / test
  std::vector<FoldResult> folds;
};

nlohmann::json to_json(const ClassificationMetrics& m);
nlohmann::json to_json(const EvalReport& r);
nlohmann::json to_json(const CvReport& r);

// "76.07", or an em-dash placeholder when undefined.
std::string format_percent(const std::optional<double>& fraction);
std::string format_metric(const std::optional<double>& value, int decimals = 2);

std::string format_report(const EvalReport& r);
std::string format_cv_table(const CvReport& r);

// ---------------------------------------------------------------------------
// Model comparison

enum class SortMetric { none, accuracy, sensitivity, specificity, balanced_accuracy };
SortMetric parse_sort_metric(const std::string& name);

struct Candidate {
  std::string name;
  KernelSpec kernel;
  TrainConfig config;
};

struct ComparisonRow {
  std::string name;
  std::optional<ConfusionMatrix> confusion;
  std::optional<ClassificationMetrics> metrics;
  std::string error;  // training or evaluation failure; the row stays in the table
};

struct ComparisonTable {
  std::vector<ComparisonRow> rows;
};

// Trains each candidate on `train`, evaluates on `test`. Duplicate names get "#2", "#3" suffixes.
ComparisonTable compare_models(const std::vector<Candidate>& candidates, const FeatureMatrix& train,
                               const FeatureMatrix& test, std::uint64_t seed, SortMetric sort_by);

std::string format_table(const ComparisonTable& t);      // aligned, percentages
std::string format_delimited(const ComparisonTable& t);  // tab-separated, fractions
nlohmann::json to_json(const ComparisonTable& t);

}  // namespace warfgate
