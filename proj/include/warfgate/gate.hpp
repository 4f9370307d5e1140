#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "warfgate/cohort.hpp"
#include "warfgate/error.hpp"
#include "warfgate/eval.hpp"
#include "warfgate/gate_label.hpp"
#include "warfgate/iwpc_dose.hpp"
#include "warfgate/svm.hpp"

namespace warfgate {

// Relative error is measured against the therapeutic dose, in mg/week.
struct GateConfig {
  double threshold = 0.15;

  void validate() const;  // throws UsageError unless 0 < threshold < 1
};

// |predicted - therapeutic| / therapeutic > threshold is HighRisk; exactly at the threshold is Safe.
GateLabel label_record(double predicted_mg_week, double therapeutic_mg_week, const GateConfig& config = {});

struct CohortLabels {
  std::vector<GateLabel> labels;
  std::vector<double> predicted_mg_week;
  std::size_t high_risk = 0;
  std::size_t safe = 0;

  std::vector<int> as_ints() const;
};

// Errors from individual records are rethrown with the record index and id prepended.
CohortLabels label_cohort(const std::vector<ImputedPatientRecord>& records,
                          const IwpcCoefficients& coeffs = kIwpcClinical, const GateConfig& config = {});

// Indices the classifier sends to SafeForModel, ascending.
std::vector<std::size_t> shrink_test_set(const FeatureMatrix& test_features, const SvmModel& classifier);
std::vector<std::size_t> shrink_test_set(const FeatureMatrix& test_features, const Predictor& classifier);

// Raised when the gate keeps nobody; the original-set figures are still available.
class DegenerateGateError : public DegenerateError {
public:
  DegenerateGateError(const std::string& what, EvalReport original)
      : DegenerateError(what), report_(std::move(original)) {}
  const EvalReport& report() const { return report_; }

private:
  EvalReport report_;
};

// Scores a set of gate decisions against true labels and computes dose error on the
// full and Safe-classified test sets. Throws DegenerateGateError when nothing is retained.
EvalReport evaluate_gate(const std::vector<ImputedPatientRecord>& test, const CohortLabels& truth,
                         const std::vector<GateLabel>& decisions);

// trained: the SVM decides; identity: everyone Safe; oracle: the true labels decide.
enum class GateMode { trained, identity, oracle };
GateMode parse_gate_mode(const std::string& name);
std::string_view to_string(GateMode mode);

struct ClassifierConfig {
  KernelSpec kernel = PolynomialKernel{2, 1.0};
  TrainConfig train;
  std::vector<std::string> features;  // empty: every candidate feature
};

struct GatedRun {
  EvalReport report;
  CohortLabels train_labels;
  CohortLabels test_labels;
  std::vector<GateLabel> decisions;
  std::optional<SvmModel> model;  // only in trained mode
};

// Label the training split, fit the classifier, gate the test split and compare dose
// error before and after. Train and test must be imputed with the same plan.
GatedRun run_gate(const std::vector<ImputedPatientRecord>& train, const std::vector<ImputedPatientRecord>& test,
                  const ClassifierConfig& classifier, const GateConfig& gate = {},
                  const IwpcCoefficients& coeffs = kIwpcClinical, GateMode mode = GateMode::trained);

EvalReport gated_evaluation(const std::vector<ImputedPatientRecord>& train,
                            const std::vector<ImputedPatientRecord>& test, const ClassifierConfig& classifier,
                            const GateConfig& gate = {}, const IwpcCoefficients& coeffs = kIwpcClinical);

}  // namespace warfgate
