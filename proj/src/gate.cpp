#include "warfgate/gate.hpp"

#include <cmath>

namespace warfgate {

void GateConfig::validate() const {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw UsageError("gate threshold must lie in (0, 1), got " + std::to_string(threshold));
  }
}

GateLabel label_record(double predicted_mg_week, double therapeutic_mg_week, const GateConfig& config) {
  if (!(therapeutic_mg_week > 0.0)) {
    throw DomainError("therapeutic dose must be positive, got " + std::to_string(therapeutic_mg_week));
  }
  const double rel = std::abs(predicted_mg_week - therapeutic_mg_week) / therapeutic_mg_week;
  return rel > config.threshold ? GateLabel::HighRisk : GateLabel::SafeForModel;
}

std::vector<int> CohortLabels::as_ints() const {
  std::vector<int> out;
  out.reserve(labels.size());
  for (auto l : labels) out.push_back(to_int(l));
  return out;
}

CohortLabels label_cohort(const std::vector<ImputedPatientRecord>& records, const IwpcCoefficients& coeffs,
                          const GateConfig& config) {
  config.validate();
  CohortLabels out;
  out.labels.reserve(records.size());
  out.predicted_mg_week.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    try {
      const double pred = predict_weekly_dose(r, coeffs);
      const GateLabel l = label_record(pred, r.therapeutic_dose_mg_week, config);
      out.labels.push_back(l);
      out.predicted_mg_week.push_back(pred);
      (l == GateLabel::HighRisk ? out.high_risk : out.safe) += 1;
    } catch (const DomainError& e) {
      throw DomainError("record " + std::to_string(i) + " (" + r.id + "): " + e.what());
    }
  }
  return out;
}

std::vector<std::size_t> shrink_test_set(const FeatureMatrix& test_features, const Predictor& classifier) {
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < test_features.rows(); ++i) {
    if (classifier(test_features.row(i)) < 0) kept.push_back(i);
  }
  return kept;
}

std::vector<std::size_t> shrink_test_set(const FeatureMatrix& test_features, const SvmModel& classifier) {
  if (test_features.feature_names() != classifier.feature_names) {
    throw SchemaError("test features do not match the classifier's feature schema");
  }
  if (test_features.scaler() == classifier.scaler) {
    return shrink_test_set(test_features, Predictor([&](std::span<const double> z) {
                             return sign_label(decision_value_standardized(classifier, z));
                           }));
  }
  // Different standardization: recover raw values and let the model apply its own.
  const Scaler& own = test_features.scaler();
  std::vector<double> raw(test_features.cols());
  return shrink_test_set(test_features, Predictor([&](std::span<const double> z) {
                           for (std::size_t j = 0; j < raw.size(); ++j) raw[j] = own.invert(j, z[j]);
                           return sign_label(decision_value(classifier, raw));
                         }));
}

EvalReport evaluate_gate(const std::vector<ImputedPatientRecord>& test, const CohortLabels& truth,
                         const std::vector<GateLabel>& decisions) {
  if (test.empty()) throw DomainError("gate evaluation: empty test set");
  if (truth.labels.size() != test.size() || decisions.size() != test.size()) {
    throw DomainError("gate evaluation: label, decision and record counts differ");
  }
  EvalReport r;
  r.n_test = test.size();
  r.confusion = confusion(truth.labels, decisions);
  r.classification = metrics(*r.confusion);

  std::vector<double> actual, kept_actual, kept_pred;
  actual.reserve(test.size());
  for (std::size_t i = 0; i < test.size(); ++i) {
    actual.push_back(test[i].therapeutic_dose_mg_week);
    if (decisions[i] == GateLabel::SafeForModel) {
      kept_actual.push_back(test[i].therapeutic_dose_mg_week);
      kept_pred.push_back(truth.predicted_mg_week[i]);
    }
  }
  r.rmse_original = rmse(actual, truth.predicted_mg_week);
  r.mae_original = mae(actual, truth.predicted_mg_week);
  r.n_retained = kept_actual.size();
  r.shrink_ratio = static_cast<double>(r.n_retained) / static_cast<double>(r.n_test);
  if (kept_actual.empty()) {
    throw DegenerateGateError("gate classified every test patient HighRisk; shrunken test set is empty", r);
  }
  r.rmse_shrunken = rmse(kept_actual, kept_pred);
  r.mae_shrunken = mae(kept_actual, kept_pred);
  return r;
}

GateMode parse_gate_mode(const std::string& name) {
  if (name == "trained") return GateMode::trained;
  if (name == "identity") return GateMode::identity;
  if (name == "oracle") return GateMode::oracle;
  throw UsageError("unknown gate mode '" + name + "' (expected trained, identity or oracle)");
}

std::string_view to_string(GateMode mode) {
  switch (mode) {
    case GateMode::trained: return "trained";
    case GateMode::identity: return "identity";
    case GateMode::oracle: return "oracle";
  }
  return "trained";
}

GatedRun run_gate(const std::vector<ImputedPatientRecord>& train, const std::vector<ImputedPatientRecord>& test,
                  const ClassifierConfig& classifier, const GateConfig& gate, const IwpcCoefficients& coeffs,
                  GateMode mode) {
  gate.validate();
  GatedRun run;
  run.test_labels = label_cohort(test, coeffs, gate);
  switch (mode) {
    case GateMode::identity:
      run.decisions.assign(test.size(), GateLabel::SafeForModel);
      break;
    case GateMode::oracle:
      run.decisions = run.test_labels.labels;
      break;
    case GateMode::trained: {
      run.train_labels = label_cohort(train, coeffs, gate);
      const auto names = classifier.features.empty() ? candidate_features() : classifier.features;
      const FeatureMatrix train_x = encode_features(train, names).with_labels(run.train_labels.as_ints());
      run.model = warfgate::train(train_x, classifier.kernel, classifier.train);
      const FeatureMatrix test_x = encode_features(test, names, train_x.scaler());
      run.decisions.assign(test.size(), GateLabel::HighRisk);
      for (auto i : shrink_test_set(test_x, *run.model)) run.decisions[i] = GateLabel::SafeForModel;
      break;
    }
  }
  run.report = evaluate_gate(test, run.test_labels, run.decisions);
  return run;
}

EvalReport gated_evaluation(const std::vector<ImputedPatientRecord>& train,
                            const std::vector<ImputedPatientRecord>& test, const ClassifierConfig& classifier,
                            const GateConfig& gate, const IwpcCoefficients& coeffs) {
  return run_gate(train, test, classifier, gate, coeffs, GateMode::trained).report;
}

}  // namespace warfgate
