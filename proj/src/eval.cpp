#include "warfgate/eval.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include "text_util.hpp"
#include "warfgate/error.hpp"

namespace warfgate {

ConfusionMatrix confusion(std::span<const GateLabel> truth, std::span<const GateLabel> predicted) {
  if (truth.size() != predicted.size()) {
    throw DomainError("confusion: " + std::to_string(truth.size()) + " truth labels vs " +
                      std::to_string(predicted.size()) + " predictions");
  }
  if (truth.empty()) throw DomainError("confusion: no labels");
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const bool pos_truth = truth[i] == GateLabel::HighRisk;
    const bool pos_pred = predicted[i] == GateLabel::HighRisk;
    if (pos_truth && pos_pred) ++cm.tp;
    else if (pos_truth) ++cm.fn;
    else if (pos_pred) ++cm.fp;
    else ++cm.tn;
  }
  return cm;
}

ClassificationMetrics metrics(const ConfusionMatrix& cm) {
  if (cm.total() == 0) throw DomainError("metrics: empty confusion matrix");
  ClassificationMetrics m;
  m.accuracy = static_cast<double>(cm.tp + cm.tn) / static_cast<double>(cm.total());
  if (cm.tp + cm.fn > 0) m.sensitivity = static_cast<double>(cm.tp) / static_cast<double>(cm.tp + cm.fn);
  if (cm.tn + cm.fp > 0) m.specificity = static_cast<double>(cm.tn) / static_cast<double>(cm.tn + cm.fp);
  return m;
}

namespace {
void check_pair(std::span<const double> a, std::span<const double> p, const char* what) {
  if (a.size() != p.size()) {
    throw DomainError(std::string(what) + ": length mismatch " + std::to_string(a.size()) + " vs " +
                      std::to_string(p.size()));
  }
  if (a.empty()) throw DomainError(std::string(what) + ": empty input");
}
}  // namespace

double rmse(std::span<const double> actual, std::span<const double> predicted) {
  check_pair(actual, predicted, "rmse");
  double ss = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) ss += (actual[i] - predicted[i]) * (actual[i] - predicted[i]);
  return std::sqrt(ss / static_cast<double>(actual.size()));
}

double mae(std::span<const double> actual, std::span<const double> predicted) {
  check_pair(actual, predicted, "mae");
  double s = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) s += std::abs(actual[i] - predicted[i]);
  return s / static_cast<double>(actual.size());
}

Trainer svm_trainer(const KernelSpec& kernel, const TrainConfig& config) {
  return [kernel, config](const FeatureMatrix& rows) -> Predictor {
    auto model = std::make_shared<const SvmModel>(train(rows, kernel, config));
    return [model](std::span<const double> z) { return sign_label(decision_value_standardized(*model, z)); };
  };
}

// ---------------------------------------------------------------------------

std::vector<std::vector<std::size_t>> make_folds(std::span<const int> labels, std::size_t k, std::uint64_t seed,
                                                 bool stratified) {
  const std::size_t n = labels.size();
  if (k < 2) throw DomainError("k-fold: k must be >= 2");
  if (k > n) throw DomainError("k-fold: k = " + std::to_string(k) + " exceeds " + std::to_string(n) + " rows");
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> dealt;
  dealt.reserve(n);
  if (stratified) {
    for (int cls : {-1, 1}) {
      std::vector<std::size_t> members;
      for (std::size_t i = 0; i < n; ++i) {
        if (labels[i] == cls) members.push_back(i);
      }
      std::shuffle(members.begin(), members.end(), rng);
      dealt.insert(dealt.end(), members.begin(), members.end());
    }
    // Unlabelled or other values are dealt last in index order.
    for (std::size_t i = 0; i < n; ++i) {
      if (labels[i] != -1 && labels[i] != 1) dealt.push_back(i);
    }
  } else {
    dealt.resize(n);
    std::iota(dealt.begin(), dealt.end(), std::size_t{0});
    std::shuffle(dealt.begin(), dealt.end(), rng);
  }
  std::vector<std::vector<std::size_t>> folds(k);
  for (std::size_t p = 0; p < n; ++p) folds[p % k].push_back(dealt[p]);
  for (auto& f : folds) std::sort(f.begin(), f.end());
  return folds;
}

namespace {

MetricSummary summarize(const std::vector<std::optional<double>>& values) {
  MetricSummary s;
  double sum = 0.0;
  for (const auto& v : values) {
    if (v) {
      sum += *v;
      ++s.n_defined;
    }
  }
  if (s.n_defined == 0) return s;
  const double mean = sum / static_cast<double>(s.n_defined);
  s.mean = mean;
  if (s.n_defined >= 2) {
    double ss = 0.0;
    for (const auto& v : values) {
      if (v) ss += (*v - mean) * (*v - mean);
    }
    s.sd = std::sqrt(ss / static_cast<double>(s.n_defined - 1));
  }
  return s;
}

}  // namespace

CvReport kfold_cv(const FeatureMatrix& data, std::size_t k, const Trainer& trainer, std::uint64_t seed,
                  bool stratified) {
  if (!data.has_labels()) throw DomainError("k-fold: data has no labels");
  const auto folds = make_folds(data.labels(), k, seed, stratified);
  CvReport report;
  std::vector<char> in_fold(data.rows());
  std::vector<std::optional<double>> acc, sens, spec, bal;
  for (std::size_t f = 0; f < folds.size(); ++f) {
    std::fill(in_fold.begin(), in_fold.end(), 0);
    for (auto i : folds[f]) in_fold[i] = 1;
    std::vector<std::size_t> train_idx;
    for (std::size_t i = 0; i < data.rows(); ++i) {
      if (!in_fold[i]) train_idx.push_back(i);
    }
    FoldResult r;
    r.fold = f;
    r.n_train = train_idx.size();
    r.n_validation = folds[f].size();
    const auto train_rows = data.subset(train_idx);
    const auto& tl = train_rows.labels();
    if (std::find(tl.begin(), tl.end(), 1) == tl.end() || std::find(tl.begin(), tl.end(), -1) == tl.end()) {
      r.skipped = true;
      r.note = "skipped: single-class training fold";
      ++report.skipped_folds;
      report.folds.push_back(std::move(r));
      continue;
    }
    const Predictor predictor = trainer(train_rows);
    std::vector<GateLabel> truth, predicted;
    for (auto i : folds[f]) {
      truth.push_back(label_from_sign(data.label(i)));
      predicted.push_back(label_from_sign(predictor(data.row(i))));
    }
    r.confusion = confusion(truth, predicted);
    r.metrics = metrics(r.confusion);
    acc.push_back(r.metrics.accuracy);
    sens.push_back(r.metrics.sensitivity);
    spec.push_back(r.metrics.specificity);
    bal.push_back(r.metrics.balanced_accuracy());
    report.folds.push_back(std::move(r));
  }
  report.accuracy = summarize(acc);
  report.sensitivity = summarize(sens);
  report.specificity = summarize(spec);
  report.balanced_accuracy = summarize(bal);
  return report;
}

// ---------------------------------------------------------------------------

std::string format_metric(const std::optional<double>& value, int decimals) {
  return value ? text::format_fixed(*value, decimals) : "—";
}

std::string format_percent(const std::optional<double>& fraction) {
  return fraction ? text::format_fixed(100.0 * *fraction, 2) : "—";
}

namespace {
nlohmann::json opt(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

nlohmann::json to_json(const ConfusionMatrix& cm) {
  return {{"tp", cm.tp}, {"fp", cm.fp}, {"tn", cm.tn}, {"fn", cm.fn}};
}

nlohmann::json to_json(const MetricSummary& s) {
  return {{"mean", opt(s.mean)}, {"sd", opt(s.sd)}, {"n_defined", s.n_defined}};
}

nlohmann::json to_json(const FoldResult& f) {
  nlohmann::json j = {{"fold", f.fold}, {"n_train", f.n_train}, {"n_validation", f.n_validation},
                      {"skipped", f.skipped}};
  if (f.skipped) {
    j["note"] = f.note;
  } else {
    j["confusion"] = to_json(f.confusion);
    j["metrics"] = to_json(f.metrics);
  }
  return j;
}

// Display width in terminal cells; counts UTF-8 lead bytes only.
std::size_t display_width(const std::string& s) {
  std::size_t w = 0;
  for (unsigned char c : s) w += (c & 0xC0) != 0x80;
  return w;
}

std::string pad(const std::string& s, std::size_t width, bool right_align) {
  const std::size_t w = display_width(s);
  if (w >= width) return s;
  const std::string fill(width - w, ' ');
  return right_align ? fill + s : s + fill;
}

std::string render(const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> widths;
  for (const auto& r : rows) {
    widths.resize(std::max(widths.size(), r.size()));
    for (std::size_t c = 0; c < r.size(); ++c) widths[c] = std::max(widths[c], display_width(r[c]));
  }
  std::ostringstream os;
  for (const auto& r : rows) {
    for (std::size_t c = 0; c < r.size(); ++c) {
      if (c) os << "  ";
      os << pad(r[c], widths[c], c > 0);
    }
    os << '\n';
  }
  return os.str();
}
}  // namespace

nlohmann::json to_json(const ClassificationMetrics& m) {
  return {{"accuracy", m.accuracy},
          {"sensitivity", opt(m.sensitivity)},
          {"specificity", opt(m.specificity)},
          {"balanced_accuracy", opt(m.balanced_accuracy())}};
}

nlohmann::json to_json(const EvalReport& r) {
  nlohmann::json j;
  j["n_test"] = r.n_test;
  j["n_retained"] = r.n_retained;
  j["shrink_ratio"] = r.shrink_ratio;
  j["rmse_original"] = r.rmse_original;
  j["mae_original"] = r.mae_original;
  j["rmse_shrunken"] = opt(r.rmse_shrunken);
  j["mae_shrunken"] = opt(r.mae_shrunken);
  j["confusion"] = r.confusion ? to_json(*r.confusion) : nlohmann::json(nullptr);
  j["classification"] = r.classification ? to_json(*r.classification) : nlohmann::json(nullptr);
  if (!r.folds.empty()) {
    j["folds"] = nlohmann::json::array();
    for (const auto& f : r.folds) j["folds"].push_back(to_json(f));
  }
  return j;
}

nlohmann::json to_json(const CvReport& r) {
  nlohmann::json j;
  j["accuracy"] = to_json(r.accuracy);
  j["sensitivity"] = to_json(r.sensitivity);
  j["specificity"] = to_json(r.specificity);
  j["balanced_accuracy"] = to_json(r.balanced_accuracy);
  j["skipped_folds"] = r.skipped_folds;
  j["folds"] = nlohmann::json::array();
  for (const auto& f : r.folds) j["folds"].push_back(to_json(f));
  return j;
}

std::string format_report(const EvalReport& r) {
  std::ostringstream os;
  if (r.classification) {
    os << "Gate classification on the test set (HighRisk = positive)\n";
    os << render({{"Accuracy", "Sensitivity", "Specificity"},
                  {format_percent(r.classification->accuracy), format_percent(r.classification->sensitivity),
                   format_percent(r.classification->specificity)}});
    os << '\n';
  }
  os << "IWPC clinical model error, mg/week\n";
  os << render({{"Test set", "Original", "Shrunken"},
                {"RMSE", format_metric(r.rmse_original), format_metric(r.rmse_shrunken)},
                {"MAE", format_metric(r.mae_original), format_metric(r.mae_shrunken)}});
  os << '\n'
     << "retained " << r.n_retained << " of " << r.n_test << " (shrink ratio " << format_metric(r.shrink_ratio, 4)
     << ")\n";
  return os.str();
}

std::string format_cv_table(const CvReport& r) {
  std::vector<std::vector<std::string>> rows = {{"Fold", "Train", "Valid", "Accuracy", "Sensitivity", "Specificity"}};
  for (const auto& f : r.folds) {
    if (f.skipped) {
      rows.push_back({std::to_string(f.fold + 1), std::to_string(f.n_train), std::to_string(f.n_validation), f.note,
                      "", ""});
      continue;
    }
    rows.push_back({std::to_string(f.fold + 1), std::to_string(f.n_train), std::to_string(f.n_validation),
                    format_percent(f.metrics.accuracy), format_percent(f.metrics.sensitivity),
                    format_percent(f.metrics.specificity)});
  }
  rows.push_back({"mean", "", "", format_percent(r.accuracy.mean), format_percent(r.sensitivity.mean),
                  format_percent(r.specificity.mean)});
  rows.push_back({"sd", "", "", format_percent(r.accuracy.sd), format_percent(r.sensitivity.sd),
                  format_percent(r.specificity.sd)});
  return render(rows);
}

// ---------------------------------------------------------------------------

SortMetric parse_sort_metric(const std::string& name) {
  if (name == "none") return SortMetric::none;
  if (name == "accuracy") return SortMetric::accuracy;
  if (name == "sensitivity") return SortMetric::sensitivity;
  if (name == "specificity") return SortMetric::specificity;
  if (name == "balanced_accuracy") return SortMetric::balanced_accuracy;
  throw UsageError("unknown sort metric '" + name + "'");
}

ComparisonTable compare_models(const std::vector<Candidate>& candidates, const FeatureMatrix& train_rows,
                               const FeatureMatrix& test_rows, std::uint64_t seed, SortMetric sort_by) {
  if (candidates.empty()) throw DomainError("compare_models: no candidates");
  if (!test_rows.has_labels()) throw DomainError("compare_models: test matrix has no labels");
  ComparisonTable table;
  std::map<std::string, int> seen;
  for (const auto& cand : candidates) {
    ComparisonRow row;
    const int occurrence = ++seen[cand.name];
    row.name = occurrence == 1 ? cand.name : cand.name + "#" + std::to_string(occurrence);
    try {
      TrainConfig cfg = cand.config;
      cfg.seed = seed;
      const SvmModel model = train(train_rows, cand.kernel, cfg);
      std::vector<GateLabel> truth, predicted;
      for (std::size_t i = 0; i < test_rows.rows(); ++i) {
        truth.push_back(label_from_sign(test_rows.label(i)));
        predicted.push_back(label_from_sign(sign_label(decision_value_standardized(model, test_rows.row(i)))));
      }
      row.confusion = confusion(truth, predicted);
      row.metrics = metrics(*row.confusion);
    } catch (const std::exception& e) {
      row.error = e.what();
    }
    table.rows.push_back(std::move(row));
  }
  if (sort_by != SortMetric::none) {
    auto key = [sort_by](const ComparisonRow& r) -> std::optional<double> {
      if (!r.metrics) return std::nullopt;
      switch (sort_by) {
        case SortMetric::accuracy: return r.metrics->accuracy;
        case SortMetric::sensitivity: return r.metrics->sensitivity;
        case SortMetric::specificity: return r.metrics->specificity;
        case SortMetric::balanced_accuracy: return r.metrics->balanced_accuracy();
        case SortMetric::none: break;
      }
      return std::nullopt;
    };
    std::stable_sort(table.rows.begin(), table.rows.end(), [&](const ComparisonRow& a, const ComparisonRow& b) {
      const auto ka = key(a), kb = key(b);
      if (ka && kb) return *ka > *kb;
      return ka.has_value() && !kb.has_value();
    });
  }
  return table;
}

std::string format_table(const ComparisonTable& t) {
  std::vector<std::vector<std::string>> rows = {{"Model", "Accuracy", "Sensitivity", "Specificity"}};
  for (const auto& r : t.rows) {
    if (!r.metrics) {
      rows.push_back({r.name, "error: " + r.error, "", ""});
      continue;
    }
    rows.push_back({r.name, format_percent(r.metrics->accuracy), format_percent(r.metrics->sensitivity),
                    format_percent(r.metrics->specificity)});
  }
  return render(rows);
}

std::string format_delimited(const ComparisonTable& t) {
  std::ostringstream os;
  os << "model\taccuracy\tsensitivity\tspecificity\terror\n";
  auto cell = [](const std::optional<double>& v) { return v ? text::format_real(*v) : std::string("NA"); };
  for (const auto& r : t.rows) {
    os << r.name << '\t';
    if (r.metrics) {
      os << cell(r.metrics->accuracy) << '\t' << cell(r.metrics->sensitivity) << '\t'
         << cell(r.metrics->specificity) << '\t';
    } else {
      os << "NA\tNA\tNA\t";
    }
    os << r.error << '\n';
  }
  return os.str();
}

nlohmann::json to_json(const ComparisonTable& t) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& r : t.rows) {
    nlohmann::json row = {{"name", r.name}};
    row["metrics"] = r.metrics ? to_json(*r.metrics) : nlohmann::json(nullptr);
    if (r.confusion) row["confusion"] = to_json(*r.confusion);
    if (!r.error.empty()) row["error"] = r.error;
    j.push_back(std::move(row));
  }
  return j;
}

}  // namespace warfgate
