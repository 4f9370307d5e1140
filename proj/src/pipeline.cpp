#include "warfgate/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "text_util.hpp"

namespace warfgate {

namespace fs = std::filesystem;

namespace {

// Prefixes errors with the pipeline stage that raised them, keeping the exit code.
template <class F>
auto stage(const char* name, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const DegenerateGateError&) {
    throw;
  } catch (const Error& e) {
    throw Error(e.code(), std::string(name) + ": " + e.what());
  }
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SchemaError("cannot open '" + path.string() + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << content;
  if (!out) throw DataError("write failed for '" + path.string() + "'");
}

fs::path prepare_out_dir(const RunConfig& config) {
  const fs::path dir(config.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create output directory '" + dir.string() + "': " + ec.message());
  return dir;
}

bool parse_bool(const std::string& key, const std::string& v) {
  const auto l = text::lower(v);
  if (l == "1" || l == "true" || l == "yes" || l == "on") return true;
  if (l == "0" || l == "false" || l == "no" || l == "off") return false;
  throw UsageError("config key '" + key + "' expects a boolean, got '" + v + "'");
}

double parse_number(const std::string& key, const std::string& v) {
  auto d = text::parse_real(text::trim(v));
  if (!d) throw UsageError("config key '" + key + "' expects a number, got '" + v + "'");
  return *d;
}

std::uint64_t parse_count(const std::string& key, const std::string& v) {
  const double d = parse_number(key, v);
  if (d < 0 || d != static_cast<double>(static_cast<std::uint64_t>(d))) {
    throw UsageError("config key '" + key + "' expects a non-negative integer, got '" + v + "'");
  }
  return static_cast<std::uint64_t>(d);
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  for (auto part : text::split_any(v, ",")) {
    auto t = text::trim(part);
    if (!t.empty()) out.emplace_back(t);
  }
  return out;
}

template <class T, class F>
std::string join(const std::vector<T>& items, F&& fmt) {
  std::string s;
  for (std::size_t i = 0; i < items.size(); ++i) s += (i ? "," : "") + fmt(items[i]);
  return s;
}

// ANOVA specs may omit the dimension count ("anova:S:D"); it is filled from the feature count.
KernelSpec resolve_kernel(const std::string& textual, std::size_t n_features) {
  if (textual.rfind("anova:", 0) == 0 && std::count(textual.begin(), textual.end(), ':') == 2) {
    return parse_kernel(textual + ":" + std::to_string(n_features));
  }
  return parse_kernel(textual);
}

IwpcCoefficients load_coeffs(const RunConfig& config) {
  if (config.coefficients.empty()) return kIwpcClinical;
  std::ifstream in(config.coefficients);
  if (!in) throw SchemaError("cannot open coefficient file '" + config.coefficients + "'");
  return load_coefficients(in, config.allow_coefficient_override);
}

ParsedCohort read_cohort(const std::string& path, const std::string& schema_path) {
  if (path.empty()) throw UsageError("no input cohort given (--input)");
  const CohortSchema schema = schema_path.empty() ? CohortSchema::canonical() : CohortSchema::load(schema_path);
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open input '" + path + "'");
  return parse_cohort(in, schema);
}

std::vector<RawPatientRecord> read_canonical(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open '" + path.string() + "'");
  return parse_cohort(in, CohortSchema::canonical()).records;
}

ImputationPlan read_plan(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open imputation plan '" + path.string() + "'");
  return ImputationPlan::from_text(in);
}

std::string cohort_text(const std::vector<RawPatientRecord>& records) {
  std::ostringstream os;
  write_cohort(os, records);
  return os.str();
}

std::string exclusion_summary(const ParsedCohort& parsed) {
  std::ostringstream os;
  os << "data_rows\t" << parsed.data_rows << '\n';
  os << "retained\t" << parsed.records.size() << '\n';
  for (auto r : {ExclusionReason::missing_dose, ExclusionReason::nonpositive_dose, ExclusionReason::missing_inr,
                 ExclusionReason::inr_out_of_range}) {
    os << "excluded_" << to_string(r) << '\t' << parsed.count(r) << '\n';
  }
  return os.str();
}

std::string exclusion_rows(const ParsedCohort& parsed) {
  std::ostringstream os;
  os << "line\tid\treason\n";
  for (const auto& e : parsed.excluded) os << e.line << '\t' << e.id << '\t' << to_string(e.reason) << '\n';
  return os.str();
}

std::string lines(const std::vector<std::string>& items) {
  std::string s;
  for (const auto& i : items) s += i + '\n';
  return s;
}

}  // namespace

// ---------------------------------------------------------------------------
// RunConfig

std::string RunConfig::to_text() const {
  std::ostringstream os;
  auto b = [](bool v) { return v ? "true" : "false"; };
  os << "input=" << input << '\n'
     << "schema=" << schema << '\n'
     << "out_dir=" << out_dir << '\n'
     << "model=" << model << '\n'
     << "coefficients=" << coefficients << '\n'
     << "allow_coefficient_override=" << b(allow_coefficient_override) << '\n'
     << "seed=" << seed << '\n'
     << "train_fraction=" << text::format_real(train_fraction) << '\n'
     << "threshold=" << text::format_real(threshold) << '\n'
     << "min_minority_fraction=" << text::format_real(min_minority_fraction) << '\n'
     << "kernel=" << kernel << '\n'
     << "c_grid=" << join(c_grid, [](double c) { return text::format_real(c); }) << '\n'
     << "cv_k=" << cv_k << '\n'
     << "stratified=" << b(stratified) << '\n'
     << "balance_classes=" << b(balance_classes) << '\n'
     << "kkt_tolerance=" << text::format_real(kkt_tolerance) << '\n'
     << "max_passes=" << max_passes << '\n'
     << "gate_mode=" << gate_mode << '\n'
     << "compare_kernels=" << join(compare_kernels, [](const std::string& k) { return k; }) << '\n'
     << "sort_by=" << sort_by << '\n'
     << "synth_n=" << synth_n << '\n';
  return os.str();
}

void RunConfig::set(const std::string& key, const std::string& value) {
  const std::string v(text::trim(value));
  if (key == "input") input = v;
  else if (key == "schema") schema = v;
  else if (key == "out_dir") out_dir = v;
  else if (key == "model") model = v;
  else if (key == "coefficients") coefficients = v;
  else if (key == "allow_coefficient_override") allow_coefficient_override = parse_bool(key, v);
  else if (key == "seed") seed = parse_count(key, v);
  else if (key == "train_fraction") train_fraction = parse_number(key, v);
  else if (key == "threshold") threshold = parse_number(key, v);
  else if (key == "min_minority_fraction") min_minority_fraction = parse_number(key, v);
  else if (key == "kernel") kernel = v;
  else if (key == "c_grid") {
    c_grid.clear();
    for (const auto& c : split_list(v)) c_grid.push_back(parse_number(key, c));
  } else if (key == "cv_k") cv_k = parse_count(key, v);
  else if (key == "stratified") stratified = parse_bool(key, v);
  else if (key == "balance_classes") balance_classes = parse_bool(key, v);
  else if (key == "kkt_tolerance") kkt_tolerance = parse_number(key, v);
  else if (key == "max_passes") max_passes = static_cast<int>(parse_count(key, v));
  else if (key == "gate_mode") gate_mode = v;
  else if (key == "compare_kernels") compare_kernels = split_list(v);
  else if (key == "sort_by") sort_by = v;
  else if (key == "synth_n") synth_n = parse_count(key, v);
  else throw UsageError("unknown config key '" + key + "'");
}

void RunConfig::apply_text(std::istream& in) {
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    text::strip_cr(line);
    const auto t = text::trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string_view::npos) {
      throw UsageError("config line " + std::to_string(lineno) + ": expected key=value");
    }
    set(std::string(text::trim(t.substr(0, eq))), std::string(t.substr(eq + 1)));
  }
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file '" + path + "'");
  RunConfig c;
  c.apply_text(in);
  return c;
}

std::string RunConfig::model_path() const { return model.empty() ? (fs::path(out_dir) / "model.svm").string() : model; }

TrainConfig RunConfig::train_config(double c) const {
  TrainConfig t;
  t.c_regularization = c;
  t.kkt_tolerance = kkt_tolerance;
  t.max_passes = max_passes;
  t.balance_classes = balance_classes;
  t.seed = seed;
  return t;
}

GateConfig RunConfig::gate_config() const {
  GateConfig g{threshold};
  g.validate();
  return g;
}

// ---------------------------------------------------------------------------
// ingest / synth

void cmd_ingest(const RunConfig& config, std::ostream& out) {
  const ParsedCohort parsed = stage("ingest", [&] { return read_cohort(config.input, config.schema); });
  const auto removed = stage("filter", [&] { return filter_unbalanced(parsed.records, config.min_minority_fraction); });
  const fs::path dir = prepare_out_dir(config);
  write_file(dir / "cohort.tsv", cohort_text(parsed.records));
  write_file(dir / "exclusions.tsv", exclusion_rows(parsed));
  write_file(dir / "ingest_summary.txt", exclusion_summary(parsed));
  write_file(dir / "removed_variables.txt", lines(removed));
  out << exclusion_summary(parsed);
  out << "removed_variables\t" << join(removed, [](const std::string& s) { return s; }) << '\n';
}

void cmd_synth(const RunConfig& config, std::ostream& out) {
  const auto records = stage("synth", [&] { return generate_synthetic_cohort(config.synth_n, config.seed); });
  const fs::path dir = prepare_out_dir(config);
  write_file(dir / "synthetic_cohort.tsv", cohort_text(records));
  out << "wrote " << records.size() << " synthetic records to " << (dir / "synthetic_cohort.tsv").string() << '\n';
}

// ---------------------------------------------------------------------------
// train

void cmd_train(const RunConfig& config, std::ostream& out) {
  const IwpcCoefficients coeffs = stage("config", [&] { return load_coeffs(config); });
  const GateConfig gate = stage("config", [&] { return config.gate_config(); });
  if (config.c_grid.empty()) throw UsageError("config: c_grid is empty");
  // Kernel text is checked before any I/O; the feature count here is a placeholder.
  stage("config", [&] { return resolve_kernel(config.kernel, 1); });

  const ParsedCohort parsed = stage("ingest", [&] { return read_cohort(config.input, config.schema); });
  const auto [train_raw, test_raw] =
      stage("split", [&] { return split_cohort(parsed.records, config.train_fraction, config.seed); });
  const auto removed = stage("filter", [&] { return filter_unbalanced(train_raw, config.min_minority_fraction); });
  const ImputationPlan plan = stage("impute", [&] { return fit_imputation(train_raw, "train"); });
  const auto train_rows = stage("impute", [&] { return apply_imputation(plan, train_raw); });
  const CohortLabels labels = stage("label", [&] { return label_cohort(train_rows, coeffs, gate); });
  if (labels.high_risk == 0 || labels.safe == 0) {
    throw Error(ExitCode::numerical, "label: degenerate labels, training split has " +
                                         std::to_string(labels.high_risk) + " HighRisk and " +
                                         std::to_string(labels.safe) + " SafeForModel patients");
  }
  const auto features = classifier_features(removed);
  const FeatureMatrix x =
      stage("encode", [&] { return encode_features(train_rows, features).with_labels(labels.as_ints()); });
  const KernelSpec kernel = stage("config", [&] {
    auto k = resolve_kernel(config.kernel, features.size());
    validate(k);
    return k;
  });

  // Model selection: mean balanced accuracy over folds; ties keep the smaller C.
  std::vector<double> grid = config.c_grid;
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  std::vector<CvReport> reports;
  std::size_t best = 0;
  std::optional<double> best_score;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    reports.push_back(stage("cv", [&] {
      return kfold_cv(x, config.cv_k, svm_trainer(kernel, config.train_config(grid[g])), config.seed,
                      config.stratified);
    }));
    const auto score = reports.back().balanced_accuracy.mean;
    if (score && (!best_score || *score > *best_score)) {
      best_score = score;
      best = g;
    }
  }
  const double chosen_c = grid[best];
  const SvmModel model = stage("fit", [&] { return train(x, kernel, config.train_config(chosen_c)); });

  const double majority = static_cast<double>(std::max(labels.high_risk, labels.safe)) /
                          static_cast<double>(labels.labels.size());

  const fs::path dir = prepare_out_dir(config);
  write_file(config.model_path(), model_to_text(model));
  write_file(dir / "imputation.plan", plan.to_text());
  write_file(dir / "train_cohort.tsv", cohort_text(train_raw));
  write_file(dir / "test_cohort.tsv", cohort_text(test_raw));
  write_file(dir / "features.txt", lines(features));
  write_file(dir / "removed_variables.txt", lines(removed));
  write_file(dir / "effective_config.txt", config.to_text());

  std::ostringstream cv;
  nlohmann::json cv_json = nlohmann::json::array();
  for (std::size_t g = 0; g < grid.size(); ++g) {
    cv << "C = " << text::format_real(grid[g]) << (g == best ? "  (selected)" : "") << '\n';
    cv << format_cv_table(reports[g]) << '\n';
    nlohmann::json j = to_json(reports[g]);
    j["c"] = grid[g];
    j["selected"] = g == best;
    cv_json.push_back(std::move(j));
  }
  write_file(dir / "cv_report.txt", cv.str());
  write_file(dir / "cv_report.json", cv_json.dump(2) + "\n");

  const auto& sel = reports[best];
  std::ostringstream summary;
  summary << "kernel\t" << to_string(kernel) << '\n'
          << "selected_c\t" << text::format_real(chosen_c) << '\n'
          << "cv_folds\t" << config.cv_k << '\n'
          << "cv_accuracy\t" << format_percent(sel.accuracy.mean) << '\n'
          << "cv_sensitivity\t" << format_percent(sel.sensitivity.mean) << '\n'
          << "cv_specificity\t" << format_percent(sel.specificity.mean) << '\n'
          << "cv_balanced_accuracy\t" << format_percent(sel.balanced_accuracy.mean) << '\n'
          << "majority_class_rate\t" << format_percent(majority) << '\n'
          << "train_rows\t" << train_rows.size() << '\n'
          << "test_rows\t" << test_raw.size() << '\n'
          << "train_high_risk\t" << labels.high_risk << '\n'
          << "train_safe\t" << labels.safe << '\n'
          << "features\t" << features.size() << '\n'
          << "support_vectors\t" << model.n_support() << '\n'
          << "converged\t" << (model.converged ? "yes" : "no") << '\n'
          << "max_kkt_violation\t" << text::format_real(model.max_kkt_violation) << '\n'
          << "model_version\t" << model_version(model) << '\n';
  write_file(dir / "train_report.txt", summary.str());
  out << summary.str();
  if (!model.converged) out << "warning: solver hit the iteration cap before meeting the KKT tolerance\n";
}

// ---------------------------------------------------------------------------
// evaluate

void cmd_evaluate(const RunConfig& config, bool compare, std::ostream& out) {
  const IwpcCoefficients coeffs = stage("config", [&] { return load_coeffs(config); });
  const GateConfig gate = stage("config", [&] { return config.gate_config(); });
  const GateMode mode = stage("config", [&] { return parse_gate_mode(config.gate_mode); });
  const fs::path dir(config.out_dir);

  const SvmModel model = stage("load", [&] { return load_model_file(config.model_path()); });
  const ImputationPlan plan = stage("load", [&] { return read_plan(dir / "imputation.plan"); });
  const fs::path test_path = config.input.empty() ? dir / "test_cohort.tsv" : fs::path(config.input);
  const auto test_rows = stage("impute", [&] {
    const auto raw = config.input.empty() ? read_canonical(test_path) : read_cohort(config.input, config.schema).records;
    return apply_imputation(plan, raw);
  });
  const CohortLabels truth = stage("label", [&] { return label_cohort(test_rows, coeffs, gate); });

  std::vector<GateLabel> decisions;
  switch (mode) {
    case GateMode::identity: decisions.assign(test_rows.size(), GateLabel::SafeForModel); break;
    case GateMode::oracle: decisions = truth.labels; break;
    case GateMode::trained: {
      const FeatureMatrix tx =
          stage("encode", [&] { return encode_features(test_rows, model.feature_names, model.scaler); });
      decisions.assign(test_rows.size(), GateLabel::HighRisk);
      for (auto i : stage("gate", [&] { return shrink_test_set(tx, model); })) decisions[i] = GateLabel::SafeForModel;
      break;
    }
  }

  prepare_out_dir(config);
  auto emit = [&](const EvalReport& report) {
    nlohmann::json j = to_json(report);
    j["gate_mode"] = std::string(to_string(mode));
    j["threshold"] = gate.threshold;
    j["model_version"] = model_version(model);
    write_file(dir / "eval_report.txt", "gate mode: " + std::string(to_string(mode)) + "\n\n" + format_report(report));
    write_file(dir / "eval_report.json", j.dump(2) + "\n");
    out << "gate mode: " << to_string(mode) << "\n\n" << format_report(report);
  };
  try {
    emit(evaluate_gate(test_rows, truth, decisions));
  } catch (const DegenerateGateError& e) {
    emit(e.report());
    throw Error(e.code(), std::string("gate: ") + e.what());
  }

  if (!compare) return;
  const auto train_rows = stage("impute", [&] { return apply_imputation(plan, read_canonical(dir / "train_cohort.tsv")); });
  const CohortLabels train_labels = stage("label", [&] { return label_cohort(train_rows, coeffs, gate); });
  const FeatureMatrix x = stage("encode", [&] {
    return encode_features(train_rows, model.feature_names).with_labels(train_labels.as_ints());
  });
  const FeatureMatrix tx = stage("encode", [&] {
    return encode_features(test_rows, model.feature_names, x.scaler()).with_labels(truth.as_ints());
  });
  std::vector<Candidate> candidates;
  for (const auto& k : config.compare_kernels) {
    candidates.push_back({"SVM(" + k + ")", stage("config", [&] { return resolve_kernel(k, x.cols()); }),
                          config.train_config(model.c_regularization)});
  }
  const ComparisonTable table = stage("compare", [&] {
    return compare_models(candidates, x, tx, config.seed, parse_sort_metric(config.sort_by));
  });
  write_file(dir / "comparison.txt", format_table(table));
  write_file(dir / "comparison.tsv", format_delimited(table));
  write_file(dir / "comparison.json", to_json(table).dump(2) + "\n");
  out << '\n' << "C = " << text::format_real(model.c_regularization) << '\n' << format_table(table);
}

// ---------------------------------------------------------------------------
// gate

void cmd_gate(const RunConfig& config, bool jsonl, std::ostream& out) {
  const IwpcCoefficients coeffs = stage("config", [&] { return load_coeffs(config); });
  const fs::path dir(config.out_dir);
  const SvmModel model = stage("load", [&] { return load_model_file(config.model_path()); });
  const ImputationPlan plan = stage("load", [&] { return read_plan(dir / "imputation.plan"); });
  const auto rows = stage("impute", [&] {
    const auto raw = config.input.empty() ? read_canonical(dir / "test_cohort.tsv")
                                          : read_cohort(config.input, config.schema).records;
    return apply_imputation(plan, raw);
  });
  const FeatureMatrix x =
      stage("encode", [&] { return encode_features(rows, model.feature_names, model.scaler); });
  const std::string version = model_version(model);

  std::size_t high = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double dose = stage("dose", [&] {
      try {
        return predict_weekly_dose(rows[i], coeffs);
      } catch (const DomainError& e) {
        throw DomainError("record " + std::to_string(i) + " (" + rows[i].id + "): " + e.what());
      }
    });
    const double dv = decision_value_standardized(model, x.row(i));
    const GateLabel label = label_from_sign(sign_label(dv));
    high += label == GateLabel::HighRisk;
    if (jsonl) {
      nlohmann::json j = {{"id", rows[i].id},
                          {"predicted_dose_mg_week", dose},
                          {"decision_value", dv},
                          {"label", std::string(to_string(label))},
                          {"model_version", version}};
      out << j.dump() << '\n';
    } else {
      out << rows[i].id << '\t' << text::format_fixed(dose, 3) << '\t' << to_string(label) << '\t'
          << text::format_fixed(dv, 6) << '\n';
    }
  }
  if (!jsonl) {
    out << "\npatients\t" << rows.size() << "\nSafeForModel\t" << rows.size() - high << "\nHighRisk\t" << high
        << "\nmodel_version\t" << version << '\n';
  }
}

// ---------------------------------------------------------------------------
// dose

namespace {

std::map<std::string, std::string> patient_fields(const std::vector<std::string>& args) {
  std::map<std::string, std::string> kv;
  const auto& cols = canonical_columns();
  if (args.size() == 1 && args[0].find('=') == std::string::npos) {
    const char delim = args[0].find('\t') != std::string::npos ? '\t' : ',';
    const auto cells = text::split_delimited(args[0], delim);
    if (cells.size() != cols.size()) {
      throw UsageError("delimited patient row has " + std::to_string(cells.size()) + " cells, expected " +
                       std::to_string(cols.size()) + " in canonical column order");
    }
    for (std::size_t i = 0; i < cols.size(); ++i) {
      if (!text::is_missing(text::trim(cells[i]))) kv[cols[i]] = std::string(text::trim(cells[i]));
    }
    return kv;
  }
  const std::set<std::string> known(cols.begin(), cols.end());
  for (const auto& a : args) {
    const auto eq = a.find('=');
    if (eq == std::string::npos) throw UsageError("patient argument '" + a + "' is not key=value");
    const std::string key(text::trim(std::string_view(a).substr(0, eq)));
    if (!known.count(key)) throw UsageError("unknown patient field '" + key + "'");
    kv[key] = std::string(text::trim(std::string_view(a).substr(eq + 1)));
  }
  return kv;
}

std::string source_field(const std::string& feature) {
  if (feature == kRaceAfricanAmerican || feature == kRaceAsian) return "race";
  return feature;
}

}  // namespace

DoseDecision dose_decision(const SvmModel& model, const std::vector<std::string>& patient_args,
                           const IwpcCoefficients& coeffs) {
  auto kv = patient_fields(patient_args);

  std::vector<std::string> required = {"age_decade", "height_cm", "weight_kg", "race", "amiodarone", "enzyme"};
  for (const auto& f : model.feature_names) {
    const auto s = source_field(f);
    if (std::find(required.begin(), required.end(), s) == required.end()) required.push_back(s);
  }
  std::vector<std::string> missing;
  for (const auto& k : required) {
    if (!kv.count(k) || kv[k].empty()) missing.push_back(k);
  }
  if (!missing.empty()) {
    throw UsageError("missing patient field(s): " + join(missing, [](const std::string& s) { return s; }));
  }

  // Reuse the cohort parser for value decoding; outcome columns get placeholders.
  kv.try_emplace("inr", "2.5");
  kv.try_emplace("therapeutic_dose_mg_week", "1");
  kv.try_emplace("id", "patient");
  std::string header, row;
  for (const auto& [k, v] : kv) {
    header += (header.empty() ? "" : "\t") + k;
    row += (row.empty() ? "" : "\t") + v;
  }
  std::istringstream in(header + "\n" + row + "\n");
  CohortSchema schema;
  for (const auto& [k, v] : kv) schema.columns[k] = k;
  ParsedCohort parsed;
  try {
    parsed = parse_cohort(in, schema);
  } catch (const Error& e) {
    throw UsageError(std::string("patient fields: ") + e.what());
  }
  const RawPatientRecord& raw = parsed.records.front();

  ImputedPatientRecord p;
  p.id = raw.id;
  auto need = [&](const auto& opt, const char* key) {
    if (!opt) throw UsageError(std::string("invalid value for patient field '") + key + "': '" + kv[key] + "'");
    return *opt;
  };
  p.age_decade = need(raw.age_decade, "age_decade");
  p.height_cm = need(raw.height_cm, "height_cm");
  p.weight_kg = need(raw.weight_kg, "weight_kg");
  p.race = need(raw.race, "race");
  p.gender = raw.gender.value_or(0);
  if (kv.count("gender")) p.gender = need(raw.gender, "gender");
  p.target_inr = raw.target_inr.value_or(2.5);
  if (kv.count("target_inr")) p.target_inr = need(raw.target_inr, "target_inr");
  for (std::size_t b = 0; b < kBinaryCount; ++b) {
    const std::string key(binary_name(static_cast<Binary>(b)));
    p.binaries[b] = raw.binaries[b].value_or(0);
    if (kv.count(key)) p.binaries[b] = need(raw.binaries[b], key.c_str());
  }

  DoseDecision d;
  d.sqrt_dose = predict_sqrt_weekly_dose(p, coeffs);
  d.dose_mg_week = d.sqrt_dose * d.sqrt_dose;
  const FeatureMatrix x = encode_features({p}, model.feature_names, model.scaler);
  d.decision_value = decision_value_standardized(model, x.row(0));
  d.label = label_from_sign(sign_label(d.decision_value));
  return d;
}

std::string format_dose_decision(const DoseDecision& d) {
  std::ostringstream os;
  os << "sqrt_dose\t" << text::format_fixed(d.sqrt_dose, 4) << '\n'
     << "dose_mg_week\t" << text::format_fixed(d.dose_mg_week, 3) << '\n'
     << "gate\t" << to_string(d.label);
  if (d.label == GateLabel::HighRisk) os << "\tMODEL NOT RECOMMENDED";
  os << '\n' << "decision_value\t" << text::format_fixed(d.decision_value, 6) << '\n';
  return os.str();
}

void cmd_dose(const RunConfig& config, const std::vector<std::string>& patient_args, std::ostream& out) {
  const IwpcCoefficients coeffs = stage("config", [&] { return load_coeffs(config); });
  const SvmModel model = stage("load", [&] { return load_model_file(config.model_path()); });
  out << format_dose_decision(stage("dose", [&] { return dose_decision(model, patient_args, coeffs); }));
}

// ---------------------------------------------------------------------------
// report

void cmd_report(const RunConfig& config, std::ostream& out) {
  const fs::path dir(config.out_dir);
  const std::vector<std::pair<const char*, const char*>> parts = {{"Training and model selection", "train_report.txt"},
                                                                   {"Cross-validation", "cv_report.txt"},
                                                                   {"Classifier comparison", "comparison.txt"},
                                                                   {"Gated evaluation", "eval_report.txt"}};
  bool any = false;
  for (const auto& [title, file] : parts) {
    if (!fs::exists(dir / file)) continue;
    out << "== " << title << " ==\n" << read_file(dir / file) << '\n';
    any = true;
  }
  if (!any) throw SchemaError("report: no reports found in '" + dir.string() + "'; run train and evaluate first");
}

}  // namespace warfgate
