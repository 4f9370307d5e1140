#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "warfgate/gate.hpp"

namespace warfgate {

// Everything a run depends on. Serialized as flat key=value text; the file written
// into the output directory reproduces the run when fed back with --config.
struct RunConfig {
  std::string input;
  std::string schema;  // empty: canonical column names
  std::string out_dir = "warfgate_out";
  std::string model;   // empty: <out_dir>/model.svm
  std::string coefficients;  // empty: published clinical coefficients
  bool allow_coefficient_override = false;

  std::uint64_t seed = 42;
  double train_fraction = 0.5;
  double threshold = 0.15;
  double min_minority_fraction = 0.10;

  std::string kernel = "poly:2:1";
  std::vector<double> c_grid = {0.1, 1.0, 10.0, 100.0};
  std::size_t cv_k = 10;
  bool stratified = true;
  bool balance_classes = true;
  double kkt_tolerance = 1e-3;
  int max_passes = 1000;

  std::string gate_mode = "trained";
  std::vector<std::string> compare_kernels = {"linear", "poly:2:1", "poly:3:1", "rbf:1", "sigmoid:0", "anova:1:2"};
  std::string sort_by = "none";

  std::size_t synth_n = 4237;

  std::string to_text() const;
  // Applies key=value lines on top of the current values. Unknown keys are usage errors.
  void apply_text(std::istream& in);
  void set(const std::string& key, const std::string& value);

  std::string model_path() const;
  TrainConfig train_config(double c) const;
  GateConfig gate_config() const;
};

RunConfig load_run_config(const std::string& path);

// Subcommands. Each writes its artifacts under config.out_dir and a short summary to `out`.
void cmd_ingest(const RunConfig& config, std::ostream& out);
void cmd_synth(const RunConfig& config, std::ostream& out);
void cmd_train(const RunConfig& config, std::ostream& out);
void cmd_evaluate(const RunConfig& config, bool compare, std::ostream& out);
void cmd_gate(const RunConfig& config, bool jsonl, std::ostream& out);
void cmd_dose(const RunConfig& config, const std::vector<std::string>& patient_args, std::ostream& out);
void cmd_report(const RunConfig& config, std::ostream& out);

// Result of the dose subcommand, exposed for testing.
struct DoseDecision {
  double sqrt_dose = 0.0;
  double dose_mg_week = 0.0;
  GateLabel label = GateLabel::SafeForModel;
  double decision_value = 0.0;
};

// Builds a patient from key=value arguments (or one delimited row in canonical column
// order) and applies the dose model and the gate. Missing keys are usage errors.
DoseDecision dose_decision(const SvmModel& model, const std::vector<std::string>& patient_args,
                           const IwpcCoefficients& coeffs = kIwpcClinical);
std::string format_dose_decision(const DoseDecision& d);

}  // namespace warfgate
