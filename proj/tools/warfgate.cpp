// warfgate: gated warfarin dosing from the command line.
//
//   warfgate synth   --out-dir run --synth-n 4237 --seed 7
//   warfgate train   --input run/synthetic_cohort.tsv --out-dir run
//   warfgate evaluate --out-dir run --gate trained --compare
//   warfgate dose    --out-dir run age_decade=5 height_cm=170 weight_kg=80 race=1 amiodarone=0 enzyme=0 ...
#include <CLI11.hpp>
#include <iostream>

#include "warfgate/pipeline.hpp"

namespace {

struct Overrides {
  std::string config_file;
  std::vector<std::pair<std::string, std::string>> values;
};

// Each flag maps onto a RunConfig key; flags given on the command line override the config file.
void add_config_flags(CLI::App* cmd, Overrides& ov, const std::vector<std::string>& keys) {
  cmd->add_option("--config", ov.config_file, "key=value run configuration file");
  for (const auto& key : keys) {
    std::string flag = "--" + key;
    for (auto& ch : flag) {
      if (ch == '_') ch = '-';
    }
    cmd->add_option_function<std::string>(
        flag, [&ov, key](const std::string& v) { ov.values.emplace_back(key, v); }, "config key " + key);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gated warfarin dosing: IWPC clinical model plus a kernel SVM safety gate"};
  app.require_subcommand(1);
  Overrides ov;
  app.add_option("--config", ov.config_file, "key=value run configuration file");

  const std::vector<std::string> common = {"out_dir", "seed", "coefficients", "allow_coefficient_override", "threshold"};
  auto with = [&](std::vector<std::string> extra) {
    extra.insert(extra.end(), common.begin(), common.end());
    return extra;
  };

  auto* ingest = app.add_subcommand("ingest", "normalize a cohort file and report exclusions");
  add_config_flags(ingest, ov, with({"input", "schema", "min_minority_fraction"}));

  auto* synth = app.add_subcommand("synth", "write a synthetic cohort");
  add_config_flags(synth, ov, with({"synth_n"}));

  auto* trn = app.add_subcommand("train", "split, impute, label, select C by cross-validation and fit the gate");
  add_config_flags(trn, ov,
                   with({"input", "schema", "train_fraction", "min_minority_fraction", "kernel", "c_grid", "cv_k",
                         "stratified", "balance_classes", "kkt_tolerance", "max_passes", "model"}));

  bool compare = false;
  auto* eval = app.add_subcommand("evaluate", "gated evaluation of the test split");
  add_config_flags(eval, ov, with({"input", "schema", "model", "compare_kernels", "sort_by", "kkt_tolerance",
                                   "max_passes", "balance_classes"}));
  eval->add_option_function<std::string>(
      "--gate", [&](const std::string& v) { ov.values.emplace_back("gate_mode", v); },
      "trained (default), identity or oracle");
  eval->add_flag("--compare", compare, "also train and compare the kernel candidates");

  bool jsonl = false;
  auto* gate = app.add_subcommand("gate", "per-patient gate decisions");
  add_config_flags(gate, ov, with({"input", "schema", "model"}));
  gate->add_flag("--jsonl", jsonl, "one JSON object per patient");

  std::vector<std::string> patient;
  auto* dose = app.add_subcommand("dose", "dose and gate decision for one patient");
  add_config_flags(dose, ov, with({"model"}));
  dose->add_option("patient", patient, "key=value fields, or one delimited row in canonical column order")
      ->required();

  auto* report = app.add_subcommand("report", "print the stored reports");
  add_config_flags(report, ov, {"out_dir"});

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  const std::string name = app.get_subcommands().front()->get_name();
  try {
    warfgate::RunConfig config = ov.config_file.empty() ? warfgate::RunConfig{} : warfgate::load_run_config(ov.config_file);
    for (const auto& [k, v] : ov.values) config.set(k, v);

    if (name == "ingest") warfgate::cmd_ingest(config, std::cout);
    else if (name == "synth") warfgate::cmd_synth(config, std::cout);
    else if (name == "train") warfgate::cmd_train(config, std::cout);
    else if (name == "evaluate") warfgate::cmd_evaluate(config, compare, std::cout);
    else if (name == "gate") warfgate::cmd_gate(config, jsonl, std::cout);
    else if (name == "dose") warfgate::cmd_dose(config, patient, std::cout);
    else if (name == "report") warfgate::cmd_report(config, std::cout);
  } catch (const warfgate::Error& e) {
    std::cerr << "warfgate " << name << ": " << e.what() << '\n';
    return static_cast<int>(e.code());
  } catch (const std::exception& e) {
    std::cerr << "warfgate " << name << ": " << e.what() << '\n';
    return static_cast<int>(warfgate::ExitCode::data);
  }
  return 0;
}
