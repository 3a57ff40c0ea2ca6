// Command-line front end; talks to the library only through the C API.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dreval/dreval.h"

namespace {

struct CliError {
  int code;
  std::string message;
};

void check(dre_status s) {
  if (s != DRE_OK) throw CliError{static_cast<int>(s), dre_last_error()};
}

std::string stem_of(const std::string& path) { return std::filesystem::path(path).stem().string(); }

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw CliError{DRE_IO_ERROR, "cannot write " + path};
  f << text;
  if (!f) throw CliError{DRE_IO_ERROR, "error writing " + path};
}

void emit(const std::string& csv, const std::string& manifest, const std::string& out) {
  if (out.empty()) {
    std::fwrite(csv.data(), 1, csv.size(), stdout);
    std::fflush(stdout);
    return;
  }
  write_text(out, csv);
  write_text(out + ".manifest.txt", manifest);
}

struct ReportHandle {
  dre_report* p = nullptr;
  ~ReportHandle() { dre_report_free(p); }
};

struct DatasetHandle {
  dre_dataset* p = nullptr;
  ~DatasetHandle() { dre_dataset_free(p); }
};

struct DataOptions {
  bool standardize = false;
  bool no_bias = false;
};

void add_data_options(CLI::App* cmd, DataOptions& o) {
  cmd->add_flag("--standardize", o.standardize, "z-score every feature column");
  cmd->add_flag("--no-bias", o.no_bias, "do not append a constant feature");
}

void load_dataset(const std::string& path, const DataOptions& o, DatasetHandle& h) {
  dre_load_options opts;
  dre_load_options_default(&opts);
  opts.standardize = o.standardize;
  opts.append_bias = !o.no_bias;
  check(dre_dataset_load_csv(path.c_str(), &opts, &h.p));
}

void add_dlm_options(CLI::App* cmd, dre_dlm_config& dlm) {
  cmd->add_option("--restarts", dlm.restarts, "DLM random restarts")->check(CLI::PositiveNumber);
  cmd->add_option("--max-iterations", dlm.max_iterations, "DLM iteration cap")->check(CLI::PositiveNumber);
  cmd->add_option("--epsilon", dlm.epsilon, "DLM loss scale in the towards-better step")->check(CLI::PositiveNumber);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Doubly robust off-policy evaluation and learning experiments"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(dre_version()));
  std::string out;

  // eval
  dre_eval_config eval_cfg;
  dre_eval_config_default(&eval_cfg);
  std::string eval_path;
  DataOptions eval_data;
  bool eval_rows = false;
  auto* eval = app.add_subcommand("eval", "Bias and rmse of DM, IPS and DR on a classification dataset");
  eval->add_option("dataset", eval_path, "CSV file: numeric features, 1-based label last")->required();
  eval->add_option("--replicates", eval_cfg.replicates, "number of reveal replicates")->check(CLI::PositiveNumber);
  eval->add_option("--lambda", eval_cfg.ridge_lambda, "ridge penalty of the loss model")->check(CLI::PositiveNumber);
  eval->add_option("--seed", eval_cfg.seed, "master seed");
  eval->add_option("--train-fraction", eval_cfg.train_fraction, "share of rows used for training")
      ->check(CLI::Range(0.0, 1.0));
  eval->add_flag("--partial-model", eval_cfg.partial_label_model, "fit the loss model on revealed losses only");
  eval->add_flag("--replicate-rows", eval_rows, "include every replicate's estimate");
  eval->add_option("--threads", eval_cfg.threads, "worker threads (0 = all cores)");
  eval->add_option("--out", out, "write CSV here (and a manifest next to it) instead of stdout");
  add_data_options(eval, eval_data);
  add_dlm_options(eval, eval_cfg.dlm);

  // learn
  dre_opt_config opt_cfg;
  dre_opt_config_default(&opt_cfg);
  std::string learn_path;
  DataOptions learn_data;
  std::vector<std::string> learners{"dlm", "ft"};
  std::vector<std::string> imputes{"ips", "dr"};
  bool full_feedback = false;
  auto* learn = app.add_subcommand("learn", "Test error of policies learned from IPS- or DR-imputed losses");
  learn->add_option("dataset", learn_path, "CSV file: numeric features, 1-based label last")->required();
  learn->add_option("--runs", opt_cfg.runs, "number of random splits")->check(CLI::PositiveNumber);
  learn->add_option("--learner", learners, "dlm and/or ft")->check(CLI::IsMember({"dlm", "ft"}))->delimiter(',');
  learn->add_option("--impute", imputes, "ips and/or dr")->check(CLI::IsMember({"ips", "dr"}))->delimiter(',');
  learn->add_option("--lambda", opt_cfg.ridge_lambda, "ridge penalty of the loss model")->check(CLI::PositiveNumber);
  learn->add_option("--seed", opt_cfg.seed, "master seed");
  learn->add_option("--train-fraction", opt_cfg.train_fraction, "share of rows used for training")
      ->check(CLI::Range(0.0, 1.0));
  learn->add_flag("--full-feedback", full_feedback, "reveal every training loss");
  learn->add_option("--max-depth", opt_cfg.tree_max_depth, "filter-tree node classifier depth")
      ->check(CLI::PositiveNumber);
  learn->add_option("--min-leaf", opt_cfg.tree_min_samples_leaf, "minimum examples per tree leaf")
      ->check(CLI::PositiveNumber);
  learn->add_option("--threads", opt_cfg.threads, "worker threads (0 = all cores)");
  learn->add_option("--out", out, "write CSV here (and a manifest next to it) instead of stdout");
  add_data_options(learn, learn_data);
  add_dlm_options(learn, opt_cfg.dlm);

  // shift
  dre_shift_config shift_cfg;
  dre_shift_config_default(&shift_cfg);
  std::string population, export_path, law = "density";
  std::vector<double> fractions;
  auto* shift = app.add_subcommand("shift", "IPS vs DR mean estimation under feature-dependent sampling");
  shift->add_option("--population", population, "population CSV to load instead of generating one");
  shift->add_option("--export", export_path, "write the population used to this CSV");
  shift->add_option("--fractions", fractions, "subsample fractions")->delimiter(',')->check(CLI::Range(0.0, 1.0));
  shift->add_option("--replicates", shift_cfg.replicates, "replicates per fraction")->check(CLI::PositiveNumber);
  shift->add_option("--population-size", shift_cfg.population_size, "units in a generated population")
      ->check(CLI::PositiveNumber);
  shift->add_option("--dimension", shift_cfg.feature_dimension, "features in a generated population")
      ->check(CLI::PositiveNumber);
  shift->add_option("--sparsity", shift_cfg.sparsity, "scale of feature activation rates")
      ->check(CLI::NonNegativeNumber);
  shift->add_option("--law", law, "sampling law: density or cdf")->check(CLI::IsMember({"density", "cdf"}));
  shift->add_option("--lambda", shift_cfg.ridge_lambda, "ridge penalty")->check(CLI::PositiveNumber);
  shift->add_option("--seed", shift_cfg.seed, "master seed");
  shift->add_option("--threads", shift_cfg.threads, "worker threads (0 = all cores)");
  shift->add_option("--out", out, "write CSV here (and a manifest next to it) instead of stdout");

  // oracle-check
  std::vector<std::string> instances;
  double tolerance = 1e-10;
  auto* oracle = app.add_subcommand("oracle-check", "Exact bias/variance checks on finite instance files");
  oracle->add_option("instances", instances, "instance files")->required()->check(CLI::ExistingFile);
  oracle->add_option("--tolerance", tolerance, "allowed absolute error")->check(CLI::NonNegativeNumber);
  oracle->add_option("--out", out, "write CSV here (and a manifest next to it) instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::fprintf(stderr, "dreval: error: %s\n", e.what());
    return 64;
  }

  try {
    ReportHandle report;
    if (*eval) {
      DatasetHandle data;
      load_dataset(eval_path, eval_data, data);
      eval_cfg.include_replicates = eval_rows;
      check(dre_run_eval(data.p, stem_of(eval_path).c_str(), &eval_cfg, &report.p));
      emit(dre_report_csv(report.p), dre_report_manifest(report.p), out);
    } else if (*learn) {
      DatasetHandle data;
      load_dataset(learn_path, learn_data, data);
      opt_cfg.learner_mask = 0;
      for (const auto& l : learners) opt_cfg.learner_mask |= l == "dlm" ? DRE_LEARNER_DLM : DRE_LEARNER_FILTER_TREE;
      opt_cfg.impute_mask = 0;
      for (const auto& m : imputes) opt_cfg.impute_mask |= m == "ips" ? DRE_IMPUTE_IPS : DRE_IMPUTE_DR;
      opt_cfg.full_feedback = full_feedback;
      check(dre_run_opt(data.p, stem_of(learn_path).c_str(), &opt_cfg, &report.p));
      emit(dre_report_csv(report.p), dre_report_manifest(report.p), out);
    } else if (*shift) {
      if (!fractions.empty()) {
        shift_cfg.fractions = fractions.data();
        shift_cfg.fraction_count = fractions.size();
      }
      if (!population.empty()) shift_cfg.population_path = population.c_str();
      if (!export_path.empty()) shift_cfg.export_path = export_path.c_str();
      shift_cfg.sampling_law = law == "cdf" ? DRE_SAMPLING_CDF : DRE_SAMPLING_DENSITY;
      check(dre_run_shift(&shift_cfg, &report.p));
      emit(dre_report_csv(report.p), dre_report_manifest(report.p), out);
    } else if (*oracle) {
      std::string csv, manifest;
      int failed = 0;
      std::string first_failure;
      for (const auto& path : instances) {
        ReportHandle one;
        const dre_status s = dre_oracle_check(path.c_str(), tolerance, &one.p);
        if (s == DRE_CHECK_FAILED) {
          ++failed;
          if (first_failure.empty()) first_failure = dre_last_error();
        } else {
          check(s);
        }
        std::string text = dre_report_csv(one.p);
        if (!csv.empty()) text = text.substr(text.find('\n') + 1);
        csv += text;
        manifest += dre_report_manifest(one.p);
      }
      emit(csv, manifest, out);
      if (failed) throw CliError{DRE_CHECK_FAILED, first_failure + " (" + std::to_string(failed) + " of " +
                                                       std::to_string(instances.size()) + " instances failed)"};
    }
  } catch (const CliError& e) {
    std::fprintf(stderr, "dreval: error: %s\n", e.message.c_str());
    return e.code;
  }
  return 0;
}
