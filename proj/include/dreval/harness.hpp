#pragma once

// Dataset loading and the three end-to-end protocols (off-policy evaluation,
// policy optimization from imputed losses, covariate-shift mean estimation),
// plus the oracle check suite and report formatting.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dreval/class_to_bandit.hpp"
#include "dreval/core.hpp"
#include "dreval/estimators.hpp"
#include "dreval/learners.hpp"
#include "dreval/oracle.hpp"
#include "dreval/shift.hpp"

namespace dreval {

// ---------------------------------------------------------------------------
// Data

struct CsvLoadOptions {
  bool append_bias = true;   // constant 1 feature after the file's columns
  bool standardize = false;  // z-score each file column (constant columns become 0)
};

struct MulticlassDataset {
  std::vector<MulticlassExample> examples;
  std::size_t actions = 0;
  std::size_t dimension = 0;
};

/// Rows of comma-separated numbers with a 1-based integer label last.
MulticlassDataset parse_csv_dataset(std::string_view text, const CsvLoadOptions& options = {},
                                    const std::string& source = "<string>");
MulticlassDataset load_csv_dataset(const std::filesystem::path& path, const CsvLoadOptions& options = {});

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};
/// Random split with round(fraction * n) training rows, both parts nonempty.
Split random_split(std::size_t n, double train_fraction, Rng& rng);

/// Runs body(i) for i in [0, n) on up to `threads` workers (0 = hardware
/// concurrency). Each index is processed exactly once; the first exception is
/// rethrown after all workers stop.
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& body);

// ---------------------------------------------------------------------------
// Reports

struct ReportRow {
  std::string dataset;
  std::string subject;  // estimator, learner or method
  std::string metric;
  double value = 0.0;
};

struct Report {
  std::vector<ReportRow> rows;
  std::vector<std::pair<std::string, std::string>> manifest;  // ordered key/value pairs

  void add(std::string dataset, std::string subject, std::string metric, double value) {
    rows.push_back({std::move(dataset), std::move(subject), std::move(metric), value});
  }
  /// First row matching all three keys; throws invalid_input when absent.
  double value(std::string_view dataset, std::string_view subject, std::string_view metric) const;
};

/// Header `dataset,subject,metric,value`; values printed round-trippably.
std::string format_report_csv(const Report& report);
std::string format_manifest(const Report& report);

// ---------------------------------------------------------------------------
// Evaluation protocol

enum class LossModelSource { full_labels, partial_labels };

struct EvalProtocolConfig {
  std::size_t replicates = 500;
  double train_fraction = 0.5;
  double ridge_lambda = 1.0;
  LossModelSource model_source = LossModelSource::full_labels;
  DlmConfig dlm;
  std::uint64_t seed = 1;
  std::size_t threads = 1;
  bool include_replicates = false;  // per-replicate estimates in the report
};

struct EstimatorSummary {
  EstimatorKind kind = EstimatorKind::dr;
  std::vector<double> estimates;
  double mean = 0.0;
  double bias = 0.0;      // mean - truth, signed
  double rmse = 0.0;
  double variance = 0.0;  // population variance of the estimates
};

struct EvalReport {
  double truth = 0.0;  // error of the evaluated policy on the fully labeled test part
  std::vector<EstimatorSummary> estimators;  // DM, IPS, DR
  const EstimatorSummary& get(EstimatorKind kind) const;
};

EvalReport run_eval_protocol(const MulticlassDataset& data, const EvalProtocolConfig& config);
Report eval_report(const EvalReport& result, const std::string& dataset, const EvalProtocolConfig& config);

/// bias, rmse and variance of estimates about a known truth.
EstimatorSummary summarize_estimates(EstimatorKind kind, std::vector<double> estimates, double truth);

// ---------------------------------------------------------------------------
// Optimization protocol

enum class LearnerKind { dlm, filter_tree };
std::string_view to_string(LearnerKind kind);
std::string_view to_string(ImputeMethod method);

struct OptProtocolConfig {
  std::size_t runs = 30;
  double train_fraction = 0.7;
  double ridge_lambda = 1.0;
  std::vector<ImputeMethod> imputations{ImputeMethod::ips, ImputeMethod::dr};
  std::vector<LearnerKind> learners{LearnerKind::dlm, LearnerKind::filter_tree};
  bool full_feedback = false;  // reveal every action's loss instead of one
  DlmConfig dlm;
  BinaryTreeConfig tree;
  std::uint64_t seed = 1;
  std::size_t threads = 1;
};

struct OptCell {
  ImputeMethod impute = ImputeMethod::dr;
  LearnerKind learner = LearnerKind::dlm;
  std::vector<double> test_errors;  // one per run
  double mean_test_error = 0.0;
};

struct SignTest {
  LearnerKind learner = LearnerKind::dlm;
  std::size_t dr_wins = 0;
  std::size_t ips_wins = 0;
  std::size_t ties = 0;
  double p_value = 1.0;  // one-sided, H1: DR has lower error
};

struct OptReport {
  std::vector<OptCell> cells;
  std::vector<SignTest> sign_tests;  // for learners run with both imputations
  const OptCell& get(ImputeMethod impute, LearnerKind learner) const;
};

OptReport run_opt_protocol(const MulticlassDataset& data, const OptProtocolConfig& config);
Report opt_report(const OptReport& result, const std::string& dataset, const OptProtocolConfig& config);

/// P(X >= wins) for X ~ Binomial(wins + losses, 1/2).
double sign_test_p_value(std::size_t wins, std::size_t losses);

// ---------------------------------------------------------------------------
// Shift protocol

struct ShiftProtocolConfig {
  ShiftConfig population;
  std::optional<std::filesystem::path> population_path;  // load instead of generating
  std::optional<double> probability_override;            // replace every p_i
  std::size_t threads = 1;
};

struct ShiftCell {
  double fraction = 0.0;
  std::string method;  // "ips" or "dr"
  std::vector<double> errors;  // estimate - truth per replicate
  double bias = 0.0;
  double std_dev = 0.0;
  double rmse = 0.0;
};

struct ShiftReport {
  double population_mean = 0.0;
  std::size_t population_size = 0;
  std::vector<ShiftCell> cells;  // per fraction: ips then dr
  const ShiftCell& get(double fraction, std::string_view method) const;
};

ShiftReport run_shift_protocol(const ShiftProtocolConfig& config);
ShiftReport run_shift_protocol(const ShiftPopulation& pop, const ShiftProtocolConfig& config);
Report shift_report(const ShiftReport& result, const ShiftProtocolConfig& config);

// ---------------------------------------------------------------------------
// Oracle checks

struct OracleCheck {
  std::string name;   // e.g. "dr.expected_value"
  double error = 0.0;
  bool passed = false;
};

/// Exact enumeration against the closed forms, plus the double-robustness
/// checks (exact propensities; exact model when one is representable).
std::vector<OracleCheck> run_oracle_checks(const OracleCase& c, double tolerance = 1e-10);
Report oracle_report(const OracleCase& c, const std::vector<OracleCheck>& checks, double tolerance);

}  // namespace dreval
