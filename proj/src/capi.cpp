#include "dreval/dreval.h"

#include <exception>
#include <new>
#include <string>

#include "dreval/error.hpp"
#include "dreval/harness.hpp"
#include "dreval/text.hpp"

struct dre_dataset {
  dreval::MulticlassDataset data;
};

struct dre_report {
  dreval::Report report;
  std::string csv;
  std::string manifest;
};

namespace {

thread_local std::string last_error;

dre_status to_status(dreval::ErrorCode code) { return static_cast<dre_status>(static_cast<int>(code)); }

template <class F>
dre_status guarded(F&& f) {
  last_error.clear();
  try {
    return f();
  } catch (const dreval::Error& e) {
    last_error = e.what();
    return to_status(e.code());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return DRE_INTERNAL_ERROR;
  } catch (const std::exception& e) {
    last_error = e.what();
    return DRE_INTERNAL_ERROR;
  } catch (...) {
    last_error = "unknown error";
    return DRE_INTERNAL_ERROR;
  }
}

void require_arg(bool ok, const char* what) {
  if (!ok) dreval::fail(dreval::ErrorCode::invalid_input, what);
}

dre_report* make_report(dreval::Report rep) {
  auto* out = new dre_report{std::move(rep), {}, {}};
  out->csv = dreval::format_report_csv(out->report);
  out->manifest = dreval::format_manifest(out->report);
  return out;
}

dreval::DlmConfig to_dlm(const dre_dlm_config& c) {
  dreval::DlmConfig d;
  d.epsilon = c.epsilon;
  d.restarts = c.restarts;
  d.max_iterations = c.max_iterations;
  d.convergence_tol = c.convergence_tol;
  d.perturbation_scale = c.perturbation_scale;
  return d;
}

void from_dlm(const dreval::DlmConfig& d, dre_dlm_config& c) {
  c.epsilon = d.epsilon;
  c.restarts = d.restarts;
  c.max_iterations = d.max_iterations;
  c.convergence_tol = d.convergence_tol;
  c.perturbation_scale = d.perturbation_scale;
}

}  // namespace

extern "C" {

const char* dre_version(void) { return "0.1.0"; }

const char* dre_status_name(dre_status status) {
  switch (status) {
    case DRE_OK: return "ok";
    case DRE_INVALID_INPUT: return "invalid input";
    case DRE_INVALID_PROPENSITY: return "invalid propensity";
    case DRE_PARSE_ERROR: return "parse error";
    case DRE_SINGULAR_SYSTEM: return "singular system";
    case DRE_DEGENERATE_DISTRIBUTION: return "degenerate distribution";
    case DRE_IO_ERROR: return "i/o error";
    case DRE_CHECK_FAILED: return "check failed";
    case DRE_INTERNAL_ERROR: return "internal error";
  }
  return "unknown status";
}

const char* dre_last_error(void) { return last_error.c_str(); }

void dre_load_options_default(dre_load_options* options) {
  if (!options) return;
  options->append_bias = 1;
  options->standardize = 0;
}

dre_status dre_dataset_load_csv(const char* path, const dre_load_options* options, dre_dataset** out) {
  return guarded([&] {
    require_arg(path && out, "dataset load: null argument");
    dreval::CsvLoadOptions opts;
    if (options) {
      opts.append_bias = options->append_bias != 0;
      opts.standardize = options->standardize != 0;
    }
    *out = new dre_dataset{dreval::load_csv_dataset(path, opts)};
    return DRE_OK;
  });
}

dre_status dre_dataset_info(const dre_dataset* data, size_t* examples, size_t* classes, size_t* dimension) {
  return guarded([&] {
    require_arg(data != nullptr, "dataset info: null dataset");
    if (examples) *examples = data->data.examples.size();
    if (classes) *classes = data->data.actions;
    if (dimension) *dimension = data->data.dimension;
    return DRE_OK;
  });
}

void dre_dataset_free(dre_dataset* data) { delete data; }

const char* dre_report_csv(const dre_report* report) { return report ? report->csv.c_str() : ""; }
const char* dre_report_manifest(const dre_report* report) { return report ? report->manifest.c_str() : ""; }
size_t dre_report_row_count(const dre_report* report) { return report ? report->report.rows.size() : 0; }

dre_status dre_report_value(const dre_report* report, const char* dataset, const char* subject, const char* metric,
                            double* value) {
  return guarded([&] {
    require_arg(report && dataset && subject && metric && value, "report value: null argument");
    *value = report->report.value(dataset, subject, metric);
    return DRE_OK;
  });
}

void dre_report_free(dre_report* report) { delete report; }

void dre_eval_config_default(dre_eval_config* config) {
  if (!config) return;
  const dreval::EvalProtocolConfig d;
  config->replicates = d.replicates;
  config->train_fraction = d.train_fraction;
  config->ridge_lambda = d.ridge_lambda;
  config->partial_label_model = d.model_source == dreval::LossModelSource::partial_labels;
  config->include_replicates = d.include_replicates;
  config->seed = d.seed;
  config->threads = d.threads;
  from_dlm(d.dlm, config->dlm);
}

dre_status dre_run_eval(const dre_dataset* data, const char* dataset_name, const dre_eval_config* config,
                        dre_report** out) {
  return guarded([&] {
    require_arg(data && out, "eval: null argument");
    dre_eval_config c;
    dre_eval_config_default(&c);
    if (config) c = *config;
    dreval::EvalProtocolConfig cfg;
    cfg.replicates = c.replicates;
    cfg.train_fraction = c.train_fraction;
    cfg.ridge_lambda = c.ridge_lambda;
    cfg.model_source = c.partial_label_model ? dreval::LossModelSource::partial_labels
                                             : dreval::LossModelSource::full_labels;
    cfg.include_replicates = c.include_replicates != 0;
    cfg.seed = c.seed;
    cfg.threads = c.threads;
    cfg.dlm = to_dlm(c.dlm);
    const std::string name = dataset_name ? dataset_name : "dataset";
    const auto result = dreval::run_eval_protocol(data->data, cfg);
    *out = make_report(dreval::eval_report(result, name, cfg));
    return DRE_OK;
  });
}

void dre_opt_config_default(dre_opt_config* config) {
  if (!config) return;
  const dreval::OptProtocolConfig d;
  config->runs = d.runs;
  config->train_fraction = d.train_fraction;
  config->ridge_lambda = d.ridge_lambda;
  config->impute_mask = DRE_IMPUTE_IPS | DRE_IMPUTE_DR;
  config->learner_mask = DRE_LEARNER_DLM | DRE_LEARNER_FILTER_TREE;
  config->full_feedback = 0;
  config->tree_max_depth = d.tree.max_depth;
  config->tree_min_samples_leaf = d.tree.min_samples_leaf;
  config->seed = d.seed;
  config->threads = d.threads;
  from_dlm(d.dlm, config->dlm);
}

dre_status dre_run_opt(const dre_dataset* data, const char* dataset_name, const dre_opt_config* config,
                       dre_report** out) {
  return guarded([&] {
    require_arg(data && out, "learn: null argument");
    dre_opt_config c;
    dre_opt_config_default(&c);
    if (config) c = *config;
    dreval::OptProtocolConfig cfg;
    cfg.runs = c.runs;
    cfg.train_fraction = c.train_fraction;
    cfg.ridge_lambda = c.ridge_lambda;
    cfg.imputations.clear();
    if (c.impute_mask & DRE_IMPUTE_IPS) cfg.imputations.push_back(dreval::ImputeMethod::ips);
    if (c.impute_mask & DRE_IMPUTE_DR) cfg.imputations.push_back(dreval::ImputeMethod::dr);
    cfg.learners.clear();
    if (c.learner_mask & DRE_LEARNER_DLM) cfg.learners.push_back(dreval::LearnerKind::dlm);
    if (c.learner_mask & DRE_LEARNER_FILTER_TREE) cfg.learners.push_back(dreval::LearnerKind::filter_tree);
    cfg.full_feedback = c.full_feedback != 0;
    cfg.tree.max_depth = c.tree_max_depth;
    cfg.tree.min_samples_leaf = c.tree_min_samples_leaf;
    cfg.seed = c.seed;
    cfg.threads = c.threads;
    cfg.dlm = to_dlm(c.dlm);
    const std::string name = dataset_name ? dataset_name : "dataset";
    const auto result = dreval::run_opt_protocol(data->data, cfg);
    *out = make_report(dreval::opt_report(result, name, cfg));
    return DRE_OK;
  });
}

void dre_shift_config_default(dre_shift_config* config) {
  if (!config) return;
  const dreval::ShiftConfig d;
  config->population_size = d.population_size;
  config->feature_dimension = d.feature_dimension;
  config->sparsity = d.sparsity;
  config->fractions = nullptr;
  config->fraction_count = 0;
  config->replicates = d.replicates;
  config->ridge_lambda = d.ridge_lambda;
  config->sampling_law = DRE_SAMPLING_DENSITY;
  config->probability_override = 0.0;
  config->population_path = nullptr;
  config->export_path = nullptr;
  config->seed = d.seed;
  config->threads = 1;
}

dre_status dre_run_shift(const dre_shift_config* config, dre_report** out) {
  return guarded([&] {
    require_arg(out != nullptr, "shift: null argument");
    dre_shift_config c;
    dre_shift_config_default(&c);
    if (config) c = *config;
    dreval::ShiftProtocolConfig cfg;
    auto& p = cfg.population;
    p.population_size = c.population_size;
    p.feature_dimension = c.feature_dimension;
    p.sparsity = c.sparsity;
    if (c.fractions) {
      require_arg(c.fraction_count > 0, "shift: empty fraction list");
      p.fractions.assign(c.fractions, c.fractions + c.fraction_count);
    }
    p.replicates = c.replicates;
    p.ridge_lambda = c.ridge_lambda;
    require_arg(c.sampling_law == DRE_SAMPLING_DENSITY || c.sampling_law == DRE_SAMPLING_CDF,
                "shift: unknown sampling law");
    p.law = c.sampling_law == DRE_SAMPLING_CDF ? dreval::SamplingLaw::cdf : dreval::SamplingLaw::density;
    p.seed = c.seed;
    if (c.probability_override > 0.0) cfg.probability_override = c.probability_override;
    if (c.population_path) cfg.population_path = c.population_path;
    cfg.threads = c.threads;

    const dreval::ShiftPopulation pop =
        cfg.population_path ? dreval::load_population_csv(*cfg.population_path) : dreval::synth_population(p);
    if (c.export_path) dreval::save_population_csv(pop, c.export_path);
    const auto result = dreval::run_shift_protocol(pop, cfg);
    *out = make_report(dreval::shift_report(result, cfg));
    return DRE_OK;
  });
}

dre_status dre_oracle_check(const char* instance_path, double tolerance, dre_report** out) {
  return guarded([&] {
    require_arg(instance_path && out, "oracle-check: null argument");
    require_arg(tolerance >= 0.0, "oracle-check: tolerance must be >= 0");
    const auto c = dreval::load_oracle_case(instance_path);
    const auto checks = dreval::run_oracle_checks(c, tolerance);
    *out = make_report(dreval::oracle_report(c, checks, tolerance));
    for (const auto& ch : checks)
      if (!ch.passed) {
        last_error = "oracle check " + ch.name + " failed on " + instance_path + " (error " +
                     dreval::format_double_short(ch.error) + ")";
        return DRE_CHECK_FAILED;
      }
    return DRE_OK;
  });
}

dre_status dre_estimate(int estimator, size_t n, size_t k, size_t d, const double* contexts, const size_t* actions,
                        const double* payoffs, const double* propensities, const double* policy_weights,
                        const double* model_weights, double* value) {
  return guarded([&] {
    require_arg(n > 0 && k > 0 && d > 0, "estimate: sizes must be positive");
    require_arg(contexts && actions && payoffs && propensities && policy_weights && value,
                "estimate: null argument");
    require_arg(estimator == DRE_ESTIMATOR_IPS || model_weights != nullptr, "estimate: this estimator needs a model");
    std::vector<dreval::LoggedRecord> records;
    records.reserve(n);
    for (size_t i = 0; i < n; ++i)
      records.push_back({dreval::Context(contexts + i * d, contexts + (i + 1) * d), actions[i], payoffs[i],
                         propensities[i]});
    const dreval::LoggedDataset data(std::move(records), k);
    dreval::Policy policy{dreval::WeightMatrix(k, d)};
    std::copy(policy_weights, policy_weights + k * d, policy.weights.data().begin());
    dreval::PayoffModel model = dreval::zero_model(k, d);
    if (model_weights) std::copy(model_weights, model_weights + k * d, model.weights.data().begin());
    dreval::EstimatorKind kind;
    switch (estimator) {
      case DRE_ESTIMATOR_DM: kind = dreval::EstimatorKind::dm; break;
      case DRE_ESTIMATOR_IPS: kind = dreval::EstimatorKind::ips; break;
      case DRE_ESTIMATOR_DR: kind = dreval::EstimatorKind::dr; break;
      default: dreval::fail(dreval::ErrorCode::invalid_input, "estimate: unknown estimator");
    }
    *value = dreval::estimate(kind, data, model, policy).value;
    return DRE_OK;
  });
}

}  // extern "C"
