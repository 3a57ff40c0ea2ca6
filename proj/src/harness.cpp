#include "dreval/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include "dreval/diagnostics.hpp"
#include "dreval/error.hpp"
#include "dreval/numeric.hpp"
#include "dreval/reward_models.hpp"
#include "dreval/text.hpp"

namespace dreval {

// ---------------------------------------------------------------------------
// Data

MulticlassDataset parse_csv_dataset(std::string_view text, const CsvLoadOptions& options, const std::string& source) {
  std::vector<std::vector<double>> rows;
  std::vector<std::size_t> labels;
  std::size_t columns = 0;
  std::size_t line_no = 0;
  std::size_t start = 0;
  auto bad = [&](const std::string& msg) {
    fail(ErrorCode::parse_error, source + ":" + std::to_string(line_no) + ": " + msg);
  };
  while (start < text.size()) {
    const auto end = text.find('\n', start);
    std::string_view line = text.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start);
    start = end == std::string_view::npos ? text.size() : end + 1;
    ++line_no;
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    const auto cells = split(line, ',');
    if (cells.size() < 2) bad("expected at least one feature and a label");
    if (columns == 0) columns = cells.size();
    if (cells.size() != columns)
      bad("expected " + std::to_string(columns) + " columns, found " + std::to_string(cells.size()));
    std::vector<double> features;
    for (std::size_t j = 0; j + 1 < cells.size(); ++j) {
      const auto v = parse_double(cells[j]);
      if (!v || !std::isfinite(*v)) bad("column " + std::to_string(j + 1) + " is not a number: '" +
                                        std::string(trim(cells[j])) + "'");
      features.push_back(*v);
    }
    const auto label = parse_unsigned(cells.back());
    if (!label) bad("label is not a positive integer: '" + std::string(trim(cells.back())) + "'");
    if (*label < 1) bad("labels are 1-based; found 0");
    rows.push_back(std::move(features));
    labels.push_back(static_cast<std::size_t>(*label - 1));
  }
  if (rows.empty()) fail(ErrorCode::parse_error, source + ": no data rows");

  const std::size_t d = columns - 1;
  if (options.standardize) {
    for (std::size_t j = 0; j < d; ++j) {
      CompensatedSum s;
      for (const auto& r : rows) s.add(r[j]);
      const double mean = s.value() / static_cast<double>(rows.size());
      CompensatedSum ss;
      for (const auto& r : rows) ss.add((r[j] - mean) * (r[j] - mean));
      const double sd = std::sqrt(ss.value() / static_cast<double>(rows.size()));
      for (auto& r : rows) r[j] = sd > 0.0 ? (r[j] - mean) / sd : 0.0;
    }
  }

  MulticlassDataset out;
  out.actions = *std::max_element(labels.begin(), labels.end()) + 1;
  out.dimension = d + (options.append_bias ? 1 : 0);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (options.append_bias) rows[i].push_back(1.0);
    out.examples.push_back({std::move(rows[i]), labels[i]});
  }
  return out;
}

MulticlassDataset load_csv_dataset(const std::filesystem::path& path, const CsvLoadOptions& options) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail(ErrorCode::io_error, "cannot open dataset " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_csv_dataset(ss.str(), options, path.string());
}

Split random_split(std::size_t n, double train_fraction, Rng& rng) {
  require(train_fraction > 0.0 && train_fraction < 1.0, "split: fraction must lie in (0,1)");
  require(n >= 2, "split: need at least 2 examples");
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  rng.shuffle(std::span<std::size_t>(idx));
  auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(n)));
  n_train = std::clamp<std::size_t>(n_train, 1, n - 1);
  Split s;
  s.train.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.test.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_train), idx.end());
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.test.begin(), s.test.end());
  return s;
}

void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& body) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, n);
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      if (stop.load()) return;
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        stop.store(true);
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

// ---------------------------------------------------------------------------
// Reports

double Report::value(std::string_view dataset, std::string_view subject, std::string_view metric) const {
  for (const auto& r : rows)
    if (r.dataset == dataset && r.subject == subject && r.metric == metric) return r.value;
  fail(ErrorCode::invalid_input,
       "report has no row " + std::string(dataset) + "/" + std::string(subject) + "/" + std::string(metric));
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string format_report_csv(const Report& report) {
  std::string out = "dataset,subject,metric,value\n";
  for (const auto& r : report.rows)
    out += csv_field(r.dataset) + "," + csv_field(r.subject) + "," + csv_field(r.metric) + "," +
           format_double(r.value) + "\n";
  return out;
}

std::string format_manifest(const Report& report) {
  std::string out;
  for (const auto& [k, v] : report.manifest) out += k + "=" + v + "\n";
  return out;
}

namespace {

std::vector<CostVectorExample> cost_vectors(const MulticlassDataset& data, std::span<const std::size_t> idx) {
  std::vector<CostVectorExample> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(to_cost_sensitive(data.examples[i], data.actions));
  return out;
}

void check_protocol_data(const MulticlassDataset& data, const char* who) {
  require(!data.examples.empty(), std::string(who) + ": empty dataset");
  if (data.examples.size() < 2 * data.actions)
    fail(ErrorCode::invalid_input, std::string(who) + ": dataset has " + std::to_string(data.examples.size()) +
                                       " examples, need at least 2k = " + std::to_string(2 * data.actions));
}

void add_dlm_manifest(Report& rep, const DlmConfig& dlm) {
  rep.manifest.emplace_back("dlm_epsilon", format_double(dlm.epsilon));
  rep.manifest.emplace_back("dlm_restarts", std::to_string(dlm.restarts));
  rep.manifest.emplace_back("dlm_max_iterations", std::to_string(dlm.max_iterations));
  rep.manifest.emplace_back("dlm_convergence_tol", format_double(dlm.convergence_tol));
  rep.manifest.emplace_back("dlm_perturbation_scale", format_double(dlm.perturbation_scale));
}

}  // namespace

// ---------------------------------------------------------------------------
// Evaluation protocol

EstimatorSummary summarize_estimates(EstimatorKind kind, std::vector<double> estimates, double truth) {
  require(!estimates.empty(), "summarize_estimates: no estimates");
  EstimatorSummary s;
  s.kind = kind;
  s.mean = compensated_mean(estimates);
  s.bias = s.mean - truth;
  CompensatedSum sq, var;
  for (double e : estimates) {
    sq.add((e - truth) * (e - truth));
    var.add((e - s.mean) * (e - s.mean));
  }
  const double n = static_cast<double>(estimates.size());
  s.rmse = std::sqrt(sq.value() / n);
  s.variance = var.value() / n;
  s.estimates = std::move(estimates);
  return s;
}

const EstimatorSummary& EvalReport::get(EstimatorKind kind) const {
  for (const auto& e : estimators)
    if (e.kind == kind) return e;
  fail(ErrorCode::invalid_input, "eval report lacks estimator " + std::string(to_string(kind)));
}

EvalReport run_eval_protocol(const MulticlassDataset& data, const EvalProtocolConfig& config) {
  check_protocol_data(data, "eval");
  require(config.replicates >= 1, "eval: replicates must be >= 1");
  require(config.ridge_lambda > 0.0, "eval: ridge lambda must be positive");
  const std::size_t k = data.actions;

  Rng split_rng(config.seed, "eval-split");
  const Split split = random_split(data.examples.size(), config.train_fraction, split_rng);
  const auto train = cost_vectors(data, split.train);
  const auto test = cost_vectors(data, split.test);

  const Policy policy = dlm_train(train, config.dlm, stream_seed(config.seed, "eval-policy"));
  EvalReport report;
  report.truth = true_policy_value(test, policy);

  PayoffModel model;
  if (config.model_source == LossModelSource::full_labels) {
    model = fit_ridge_full_information(train, config.ridge_lambda);
  } else {
    Rng rng(config.seed, "eval-model-reveal");
    std::vector<LoggedRecord> records;
    for (const auto& ex : train) records.push_back(reveal_one(ex, rng));
    model = fit_ridge_per_action(LoggedDataset(std::move(records), k), config.ridge_lambda);
  }

  std::vector<Context> test_contexts;
  for (const auto& ex : test) test_contexts.push_back(ex.context);
  const double dm = estimate_dm(test_contexts, model, policy).value;

  std::vector<double> ips(config.replicates), dr(config.replicates);
  parallel_for(config.replicates, config.threads, [&](std::size_t r) {
    Rng rng(config.seed, "eval-reveal", {r});
    std::vector<LoggedRecord> records;
    records.reserve(test.size());
    for (const auto& ex : test) records.push_back(reveal_one(ex, rng));
    const LoggedDataset logged(std::move(records), k);
    ips[r] = estimate_ips(logged, policy).value;
    dr[r] = estimate_dr(logged, model, policy).value;
  });

  report.estimators.push_back(
      summarize_estimates(EstimatorKind::dm, std::vector<double>(config.replicates, dm), report.truth));
  report.estimators.push_back(summarize_estimates(EstimatorKind::ips, std::move(ips), report.truth));
  report.estimators.push_back(summarize_estimates(EstimatorKind::dr, std::move(dr), report.truth));
  return report;
}

Report eval_report(const EvalReport& result, const std::string& dataset, const EvalProtocolConfig& config) {
  Report rep;
  rep.add(dataset, "policy", "truth", result.truth);
  for (const auto& e : result.estimators) {
    const std::string name(to_string(e.kind));
    rep.add(dataset, name, "mean", e.mean);
    rep.add(dataset, name, "bias", e.bias);
    rep.add(dataset, name, "abs_bias", std::abs(e.bias));
    rep.add(dataset, name, "rmse", e.rmse);
    rep.add(dataset, name, "variance", e.variance);
  }
  if (config.include_replicates)
    for (const auto& e : result.estimators)
      for (std::size_t r = 0; r < e.estimates.size(); ++r)
        rep.add(dataset, std::string(to_string(e.kind)), "estimate_" + std::to_string(r), e.estimates[r]);

  rep.manifest = {{"command", "eval"},
                  {"dataset", dataset},
                  {"seed", std::to_string(config.seed)},
                  {"replicates", std::to_string(config.replicates)},
                  {"train_fraction", format_double(config.train_fraction)},
                  {"ridge_lambda", format_double(config.ridge_lambda)},
                  {"loss_model", config.model_source == LossModelSource::full_labels ? "full_labels" : "partial_labels"}};
  add_dlm_manifest(rep, config.dlm);
  return rep;
}

// ---------------------------------------------------------------------------
// Optimization protocol

std::string_view to_string(LearnerKind kind) { return kind == LearnerKind::dlm ? "dlm" : "ft"; }
std::string_view to_string(ImputeMethod method) { return method == ImputeMethod::ips ? "ips" : "dr"; }

double sign_test_p_value(std::size_t wins, std::size_t losses) {
  const std::size_t m = wins + losses;
  if (m == 0) return 1.0;
  // sum_{i >= wins} C(m, i) / 2^m, with log-space binomials
  CompensatedSum s;
  for (std::size_t i = wins; i <= m; ++i) {
    const double log_c = std::lgamma(static_cast<double>(m) + 1.0) - std::lgamma(static_cast<double>(i) + 1.0) -
                         std::lgamma(static_cast<double>(m - i) + 1.0);
    s.add(std::exp(log_c - static_cast<double>(m) * std::log(2.0)));
  }
  return std::min(1.0, s.value());
}

const OptCell& OptReport::get(ImputeMethod impute, LearnerKind learner) const {
  for (const auto& c : cells)
    if (c.impute == impute && c.learner == learner) return c;
  fail(ErrorCode::invalid_input, "opt report lacks " + std::string(to_string(impute)) + "/" +
                                     std::string(to_string(learner)));
}

OptReport run_opt_protocol(const MulticlassDataset& data, const OptProtocolConfig& config) {
  check_protocol_data(data, "learn");
  require(config.runs >= 1, "learn: runs must be >= 1");
  require(config.ridge_lambda > 0.0, "learn: ridge lambda must be positive");
  require(!config.imputations.empty() && !config.learners.empty(), "learn: nothing to run");
  const std::size_t k = data.actions;
  if (std::find(config.learners.begin(), config.learners.end(), LearnerKind::filter_tree) != config.learners.end())
    require(k >= 2, "learn: the filter tree needs at least 2 classes");

  OptReport report;
  for (auto m : config.imputations)
    for (auto l : config.learners) report.cells.push_back({m, l, std::vector<double>(config.runs, 0.0), 0.0});

  parallel_for(config.runs, config.threads, [&](std::size_t run) {
    Rng split_rng(config.seed, "opt-split", {run});
    const Split split = random_split(data.examples.size(), config.train_fraction, split_rng);
    const auto train = cost_vectors(data, split.train);
    const auto test = cost_vectors(data, split.test);

    // Reveal, then fit the loss model on the revealed records only.
    Rng reveal_rng(config.seed, "opt-reveal", {run});
    std::vector<std::vector<LoggedRecord>> reveals;
    std::vector<LoggedRecord> all_records;
    for (const auto& ex : train) {
      reveals.push_back(config.full_feedback ? reveal_all(ex) : std::vector<LoggedRecord>{reveal_one(ex, reveal_rng)});
      all_records.insert(all_records.end(), reveals.back().begin(), reveals.back().end());
    }
    const PayoffModel model = fit_ridge_per_action(LoggedDataset(std::move(all_records), k), config.ridge_lambda);

    for (auto& cell : report.cells) {
      std::vector<CostVectorExample> imputed;
      imputed.reserve(train.size());
      for (std::size_t i = 0; i < train.size(); ++i)
        imputed.push_back({train[i].context, impute_example(reveals[i], k, cell.impute, &model)});
      double error = 0.0;
      if (cell.learner == LearnerKind::dlm) {
        const Policy policy = dlm_train(imputed, config.dlm, stream_seed(config.seed, "opt-dlm", {run}));
        error = true_policy_value(test, policy);
      } else {
        const FilterTreeModel tree = filter_tree_train(imputed, config.tree);
        error = filter_tree_loss(tree, test);
      }
      cell.test_errors[run] = error;
    }
  });

  for (auto& cell : report.cells) cell.mean_test_error = compensated_mean(cell.test_errors);
  for (auto l : config.learners) {
    const bool both = std::count(config.imputations.begin(), config.imputations.end(), ImputeMethod::ips) &&
                      std::count(config.imputations.begin(), config.imputations.end(), ImputeMethod::dr);
    if (!both) continue;
    const auto& ips = report.get(ImputeMethod::ips, l).test_errors;
    const auto& dr = report.get(ImputeMethod::dr, l).test_errors;
    SignTest t;
    t.learner = l;
    for (std::size_t r = 0; r < config.runs; ++r) {
      if (dr[r] < ips[r])
        ++t.dr_wins;
      else if (ips[r] < dr[r])
        ++t.ips_wins;
      else
        ++t.ties;
    }
    t.p_value = sign_test_p_value(t.dr_wins, t.ips_wins);
    report.sign_tests.push_back(t);
  }
  return report;
}

Report opt_report(const OptReport& result, const std::string& dataset, const OptProtocolConfig& config) {
  Report rep;
  for (const auto& c : result.cells) {
    const std::string subject = std::string(to_string(c.impute)) + "-" + std::string(to_string(c.learner));
    rep.add(dataset, subject, "mean_test_error", c.mean_test_error);
  }
  for (const auto& t : result.sign_tests) {
    const std::string subject = "dr_vs_ips-" + std::string(to_string(t.learner));
    rep.add(dataset, subject, "dr_wins", static_cast<double>(t.dr_wins));
    rep.add(dataset, subject, "ips_wins", static_cast<double>(t.ips_wins));
    rep.add(dataset, subject, "ties", static_cast<double>(t.ties));
    rep.add(dataset, subject, "sign_test_p", t.p_value);
  }
  for (const auto& c : result.cells) {
    const std::string subject = std::string(to_string(c.impute)) + "-" + std::string(to_string(c.learner));
    for (std::size_t r = 0; r < c.test_errors.size(); ++r)
      rep.add(dataset, subject, "test_error_" + std::to_string(r), c.test_errors[r]);
  }

  std::string imputations, learners;
  for (auto m : config.imputations) imputations += (imputations.empty() ? "" : " ") + std::string(to_string(m));
  for (auto l : config.learners) learners += (learners.empty() ? "" : " ") + std::string(to_string(l));
  rep.manifest = {{"command", "learn"},
                  {"dataset", dataset},
                  {"seed", std::to_string(config.seed)},
                  {"runs", std::to_string(config.runs)},
                  {"train_fraction", format_double(config.train_fraction)},
                  {"ridge_lambda", format_double(config.ridge_lambda)},
                  {"imputations", imputations},
                  {"learners", learners},
                  {"full_feedback", config.full_feedback ? "1" : "0"},
                  {"tree_max_depth", std::to_string(config.tree.max_depth)},
                  {"tree_min_samples_leaf", std::to_string(config.tree.min_samples_leaf)}};
  add_dlm_manifest(rep, config.dlm);
  return rep;
}

// ---------------------------------------------------------------------------
// Shift protocol

const ShiftCell& ShiftReport::get(double fraction, std::string_view method) const {
  for (const auto& c : cells)
    if (c.fraction == fraction && c.method == method) return c;
  fail(ErrorCode::invalid_input, "shift report lacks " + std::string(method) + " at f=" + format_double(fraction));
}

ShiftReport run_shift_protocol(const ShiftProtocolConfig& config) {
  if (config.population_path) return run_shift_protocol(load_population_csv(*config.population_path), config);
  return run_shift_protocol(synth_population(config.population), config);
}

ShiftReport run_shift_protocol(const ShiftPopulation& input, const ShiftProtocolConfig& config) {
  const ShiftConfig& sc = config.population;
  require(!sc.fractions.empty(), "shift: no fractions");
  for (double f : sc.fractions) require(f > 0.0 && f <= 1.0, "shift: fractions must lie in (0,1]");
  require(sc.replicates >= 1, "shift: replicates must be >= 1");
  require(sc.ridge_lambda > 0.0, "shift: ridge lambda must be positive");

  const ShiftPopulation* pop = &input;
  ShiftPopulation overridden;
  if (config.probability_override) {
    const double p = *config.probability_override;
    require(p > 0.0 && p <= 1.0, "shift: probability override must lie in (0,1]");
    overridden = input;
    std::fill(overridden.sampling_probs.begin(), overridden.sampling_probs.end(), p);
    pop = &overridden;
  }

  const std::size_t nf = sc.fractions.size();
  const std::size_t reps = sc.replicates;
  std::vector<ShiftOutcome> outcomes(nf * reps);
  parallel_for(nf * reps, config.threads, [&](std::size_t job) {
    const std::size_t fi = job / reps, r = job % reps;
    Rng rng(sc.seed, "shift-replicate", {fi, r});
    outcomes[job] = shift_experiment(*pop, sc.fractions[fi], sc.ridge_lambda, rng);
  });

  ShiftReport report;
  report.population_mean = pop->mean_visits();
  report.population_size = pop->units.size();
  for (std::size_t fi = 0; fi < nf; ++fi) {
    for (const char* method : {"ips", "dr"}) {
      ShiftCell cell;
      cell.fraction = sc.fractions[fi];
      cell.method = method;
      for (std::size_t r = 0; r < reps; ++r) {
        const auto& o = outcomes[fi * reps + r];
        cell.errors.push_back((cell.method == "ips" ? o.ips : o.dr) - o.truth);
      }
      const auto s = summarize_estimates(EstimatorKind::dr, cell.errors, 0.0);
      cell.bias = s.bias;
      cell.std_dev = std::sqrt(s.variance);
      cell.rmse = s.rmse;
      report.cells.push_back(std::move(cell));
    }
  }
  return report;
}

Report shift_report(const ShiftReport& result, const ShiftProtocolConfig& config) {
  Report rep;
  const std::string dataset = config.population_path ? config.population_path->stem().string() : "synthetic";
  rep.add(dataset, "population", "units", static_cast<double>(result.population_size));
  rep.add(dataset, "population", "mean_visits", result.population_mean);
  for (const auto& c : result.cells) {
    const std::string at = "@" + format_double_short(c.fraction);
    rep.add(dataset, c.method, "bias" + at, c.bias);
    rep.add(dataset, c.method, "std" + at, c.std_dev);
    rep.add(dataset, c.method, "rmse" + at, c.rmse);
  }

  const ShiftConfig& sc = config.population;
  std::string fractions;
  for (double f : sc.fractions) fractions += (fractions.empty() ? "" : " ") + format_double_short(f);
  rep.manifest = {{"command", "shift"},
                  {"seed", std::to_string(sc.seed)},
                  {"replicates", std::to_string(sc.replicates)},
                  {"fractions", fractions},
                  {"ridge_lambda", format_double(sc.ridge_lambda)}};
  if (config.population_path) {
    rep.manifest.emplace_back("population", config.population_path->string());
  } else {
    rep.manifest.emplace_back("population_size", std::to_string(sc.population_size));
    rep.manifest.emplace_back("feature_dimension", std::to_string(sc.feature_dimension));
    rep.manifest.emplace_back("sparsity", format_double(sc.sparsity));
    rep.manifest.emplace_back("sampling_law", sc.law == SamplingLaw::density ? "density" : "cdf");
  }
  if (config.probability_override) rep.manifest.emplace_back("probability_override", format_double(*config.probability_override));
  return rep;
}

// ---------------------------------------------------------------------------
// Oracle checks

std::vector<OracleCheck> run_oracle_checks(const OracleCase& c, double tolerance) {
  const FiniteInstance& inst = c.instance;
  inst.validate();
  std::vector<OracleCheck> out;
  auto record = [&](std::string name, double error) {
    out.push_back({std::move(name), error, std::isfinite(error) && error <= tolerance});
  };
  const double value = policy_value(inst, c.policy);
  for (EstimatorKind kind : {EstimatorKind::dm, EstimatorKind::ips, EstimatorKind::dr}) {
    const std::string name(to_string(kind));
    const double mean = enumerate_expected_value(inst, c.policy, c.model, kind);
    record(name + ".expected_value", std::abs(mean - (value + theoretical_bias(inst, c.policy, c.model, kind))));
    const double var = enumerate_variance(inst, c.policy, c.model, kind);
    record(name + ".variance", std::abs(var - theoretical_variance(inst, c.policy, c.model, 1, kind).total));
  }
  // Double robustness in the propensity needs the policy's actions to be logged
  // with positive probability.
  bool positive = true;
  for (std::size_t i = 0; i < inst.contexts.size(); ++i)
    if (inst.contexts[i].probability > 0.0 && !(inst.logging[i][policy_apply(c.policy, inst.contexts[i].features)] > 0.0))
      positive = false;
  if (positive) {
    const FiniteInstance exact_p = with_exact_propensities(inst);
    record("dr.exact_propensity_bias",
           std::abs(enumerate_expected_value(exact_p, c.policy, c.model, EstimatorKind::dr) - value));
  }
  try {
    const PayoffModel exact = exact_payoff_model(inst);
    record("dr.exact_model_bias", std::abs(enumerate_expected_value(inst, c.policy, exact, EstimatorKind::dr) - value));
  } catch (const Error& e) {
    if (e.code() != ErrorCode::singular_system) throw;
  }
  return out;
}

Report oracle_report(const OracleCase& c, const std::vector<OracleCheck>& checks, double tolerance) {
  Report rep;
  const std::string name = c.name.empty() ? "instance" : c.name;
  rep.add(name, "policy", "value", policy_value(c.instance, c.policy));
  for (const auto& ch : checks) {
    rep.add(name, ch.name, "abs_error", ch.error);
    rep.add(name, ch.name, "passed", ch.passed ? 1.0 : 0.0);
  }
  rep.manifest = {{"command", "oracle-check"}, {"instance", name}, {"tolerance", format_double(tolerance)}};
  return rep;
}

}  // namespace dreval
