#include "dreval/estimators.hpp"

#include <algorithm>
#include <cctype>
#include <string>

#include "dreval/error.hpp"
#include "dreval/numeric.hpp"

namespace dreval {

std::string_view to_string(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::dm: return "DM";
    case EstimatorKind::ips: return "IPS";
    case EstimatorKind::dr: return "DR";
  }
  return "?";
}

EstimatorKind estimator_from_string(std::string_view name) {
  std::string s(name);
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (s == "dm") return EstimatorKind::dm;
  if (s == "ips") return EstimatorKind::ips;
  if (s == "dr") return EstimatorKind::dr;
  fail(ErrorCode::invalid_input, "unknown estimator '" + std::string(name) + "'");
}

namespace {

double effective_propensity(const LoggedRecord& r, const EstimatorOptions& opts) {
  if (!(r.propensity > 0.0))
    fail(ErrorCode::invalid_propensity, "propensity must be positive, got " + std::to_string(r.propensity));
  return std::max(r.propensity, opts.propensity_floor);
}

EstimateReport finish(std::vector<double> terms) {
  require(!terms.empty(), "estimate: no records");
  EstimateReport rep;
  rep.n = terms.size();
  rep.value = compensated_mean(terms);
  rep.terms = std::move(terms);
  return rep;
}

}  // namespace

double dr_term(const LoggedRecord& record, const PayoffModel& model, const Policy& policy,
               const EstimatorOptions& opts) {
  const double p = effective_propensity(record, opts);
  const Action chosen = policy_apply(policy, record.context);
  const double baseline = predict_payoff(model, record.context, chosen);
  if (chosen != record.action) return baseline;
  return (record.payoff - predict_payoff(model, record.context, record.action)) / p + baseline;
}

double ips_term(const LoggedRecord& record, const Policy& policy, const EstimatorOptions& opts) {
  const double p = effective_propensity(record, opts);
  return policy_apply(policy, record.context) == record.action ? record.payoff / p : 0.0;
}

EstimateReport estimate_dr(const LoggedDataset& data, const PayoffModel& model, const Policy& policy,
                           const EstimatorOptions& opts) {
  std::vector<double> terms;
  terms.reserve(data.size());
  for (const auto& r : data.records()) terms.push_back(dr_term(r, model, policy, opts));
  return finish(std::move(terms));
}

EstimateReport estimate_ips(const LoggedDataset& data, const Policy& policy, const EstimatorOptions& opts) {
  std::vector<double> terms;
  terms.reserve(data.size());
  for (const auto& r : data.records()) terms.push_back(ips_term(r, policy, opts));
  return finish(std::move(terms));
}

EstimateReport estimate_dm(std::span<const Context> contexts, const PayoffModel& model, const Policy& policy) {
  std::vector<double> terms;
  terms.reserve(contexts.size());
  for (const auto& x : contexts) terms.push_back(predict_payoff(model, x, policy_apply(policy, x)));
  return finish(std::move(terms));
}

EstimateReport estimate_dm(const LoggedDataset& data, const PayoffModel& model, const Policy& policy) {
  std::vector<double> terms;
  terms.reserve(data.size());
  for (const auto& r : data.records())
    terms.push_back(predict_payoff(model, r.context, policy_apply(policy, r.context)));
  return finish(std::move(terms));
}

EstimateReport estimate(EstimatorKind kind, const LoggedDataset& data, const PayoffModel& model,
                        const Policy& policy, const EstimatorOptions& opts) {
  switch (kind) {
    case EstimatorKind::dm: return estimate_dm(data, model, policy);
    case EstimatorKind::ips: return estimate_ips(data, policy, opts);
    case EstimatorKind::dr: return estimate_dr(data, model, policy, opts);
  }
  fail(ErrorCode::invalid_input, "unknown estimator kind");
}

}  // namespace dreval
