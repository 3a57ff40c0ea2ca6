#pragma once

// Direct Method, Inverse Propensity Score and Doubly Robust estimates of a
// deterministic policy's value from logged bandit data.

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "dreval/core.hpp"
#include "dreval/reward_models.hpp"

namespace dreval {

enum class EstimatorKind { dm, ips, dr };

std::string_view to_string(EstimatorKind kind);
EstimatorKind estimator_from_string(std::string_view name);

/// value == mean(terms); terms holds one contribution per record.
struct EstimateReport {
  double value = 0.0;
  std::vector<double> terms;
  std::size_t n = 0;
};

/// Optional propensity floor; 0 disables clipping (the default).
struct EstimatorOptions {
  double propensity_floor = 0.0;
};

/// (r_a - rho_hat_a(x)) I(pi(x)=a) / p_hat + rho_hat_pi(x)(x)
double dr_term(const LoggedRecord& record, const PayoffModel& model, const Policy& policy,
               const EstimatorOptions& opts = {});
double ips_term(const LoggedRecord& record, const Policy& policy, const EstimatorOptions& opts = {});

EstimateReport estimate_dr(const LoggedDataset& data, const PayoffModel& model, const Policy& policy,
                           const EstimatorOptions& opts = {});
EstimateReport estimate_ips(const LoggedDataset& data, const Policy& policy, const EstimatorOptions& opts = {});
EstimateReport estimate_dm(const LoggedDataset& data, const PayoffModel& model, const Policy& policy);
EstimateReport estimate_dm(std::span<const Context> contexts, const PayoffModel& model, const Policy& policy);

EstimateReport estimate(EstimatorKind kind, const LoggedDataset& data, const PayoffModel& model,
                        const Policy& policy, const EstimatorOptions& opts = {});

}  // namespace dreval
