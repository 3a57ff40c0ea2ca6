#pragma once

// Turning multiclass data into partially labeled bandit data, and filling the
// unrevealed losses back in with IPS or DR.

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "dreval/core.hpp"
#include "dreval/random.hpp"
#include "dreval/reward_models.hpp"

namespace dreval {

/// losses[a] = 0 for the true label, 1 otherwise.
CostVectorExample to_cost_sensitive(const MulticlassExample& ex, std::size_t actions);

/// Reveals the loss of one uniformly drawn action (propensity 1/k).
LoggedRecord reveal_one(const CostVectorExample& ex, Rng& rng);

/// Reveals every action with propensity 1: k records.
std::vector<LoggedRecord> reveal_all(const CostVectorExample& ex);

enum class ImputeMethod { ips, dr };

/// Imputed loss vector for one context from the records revealed for it:
///   l_a = rho_hat_a(x) + sum_{records with action a} (l - rho_hat_a(x)) / p_hat
/// IPS is the same with rho_hat = 0. With one record this is the usual
/// single-reveal imputation.
std::vector<double> impute_example(std::span<const LoggedRecord> reveals, std::size_t actions, ImputeMethod method,
                                   const PayoffModel* model);

/// One imputed cost vector per record. DR requires a model.
std::vector<CostVectorExample> impute_costs(std::span<const LoggedRecord> records, std::size_t actions,
                                            ImputeMethod method, const PayoffModel* model = nullptr);

}  // namespace dreval
