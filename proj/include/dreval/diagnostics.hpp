#pragma once

// Closed-form bias and variance of the DM, IPS and DR estimators on finite
// instances where the true rewards and logging probabilities are known.

#include <cstddef>
#include <vector>

#include "dreval/estimators.hpp"
#include "dreval/oracle.hpp"

namespace dreval {

/// Delta(a,x) = rho_hat_a(x) - rho_a(x) and delta(a,x) = 1 - p(a|x)/p_hat(a|x),
/// tabulated per [context][action]. delta is 1 where p_hat = 0 (then p = 0 too).
struct ModelDeviations {
  std::vector<std::vector<double>> additive;
  std::vector<std::vector<double>> multiplicative;

  double delta_add(Action a, std::size_t ctx) const { return additive[ctx][a]; }
  double delta_mult(Action a, std::size_t ctx) const { return multiplicative[ctx][a]; }
};

ModelDeviations model_deviations(const FiniteInstance& inst, const PayoffModel& model);

struct VarianceDecomposition {
  double reward_noise = 0.0;        // E[eps^2]
  double context_term = 0.0;        // Var_x[...]
  double importance_penalty = 0.0;  // E_x[(1-p)/p * ...]
  double total = 0.0;               // (sum of the three) / n
};

/// Signed bias E[V_hat] - V^pi: E_x[Delta delta] (DR), E_x[Delta] (DM),
/// -E_x[rho delta] (IPS).
double theoretical_bias(const FiniteInstance& inst, const Policy& policy, const PayoffModel& model,
                        EstimatorKind kind);

VarianceDecomposition theoretical_variance(const FiniteInstance& inst, const Policy& policy,
                                           const PayoffModel& model, std::size_t n, EstimatorKind kind);

}  // namespace dreval
