#pragma once

// Small, fully enumerated bandit environments and exact moments of the
// single-record estimator terms over every (context, action, reward) outcome.
//
// Instance text format (one directive per line, '#' starts a comment):
//
//   name        <identifier>                      optional
//   actions     <k>
//   context     <probability> <f_1> ... <f_d>     repeated; numbered from 0
//   reward      <ctx> <action> <v>                deterministic reward
//   reward      <ctx> <action> <v>:<p> <v>:<p>..  finite distribution, <= 8 atoms
//   logging     <ctx> <p_0> ... <p_{k-1}>         true logging probabilities
//   propensity  <ctx> <q_0> ... <q_{k-1}>         modeled propensities (default: logging)
//   policy      <action> <theta_1> ... <theta_d>  optional, default all zero
//   model       <action> <w_1> ... <w_d>          optional, default all zero
//
// Every (ctx, action) pair needs a reward line and every context a logging line.

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dreval/core.hpp"
#include "dreval/estimators.hpp"
#include "dreval/random.hpp"
#include "dreval/reward_models.hpp"

namespace dreval {

struct RewardAtom {
  double value = 0.0;
  double probability = 1.0;
};

inline constexpr std::size_t max_reward_atoms = 8;
inline constexpr std::size_t max_oracle_outcomes = 100000;

struct FiniteInstance {
  struct WeightedContext {
    Context features;
    double probability = 0.0;
  };

  std::vector<WeightedContext> contexts;
  std::size_t actions = 0;
  std::vector<std::vector<std::vector<RewardAtom>>> rewards;  // [context][action] -> atoms
  std::vector<std::vector<double>> logging;                   // p(a|x)
  std::vector<std::vector<double>> propensities;              // p_hat(a|x)

  std::size_t dimension() const noexcept { return contexts.empty() ? 0 : contexts.front().features.size(); }

  /// Throws invalid_input describing the first violated invariant.
  void validate() const;

  /// rho_a(x_i) = E[r_a | x_i]
  double expected_reward(std::size_t ctx, Action a) const;
  double reward_variance(std::size_t ctx, Action a) const;
  std::size_t outcome_count() const;
};

/// An instance together with the policy and payoff model to check.
struct OracleCase {
  std::string name;
  FiniteInstance instance;
  Policy policy;
  PayoffModel model;
};

OracleCase parse_oracle_case(std::string_view text, const std::string& source = "<string>");
OracleCase load_oracle_case(const std::filesystem::path& path);
std::string format_oracle_case(const OracleCase& c);

/// V^pi = E_x[rho_pi(x)(x)]
double policy_value(const FiniteInstance& inst, const Policy& policy);

/// Exact E[T] of one estimator term T, enumerating every outcome.
double enumerate_expected_value(const FiniteInstance& inst, const Policy& policy, const PayoffModel& model,
                                EstimatorKind kind);
/// Exact Var[T] of one estimator term (two-pass, about the exact mean).
double enumerate_variance(const FiniteInstance& inst, const Policy& policy, const PayoffModel& model,
                          EstimatorKind kind);

struct DatasetMoments {
  double mean = 0.0;
  double variance = 0.0;
};
/// Moments of the estimate over IID datasets of size n.
DatasetMoments enumerate_dataset_moments(const FiniteInstance& inst, const Policy& policy, const PayoffModel& model,
                                         EstimatorKind kind, std::size_t n);

/// Linear model reproducing rho exactly on every context; requires linearly
/// independent contexts (throws singular_system otherwise).
PayoffModel exact_payoff_model(const FiniteInstance& inst);

/// Copy of the instance whose modeled propensities equal the true ones.
FiniteInstance with_exact_propensities(FiniteInstance inst);

/// Draws one logged dataset of n IID records from the instance.
LoggedDataset sample_dataset(const FiniteInstance& inst, std::size_t n, Rng& rng);

}  // namespace dreval
