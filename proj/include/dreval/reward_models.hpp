#pragma once

// Per-action linear payoff models fit by ridge regression, and propensity
// models for the logging policy.

#include <cstddef>
#include <map>
#include <span>
#include <variant>
#include <vector>

#include "dreval/core.hpp"

namespace dreval {

/// rho_hat_a(x) = w_a . x, one weight row per action.
struct PayoffModel {
  WeightMatrix weights;
  double lambda = 0.0;

  std::size_t actions() const noexcept { return weights.rows(); }
  std::size_t dimension() const noexcept { return weights.cols(); }
};

/// All-zero model; DR with it reduces to IPS.
PayoffModel zero_model(std::size_t actions, std::size_t dimension);

double predict_payoff(const PayoffModel& model, std::span<const double> x, Action a);

/// Accumulates the normal equations X'X w = X'y of one least-squares problem.
class RidgeAccumulator {
 public:
  explicit RidgeAccumulator(std::size_t dimension);

  void add(std::span<const double> x, double y);
  /// Row given as the indices of its nonzero (unit) entries.
  void add_binary(std::span<const std::size_t> active, double y);

  std::size_t count() const noexcept { return count_; }
  std::size_t dimension() const noexcept { return dim_; }

  /// Solves (X'X + lambda I) w = X'y by Cholesky factorization.
  /// Throws singular_system when the regularized matrix is not positive definite.
  std::vector<double> solve(double lambda) const;

 private:
  std::size_t dim_;
  std::size_t count_ = 0;
  std::vector<double> gram_;  // dim x dim, upper triangle maintained
  std::vector<double> rhs_;
};

/// Fits w_a on the records whose logged action is a (partial-label fit).
/// Actions without records get w_a = 0.
PayoffModel fit_ridge_per_action(const LoggedDataset& data, double lambda);

/// Fits every w_a on all examples using the fully revealed loss vectors.
PayoffModel fit_ridge_full_information(std::span<const CostVectorExample> examples, double lambda);

/// Value of the ridge objective sum_i (w.x_i - y_i)^2 + lambda |w|^2 for one action.
double ridge_objective(const LoggedDataset& data, Action a, std::span<const double> w, double lambda);

/// Logging-policy propensity model p_hat(a|x).
class PropensityModel {
 public:
  struct Uniform {
    std::size_t actions;
  };
  struct Table {
    std::map<Context, std::vector<double>> entries;
  };
  struct PerRecord {};

  static PropensityModel uniform(std::size_t actions);
  static PropensityModel table(std::map<Context, std::vector<double>> entries);
  static PropensityModel per_record();

  /// p_hat(a|x); not available for the per-record kind.
  double operator()(std::span<const double> x, Action a) const;
  /// Propensity to use for a logged record.
  double for_record(const LoggedRecord& r) const;

 private:
  explicit PropensityModel(std::variant<Uniform, Table, PerRecord> kind) : kind_(std::move(kind)) {}
  std::variant<Uniform, Table, PerRecord> kind_;
};

inline PropensityModel uniform_propensity(std::size_t actions) { return PropensityModel::uniform(actions); }

}  // namespace dreval
