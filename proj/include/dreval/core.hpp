#pragma once

// Domain types shared by every module: contexts, logged bandit records,
// deterministic linear policies and fully labeled cost-vector examples.

#include <cstddef>
#include <span>
#include <vector>

namespace dreval {

using Context = std::vector<double>;
using Action = std::size_t;

/// Dense row-major matrix holding one weight vector per action.
class WeightMatrix {
 public:
  WeightMatrix() = default;
  WeightMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const noexcept { return {data_.data() + r * cols_, cols_}; }

  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  bool operator==(const WeightMatrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Deterministic policy: pi(x) = argmax_a x . theta_a, ties to the lowest index.
struct Policy {
  WeightMatrix weights;  // actions x dimension

  std::size_t actions() const noexcept { return weights.rows(); }
  std::size_t dimension() const noexcept { return weights.cols(); }
};

Action policy_apply(const Policy& policy, std::span<const double> x);

/// Index of the largest entry; the first one wins ties.
std::size_t argmax_lowest(std::span<const double> values);

struct LoggedRecord {
  Context context;
  Action action = 0;
  double payoff = 0.0;
  double propensity = 1.0;  // p_hat(action | context) at logging time
};

/// Nonempty collection of records sharing the action count and dimension.
class LoggedDataset {
 public:
  LoggedDataset(std::vector<LoggedRecord> records, std::size_t actions);

  std::span<const LoggedRecord> records() const noexcept { return records_; }
  std::size_t size() const noexcept { return records_.size(); }
  std::size_t actions() const noexcept { return actions_; }
  std::size_t dimension() const noexcept { return dimension_; }

 private:
  std::vector<LoggedRecord> records_;
  std::size_t actions_;
  std::size_t dimension_;
};

struct MulticlassExample {
  Context context;
  Action label = 0;
};

struct CostVectorExample {
  Context context;
  std::vector<double> losses;  // one entry per action; may be negative when imputed
};

/// Mean over examples of the loss at the action chosen by `policy`.
double true_policy_value(std::span<const CostVectorExample> examples, const Policy& policy);

}  // namespace dreval
