#include "dreval/core.hpp"

#include <cmath>
#include <string>

#include "dreval/error.hpp"
#include "dreval/numeric.hpp"

namespace dreval {

std::size_t argmax_lowest(std::span<const double> values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i)
    if (values[i] > values[best]) best = i;
  return best;
}

Action policy_apply(const Policy& policy, std::span<const double> x) {
  if (x.size() != policy.dimension())
    fail(ErrorCode::invalid_input, "policy_apply: context dimension " + std::to_string(x.size()) +
                                       " does not match policy dimension " +
                                       std::to_string(policy.dimension()));
  require(policy.actions() >= 1, "policy_apply: policy has no actions");
  Action best = 0;
  double best_score = dot(policy.weights.row(0), x);
  for (Action a = 1; a < policy.actions(); ++a) {
    const double s = dot(policy.weights.row(a), x);
    if (s > best_score) {
      best_score = s;
      best = a;
    }
  }
  return best;
}

LoggedDataset::LoggedDataset(std::vector<LoggedRecord> records, std::size_t actions)
    : records_(std::move(records)), actions_(actions), dimension_(0) {
  require(!records_.empty(), "logged dataset is empty");
  require(actions_ >= 1, "logged dataset needs at least one action");
  dimension_ = records_.front().context.size();
  for (std::size_t i = 0; i < records_.size(); ++i) {
    const auto& r = records_[i];
    require(r.context.size() == dimension_, "record " + std::to_string(i) + ": dimension mismatch");
    require(r.action < actions_, "record " + std::to_string(i) + ": action out of range");
    for (double v : r.context) require(std::isfinite(v), "record " + std::to_string(i) + ": non-finite feature");
    require(std::isfinite(r.payoff), "record " + std::to_string(i) + ": non-finite payoff");
    if (!(r.propensity > 0.0 && r.propensity <= 1.0))
      fail(ErrorCode::invalid_propensity,
           "record " + std::to_string(i) + ": propensity must lie in (0,1], got " + std::to_string(r.propensity));
  }
}

double true_policy_value(std::span<const CostVectorExample> examples, const Policy& policy) {
  require(!examples.empty(), "true_policy_value: no examples");
  CompensatedSum sum;
  for (const auto& ex : examples) {
    require(ex.losses.size() == policy.actions(), "true_policy_value: loss vector length differs from action count");
    sum.add(ex.losses[policy_apply(policy, ex.context)]);
  }
  return sum.value() / static_cast<double>(examples.size());
}

}  // namespace dreval
