#include "dreval/class_to_bandit.hpp"

#include <string>

#include "dreval/error.hpp"

namespace dreval {

CostVectorExample to_cost_sensitive(const MulticlassExample& ex, std::size_t actions) {
  if (ex.label >= actions)
    fail(ErrorCode::invalid_input,
         "to_cost_sensitive: label " + std::to_string(ex.label) + " out of range for k=" + std::to_string(actions));
  CostVectorExample out{ex.context, std::vector<double>(actions, 1.0)};
  out.losses[ex.label] = 0.0;
  return out;
}

LoggedRecord reveal_one(const CostVectorExample& ex, Rng& rng) {
  const std::size_t k = ex.losses.size();
  require(k >= 1, "reveal_one: empty loss vector");
  const Action a = static_cast<Action>(rng.index(k));
  return {ex.context, a, ex.losses[a], 1.0 / static_cast<double>(k)};
}

std::vector<LoggedRecord> reveal_all(const CostVectorExample& ex) {
  std::vector<LoggedRecord> out;
  for (Action a = 0; a < ex.losses.size(); ++a) out.push_back({ex.context, a, ex.losses[a], 1.0});
  return out;
}

std::vector<double> impute_example(std::span<const LoggedRecord> reveals, std::size_t actions, ImputeMethod method,
                                   const PayoffModel* model) {
  require(!reveals.empty(), "impute: no revealed records");
  if (method == ImputeMethod::dr && model == nullptr) fail(ErrorCode::invalid_input, "impute: DR needs a loss model");
  const Context& x = reveals.front().context;
  std::vector<double> out(actions, 0.0);
  if (method == ImputeMethod::dr)
    for (Action a = 0; a < actions; ++a) out[a] = predict_payoff(*model, x, a);
  const std::vector<double> baseline = out;
  for (const auto& r : reveals) {
    if (!(r.propensity > 0.0)) fail(ErrorCode::invalid_propensity, "impute: propensity must be positive");
    require(r.action < actions, "impute: action out of range");
    require(r.context == x, "impute: reveals for one example must share the context");
    out[r.action] += (r.payoff - baseline[r.action]) / r.propensity;
  }
  return out;
}

std::vector<CostVectorExample> impute_costs(std::span<const LoggedRecord> records, std::size_t actions,
                                            ImputeMethod method, const PayoffModel* model) {
  std::vector<CostVectorExample> out;
  out.reserve(records.size());
  for (const auto& r : records)
    out.push_back({r.context, impute_example(std::span<const LoggedRecord>(&r, 1), actions, method, model)});
  return out;
}

}  // namespace dreval
