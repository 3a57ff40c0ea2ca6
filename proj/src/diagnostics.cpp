#include "dreval/diagnostics.hpp"

#include "dreval/error.hpp"
#include "dreval/numeric.hpp"

namespace dreval {

namespace {

double multiplicative_deviation(double p, double p_hat) { return p_hat > 0.0 ? 1.0 - p / p_hat : 1.0; }

// Per-context quantities at the policy's action.
struct AtPolicy {
  double weight;     // P(x)
  double rho;        // rho_pi(x)
  double deviation;  // Delta: model minus truth (for IPS the zero model, i.e. -rho)
  double delta;      // multiplicative propensity deviation
  double p;          // p(pi(x)|x)
  double p_hat;      // p_hat(pi(x)|x)
  double noise;      // Var[r_pi(x) | x]
};

std::vector<AtPolicy> tabulate(const FiniteInstance& inst, const Policy& policy, const PayoffModel& model,
                               EstimatorKind kind) {
  inst.validate();
  require(policy.actions() == inst.actions && policy.dimension() == inst.dimension(),
          "diagnostics: policy shape does not match the instance");
  require(model.actions() == inst.actions && model.dimension() == inst.dimension(),
          "diagnostics: model shape does not match the instance");
  std::vector<AtPolicy> rows;
  for (std::size_t i = 0; i < inst.contexts.size(); ++i) {
    const auto& c = inst.contexts[i];
    const Action a = policy_apply(policy, c.features);
    AtPolicy r{};
    r.weight = c.probability;
    r.rho = inst.expected_reward(i, a);
    const double rho_hat = kind == EstimatorKind::ips ? 0.0 : predict_payoff(model, c.features, a);
    r.deviation = rho_hat - r.rho;
    r.p = inst.logging[i][a];
    r.p_hat = inst.propensities[i][a];
    r.delta = multiplicative_deviation(r.p, r.p_hat);
    r.noise = inst.reward_variance(i, a);
    rows.push_back(r);
  }
  return rows;
}

template <class F>
double expect(const std::vector<AtPolicy>& rows, F&& f) {
  CompensatedSum s;
  for (const auto& r : rows) s.add(r.weight * f(r));
  return s.value();
}

template <class F>
double variance_over_contexts(const std::vector<AtPolicy>& rows, F&& f) {
  const double m = expect(rows, f);
  return expect(rows, [&](const AtPolicy& r) {
    const double e = f(r) - m;
    return e * e;
  });
}

}  // namespace

ModelDeviations model_deviations(const FiniteInstance& inst, const PayoffModel& model) {
  inst.validate();
  ModelDeviations dev;
  for (std::size_t i = 0; i < inst.contexts.size(); ++i) {
    std::vector<double> add, mult;
    for (Action a = 0; a < inst.actions; ++a) {
      add.push_back(predict_payoff(model, inst.contexts[i].features, a) - inst.expected_reward(i, a));
      mult.push_back(multiplicative_deviation(inst.logging[i][a], inst.propensities[i][a]));
    }
    dev.additive.push_back(std::move(add));
    dev.multiplicative.push_back(std::move(mult));
  }
  return dev;
}

double theoretical_bias(const FiniteInstance& inst, const Policy& policy, const PayoffModel& model,
                        EstimatorKind kind) {
  const auto rows = tabulate(inst, policy, model, kind);
  if (kind == EstimatorKind::dm) return expect(rows, [](const AtPolicy& r) { return r.deviation; });
  // For IPS the deviation is -rho, giving -E[rho delta].
  return expect(rows, [](const AtPolicy& r) { return r.deviation * r.delta; });
}

VarianceDecomposition theoretical_variance(const FiniteInstance& inst, const Policy& policy,
                                           const PayoffModel& model, std::size_t n, EstimatorKind kind) {
  require(n >= 1, "theoretical_variance: n must be >= 1");
  const auto rows = tabulate(inst, policy, model, kind);
  VarianceDecomposition v;
  if (kind == EstimatorKind::dm) {
    v.context_term = variance_over_contexts(rows, [](const AtPolicy& r) { return r.rho + r.deviation; });
  } else {
    v.reward_noise = expect(rows, [](const AtPolicy& r) {
      return r.p_hat > 0.0 ? r.p * r.noise / (r.p_hat * r.p_hat) : 0.0;
    });
    v.context_term = variance_over_contexts(rows, [](const AtPolicy& r) { return r.rho + r.deviation * r.delta; });
    // (1-p)/p * Delta^2 (1-delta)^2, written so that it is defined at p = 0.
    v.importance_penalty = expect(rows, [](const AtPolicy& r) {
      return r.p_hat > 0.0 ? r.deviation * r.deviation * r.p * (1.0 - r.p) / (r.p_hat * r.p_hat) : 0.0;
    });
  }
  v.total = (v.reward_noise + v.context_term + v.importance_penalty) / static_cast<double>(n);
  return v;
}

}  // namespace dreval
