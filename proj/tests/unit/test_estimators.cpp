#include <cmath>
#include <vector>

#include "doctest.h"
#include "dreval/error.hpp"
#include "dreval/estimators.hpp"
#include "dreval/oracle.hpp"
#include "helpers.hpp"

using namespace dreval;
using testing_support::constant_policy;

namespace {

// Random dataset with contexts in R^3, k = 4.
LoggedDataset random_dataset(Rng& rng, std::size_t n, std::size_t k = 4, std::size_t d = 3) {
  std::vector<LoggedRecord> recs;
  for (std::size_t i = 0; i < n; ++i) {
    LoggedRecord r;
    r.context = testing_support::random_vector(d, rng);
    r.action = static_cast<Action>(rng.index(k));
    r.payoff = rng.uniform(-1, 2);
    r.propensity = rng.uniform(0.05, 1.0);
    recs.push_back(r);
  }
  return LoggedDataset(std::move(recs), k);
}

double naive_dr(const LoggedDataset& data, const PayoffModel& m, const Policy& p) {
  double s = 0.0;
  for (const auto& r : data.records()) {
    const Action pi = policy_apply(p, r.context);
    double rho = 0.0, rho_a = 0.0;
    for (std::size_t j = 0; j < r.context.size(); ++j) {
      rho += m.weights(pi, j) * r.context[j];
      rho_a += m.weights(r.action, j) * r.context[j];
    }
    s += rho + (r.action == pi ? (r.payoff - rho_a) / r.propensity : 0.0);
  }
  return s / static_cast<double>(data.size());
}

}  // namespace

TEST_CASE("dr_term examples") {
  const Policy p = constant_policy(3, 1, 1);
  PayoffModel flat{WeightMatrix(3, 1, 0.7), 0.0};
  CHECK(dr_term({{1.0}, 1, 0.7, 0.3}, flat, p) == doctest::Approx(0.7).epsilon(1e-15));

  PayoffModel m = testing_support::model({{0.1}, {0.4}, {0.9}});
  CHECK(dr_term({{1.0}, 2, 5.0, 0.2}, m, p) == doctest::Approx(0.4));

  CHECK(dr_term({{1.0}, 1, 1.0, 0.5}, zero_model(3, 1), p) == doctest::Approx(2.0));
}

TEST_CASE("dr_term rejects nonpositive propensities") {
  const Policy p = constant_policy(2, 1, 0);
  for (double prop : {0.0, -0.5}) {
    try {
      dr_term({{1.0}, 0, 1.0, prop}, zero_model(2, 1), p);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::invalid_propensity);
    }
  }
}

TEST_CASE("ips examples") {
  const Policy p = constant_policy(2, 1, 0);
  LoggedDataset one({{{1.0}, 0, 1.0, 0.5}}, 2);
  CHECK(estimate_ips(one, p).value == doctest::Approx(2.0));

  LoggedDataset sure({{{1.0}, 0, 0.3, 1.0}, {{1.0}, 0, 0.9, 1.0}, {{1.0}, 0, -0.6, 1.0}}, 2);
  CHECK(estimate_ips(sure, p).value == doctest::Approx((0.3 + 0.9 - 0.6) / 3.0));
}

TEST_CASE("dr with an exact model and on-policy records has zero spread") {
  // two contexts, deterministic payoffs matching the model
  const Policy p = testing_support::policy({{1, 0}, {0, 1}});
  const PayoffModel m = testing_support::model({{0.8, 0.1}, {0.2, 0.6}});
  LoggedDataset data({{{1, 0}, 0, 0.8, 0.4}, {{0, 1}, 1, 0.6, 0.7}, {{1, 0}, 0, 0.8, 0.9}}, 2);
  const auto rep = estimate_dr(data, m, p);
  CHECK(rep.value == doctest::Approx((0.8 + 0.6 + 0.8) / 3.0));
  CHECK(rep.terms[0] == rep.terms[2]);
}

TEST_CASE("dr with a zero model equals ips") {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    auto data = random_dataset(rng, 40);
    Policy p{testing_support::random_matrix(4, 3, rng)};
    const auto dr = estimate_dr(data, zero_model(4, 3), p);
    const auto ips = estimate_ips(data, p);
    CHECK(dr.value == doctest::Approx(ips.value).epsilon(1e-14));
    for (std::size_t i = 0; i < dr.terms.size(); ++i) CHECK(dr.terms[i] == doctest::Approx(ips.terms[i]));
  }
}

TEST_CASE("dm examples") {
  const Policy p = testing_support::policy({{1, 0}, {0, 1}});
  const PayoffModel exact = testing_support::model({{0.8, 0.1}, {0.2, 0.6}});
  std::vector<CostVectorExample> truth{{{1, 0}, {0.8, 0.2}}, {{0, 1}, {0.1, 0.6}}};
  std::vector<Context> xs{{1, 0}, {0, 1}};
  CHECK(estimate_dm(xs, exact, p).value == doctest::Approx(true_policy_value(truth, p)));

  // constant model through a constant feature
  Rng rng(2);
  PayoffModel c{WeightMatrix(3, 2), 0.0};
  for (std::size_t a = 0; a < 3; ++a) c.weights(a, 0) = 0.37;
  for (int trial = 0; trial < 10; ++trial) {
    Policy q{testing_support::random_matrix(3, 2, rng)};
    std::vector<Context> cs;
    for (int i = 0; i < 5; ++i) cs.push_back({1.0, rng.uniform(-1, 1)});
    CHECK(estimate_dm(cs, c, q).value == doctest::Approx(0.37));
  }

  // model off by 0.1 at the chosen action
  PayoffModel shifted = exact;
  shifted.weights(0, 0) += 0.1;
  shifted.weights(1, 1) += 0.1;
  CHECK(estimate_dm(xs, shifted, p).value == doctest::Approx(true_policy_value(truth, p) + 0.1));
}

TEST_CASE("estimators reject empty input") {
  CHECK_THROWS_AS(estimate_dm(std::vector<Context>{}, zero_model(2, 1), constant_policy(2, 1, 0)), Error);
}

TEST_CASE("value is the mean of the terms and matches a direct formula") {
  Rng rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    auto data = random_dataset(rng, 1 + rng.index(60));
    Policy p{testing_support::random_matrix(4, 3, rng)};
    PayoffModel m{testing_support::random_matrix(4, 3, rng), 0.0};
    for (auto kind : {EstimatorKind::dm, EstimatorKind::ips, EstimatorKind::dr}) {
      const auto rep = estimate(kind, data, m, p);
      REQUIRE(rep.terms.size() == data.size());
      CHECK(rep.n == data.size());
      double s = 0.0;
      for (double t : rep.terms) s += t;
      const double mean = s / static_cast<double>(rep.terms.size());
      CHECK(std::abs(rep.value - mean) <= 1e-12 * std::max(1.0, std::abs(mean)));
    }
    CHECK(estimate_dr(data, m, p).value == doctest::Approx(naive_dr(data, m, p)).epsilon(1e-12));
  }
}

TEST_CASE("ips is linear in the payoffs and dr is affine in payoffs and model") {
  Rng rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    auto base = random_dataset(rng, 30);
    std::vector<LoggedRecord> r1(base.records().begin(), base.records().end()), r2 = r1, mix = r1;
    const double alpha = rng.uniform(-2, 2), beta = rng.uniform(-2, 2);
    for (std::size_t i = 0; i < r1.size(); ++i) {
      r2[i].payoff = rng.uniform(-1, 1);
      mix[i].payoff = alpha * r1[i].payoff + beta * r2[i].payoff;
    }
    LoggedDataset d1(r1, 4), d2(r2, 4), dm(mix, 4);
    Policy p{testing_support::random_matrix(4, 3, rng)};
    CHECK(estimate_ips(dm, p).value ==
          doctest::Approx(alpha * estimate_ips(d1, p).value + beta * estimate_ips(d2, p).value).epsilon(1e-10));

    PayoffModel m1{testing_support::random_matrix(4, 3, rng), 0.0}, m2{testing_support::random_matrix(4, 3, rng), 0.0};
    // affine combination with alpha + beta = 1 keeps DR exact
    const double a2 = alpha, b2 = 1.0 - alpha;
    std::vector<LoggedRecord> mix2 = r1;
    for (std::size_t i = 0; i < r1.size(); ++i) mix2[i].payoff = a2 * r1[i].payoff + b2 * r2[i].payoff;
    PayoffModel m12{WeightMatrix(4, 3), 0.0};
    for (std::size_t j = 0; j < m12.weights.data().size(); ++j)
      m12.weights.data()[j] = a2 * m1.weights.data()[j] + b2 * m2.weights.data()[j];
    LoggedDataset dmix2(mix2, 4);
    CHECK(estimate_dr(dmix2, m12, p).value ==
          doctest::Approx(a2 * estimate_dr(d1, m1, p).value + b2 * estimate_dr(d2, m2, p).value).epsilon(1e-10));
  }
}

TEST_CASE("dr minus ips is the model-only correction, term by term") {
  Rng rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    auto data = random_dataset(rng, 25);
    Policy p{testing_support::random_matrix(4, 3, rng)};
    PayoffModel m{testing_support::random_matrix(4, 3, rng), 0.0};
    const auto dr = estimate_dr(data, m, p);
    const auto ips = estimate_ips(data, p);
    for (std::size_t i = 0; i < data.size(); ++i) {
      const auto& r = data.records()[i];
      const Action pi = policy_apply(p, r.context);
      const double rho = predict_payoff(m, r.context, pi);
      const double expected = rho * (1.0 - (r.action == pi ? 1.0 / r.propensity : 0.0));
      CHECK(dr.terms[i] - ips.terms[i] == doctest::Approx(expected).epsilon(1e-9));
    }
  }
}

TEST_CASE("estimator names round-trip") {
  for (auto k : {EstimatorKind::dm, EstimatorKind::ips, EstimatorKind::dr})
    CHECK(estimator_from_string(to_string(k)) == k);
  CHECK(estimator_from_string("dr") == EstimatorKind::dr);
  CHECK_THROWS_AS(estimator_from_string("snips"), Error);
}

TEST_CASE("double robustness by enumeration on random instances") {
  Rng rng(99);
  for (int trial = 0; trial < 25; ++trial) {
    FiniteInstance inst;
    const std::size_t nc = 2 + rng.index(3), k = 2 + rng.index(3);
    inst.actions = k;
    double total = 0.0;
    for (std::size_t c = 0; c < nc; ++c) {
      Context x(nc, 0.0);
      x[c] = 1.0;
      const double w = rng.uniform(0.1, 1.0);
      inst.contexts.push_back({x, w});
      total += w;
    }
    for (auto& c : inst.contexts) c.probability /= total;
    inst.rewards.assign(nc, std::vector<std::vector<RewardAtom>>(k));
    inst.logging.assign(nc, std::vector<double>(k));
    inst.propensities.assign(nc, std::vector<double>(k));
    for (std::size_t c = 0; c < nc; ++c) {
      double lt = 0, pt = 0;
      for (std::size_t a = 0; a < k; ++a) {
        inst.rewards[c][a] = {{rng.uniform(-1, 1), 0.4}, {rng.uniform(-1, 1), 0.6}};
        inst.logging[c][a] = rng.uniform(0.1, 1);
        inst.propensities[c][a] = rng.uniform(0.1, 1);
        lt += inst.logging[c][a];
        pt += inst.propensities[c][a];
      }
      for (std::size_t a = 0; a < k; ++a) {
        inst.logging[c][a] /= lt;
        inst.propensities[c][a] /= pt;
      }
    }
    Policy p{testing_support::random_matrix(k, nc, rng)};
    PayoffModel m{testing_support::random_matrix(k, nc, rng), 0.0};
    const double v = policy_value(inst, p);
    const auto exact_p = with_exact_propensities(inst);
    CHECK(std::abs(enumerate_expected_value(exact_p, p, m, EstimatorKind::dr) - v) <= 1e-10);
    CHECK(std::abs(enumerate_expected_value(exact_p, p, m, EstimatorKind::ips) - v) <= 1e-10);
    const PayoffModel exact_m = exact_payoff_model(inst);
    CHECK(std::abs(enumerate_expected_value(inst, p, exact_m, EstimatorKind::dr) - v) <= 1e-10);
    CHECK(std::abs(enumerate_expected_value(inst, p, exact_m, EstimatorKind::dm) - v) <= 1e-10);
  }
}
