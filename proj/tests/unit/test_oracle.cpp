#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "doctest.h"
#include "dreval/diagnostics.hpp"
#include "dreval/error.hpp"
#include "dreval/oracle.hpp"
#include "helpers.hpp"

using namespace dreval;

namespace {

const char* two_arm = R"(
name two_arm
actions 2
context 1 1
reward 0 0 1:0.3 0:0.7
reward 0 1 0.5
logging 0 0.5 0.5
policy 0 1
policy 1 0
)";

const char* three_ctx = R"(
# deviating model and propensities
actions 3
context 0.5 1 0 0
context 0.3 0 1 0
context 0.2 0 0 1
reward 0 0 0.2:0.5 0.6:0.5
reward 0 1 0.7
reward 0 2 0.5
reward 1 0 1.0
reward 1 1 -0.1:0.25 0.3:0.75
reward 1 2 0.4
reward 2 0 0.6
reward 2 1 0.3
reward 2 2 0.9:0.1 0.1:0.9
logging 0 0.2 0.5 0.3
logging 1 0.6 0.2 0.2
logging 2 0.1 0.1 0.8
propensity 0 0.4 0.4 0.2
propensity 1 0.3 0.3 0.4
propensity 2 0.25 0.25 0.5
policy 0 0 1 0
policy 1 1 0 0
policy 2 0 0 1
model 0 0.1 0.9 0.6
model 1 0.7 0.3 0.3
model 2 0.4 0.4 1.0
)";

double direct_dr_bias(const OracleCase& c) {
  const auto& inst = c.instance;
  double s = 0.0;
  for (std::size_t i = 0; i < inst.contexts.size(); ++i) {
    const Action a = policy_apply(c.policy, inst.contexts[i].features);
    const double delta_add = predict_payoff(c.model, inst.contexts[i].features, a) - inst.expected_reward(i, a);
    const double delta_mult = 1.0 - inst.logging[i][a] / inst.propensities[i][a];
    s += inst.contexts[i].probability * delta_add * delta_mult;
  }
  return s;
}

}  // namespace

TEST_CASE("parse a small instance") {
  const auto c = parse_oracle_case(two_arm);
  CHECK(c.name == "two_arm");
  CHECK(c.instance.actions == 2);
  CHECK(c.instance.contexts.size() == 1);
  CHECK(c.instance.expected_reward(0, 0) == doctest::Approx(0.3));
  CHECK(c.instance.reward_variance(0, 0) == doctest::Approx(0.21));
  CHECK(c.instance.propensities[0][1] == 0.5);  // defaults to logging
  CHECK(c.model.weights(0, 0) == 0.0);
  CHECK(policy_value(c.instance, c.policy) == doctest::Approx(0.3));
}

TEST_CASE("instance text round-trips") {
  const auto c = parse_oracle_case(three_ctx, "three");
  const auto again = parse_oracle_case(format_oracle_case(c));
  CHECK(again.policy.weights == c.policy.weights);
  CHECK(again.model.weights == c.model.weights);
  CHECK(again.instance.logging == c.instance.logging);
  CHECK(again.instance.propensities == c.instance.propensities);
  for (auto kind : {EstimatorKind::dm, EstimatorKind::ips, EstimatorKind::dr})
    CHECK(enumerate_variance(again.instance, again.policy, again.model, kind) ==
          enumerate_variance(c.instance, c.policy, c.model, kind));
}

TEST_CASE("malformed instances are rejected") {
  auto code_of = [](const std::string& text) {
    try {
      parse_oracle_case(text);
    } catch (const Error& e) {
      return static_cast<int>(e.code());
    }
    return 0;
  };
  CHECK(code_of("context 1 1\nreward 0 0 1\nlogging 0 1\n") == static_cast<int>(ErrorCode::parse_error));
  CHECK(code_of("actions 1\ncontext 1 1\nreward 0 0 x\nlogging 0 1\n") == static_cast<int>(ErrorCode::parse_error));
  CHECK(code_of("actions 1\ncontext 1 1\nreward 0 0 1\nlogging 0 1\nbogus 3\n") ==
        static_cast<int>(ErrorCode::parse_error));
  CHECK(code_of("actions 2\ncontext 0.7 1\nreward 0 0 1\nreward 0 1 1\nlogging 0 0.5 0.5\n") != 0);
  CHECK(code_of("actions 2\ncontext 1 1\nreward 0 0 1\nlogging 0 0.5 0.5\n") != 0);
  CHECK(code_of("actions 2\ncontext 1 1\nreward 0 0 1\nreward 0 1 1\nlogging 0 0.5 0.6\n") != 0);
  CHECK(code_of("actions 2\ncontext 1 1\nreward 0 0 1\nreward 0 1 1\nlogging 0 0.5 0.5\npropensity 0 1 0\n") != 0);
  std::string many = "actions 1\ncontext 1 1\nreward 0 0";
  for (int i = 0; i < 9; ++i) many += " " + std::to_string(i) + ":" + (i < 8 ? "0.1" : "0.2");
  CHECK(code_of(many + "\nlogging 0 1\n") != 0);
}

TEST_CASE("the outcome cap is enforced") {
  std::string text = "actions 100\n";
  for (int c = 0; c < 130; ++c) text += "context " + std::to_string(1.0 / 130.0) + " 1\n";
  std::string atoms;
  for (int i = 0; i < 8; ++i) atoms += " " + std::to_string(i) + ":0.125";
  for (int c = 0; c < 130; ++c)
    for (int a = 0; a < 100; ++a) text += "reward " + std::to_string(c) + " " + std::to_string(a) + atoms + "\n";
  for (int c = 0; c < 130; ++c) {
    text += "logging " + std::to_string(c);
    for (int a = 0; a < 100; ++a) text += " 0.01";
    text += "\n";
  }
  CHECK_THROWS_AS(parse_oracle_case(text), Error);
}

TEST_CASE("enumeration: unbiased special cases") {
  const auto c = parse_oracle_case(three_ctx);
  const double v = policy_value(c.instance, c.policy);
  const auto exact_p = with_exact_propensities(c.instance);
  CHECK(std::abs(enumerate_expected_value(exact_p, c.policy, c.model, EstimatorKind::ips) - v) <= 1e-12);
  const auto exact_m = exact_payoff_model(c.instance);
  CHECK(std::abs(enumerate_expected_value(c.instance, c.policy, exact_m, EstimatorKind::dm) - v) <= 1e-12);
}

TEST_CASE("enumeration: dr mean is the value plus the product of deviations") {
  const auto c = parse_oracle_case(three_ctx);
  const double v = policy_value(c.instance, c.policy);
  const double bias = direct_dr_bias(c);
  CHECK(std::abs(bias) > 1e-3);
  CHECK(std::abs(enumerate_expected_value(c.instance, c.policy, c.model, EstimatorKind::dr) - (v + bias)) <= 1e-12);
  CHECK(std::abs(theoretical_bias(c.instance, c.policy, c.model, EstimatorKind::dr) - bias) <= 1e-12);
}

TEST_CASE("enumeration: hand-computed Bernoulli importance variance") {
  // pi picks action 0, reward Bernoulli(0.3), uniform logging: T = 2r with prob 1/2, else 0
  const auto c = parse_oracle_case(two_arm);
  const double q = 0.3;
  CHECK(enumerate_expected_value(c.instance, c.policy, c.model, EstimatorKind::ips) == doctest::Approx(q));
  CHECK(enumerate_variance(c.instance, c.policy, c.model, EstimatorKind::ips) ==
        doctest::Approx(2 * q - q * q).epsilon(1e-14));
}

TEST_CASE("enumeration: zero variance in the forced degenerate case") {
  const auto c = parse_oracle_case(R"(
actions 2
context 0.5 1 0
context 0.5 0 1
reward 0 0 0.4
reward 0 1 0.9
reward 1 0 0.4
reward 1 1 0.1
logging 0 1 0
logging 1 1 0
policy 0 1 1
model 0 0.4 0.4
model 1 0.9 0.1
)");
  CHECK(enumerate_variance(c.instance, c.policy, c.model, EstimatorKind::dr) == doctest::Approx(0.0));
  CHECK(theoretical_variance(c.instance, c.policy, c.model, 1, EstimatorKind::dr).total == doctest::Approx(0.0));
}

TEST_CASE("dataset moments scale with n") {
  const auto c = parse_oracle_case(three_ctx);
  for (auto kind : {EstimatorKind::dm, EstimatorKind::ips, EstimatorKind::dr}) {
    const auto one = enumerate_dataset_moments(c.instance, c.policy, c.model, kind, 1);
    CHECK(one.mean == enumerate_expected_value(c.instance, c.policy, c.model, kind));
    CHECK(one.variance == enumerate_variance(c.instance, c.policy, c.model, kind));
    const auto ten = enumerate_dataset_moments(c.instance, c.policy, c.model, kind, 10);
    CHECK(ten.mean == one.mean);
    CHECK(ten.variance == doctest::Approx(one.variance / 10.0).epsilon(1e-14));
  }
  CHECK_THROWS_AS(enumerate_dataset_moments(c.instance, c.policy, c.model, EstimatorKind::dr, 0), Error);
}

TEST_CASE("sampled datasets agree with the exact mean") {
  const auto c = parse_oracle_case(three_ctx);
  Rng rng(31);
  const auto data = sample_dataset(c.instance, 200000, rng);
  CHECK(data.size() == 200000);
  const double exact = enumerate_expected_value(c.instance, c.policy, c.model, EstimatorKind::dr);
  const double sd = std::sqrt(enumerate_variance(c.instance, c.policy, c.model, EstimatorKind::dr) / 200000.0);
  CHECK(std::abs(estimate_dr(data, c.model, c.policy).value - exact) <= 5 * sd);
}

TEST_CASE("exact model needs independent contexts") {
  const auto c = parse_oracle_case(R"(
actions 1
context 0.5 1 1
context 0.5 2 2
reward 0 0 1
reward 1 0 3
logging 0 1
logging 1 1
)");
  try {
    exact_payoff_model(c.instance);
    FAIL("expected singular_system");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::singular_system);
  }
}

TEST_CASE("every bundled instance loads and validates") {
  std::size_t count = 0;
  for (const auto& entry : std::filesystem::directory_iterator(std::filesystem::path(DREVAL_DATA_DIR) / "instances")) {
    const auto c = load_oracle_case(entry.path());
    CHECK_NOTHROW(c.instance.validate());
    ++count;
  }
  CHECK(count >= 10);
  CHECK_THROWS_AS(load_oracle_case("/nonexistent/instance.txt"), Error);
}
