#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "dreval/error.hpp"
#include "dreval/learners.hpp"
#include "helpers.hpp"

using namespace dreval;

namespace {

bool same_tree(const BinaryClassifier& a, const BinaryClassifier& b) {
  if (a.nodes().size() != b.nodes().size()) return false;
  for (std::size_t i = 0; i < a.nodes().size(); ++i) {
    const auto &x = a.nodes()[i], &y = b.nodes()[i];
    if (x.feature != y.feature || x.threshold != y.threshold || x.left != y.left || x.right != y.right ||
        x.label != y.label)
      return false;
  }
  return true;
}

double training_error(const BinaryClassifier& c, const std::vector<WeightedBinaryExample>& ex) {
  double e = 0.0;
  for (const auto& x : ex)
    if (c.predict(x.features) != x.label) e += x.weight;
  return e;
}

// Realizable k = 4 instance: the best action is a function of a single feature.
std::vector<CostVectorExample> realizable_four(Rng& rng, std::size_t n) {
  std::vector<CostVectorExample> out;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t best = rng.index(4);
    CostVectorExample ex{{static_cast<double>(best) + rng.uniform(-0.3, 0.3), rng.uniform(-1, 1)}, {}};
    for (std::size_t a = 0; a < 4; ++a) ex.losses.push_back(a == best ? rng.uniform(-0.5, 0.0) : rng.uniform(0.1, 2.0));
    out.push_back(ex);
  }
  return out;
}

DlmConfig quick_dlm(std::size_t restarts = 5) {
  DlmConfig c;
  c.restarts = restarts;
  c.max_iterations = 300;
  return c;
}

}  // namespace

TEST_CASE("dlm learning rate schedule") {
  CHECK(dlm_learning_rate(1) == 0.5);
  for (std::size_t t : {2u, 10u, 100u, 1000u})
    CHECK(dlm_learning_rate(t) == doctest::Approx(std::pow(static_cast<double>(t), -0.3) / 2.0).epsilon(1e-15));
  CHECK_THROWS_AS(dlm_learning_rate(0), Error);
}

TEST_CASE("dlm_update hand example") {
  Policy theta{WeightMatrix(2, 2)};
  const CostVectorExample ex{{1.0, 2.0}, {1.0, 0.0}};
  // scores tie at 0, so the current choice is action 0; the loss-adjusted choice is action 1
  const Policy next = dlm_update(theta, ex, 0.5, 0.1);
  CHECK(next.weights(0, 0) == -0.5);
  CHECK(next.weights(0, 1) == -1.0);
  CHECK(next.weights(1, 0) == 0.5);
  CHECK(next.weights(1, 1) == 1.0);
}

TEST_CASE("dlm_update leaves theta unchanged when both choices agree") {
  Rng rng(2);
  for (int t = 0; t < 50; ++t) {
    Policy theta{testing_support::random_matrix(3, 2, rng)};
    CostVectorExample ex{testing_support::random_vector(2, rng), {1, 1, 1}};
    const Action chosen = policy_apply(theta, ex.context);
    ex.losses[chosen] = 0.0;
    CHECK(dlm_update(theta, ex, 0.3, 0.1).weights == theta.weights);
  }
}

TEST_CASE("dlm separates linearly separable data") {
  Rng rng(3);
  std::vector<CostVectorExample> ex;
  for (int i = 0; i < 60; ++i) {
    const double x = rng.uniform(0.5, 2.0) * (i % 2 ? 1.0 : -1.0);
    const double y = rng.uniform(-1, 1);
    ex.push_back({{x, y, 1.0}, x > 0 ? std::vector<double>{1, 0} : std::vector<double>{0, 1}});
  }
  const auto res = dlm_train_detailed(ex, quick_dlm(), 7);
  CHECK(res.runs[res.best_restart].training_loss == 0.0);
  double err = 0.0;
  for (const auto& e : ex) err += e.losses[policy_apply(res.policy, e.context)];
  CHECK(err == 0.0);
}

TEST_CASE("dlm is reproducible and order invariant") {
  Rng rng(4);
  std::vector<CostVectorExample> ex;
  for (int i = 0; i < 40; ++i) {
    CostVectorExample e{testing_support::random_vector(3, rng), std::vector<double>(3)};
    for (double& l : e.losses) l = rng.uniform(-1, 2);
    ex.push_back(e);
  }
  const DlmConfig one = quick_dlm(1);
  CHECK(dlm_train(ex, one, 11).weights == dlm_train(ex, one, 11).weights);
  const auto base = dlm_train_detailed(ex, quick_dlm(), 11);
  for (int t = 0; t < 5; ++t) {
    auto shuffled = ex;
    rng.shuffle(std::span<CostVectorExample>(shuffled));
    const auto again = dlm_train_detailed(shuffled, quick_dlm(), 11);
    CHECK(again.policy.weights == base.policy.weights);
    for (std::size_t r = 0; r < base.runs.size(); ++r) {
      CHECK(again.runs[r].iterations == base.runs[r].iterations);
      CHECK(again.runs[r].policy.weights == base.runs[r].policy.weights);
    }
  }
}

TEST_CASE("dlm selects the restart with the lowest training loss") {
  Rng rng(5);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<CostVectorExample> ex;
    for (int i = 0; i < 30; ++i) {
      CostVectorExample e{testing_support::random_vector(2, rng), std::vector<double>(4)};
      for (double& l : e.losses) l = static_cast<double>(rng.index(2));
      ex.push_back(e);
    }
    const auto res = dlm_train_detailed(ex, quick_dlm(8), 100 + trial);
    REQUIRE(res.runs.size() == 8);
    const double best = res.runs[res.best_restart].training_loss;
    for (std::size_t r = 0; r < res.runs.size(); ++r) {
      CHECK(best <= res.runs[r].training_loss);
      if (r < res.best_restart) CHECK(res.runs[r].training_loss > best);
      double direct = 0.0;
      for (const auto& e : ex) direct += e.losses[policy_apply(res.runs[r].policy, e.context)];
      CHECK(res.runs[r].training_loss == doctest::Approx(direct / 30.0));
    }
    CHECK(res.policy.weights == res.runs[res.best_restart].policy.weights);
  }
}

TEST_CASE("dlm input errors") {
  CHECK_THROWS_AS(dlm_train(std::vector<CostVectorExample>{}, DlmConfig{}, 1), Error);
  std::vector<CostVectorExample> ragged{{{1.0}, {0, 1}}, {{1.0}, {0, 1, 1}}};
  CHECK_THROWS_AS(dlm_train(ragged, DlmConfig{}, 1), Error);
}

TEST_CASE("tree: constant labels give a single leaf") {
  std::vector<double> f1{1.0}, f2{2.0}, f3{3.0};
  std::vector<WeightedBinaryExample> ex{{f1, 0, 1.0}, {f2, 0, 2.0}, {f3, 0, 0.5}};
  const auto c = binary_tree_learn(ex, {});
  CHECK(c.leaf_count() == 1);
  CHECK(c.depth() == 0);
  CHECK(c.predict(std::vector<double>{10.0}) == 0);
  CHECK(BinaryClassifier::constant(1).predict(std::vector<double>{-3.0}) == 1);
}

TEST_CASE("tree: one feature that splits the labels") {
  std::vector<std::vector<double>> xs{{0, 5}, {0, 1}, {0, 3}, {1, 2}, {1, 4}, {1, 0}};
  std::vector<WeightedBinaryExample> ex;
  for (const auto& x : xs) ex.push_back({x, static_cast<int>(x[0]), 1.0});
  const auto c = binary_tree_learn(ex, {});
  CHECK(c.depth() == 1);
  CHECK(training_error(c, ex) == 0.0);
  CHECK(c.nodes()[0].feature == 0);
  CHECK(c.nodes()[0].threshold == 0.5);
}

TEST_CASE("tree: weighted XOR needs two levels") {
  std::vector<std::vector<double>> xs{{0, 0}, {0, 1}, {1, 0}, {1, 1}};
  std::vector<WeightedBinaryExample> ex;
  for (const auto& x : xs) ex.push_back({x, static_cast<int>(x[0]) ^ static_cast<int>(x[1]), 1.0});
  const auto c = binary_tree_learn(ex, {8, 1});
  CHECK(c.depth() == 2);
  CHECK(training_error(c, ex) == 0.0);
}

TEST_CASE("tree: leaves follow the weighted majority") {
  std::vector<double> x{1.0};
  std::vector<WeightedBinaryExample> ex{{x, 0, 1.0}, {x, 0, 1.0}, {x, 1, 3.0}};
  CHECK(binary_tree_learn(ex, {}).predict(x) == 1);
  ex[2].weight = 2.0;  // tie goes to 0
  CHECK(binary_tree_learn(ex, {}).predict(x) == 0);
}

TEST_CASE("tree: depth and leaf-size limits hold on random data") {
  Rng rng(6);
  std::vector<std::vector<double>> xs(200);
  std::vector<WeightedBinaryExample> ex;
  for (auto& x : xs) {
    x = testing_support::random_vector(3, rng);
    ex.push_back({x, static_cast<int>(rng.index(2)), rng.uniform(0, 2)});
  }
  for (std::size_t depth : {1u, 3u, 6u}) {
    const auto c = binary_tree_learn(ex, {depth, 5});
    CHECK(c.depth() <= depth);
    CHECK(c.leaf_count() <= (std::size_t{1} << depth));
  }
  CHECK_THROWS_AS(binary_tree_learn(std::vector<WeightedBinaryExample>{}, {}), Error);
  std::vector<WeightedBinaryExample> weightless{{xs[0], 1, 0.0}};
  CHECK_THROWS_AS(binary_tree_learn(weightless, {}), Error);
}

TEST_CASE("filter tree: two actions, left always better") {
  Rng rng(7);
  std::vector<CostVectorExample> ex;
  for (int i = 0; i < 20; ++i) ex.push_back({testing_support::random_vector(2, rng), {0, 1}});
  const auto m = filter_tree_train(ex, {});
  CHECK(m.nodes().size() == 3);
  CHECK(m.nodes()[0].classifier.leaf_count() == 1);
  for (int i = 0; i < 20; ++i) CHECK(filter_tree_predict(m, testing_support::random_vector(2, rng)) == 0);
}

TEST_CASE("filter tree: realizable four-action instance has zero regret") {
  Rng rng(8);
  const auto ex = realizable_four(rng, 200);
  const auto m = filter_tree_train(ex, {8, 1});
  double best = 0.0;
  for (const auto& e : ex) {
    best += *std::min_element(e.losses.begin(), e.losses.end());
    const auto argmin = static_cast<Action>(std::min_element(e.losses.begin(), e.losses.end()) - e.losses.begin());
    CHECK(filter_tree_predict(m, e.context) == argmin);
  }
  CHECK(filter_tree_loss(m, ex) == doctest::Approx(best / 200.0));
}

TEST_CASE("filter tree: zero-regret examples change nothing") {
  Rng rng(9);
  auto ex = realizable_four(rng, 80);
  const auto base = filter_tree_train(ex, {});
  for (int i = 0; i < 40; ++i) {
    const double l = rng.uniform(-1, 1);
    ex.push_back({testing_support::random_vector(2, rng, -5, 5), {l, l, l, l}});
  }
  const auto more = filter_tree_train(ex, {});
  REQUIRE(more.nodes().size() == base.nodes().size());
  for (std::size_t i = 0; i < base.nodes().size(); ++i)
    CHECK(same_tree(base.nodes()[i].classifier, more.nodes()[i].classifier));
}

TEST_CASE("filter tree: structure and prediction cost") {
  Rng rng(10);
  for (std::size_t k = 2; k <= 26; ++k) {
    std::vector<CostVectorExample> ex;
    for (int i = 0; i < 30; ++i) {
      CostVectorExample e{testing_support::random_vector(2, rng), std::vector<double>(k)};
      for (double& l : e.losses) l = rng.uniform(-1, 1);
      ex.push_back(e);
    }
    const auto m = filter_tree_train(ex, {});
    const auto depth = static_cast<std::size_t>(std::ceil(std::log2(static_cast<double>(k))));
    CHECK(m.depth() == depth);
    std::vector<int> seen(k, 0);
    for (const auto& n : m.nodes())
      if (n.leaf()) {
        CHECK(n.hi == n.lo + 1);
        ++seen[n.lo];
      }
    for (int s : seen) CHECK(s == 1);
    for (int i = 0; i < 10; ++i) {
      std::size_t calls = 0;
      const Action a = m.predict(testing_support::random_vector(2, rng), &calls);
      CHECK(a < k);
      CHECK(calls <= depth);
      if ((k & (k - 1)) == 0) CHECK(calls == depth);
    }
  }
}

TEST_CASE("filter tree: negative imputed losses are fine") {
  Rng rng(11);
  std::vector<CostVectorExample> ex;
  for (int i = 0; i < 50; ++i) {
    CostVectorExample e{testing_support::random_vector(2, rng), std::vector<double>(5)};
    for (double& l : e.losses) l = rng.uniform(-8, 8);
    ex.push_back(e);
  }
  const auto m = filter_tree_train(ex, {});
  for (const auto& n : m.nodes())
    if (!n.leaf())
      for (const auto& node : n.classifier.nodes()) CHECK((node.label == 0 || node.label == 1));
  CHECK(std::isfinite(filter_tree_loss(m, ex)));
  std::vector<CostVectorExample> one_action{{{1.0}, {0.0}}};
  CHECK_THROWS_AS(filter_tree_train(one_action, {}), Error);
}
