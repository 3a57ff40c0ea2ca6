#include "dreval/learners.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <string>

#include "dreval/error.hpp"
#include "dreval/numeric.hpp"
#include "dreval/random.hpp"

namespace dreval {

double dlm_learning_rate(std::size_t iteration) {
  require(iteration >= 1, "dlm: iterations are counted from 1");
  return 0.5 * std::pow(static_cast<double>(iteration), -0.3);
}

namespace {

void check_example_shape(const WeightMatrix& w, const CostVectorExample& ex) {
  if (ex.context.size() != w.cols())
    fail(ErrorCode::invalid_input, "dlm: context dimension " + std::to_string(ex.context.size()) +
                                       " does not match weights (" + std::to_string(w.cols()) + ")");
  if (ex.losses.size() != w.rows())
    fail(ErrorCode::invalid_input, "dlm: loss vector has " + std::to_string(ex.losses.size()) +
                                       " entries, weights have " + std::to_string(w.rows()) + " actions");
}

// Returns (a1, a2) for one example; `scores` is scratch of size k.
std::pair<Action, Action> towards_better_pair(const WeightMatrix& w, const CostVectorExample& ex, double epsilon,
                                              std::vector<double>& scores) {
  const std::size_t k = w.rows();
  for (Action a = 0; a < k; ++a) scores[a] = dot(w.row(a), ex.context);
  const Action a2 = argmax_lowest(scores);
  for (Action a = 0; a < k; ++a) scores[a] -= epsilon * ex.losses[a];
  const Action a1 = argmax_lowest(scores);
  return {a1, a2};
}

bool lexicographic_less(const CostVectorExample& a, const CostVectorExample& b) {
  if (a.context != b.context) return a.context < b.context;
  return a.losses < b.losses;
}

DlmRun run_restart(std::span<const CostVectorExample* const> examples, std::size_t k, std::size_t d,
                   const DlmConfig& config, Rng& rng) {
  DlmRun run;
  run.policy.weights = WeightMatrix(k, d);
  for (double& v : run.policy.weights.data()) v = rng.uniform(-config.perturbation_scale, config.perturbation_scale);

  std::vector<double> scores(k);
  WeightMatrix delta(k, d);
  const double inv_n = 1.0 / static_cast<double>(examples.size());
  for (std::size_t t = 1; t <= config.max_iterations; ++t) {
    std::fill(delta.data().begin(), delta.data().end(), 0.0);
    for (const CostVectorExample* ex : examples) {
      const auto [a1, a2] = towards_better_pair(run.policy.weights, *ex, config.epsilon, scores);
      if (a1 == a2) continue;
      auto up = delta.row(a1);
      auto down = delta.row(a2);
      for (std::size_t j = 0; j < d; ++j) {
        up[j] += ex->context[j];
        down[j] -= ex->context[j];
      }
    }
    // the summed per-example steps, all taken at eta(t)
    const double step = dlm_learning_rate(t);
    double change = 0.0;
    auto w = run.policy.weights.data();
    auto g = delta.data();
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double before = w[i];
      w[i] += step * g[i];
      change = std::max(change, std::abs(w[i] - before));
    }
    run.iterations = t;
    if (change < config.convergence_tol) {
      run.converged = true;
      break;
    }
  }

  CompensatedSum loss;
  for (const CostVectorExample* ex : examples) loss.add(ex->losses[policy_apply(run.policy, ex->context)]);
  run.training_loss = loss.value() * inv_n;
  return run;
}

}  // namespace

Policy dlm_update(Policy theta, const CostVectorExample& ex, double eta, double epsilon) {
  require(eta > 0.0 && epsilon > 0.0, "dlm_update: eta and epsilon must be positive");
  check_example_shape(theta.weights, ex);
  std::vector<double> scores(theta.actions());
  const auto [a1, a2] = towards_better_pair(theta.weights, ex, epsilon, scores);
  if (a1 == a2) return theta;
  auto up = theta.weights.row(a1);
  auto down = theta.weights.row(a2);
  for (std::size_t j = 0; j < ex.context.size(); ++j) {
    up[j] += eta * ex.context[j];
    down[j] -= eta * ex.context[j];
  }
  return theta;
}

DlmResult dlm_train_detailed(std::span<const CostVectorExample> examples, const DlmConfig& config,
                             std::uint64_t seed) {
  if (examples.empty()) fail(ErrorCode::invalid_input, "dlm_train: no training examples");
  require(config.epsilon > 0.0 && config.restarts >= 1 && config.max_iterations >= 1 &&
              config.convergence_tol > 0.0 && config.perturbation_scale > 0.0,
          "dlm_train: configuration values must be positive");
  const std::size_t k = examples.front().losses.size();
  const std::size_t d = examples.front().context.size();
  require(k >= 1, "dlm_train: empty loss vectors");
  for (const auto& ex : examples) {
    require(ex.losses.size() == k, "dlm_train: loss vectors differ in length");
    require(ex.context.size() == d, "dlm_train: contexts differ in dimension");
  }

  // A canonical order makes every floating-point accumulation independent of
  // how the caller happened to order the examples.
  std::vector<const CostVectorExample*> order;
  order.reserve(examples.size());
  for (const auto& ex : examples) order.push_back(&ex);
  std::stable_sort(order.begin(), order.end(),
                   [](const CostVectorExample* a, const CostVectorExample* b) { return lexicographic_less(*a, *b); });

  DlmResult result;
  for (std::size_t r = 0; r < config.restarts; ++r) {
    Rng rng(seed, "dlm-restart", {r});
    result.runs.push_back(run_restart(order, k, d, config, rng));
    if (result.runs[r].training_loss < result.runs[result.best_restart].training_loss) result.best_restart = r;
  }
  result.policy = result.runs[result.best_restart].policy;
  return result;
}

Policy dlm_train(std::span<const CostVectorExample> examples, const DlmConfig& config, std::uint64_t seed) {
  return dlm_train_detailed(examples, config, seed).policy;
}

// ---------------------------------------------------------------------------

BinaryClassifier BinaryClassifier::constant(int label) {
  BinaryClassifier c;
  BinaryClassifier::Node leaf;
  leaf.label = label;
  c.nodes_.push_back(leaf);
  return c;
}

int BinaryClassifier::predict(std::span<const double> x) const {
  std::size_t i = 0;
  while (!nodes_[i].leaf()) {
    const Node& n = nodes_[i];
    i = static_cast<std::size_t>(x[n.feature] <= n.threshold ? n.left : n.right);
  }
  return nodes_[i].label;
}

std::size_t BinaryClassifier::depth() const {
  std::vector<std::size_t> level(nodes_.size(), 0);
  std::size_t deepest = 0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].leaf()) {
      deepest = std::max(deepest, level[i]);
      continue;
    }
    level[static_cast<std::size_t>(nodes_[i].left)] = level[i] + 1;
    level[static_cast<std::size_t>(nodes_[i].right)] = level[i] + 1;
  }
  return deepest;
}

std::size_t BinaryClassifier::leaf_count() const {
  return static_cast<std::size_t>(std::count_if(nodes_.begin(), nodes_.end(), [](const Node& n) { return n.leaf(); }));
}

namespace {

// Weighted Gini impurity times the node weight: W - (w0^2 + w1^2) / W.
double weighted_gini(double w0, double w1) {
  const double w = w0 + w1;
  return w > 0.0 ? w - (w0 * w0 + w1 * w1) / w : 0.0;
}

struct TreeBuilder {
  std::span<const WeightedBinaryExample> examples;
  const BinaryTreeConfig& config;
  std::size_t dimension;
  std::vector<BinaryClassifier::Node>& nodes;

  struct Split {
    std::size_t feature = 0;
    double threshold = 0.0;
    double impurity = 0.0;
    bool found = false;
  };

  Split best_split(const std::vector<std::size_t>& idx) const {
    Split best;
    const std::size_t n = idx.size();
    const std::size_t min_leaf = config.min_samples_leaf;
    std::vector<std::size_t> sorted(idx);
    for (std::size_t f = 0; f < dimension; ++f) {
      std::stable_sort(sorted.begin(), sorted.end(), [&](std::size_t a, std::size_t b) {
        return examples[a].features[f] < examples[b].features[f];
      });
      double total[2] = {0.0, 0.0};
      for (std::size_t i : sorted) total[examples[i].label] += examples[i].weight;
      double left[2] = {0.0, 0.0};
      for (std::size_t pos = 0; pos + 1 < n; ++pos) {
        const auto& e = examples[sorted[pos]];
        left[e.label] += e.weight;
        const double here = e.features[f];
        const double next = examples[sorted[pos + 1]].features[f];
        if (!(here < next)) continue;
        const std::size_t left_count = pos + 1;
        if (left_count < min_leaf || n - left_count < min_leaf) continue;
        const double impurity =
            weighted_gini(left[0], left[1]) + weighted_gini(total[0] - left[0], total[1] - left[1]);
        if (!best.found || impurity < best.impurity) {
          best.found = true;
          best.feature = f;
          best.impurity = impurity;
          // midpoint, but never equal to `next` after rounding
          double mid = here + (next - here) / 2.0;
          if (!(mid < next)) mid = here;
          best.threshold = mid;
        }
      }
    }
    return best;
  }

  int build(const std::vector<std::size_t>& idx, std::size_t depth) {
    double w[2] = {0.0, 0.0};
    for (std::size_t i : idx) w[examples[i].label] += examples[i].weight;
    const int node = static_cast<int>(nodes.size());
    nodes.emplace_back();
    nodes.back().label = w[1] > w[0] ? 1 : 0;

    const bool pure = w[0] == 0.0 || w[1] == 0.0;
    if (pure || depth >= config.max_depth || idx.size() < 2 * config.min_samples_leaf) return node;
    const Split split = best_split(idx);
    if (!split.found) return node;

    std::vector<std::size_t> left, right;
    for (std::size_t i : idx) (examples[i].features[split.feature] <= split.threshold ? left : right).push_back(i);
    const int l = build(left, depth + 1);
    const int r = build(right, depth + 1);
    nodes[static_cast<std::size_t>(node)].feature = split.feature;
    nodes[static_cast<std::size_t>(node)].threshold = split.threshold;
    nodes[static_cast<std::size_t>(node)].left = l;
    nodes[static_cast<std::size_t>(node)].right = r;
    return node;
  }
};

}  // namespace

BinaryClassifier binary_tree_learn(std::span<const WeightedBinaryExample> examples, const BinaryTreeConfig& config) {
  require(!examples.empty(), "binary_tree_learn: no examples");
  require(config.max_depth >= 1 && config.min_samples_leaf >= 1,
          "binary_tree_learn: max_depth and min_samples_leaf must be positive");
  const std::size_t d = examples.front().features.size();
  double total = 0.0;
  for (const auto& e : examples) {
    require(e.features.size() == d, "binary_tree_learn: feature vectors differ in dimension");
    require(e.label == 0 || e.label == 1, "binary_tree_learn: labels must be 0 or 1");
    require(std::isfinite(e.weight) && e.weight >= 0.0, "binary_tree_learn: weights must be finite and nonnegative");
    total += e.weight;
  }
  if (!(total > 0.0)) fail(ErrorCode::invalid_input, "binary_tree_learn: all example weights are zero");

  BinaryClassifier out;
  std::vector<std::size_t> idx(examples.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  TreeBuilder builder{examples, config, d, out.nodes_};
  builder.build(idx, 0);
  return out;
}

// ---------------------------------------------------------------------------

namespace {

int add_subtree(std::vector<FilterTreeModel::Node>& nodes, std::size_t lo, std::size_t hi) {
  const int id = static_cast<int>(nodes.size());
  nodes.emplace_back();
  nodes.back().lo = lo;
  nodes.back().hi = hi;
  if (hi - lo >= 2) {
    const std::size_t mid = lo + (hi - lo + 1) / 2;
    const int l = add_subtree(nodes, lo, mid);
    const int r = add_subtree(nodes, mid, hi);
    nodes[static_cast<std::size_t>(id)].left = l;
    nodes[static_cast<std::size_t>(id)].right = r;
  }
  return id;
}

// Trains the subtree rooted at `id` and returns, per example, the action that
// survives the subtree's tournament.
std::vector<Action> train_subtree(std::vector<FilterTreeModel::Node>& nodes, int id,
                                  std::span<const CostVectorExample> examples, const BinaryTreeConfig& config) {
  auto& node = nodes[static_cast<std::size_t>(id)];
  if (node.leaf()) return std::vector<Action>(examples.size(), node.lo);
  const int left_id = node.left, right_id = node.right;
  const auto from_left = train_subtree(nodes, left_id, examples, config);
  const auto from_right = train_subtree(nodes, right_id, examples, config);

  std::vector<WeightedBinaryExample> binary;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const double l_left = examples[i].losses[from_left[i]];
    const double l_right = examples[i].losses[from_right[i]];
    if (l_left == l_right) continue;
    binary.push_back({examples[i].context, l_left < l_right ? 0 : 1, std::abs(l_left - l_right)});
  }
  BinaryClassifier clf = binary.empty() ? BinaryClassifier::constant(0) : binary_tree_learn(binary, config);

  std::vector<Action> winners(examples.size());
  for (std::size_t i = 0; i < examples.size(); ++i)
    winners[i] = clf.predict(examples[i].context) == 0 ? from_left[i] : from_right[i];
  nodes[static_cast<std::size_t>(id)].classifier = std::move(clf);
  return winners;
}

}  // namespace

std::size_t FilterTreeModel::depth() const {
  std::size_t deepest = 0;
  std::vector<std::pair<int, std::size_t>> stack{{0, 0}};
  while (!stack.empty()) {
    const auto [id, level] = stack.back();
    stack.pop_back();
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    if (n.leaf()) {
      deepest = std::max(deepest, level);
    } else {
      stack.push_back({n.left, level + 1});
      stack.push_back({n.right, level + 1});
    }
  }
  return deepest;
}

Action FilterTreeModel::predict(std::span<const double> x, std::size_t* calls) const {
  std::size_t count = 0;
  std::size_t i = 0;
  while (!nodes_[i].leaf()) {
    ++count;
    i = static_cast<std::size_t>(nodes_[i].classifier.predict(x) == 0 ? nodes_[i].left : nodes_[i].right);
  }
  if (calls) *calls = count;
  return nodes_[i].lo;
}

FilterTreeModel filter_tree_train(std::span<const CostVectorExample> examples, const BinaryTreeConfig& config) {
  require(!examples.empty(), "filter_tree_train: no training examples");
  const std::size_t k = examples.front().losses.size();
  if (k < 2) fail(ErrorCode::invalid_input, "filter_tree_train: need at least 2 actions, got " + std::to_string(k));
  const std::size_t d = examples.front().context.size();
  for (const auto& ex : examples) {
    require(ex.losses.size() == k, "filter_tree_train: loss vectors differ in length");
    require(ex.context.size() == d, "filter_tree_train: contexts differ in dimension");
  }
  FilterTreeModel model;
  model.actions_ = k;
  add_subtree(model.nodes_, 0, k);
  train_subtree(model.nodes_, 0, examples, config);
  return model;
}

Action filter_tree_predict(const FilterTreeModel& model, std::span<const double> x) { return model.predict(x); }

double filter_tree_loss(const FilterTreeModel& model, std::span<const CostVectorExample> examples) {
  require(!examples.empty(), "filter_tree_loss: no examples");
  CompensatedSum s;
  for (const auto& ex : examples) s.add(ex.losses[model.predict(ex.context)]);
  return s.value() / static_cast<double>(examples.size());
}

}  // namespace dreval
