#pragma once

// Cost-sensitive policy learners: direct loss minimization over linear
// policies, and the filter-tree reduction to importance-weighted binary
// classification with an in-repo weighted decision tree as base learner.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "dreval/core.hpp"

namespace dreval {

// ---------------------------------------------------------------------------
// Direct loss minimization

struct DlmConfig {
  double epsilon = 0.1;
  std::size_t restarts = 20;
  std::size_t max_iterations = 1000;
  double convergence_tol = 1e-6;     // on the infinity norm of the weight change
  double perturbation_scale = 0.01;  // initial weights uniform in [-scale, scale]
};

/// eta(t) = t^-0.3 / 2 for batched iteration t >= 1.
double dlm_learning_rate(std::size_t iteration);

/// One "towards-better" step on a single example:
///   a1 = argmax_a x.theta_a - epsilon l_a,  a2 = argmax_a x.theta_a,
///   theta_a1 += eta x,  theta_a2 -= eta x.
Policy dlm_update(Policy theta, const CostVectorExample& ex, double eta, double epsilon);

struct DlmRun {
  Policy policy;
  double training_loss = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

struct DlmResult {
  Policy policy;                // the selected restart
  std::size_t best_restart = 0;
  std::vector<DlmRun> runs;     // every restart, in order
};

/// Full-batch DLM with random restarts; returns the restart with the lowest
/// mean training loss (first restart wins ties). Bit-identical for a fixed
/// seed and invariant to the order of `examples`.
DlmResult dlm_train_detailed(std::span<const CostVectorExample> examples, const DlmConfig& config,
                             std::uint64_t seed);
Policy dlm_train(std::span<const CostVectorExample> examples, const DlmConfig& config, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Weighted binary decision tree

struct BinaryTreeConfig {
  std::size_t max_depth = 8;
  std::size_t min_samples_leaf = 2;
};

struct WeightedBinaryExample {
  std::span<const double> features;
  int label = 0;  // 0 or 1
  double weight = 1.0;
};

/// CART-style tree grown greedily on weighted Gini impurity. Leaves predict the
/// weighted-majority label (0 on ties).
class BinaryClassifier {
 public:
  static BinaryClassifier constant(int label);

  int predict(std::span<const double> x) const;
  std::size_t depth() const;
  std::size_t leaf_count() const;

  struct Node {
    std::size_t feature = 0;
    double threshold = 0.0;  // go left when x[feature] <= threshold
    int left = -1;
    int right = -1;
    int label = 0;
    bool leaf() const noexcept { return left < 0; }
  };
  std::span<const Node> nodes() const noexcept { return nodes_; }

 private:
  friend BinaryClassifier binary_tree_learn(std::span<const WeightedBinaryExample>, const BinaryTreeConfig&);
  std::vector<Node> nodes_;
};

BinaryClassifier binary_tree_learn(std::span<const WeightedBinaryExample> examples, const BinaryTreeConfig& config);

// ---------------------------------------------------------------------------
// Filter tree

/// Balanced tournament over the action labels; every internal node holds a
/// binary classifier choosing between the winners of its two subtrees
/// (label 0 = left subtree).
class FilterTreeModel {
 public:
  struct Node {
    std::size_t lo = 0, hi = 0;  // actions [lo, hi)
    int left = -1, right = -1;
    BinaryClassifier classifier;
    bool leaf() const noexcept { return left < 0; }
  };

  std::size_t actions() const noexcept { return actions_; }
  std::size_t depth() const;
  std::span<const Node> nodes() const noexcept { return nodes_; }

  /// Root-to-leaf prediction; `calls` receives the number of classifier evaluations.
  Action predict(std::span<const double> x, std::size_t* calls = nullptr) const;

 private:
  friend FilterTreeModel filter_tree_train(std::span<const CostVectorExample>, const BinaryTreeConfig&);
  std::size_t actions_ = 0;
  std::vector<Node> nodes_;  // nodes_[0] is the root
};

FilterTreeModel filter_tree_train(std::span<const CostVectorExample> examples, const BinaryTreeConfig& config);
Action filter_tree_predict(const FilterTreeModel& model, std::span<const double> x);

/// Mean loss of the filter tree's choices on fully specified cost vectors.
double filter_tree_loss(const FilterTreeModel& model, std::span<const CostVectorExample> examples);

}  // namespace dreval
