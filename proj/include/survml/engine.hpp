#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "survml/common.hpp"
#include "survml/data.hpp"
#include "survml/losses.hpp"

namespace survml {

/// One node of a flattened tree. Internal nodes route left iff
/// x[feature] <= threshold. Leaves carry a value (regression trees) or the
/// indices of the training rows that reached them (survival trees).
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;
  double gain = 0.0;      // split gain or |log-rank z| for internal nodes
  double sum_grad = 0.0;  // regression trees only
  double sum_hess = 0.0;
  std::size_t count = 0;  // rows that reached the node during fitting
  std::vector<std::size_t> members;

  bool is_leaf() const { return feature < 0; }
  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

/// Nodes in depth-first order, root first.
struct Tree {
  std::vector<TreeNode> nodes;

  std::size_t leaf_index(std::span<const double> x) const;
  double predict(std::span<const double> x) const { return nodes[leaf_index(x)].value; }
  std::size_t leaf_count() const;
  std::size_t depth() const;

  friend bool operator==(const Tree&, const Tree&) = default;
};

struct RegressionTreeParams {
  int max_depth = 4;
  std::size_t min_samples_leaf = 1;
  double min_child_weight = 1e-3;
  double reg_lambda = 1.0;
  double min_split_gain = 0.0;
};

/// Split gain 0.5 * [GL^2/(HL+l) + GR^2/(HR+l) - G^2/(H+l)].
double split_gain(double gl, double hl, double gr, double hr, double lambda);

/// Exact greedy second-order regression tree. `rows` restricts fitting to a
/// subset (all rows when empty).
Tree fit_regression_tree(const Matrix& features, std::span<const double> gradients,
                         std::span<const double> hessians, const RegressionTreeParams& params,
                         std::span<const std::size_t> rows = {});

struct SurvivalTreeParams {
  int max_depth = 8;
  std::size_t min_samples_leaf = 5;
  std::size_t mtry = 0;  // 0: ceil(sqrt(d))
  std::uint64_t seed = 0;
};

/// Log-rank splitting tree. `rows` may repeat indices (bootstrap samples);
/// leaves list the rows that reached them, repeats included.
Tree fit_survival_tree(const Matrix& features, std::span<const SurvivalTarget> targets,
                       const SurvivalTreeParams& params, std::span<const std::size_t> rows = {});

struct BoostParams {
  std::size_t n_rounds = 100;
  double learning_rate = 0.1;
  RegressionTreeParams tree;
  double subsample = 1.0;
  std::uint64_t seed = 0;
};

struct BoostedEnsemble {
  double base_score = 0.0;
  std::vector<Tree> trees;
  double learning_rate = 0.1;
  LossId loss = LossId::Squared;
  std::size_t n_features = 0;
  std::vector<double> loss_trace;  // training loss before round 1 and after each round

  friend bool operator==(const BoostedEnsemble&, const BoostedEnsemble&) = default;
};

/// Second-order boosting. With loss.first_order() the hessians are replaced
/// by 1 and reg_lambda by 0.
BoostedEnsemble boost(const Matrix& features, const Loss& loss, const BoostParams& params);

std::vector<double> predict_ensemble(const BoostedEnsemble& model, const Matrix& features);

}  // namespace survml
