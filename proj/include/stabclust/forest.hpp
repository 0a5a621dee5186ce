#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stabclust/dataset.hpp"

namespace stabclust {

// Random forest classifier/regressor with fully deterministic training:
// per-tree seed = derive_seed(master seed, {tree index}), node feature
// subsampling drawn from the tree stream in build order, split ties broken
// by lowest feature index then lowest threshold.

enum class ForestTask { classify, regress };

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;      // regression leaf: mean response
  std::vector<int> votes;  // classification leaf: per-class counts
};

struct Tree {
  std::vector<TreeNode> nodes;  // node 0 is the root
};

struct ForestParams {
  int n_trees = 100;
  int mtry = 0;           // features tried per node; 0 = ceil(sqrt(d)) / ceil(d/3)
  int min_node_size = 0;  // nodes at or below this size become leaves; 0 = 1 / 5
  int max_depth = 0;      // 0 = unlimited
  bool bootstrap = true;
};

struct ForestModel {
  ForestTask task = ForestTask::classify;
  std::vector<Tree> trees;
  int n_features = 0;
  std::vector<int> class_labels;  // sorted distinct labels (classification)
  ForestParams params;
  std::uint64_t seed = 0;
};

ForestModel forest_fit_classifier(const Matrix& x, const std::vector<int>& y,
                                  const ForestParams& params, std::uint64_t seed);
ForestModel forest_fit_regressor(const Matrix& x, const Vector& y,
                                 const ForestParams& params, std::uint64_t seed);

// Same fits with caller-supplied bootstrap rows per tree (one vector per
// tree); used to verify that predictions depend only on the row multiset
// under a consistent index remapping.
ForestModel forest_fit_classifier_with_bootstrap(
    const Matrix& x, const std::vector<int>& y, const ForestParams& params,
    std::uint64_t seed, const std::vector<std::vector<int>>& tree_rows);
ForestModel forest_fit_regressor_with_bootstrap(
    const Matrix& x, const Vector& y, const ForestParams& params, std::uint64_t seed,
    const std::vector<std::vector<int>>& tree_rows);

// Majority vote across trees; ties resolve to the smaller label.
std::vector<int> forest_predict_class(const ForestModel& model, const Matrix& x);
// Mean of per-tree leaf responses.
Vector forest_predict_value(const ForestModel& model, const Matrix& x);

}  // namespace stabclust
