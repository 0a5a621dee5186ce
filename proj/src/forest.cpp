#include "stabclust/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace stabclust {

namespace {

struct BuildContext {
  const Matrix& x;
  const std::vector<int>* y_class;  // class indices 0..n_classes-1
  const Vector* y_real;
  int n_classes;
  int mtry;
  int min_node_size;
  int max_depth;
};

struct SplitChoice {
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
};

// Best split over the sampled features; candidates are midpoints between
// consecutive distinct sorted values. Ties keep the lowest feature index,
// then the lowest threshold (features are scanned in ascending order and
// thresholds left to right with strict improvement).
SplitChoice best_split(const BuildContext& ctx, const std::vector<int>& rows,
                       const std::vector<int>& features) {
  SplitChoice best;
  const std::size_t n = rows.size();
  std::vector<std::pair<double, int>> order(n);  // (value, row)
  for (int f : features) {
    for (std::size_t i = 0; i < n; ++i) {
      order[i] = {ctx.x(rows[i], f), rows[i]};
    }
    std::sort(order.begin(), order.end());
    if (order.front().first == order.back().first) continue;  // constant in node

    if (ctx.y_class != nullptr) {
      std::vector<int> left_counts(static_cast<std::size_t>(ctx.n_classes), 0);
      std::vector<int> total_counts(static_cast<std::size_t>(ctx.n_classes), 0);
      for (std::size_t i = 0; i < n; ++i) {
        ++total_counts[static_cast<std::size_t>((*ctx.y_class)[static_cast<std::size_t>(order[i].second)])];
      }
      double base = 0.0;
      for (int c : total_counts) base += static_cast<double>(c) * c;
      base /= static_cast<double>(n);
      for (std::size_t i = 0; i + 1 < n; ++i) {
        const int cls = (*ctx.y_class)[static_cast<std::size_t>(order[i].second)];
        ++left_counts[static_cast<std::size_t>(cls)];
        if (order[i].first == order[i + 1].first) continue;
        const double nl = static_cast<double>(i + 1);
        const double nr = static_cast<double>(n - i - 1);
        double sl = 0.0;
        for (std::size_t c = 0; c < left_counts.size(); ++c) {
          const double lc = left_counts[c];
          const double rc = total_counts[c] - left_counts[c];
          sl += lc * lc / nl + rc * rc / nr;
        }
        const double gain = sl - base;
        if (gain > best.gain) {
          best.gain = gain;
          best.feature = f;
          best.threshold = 0.5 * (order[i].first + order[i + 1].first);
        }
      }
    } else {
      double total = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        total += (*ctx.y_real)[order[i].second];
      }
      const double base = total * total / static_cast<double>(n);
      double left_sum = 0.0;
      for (std::size_t i = 0; i + 1 < n; ++i) {
        left_sum += (*ctx.y_real)[order[i].second];
        if (order[i].first == order[i + 1].first) continue;
        const double nl = static_cast<double>(i + 1);
        const double nr = static_cast<double>(n - i - 1);
        const double right_sum = total - left_sum;
        const double gain = left_sum * left_sum / nl + right_sum * right_sum / nr - base;
        if (gain > best.gain) {
          best.gain = gain;
          best.feature = f;
          best.threshold = 0.5 * (order[i].first + order[i + 1].first);
        }
      }
    }
  }
  return best;
}

bool node_is_pure(const BuildContext& ctx, const std::vector<int>& rows) {
  if (ctx.y_class != nullptr) {
    const int first = (*ctx.y_class)[static_cast<std::size_t>(rows.front())];
    for (int r : rows) {
      if ((*ctx.y_class)[static_cast<std::size_t>(r)] != first) return false;
    }
  } else {
    const double first = (*ctx.y_real)[rows.front()];
    for (int r : rows) {
      if ((*ctx.y_real)[r] != first) return false;
    }
  }
  return true;
}

int make_leaf(Tree& tree, const BuildContext& ctx, const std::vector<int>& rows) {
  TreeNode node;
  if (ctx.y_class != nullptr) {
    node.votes.assign(static_cast<std::size_t>(ctx.n_classes), 0);
    for (int r : rows) {
      ++node.votes[static_cast<std::size_t>((*ctx.y_class)[static_cast<std::size_t>(r)])];
    }
  } else {
    double sum = 0.0;
    for (int r : rows) sum += (*ctx.y_real)[r];
    node.value = sum / static_cast<double>(rows.size());
  }
  tree.nodes.push_back(std::move(node));
  return static_cast<int>(tree.nodes.size()) - 1;
}

int build_node(Tree& tree, const BuildContext& ctx, Rng& rng, std::vector<int> rows,
               int depth, std::vector<int>& feature_scratch) {
  const int d = static_cast<int>(ctx.x.cols());
  const bool stop = static_cast<int>(rows.size()) <= ctx.min_node_size ||
                    rows.size() < 2 || (ctx.max_depth > 0 && depth >= ctx.max_depth) ||
                    node_is_pure(ctx, rows);
  if (!stop) {
    // sample mtry distinct features, then evaluate in ascending index order
    std::iota(feature_scratch.begin(), feature_scratch.end(), 0);
    const int mtry = std::min(ctx.mtry, d);
    for (int i = 0; i < mtry; ++i) {
      const std::size_t j = static_cast<std::size_t>(i) +
                            rng.index(static_cast<std::size_t>(d - i));
      std::swap(feature_scratch[static_cast<std::size_t>(i)], feature_scratch[j]);
    }
    std::vector<int> features(feature_scratch.begin(), feature_scratch.begin() + mtry);
    std::sort(features.begin(), features.end());

    const SplitChoice split = best_split(ctx, rows, features);
    if (split.feature >= 0 && split.gain > 0.0) {
      std::vector<int> left_rows;
      std::vector<int> right_rows;
      left_rows.reserve(rows.size());
      right_rows.reserve(rows.size());
      for (int r : rows) {
        (ctx.x(r, split.feature) <= split.threshold ? left_rows : right_rows).push_back(r);
      }
      rows.clear();
      rows.shrink_to_fit();
      const int self = static_cast<int>(tree.nodes.size());
      tree.nodes.emplace_back();
      tree.nodes[static_cast<std::size_t>(self)].feature = split.feature;
      tree.nodes[static_cast<std::size_t>(self)].threshold = split.threshold;
      const int left = build_node(tree, ctx, rng, std::move(left_rows), depth + 1,
                                  feature_scratch);
      const int right = build_node(tree, ctx, rng, std::move(right_rows), depth + 1,
                                   feature_scratch);
      tree.nodes[static_cast<std::size_t>(self)].left = left;
      tree.nodes[static_cast<std::size_t>(self)].right = right;
      return self;
    }
  }
  return make_leaf(tree, ctx, rows);
}

void check_training_input(const Matrix& x, std::size_t n_y) {
  if (static_cast<std::size_t>(x.rows()) != n_y) {
    throw DataError("forest: feature rows and label count differ");
  }
  if (x.rows() < 2) throw DataError("forest: need at least 2 training rows");
  if (!x.allFinite()) throw NumericError("forest: non-finite training values");
}

ForestModel fit_impl(const Matrix& x, const std::vector<int>* y_class,
                     const Vector* y_real, ForestParams params, std::uint64_t seed,
                     const std::vector<std::vector<int>>* tree_rows) {
  const int n = static_cast<int>(x.rows());
  const int d = static_cast<int>(x.cols());
  ForestModel model;
  model.task = y_class != nullptr ? ForestTask::classify : ForestTask::regress;
  model.n_features = d;
  model.seed = seed;

  std::vector<int> class_index;
  int n_classes = 0;
  if (y_class != nullptr) {
    model.class_labels = *y_class;
    std::sort(model.class_labels.begin(), model.class_labels.end());
    model.class_labels.erase(
        std::unique(model.class_labels.begin(), model.class_labels.end()),
        model.class_labels.end());
    n_classes = static_cast<int>(model.class_labels.size());
    class_index.resize(y_class->size());
    for (std::size_t i = 0; i < y_class->size(); ++i) {
      class_index[i] = static_cast<int>(
          std::lower_bound(model.class_labels.begin(), model.class_labels.end(),
                           (*y_class)[i]) -
          model.class_labels.begin());
    }
  }

  if (params.mtry <= 0) {
    params.mtry = y_class != nullptr
                      ? static_cast<int>(std::ceil(std::sqrt(static_cast<double>(d))))
                      : static_cast<int>(std::ceil(static_cast<double>(d) / 3.0));
  }
  if (params.min_node_size <= 0) params.min_node_size = y_class != nullptr ? 1 : 5;
  model.params = params;

  if (tree_rows != nullptr &&
      static_cast<int>(tree_rows->size()) != params.n_trees) {
    throw ConfigError("forest: bootstrap row lists must match n_trees");
  }

  BuildContext ctx{x, y_class != nullptr ? &class_index : nullptr, y_real,
                   n_classes, params.mtry, params.min_node_size, params.max_depth};
  model.trees.resize(static_cast<std::size_t>(params.n_trees));
  std::vector<int> feature_scratch(static_cast<std::size_t>(d));
  for (int t = 0; t < params.n_trees; ++t) {
    Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(t)}));
    std::vector<int> rows;
    if (tree_rows != nullptr) {
      rows = (*tree_rows)[static_cast<std::size_t>(t)];
      if (rows.empty()) throw ConfigError("forest: empty bootstrap row list");
    } else if (params.bootstrap) {
      rows.resize(static_cast<std::size_t>(n));
      for (int i = 0; i < n; ++i) {
        rows[static_cast<std::size_t>(i)] =
            static_cast<int>(rng.index(static_cast<std::size_t>(n)));
      }
    } else {
      rows.resize(static_cast<std::size_t>(n));
      std::iota(rows.begin(), rows.end(), 0);
    }
    build_node(model.trees[static_cast<std::size_t>(t)], ctx, rng, std::move(rows), 0,
               feature_scratch);
  }
  return model;
}

const TreeNode& descend(const Tree& tree, const Matrix& x, Eigen::Index row) {
  int node = 0;
  while (tree.nodes[static_cast<std::size_t>(node)].feature >= 0) {
    const TreeNode& nd = tree.nodes[static_cast<std::size_t>(node)];
    node = x(row, nd.feature) <= nd.threshold ? nd.left : nd.right;
  }
  return tree.nodes[static_cast<std::size_t>(node)];
}

int argmax_vote(const std::vector<int>& votes) {
  int best = 0;
  for (std::size_t c = 1; c < votes.size(); ++c) {
    if (votes[c] > votes[static_cast<std::size_t>(best)]) best = static_cast<int>(c);
  }
  return best;
}

}  // namespace

ForestModel forest_fit_classifier(const Matrix& x, const std::vector<int>& y,
                                  const ForestParams& params, std::uint64_t seed) {
  check_training_input(x, y.size());
  return fit_impl(x, &y, nullptr, params, seed, nullptr);
}

ForestModel forest_fit_regressor(const Matrix& x, const Vector& y,
                                 const ForestParams& params, std::uint64_t seed) {
  check_training_input(x, static_cast<std::size_t>(y.size()));
  return fit_impl(x, nullptr, &y, params, seed, nullptr);
}

ForestModel forest_fit_classifier_with_bootstrap(
    const Matrix& x, const std::vector<int>& y, const ForestParams& params,
    std::uint64_t seed, const std::vector<std::vector<int>>& tree_rows) {
  check_training_input(x, y.size());
  return fit_impl(x, &y, nullptr, params, seed, &tree_rows);
}

ForestModel forest_fit_regressor_with_bootstrap(
    const Matrix& x, const Vector& y, const ForestParams& params, std::uint64_t seed,
    const std::vector<std::vector<int>>& tree_rows) {
  check_training_input(x, static_cast<std::size_t>(y.size()));
  return fit_impl(x, nullptr, &y, params, seed, &tree_rows);
}

std::vector<int> forest_predict_class(const ForestModel& model, const Matrix& x) {
  if (model.task != ForestTask::classify) {
    throw ConfigError("forest: model is not a classifier");
  }
  if (x.cols() != model.n_features) {
    throw DataError("forest: feature count does not match training");
  }
  std::vector<int> out(static_cast<std::size_t>(x.rows()));
  std::vector<int> forest_votes(model.class_labels.size());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    std::fill(forest_votes.begin(), forest_votes.end(), 0);
    for (const Tree& tree : model.trees) {
      const TreeNode& leaf = descend(tree, x, r);
      ++forest_votes[static_cast<std::size_t>(argmax_vote(leaf.votes))];
    }
    out[static_cast<std::size_t>(r)] =
        model.class_labels[static_cast<std::size_t>(argmax_vote(forest_votes))];
  }
  return out;
}

Vector forest_predict_value(const ForestModel& model, const Matrix& x) {
  if (model.task != ForestTask::regress) {
    throw ConfigError("forest: model is not a regressor");
  }
  if (x.cols() != model.n_features) {
    throw DataError("forest: feature count does not match training");
  }
  Vector out = Vector::Zero(x.rows());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    double sum = 0.0;
    for (const Tree& tree : model.trees) {
      sum += descend(tree, x, r).value;
    }
    out[r] = sum / static_cast<double>(model.trees.size());
  }
  return out;
}

}  // namespace stabclust
