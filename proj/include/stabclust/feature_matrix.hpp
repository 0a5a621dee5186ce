#pragma once

#include <string>
#include <vector>

#include "stabclust/dataset.hpp"

namespace stabclust {

// Feature columns with a missingness mask, mid-pipeline (selected, possibly
// standardized, not yet imputed).
struct MaskedMatrix {
  Matrix values;  // masked cells hold 0.0
  Mask mask;
  std::vector<std::string> ids;
  std::vector<std::string> column_names;

  Eigen::Index n_rows() const { return values.rows(); }
  Eigen::Index n_cols() const { return values.cols(); }
};

// Fully imputed, standardized matrix ready for embedding/clustering.
// `label` names the producing pipeline.
struct FeatureMatrix {
  Matrix values;
  std::vector<std::string> ids;
  std::vector<std::string> column_names;
  std::string label;

  Eigen::Index n_rows() const { return values.rows(); }
  Eigen::Index n_cols() const { return values.cols(); }
};

}  // namespace stabclust
