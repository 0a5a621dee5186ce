#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "stabclust/feature_matrix.hpp"

namespace stabclust {

struct Embedding {
  Matrix coords;  // n x q
  std::vector<std::string> ids;
  std::string method_label;
  Vector explained_variance_ratio;  // PCA only; nonincreasing, sums to <= 1
  Matrix loadings;                  // PCA only; d x q, columns orthonormal
  Vector center;                    // PCA only; column means removed before projection

  Eigen::Index n_rows() const { return coords.rows(); }
  Eigen::Index n_dims() const { return coords.cols(); }
};

struct RetentionCurve {
  std::vector<int> neighborhood_sizes;
  std::vector<double> retention;
  std::string method_label;
};

// Principal component scores of the column-centered matrix. Deterministic:
// each component's largest-magnitude loading is made positive. Components
// beyond the data rank carry zero variance (allowed, with a warning).
Embedding pca(const FeatureMatrix& m, int q, WarningLog* warnings = nullptr);

// Inverse transform (scores -> original space) for round-trip checks.
Matrix pca_reconstruct(const Embedding& e);

struct TsneOptions {
  int max_iter = 1000;
  double early_exaggeration = 12.0;
  int exaggeration_iters = 250;
  double learning_rate = 200.0;
  double momentum_initial = 0.5;
  double momentum_final = 0.8;
  int momentum_switch_iter = 250;
  double q_floor = 1e-12;  // minimum low-dimensional probability
};

struct TsneDiagnostics {
  double kl_initial = 0.0;  // at the initial layout, unexaggerated P
  double kl_final = 0.0;
  int calibration_failures = 0;
};

// Exact O(n^2) t-SNE to 2 dimensions: per-row Gaussian bandwidths calibrated
// by bisection to entropy log(perplexity) within 1e-5, symmetrized joint P,
// Student-t kernel, gradient descent with PCA initialization scaled to sd
// 1e-4 (seeded Gaussian fallback when the PCA init is degenerate).
Embedding tsne(const FeatureMatrix& m, double perplexity, std::uint64_t seed,
               const TsneOptions& opts = {}, WarningLog* warnings = nullptr,
               TsneDiagnostics* diagnostics = nullptr);

// Calibration and objective internals, exposed for numerical verification.
struct TsneAffinities {
  Matrix joint;          // symmetric, nonnegative, sums to 1
  Vector entropy_error;  // |H_i - log(perplexity)| per row, nats
};
TsneAffinities tsne_affinities(const Matrix& x, double perplexity,
                               WarningLog* warnings = nullptr);
double tsne_kl(const Matrix& joint, const Matrix& y, double q_floor = 1e-12);
Matrix tsne_gradient(const Matrix& joint, const Matrix& y, double q_floor = 1e-12);

// Mean over rows of |kNN_high(i) ∩ kNN_low(i)| / k, Euclidean, self excluded,
// distance ties broken by ascending row index.
double neighbor_retention(const FeatureMatrix& high, const Embedding& low, int k);
RetentionCurve retention_curve(const FeatureMatrix& high, const Embedding& low,
                               const std::vector<int>& neighborhood_sizes);

// CSV round trip, header `id,x,y` (extra dimensions get c2, c3, ...).
// Import realigns rows to `ids` and fails listing unknown or absent ids.
void export_embedding(const Embedding& e, const std::string& path);
Embedding import_embedding(const std::string& path, const std::vector<std::string>& ids);

}  // namespace stabclust
