#pragma once

#include <cstdint>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "stabclust/feature_matrix.hpp"

namespace stabclust {

// Labels are 1..k, every cluster nonempty. Downstream comparisons use ARI
// only, so label identity is arbitrary but deterministic.
struct ClusterAssignment {
  std::vector<int> labels;
  int k = 0;
  std::vector<std::string> ids;
  std::string method_label;
  std::string pipeline_label;
  double objective = std::numeric_limits<double>::quiet_NaN();  // k-means WCSS
};

// k-means++ seeding + Lloyd iterations to an assignment fixpoint (max 300).
// Empty clusters are repaired by reassigning the point farthest from its
// center. The within-cluster sum of squares is checked nonincreasing.
ClusterAssignment kmeans(const FeatureMatrix& m, int k, std::uint64_t seed,
                         WarningLog* warnings = nullptr);

enum class Linkage { complete, ward, average };

struct MergeStep {
  int a = 0;  // merged cluster indices (smallest member row index each)
  int b = 0;
  double dist = 0.0;
};

// Agglomeration via Lance-Williams updates on a dissimilarity matrix
// (ward expects squared Euclidean). Ties merge the lowest index pair first.
std::vector<MergeStep> linkage_merge_sequence(Matrix dissimilarity, Linkage linkage);

ClusterAssignment hierarchical(const FeatureMatrix& m, int k, Linkage linkage);
ClusterAssignment hierarchical_from_distance(const Matrix& dissimilarity, int k,
                                             Linkage linkage,
                                             const std::vector<std::string>& ids);

// Unweighted symmetric kNN graph (union of directed edges), normalized
// Laplacian, eigenvectors of the k smallest eigenvalues (full symmetric
// eigendecomposition), row-normalized, then seeded k-means.
ClusterAssignment spectral(const FeatureMatrix& m, int k, int n_neighbors,
                           std::uint64_t seed, WarningLog* warnings = nullptr);

// Laplacian eigenvalues of the kNN graph, ascending; exposed for spectral
// diagnostics (zero multiplicity counts graph components).
Vector spectral_laplacian_eigenvalues(const FeatureMatrix& m, int n_neighbors);

// Clustering method abstraction used by the stability search; production
// implementations wrap the three families, tests may inject labelers.
class ClusterMethod {
 public:
  virtual ~ClusterMethod() = default;
  virtual std::string label() const = 0;
  virtual ClusterAssignment run(const FeatureMatrix& m, int k, std::uint64_t seed,
                                WarningLog* warnings) const = 0;
};

struct ClusterMethodSpec {
  enum class Kind { kmeans, hierarchical, spectral };
  Kind kind = Kind::kmeans;
  Linkage linkage = Linkage::complete;  // hierarchical only
  int n_neighbors = 30;                 // spectral only

  std::string label() const;
};

std::unique_ptr<ClusterMethod> make_cluster_method(const ClusterMethodSpec& spec);

}  // namespace stabclust
