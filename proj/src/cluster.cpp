#include "stabclust/cluster.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>

namespace stabclust {

namespace {

void check_input(const FeatureMatrix& m, int k, const char* who) {
  if (!m.values.allFinite()) {
    throw NumericError(std::string(who) + ": non-finite input values");
  }
  if (k < 1) throw ConfigError(std::string(who) + ": k must be >= 1");
  if (k > m.values.rows()) {
    throw DataError(std::string(who) + ": k exceeds the number of rows");
  }
}

double wcss(const Matrix& x, const std::vector<int>& assign, const Matrix& centers) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    total += (x.row(i) - centers.row(assign[static_cast<std::size_t>(i)])).squaredNorm();
  }
  return total;
}

struct DisjointSet {
  std::vector<int> parent;

  explicit DisjointSet(int n) : parent(static_cast<std::size_t>(n)) {
    std::iota(parent.begin(), parent.end(), 0);
  }
  int find(int a) {
    while (parent[static_cast<std::size_t>(a)] != a) {
      parent[static_cast<std::size_t>(a)] =
          parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(a)])];
      a = parent[static_cast<std::size_t>(a)];
    }
    return a;
  }
  void unite(int a, int b) { parent[static_cast<std::size_t>(find(b))] = find(a); }
};

// Labels 1..k ordered by each cluster's smallest member row.
std::vector<int> labels_from_merges(int n, const std::vector<MergeStep>& merges,
                                    int n_merges) {
  DisjointSet ds(n);
  for (int s = 0; s < n_merges; ++s) ds.unite(merges[static_cast<std::size_t>(s)].a,
                                              merges[static_cast<std::size_t>(s)].b);
  std::vector<int> root_label(static_cast<std::size_t>(n), 0);
  std::vector<int> labels(static_cast<std::size_t>(n));
  int next = 0;
  for (int i = 0; i < n; ++i) {
    const int r = ds.find(i);
    if (root_label[static_cast<std::size_t>(r)] == 0) root_label[static_cast<std::size_t>(r)] = ++next;
    labels[static_cast<std::size_t>(i)] = root_label[static_cast<std::size_t>(r)];
  }
  return labels;
}

}  // namespace

ClusterAssignment kmeans(const FeatureMatrix& m, int k, std::uint64_t seed,
                         WarningLog* warnings) {
  check_input(m, k, "kmeans");
  const Matrix& x = m.values;
  const Eigen::Index n = x.rows();
  const Eigen::Index d = x.cols();
  Rng rng(seed);

  // k-means++ seeding
  std::vector<Eigen::Index> center_rows;
  center_rows.reserve(static_cast<std::size_t>(k));
  std::vector<char> chosen(static_cast<std::size_t>(n), 0);
  Vector dist2 = Vector::Constant(n, std::numeric_limits<double>::infinity());
  center_rows.push_back(static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(n))));
  chosen[static_cast<std::size_t>(center_rows[0])] = 1;
  for (int c = 1; c < k; ++c) {
    const Eigen::Index last = center_rows.back();
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      dist2[i] = std::min(dist2[i], (x.row(i) - x.row(last)).squaredNorm());
      total += dist2[i];
    }
    Eigen::Index pick = -1;
    if (total > 0.0) {
      const double target = rng.uniform() * total;
      double cum = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        cum += dist2[i];
        if (cum >= target && dist2[i] > 0.0) {
          pick = i;
          break;
        }
      }
      if (pick < 0) {  // rounding spill: last point with positive weight
        for (Eigen::Index i = n - 1; i >= 0; --i) {
          if (dist2[i] > 0.0) {
            pick = i;
            break;
          }
        }
      }
    }
    if (pick < 0) {  // duplicate-heavy data: first unchosen row
      for (Eigen::Index i = 0; i < n; ++i) {
        if (!chosen[static_cast<std::size_t>(i)]) {
          pick = i;
          break;
        }
      }
    }
    center_rows.push_back(pick);
    chosen[static_cast<std::size_t>(pick)] = 1;
  }

  Matrix centers(k, d);
  for (int c = 0; c < k; ++c) centers.row(c) = x.row(center_rows[static_cast<std::size_t>(c)]);

  std::vector<int> assign(static_cast<std::size_t>(n), 0);
  std::vector<int> counts(static_cast<std::size_t>(k), 0);
  double prev_obj = std::numeric_limits<double>::infinity();
  for (int iter = 0; iter < 300; ++iter) {
    // assignment step; nearest center, ties to the lowest center index
    bool changed = false;
    std::fill(counts.begin(), counts.end(), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      int best = 0;
      double best_d = (x.row(i) - centers.row(0)).squaredNorm();
      for (int c = 1; c < k; ++c) {
        const double dd = (x.row(i) - centers.row(c)).squaredNorm();
        if (dd < best_d) {
          best_d = dd;
          best = c;
        }
      }
      if (assign[static_cast<std::size_t>(i)] != best) {
        assign[static_cast<std::size_t>(i)] = best;
        changed = true;
      }
      ++counts[static_cast<std::size_t>(best)];
    }
    // empty-cluster repair: move the point farthest from its center
    for (int c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] > 0) continue;
      Eigen::Index farthest = -1;
      double far_d = -1.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        const int a = assign[static_cast<std::size_t>(i)];
        if (counts[static_cast<std::size_t>(a)] <= 1) continue;  // keep donors nonempty
        const double dd = (x.row(i) - centers.row(a)).squaredNorm();
        if (dd > far_d) {
          far_d = dd;
          farthest = i;
        }
      }
      if (farthest < 0) throw NumericError("kmeans: unable to repair empty cluster");
      --counts[static_cast<std::size_t>(assign[static_cast<std::size_t>(farthest)])];
      assign[static_cast<std::size_t>(farthest)] = c;
      counts[static_cast<std::size_t>(c)] = 1;
      changed = true;
    }
    // update step
    centers.setZero();
    for (Eigen::Index i = 0; i < n; ++i) {
      centers.row(assign[static_cast<std::size_t>(i)]) += x.row(i);
    }
    for (int c = 0; c < k; ++c) {
      centers.row(c) /= static_cast<double>(counts[static_cast<std::size_t>(c)]);
    }
    const double obj = wcss(x, assign, centers);
    if (obj > prev_obj * (1.0 + 1e-9) + 1e-12) {
      throw NumericError("kmeans: objective increased across Lloyd iterations");
    }
    prev_obj = obj;
    if (!changed) break;
  }

  ClusterAssignment out;
  out.k = k;
  out.ids = m.ids;
  out.method_label = "kmeans";
  out.pipeline_label = m.label;
  out.objective = prev_obj;
  out.labels.resize(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    out.labels[static_cast<std::size_t>(i)] = assign[static_cast<std::size_t>(i)] + 1;
  }
  (void)warnings;
  return out;
}

std::vector<MergeStep> linkage_merge_sequence(Matrix d, Linkage linkage) {
  const int n = static_cast<int>(d.rows());
  if (d.cols() != n) throw DataError("linkage: dissimilarity matrix must be square");
  std::vector<MergeStep> merges;
  if (n <= 1) return merges;
  merges.reserve(static_cast<std::size_t>(n - 1));

  std::vector<char> active(static_cast<std::size_t>(n), 1);
  std::vector<double> size(static_cast<std::size_t>(n), 1.0);
  std::vector<int> nn_idx(static_cast<std::size_t>(n), -1);
  std::vector<double> nn_dist(static_cast<std::size_t>(n), 0.0);

  // nn over positions j > i; a cluster stored at position p always has
  // smallest member p, so ties on (dist, i, j) give the lowest index pair
  auto recompute_nn = [&](int i) {
    nn_idx[static_cast<std::size_t>(i)] = -1;
    double best = std::numeric_limits<double>::infinity();
    for (int j = i + 1; j < n; ++j) {
      if (!active[static_cast<std::size_t>(j)]) continue;
      if (d(i, j) < best) {
        best = d(i, j);
        nn_idx[static_cast<std::size_t>(i)] = j;
      }
    }
    nn_dist[static_cast<std::size_t>(i)] = best;
  };
  for (int i = 0; i < n; ++i) recompute_nn(i);

  for (int step = 0; step < n - 1; ++step) {
    int bi = -1;
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
      if (!active[static_cast<std::size_t>(i)] || nn_idx[static_cast<std::size_t>(i)] < 0) {
        continue;
      }
      if (nn_dist[static_cast<std::size_t>(i)] < best) {
        best = nn_dist[static_cast<std::size_t>(i)];
        bi = i;
      }
    }
    const int i = bi;
    const int j = nn_idx[static_cast<std::size_t>(i)];
    merges.push_back({i, j, best});

    const double si = size[static_cast<std::size_t>(i)];
    const double sj = size[static_cast<std::size_t>(j)];
    const double dij = d(i, j);
    for (int h = 0; h < n; ++h) {
      if (!active[static_cast<std::size_t>(h)] || h == i || h == j) continue;
      const double dih = d(i, h);
      const double djh = d(j, h);
      double nd = 0.0;
      switch (linkage) {
        case Linkage::complete:
          nd = std::max(dih, djh);
          break;
        case Linkage::average:
          nd = (si * dih + sj * djh) / (si + sj);
          break;
        case Linkage::ward: {
          const double sh = size[static_cast<std::size_t>(h)];
          nd = ((si + sh) * dih + (sj + sh) * djh - sh * dij) / (si + sj + sh);
          break;
        }
      }
      d(i, h) = nd;
      d(h, i) = nd;
    }
    active[static_cast<std::size_t>(j)] = 0;
    size[static_cast<std::size_t>(i)] = si + sj;

    recompute_nn(i);
    for (int h = 0; h < n; ++h) {
      if (!active[static_cast<std::size_t>(h)] || h == i) continue;
      const int hn = nn_idx[static_cast<std::size_t>(h)];
      if (hn == j || hn == i) {
        recompute_nn(h);
      } else if (h < i && d(h, i) < nn_dist[static_cast<std::size_t>(h)]) {
        nn_dist[static_cast<std::size_t>(h)] = d(h, i);
        nn_idx[static_cast<std::size_t>(h)] = i;
      }
    }
  }
  return merges;
}

ClusterAssignment hierarchical_from_distance(const Matrix& dissimilarity, int k,
                                             Linkage linkage,
                                             const std::vector<std::string>& ids) {
  const int n = static_cast<int>(dissimilarity.rows());
  if (k < 1) throw ConfigError("hierarchical: k must be >= 1");
  if (k > n) throw DataError("hierarchical: k exceeds the number of rows");
  if (!dissimilarity.allFinite()) throw NumericError("hierarchical: non-finite distances");
  const std::vector<MergeStep> merges = linkage_merge_sequence(dissimilarity, linkage);
  ClusterAssignment out;
  out.k = k;
  out.ids = ids;
  out.labels = labels_from_merges(n, merges, n - k);
  switch (linkage) {
    case Linkage::complete: out.method_label = "hier-complete"; break;
    case Linkage::ward: out.method_label = "hier-ward"; break;
    case Linkage::average: out.method_label = "hier-average"; break;
  }
  return out;
}

namespace {

Matrix pairwise_distances(const Matrix& x, bool squared) {
  const Eigen::Index n = x.rows();
  Vector sq = x.rowwise().squaredNorm();
  Matrix d2 = sq.replicate(1, n) + sq.transpose().replicate(n, 1) - 2.0 * x * x.transpose();
  d2 = d2.cwiseMax(0.0);
  d2.diagonal().setZero();
  return squared ? d2 : d2.cwiseSqrt().eval();
}

}  // namespace

ClusterAssignment hierarchical(const FeatureMatrix& m, int k, Linkage linkage) {
  check_input(m, k, "hierarchical");
  // ward's Lance-Williams form operates on squared Euclidean distances
  const Matrix d = pairwise_distances(m.values, linkage == Linkage::ward);
  ClusterAssignment out = hierarchical_from_distance(d, k, linkage, m.ids);
  out.pipeline_label = m.label;
  return out;
}

namespace {

// Unweighted kNN graph, union-symmetrized; distance ties break by row index.
Matrix knn_adjacency(const Matrix& x, int n_neighbors) {
  const Eigen::Index n = x.rows();
  if (n_neighbors < 1 || n_neighbors >= n) {
    throw ConfigError("spectral: n_neighbors must lie in [1, n-1]");
  }
  const Matrix d2 = pairwise_distances(x, true);
  Matrix w = Matrix::Zero(n, n);
  std::vector<std::pair<double, Eigen::Index>> order;
  order.reserve(static_cast<std::size_t>(n - 1));
  for (Eigen::Index i = 0; i < n; ++i) {
    order.clear();
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j != i) order.emplace_back(d2(i, j), j);
    }
    std::partial_sort(order.begin(), order.begin() + n_neighbors, order.end());
    for (int t = 0; t < n_neighbors; ++t) {
      const Eigen::Index j = order[static_cast<std::size_t>(t)].second;
      w(i, j) = 1.0;
      w(j, i) = 1.0;
    }
  }
  return w;
}

Matrix normalized_laplacian(const Matrix& w, int* isolated_count) {
  const Eigen::Index n = w.rows();
  Vector deg = w.rowwise().sum();
  Vector inv_sqrt(n);
  int isolated = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (deg[i] > 0.0) {
      inv_sqrt[i] = 1.0 / std::sqrt(deg[i]);
    } else {
      inv_sqrt[i] = 0.0;
      ++isolated;
    }
  }
  Matrix l = -(inv_sqrt * inv_sqrt.transpose()).cwiseProduct(w);
  for (Eigen::Index i = 0; i < n; ++i) {
    l(i, i) = deg[i] > 0.0 ? 1.0 : 0.0;
  }
  if (isolated_count != nullptr) *isolated_count = isolated;
  return l;
}

int graph_components(const Matrix& w) {
  const int n = static_cast<int>(w.rows());
  DisjointSet ds(n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (w(i, j) > 0.0) ds.unite(i, j);
    }
  }
  int components = 0;
  for (int i = 0; i < n; ++i) {
    if (ds.find(i) == i) ++components;
  }
  return components;
}

}  // namespace

Vector spectral_laplacian_eigenvalues(const FeatureMatrix& m, int n_neighbors) {
  const Matrix w = knn_adjacency(m.values, n_neighbors);
  const Matrix l = normalized_laplacian(w, nullptr);
  Eigen::SelfAdjointEigenSolver<Matrix> solver(l);
  if (solver.info() != Eigen::Success) throw NumericError("spectral: eigensolver failed");
  return solver.eigenvalues();
}

ClusterAssignment spectral(const FeatureMatrix& m, int k, int n_neighbors,
                           std::uint64_t seed, WarningLog* warnings) {
  check_input(m, k, "spectral");
  const Eigen::Index n = m.values.rows();
  const Matrix w = knn_adjacency(m.values, n_neighbors);
  int isolated = 0;
  const Matrix l = normalized_laplacian(w, &isolated);
  if (isolated > 0) {
    warn(warnings, "spectral: " + std::to_string(isolated) +
                       " isolated vertex(es); embedding rows stay zero");
  }
  const int components = graph_components(w);
  if (components > k) {
    warn(warnings, "spectral: kNN graph has " + std::to_string(components) +
                       " components for k=" + std::to_string(k));
  }

  Eigen::SelfAdjointEigenSolver<Matrix> solver(l);
  if (solver.info() != Eigen::Success) throw NumericError("spectral: eigensolver failed");
  if (solver.eigenvalues()[0] < -1e-8) {
    throw NumericError("spectral: Laplacian is not positive semidefinite");
  }
  Matrix u = solver.eigenvectors().leftCols(k);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double norm = u.row(i).norm();
    if (norm > 1e-300) u.row(i) /= norm;
  }

  FeatureMatrix spectral_space;
  spectral_space.values = std::move(u);
  spectral_space.ids = m.ids;
  spectral_space.label = m.label;
  spectral_space.column_names.reserve(static_cast<std::size_t>(k));
  for (int c = 0; c < k; ++c) spectral_space.column_names.push_back("u" + std::to_string(c));

  ClusterAssignment out = kmeans(spectral_space, k, seed, warnings);
  out.method_label = "spectral-" + std::to_string(n_neighbors);
  out.pipeline_label = m.label;
  out.objective = std::numeric_limits<double>::quiet_NaN();
  return out;
}

std::string ClusterMethodSpec::label() const {
  switch (kind) {
    case Kind::kmeans:
      return "kmeans";
    case Kind::hierarchical:
      return linkage == Linkage::complete ? "hier-complete"
             : linkage == Linkage::ward   ? "hier-ward"
                                          : "hier-average";
    case Kind::spectral:
      return "spectral-" + std::to_string(n_neighbors);
  }
  return "unknown";
}

namespace {

class SpecMethod final : public ClusterMethod {
 public:
  explicit SpecMethod(const ClusterMethodSpec& spec) : spec_(spec) {}

  std::string label() const override { return spec_.label(); }

  ClusterAssignment run(const FeatureMatrix& m, int k, std::uint64_t seed,
                        WarningLog* warnings) const override {
    switch (spec_.kind) {
      case ClusterMethodSpec::Kind::kmeans:
        return kmeans(m, k, seed, warnings);
      case ClusterMethodSpec::Kind::hierarchical:
        return hierarchical(m, k, spec_.linkage);
      case ClusterMethodSpec::Kind::spectral:
        return spectral(m, k, spec_.n_neighbors, seed, warnings);
    }
    throw ConfigError("unknown clustering method");
  }

 private:
  ClusterMethodSpec spec_;
};

}  // namespace

std::unique_ptr<ClusterMethod> make_cluster_method(const ClusterMethodSpec& spec) {
  return std::make_unique<SpecMethod>(spec);
}

}  // namespace stabclust
