#include "stabclust/embed.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <limits>
#include <unordered_map>

#include "stabclust/csv.hpp"

namespace stabclust {

namespace {

Matrix squared_distances(const Matrix& x) {
  const Eigen::Index n = x.rows();
  Vector sq = x.rowwise().squaredNorm();
  Matrix d2 = sq.replicate(1, n) + sq.transpose().replicate(n, 1) - 2.0 * x * x.transpose();
  d2.diagonal().setZero();
  return d2.cwiseMax(0.0);
}

// Per-row ascending neighbor order by (distance, index), self excluded.
std::vector<int> neighbor_order(const Matrix& d2, Eigen::Index i) {
  const Eigen::Index n = d2.rows();
  std::vector<std::pair<double, int>> order;
  order.reserve(static_cast<std::size_t>(n - 1));
  for (Eigen::Index j = 0; j < n; ++j) {
    if (j != i) order.emplace_back(d2(i, j), static_cast<int>(j));
  }
  std::sort(order.begin(), order.end());
  std::vector<int> out(order.size());
  for (std::size_t k = 0; k < order.size(); ++k) out[k] = order[k].second;
  return out;
}

}  // namespace

Embedding pca(const FeatureMatrix& m, int q, WarningLog* warnings) {
  const Eigen::Index n = m.values.rows();
  const Eigen::Index d = m.values.cols();
  if (q < 1 || q > d) throw ConfigError("pca: q must lie in [1, d]");
  if (n < 2) throw DataError("pca: need at least 2 rows");
  if (!m.values.allFinite()) throw NumericError("pca: non-finite input");

  const Vector mean = m.values.colwise().mean();
  Matrix centered = m.values.rowwise() - mean.transpose();
  Matrix cov = centered.transpose() * centered / static_cast<double>(n - 1);
  Eigen::SelfAdjointEigenSolver<Matrix> solver(cov);
  if (solver.info() != Eigen::Success) throw NumericError("pca: eigensolver failed");

  // ascending order from Eigen; reverse to descending variance
  const Vector evals = solver.eigenvalues();
  const Matrix evecs = solver.eigenvectors();
  double total = 0.0;
  for (Eigen::Index i = 0; i < d; ++i) total += std::max(evals[i], 0.0);

  Embedding out;
  out.ids = m.ids;
  out.method_label = "pca" + std::to_string(q);
  out.loadings.resize(d, q);
  out.explained_variance_ratio.resize(q);
  out.center = mean;
  const double rank_tol = 1e-12 * std::max(1.0, std::max(evals[d - 1], 0.0));
  int zero_variance = 0;
  for (int c = 0; c < q; ++c) {
    const Eigen::Index src = d - 1 - c;
    Vector v = evecs.col(src);
    // fix sign: largest-magnitude loading positive, ties to lowest index
    Eigen::Index pivot = 0;
    for (Eigen::Index r = 1; r < d; ++r) {
      if (std::abs(v[r]) > std::abs(v[pivot])) pivot = r;
    }
    if (v[pivot] < 0.0) v = -v;
    out.loadings.col(c) = v;
    const double lambda = std::max(evals[src], 0.0);
    out.explained_variance_ratio[c] = total > 0.0 ? lambda / total : 0.0;
    if (lambda <= rank_tol) ++zero_variance;
  }
  if (zero_variance > 0) {
    warn(warnings, "pca: " + std::to_string(zero_variance) +
                       " requested component(s) beyond the data rank carry zero variance");
  }
  out.coords = centered * out.loadings;
  return out;
}

Matrix pca_reconstruct(const Embedding& e) {
  if (e.loadings.size() == 0) throw ConfigError("pca_reconstruct: not a PCA embedding");
  Matrix rec = e.coords * e.loadings.transpose();
  rec.rowwise() += e.center.transpose();
  return rec;
}

TsneAffinities tsne_affinities(const Matrix& x, double perplexity, WarningLog* warnings) {
  const Eigen::Index n = x.rows();
  if (n < 3) throw DataError("tsne: need at least 3 rows");
  if (perplexity < 2.0) throw ConfigError("tsne: perplexity must be >= 2");
  if (perplexity > static_cast<double>(n - 1)) {
    throw ConfigError("tsne: perplexity must be <= n-1");
  }
  if (!x.allFinite()) throw NumericError("tsne: non-finite input");

  const Matrix d2 = squared_distances(x);
  const double target = std::log(perplexity);
  Matrix cond = Matrix::Zero(n, n);
  Vector entropy_error(n);
  int failures = 0;

  for (Eigen::Index i = 0; i < n; ++i) {
    // shift distances so exp() stays in range; the conditional distribution
    // and its entropy are shift-invariant
    double dmin = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j != i) dmin = std::min(dmin, d2(i, j));
    }
    double beta = 1.0;
    double beta_min = -std::numeric_limits<double>::infinity();
    double beta_max = std::numeric_limits<double>::infinity();
    double entropy = 0.0;
    double sum_p = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      sum_p = 0.0;
      double sum_dp = 0.0;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (j == i) continue;
        const double dd = d2(i, j) - dmin;
        const double p = std::exp(-beta * dd);
        sum_p += p;
        sum_dp += dd * p;
      }
      entropy = std::log(sum_p) + beta * sum_dp / sum_p;
      const double diff = entropy - target;
      if (std::abs(diff) < 1e-7) break;
      if (diff > 0.0) {
        beta_min = beta;
        beta = std::isinf(beta_max) ? beta * 2.0 : 0.5 * (beta + beta_max);
      } else {
        beta_max = beta;
        beta = std::isinf(beta_min) ? beta * 0.5 : 0.5 * (beta + beta_min);
      }
    }
    entropy_error[i] = std::abs(entropy - target);
    if (entropy_error[i] > 1e-5) ++failures;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == i) continue;
      cond(i, j) = std::exp(-beta * (d2(i, j) - dmin)) / sum_p;
    }
  }
  if (failures > 0) {
    warn(warnings, "tsne: perplexity calibration missed 1e-5 entropy tolerance on " +
                       std::to_string(failures) + " row(s)");
  }

  TsneAffinities out;
  out.entropy_error = entropy_error;
  out.joint = Matrix::Zero(n, n);
  const double denom = 2.0 * static_cast<double>(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double v = (cond(i, j) + cond(j, i)) / denom;
      out.joint(i, j) = v;
      out.joint(j, i) = v;
    }
  }
  return out;
}

namespace {

// Student-t kernel numerators and their total mass.
void student_kernel(const Matrix& y, Matrix& num, double& z) {
  const Eigen::Index n = y.rows();
  z = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    num(i, i) = 0.0;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double v = 1.0 / (1.0 + (y.row(i) - y.row(j)).squaredNorm());
      num(i, j) = v;
      num(j, i) = v;
      z += 2.0 * v;
    }
  }
}

Matrix kl_gradient(const Matrix& joint, const Matrix& y, double exaggeration,
                   double q_floor, Matrix& num_scratch) {
  const Eigen::Index n = y.rows();
  double z = 0.0;
  student_kernel(y, num_scratch, z);
  Matrix grad = Matrix::Zero(n, y.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == i) continue;
      const double q = std::max(num_scratch(i, j) / z, q_floor);
      const double coeff = 4.0 * (exaggeration * joint(i, j) - q) * num_scratch(i, j);
      grad.row(i) += coeff * (y.row(i) - y.row(j));
    }
  }
  return grad;
}

}  // namespace

double tsne_kl(const Matrix& joint, const Matrix& y, double q_floor) {
  const Eigen::Index n = y.rows();
  Matrix num(n, n);
  double z = 0.0;
  student_kernel(y, num, z);
  double kl = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == i) continue;
      const double p = joint(i, j);
      if (p <= 0.0) continue;
      const double q = std::max(num(i, j) / z, q_floor);
      kl += p * std::log(p / q);
    }
  }
  return kl;
}

Matrix tsne_gradient(const Matrix& joint, const Matrix& y, double q_floor) {
  Matrix num(y.rows(), y.rows());
  return kl_gradient(joint, y, 1.0, q_floor, num);
}

Embedding tsne(const FeatureMatrix& m, double perplexity, std::uint64_t seed,
               const TsneOptions& opts, WarningLog* warnings,
               TsneDiagnostics* diagnostics) {
  const Eigen::Index n = m.values.rows();
  if (!(perplexity >= 2.0 && perplexity < static_cast<double>(n) / 3.0)) {
    throw ConfigError("tsne: perplexity must satisfy 2 <= perplexity < n/3");
  }
  if (!m.values.allFinite()) throw NumericError("tsne: non-finite input");

  const TsneAffinities aff = tsne_affinities(m.values, perplexity, warnings);

  // PCA initialization scaled so the first column has sd 1e-4
  Matrix y = Matrix::Zero(n, 2);
  {
    const int q = static_cast<int>(std::min<Eigen::Index>(2, m.values.cols()));
    Embedding init = pca(m, q, nullptr);
    y.leftCols(q) = init.coords;
    const Vector col0 = y.col(0);
    const double mean0 = col0.mean();
    const double sd0 =
        std::sqrt((col0.array() - mean0).square().sum() / static_cast<double>(n - 1));
    if (sd0 > 1e-12) {
      y *= 1e-4 / sd0;
    } else {
      Rng rng(seed);
      for (Eigen::Index i = 0; i < n; ++i) {
        y(i, 0) = rng.normal() * 1e-4;
        y(i, 1) = rng.normal() * 1e-4;
      }
    }
  }

  TsneDiagnostics diag;
  diag.kl_initial = tsne_kl(aff.joint, y, opts.q_floor);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (aff.entropy_error[i] > 1e-5) ++diag.calibration_failures;
  }

  Matrix inc = Matrix::Zero(n, 2);
  Matrix gains = Matrix::Ones(n, 2);
  Matrix num_scratch(n, n);
  for (int iter = 0; iter < opts.max_iter; ++iter) {
    const double exag = iter < opts.exaggeration_iters ? opts.early_exaggeration : 1.0;
    const double momentum = iter < opts.momentum_switch_iter ? opts.momentum_initial
                                                             : opts.momentum_final;
    const Matrix grad = kl_gradient(aff.joint, y, exag, opts.q_floor, num_scratch);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index c = 0; c < 2; ++c) {
        const bool same_sign = (grad(i, c) > 0.0) == (inc(i, c) > 0.0);
        gains(i, c) = same_sign ? gains(i, c) * 0.8 : gains(i, c) + 0.2;
        if (gains(i, c) < 0.01) gains(i, c) = 0.01;
        inc(i, c) = momentum * inc(i, c) - opts.learning_rate * gains(i, c) * grad(i, c);
      }
    }
    y += inc;
    y.rowwise() -= y.colwise().mean();
  }
  diag.kl_final = tsne_kl(aff.joint, y, opts.q_floor);
  if (diagnostics != nullptr) *diagnostics = diag;

  Embedding out;
  out.coords = std::move(y);
  out.ids = m.ids;
  out.method_label = "tsne" + fmt_num(perplexity);
  return out;
}

double neighbor_retention(const FeatureMatrix& high, const Embedding& low, int k) {
  RetentionCurve curve = retention_curve(high, low, {k});
  return curve.retention.front();
}

RetentionCurve retention_curve(const FeatureMatrix& high, const Embedding& low,
                               const std::vector<int>& neighborhood_sizes) {
  if (high.ids != low.ids) throw DataError("neighbor_retention: row ids do not match");
  const Eigen::Index n = high.values.rows();
  for (int k : neighborhood_sizes) {
    if (k < 1 || k > static_cast<int>(n) - 1) {
      throw ConfigError("neighbor_retention: k must lie in [1, n-1]");
    }
  }

  // evaluate all sizes in one ascending pass per row
  std::vector<std::size_t> order(neighborhood_sizes.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return neighborhood_sizes[a] < neighborhood_sizes[b];
  });

  const Matrix d2_high = squared_distances(high.values);
  const Matrix d2_low = squared_distances(low.coords);
  std::vector<double> sums(neighborhood_sizes.size(), 0.0);
  std::vector<int> in_high(static_cast<std::size_t>(n), 0);
  std::vector<int> in_low(static_cast<std::size_t>(n), 0);
  for (Eigen::Index i = 0; i < n; ++i) {
    const std::vector<int> nh = neighbor_order(d2_high, i);
    const std::vector<int> nl = neighbor_order(d2_low, i);
    std::fill(in_high.begin(), in_high.end(), 0);
    std::fill(in_low.begin(), in_low.end(), 0);
    int prefix = 0;
    int shared = 0;
    for (std::size_t oi = 0; oi < order.size(); ++oi) {
      const int k = neighborhood_sizes[order[oi]];
      for (; prefix < k; ++prefix) {
        const int a = nh[static_cast<std::size_t>(prefix)];
        const int b = nl[static_cast<std::size_t>(prefix)];
        in_high[static_cast<std::size_t>(a)] = 1;
        in_low[static_cast<std::size_t>(b)] = 1;
        if (in_low[static_cast<std::size_t>(a)]) ++shared;
        if (a != b && in_high[static_cast<std::size_t>(b)]) ++shared;
      }
      sums[order[oi]] += static_cast<double>(shared) / static_cast<double>(k);
    }
  }

  RetentionCurve out;
  out.neighborhood_sizes = neighborhood_sizes;
  out.method_label = low.method_label;
  out.retention.resize(neighborhood_sizes.size());
  for (std::size_t i = 0; i < sums.size(); ++i) {
    out.retention[i] = sums[i] / static_cast<double>(n);
  }
  return out;
}

void export_embedding(const Embedding& e, const std::string& path) {
  CsvTable table;
  table.header = {"id", "x", "y"};
  const Eigen::Index q = e.coords.cols();
  if (q < 1) throw DataError("export_embedding: empty embedding");
  if (q == 1) table.header = {"id", "x"};
  for (Eigen::Index c = 2; c < q; ++c) table.header.push_back("c" + std::to_string(c));
  table.rows.reserve(e.ids.size());
  for (Eigen::Index r = 0; r < e.coords.rows(); ++r) {
    std::vector<std::string> row;
    row.push_back(e.ids[static_cast<std::size_t>(r)]);
    for (Eigen::Index c = 0; c < q; ++c) row.push_back(fmt_full(e.coords(r, c)));
    table.rows.push_back(std::move(row));
  }
  write_csv(path, table);
}

Embedding import_embedding(const std::string& path, const std::vector<std::string>& ids) {
  CsvTable table = read_csv(path);
  const int id_col = table.column("id");
  const int x_col = table.column("x");
  const int y_col = table.column("y");
  if (id_col < 0 || x_col < 0 || y_col < 0) {
    throw DataError(path + ": embedding file must have columns id,x,y");
  }
  std::unordered_map<std::string, std::pair<double, double>> by_id;
  by_id.reserve(table.rows.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const std::string& id = row[static_cast<std::size_t>(id_col)];
    char* end = nullptr;
    const double x = std::strtod(row[static_cast<std::size_t>(x_col)].c_str(), &end);
    const double y = std::strtod(row[static_cast<std::size_t>(y_col)].c_str(), &end);
    if (!by_id.emplace(id, std::make_pair(x, y)).second) {
      throw DataError(path + ": duplicate id '" + id + "' in embedding file");
    }
  }
  std::vector<std::string> missing;
  Embedding out;
  out.coords.resize(static_cast<Eigen::Index>(ids.size()), 2);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    auto it = by_id.find(ids[i]);
    if (it == by_id.end()) {
      missing.push_back(ids[i]);
      continue;
    }
    out.coords(static_cast<Eigen::Index>(i), 0) = it->second.first;
    out.coords(static_cast<Eigen::Index>(i), 1) = it->second.second;
    by_id.erase(it);
  }
  if (!missing.empty()) {
    std::string msg = path + ": embedding file missing " +
                      std::to_string(missing.size()) + " id(s):";
    for (std::size_t i = 0; i < missing.size() && i < 5; ++i) msg += " " + missing[i];
    throw DataError(msg);
  }
  if (!by_id.empty()) {
    throw DataError(path + ": embedding file contains " + std::to_string(by_id.size()) +
                    " id(s) unknown to the dataset");
  }
  out.ids = ids;
  out.method_label = "external:" + std::filesystem::path(path).filename().string();
  return out;
}

}  // namespace stabclust
