#include "stabclust/validate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <unordered_map>

namespace stabclust {

namespace {

// canonical relabeling by first occurrence; two label vectors describe the
// same partition iff their canonical forms are equal
std::vector<int> canonical_partition(const std::vector<int>& labels) {
  std::unordered_map<int, int> remap;
  std::vector<int> out(labels.size());
  int next = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto [it, inserted] = remap.emplace(labels[i], next);
    if (inserted) ++next;
    out[i] = it->second;
  }
  return out;
}

std::vector<int> distinct_sorted(const std::vector<int>& labels) {
  std::vector<int> out = labels;
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace

double ari(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) throw DataError("ari: label vectors differ in length");
  const std::size_t n = a.size();
  if (n < 2) throw DataError("ari: need at least 2 labels");

  const std::vector<int> la = distinct_sorted(a);
  const std::vector<int> lb = distinct_sorted(b);
  auto index_of = [](const std::vector<int>& sorted, int v) {
    return static_cast<std::size_t>(
        std::lower_bound(sorted.begin(), sorted.end(), v) - sorted.begin());
  };
  std::vector<long long> table(la.size() * lb.size(), 0);
  std::vector<long long> row_sums(la.size(), 0);
  std::vector<long long> col_sums(lb.size(), 0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t r = index_of(la, a[i]);
    const std::size_t c = index_of(lb, b[i]);
    ++table[r * lb.size() + c];
    ++row_sums[r];
    ++col_sums[c];
  }
  auto choose2 = [](long long m) { return m * (m - 1) / 2; };
  long long sum_cells = 0;
  for (long long v : table) sum_cells += choose2(v);
  long long sum_a = 0;
  for (long long v : row_sums) sum_a += choose2(v);
  long long sum_b = 0;
  for (long long v : col_sums) sum_b += choose2(v);
  const long long pairs = choose2(static_cast<long long>(n));

  // scale both sides by 2*pairs to keep the arithmetic exact in integers
  using int128 = __int128;
  const int128 numerator = 2 * static_cast<int128>(pairs) * sum_cells -
                           2 * static_cast<int128>(sum_a) * sum_b;
  const int128 denominator = static_cast<int128>(pairs) * (sum_a + sum_b) -
                             2 * static_cast<int128>(sum_a) * sum_b;
  if (denominator == 0) {
    return canonical_partition(a) == canonical_partition(b) ? 1.0 : 0.0;
  }
  return static_cast<double>(numerator) / static_cast<double>(denominator);
}

namespace {

std::vector<std::size_t> sorted_intersection(const std::vector<std::size_t>& a,
                                             const std::vector<std::size_t>& b) {
  std::vector<std::size_t> out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

// labels of `rows` (sorted original indices) restricted to `subset`
std::vector<int> labels_on(const std::vector<std::size_t>& rows,
                           const std::vector<int>& labels,
                           const std::vector<std::size_t>& subset) {
  std::vector<int> out;
  out.reserve(subset.size());
  std::size_t pos = 0;
  for (std::size_t r : subset) {
    while (rows[pos] != r) ++pos;
    out.push_back(labels[pos]);
  }
  return out;
}

}  // namespace

StabilityTable stability_search(const Dataset& train,
                                const std::vector<PipelineSpec>& pipelines,
                                const std::vector<const ClusterMethod*>& methods,
                                const std::vector<int>& k_values,
                                const StabilitySearchOptions& opts,
                                WarningLog* warnings) {
  if (!(opts.pi > 0.0 && opts.pi < 1.0)) {
    throw ConfigError("stability_search: pi must lie in (0, 1)");
  }
  if (opts.B < 1) throw ConfigError("stability_search: B must be >= 1");
  if (pipelines.empty()) throw ConfigError("stability_search: no pipelines");
  if (methods.empty()) throw ConfigError("stability_search: no methods");

  const std::size_t n = static_cast<std::size_t>(train.n_rows());
  const std::size_t sub_size =
      static_cast<std::size_t>(std::floor(opts.pi * static_cast<double>(n)));
  if (sub_size < 2) throw DataError("stability_search: pi*n leaves fewer than 2 rows");
  if (opts.pi * opts.pi * static_cast<double>(n) < 30.0) {
    warn(warnings, "stability_search: expected overlap pi^2*n = " +
                       fmt_num(opts.pi * opts.pi * static_cast<double>(n)) +
                       " is below 30; stability scores will be noisy");
  }

  // pipelines are drawn from a label-sorted list so results do not depend
  // on enumeration order
  std::vector<const PipelineSpec*> sorted_pipelines;
  sorted_pipelines.reserve(pipelines.size());
  for (const auto& p : pipelines) sorted_pipelines.push_back(&p);
  std::sort(sorted_pipelines.begin(), sorted_pipelines.end(),
            [](const PipelineSpec* x, const PipelineSpec* y) { return x->label < y->label; });

  struct Cell {
    const ClusterMethod* method;
    int k;
  };
  std::vector<Cell> cells;
  for (const ClusterMethod* m : methods) {
    for (int k : k_values) cells.push_back({m, k});
  }
  const std::size_t total = cells.size() * static_cast<std::size_t>(opts.B);
  std::vector<StabilityIterate> iterates(total);
  std::vector<WarningLog> iterate_warnings(total);

  parallel_for(total, opts.threads, [&](std::size_t idx) {
    const Cell& cell = cells[idx / static_cast<std::size_t>(opts.B)];
    const int b = static_cast<int>(idx % static_cast<std::size_t>(opts.B));
    const std::string method_label = cell.method->label();
    Rng rng(derive_seed(opts.seed, {static_cast<std::uint64_t>(cell.k),
                                    hash_str(method_label),
                                    static_cast<std::uint64_t>(b)}));
    WarningLog* local = &iterate_warnings[idx];

    std::vector<std::size_t> sub1;
    std::vector<std::size_t> sub2;
    std::vector<std::size_t> overlap;
    const PipelineSpec* g1 = nullptr;
    const PipelineSpec* g2 = nullptr;
    bool ok = false;
    for (int attempt = 0; attempt <= opts.max_redraws; ++attempt) {
      sub1 = rng.sample_without_replacement(n, sub_size);
      sub2 = rng.sample_without_replacement(n, sub_size);
      g1 = sorted_pipelines[rng.index(sorted_pipelines.size())];
      g2 = sorted_pipelines[rng.index(sorted_pipelines.size())];
      overlap = sorted_intersection(sub1, sub2);
      if (overlap.size() >= 2) {
        ok = true;
        break;
      }
    }
    if (!ok) {
      throw DataError("stability_search: overlap below 2 rows after " +
                      std::to_string(opts.max_redraws) + " redraws (k=" +
                      std::to_string(cell.k) + ", method=" + method_label + ")");
    }

    const std::uint64_t mat_seed1 = rng.next_u64();
    const std::uint64_t clu_seed1 = rng.next_u64();
    const std::uint64_t mat_seed2 = rng.next_u64();
    const std::uint64_t clu_seed2 = rng.next_u64();

    const MaterializedPipeline m1 = materialize(*g1, train.subset(sub1), mat_seed1, local);
    const ClusterAssignment c1 = cell.method->run(m1.cluster_input(), cell.k, clu_seed1, local);
    const MaterializedPipeline m2 = materialize(*g2, train.subset(sub2), mat_seed2, local);
    const ClusterAssignment c2 = cell.method->run(m2.cluster_input(), cell.k, clu_seed2, local);

    const std::vector<int> l1 = labels_on(sub1, c1.labels, overlap);
    const std::vector<int> l2 = labels_on(sub2, c2.labels, overlap);
    StabilityIterate& it = iterates[idx];
    it.method_label = method_label;
    it.k = cell.k;
    it.b = b;
    it.g1 = g1->label;
    it.g2 = g2->label;
    it.score = ari(l1, l2);
  });

  // merge per-iterate warnings deterministically, deduplicated
  if (warnings != nullptr) {
    std::set<std::string> unique;
    for (const auto& log : iterate_warnings) {
      unique.insert(log.messages.begin(), log.messages.end());
    }
    for (const auto& msg : unique) warnings->add(msg);
  }

  StabilityTable table;
  table.B = opts.B;
  table.pi = opts.pi;
  table.iterates = std::move(iterates);
  for (const ClusterMethod* m : methods) table.method_order.push_back(m->label());
  for (std::size_t c = 0; c < cells.size(); ++c) {
    StabilityCell cell;
    cell.method_label = cells[c].method->label();
    cell.k = cells[c].k;
    cell.b_used = opts.B;
    double sum = 0.0;
    for (int b = 0; b < opts.B; ++b) {
      sum += table.iterates[c * static_cast<std::size_t>(opts.B) +
                            static_cast<std::size_t>(b)]
                 .score;
    }
    cell.mean = sum / static_cast<double>(opts.B);
    double ss = 0.0;
    for (int b = 0; b < opts.B; ++b) {
      const double d = table.iterates[c * static_cast<std::size_t>(opts.B) +
                                      static_cast<std::size_t>(b)]
                           .score -
                       cell.mean;
      ss += d * d;
    }
    cell.sd = opts.B > 1 ? std::sqrt(ss / static_cast<double>(opts.B - 1)) : 0.0;
    table.cells.push_back(std::move(cell));
  }
  return table;
}

ModelSelection select_model(
    const StabilityTable& table,
    const std::optional<std::pair<std::string, int>>& override_choice) {
  if (table.cells.empty()) throw DataError("select_model: empty stability table");
  if (override_choice.has_value()) {
    for (const auto& cell : table.cells) {
      if (cell.method_label == override_choice->first && cell.k == override_choice->second) {
        return {cell.method_label, cell.k, cell.mean, true};
      }
    }
    throw ConfigError("select_model: override " + override_choice->first + ":" +
                      std::to_string(override_choice->second) +
                      " is not a cell of the stability table");
  }
  // argmax mean; ties prefer smaller k, then method order (cells are stored
  // method-major in configuration order with k ascending)
  const StabilityCell* best = nullptr;
  for (const auto& cell : table.cells) {
    if (best == nullptr || cell.mean > best->mean ||
        (cell.mean == best->mean && cell.k < best->k)) {
      best = &cell;
    }
  }
  return {best->method_label, best->k, best->mean, false};
}

ConsensusMatrix consensus(const Dataset& ds, const std::vector<PipelineSpec>& pipelines,
                          const ClusterMethod& method, int k, std::uint64_t seed,
                          const ConsensusOptions& opts, WarningLog* warnings) {
  if (pipelines.empty()) throw ConfigError("consensus: no pipelines");
  if (pipelines.size() < 2) {
    warn(warnings, "consensus: fewer than 2 pipelines; the matrix degenerates to one run");
  }
  const std::size_t n = static_cast<std::size_t>(ds.n_rows());

  struct Run {
    std::vector<std::size_t> rows;
    std::vector<int> labels;
  };
  std::vector<Run> runs(pipelines.size());
  std::vector<WarningLog> run_warnings(pipelines.size());
  parallel_for(pipelines.size(), opts.threads, [&](std::size_t r) {
    const PipelineSpec& g = pipelines[r];
    Rng rng(derive_seed(seed, {hash_str(g.label)}));
    Run& run = runs[r];
    if (opts.subsample) {
      const auto m = static_cast<std::size_t>(
          std::floor(opts.pi * static_cast<double>(n)));
      run.rows = rng.sample_without_replacement(n, std::max<std::size_t>(m, 2));
    } else {
      run.rows.resize(n);
      std::iota(run.rows.begin(), run.rows.end(), std::size_t{0});
    }
    const std::uint64_t mat_seed = rng.next_u64();
    const std::uint64_t clu_seed = rng.next_u64();
    const Dataset sub = opts.subsample ? ds.subset(run.rows) : ds;
    const MaterializedPipeline mat = materialize(g, sub, mat_seed, &run_warnings[r]);
    run.labels = method.run(mat.cluster_input(), k, clu_seed, &run_warnings[r]).labels;
  });
  if (warnings != nullptr) {
    std::set<std::string> unique;
    for (const auto& log : run_warnings) {
      unique.insert(log.messages.begin(), log.messages.end());
    }
    for (const auto& msg : unique) warnings->add(msg);
  }

  Eigen::MatrixXi co = Eigen::MatrixXi::Zero(static_cast<Eigen::Index>(n),
                                             static_cast<Eigen::Index>(n));
  Eigen::MatrixXi counts = Eigen::MatrixXi::Zero(static_cast<Eigen::Index>(n),
                                                 static_cast<Eigen::Index>(n));
  std::vector<std::vector<std::size_t>> by_label;
  for (const Run& run : runs) {
    // co-presence counts
    for (std::size_t a = 0; a < run.rows.size(); ++a) {
      const auto ia = static_cast<Eigen::Index>(run.rows[a]);
      counts(ia, ia) += 1;
      for (std::size_t b = a + 1; b < run.rows.size(); ++b) {
        const auto ib = static_cast<Eigen::Index>(run.rows[b]);
        counts(ia, ib) += 1;
      }
    }
    by_label.assign(static_cast<std::size_t>(k) + 1, {});
    for (std::size_t a = 0; a < run.rows.size(); ++a) {
      by_label[static_cast<std::size_t>(run.labels[a])].push_back(run.rows[a]);
    }
    for (const auto& members : by_label) {
      for (std::size_t a = 0; a < members.size(); ++a) {
        const auto ia = static_cast<Eigen::Index>(members[a]);
        co(ia, ia) += 1;
        for (std::size_t b = a + 1; b < members.size(); ++b) {
          const auto ib = static_cast<Eigen::Index>(members[b]);
          if (ia < ib) co(ia, ib) += 1;
          else co(ib, ia) += 1;
        }
      }
    }
  }

  ConsensusMatrix out;
  out.ids = ds.ids;
  out.counts.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  out.values.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(n); ++i) {
    for (Eigen::Index j = i; j < static_cast<Eigen::Index>(n); ++j) {
      const int cnt = counts(i, j);
      const double v = cnt > 0 ? static_cast<double>(co(i, j)) / cnt : 0.0;
      out.counts(i, j) = cnt;
      out.counts(j, i) = cnt;
      out.values(i, j) = v;
      out.values(j, i) = v;
    }
  }
  return out;
}

ClusterAssignment consensus_labels(const ConsensusMatrix& c, int k) {
  const Eigen::Index n = c.values.rows();
  Matrix dissim = (Matrix::Ones(n, n) - c.values).cwiseMax(0.0);
  dissim.diagonal().setZero();
  ClusterAssignment out = hierarchical_from_distance(dissim, k, Linkage::average, c.ids);
  out.method_label = "consensus-average";
  return out;
}

LocalStability local_stability(const ConsensusMatrix& c, const ClusterAssignment& labels) {
  if (labels.ids != c.ids) throw DataError("local_stability: ids do not align");
  const Eigen::Index n = c.values.rows();
  LocalStability out;
  out.ids = c.ids;
  out.labels = labels.labels;
  out.scores.resize(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    double sum = 0.0;
    int count = 0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == i) continue;
      if (labels.labels[static_cast<std::size_t>(j)] !=
          labels.labels[static_cast<std::size_t>(i)]) {
        continue;
      }
      sum += c.values(i, j);
      ++count;
    }
    out.scores[static_cast<std::size_t>(i)] = count > 0 ? sum / count : 1.0;
  }
  return out;
}

namespace {

// O(n^3) Hungarian algorithm, minimizing; rows must not outnumber columns.
std::vector<int> hungarian_min(const std::vector<std::vector<long long>>& cost) {
  const int n = static_cast<int>(cost.size());
  const int m = static_cast<int>(cost.front().size());
  const long long inf = std::numeric_limits<long long>::max() / 4;
  std::vector<long long> u(static_cast<std::size_t>(n) + 1, 0);
  std::vector<long long> v(static_cast<std::size_t>(m) + 1, 0);
  std::vector<int> p(static_cast<std::size_t>(m) + 1, 0);
  std::vector<int> way(static_cast<std::size_t>(m) + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<long long> minv(static_cast<std::size_t>(m) + 1, inf);
    std::vector<char> used(static_cast<std::size_t>(m) + 1, 0);
    do {
      used[static_cast<std::size_t>(j0)] = 1;
      const int i0 = p[static_cast<std::size_t>(j0)];
      long long delta = inf;
      int j1 = 0;
      for (int j = 1; j <= m; ++j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        const long long cur = cost[static_cast<std::size_t>(i0 - 1)][static_cast<std::size_t>(j - 1)] -
                              u[static_cast<std::size_t>(i0)] - v[static_cast<std::size_t>(j)];
        if (cur < minv[static_cast<std::size_t>(j)]) {
          minv[static_cast<std::size_t>(j)] = cur;
          way[static_cast<std::size_t>(j)] = j0;
        }
        if (minv[static_cast<std::size_t>(j)] < delta) {
          delta = minv[static_cast<std::size_t>(j)];
          j1 = j;
        }
      }
      for (int j = 0; j <= m; ++j) {
        if (used[static_cast<std::size_t>(j)]) {
          u[static_cast<std::size_t>(p[static_cast<std::size_t>(j)])] += delta;
          v[static_cast<std::size_t>(j)] -= delta;
        } else {
          minv[static_cast<std::size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (p[static_cast<std::size_t>(j0)] != 0);
    do {
      const int j1 = way[static_cast<std::size_t>(j0)];
      p[static_cast<std::size_t>(j0)] = p[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> row_to_col(static_cast<std::size_t>(n), -1);
  for (int j = 1; j <= m; ++j) {
    if (p[static_cast<std::size_t>(j)] > 0) {
      row_to_col[static_cast<std::size_t>(p[static_cast<std::size_t>(j)] - 1)] = j - 1;
    }
  }
  return row_to_col;
}

}  // namespace

ClusterMatching match_clusters(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) throw DataError("match_clusters: label vectors differ in length");
  const std::vector<int> la = distinct_sorted(a);
  const std::vector<int> lb = distinct_sorted(b);
  auto index_of = [](const std::vector<int>& sorted, int v) {
    return static_cast<std::size_t>(
        std::lower_bound(sorted.begin(), sorted.end(), v) - sorted.begin());
  };
  std::vector<std::vector<long long>> overlap(la.size(),
                                              std::vector<long long>(lb.size(), 0));
  for (std::size_t i = 0; i < a.size(); ++i) {
    ++overlap[index_of(la, a[i])][index_of(lb, b[i])];
  }

  const bool transposed = la.size() > lb.size();
  const std::size_t rows = transposed ? lb.size() : la.size();
  const std::size_t cols = transposed ? la.size() : lb.size();
  std::vector<std::vector<long long>> cost(rows, std::vector<long long>(cols, 0));
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      cost[r][c] = -(transposed ? overlap[c][r] : overlap[r][c]);
    }
  }
  const std::vector<int> assign = hungarian_min(cost);

  ClusterMatching out;
  for (std::size_t r = 0; r < rows; ++r) {
    const int c = assign[r];
    if (c < 0) continue;
    const std::size_t ai = transposed ? static_cast<std::size_t>(c) : r;
    const std::size_t bi = transposed ? r : static_cast<std::size_t>(c);
    out.pairs.emplace_back(la[ai], lb[bi]);
    out.total_overlap += overlap[ai][bi];
  }
  std::sort(out.pairs.begin(), out.pairs.end());
  return out;
}

GeneralizabilityReport generalizability(const Dataset& train, const Dataset& test,
                                        const PipelineSpec& spec,
                                        const ClusterMethod& method, int k,
                                        const GeneralizabilityOptions& opts,
                                        WarningLog* warnings) {
  if (!opts.allow_identical_ids) {
    std::set<std::string> train_ids(train.ids.begin(), train.ids.end());
    for (const auto& id : test.ids) {
      if (train_ids.count(id) > 0) {
        throw DataError("generalizability: train and test ids are not disjoint ('" + id +
                        "')");
      }
    }
  }
  if (k > test.n_rows()) throw DataError("generalizability: k exceeds test rows");

  const MaterializedPipeline train_mat =
      materialize(spec, train, derive_seed(opts.seed, {hash_str("train")}), warnings);
  const MaterializedPipeline test_mat =
      materialize(spec, test, derive_seed(opts.seed, {hash_str("test")}), warnings);
  const ClusterAssignment train_clusters = method.run(
      train_mat.cluster_input(), k, derive_seed(opts.seed, {hash_str("train-cluster")}),
      warnings);
  const ClusterAssignment test_clusters = method.run(
      test_mat.cluster_input(), k, derive_seed(opts.seed, {hash_str("test-cluster")}),
      warnings);

  // the classifier learns from the standardized pre-embedding features so
  // train and test live in a shared coordinate system
  const ForestModel model =
      forest_fit_classifier(train_mat.features.values, train_clusters.labels, opts.forest,
                            derive_seed(opts.seed, {hash_str("forest")}));
  const std::vector<int> predicted = forest_predict_class(model, test_mat.features.values);

  GeneralizabilityReport report;
  report.pipeline_label = spec.label;
  report.overall_ari = ari(predicted, test_clusters.labels);
  const ClusterMatching matching = match_clusters(test_clusters.labels, predicted);

  std::unordered_map<int, int> matched_pred;  // test label -> predicted label
  for (const auto& [t, p] : matching.pairs) {
    matched_pred[t] = p;
    report.matching.emplace_back(t, p);
  }
  for (int t : distinct_sorted(test_clusters.labels)) {
    auto it = matched_pred.find(t);
    if (it == matched_pred.end()) {
      report.per_cluster_precision[t] = 0.0;
      report.flagged_clusters.push_back(t);
      continue;
    }
    const int p = it->second;
    std::size_t pred_count = 0;
    std::size_t hit_count = 0;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
      if (predicted[i] != p) continue;
      ++pred_count;
      if (test_clusters.labels[i] == t) ++hit_count;
    }
    if (pred_count == 0) {
      report.per_cluster_precision[t] = 0.0;
      report.flagged_clusters.push_back(t);
    } else {
      report.per_cluster_precision[t] =
          static_cast<double>(hit_count) / static_cast<double>(pred_count);
    }
  }
  return report;
}

GridGeneralizability generalizability_grid(
    const Dataset& train, const Dataset& test, const std::vector<PipelineSpec>& pipelines,
    const ClusterMethod& method, int k, const GeneralizabilityOptions& opts,
    const ClusterAssignment* reference_test_labels, WarningLog* warnings) {
  GridGeneralizability out;
  std::map<int, double> precision_sums;
  std::map<int, int> precision_counts;
  double ari_sum = 0.0;
  for (const PipelineSpec& spec : pipelines) {
    GeneralizabilityOptions per = opts;
    per.seed = derive_seed(opts.seed, {hash_str(spec.label)});
    GeneralizabilityReport report = generalizability(train, test, spec, method, k, per,
                                                     warnings);
    ari_sum += report.overall_ari;
    if (reference_test_labels != nullptr) {
      // translate this pipeline's test-cluster precisions into the reference
      // label space before averaging
      const MaterializedPipeline test_mat = materialize(
          spec, test, derive_seed(per.seed, {hash_str("test")}), nullptr);
      const ClusterAssignment test_clusters =
          method.run(test_mat.cluster_input(), k,
                     derive_seed(per.seed, {hash_str("test-cluster")}), nullptr);
      const ClusterMatching to_ref =
          match_clusters(test_clusters.labels, reference_test_labels->labels);
      for (const auto& [own, ref] : to_ref.pairs) {
        auto it = report.per_cluster_precision.find(own);
        if (it == report.per_cluster_precision.end()) continue;
        precision_sums[ref] += it->second;
        precision_counts[ref] += 1;
      }
    }
    out.per_pipeline.push_back(std::move(report));
  }
  out.mean_overall_ari = ari_sum / static_cast<double>(pipelines.size());
  for (const auto& [ref, sum] : precision_sums) {
    out.mean_precision_by_reference[ref] = sum / precision_counts[ref];
  }
  return out;
}

std::vector<SweepRow> sensitivity_sweep(const Dataset& raw,
                                        const std::vector<SweepSetting>& settings,
                                        const ClusterAssignment& reference,
                                        const ClusterMethod& method, int k,
                                        const std::vector<PipelineSpec>& pipelines,
                                        std::uint64_t seed, const ConsensusOptions& copts,
                                        WarningLog* warnings) {
  std::unordered_map<std::string, int> ref_label;
  ref_label.reserve(reference.ids.size());
  for (std::size_t i = 0; i < reference.ids.size(); ++i) {
    ref_label.emplace(reference.ids[i], reference.labels[i]);
  }

  std::vector<SweepRow> rows;
  rows.reserve(settings.size());
  for (const SweepSetting& setting : settings) {
    SweepRow row;
    row.param = setting.param;
    row.value = setting.value;
    try {
      const Dataset filtered = apply_quality_filters(raw, setting.filter, nullptr);
      row.rows_kept = static_cast<std::size_t>(filtered.n_rows());
      std::vector<PipelineSpec> variant = pipelines;
      for (auto& spec : variant) spec.filter = setting.filter;
      const std::uint64_t setting_seed =
          derive_seed(seed, {hash_str(setting.param),
                             static_cast<std::uint64_t>(std::llround(setting.value * 1e6))});
      const ConsensusMatrix cm =
          consensus(filtered, variant, method, k, setting_seed, copts, warnings);
      const ClusterAssignment labels = consensus_labels(cm, k);

      std::vector<int> ref_shared;
      std::vector<int> new_shared;
      for (std::size_t i = 0; i < labels.ids.size(); ++i) {
        auto it = ref_label.find(labels.ids[i]);
        if (it == ref_label.end()) continue;
        ref_shared.push_back(it->second);
        new_shared.push_back(labels.labels[i]);
      }
      row.shared = ref_shared.size();
      if (row.shared < 2) {
        throw DataError("fewer than 2 rows shared with the reference clustering");
      }
      row.ari = ari(new_shared, ref_shared);
      row.status = "ok";
    } catch (const std::exception& e) {
      row.status = std::string("error: ") + e.what();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<SweepSetting> sweep_settings_from_config(const RunConfig& cfg) {
  const QualityFilter base = cfg.filter.value_or(QualityFilter::identity());
  std::vector<SweepSetting> settings;
  for (double v : cfg.sweep.snr_min) {
    QualityFilter f = base;
    f.snr_min = v;
    settings.push_back({"snr_min", v, f});
  }
  for (double v : cfg.sweep.logg_max) {
    QualityFilter f = base;
    f.logg_max = v;
    settings.push_back({"logg_max", v, f});
  }
  for (double v : cfg.sweep.teff_width) {
    QualityFilter f = base;
    f.teff_width = v;
    settings.push_back({"teff_width", v, f});
  }
  for (double v : cfg.sweep.vb_min) {
    QualityFilter f = base;
    f.vb_min = v;
    settings.push_back({"vb_min", v, f});
  }
  return settings;
}

std::vector<GcCompositionRow> gc_composition(const ClusterAssignment& labels,
                                             const std::vector<std::string>& gc_tags) {
  if (labels.labels.size() != gc_tags.size()) {
    throw DataError("gc_composition: tag vector does not align with labels");
  }
  std::map<int, std::size_t> cluster_sizes;
  std::map<std::string, std::size_t> gc_sizes;
  std::map<std::pair<int, std::string>, std::size_t> counts;
  for (std::size_t i = 0; i < gc_tags.size(); ++i) {
    const std::string tag = gc_tags[i].empty() ? "(none)" : gc_tags[i];
    ++cluster_sizes[labels.labels[i]];
    ++gc_sizes[tag];
    ++counts[{labels.labels[i], tag}];
  }
  std::vector<GcCompositionRow> rows;
  rows.reserve(counts.size());
  for (const auto& [key, count] : counts) {
    GcCompositionRow row;
    row.cluster = key.first;
    row.gc = key.second;
    row.count = count;
    row.frac_of_cluster = static_cast<double>(count) / cluster_sizes[key.first];
    row.frac_of_gc = static_cast<double>(count) / gc_sizes[key.second];
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace stabclust
