#include "stabclust/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "stabclust/csv.hpp"
#include "stabclust/forest.hpp"

namespace stabclust {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double median_finite(const Vector& v) {
  std::vector<double> vals;
  vals.reserve(static_cast<std::size_t>(v.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::isfinite(v[i])) vals.push_back(v[i]);
  }
  if (vals.empty()) throw DataError("quality filter: teff column has no finite values");
  std::sort(vals.begin(), vals.end());
  const std::size_t n = vals.size();
  return n % 2 == 1 ? vals[n / 2] : 0.5 * (vals[n / 2 - 1] + vals[n / 2]);
}

}  // namespace

QualityFilter QualityFilter::identity() {
  QualityFilter f;
  f.snr_min = -kInf;
  f.teff_width = kInf;
  f.logg_max = kInf;
  f.vb_min = -kInf;
  f.starflag_required = -1;
  return f;
}

Dataset apply_quality_filters(const Dataset& ds, const QualityFilter& f,
                              WarningLog* warnings) {
  const bool snr_active = f.snr_min > -kInf;
  const bool teff_active = f.teff_width < kInf;
  const bool logg_active = f.logg_max < kInf;
  const bool vb_active = f.vb_min > -kInf;
  const bool flag_active = f.starflag_required >= 0;

  if (snr_active && !ds.meta.has_snr()) {
    throw DataError("quality filter: snr threshold set but snr column is absent");
  }
  if (teff_active && !ds.meta.has_teff()) {
    throw DataError("quality filter: teff window set but teff column is absent");
  }
  if (logg_active && !ds.meta.has_logg()) {
    throw DataError("quality filter: logg threshold set but logg column is absent");
  }
  if (vb_active && !ds.meta.has_vb()) {
    throw DataError("quality filter: vb threshold set but vb column is absent");
  }
  if (flag_active && !ds.meta.has_starflag()) {
    throw DataError("quality filter: starflag required but starflag column is absent");
  }

  const double teff_center = teff_active ? median_finite(ds.meta.teff) : 0.0;
  const double half_width = f.teff_width / 2.0;
  std::vector<std::size_t> keep;
  const auto n = static_cast<std::size_t>(ds.n_rows());
  keep.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    if (snr_active && !(ds.meta.snr[r] >= f.snr_min)) continue;
    if (teff_active && !(std::abs(ds.meta.teff[r] - teff_center) <= half_width)) continue;
    if (logg_active && !(ds.meta.logg[r] <= f.logg_max)) continue;
    if (vb_active && !(ds.meta.vb[r] >= f.vb_min)) continue;
    if (flag_active && ds.meta.starflag[i] != f.starflag_required) continue;
    keep.push_back(i);
  }
  if (keep.empty()) throw DataError("quality filter: all rows filtered out");
  if (keep.size() < n) {
    warn(warnings, "quality filter: kept " + std::to_string(keep.size()) + " of " +
                       std::to_string(n) + " rows");
  }
  return ds.subset(keep);
}

FeatureSet FeatureSet::small7() { return {"small7", abundance_columns_small7()}; }
FeatureSet FeatureSet::medium11() { return {"medium11", abundance_columns_medium11()}; }
FeatureSet FeatureSet::large19() { return {"large19", abundance_columns_large19()}; }
FeatureSet FeatureSet::all() { return {"all", {}}; }

MaskedMatrix select_features(const Dataset& ds, const FeatureSet& fs) {
  std::vector<Eigen::Index> cols;
  std::vector<std::string> names;
  if (fs.columns.empty()) {
    cols.resize(static_cast<std::size_t>(ds.n_features()));
    for (std::size_t i = 0; i < cols.size(); ++i) cols[i] = static_cast<Eigen::Index>(i);
    names = ds.feature_names;
  } else {
    for (const auto& name : fs.columns) {
      auto it = std::find(ds.feature_names.begin(), ds.feature_names.end(), name);
      if (it == ds.feature_names.end()) {
        throw DataError("select_features: unknown column '" + name + "'");
      }
      cols.push_back(it - ds.feature_names.begin());
      names.push_back(name);
    }
  }
  MaskedMatrix out;
  out.ids = ds.ids;
  out.column_names = std::move(names);
  out.values.resize(ds.n_rows(), static_cast<Eigen::Index>(cols.size()));
  out.mask.resize(ds.n_rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) {
    out.values.col(static_cast<Eigen::Index>(c)) = ds.features.col(cols[c]);
    out.mask.col(static_cast<Eigen::Index>(c)) = ds.missing.col(cols[c]);
  }
  return out;
}

StandardizeResult standardize(const MaskedMatrix& m, WarningLog* warnings) {
  StandardizeResult out;
  out.matrix = m;
  out.stats.resize(static_cast<std::size_t>(m.n_cols()));
  for (Eigen::Index c = 0; c < m.n_cols(); ++c) {
    double sum = 0.0;
    Eigen::Index count = 0;
    bool constant = true;
    double first = 0.0;
    for (Eigen::Index r = 0; r < m.n_rows(); ++r) {
      if (m.mask(r, c)) continue;
      const double v = m.values(r, c);
      if (count == 0) first = v;
      else if (v != first) constant = false;
      sum += v;
      ++count;
    }
    if (count < 2) {
      throw DataError("standardize: column '" + m.column_names[static_cast<std::size_t>(c)] +
                      "' has fewer than 2 observed entries");
    }
    const double mean = sum / static_cast<double>(count);
    ColumnStats& stats = out.stats[static_cast<std::size_t>(c)];
    stats.mean = mean;
    stats.observed = count;
    if (constant) {
      stats.sd = 0.0;
      for (Eigen::Index r = 0; r < m.n_rows(); ++r) {
        if (!m.mask(r, c)) out.matrix.values(r, c) = 0.0;
      }
      warn(warnings, "standardize: column '" +
                         m.column_names[static_cast<std::size_t>(c)] +
                         "' is constant over observed entries; set to zeros");
      continue;
    }
    double ss = 0.0;
    for (Eigen::Index r = 0; r < m.n_rows(); ++r) {
      if (m.mask(r, c)) continue;
      const double d = m.values(r, c) - mean;
      ss += d * d;
    }
    stats.sd = std::sqrt(ss / static_cast<double>(count - 1));
    for (Eigen::Index r = 0; r < m.n_rows(); ++r) {
      if (!m.mask(r, c)) {
        out.matrix.values(r, c) = (m.values(r, c) - mean) / stats.sd;
      }
    }
  }
  return out;
}

Matrix impute_mean(const MaskedMatrix& m) {
  Matrix out = m.values;
  for (Eigen::Index c = 0; c < m.n_cols(); ++c) {
    double sum = 0.0;
    Eigen::Index count = 0;
    for (Eigen::Index r = 0; r < m.n_rows(); ++r) {
      if (!m.mask(r, c)) {
        sum += m.values(r, c);
        ++count;
      }
    }
    if (count == 0) {
      throw DataError("impute_mean: column '" +
                      m.column_names[static_cast<std::size_t>(c)] +
                      "' has no observed entries");
    }
    const double mean = sum / static_cast<double>(count);
    for (Eigen::Index r = 0; r < m.n_rows(); ++r) {
      if (m.mask(r, c)) out(r, c) = mean;
    }
  }
  return out;
}

ForestImputeResult impute_forest(const MaskedMatrix& m, const ForestImputeParams& params,
                                 std::uint64_t seed) {
  ForestImputeResult result;
  result.values = impute_mean(m);
  const Eigen::Index n = m.n_rows();
  const Eigen::Index d = m.n_cols();

  std::vector<std::pair<Eigen::Index, Eigen::Index>> cols;  // (missing count, col)
  for (Eigen::Index c = 0; c < d; ++c) {
    Eigen::Index miss = 0;
    for (Eigen::Index r = 0; r < n; ++r) {
      if (m.mask(r, c)) ++miss;
    }
    if (miss > 0) cols.emplace_back(miss, c);
  }
  if (cols.empty() || d < 2) return result;
  std::sort(cols.begin(), cols.end());

  ForestParams forest_params;
  forest_params.n_trees = params.trees;
  forest_params.min_node_size = params.min_node_size;

  Matrix current = result.values;
  Matrix previous = current;
  double prev_change = std::numeric_limits<double>::infinity();
  for (int iter = 1; iter <= params.max_iters; ++iter) {
    const Matrix at_start = current;
    for (const auto& [miss, c] : cols) {
      // predictors: every other column at its current imputed values
      Matrix x_obs(n - miss, d - 1);
      Vector y_obs(n - miss);
      Matrix x_mis(miss, d - 1);
      std::vector<Eigen::Index> mis_rows;
      mis_rows.reserve(static_cast<std::size_t>(miss));
      Eigen::Index oi = 0;
      Eigen::Index mi = 0;
      for (Eigen::Index r = 0; r < n; ++r) {
        Eigen::Index k = 0;
        auto& target = m.mask(r, c) ? x_mis : x_obs;
        const Eigen::Index row = m.mask(r, c) ? mi : oi;
        for (Eigen::Index cc = 0; cc < d; ++cc) {
          if (cc == c) continue;
          target(row, k++) = current(r, cc);
        }
        if (m.mask(r, c)) {
          mis_rows.push_back(r);
          ++mi;
        } else {
          y_obs(oi) = current(r, c);
          ++oi;
        }
      }
      const std::uint64_t fit_seed =
          derive_seed(seed, {static_cast<std::uint64_t>(iter), static_cast<std::uint64_t>(c)});
      const ForestModel model = forest_fit_regressor(x_obs, y_obs, forest_params, fit_seed);
      ++result.forest_fits;
      const Vector pred = forest_predict_value(model, x_mis);
      for (Eigen::Index i = 0; i < miss; ++i) {
        current(mis_rows[static_cast<std::size_t>(i)], c) = pred[i];
      }
    }
    result.iterations = iter;
    double change = 0.0;
    for (const auto& [miss, c] : cols) {
      for (Eigen::Index r = 0; r < n; ++r) {
        if (!m.mask(r, c)) continue;
        const double dlt = current(r, c) - at_start(r, c);
        change += dlt * dlt;
      }
    }
    if (change > prev_change) {
      result.values = previous;  // diverging: keep the previous iteration
      return result;
    }
    previous = current;
    prev_change = change;
    if (change == 0.0) break;
  }
  result.values = current;
  return result;
}

std::string EmbedderSpec::label() const {
  switch (method) {
    case Method::pca:
      return "pca" + std::to_string(pca_dims);
    case Method::tsne:
      return "tsne" + fmt_num(perplexity);
  }
  return "embed";
}

MaterializedPipeline materialize(const PipelineSpec& spec, const Dataset& ds,
                                 std::uint64_t seed, WarningLog* warnings) {
  MaskedMatrix selected = select_features(ds, spec.features);
  StandardizeResult st = standardize(selected, warnings);
  MaterializedPipeline out;
  out.features.ids = st.matrix.ids;
  out.features.column_names = st.matrix.column_names;
  out.features.label = spec.label;
  if (spec.imputer == ImputerKind::mean) {
    // standardized observed means vanish by construction, so mean imputation
    // fills exact zeros; masked cells already hold 0
    out.features.values = st.matrix.values;
  } else {
    out.features.values =
        impute_forest(st.matrix, spec.forest_params, derive_seed(seed, {hash_str("impute")}))
            .values;
  }
  if (spec.embedder.has_value()) {
    const EmbedderSpec& emb = *spec.embedder;
    Embedding e;
    if (emb.method == EmbedderSpec::Method::pca) {
      e = pca(out.features, emb.pca_dims, warnings);
    } else {
      e = tsne(out.features, emb.perplexity, derive_seed(seed, {hash_str("embed")}),
               spec.tsne_options, warnings);
    }
    FeatureMatrix fm;
    fm.values = std::move(e.coords);
    fm.ids = out.features.ids;
    fm.label = spec.label;
    fm.column_names.reserve(static_cast<std::size_t>(fm.values.cols()));
    for (Eigen::Index c = 0; c < fm.values.cols(); ++c) {
      fm.column_names.push_back("e" + std::to_string(c));
    }
    out.embedded = std::move(fm);
  }
  return out;
}

void export_feature_matrix(const FeatureMatrix& m, const std::string& path) {
  CsvTable table;
  table.header.push_back("id");
  for (const auto& name : m.column_names) table.header.push_back(name);
  table.rows.reserve(m.ids.size());
  for (Eigen::Index r = 0; r < m.values.rows(); ++r) {
    std::vector<std::string> row;
    row.reserve(table.header.size());
    row.push_back(m.ids[static_cast<std::size_t>(r)]);
    for (Eigen::Index c = 0; c < m.values.cols(); ++c) {
      row.push_back(fmt_full(m.values(r, c)));
    }
    table.rows.push_back(std::move(row));
  }
  write_csv(path, table);
}

}  // namespace stabclust
