#include "stabclust/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "stabclust/csv.hpp"

namespace stabclust {

namespace {

constexpr double kMissingSentinel = -9000.0;  // catalog convention: <= -9000 means unmeasured

std::string trim(const std::string& s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

bool is_missing_token(const std::string& t) {
  if (t.empty()) return true;
  std::string l = lower(t);
  return l == "nan" || l == "na" || l == "null";
}

bool parse_double(const std::string& t, double& out) {
  const char* begin = t.c_str();
  char* end = nullptr;
  out = std::strtod(begin, &end);
  return end == begin + t.size() && end != begin;
}

bool parse_ll(const std::string& t, long long& out) {
  const char* begin = t.c_str();
  char* end = nullptr;
  out = std::strtoll(begin, &end, 10);
  return end == begin + t.size() && end != begin;
}

int require_column(const CsvTable& table, const std::string& name,
                   const std::string& origin) {
  int c = table.column(name);
  if (c < 0) {
    throw DataError(origin + ": schema error: required column '" + name +
                    "' not found in header");
  }
  return c;
}

}  // namespace

const std::vector<std::string>& abundance_columns_small7() {
  static const std::vector<std::string> cols = {"FE_H",  "MG_FE", "O_FE", "SI_FE",
                                                "CA_FE", "NI_FE", "AL_FE"};
  return cols;
}

const std::vector<std::string>& abundance_columns_medium11() {
  static const std::vector<std::string> cols = [] {
    std::vector<std::string> c = abundance_columns_small7();
    c.insert(c.end(), {"C_FE", "MN_FE", "N_FE", "K_FE"});
    return c;
  }();
  return cols;
}

const std::vector<std::string>& abundance_columns_large19() {
  static const std::vector<std::string> cols = [] {
    std::vector<std::string> c = abundance_columns_medium11();
    c.insert(c.end(),
             {"CI_FE", "NA_FE", "S_FE", "TI_FE", "TIII_FE", "V_FE", "CR_FE", "CO_FE"});
    return c;
  }();
  return cols;
}

CatalogSchema CatalogSchema::apogee() {
  CatalogSchema s;
  s.id = "APOGEE_ID";
  s.gc = "GC_NAME";
  s.snr = "SNR";
  s.teff = "TEFF";
  s.logg = "LOGG";
  s.vb = "VB_PROB";
  s.starflag = "STARFLAG";
  s.features = abundance_columns_large19();
  return s;
}

Dataset Dataset::subset(const std::vector<std::size_t>& rows) const {
  Dataset out;
  const auto m = static_cast<Eigen::Index>(rows.size());
  out.ids.reserve(rows.size());
  out.gc_tag.reserve(rows.size());
  out.feature_names = feature_names;
  out.features.resize(m, features.cols());
  out.missing.resize(m, missing.cols());
  if (meta.has_snr()) out.meta.snr.resize(m);
  if (meta.has_teff()) out.meta.teff.resize(m);
  if (meta.has_logg()) out.meta.logg.resize(m);
  if (meta.has_vb()) out.meta.vb.resize(m);
  if (meta.has_starflag()) out.meta.starflag.reserve(rows.size());
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto r = static_cast<Eigen::Index>(rows[static_cast<std::size_t>(i)]);
    out.ids.push_back(ids[static_cast<std::size_t>(r)]);
    out.gc_tag.push_back(gc_tag[static_cast<std::size_t>(r)]);
    out.features.row(i) = features.row(r);
    out.missing.row(i) = missing.row(r);
    if (meta.has_snr()) out.meta.snr[i] = meta.snr[r];
    if (meta.has_teff()) out.meta.teff[i] = meta.teff[r];
    if (meta.has_logg()) out.meta.logg[i] = meta.logg[r];
    if (meta.has_vb()) out.meta.vb[i] = meta.vb[r];
    if (meta.has_starflag())
      out.meta.starflag.push_back(meta.starflag[static_cast<std::size_t>(r)]);
  }
  return out;
}

void Dataset::check_invariants() const {
  const auto n = static_cast<std::size_t>(features.rows());
  if (ids.size() != n || gc_tag.size() != n) {
    throw DataError("dataset: id/tag column length does not match row count");
  }
  if (missing.rows() != features.rows() || missing.cols() != features.cols()) {
    throw DataError("dataset: missingness mask shape does not match features");
  }
  if (static_cast<Eigen::Index>(feature_names.size()) != features.cols()) {
    throw DataError("dataset: feature name count does not match feature columns");
  }
  auto check_meta = [n](std::size_t len, const char* name) {
    if (len != 0 && len != n) {
      throw DataError(std::string("dataset: meta column '") + name +
                      "' length does not match row count");
    }
  };
  check_meta(static_cast<std::size_t>(meta.snr.size()), "snr");
  check_meta(static_cast<std::size_t>(meta.teff.size()), "teff");
  check_meta(static_cast<std::size_t>(meta.logg.size()), "logg");
  check_meta(static_cast<std::size_t>(meta.vb.size()), "vb");
  check_meta(meta.starflag.size(), "starflag");
  std::unordered_set<std::string> seen;
  seen.reserve(n);
  for (const auto& id : ids) {
    if (!seen.insert(id).second) {
      throw DataError("dataset: duplicate id '" + id + "'");
    }
  }
}

Dataset parse_catalog_text(const std::string& text, const std::string& origin,
                           const CatalogSchema& schema, WarningLog* warnings) {
  CsvTable table = read_csv_text(text, origin);
  const int id_col = require_column(table, schema.id, origin);
  const int gc_col = schema.gc.empty() ? -1 : require_column(table, schema.gc, origin);
  const int snr_col = schema.snr.empty() ? -1 : require_column(table, schema.snr, origin);
  const int teff_col = schema.teff.empty() ? -1 : require_column(table, schema.teff, origin);
  const int logg_col = schema.logg.empty() ? -1 : require_column(table, schema.logg, origin);
  const int vb_col = schema.vb.empty() ? -1 : require_column(table, schema.vb, origin);
  const int flag_col =
      schema.starflag.empty() ? -1 : require_column(table, schema.starflag, origin);

  std::vector<int> feat_cols;
  std::vector<std::string> feat_names;
  if (!schema.features.empty()) {
    for (const auto& name : schema.features) {
      feat_cols.push_back(require_column(table, name, origin));
      feat_names.push_back(name);
    }
  } else {
    std::unordered_set<int> claimed = {id_col, gc_col, snr_col, teff_col,
                                       logg_col, vb_col, flag_col};
    for (std::size_t c = 0; c < table.header.size(); ++c) {
      if (claimed.count(static_cast<int>(c)) == 0) {
        feat_cols.push_back(static_cast<int>(c));
        feat_names.push_back(table.header[c]);
      }
    }
    if (feat_cols.empty()) {
      throw DataError(origin + ": schema error: no feature columns left after role mapping");
    }
  }

  const auto n = static_cast<Eigen::Index>(table.rows.size());
  const auto p = static_cast<Eigen::Index>(feat_cols.size());
  Dataset ds;
  ds.feature_names = feat_names;
  ds.features = Matrix::Zero(n, p);
  ds.missing = Mask::Constant(n, p, false);
  if (snr_col >= 0) ds.meta.snr.resize(n);
  if (teff_col >= 0) ds.meta.teff.resize(n);
  if (logg_col >= 0) ds.meta.logg.resize(n);
  if (vb_col >= 0) ds.meta.vb.resize(n);
  if (flag_col >= 0) ds.meta.starflag.resize(static_cast<std::size_t>(n));
  ds.ids.reserve(static_cast<std::size_t>(n));
  ds.gc_tag.reserve(static_cast<std::size_t>(n));

  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto& row = table.rows[static_cast<std::size_t>(r)];
    const std::string row_tag = origin + ": row " + std::to_string(r + 2);  // 1-based + header
    std::string id = trim(row[static_cast<std::size_t>(id_col)]);
    if (id.empty()) throw DataError(row_tag + ": empty id");
    ds.ids.push_back(std::move(id));
    ds.gc_tag.push_back(gc_col >= 0 ? trim(row[static_cast<std::size_t>(gc_col)]) : "");

    auto meta_value = [&](int col) -> double {
      const std::string t = trim(row[static_cast<std::size_t>(col)]);
      if (is_missing_token(t)) return nan;
      double v = 0.0;
      if (!parse_double(t, v)) {
        throw DataError(row_tag + ": unparseable value '" + t + "' in column '" +
                        table.header[static_cast<std::size_t>(col)] + "'");
      }
      return v;
    };
    if (snr_col >= 0) ds.meta.snr[r] = meta_value(snr_col);
    if (teff_col >= 0) ds.meta.teff[r] = meta_value(teff_col);
    if (logg_col >= 0) ds.meta.logg[r] = meta_value(logg_col);
    if (vb_col >= 0) ds.meta.vb[r] = meta_value(vb_col);
    if (flag_col >= 0) {
      const std::string t = trim(row[static_cast<std::size_t>(flag_col)]);
      long long v = -1;
      if (is_missing_token(t)) {
        warn(warnings, row_tag + ": missing starflag treated as -1");
      } else if (!parse_ll(t, v)) {
        throw DataError(row_tag + ": unparseable starflag '" + t + "'");
      }
      ds.meta.starflag[static_cast<std::size_t>(r)] = v;
    }

    for (Eigen::Index c = 0; c < p; ++c) {
      const std::string t =
          trim(row[static_cast<std::size_t>(feat_cols[static_cast<std::size_t>(c)])]);
      if (is_missing_token(t)) {
        ds.missing(r, c) = true;
        continue;
      }
      double v = 0.0;
      if (!parse_double(t, v)) {
        throw DataError(row_tag + ": unparseable value '" + t + "' in column '" +
                        feat_names[static_cast<std::size_t>(c)] + "'");
      }
      if (v <= kMissingSentinel) {
        ds.missing(r, c) = true;
      } else {
        ds.features(r, c) = v;
      }
    }
  }

  ds.check_invariants();
  return ds;
}

Dataset load_catalog(const std::string& path, const CatalogSchema& schema,
                     WarningLog* warnings) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open catalog file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_catalog_text(buf.str(), path, schema, warnings);
}

void write_dataset_csv(const Dataset& ds, const std::string& path) {
  CsvTable table;
  table.header.push_back("id");
  table.header.push_back("gc");
  if (ds.meta.has_snr()) table.header.push_back("snr");
  if (ds.meta.has_teff()) table.header.push_back("teff");
  if (ds.meta.has_logg()) table.header.push_back("logg");
  if (ds.meta.has_vb()) table.header.push_back("vb");
  if (ds.meta.has_starflag()) table.header.push_back("starflag");
  for (const auto& f : ds.feature_names) table.header.push_back(f);

  const auto n = ds.n_rows();
  table.rows.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index r = 0; r < n; ++r) {
    std::vector<std::string> row;
    row.reserve(table.header.size());
    row.push_back(ds.ids[static_cast<std::size_t>(r)]);
    row.push_back(ds.gc_tag[static_cast<std::size_t>(r)]);
    auto push_meta = [&row](double v) { row.push_back(std::isnan(v) ? "" : fmt_full(v)); };
    if (ds.meta.has_snr()) push_meta(ds.meta.snr[r]);
    if (ds.meta.has_teff()) push_meta(ds.meta.teff[r]);
    if (ds.meta.has_logg()) push_meta(ds.meta.logg[r]);
    if (ds.meta.has_vb()) push_meta(ds.meta.vb[r]);
    if (ds.meta.has_starflag())
      row.push_back(std::to_string(ds.meta.starflag[static_cast<std::size_t>(r)]));
    for (Eigen::Index c = 0; c < ds.n_features(); ++c) {
      row.push_back(ds.missing(r, c) ? "" : fmt_full(ds.features(r, c)));
    }
    table.rows.push_back(std::move(row));
  }
  write_csv(path, table);
}

SplitResult train_test_split(const Dataset& ds, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw ConfigError("train_test_split: fraction must lie in (0, 1)");
  }
  const auto n = static_cast<std::size_t>(ds.n_rows());
  if (n < 2) throw DataError("train_test_split: need at least 2 rows");
  const auto n_train =
      static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n)));
  Rng rng(seed);
  std::vector<std::size_t> train_rows = rng.sample_without_replacement(n, n_train);
  std::vector<std::size_t> test_rows;
  test_rows.reserve(n - n_train);
  std::size_t t = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (t < train_rows.size() && train_rows[t] == i) {
      ++t;
    } else {
      test_rows.push_back(i);
    }
  }
  SplitResult out;
  out.train = ds.subset(train_rows);
  out.test = ds.subset(test_rows);
  out.seed = seed;
  out.fraction = fraction;
  return out;
}

namespace {

std::vector<std::string> read_id_list(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open split file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  std::vector<std::string> ids;
  // CSV with an `id`-like header, or a bare one-id-per-line list
  if (text.find(',') != std::string::npos) {
    CsvTable table = read_csv_text(text, path);
    int col = table.column("id");
    if (col < 0) col = table.column("APOGEE_ID");
    if (col < 0) throw DataError(path + ": split file has no 'id' or 'APOGEE_ID' column");
    for (const auto& row : table.rows) ids.push_back(trim(row[static_cast<std::size_t>(col)]));
  } else {
    std::istringstream lines(text);
    std::string line;
    bool first = true;
    while (std::getline(lines, line)) {
      const std::string t = trim(line);
      if (t.empty()) continue;
      if (first && (t == "id" || t == "APOGEE_ID")) {
        first = false;
        continue;
      }
      first = false;
      ids.push_back(t);
    }
  }
  return ids;
}

}  // namespace

SplitResult split_from_id_files(const Dataset& ds, const std::string& train_path,
                                const std::string& test_path) {
  const std::vector<std::string> train_ids = read_id_list(train_path);
  const std::vector<std::string> test_ids = read_id_list(test_path);
  std::unordered_map<std::string, int> part;  // 0 = train, 1 = test
  part.reserve(train_ids.size() + test_ids.size());
  for (const auto& id : train_ids) {
    if (!part.emplace(id, 0).second) throw DataError("split files: duplicate id '" + id + "'");
  }
  for (const auto& id : test_ids) {
    if (!part.emplace(id, 1).second) {
      throw DataError("split files: id '" + id + "' appears in both parts");
    }
  }
  std::vector<std::size_t> train_rows;
  std::vector<std::size_t> test_rows;
  for (std::size_t i = 0; i < ds.ids.size(); ++i) {
    auto it = part.find(ds.ids[i]);
    if (it == part.end()) {
      throw DataError("split files: dataset id '" + ds.ids[i] + "' missing from both parts");
    }
    (it->second == 0 ? train_rows : test_rows).push_back(i);
  }
  if (train_rows.size() + test_rows.size() != part.size()) {
    throw DataError("split files: " +
                    std::to_string(part.size() - train_rows.size() - test_rows.size()) +
                    " listed ids not present in the dataset");
  }
  SplitResult out;
  out.train = ds.subset(train_rows);
  out.test = ds.subset(test_rows);
  out.seed = 0;
  out.fraction = ds.n_rows() > 0 ? static_cast<double>(train_rows.size()) /
                                       static_cast<double>(ds.n_rows())
                                 : 0.0;
  return out;
}

Dataset concat_rows(const Dataset& a, const Dataset& b) {
  if (a.feature_names != b.feature_names) {
    throw DataError("concat_rows: feature columns differ");
  }
  if (a.meta.has_snr() != b.meta.has_snr() || a.meta.has_teff() != b.meta.has_teff() ||
      a.meta.has_logg() != b.meta.has_logg() || a.meta.has_vb() != b.meta.has_vb() ||
      a.meta.has_starflag() != b.meta.has_starflag()) {
    throw DataError("concat_rows: meta column layouts differ");
  }
  Dataset out;
  out.feature_names = a.feature_names;
  const Eigen::Index na = a.n_rows();
  const Eigen::Index nb = b.n_rows();
  out.ids = a.ids;
  out.ids.insert(out.ids.end(), b.ids.begin(), b.ids.end());
  out.gc_tag = a.gc_tag;
  out.gc_tag.insert(out.gc_tag.end(), b.gc_tag.begin(), b.gc_tag.end());
  out.features.resize(na + nb, a.n_features());
  out.features << a.features, b.features;
  out.missing.resize(na + nb, a.n_features());
  out.missing.topRows(na) = a.missing;
  out.missing.bottomRows(nb) = b.missing;
  auto cat = [na, nb](const Vector& x, const Vector& y) {
    Vector v(na + nb);
    if (x.size() > 0) v << x, y;
    return x.size() > 0 ? v : Vector();
  };
  out.meta.snr = cat(a.meta.snr, b.meta.snr);
  out.meta.teff = cat(a.meta.teff, b.meta.teff);
  out.meta.logg = cat(a.meta.logg, b.meta.logg);
  out.meta.vb = cat(a.meta.vb, b.meta.vb);
  out.meta.starflag = a.meta.starflag;
  out.meta.starflag.insert(out.meta.starflag.end(), b.meta.starflag.begin(),
                           b.meta.starflag.end());
  out.check_invariants();
  return out;
}

std::pair<Dataset, std::vector<int>> synth_planted(int k, int per_cluster, int dims,
                                                   double separation, double noise_sd,
                                                   std::uint64_t seed) {
  if (k < 1) throw ConfigError("synth_planted: k must be >= 1");
  if (per_cluster < 1) throw ConfigError("synth_planted: per_cluster must be >= 1");
  if (dims < 1) throw ConfigError("synth_planted: dims must be >= 1");
  const Eigen::Index n = static_cast<Eigen::Index>(k) * per_cluster;
  Dataset ds;
  ds.feature_names.reserve(static_cast<std::size_t>(dims));
  for (int d = 0; d < dims; ++d) ds.feature_names.push_back("x" + std::to_string(d));
  ds.features.resize(n, dims);
  ds.missing = Mask::Constant(n, dims, false);
  std::vector<int> labels(static_cast<std::size_t>(n));
  Rng rng(seed);
  Eigen::Index row = 0;
  for (int c = 0; c < k; ++c) {
    for (int j = 0; j < per_cluster; ++j, ++row) {
      for (int d = 0; d < dims; ++d) {
        const double center = (d == 0) ? separation * c : 0.0;
        ds.features(row, d) = center + noise_sd * rng.normal();
      }
      labels[static_cast<std::size_t>(row)] = c + 1;
      char buf[24];
      std::snprintf(buf, sizeof(buf), "s%06lld", static_cast<long long>(row));
      ds.ids.emplace_back(buf);
      ds.gc_tag.push_back("blob" + std::to_string(c + 1));
    }
  }
  ds.check_invariants();
  return {std::move(ds), std::move(labels)};
}

}  // namespace stabclust
