#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "stabclust/common.hpp"

namespace stabclust {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Mask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

// QC metadata columns. A column of size 0 is absent. NaN marks an
// unrecorded value; rows with NaN fail any active filter on that column.
struct MetaTable {
  Vector snr;
  Vector teff;
  Vector logg;
  Vector vb;
  std::vector<long long> starflag;  // raw bitfield; -1 when unrecorded

  bool has_snr() const { return snr.size() > 0; }
  bool has_teff() const { return teff.size() > 0; }
  bool has_logg() const { return logg.size() > 0; }
  bool has_vb() const { return vb.size() > 0; }
  bool has_starflag() const { return !starflag.empty(); }
};

// Row-indexed catalog: identifiers, optional globular-cluster tags, QC
// metadata, and an abundance matrix with an explicit missingness mask.
// Masked cells hold 0.0 and are excluded from every downstream statistic.
struct Dataset {
  std::vector<std::string> ids;
  std::vector<std::string> gc_tag;  // "" = untagged
  MetaTable meta;
  std::vector<std::string> feature_names;
  Matrix features;  // n x p
  Mask missing;     // n x p

  Eigen::Index n_rows() const { return features.rows(); }
  Eigen::Index n_features() const { return features.cols(); }

  Dataset subset(const std::vector<std::size_t>& rows) const;
  void check_invariants() const;  // throws DataError on violation
};

// Maps logical column roles to CSV header names. An empty string marks the
// role as unused; a non-empty name must exist in the file. An empty feature
// list selects every column not claimed by another role, in header order.
struct CatalogSchema {
  std::string id = "id";
  std::string gc = "gc";
  std::string snr = "snr";
  std::string teff = "teff";
  std::string logg = "logg";
  std::string vb = "vb";
  std::string starflag = "starflag";
  std::vector<std::string> features;

  static CatalogSchema apogee();  // case-study defaults (19 abundance columns)
};

// Table 1 abundance column tiers.
const std::vector<std::string>& abundance_columns_small7();
const std::vector<std::string>& abundance_columns_medium11();
const std::vector<std::string>& abundance_columns_large19();

Dataset load_catalog(const std::string& path, const CatalogSchema& schema,
                     WarningLog* warnings = nullptr);
Dataset parse_catalog_text(const std::string& text, const std::string& origin,
                           const CatalogSchema& schema, WarningLog* warnings = nullptr);

// Inverse of load_catalog under an identity schema (only present columns are
// written; masked feature cells become empty fields).
void write_dataset_csv(const Dataset& ds, const std::string& path);

struct SplitResult {
  Dataset train;
  Dataset test;
  std::uint64_t seed = 0;
  double fraction = 0.0;
};

// Deterministic for a fixed seed; |train| = floor(fraction * n); row order
// within each part follows the original order.
SplitResult train_test_split(const Dataset& ds, double fraction, std::uint64_t seed);

// Splits by externally released id lists (one id per line, or a CSV with an
// `id` column). Every dataset id must land in exactly one part.
SplitResult split_from_id_files(const Dataset& ds, const std::string& train_path,
                                const std::string& test_path);

// Gaussian blobs with centers spaced `separation` apart along axis 0, so all
// between-center distances are >= separation. No missing entries. Labels are
// 1..k; gc_tag is "blob<label>".
std::pair<Dataset, std::vector<int>> synth_planted(int k, int per_cluster, int dims,
                                                   double separation, double noise_sd,
                                                   std::uint64_t seed);

// Row-wise concatenation; feature/meta layouts must agree, ids must stay
// unique.
Dataset concat_rows(const Dataset& a, const Dataset& b);

}  // namespace stabclust
