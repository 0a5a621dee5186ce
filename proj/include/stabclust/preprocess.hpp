#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "stabclust/embed.hpp"
#include "stabclust/feature_matrix.hpp"

namespace stabclust {

// Quality-control thresholds (Table-style defaults marked *). A criterion is
// evaluated only when its meta column is present; an absent column under a
// restrictive threshold is an error. starflag_required = -1 accepts any flag.
struct QualityFilter {
  double snr_min = 70.0;
  double teff_width = 1000.0;  // total width of a window centered on median(teff)
  double logg_max = 3.6;
  double vb_min = 0.9;
  long long starflag_required = 0;

  static QualityFilter identity();
};

// Keeps rows with snr >= snr_min, |teff - median| <= teff_width/2,
// logg <= logg_max, vb >= vb_min, starflag == required. NaN metadata fails
// its criterion. Row order is preserved.
Dataset apply_quality_filters(const Dataset& ds, const QualityFilter& f,
                              WarningLog* warnings = nullptr);

// Ordered abundance column selection. An empty column list means "all
// feature columns of the dataset".
struct FeatureSet {
  std::string label;
  std::vector<std::string> columns;

  static FeatureSet small7();
  static FeatureSet medium11();
  static FeatureSet large19();
  static FeatureSet all();
};

MaskedMatrix select_features(const Dataset& ds, const FeatureSet& fs);

struct ColumnStats {
  double mean = 0.0;
  double sd = 0.0;  // sample sd (n-1); 0 flags a constant column
  Eigen::Index observed = 0;
};

struct StandardizeResult {
  MaskedMatrix matrix;
  std::vector<ColumnStats> stats;
};

// (x - mean_observed) / sd_observed per column, observed entries only; the
// mask is unchanged. Constant observed columns become all zeros (warning).
StandardizeResult standardize(const MaskedMatrix& m, WarningLog* warnings = nullptr);

// Masked entries replaced by the column mean of observed entries.
Matrix impute_mean(const MaskedMatrix& m);

struct ForestImputeParams {
  int trees = 100;
  int max_iters = 10;
  int min_node_size = 5;
};

struct ForestImputeResult {
  Matrix values;
  int forest_fits = 0;
  int iterations = 0;
};

// missForest-style iterative imputation: mean-initialize, then refit a
// forest regressor per missing column (in increasing missingness order)
// until the imputed-cell sum of squared changes increases or max_iters is
// reached; an increase returns the previous iteration's matrix.
ForestImputeResult impute_forest(const MaskedMatrix& m, const ForestImputeParams& params,
                                 std::uint64_t seed);

enum class ImputerKind { mean, forest };

struct EmbedderSpec {
  enum class Method { pca, tsne };
  Method method = Method::pca;
  int pca_dims = 2;
  double perplexity = 30.0;

  std::string label() const;
};

// One complete preprocessing recipe g: filter provenance, feature tier,
// imputer, optional embedder.
struct PipelineSpec {
  QualityFilter filter;
  FeatureSet features;
  ImputerKind imputer = ImputerKind::mean;
  ForestImputeParams forest_params;
  std::optional<EmbedderSpec> embedder;
  TsneOptions tsne_options;
  std::string label;
};

struct MaterializedPipeline {
  FeatureMatrix features;             // standardized + imputed (pre-embedding)
  std::optional<FeatureMatrix> embedded;  // present when the spec embeds

  const FeatureMatrix& cluster_input() const {
    return embedded.has_value() ? *embedded : features;
  }
};

// select -> standardize -> impute -> optional embed. `ds` must already be
// quality-filtered; the spec's filter field is provenance only.
MaterializedPipeline materialize(const PipelineSpec& spec, const Dataset& ds,
                                 std::uint64_t seed, WarningLog* warnings = nullptr);

void export_feature_matrix(const FeatureMatrix& m, const std::string& path);

struct RunConfig;

// Cross-product of configured feature sets x imputers x pipeline embedders
// (the embedder factor only when configured). Deterministic order, labels
// encode all choices, duplicates dropped with a warning.
std::vector<PipelineSpec> enumerate_pipelines(const RunConfig& cfg,
                                              WarningLog* warnings = nullptr);

}  // namespace stabclust
