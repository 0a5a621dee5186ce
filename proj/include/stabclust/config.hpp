#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "stabclust/cluster.hpp"
#include "stabclust/preprocess.hpp"

namespace stabclust {

struct StabilityParams {
  int B = 100;
  double pi = 0.8;
  bool monti_subsampling = false;  // subsample rows inside consensus runs
};

struct SweepGrid {
  std::vector<double> snr_min = {30, 50, 70, 90, 110, 130, 150};
  std::vector<double> logg_max = {3.0, 3.3, 3.6, 3.9, 4.2};
  std::vector<double> teff_width;
  std::vector<double> vb_min;
};

// Complete run description. Every field except data_path has a default;
// unknown JSON keys are rejected.
struct RunConfig {
  std::string data_path;
  CatalogSchema schema = CatalogSchema::apogee();
  double split_fraction = 0.8;
  std::string split_train_ids;  // released split files; used verbatim when set
  std::string split_test_ids;
  std::optional<QualityFilter> filter = QualityFilter{};  // null in JSON disables
  std::vector<FeatureSet> feature_sets = {FeatureSet::small7(), FeatureSet::medium11(),
                                          FeatureSet::large19()};
  std::vector<ImputerKind> imputers = {ImputerKind::mean, ImputerKind::forest};
  ForestImputeParams forest_imputer;
  std::vector<EmbedderSpec> pipeline_embedders;  // empty: pipelines do not embed
  std::vector<EmbedderSpec> explore_embedders;   // defaulted in constructor below
  std::vector<std::string> external_embeddings;
  std::vector<int> retention_ks = {10, 30, 60, 100, 300, 1000};
  TsneOptions tsne_options;
  std::vector<ClusterMethodSpec> clusterers;  // defaulted in constructor below
  std::vector<int> k_values;                  // defaulted to 2..30
  StabilityParams stability;
  SweepGrid sweep;
  int forest_classifier_trees = 100;
  std::uint64_t seed = 904872653;
  std::string out_dir = "runs/out";
  int heatmap_cap = 1500;
  bool export_matrices = false;
  std::string plot_pipeline = "medium11+mean";

  RunConfig();
  void validate() const;  // throws ConfigError
};

// Strict parse; also accepts a run manifest (uses its config_snapshot).
RunConfig load_config(const std::string& path);
RunConfig parse_config_json(const nlohmann::json& j, const std::string& origin);

// Normalized snapshot with deterministic key order; load_config on this
// round-trips to an equivalent RunConfig.
nlohmann::ordered_json config_to_json(const RunConfig& cfg);

}  // namespace stabclust
