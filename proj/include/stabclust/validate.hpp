#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "stabclust/cluster.hpp"
#include "stabclust/config.hpp"
#include "stabclust/dataset.hpp"
#include "stabclust/forest.hpp"
#include "stabclust/preprocess.hpp"

namespace stabclust {

// Hubert-Arabie adjusted Rand index via exact pair counting. Degenerate
// denominator (both partitions trivial): 1.0 for identical partitions,
// 0.0 otherwise.
double ari(const std::vector<int>& a, const std::vector<int>& b);

struct StabilityCell {
  std::string method_label;
  int k = 0;
  double mean = 0.0;
  double sd = 0.0;
  int b_used = 0;
};

struct StabilityIterate {
  std::string method_label;
  int k = 0;
  int b = 0;
  std::string g1;
  std::string g2;
  double score = 0.0;
};

struct StabilityTable {
  std::vector<StabilityCell> cells;        // method-major, k ascending within
  std::vector<StabilityIterate> iterates;  // full breakdown for re-aggregation
  std::vector<std::string> method_order;
  int B = 0;
  double pi = 0.0;
};

struct StabilitySearchOptions {
  int B = 100;
  double pi = 0.8;
  std::uint64_t seed = 0;
  int threads = 1;
  int max_redraws = 100;  // per iterate, when the overlap is degenerate
};

// Algorithm: per (k, method, b), draw two pi-subsamples and two pipelines
// uniformly (pipelines canonically sorted by label), cluster each
// materialized subsample into k clusters and score the ARI on the overlap.
// Iterate seeds derive from (master seed, k, method label, b), so results
// are independent of enumeration order and thread count.
StabilityTable stability_search(const Dataset& train,
                                const std::vector<PipelineSpec>& pipelines,
                                const std::vector<const ClusterMethod*>& methods,
                                const std::vector<int>& k_values,
                                const StabilitySearchOptions& opts,
                                WarningLog* warnings = nullptr);

struct ModelSelection {
  std::string method_label;
  int k = 0;
  double mean_stability = 0.0;
  bool overridden = false;
};

// Argmax of mean stability; ties prefer smaller k, then method order.
// An override must name an existing cell and is recorded as such.
ModelSelection select_model(
    const StabilityTable& table,
    const std::optional<std::pair<std::string, int>>& override_choice = std::nullopt);

struct ConsensusMatrix {
  Matrix values;           // co-clustering frequency, symmetric, in [0,1]
  Eigen::MatrixXi counts;  // pair co-occurrence denominators
  std::vector<std::string> ids;
};

struct ConsensusOptions {
  bool subsample = false;  // Monti-style row subsampling per run
  double pi = 0.8;
  int threads = 1;
};

// One clustering per pipeline (full rows unless subsampling); values are
// co-cluster count / co-occurrence count.
ConsensusMatrix consensus(const Dataset& ds, const std::vector<PipelineSpec>& pipelines,
                          const ClusterMethod& method, int k, std::uint64_t seed,
                          const ConsensusOptions& opts = {},
                          WarningLog* warnings = nullptr);

// Average-linkage agglomeration on dissimilarity 1 - C, cut at k.
ClusterAssignment consensus_labels(const ConsensusMatrix& c, int k);

struct LocalStability {
  std::vector<double> scores;  // in [0,1]; singleton clusters score 1
  std::vector<std::string> ids;
  std::vector<int> labels;
};

LocalStability local_stability(const ConsensusMatrix& c, const ClusterAssignment& labels);

struct ClusterMatching {
  std::vector<std::pair<int, int>> pairs;  // (label in a, label in b)
  long long total_overlap = 0;
};

// Hungarian assignment maximizing total contingency overlap; surplus
// clusters on the larger side stay unmapped.
ClusterMatching match_clusters(const std::vector<int>& a, const std::vector<int>& b);

struct GeneralizabilityOptions {
  ForestParams forest;
  std::uint64_t seed = 0;
  bool allow_identical_ids = false;  // self-check mode (test = train copy)
};

struct GeneralizabilityReport {
  std::string pipeline_label;
  double overall_ari = 0.0;
  std::map<int, double> per_cluster_precision;  // keyed by test-cluster label
  std::vector<std::pair<int, int>> matching;    // (test label, predicted label)
  std::vector<int> flagged_clusters;            // zero matched predictions
};

// Cluster train and test independently through `spec`, fit a forest
// classifier on the standardized pre-embedding train features, predict the
// test rows, and score ARI plus per-cluster precision after optimal
// matching.
GeneralizabilityReport generalizability(const Dataset& train, const Dataset& test,
                                        const PipelineSpec& spec,
                                        const ClusterMethod& method, int k,
                                        const GeneralizabilityOptions& opts,
                                        WarningLog* warnings = nullptr);

struct GridGeneralizability {
  std::vector<GeneralizabilityReport> per_pipeline;
  double mean_overall_ari = 0.0;
  // Mean precision per reference cluster, translated through each
  // pipeline's test-to-reference matching. Present when a reference is given.
  std::map<int, double> mean_precision_by_reference;
};

GridGeneralizability generalizability_grid(
    const Dataset& train, const Dataset& test, const std::vector<PipelineSpec>& pipelines,
    const ClusterMethod& method, int k, const GeneralizabilityOptions& opts,
    const ClusterAssignment* reference_test_labels = nullptr,
    WarningLog* warnings = nullptr);

struct SweepSetting {
  std::string param;
  double value = 0.0;
  QualityFilter filter;
};

struct SweepRow {
  std::string param;
  double value = 0.0;
  std::size_t rows_kept = 0;
  std::size_t shared = 0;
  double ari = std::numeric_limits<double>::quiet_NaN();
  std::string status;  // "ok" or an error message
};

// Refilter the raw catalog per setting, rerun the consensus pipeline, and
// score ARI against the reference labels restricted to shared ids.
std::vector<SweepRow> sensitivity_sweep(const Dataset& raw,
                                        const std::vector<SweepSetting>& settings,
                                        const ClusterAssignment& reference,
                                        const ClusterMethod& method, int k,
                                        const std::vector<PipelineSpec>& pipelines,
                                        std::uint64_t seed, const ConsensusOptions& copts,
                                        WarningLog* warnings = nullptr);

std::vector<SweepSetting> sweep_settings_from_config(const RunConfig& cfg);

struct GcCompositionRow {
  int cluster = 0;
  std::string gc;
  std::size_t count = 0;
  double frac_of_cluster = 0.0;  // share of the cluster made of this GC
  double frac_of_gc = 0.0;       // share of the GC contained in this cluster
};

std::vector<GcCompositionRow> gc_composition(const ClusterAssignment& labels,
                                             const std::vector<std::string>& gc_tags);

}  // namespace stabclust
