#include "stabclust/stages.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <set>

#include "stabclust/csv.hpp"
#include "stabclust/embed.hpp"
#include "stabclust/svg.hpp"
#include "stabclust/validate.hpp"

namespace stabclust {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

class StageContext {
 public:
  StageContext(const StageOptions& opts, std::string stage)
      : opts_(opts), stage_(std::move(stage)), start_(std::chrono::steady_clock::now()) {
    dir_ = fs::path(opts.cfg.out_dir) / stage_;
    fs::create_directories(dir_);
  }

  const fs::path& dir() const { return dir_; }
  WarningLog* warnings() { return &warnings_; }

  std::string artifact(const std::string& name) {
    artifacts_.push_back(stage_ + "/" + name);
    return (dir_ / name).string();
  }

  void finish() {
    ordered_json j;
    j["stage"] = stage_;
    j["version"] = kVersion;
    j["seed"] = opts_.cfg.seed;
    j["reproducible"] = opts_.reproducible;
    j["config_snapshot"] = config_to_json(opts_.cfg);
    j["artifacts"] = artifacts_;
    j["warnings"] = warnings_.messages;
    if (!opts_.reproducible) {
      const auto elapsed = std::chrono::steady_clock::now() - start_;
      j["elapsed_ms"] =
          std::chrono::duration_cast<std::chrono::milliseconds>(elapsed).count();
    }
    std::ofstream out(dir_ / "manifest.json", std::ios::binary);
    if (!out) throw DataError("cannot write manifest in " + dir_.string());
    out << j.dump(2) << "\n";
    for (const auto& msg : warnings_.messages) {
      std::fprintf(stderr, "warning: %s\n", msg.c_str());
    }
  }

 private:
  const StageOptions& opts_;
  std::string stage_;
  fs::path dir_;
  std::vector<std::string> artifacts_;
  WarningLog warnings_;
  std::chrono::steady_clock::time_point start_;
};

void write_json_file(const std::string& path, const ordered_json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write file: " + path);
  out << j.dump(2) << "\n";
}

ordered_json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open file: " + path);
  ordered_json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(path + ": JSON parse error: " + e.what());
  }
  return j;
}

std::uint64_t stage_seed(const RunConfig& cfg, const char* name) {
  return derive_seed(cfg.seed, {hash_str(name)});
}

// resolves the configured plot pipeline (falls back to the first spec)
const PipelineSpec& canonical_pipeline(const std::vector<PipelineSpec>& pipelines,
                                       const RunConfig& cfg, WarningLog* warnings) {
  for (const auto& p : pipelines) {
    if (p.label == cfg.plot_pipeline) return p;
  }
  warn(warnings, "plot pipeline '" + cfg.plot_pipeline + "' not in the grid; using '" +
                     pipelines.front().label + "'");
  return pipelines.front();
}

// preferred visualization embedder: first valid tsne in the explore grid,
// else PCA to 2 components
Embedding plot_embedding(const FeatureMatrix& fm, const RunConfig& cfg,
                         std::uint64_t seed, WarningLog* warnings) {
  const auto n = static_cast<double>(fm.n_rows());
  for (const auto& e : cfg.explore_embedders) {
    if (e.method == EmbedderSpec::Method::tsne && e.perplexity >= 2.0 &&
        e.perplexity < n / 3.0) {
      return tsne(fm, e.perplexity, seed, cfg.tsne_options, warnings);
    }
  }
  return pca(fm, static_cast<int>(std::min<Eigen::Index>(2, fm.n_cols())), warnings);
}

ClusterMethodSpec find_method_spec(const RunConfig& cfg, const std::string& label) {
  for (const auto& spec : cfg.clusterers) {
    if (spec.label() == label) return spec;
  }
  throw ConfigError("selected method '" + label + "' is not in the configured clusterers");
}

std::vector<int> usable_k_values(const RunConfig& cfg, Eigen::Index n_rows,
                                 WarningLog* warnings) {
  const auto cap = static_cast<int>(
      std::floor(cfg.stability.pi * static_cast<double>(n_rows)));
  std::vector<int> ks;
  for (int k : cfg.k_values) {
    if (k <= cap) ks.push_back(k);
  }
  if (ks.size() < cfg.k_values.size()) {
    warn(warnings, "search: dropped " + std::to_string(cfg.k_values.size() - ks.size()) +
                       " k value(s) above the subsample size " + std::to_string(cap));
  }
  if (ks.empty()) throw ConfigError("search: no usable k values for this dataset size");
  return ks;
}

void write_labels_csv(const std::string& path, const ClusterAssignment& labels) {
  CsvTable t;
  t.header = {"id", "label", "pipeline", "method", "k"};
  for (std::size_t i = 0; i < labels.ids.size(); ++i) {
    t.rows.push_back({labels.ids[i], std::to_string(labels.labels[i]),
                      labels.pipeline_label, labels.method_label,
                      std::to_string(labels.k)});
  }
  write_csv(path, t);
}

std::vector<double> column_of(const Matrix& m, Eigen::Index c) {
  std::vector<double> v(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) v[static_cast<std::size_t>(i)] = m(i, c);
  return v;
}

void scatter_by_category(const std::string& path, const Embedding& emb,
                         const std::vector<std::string>& tags, const std::string& title,
                         bool timestamp) {
  std::vector<std::string> names;
  std::vector<int> index(tags.size());
  for (std::size_t i = 0; i < tags.size(); ++i) {
    const std::string tag = tags[i].empty() ? "(none)" : tags[i];
    auto it = std::find(names.begin(), names.end(), tag);
    if (it == names.end()) {
      names.push_back(tag);
      index[i] = static_cast<int>(names.size()) - 1;
    } else {
      index[i] = static_cast<int>(it - names.begin());
    }
  }
  svg::ScatterOptions opts;
  opts.title = title;
  opts.timestamp = timestamp;
  svg::write_scatter_categorical(path, column_of(emb.coords, 0), column_of(emb.coords, 1),
                                 index, names, opts);
}

}  // namespace

Dataset load_prepared(const std::string& path) {
  const CsvTable table = read_csv(path);
  CatalogSchema schema;
  schema.id = "id";
  schema.gc = table.column("gc") >= 0 ? "gc" : "";
  schema.snr = table.column("snr") >= 0 ? "snr" : "";
  schema.teff = table.column("teff") >= 0 ? "teff" : "";
  schema.logg = table.column("logg") >= 0 ? "logg" : "";
  schema.vb = table.column("vb") >= 0 ? "vb" : "";
  schema.starflag = table.column("starflag") >= 0 ? "starflag" : "";
  return load_catalog(path, schema, nullptr);
}

void cmd_prepare(const StageOptions& opts) {
  StageContext ctx(opts, "prepare");
  const RunConfig& cfg = opts.cfg;
  const Dataset raw = load_catalog(cfg.data_path, cfg.schema, ctx.warnings());
  const Dataset filtered =
      cfg.filter.has_value() ? apply_quality_filters(raw, *cfg.filter, ctx.warnings()) : raw;

  SplitResult split;
  if (!cfg.split_train_ids.empty()) {
    split = split_from_id_files(filtered, cfg.split_train_ids, cfg.split_test_ids);
  } else {
    split = train_test_split(filtered, cfg.split_fraction, stage_seed(cfg, "split"));
  }

  write_dataset_csv(split.train, ctx.artifact("train.csv"));
  write_dataset_csv(split.test, ctx.artifact("test.csv"));

  ordered_json summary;
  summary["n_raw"] = raw.n_rows();
  summary["n_filtered"] = filtered.n_rows();
  summary["n_features"] = filtered.n_features();
  summary["n_train"] = split.train.n_rows();
  summary["n_test"] = split.test.n_rows();
  summary["fraction"] = split.fraction;
  summary["split_source"] = cfg.split_train_ids.empty() ? "seeded" : "files";
  write_json_file(ctx.artifact("summary.json"), summary);
  ctx.finish();
}

void cmd_explore(const StageOptions& opts) {
  StageContext ctx(opts, "explore");
  const RunConfig& cfg = opts.cfg;
  const fs::path prepare_dir = fs::path(cfg.out_dir) / "prepare";
  const Dataset train = load_prepared((prepare_dir / "train.csv").string());
  const auto n = train.n_rows();

  std::vector<PipelineSpec> pipelines = enumerate_pipelines(cfg, ctx.warnings());
  const PipelineSpec& canonical = canonical_pipeline(pipelines, cfg, ctx.warnings());
  const FeatureMatrix fm =
      materialize(canonical, train, derive_seed(stage_seed(cfg, "explore"),
                                                {hash_str(canonical.label)}),
                  ctx.warnings())
          .features;

  std::vector<int> ks;
  for (int k : cfg.retention_ks) {
    if (k >= 1 && k <= static_cast<int>(n) - 1) ks.push_back(k);
  }
  std::sort(ks.begin(), ks.end());
  ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
  if (ks.size() < cfg.retention_ks.size()) {
    warn(ctx.warnings(), "explore: dropped retention sizes outside [1, n-1]");
  }
  if (ks.empty()) throw ConfigError("explore: no usable retention neighborhood sizes");

  std::vector<RetentionCurve> curves;
  std::optional<Embedding> plot_emb;
  for (const auto& espec : cfg.explore_embedders) {
    Embedding emb;
    if (espec.method == EmbedderSpec::Method::pca) {
      const int q = static_cast<int>(
          std::min<Eigen::Index>(espec.pca_dims, fm.n_cols()));
      emb = pca(fm, q, ctx.warnings());
    } else {
      if (!(espec.perplexity >= 2.0 && espec.perplexity < static_cast<double>(n) / 3.0)) {
        warn(ctx.warnings(), "explore: skipping " + espec.label() +
                                 " (perplexity out of range for n=" + std::to_string(n) +
                                 ")");
        continue;
      }
      emb = tsne(fm, espec.perplexity,
                 derive_seed(stage_seed(cfg, "explore"), {hash_str(espec.label())}),
                 cfg.tsne_options, ctx.warnings());
    }
    export_embedding(emb, ctx.artifact("embedding_" + espec.label() + ".csv"));
    curves.push_back(retention_curve(fm, emb, ks));
    if (!plot_emb.has_value() && espec.method == EmbedderSpec::Method::tsne) {
      plot_emb = std::move(emb);
    }
  }
  if (opts.self_test) {
    Embedding identity;
    identity.coords = fm.values;
    identity.ids = fm.ids;
    identity.method_label = "identity";
    curves.push_back(retention_curve(fm, identity, ks));
  }
  for (const auto& path : cfg.external_embeddings) {
    const Embedding emb = import_embedding(path, fm.ids);
    curves.push_back(retention_curve(fm, emb, ks));
  }
  if (curves.empty()) throw ConfigError("explore: no embeddings produced");

  CsvTable retention;
  retention.header = {"method", "k", "retention"};
  std::vector<svg::LineSeries> series;
  for (const auto& curve : curves) {
    svg::LineSeries s;
    s.label = curve.method_label;
    for (std::size_t i = 0; i < curve.neighborhood_sizes.size(); ++i) {
      retention.rows.push_back({curve.method_label,
                                std::to_string(curve.neighborhood_sizes[i]),
                                fmt_num(curve.retention[i])});
      s.x.push_back(curve.neighborhood_sizes[i]);
      s.y.push_back(curve.retention[i]);
    }
    series.push_back(std::move(s));
  }
  write_csv(ctx.artifact("retention.csv"), retention);
  svg::PlotOptions popts;
  popts.title = "neighborhood retention (" + canonical.label + ")";
  popts.x_label = "neighborhood size";
  popts.y_label = "retention";
  popts.log_x = true;
  popts.timestamp = !opts.reproducible;
  svg::write_line_chart(ctx.artifact("retention_curves.svg"), series, popts);

  if (!plot_emb.has_value()) {
    plot_emb = plot_embedding(fm, cfg, derive_seed(stage_seed(cfg, "explore"),
                                                   {hash_str("plot")}),
                              ctx.warnings());
  }
  scatter_by_category(ctx.artifact("embedding_gc.svg"), *plot_emb, train.gc_tag,
                      plot_emb->method_label + " by GC tag", !opts.reproducible);
  for (Eigen::Index c = 0; c < fm.n_cols(); ++c) {
    const std::string& col = fm.column_names[static_cast<std::size_t>(c)];
    svg::ScatterOptions sopts;
    sopts.title = plot_emb->method_label + " by " + col + " (standardized)";
    sopts.timestamp = !opts.reproducible;
    svg::write_scatter_continuous(ctx.artifact("embedding_" + col + ".svg"),
                                  column_of(plot_emb->coords, 0),
                                  column_of(plot_emb->coords, 1), column_of(fm.values, c),
                                  col, sopts);
  }

  if (cfg.export_matrices) {
    for (const auto& spec : pipelines) {
      const MaterializedPipeline mat =
          materialize(spec, train, derive_seed(stage_seed(cfg, "explore"),
                                               {hash_str(spec.label)}),
                      ctx.warnings());
      export_feature_matrix(mat.features, ctx.artifact(spec.label + ".csv"));
    }
  }
  ctx.finish();
}

void cmd_search(const StageOptions& opts) {
  StageContext ctx(opts, "search");
  const RunConfig& cfg = opts.cfg;
  const Dataset train =
      load_prepared((fs::path(cfg.out_dir) / "prepare" / "train.csv").string());

  std::vector<PipelineSpec> pipelines = enumerate_pipelines(cfg, ctx.warnings());
  std::vector<std::unique_ptr<ClusterMethod>> methods;
  std::vector<const ClusterMethod*> method_ptrs;
  for (const auto& spec : cfg.clusterers) {
    methods.push_back(make_cluster_method(spec));
    method_ptrs.push_back(methods.back().get());
  }
  const std::vector<int> ks = usable_k_values(cfg, train.n_rows(), ctx.warnings());

  StabilitySearchOptions sopts;
  sopts.B = cfg.stability.B;
  sopts.pi = cfg.stability.pi;
  sopts.seed = stage_seed(cfg, "search");
  sopts.threads = opts.threads;
  const StabilityTable table =
      stability_search(train, pipelines, method_ptrs, ks, sopts, ctx.warnings());

  CsvTable stability;
  stability.header = {"method", "k", "mean", "sd", "B"};
  for (const auto& cell : table.cells) {
    stability.rows.push_back({cell.method_label, std::to_string(cell.k),
                              fmt_num(cell.mean), fmt_num(cell.sd),
                              std::to_string(cell.b_used)});
  }
  write_csv(ctx.artifact("stability.csv"), stability);

  CsvTable iterates;
  iterates.header = {"method", "k", "b", "g1", "g2", "ari"};
  for (const auto& it : table.iterates) {
    iterates.rows.push_back({it.method_label, std::to_string(it.k), std::to_string(it.b),
                             it.g1, it.g2, fmt_num(it.score)});
  }
  write_csv(ctx.artifact("stability_iterates.csv"), iterates);

  const ModelSelection selection = select_model(table, opts.override_selection);
  ordered_json sel;
  sel["method"] = selection.method_label;
  sel["k"] = selection.k;
  sel["mean_stability"] = selection.mean_stability;
  sel["source"] = selection.overridden ? "override" : "argmax";
  sel["B"] = table.B;
  sel["pi"] = table.pi;
  write_json_file(ctx.artifact("selection.json"), sel);

  std::vector<svg::LineSeries> series;
  for (const auto& method : table.method_order) {
    svg::LineSeries s;
    s.label = method;
    for (const auto& cell : table.cells) {
      if (cell.method_label != method) continue;
      s.x.push_back(cell.k);
      s.y.push_back(cell.mean);
    }
    series.push_back(std::move(s));
  }
  svg::PlotOptions popts;
  popts.title = "mean stability by method and k (B=" + std::to_string(table.B) + ")";
  popts.x_label = "k";
  popts.y_label = "mean ARI stability";
  popts.timestamp = !opts.reproducible;
  svg::write_line_chart(ctx.artifact("stability_curves.svg"), series, popts);
  ctx.finish();
}

void cmd_validate(const StageOptions& opts) {
  StageContext ctx(opts, "validate");
  const RunConfig& cfg = opts.cfg;
  const fs::path out = fs::path(cfg.out_dir);
  const Dataset train = load_prepared((out / "prepare" / "train.csv").string());
  const Dataset test = opts.self_check
                           ? train
                           : load_prepared((out / "prepare" / "test.csv").string());

  std::string method_label;
  int k = 0;
  if (opts.override_selection.has_value()) {
    method_label = opts.override_selection->first;
    k = opts.override_selection->second;
  } else {
    const ordered_json sel = read_json_file((out / "search" / "selection.json").string());
    method_label = sel.at("method").get<std::string>();
    k = sel.at("k").get<int>();
  }
  const std::unique_ptr<ClusterMethod> method =
      make_cluster_method(find_method_spec(cfg, method_label));

  std::vector<PipelineSpec> pipelines = enumerate_pipelines(cfg, ctx.warnings());
  ConsensusOptions copts;
  copts.subsample = cfg.stability.monti_subsampling;
  copts.pi = cfg.stability.pi;
  copts.threads = opts.threads;

  // (a) consensus aggregation + local stability on the training rows
  const ConsensusMatrix cm = consensus(train, pipelines, *method, k,
                                       stage_seed(cfg, "consensus-train"), copts,
                                       ctx.warnings());
  const ClusterAssignment train_labels = consensus_labels(cm, k);
  const LocalStability ls = local_stability(cm, train_labels);

  {
    CsvTable dense;
    dense.header.push_back("id");
    for (const auto& id : cm.ids) dense.header.push_back(id);
    for (Eigen::Index r = 0; r < cm.values.rows(); ++r) {
      std::vector<std::string> row;
      row.reserve(dense.header.size());
      row.push_back(cm.ids[static_cast<std::size_t>(r)]);
      for (Eigen::Index c = 0; c < cm.values.cols(); ++c) {
        row.push_back(fmt_num(cm.values(r, c)));
      }
      dense.rows.push_back(std::move(row));
    }
    write_csv(ctx.artifact("consensus.csv"), dense);
  }
  write_labels_csv(ctx.artifact("train_labels.csv"), train_labels);
  {
    CsvTable t;
    t.header = {"id", "label", "local_stability"};
    for (std::size_t i = 0; i < ls.ids.size(); ++i) {
      t.rows.push_back({ls.ids[i], std::to_string(ls.labels[i]), fmt_num(ls.scores[i])});
    }
    write_csv(ctx.artifact("local_stability.csv"), t);
  }

  // heatmap rows sorted by (cluster, local stability desc) to expose blocks
  {
    std::vector<int> order(ls.ids.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      const auto sa = static_cast<std::size_t>(a);
      const auto sb = static_cast<std::size_t>(b);
      if (ls.labels[sa] != ls.labels[sb]) return ls.labels[sa] < ls.labels[sb];
      if (ls.scores[sa] != ls.scores[sb]) return ls.scores[sa] > ls.scores[sb];
      return a < b;
    });
    svg::HeatmapOptions hopts;
    hopts.title = "consensus matrix (" + method_label + ", k=" + std::to_string(k) + ")";
    hopts.max_cells = cfg.heatmap_cap;
    hopts.timestamp = !opts.reproducible;
    svg::write_heatmap(ctx.artifact("consensus_heatmap.svg"), cm.values, order, hopts);
  }

  // canonical embedding overlays
  {
    const PipelineSpec& canonical = canonical_pipeline(pipelines, cfg, ctx.warnings());
    const FeatureMatrix fm =
        materialize(canonical, train, derive_seed(stage_seed(cfg, "validate"),
                                                  {hash_str(canonical.label)}),
                    ctx.warnings())
            .features;
    const Embedding emb = plot_embedding(fm, cfg, derive_seed(stage_seed(cfg, "validate"),
                                                              {hash_str("plot")}),
                                         ctx.warnings());
    std::vector<std::string> label_tags(train_labels.labels.size());
    for (std::size_t i = 0; i < label_tags.size(); ++i) {
      label_tags[i] = "cluster " + std::to_string(train_labels.labels[i]);
    }
    scatter_by_category(ctx.artifact("clusters_embedding.svg"), emb, label_tags,
                        emb.method_label + " with consensus clusters",
                        !opts.reproducible);
    svg::ScatterOptions sopts;
    sopts.title = emb.method_label + " with local stability";
    sopts.timestamp = !opts.reproducible;
    svg::write_scatter_continuous(ctx.artifact("local_stability_embedding.svg"),
                                  column_of(emb.coords, 0), column_of(emb.coords, 1),
                                  ls.scores, "local stability", sopts);
  }

  // (b) generalizability against independently clustered test rows
  const ConsensusMatrix cm_test = consensus(test, pipelines, *method, k,
                                            stage_seed(cfg, "consensus-test"), copts,
                                            ctx.warnings());
  const ClusterAssignment test_labels = consensus_labels(cm_test, k);
  GeneralizabilityOptions gopts;
  gopts.forest.n_trees = cfg.forest_classifier_trees;
  gopts.seed = stage_seed(cfg, "generalize");
  gopts.allow_identical_ids = opts.self_check;
  if (opts.self_check) {
    gopts.forest.n_trees = 1;
    gopts.forest.bootstrap = false;
    gopts.forest.mtry = 1 << 20;  // capped to d: memorizing configuration
  }
  const GridGeneralizability gen = generalizability_grid(
      train, test, pipelines, *method, k, gopts, &test_labels, ctx.warnings());
  {
    ordered_json j;
    j["method"] = method_label;
    j["k"] = k;
    j["self_check"] = opts.self_check;
    j["mean_overall_ari"] = gen.mean_overall_ari;
    ordered_json ref;
    for (const auto& [label, precision] : gen.mean_precision_by_reference) {
      ref[std::to_string(label)] = precision;
    }
    j["mean_precision_by_reference_cluster"] = ref;
    j["per_pipeline"] = ordered_json::array();
    for (const auto& report : gen.per_pipeline) {
      ordered_json p;
      p["pipeline"] = report.pipeline_label;
      p["overall_ari"] = report.overall_ari;
      ordered_json prec;
      for (const auto& [label, precision] : report.per_cluster_precision) {
        prec[std::to_string(label)] = precision;
      }
      p["per_cluster_precision"] = prec;
      ordered_json matching = ordered_json::array();
      for (const auto& [t, pr] : report.matching) {
        matching.push_back({{"test", t}, {"predicted", pr}});
      }
      p["matching"] = matching;
      p["flagged_clusters"] = report.flagged_clusters;
      j["per_pipeline"].push_back(p);
    }
    write_json_file(ctx.artifact("generalizability.json"), j);
  }

  // final refit on all rows
  const Dataset full = opts.self_check ? train : concat_rows(train, test);
  const ConsensusMatrix cm_full = consensus(full, pipelines, *method, k,
                                            stage_seed(cfg, "consensus-full"), copts,
                                            ctx.warnings());
  const ClusterAssignment full_labels = consensus_labels(cm_full, k);
  const LocalStability ls_full = local_stability(cm_full, full_labels);
  write_labels_csv(ctx.artifact("final_labels.csv"), full_labels);
  {
    const auto rows = gc_composition(full_labels, full.gc_tag);
    CsvTable t;
    t.header = {"cluster", "gc", "count", "frac_of_cluster", "frac_of_gc"};
    for (const auto& row : rows) {
      t.rows.push_back({std::to_string(row.cluster), row.gc, std::to_string(row.count),
                        fmt_num(row.frac_of_cluster), fmt_num(row.frac_of_gc)});
    }
    write_csv(ctx.artifact("composition.csv"), t);
  }
  {
    ordered_json j;
    j["method"] = method_label;
    j["k"] = k;
    j["n_full"] = full.n_rows();
    ordered_json clusters = ordered_json::array();
    for (int c = 1; c <= k; ++c) {
      std::size_t size = 0;
      double stability_sum = 0.0;
      for (std::size_t i = 0; i < full_labels.labels.size(); ++i) {
        if (full_labels.labels[i] != c) continue;
        ++size;
        stability_sum += ls_full.scores[i];
      }
      ordered_json cj;
      cj["cluster"] = c;
      cj["size"] = size;
      cj["mean_local_stability"] = size > 0 ? stability_sum / static_cast<double>(size) : 0.0;
      auto it = gen.mean_precision_by_reference.find(c);
      if (it != gen.mean_precision_by_reference.end()) {
        cj["mean_generalizability"] = it->second;
      }
      clusters.push_back(cj);
    }
    j["clusters"] = clusters;
    write_json_file(ctx.artifact("summary.json"), j);
  }

  // sensitivity sweeps against the final clusters
  const std::vector<SweepSetting> settings = sweep_settings_from_config(cfg);
  if (!settings.empty()) {
    const Dataset raw = load_catalog(cfg.data_path, cfg.schema, nullptr);
    const auto rows =
        sensitivity_sweep(raw, settings, full_labels, *method, k, pipelines,
                          stage_seed(cfg, "sweep"), copts, ctx.warnings());
    CsvTable t;
    t.header = {"param", "value", "rows_kept", "shared", "ari", "status"};
    std::map<std::string, svg::LineSeries> series;
    for (const auto& row : rows) {
      t.rows.push_back({row.param, fmt_num(row.value), std::to_string(row.rows_kept),
                        std::to_string(row.shared), fmt_num(row.ari), row.status});
      if (row.status == "ok") {
        auto& s = series[row.param];
        s.label = row.param;
        s.x.push_back(row.value);
        s.y.push_back(row.ari);
      }
    }
    write_csv(ctx.artifact("sweep.csv"), t);
    std::vector<svg::LineSeries> list;
    for (auto& [name, s] : series) list.push_back(std::move(s));
    if (!list.empty()) {
      svg::PlotOptions popts;
      popts.title = "sensitivity of final clusters to QC thresholds";
      popts.x_label = "threshold";
      popts.y_label = "ARI vs baseline clusters";
      popts.timestamp = !opts.reproducible;
      svg::write_line_chart(ctx.artifact("sweep.svg"), list, popts);
    }
  }
  ctx.finish();
}

void cmd_report(const std::string& run_dir) {
  const fs::path root(run_dir);
  const std::vector<std::string> stage_names = {"prepare", "explore", "search", "validate"};
  std::vector<std::pair<std::string, ordered_json>> manifests;
  for (const auto& stage : stage_names) {
    const fs::path manifest = root / stage / "manifest.json";
    if (fs::exists(manifest)) {
      manifests.emplace_back(stage, read_json_file(manifest.string()));
    }
  }
  if (manifests.empty()) {
    std::string msg = "report: no stage manifests under " + run_dir + "; expected any of:";
    for (const auto& stage : stage_names) msg += " " + stage + "/manifest.json";
    throw DataError(msg);
  }
  std::vector<std::string> missing;
  for (const auto& [stage, manifest] : manifests) {
    for (const auto& artifact : manifest.at("artifacts")) {
      const fs::path p = root / artifact.get<std::string>();
      if (!fs::exists(p)) missing.push_back(artifact.get<std::string>());
    }
  }
  if (!missing.empty()) {
    std::string msg = "report: missing artifacts:";
    for (const auto& m : missing) msg += " " + m;
    throw DataError(msg);
  }

  fs::create_directories(root / "report");
  ordered_json summary;
  summary["version"] = kVersion;
  ordered_json stages_json;
  for (const auto& [stage, manifest] : manifests) {
    ordered_json s;
    s["artifacts"] = manifest.at("artifacts");
    s["warnings"] = manifest.at("warnings");
    stages_json[stage] = s;
  }
  summary["stages"] = stages_json;
  for (const char* extra : {"prepare/summary.json", "search/selection.json",
                            "validate/summary.json"}) {
    const fs::path p = root / extra;
    if (fs::exists(p)) {
      const std::string key = fs::path(extra).parent_path().string();
      summary["results"][key] = read_json_file(p.string());
    }
  }
  write_json_file((root / "report" / "summary.json").string(), summary);

  std::ofstream text(root / "report" / "summary.txt", std::ios::binary);
  if (!text) throw DataError("report: cannot write summary.txt");
  text << "run summary (" << kVersion << ")\n";
  for (const auto& [stage, manifest] : manifests) {
    text << "\n[" << stage << "]\n";
    for (const auto& artifact : manifest.at("artifacts")) {
      text << "  " << artifact.get<std::string>() << "\n";
    }
    for (const auto& w : manifest.at("warnings")) {
      text << "  warning: " << w.get<std::string>() << "\n";
    }
  }
  if (summary.contains("results") && summary["results"].contains("search")) {
    const auto& sel = summary["results"]["search"];
    text << "\nselected model: " << sel.at("method").get<std::string>() << " k="
         << sel.at("k").get<int>() << " (" << sel.at("source").get<std::string>()
         << ")\n";
  }
  if (summary.contains("results") && summary["results"].contains("validate")) {
    const auto& v = summary["results"]["validate"];
    text << "final clusters: k=" << v.at("k").get<int>() << " over "
         << v.at("n_full").get<long long>() << " rows\n";
  }
}

}  // namespace stabclust
