#include "stabclust/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <unordered_set>

namespace stabclust {

using nlohmann::json;
using nlohmann::ordered_json;

RunConfig::RunConfig() {
  explore_embedders.push_back({EmbedderSpec::Method::pca, 2, 0.0});
  for (double p : {10.0, 30.0, 60.0, 100.0, 300.0}) {
    explore_embedders.push_back({EmbedderSpec::Method::tsne, 2, p});
  }
  clusterers.push_back({ClusterMethodSpec::Kind::kmeans, Linkage::complete, 0});
  clusterers.push_back({ClusterMethodSpec::Kind::hierarchical, Linkage::complete, 0});
  clusterers.push_back({ClusterMethodSpec::Kind::hierarchical, Linkage::ward, 0});
  for (int nn : {5, 30, 60, 100}) {
    clusterers.push_back({ClusterMethodSpec::Kind::spectral, Linkage::complete, nn});
  }
  for (int k = 2; k <= 30; ++k) k_values.push_back(k);
}

void RunConfig::validate() const {
  if (data_path.empty()) throw ConfigError("config: data.path is required");
  if (!(split_fraction > 0.0 && split_fraction < 1.0)) {
    throw ConfigError("config: split.fraction must lie in (0, 1)");
  }
  if (!(stability.pi > 0.0 && stability.pi < 1.0)) {
    throw ConfigError("config: stability.pi must lie in (0, 1)");
  }
  if (stability.B < 1) throw ConfigError("config: stability.B must be >= 1");
  if (k_values.empty()) throw ConfigError("config: k range is empty");
  for (int k : k_values) {
    if (k < 2) throw ConfigError("config: every k must be >= 2");
  }
  if (feature_sets.empty()) throw ConfigError("config: feature_sets is empty");
  if (imputers.empty()) throw ConfigError("config: imputers is empty");
  if (clusterers.empty()) throw ConfigError("config: clusterers is empty");
  if (forest_imputer.trees < 1 || forest_imputer.max_iters < 1) {
    throw ConfigError("config: forest_imputer needs trees >= 1 and max_iters >= 1");
  }
  if (forest_classifier_trees < 1) {
    throw ConfigError("config: forest_classifier.trees must be >= 1");
  }
  for (int k : retention_ks) {
    if (k < 1) throw ConfigError("config: retention_ks entries must be >= 1");
  }
  for (const auto& e : pipeline_embedders) {
    if (e.method == EmbedderSpec::Method::tsne && e.perplexity < 2.0) {
      throw ConfigError("config: tsne perplexity must be >= 2");
    }
  }
  if (heatmap_cap < 1) throw ConfigError("config: heatmap_cap must be >= 1");
}

namespace {

void reject_unknown_keys(const json& j, const std::set<std::string>& allowed,
                         const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (allowed.count(it.key()) == 0) {
      throw ConfigError("config: unknown key '" + it.key() + "' in " + where);
    }
  }
}

double get_number(const json& j, const std::string& where) {
  if (!j.is_number()) throw ConfigError("config: " + where + " must be a number");
  return j.get<double>();
}

int get_int(const json& j, const std::string& where) {
  if (!j.is_number_integer()) throw ConfigError("config: " + where + " must be an integer");
  return j.get<int>();
}

std::string get_string(const json& j, const std::string& where) {
  if (!j.is_string()) throw ConfigError("config: " + where + " must be a string");
  return j.get<std::string>();
}

std::vector<double> get_number_list(const json& j, const std::string& where) {
  if (!j.is_array()) throw ConfigError("config: " + where + " must be an array");
  std::vector<double> out;
  for (const auto& v : j) out.push_back(get_number(v, where + " entry"));
  return out;
}

CatalogSchema parse_schema(const json& j) {
  reject_unknown_keys(
      j, {"id", "gc", "snr", "teff", "logg", "vb", "starflag", "features"}, "data.schema");
  CatalogSchema s = CatalogSchema::apogee();
  if (j.contains("id")) s.id = get_string(j["id"], "data.schema.id");
  if (j.contains("gc")) s.gc = get_string(j["gc"], "data.schema.gc");
  if (j.contains("snr")) s.snr = get_string(j["snr"], "data.schema.snr");
  if (j.contains("teff")) s.teff = get_string(j["teff"], "data.schema.teff");
  if (j.contains("logg")) s.logg = get_string(j["logg"], "data.schema.logg");
  if (j.contains("vb")) s.vb = get_string(j["vb"], "data.schema.vb");
  if (j.contains("starflag")) s.starflag = get_string(j["starflag"], "data.schema.starflag");
  if (j.contains("features")) {
    if (!j["features"].is_array()) {
      throw ConfigError("config: data.schema.features must be an array");
    }
    s.features.clear();
    for (const auto& f : j["features"]) {
      s.features.push_back(get_string(f, "data.schema.features entry"));
    }
  }
  return s;
}

QualityFilter parse_filter(const json& j) {
  reject_unknown_keys(j, {"snr_min", "teff_width", "logg_max", "vb_min", "starflag"},
                      "filter");
  QualityFilter f;
  if (j.contains("snr_min")) f.snr_min = get_number(j["snr_min"], "filter.snr_min");
  if (j.contains("teff_width")) f.teff_width = get_number(j["teff_width"], "filter.teff_width");
  if (j.contains("logg_max")) f.logg_max = get_number(j["logg_max"], "filter.logg_max");
  if (j.contains("vb_min")) f.vb_min = get_number(j["vb_min"], "filter.vb_min");
  if (j.contains("starflag")) {
    if (!j["starflag"].is_number_integer()) {
      throw ConfigError("config: filter.starflag must be an integer");
    }
    f.starflag_required = j["starflag"].get<long long>();
  }
  return f;
}

FeatureSet parse_feature_set(const json& j) {
  if (j.is_string()) {
    const std::string name = j.get<std::string>();
    if (name == "small7") return FeatureSet::small7();
    if (name == "medium11") return FeatureSet::medium11();
    if (name == "large19") return FeatureSet::large19();
    if (name == "all") return FeatureSet::all();
    throw ConfigError("config: unknown feature set '" + name + "'");
  }
  if (j.is_object()) {
    reject_unknown_keys(j, {"label", "columns"}, "feature_sets entry");
    FeatureSet fs;
    if (!j.contains("label")) throw ConfigError("config: custom feature set needs a label");
    fs.label = get_string(j["label"], "feature_sets label");
    if (j.contains("columns")) {
      for (const auto& c : j["columns"]) {
        fs.columns.push_back(get_string(c, "feature_sets columns entry"));
      }
    }
    return fs;
  }
  throw ConfigError("config: feature_sets entries must be strings or objects");
}

EmbedderSpec parse_embedder(const json& j, const std::string& where) {
  if (!j.is_object() || !j.contains("method")) {
    throw ConfigError("config: " + where + " entries need a method field");
  }
  const std::string method = get_string(j["method"], where + ".method");
  EmbedderSpec e;
  if (method == "pca") {
    reject_unknown_keys(j, {"method", "dims"}, where);
    e.method = EmbedderSpec::Method::pca;
    if (j.contains("dims")) e.pca_dims = get_int(j["dims"], where + ".dims");
    if (e.pca_dims < 1) throw ConfigError("config: " + where + ".dims must be >= 1");
  } else if (method == "tsne") {
    reject_unknown_keys(j, {"method", "perplexity"}, where);
    e.method = EmbedderSpec::Method::tsne;
    if (j.contains("perplexity")) {
      e.perplexity = get_number(j["perplexity"], where + ".perplexity");
    }
  } else {
    throw ConfigError("config: unknown embedder method '" + method + "'");
  }
  return e;
}

ClusterMethodSpec parse_clusterer(const json& j) {
  if (!j.is_object() || !j.contains("method")) {
    throw ConfigError("config: clusterers entries need a method field");
  }
  const std::string method = get_string(j["method"], "clusterers.method");
  ClusterMethodSpec spec;
  if (method == "kmeans") {
    reject_unknown_keys(j, {"method"}, "clusterers entry");
    spec.kind = ClusterMethodSpec::Kind::kmeans;
  } else if (method == "hierarchical") {
    reject_unknown_keys(j, {"method", "linkage"}, "clusterers entry");
    spec.kind = ClusterMethodSpec::Kind::hierarchical;
    const std::string linkage =
        j.contains("linkage") ? get_string(j["linkage"], "clusterers.linkage") : "complete";
    if (linkage == "complete") spec.linkage = Linkage::complete;
    else if (linkage == "ward") spec.linkage = Linkage::ward;
    else if (linkage == "average") spec.linkage = Linkage::average;
    else throw ConfigError("config: unknown linkage '" + linkage + "'");
  } else if (method == "spectral") {
    reject_unknown_keys(j, {"method", "n_neighbors"}, "clusterers entry");
    spec.kind = ClusterMethodSpec::Kind::spectral;
    if (j.contains("n_neighbors")) {
      spec.n_neighbors = get_int(j["n_neighbors"], "clusterers.n_neighbors");
    }
    if (spec.n_neighbors < 1) {
      throw ConfigError("config: spectral n_neighbors must be >= 1");
    }
  } else {
    throw ConfigError("config: unknown clustering method '" + method + "'");
  }
  return spec;
}

}  // namespace

RunConfig parse_config_json(const json& j, const std::string& origin) {
  if (!j.is_object()) throw ConfigError(origin + ": config root must be an object");
  reject_unknown_keys(
      j,
      {"data", "split", "filter", "feature_sets", "imputers", "forest_imputer",
       "pipeline_embedders", "explore_embedders", "external_embeddings", "retention_ks",
       "tsne", "clusterers", "k_min", "k_max", "k_values", "stability", "sweep",
       "forest_classifier", "seed", "out", "heatmap_cap", "export_matrices",
       "plot_pipeline"},
      "config root");

  RunConfig cfg;
  if (!j.contains("data") || !j["data"].is_object()) {
    throw ConfigError(origin + ": config needs a data object with a path");
  }
  reject_unknown_keys(j["data"], {"path", "schema"}, "data");
  if (!j["data"].contains("path")) throw ConfigError(origin + ": data.path is required");
  cfg.data_path = get_string(j["data"]["path"], "data.path");
  if (j["data"].contains("schema")) cfg.schema = parse_schema(j["data"]["schema"]);

  if (j.contains("split")) {
    reject_unknown_keys(j["split"], {"fraction", "train_ids", "test_ids"}, "split");
    const json& sp = j["split"];
    if (sp.contains("fraction")) cfg.split_fraction = get_number(sp["fraction"], "split.fraction");
    if (sp.contains("train_ids")) cfg.split_train_ids = get_string(sp["train_ids"], "split.train_ids");
    if (sp.contains("test_ids")) cfg.split_test_ids = get_string(sp["test_ids"], "split.test_ids");
    if (cfg.split_train_ids.empty() != cfg.split_test_ids.empty()) {
      throw ConfigError("config: split.train_ids and split.test_ids must be set together");
    }
  }

  if (j.contains("filter")) {
    if (j["filter"].is_null()) cfg.filter.reset();
    else cfg.filter = parse_filter(j["filter"]);
  }

  if (j.contains("feature_sets")) {
    if (!j["feature_sets"].is_array()) throw ConfigError("config: feature_sets must be an array");
    cfg.feature_sets.clear();
    for (const auto& f : j["feature_sets"]) cfg.feature_sets.push_back(parse_feature_set(f));
  }

  if (j.contains("imputers")) {
    if (!j["imputers"].is_array()) throw ConfigError("config: imputers must be an array");
    cfg.imputers.clear();
    for (const auto& v : j["imputers"]) {
      const std::string name = get_string(v, "imputers entry");
      if (name == "mean") cfg.imputers.push_back(ImputerKind::mean);
      else if (name == "forest") cfg.imputers.push_back(ImputerKind::forest);
      else throw ConfigError("config: unknown imputer '" + name + "'");
    }
  }

  if (j.contains("forest_imputer")) {
    reject_unknown_keys(j["forest_imputer"], {"trees", "max_iters", "min_node_size"},
                        "forest_imputer");
    const json& fi = j["forest_imputer"];
    if (fi.contains("trees")) cfg.forest_imputer.trees = get_int(fi["trees"], "forest_imputer.trees");
    if (fi.contains("max_iters")) {
      cfg.forest_imputer.max_iters = get_int(fi["max_iters"], "forest_imputer.max_iters");
    }
    if (fi.contains("min_node_size")) {
      cfg.forest_imputer.min_node_size =
          get_int(fi["min_node_size"], "forest_imputer.min_node_size");
    }
  }

  auto parse_embedder_list = [](const json& arr, const std::string& where) {
    if (!arr.is_array()) throw ConfigError("config: " + where + " must be an array");
    std::vector<EmbedderSpec> out;
    for (const auto& e : arr) out.push_back(parse_embedder(e, where));
    return out;
  };
  if (j.contains("pipeline_embedders")) {
    cfg.pipeline_embedders = parse_embedder_list(j["pipeline_embedders"], "pipeline_embedders");
  }
  if (j.contains("explore_embedders")) {
    cfg.explore_embedders = parse_embedder_list(j["explore_embedders"], "explore_embedders");
  }

  if (j.contains("external_embeddings")) {
    if (!j["external_embeddings"].is_array()) {
      throw ConfigError("config: external_embeddings must be an array");
    }
    cfg.external_embeddings.clear();
    for (const auto& p : j["external_embeddings"]) {
      cfg.external_embeddings.push_back(get_string(p, "external_embeddings entry"));
    }
  }

  if (j.contains("retention_ks")) {
    cfg.retention_ks.clear();
    for (double v : get_number_list(j["retention_ks"], "retention_ks")) {
      cfg.retention_ks.push_back(static_cast<int>(v));
    }
  }

  if (j.contains("tsne")) {
    reject_unknown_keys(j["tsne"],
                        {"iters", "learning_rate", "early_exaggeration",
                         "exaggeration_iters", "momentum_switch_iter"},
                        "tsne");
    const json& t = j["tsne"];
    if (t.contains("iters")) cfg.tsne_options.max_iter = get_int(t["iters"], "tsne.iters");
    if (t.contains("learning_rate")) {
      cfg.tsne_options.learning_rate = get_number(t["learning_rate"], "tsne.learning_rate");
    }
    if (t.contains("early_exaggeration")) {
      cfg.tsne_options.early_exaggeration =
          get_number(t["early_exaggeration"], "tsne.early_exaggeration");
    }
    if (t.contains("exaggeration_iters")) {
      cfg.tsne_options.exaggeration_iters =
          get_int(t["exaggeration_iters"], "tsne.exaggeration_iters");
    }
    if (t.contains("momentum_switch_iter")) {
      cfg.tsne_options.momentum_switch_iter =
          get_int(t["momentum_switch_iter"], "tsne.momentum_switch_iter");
    }
  }

  if (j.contains("clusterers")) {
    if (!j["clusterers"].is_array()) throw ConfigError("config: clusterers must be an array");
    cfg.clusterers.clear();
    for (const auto& c : j["clusterers"]) cfg.clusterers.push_back(parse_clusterer(c));
  }

  if (j.contains("k_values")) {
    cfg.k_values.clear();
    for (double v : get_number_list(j["k_values"], "k_values")) {
      cfg.k_values.push_back(static_cast<int>(v));
    }
  } else if (j.contains("k_min") || j.contains("k_max")) {
    const int k_min = j.contains("k_min") ? get_int(j["k_min"], "k_min") : 2;
    const int k_max = j.contains("k_max") ? get_int(j["k_max"], "k_max") : 30;
    if (k_max < k_min) throw ConfigError("config: k_max must be >= k_min");
    cfg.k_values.clear();
    for (int k = k_min; k <= k_max; ++k) cfg.k_values.push_back(k);
  }

  if (j.contains("stability")) {
    reject_unknown_keys(j["stability"], {"B", "pi", "monti_subsampling"}, "stability");
    const json& st = j["stability"];
    if (st.contains("B")) cfg.stability.B = get_int(st["B"], "stability.B");
    if (st.contains("pi")) cfg.stability.pi = get_number(st["pi"], "stability.pi");
    if (st.contains("monti_subsampling")) {
      if (!st["monti_subsampling"].is_boolean()) {
        throw ConfigError("config: stability.monti_subsampling must be a boolean");
      }
      cfg.stability.monti_subsampling = st["monti_subsampling"].get<bool>();
    }
  }

  if (j.contains("sweep")) {
    reject_unknown_keys(j["sweep"], {"snr_min", "logg_max", "teff_width", "vb_min"}, "sweep");
    const json& sw = j["sweep"];
    if (sw.contains("snr_min")) cfg.sweep.snr_min = get_number_list(sw["snr_min"], "sweep.snr_min");
    if (sw.contains("logg_max")) cfg.sweep.logg_max = get_number_list(sw["logg_max"], "sweep.logg_max");
    if (sw.contains("teff_width")) {
      cfg.sweep.teff_width = get_number_list(sw["teff_width"], "sweep.teff_width");
    }
    if (sw.contains("vb_min")) cfg.sweep.vb_min = get_number_list(sw["vb_min"], "sweep.vb_min");
  }

  if (j.contains("forest_classifier")) {
    reject_unknown_keys(j["forest_classifier"], {"trees"}, "forest_classifier");
    if (j["forest_classifier"].contains("trees")) {
      cfg.forest_classifier_trees = get_int(j["forest_classifier"]["trees"],
                                            "forest_classifier.trees");
    }
  }

  if (j.contains("seed")) {
    if (!j["seed"].is_number_integer()) throw ConfigError("config: seed must be an integer");
    cfg.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("out")) cfg.out_dir = get_string(j["out"], "out");
  if (j.contains("heatmap_cap")) cfg.heatmap_cap = get_int(j["heatmap_cap"], "heatmap_cap");
  if (j.contains("export_matrices")) {
    if (!j["export_matrices"].is_boolean()) {
      throw ConfigError("config: export_matrices must be a boolean");
    }
    cfg.export_matrices = j["export_matrices"].get<bool>();
  }
  if (j.contains("plot_pipeline")) {
    cfg.plot_pipeline = get_string(j["plot_pipeline"], "plot_pipeline");
  }

  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": JSON parse error: " + e.what());
  }
  if (j.is_object() && j.contains("config_snapshot")) {
    return parse_config_json(j["config_snapshot"], path);  // run manifest
  }
  return parse_config_json(j, path);
}

namespace {

ordered_json embedder_to_json(const EmbedderSpec& e) {
  ordered_json o;
  if (e.method == EmbedderSpec::Method::pca) {
    o["method"] = "pca";
    o["dims"] = e.pca_dims;
  } else {
    o["method"] = "tsne";
    o["perplexity"] = e.perplexity;
  }
  return o;
}

}  // namespace

ordered_json config_to_json(const RunConfig& cfg) {
  ordered_json j;
  j["data"]["path"] = cfg.data_path;
  ordered_json schema;
  schema["id"] = cfg.schema.id;
  schema["gc"] = cfg.schema.gc;
  schema["snr"] = cfg.schema.snr;
  schema["teff"] = cfg.schema.teff;
  schema["logg"] = cfg.schema.logg;
  schema["vb"] = cfg.schema.vb;
  schema["starflag"] = cfg.schema.starflag;
  schema["features"] = cfg.schema.features;
  j["data"]["schema"] = schema;
  j["split"]["fraction"] = cfg.split_fraction;
  if (!cfg.split_train_ids.empty()) {
    j["split"]["train_ids"] = cfg.split_train_ids;
    j["split"]["test_ids"] = cfg.split_test_ids;
  }
  if (cfg.filter.has_value()) {
    ordered_json f;
    f["snr_min"] = cfg.filter->snr_min;
    f["teff_width"] = cfg.filter->teff_width;
    f["logg_max"] = cfg.filter->logg_max;
    f["vb_min"] = cfg.filter->vb_min;
    f["starflag"] = cfg.filter->starflag_required;
    j["filter"] = f;
  } else {
    j["filter"] = nullptr;
  }
  j["feature_sets"] = ordered_json::array();
  for (const auto& fs : cfg.feature_sets) {
    if (fs.label == "small7" || fs.label == "medium11" || fs.label == "large19" ||
        fs.label == "all") {
      j["feature_sets"].push_back(fs.label);
    } else {
      ordered_json o;
      o["label"] = fs.label;
      o["columns"] = fs.columns;
      j["feature_sets"].push_back(o);
    }
  }
  j["imputers"] = ordered_json::array();
  for (ImputerKind k : cfg.imputers) {
    j["imputers"].push_back(k == ImputerKind::mean ? "mean" : "forest");
  }
  j["forest_imputer"]["trees"] = cfg.forest_imputer.trees;
  j["forest_imputer"]["max_iters"] = cfg.forest_imputer.max_iters;
  j["forest_imputer"]["min_node_size"] = cfg.forest_imputer.min_node_size;
  j["pipeline_embedders"] = ordered_json::array();
  for (const auto& e : cfg.pipeline_embedders) j["pipeline_embedders"].push_back(embedder_to_json(e));
  j["explore_embedders"] = ordered_json::array();
  for (const auto& e : cfg.explore_embedders) j["explore_embedders"].push_back(embedder_to_json(e));
  j["external_embeddings"] = cfg.external_embeddings;
  j["retention_ks"] = cfg.retention_ks;
  j["tsne"]["iters"] = cfg.tsne_options.max_iter;
  j["tsne"]["learning_rate"] = cfg.tsne_options.learning_rate;
  j["tsne"]["early_exaggeration"] = cfg.tsne_options.early_exaggeration;
  j["tsne"]["exaggeration_iters"] = cfg.tsne_options.exaggeration_iters;
  j["tsne"]["momentum_switch_iter"] = cfg.tsne_options.momentum_switch_iter;
  j["clusterers"] = ordered_json::array();
  for (const auto& c : cfg.clusterers) {
    ordered_json o;
    switch (c.kind) {
      case ClusterMethodSpec::Kind::kmeans:
        o["method"] = "kmeans";
        break;
      case ClusterMethodSpec::Kind::hierarchical:
        o["method"] = "hierarchical";
        o["linkage"] = c.linkage == Linkage::complete ? "complete"
                       : c.linkage == Linkage::ward   ? "ward"
                                                      : "average";
        break;
      case ClusterMethodSpec::Kind::spectral:
        o["method"] = "spectral";
        o["n_neighbors"] = c.n_neighbors;
        break;
    }
    j["clusterers"].push_back(o);
  }
  j["k_values"] = cfg.k_values;
  j["stability"]["B"] = cfg.stability.B;
  j["stability"]["pi"] = cfg.stability.pi;
  j["stability"]["monti_subsampling"] = cfg.stability.monti_subsampling;
  j["sweep"]["snr_min"] = cfg.sweep.snr_min;
  j["sweep"]["logg_max"] = cfg.sweep.logg_max;
  j["sweep"]["teff_width"] = cfg.sweep.teff_width;
  j["sweep"]["vb_min"] = cfg.sweep.vb_min;
  j["forest_classifier"]["trees"] = cfg.forest_classifier_trees;
  j["seed"] = cfg.seed;
  j["out"] = cfg.out_dir;
  j["heatmap_cap"] = cfg.heatmap_cap;
  j["export_matrices"] = cfg.export_matrices;
  j["plot_pipeline"] = cfg.plot_pipeline;
  return j;
}

std::vector<PipelineSpec> enumerate_pipelines(const RunConfig& cfg, WarningLog* warnings) {
  std::vector<PipelineSpec> specs;
  std::unordered_set<std::string> seen;
  const QualityFilter filter = cfg.filter.value_or(QualityFilter::identity());
  const bool with_embedders = !cfg.pipeline_embedders.empty();
  for (const auto& fs : cfg.feature_sets) {
    for (ImputerKind imputer : cfg.imputers) {
      const std::size_t embed_count = with_embedders ? cfg.pipeline_embedders.size() : 1;
      for (std::size_t e = 0; e < embed_count; ++e) {
        PipelineSpec spec;
        spec.filter = filter;
        spec.features = fs;
        spec.imputer = imputer;
        spec.forest_params = cfg.forest_imputer;
        spec.tsne_options = cfg.tsne_options;
        spec.label = fs.label + "+" + (imputer == ImputerKind::mean ? "mean" : "forest");
        if (with_embedders) {
          spec.embedder = cfg.pipeline_embedders[e];
          spec.label += "+" + spec.embedder->label();
        }
        if (!seen.insert(spec.label).second) {
          warn(warnings, "pipelines: duplicate spec '" + spec.label + "' dropped");
          continue;
        }
        specs.push_back(std::move(spec));
      }
    }
  }
  if (specs.empty()) throw ConfigError("pipelines: the configured grid is empty");
  return specs;
}

}  // namespace stabclust
