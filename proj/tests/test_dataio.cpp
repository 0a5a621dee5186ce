#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "stabclust/config.hpp"
#include "stabclust/csv.hpp"
#include "stabclust/dataset.hpp"
#include "test_support.hpp"

using namespace stabclust;
using testsup::TempDir;

namespace {

CatalogSchema toy_schema() {
  CatalogSchema s;
  s.id = "id";
  s.gc = "gc";
  s.snr = "";
  s.teff = "";
  s.logg = "";
  s.vb = "";
  s.starflag = "";
  s.features = {"FE_H", "MG_FE"};
  return s;
}

std::string dataset_to_string(const Dataset& ds) {
  TempDir tmp("serialize");
  write_dataset_csv(ds, tmp.file("ds.csv"));
  return testsup::slurp(tmp.file("ds.csv"));
}

}  // namespace

TEST_CASE("load_catalog builds the missingness mask from empty and sentinel cells") {
  const std::string csv =
      "id,gc,FE_H,MG_FE\n"
      "a,NGC1,,0.1\n"
      "b,NGC1,-0.5,nan\n"
      "c,NGC2,-9999.0,0.3\n";
  const Dataset ds = parse_catalog_text(csv, "toy", toy_schema());
  CHECK(ds.n_rows() == 3);
  CHECK(ds.n_features() == 2);
  CHECK(ds.missing(0, 0));       // empty cell
  CHECK(ds.missing(1, 1));       // nan token
  CHECK(ds.missing(2, 0));       // <= -9000 sentinel
  CHECK_FALSE(ds.missing(0, 1));
  CHECK(ds.features(1, 0) == doctest::Approx(-0.5));
  CHECK(ds.gc_tag[2] == "NGC2");
}

TEST_CASE("load_catalog errors") {
  SUBCASE("missing required column names the column") {
    const std::string csv = "id,gc,FE_H\na,NGC1,0.0\n";
    CHECK_THROWS_WITH_AS(parse_catalog_text(csv, "toy", toy_schema()),
                         doctest::Contains("MG_FE"), DataError);
  }
  SUBCASE("duplicate id") {
    const std::string csv = "id,gc,FE_H,MG_FE\na,x,0,0\na,y,1,1\n";
    CHECK_THROWS_WITH_AS(parse_catalog_text(csv, "toy", toy_schema()),
                         doctest::Contains("duplicate id"), DataError);
  }
  SUBCASE("unparseable cell reports the row number") {
    const std::string csv = "id,gc,FE_H,MG_FE\na,x,0,0\nb,y,zzz,1\n";
    CHECK_THROWS_WITH_AS(parse_catalog_text(csv, "toy", toy_schema()),
                         doctest::Contains("row 3"), DataError);
  }
  SUBCASE("ragged row reports its line") {
    const std::string csv = "id,gc,FE_H,MG_FE\na,x,0\n";
    CHECK_THROWS_AS(parse_catalog_text(csv, "toy", toy_schema()), DataError);
  }
}

TEST_CASE("mask totality: mask count equals empty/sentinel cell count") {
  Rng rng(7);
  std::string csv = "id,gc,F0,F1,F2\n";
  int expected = 0;
  for (int r = 0; r < 60; ++r) {
    csv += "s" + std::to_string(r) + ",g,";
    for (int c = 0; c < 3; ++c) {
      const double u = rng.uniform();
      if (u < 0.15) {
        ++expected;  // empty
      } else if (u < 0.25) {
        csv += "NaN";
        ++expected;
      } else if (u < 0.3) {
        csv += "-9100.5";
        ++expected;
      } else {
        csv += fmt_num(rng.normal());
      }
      csv += c < 2 ? "," : "";
    }
    csv += "\n";
  }
  CatalogSchema s = toy_schema();
  s.features = {"F0", "F1", "F2"};
  const Dataset ds = parse_catalog_text(csv, "toy", s);
  CHECK(static_cast<int>(ds.missing.count()) == expected);
}

TEST_CASE("train_test_split partitions deterministically") {
  auto [ds, labels] = synth_planted(2, 5, 3, 10.0, 0.5, 11);

  SUBCASE("every id lands in exactly one part (n=10, fraction=0.5)") {
    const SplitResult split = train_test_split(ds, 0.5, 42);
    CHECK(split.train.n_rows() == 5);
    CHECK(split.test.n_rows() == 5);
    std::set<std::string> seen;
    for (const auto& id : split.train.ids) CHECK(seen.insert(id).second);
    for (const auto& id : split.test.ids) CHECK(seen.insert(id).second);
    CHECK(seen == std::set<std::string>(ds.ids.begin(), ds.ids.end()));
  }

  SUBCASE("same seed replays the same split byte for byte") {
    const SplitResult a = train_test_split(ds, 0.7, 99);
    const SplitResult b = train_test_split(ds, 0.7, 99);
    CHECK(dataset_to_string(a.train) == dataset_to_string(b.train));
    CHECK(dataset_to_string(a.test) == dataset_to_string(b.test));
  }

  SUBCASE("row order within parts follows the original order") {
    const SplitResult split = train_test_split(ds, 0.6, 5);
    for (std::size_t i = 1; i < split.train.ids.size(); ++i) {
      CHECK(testsup::id_index(split.train.ids[i - 1]) <
            testsup::id_index(split.train.ids[i]));
    }
  }

  SUBCASE("floor rounding reproduces 2628/658 at n=3286") {
    auto [big, big_labels] = synth_planted(1, 3286, 2, 0.0, 1.0, 3);
    const SplitResult split = train_test_split(big, 0.8, 17);
    CHECK(split.train.n_rows() == 2628);
    CHECK(split.test.n_rows() == 658);
  }

  SUBCASE("errors") {
    CHECK_THROWS_AS(train_test_split(ds, 1.2, 1), ConfigError);
    auto [tiny, tiny_labels] = synth_planted(1, 1, 2, 0.0, 1.0, 1);
    CHECK_THROWS_AS(train_test_split(tiny, 0.5, 1), DataError);
  }
}

TEST_CASE("split_from_id_files loads released splits verbatim") {
  auto [ds, labels] = synth_planted(2, 4, 2, 5.0, 0.3, 2);
  TempDir tmp("splitfiles");
  testsup::spit(tmp.file("train.txt"), "s000000\ns000002\ns000003\ns000005\ns000007\n");
  testsup::spit(tmp.file("test.txt"), "s000001\ns000004\ns000006\n");
  const SplitResult split =
      split_from_id_files(ds, tmp.file("train.txt"), tmp.file("test.txt"));
  CHECK(split.train.n_rows() == 5);
  CHECK(split.test.n_rows() == 3);
  CHECK(split.test.ids[0] == "s000001");

  testsup::spit(tmp.file("bad.txt"), "s000001\ns000004\n");
  CHECK_THROWS_AS(split_from_id_files(ds, tmp.file("train.txt"), tmp.file("bad.txt")),
                  DataError);
}

TEST_CASE("synth_planted generates separated gaussian blobs") {
  SUBCASE("k=1 gives a single label") {
    auto [ds, labels] = synth_planted(1, 20, 3, 5.0, 0.1, 9);
    for (int l : labels) CHECK(l == 1);
  }

  SUBCASE("wide separation makes nearest-center recovery exact") {
    auto [ds, labels] = synth_planted(2, 30, 4, 20.0, 0.1, 13);
    for (Eigen::Index i = 0; i < ds.n_rows(); ++i) {
      const double d0 = ds.features(i, 0);  // centers at 0 and 20 on axis 0
      const int nearest = d0 < 10.0 ? 1 : 2;
      CHECK(nearest == labels[static_cast<std::size_t>(i)]);
    }
  }

  SUBCASE("between-center distances respect the separation floor") {
    auto [ds, labels] = synth_planted(3, 50, 2, 4.0, 0.2, 21);
    Matrix centers = Matrix::Zero(3, 2);
    Eigen::Vector3i counts = Eigen::Vector3i::Zero();
    for (Eigen::Index i = 0; i < ds.n_rows(); ++i) {
      const int c = labels[static_cast<std::size_t>(i)] - 1;
      centers.row(c) += ds.features.row(i);
      counts[c] += 1;
    }
    for (int c = 0; c < 3; ++c) centers.row(c) /= counts[c];
    for (int a = 0; a < 3; ++a) {
      for (int b = a + 1; b < 3; ++b) {
        CHECK((centers.row(a) - centers.row(b)).norm() >= 4.0 - 0.5);
      }
    }
    // empirical means converge to the configured centers per coordinate
    const double tol = 3.0 * 0.2 / std::sqrt(50.0);
    for (int c = 0; c < 3; ++c) {
      CHECK(std::abs(centers(c, 0) - 4.0 * c) <= tol);
      CHECK(std::abs(centers(c, 1) - 0.0) <= tol);
    }
  }

  SUBCASE("precondition violations") {
    CHECK_THROWS_AS(synth_planted(0, 5, 2, 1.0, 0.1, 1), ConfigError);
    CHECK_THROWS_AS(synth_planted(2, 0, 2, 1.0, 0.1, 1), ConfigError);
  }
}

TEST_CASE("load_config fills defaults and rejects bad documents") {
  TempDir tmp("config");

  SUBCASE("minimal config gets all defaults") {
    testsup::spit(tmp.file("min.json"), R"({"data": {"path": "cat.csv"}})");
    const RunConfig cfg = load_config(tmp.file("min.json"));
    CHECK(cfg.stability.B == 100);
    CHECK(cfg.stability.pi == doctest::Approx(0.8));
    CHECK(cfg.split_fraction == doctest::Approx(0.8));
    CHECK(cfg.feature_sets.size() == 3);
    CHECK(cfg.imputers.size() == 2);
    CHECK(cfg.clusterers.size() == 7);  // kmeans, 2 linkages, 4 spectral
    CHECK(cfg.k_values.front() == 2);
    CHECK(cfg.k_values.back() == 30);
    CHECK(cfg.filter.has_value());
    CHECK(cfg.filter->snr_min == doctest::Approx(70.0));
    CHECK(cfg.filter->teff_width == doctest::Approx(1000.0));
    CHECK(cfg.filter->logg_max == doctest::Approx(3.6));
    CHECK(cfg.filter->vb_min == doctest::Approx(0.9));
    CHECK(cfg.filter->starflag_required == 0);
  }

  SUBCASE("pi outside (0,1) is a validation error") {
    testsup::spit(tmp.file("bad.json"),
                  R"({"data": {"path": "x"}, "stability": {"pi": 1.5}})");
    CHECK_THROWS_AS(load_config(tmp.file("bad.json")), ConfigError);
  }

  SUBCASE("unknown keys are rejected") {
    testsup::spit(tmp.file("unk.json"), R"({"data": {"path": "x"}, "bogus": 1})");
    CHECK_THROWS_WITH_AS(load_config(tmp.file("unk.json")), doctest::Contains("bogus"),
                         ConfigError);
  }

  SUBCASE("k below 2 is rejected") {
    testsup::spit(tmp.file("k.json"), R"({"data": {"path": "x"}, "k_values": [1, 2]})");
    CHECK_THROWS_AS(load_config(tmp.file("k.json")), ConfigError);
  }

  SUBCASE("baseline grid matches the 3x2 preprocessing table") {
    testsup::spit(tmp.file("base.json"), R"({"data": {"path": "x"}})");
    const RunConfig cfg = load_config(tmp.file("base.json"));
    WarningLog log;
    const auto pipelines = enumerate_pipelines(cfg, &log);
    CHECK(pipelines.size() == 6);  // 3 feature sets x 2 imputers
    std::set<std::string> labels;
    for (const auto& p : pipelines) labels.insert(p.label);
    CHECK(labels.count("small7+mean") == 1);
    CHECK(labels.count("large19+forest") == 1);
  }

  SUBCASE("embedder grid multiplies the pipeline count") {
    testsup::spit(tmp.file("emb.json"), R"({
      "data": {"path": "x"},
      "pipeline_embedders": [
        {"method": "pca", "dims": 2},
        {"method": "tsne", "perplexity": 30},
        {"method": "tsne", "perplexity": 100}
      ]
    })");
    const RunConfig cfg = load_config(tmp.file("emb.json"));
    CHECK(enumerate_pipelines(cfg).size() == 18);
  }

  SUBCASE("duplicate grid entries are dropped with a warning") {
    testsup::spit(tmp.file("dup.json"), R"({
      "data": {"path": "x"},
      "feature_sets": ["small7", "small7"],
      "imputers": ["mean"]
    })");
    const RunConfig cfg = load_config(tmp.file("dup.json"));
    WarningLog log;
    CHECK(enumerate_pipelines(cfg, &log).size() == 1);
    CHECK(log.messages.size() == 1);
  }

  SUBCASE("a manifest with a config snapshot round-trips") {
    testsup::spit(tmp.file("m.json"),
                  R"({"stage": "prepare", "config_snapshot": {"data": {"path": "y.csv"}}})");
    const RunConfig cfg = load_config(tmp.file("m.json"));
    CHECK(cfg.data_path == "y.csv");
  }
}

TEST_CASE("config snapshot round-trips through config_to_json") {
  TempDir tmp("snapshot");
  testsup::spit(tmp.file("c.json"), R"({
    "data": {"path": "x.csv", "schema": {"id": "ID", "features": ["A", "B"]}},
    "filter": null,
    "feature_sets": [{"label": "ab", "columns": ["A", "B"]}],
    "imputers": ["mean"],
    "k_values": [2, 3],
    "stability": {"B": 7, "pi": 0.6},
    "seed": 123
  })");
  const RunConfig cfg = load_config(tmp.file("c.json"));
  testsup::spit(tmp.file("snap.json"), config_to_json(cfg).dump(2));
  const RunConfig again = load_config(tmp.file("snap.json"));
  CHECK(again.schema.id == "ID");
  CHECK_FALSE(again.filter.has_value());
  CHECK(again.stability.B == 7);
  CHECK(again.seed == 123);
  CHECK(config_to_json(again).dump(2) == config_to_json(cfg).dump(2));
}
