#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "stabclust/preprocess.hpp"
#include "test_support.hpp"

using namespace stabclust;
using testsup::make_fm;
using testsup::make_masked;

namespace {

// dataset with QC metadata driven by explicit vectors
Dataset meta_dataset(const std::vector<double>& snr, const std::vector<double>& teff,
                     const std::vector<double>& logg, const std::vector<double>& vb,
                     const std::vector<long long>& flag) {
  const auto n = static_cast<Eigen::Index>(snr.size());
  Dataset ds;
  ds.feature_names = {"f"};
  ds.features = Matrix::Zero(n, 1);
  ds.missing = Mask::Constant(n, 1, false);
  ds.meta.snr.resize(n);
  ds.meta.teff.resize(n);
  ds.meta.logg.resize(n);
  ds.meta.vb.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    ds.ids.push_back("m" + std::to_string(i));
    ds.gc_tag.emplace_back();
    ds.meta.snr[i] = snr[static_cast<std::size_t>(i)];
    ds.meta.teff[i] = teff[static_cast<std::size_t>(i)];
    ds.meta.logg[i] = logg[static_cast<std::size_t>(i)];
    ds.meta.vb[i] = vb[static_cast<std::size_t>(i)];
    ds.features(i, 0) = static_cast<double>(i);
  }
  ds.meta.starflag = flag;
  return ds;
}

Dataset abundance_dataset(int n, int p, std::uint64_t seed,
                          const std::vector<std::string>& names) {
  Dataset ds;
  ds.feature_names = names;
  ds.features.resize(n, p);
  ds.missing = Mask::Constant(n, p, false);
  Rng rng(seed);
  for (int i = 0; i < n; ++i) {
    ds.ids.push_back("a" + std::to_string(i));
    ds.gc_tag.emplace_back();
    for (int c = 0; c < p; ++c) ds.features(i, c) = rng.normal();
  }
  return ds;
}

}  // namespace

TEST_CASE("quality filters apply threshold semantics") {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  // teff median is 5000
  Dataset ds = meta_dataset({80, 69, 70, 90, nan}, {5000, 5000, 5000, 6000, 5000},
                            {3.0, 3.0, 3.0, 3.0, 3.0}, {0.95, 0.95, 0.95, 0.95, 0.95},
                            {0, 0, 0, 0, 0});
  QualityFilter f;
  f.snr_min = 70;
  f.teff_width = 1000;
  f.logg_max = 3.6;
  f.vb_min = 0.9;
  f.starflag_required = 0;

  SUBCASE("snr 69 drops under snr_min 70; boundary 70 survives") {
    const Dataset kept = apply_quality_filters(ds, f);
    std::set<std::string> ids(kept.ids.begin(), kept.ids.end());
    CHECK(ids.count("m0") == 1);
    CHECK(ids.count("m1") == 0);  // snr 69
    CHECK(ids.count("m2") == 1);  // snr 70 exactly
    CHECK(ids.count("m3") == 0);  // teff 6000 outside 5000 +- 500
    CHECK(ids.count("m4") == 0);  // NaN snr fails
  }

  SUBCASE("identity filter keeps everything") {
    const Dataset kept = apply_quality_filters(ds, QualityFilter::identity());
    CHECK(kept.n_rows() == ds.n_rows());
  }

  SUBCASE("all rows filtered is an explicit error") {
    QualityFilter harsh = f;
    harsh.snr_min = 1e9;
    CHECK_THROWS_WITH_AS(apply_quality_filters(ds, harsh), doctest::Contains("all rows"),
                         DataError);
  }

  SUBCASE("active criterion with absent column is an error") {
    Dataset no_meta = abundance_dataset(5, 2, 1, {"x", "y"});
    CHECK_THROWS_AS(apply_quality_filters(no_meta, f), DataError);
    CHECK_NOTHROW(apply_quality_filters(no_meta, QualityFilter::identity()));
  }

  SUBCASE("starflag equality; -1 accepts anything") {
    Dataset flagged = meta_dataset({80, 80}, {5000, 5000}, {3, 3}, {1, 1}, {0, 512});
    const Dataset kept = apply_quality_filters(flagged, f);
    CHECK(kept.n_rows() == 1);
    QualityFilter any = f;
    any.starflag_required = -1;
    CHECK(apply_quality_filters(flagged, any).n_rows() == 2);
  }
}

TEST_CASE("filter monotonicity: raising snr_min shrinks the surviving set") {
  Rng rng(33);
  std::vector<double> snr, teff, logg, vb;
  std::vector<long long> flag;
  for (int i = 0; i < 120; ++i) {
    snr.push_back(rng.uniform() * 160.0);
    teff.push_back(4500 + rng.uniform() * 1000);
    logg.push_back(2.5 + rng.uniform() * 2.0);
    vb.push_back(rng.uniform());
    flag.push_back(0);
  }
  const Dataset ds = meta_dataset(snr, teff, logg, vb, flag);
  QualityFilter f = QualityFilter::identity();
  f.starflag_required = 0;
  std::set<std::string> previous(ds.ids.begin(), ds.ids.end());
  for (double threshold : {10.0, 40.0, 70.0, 100.0, 130.0}) {
    f.snr_min = threshold;
    const Dataset kept = apply_quality_filters(ds, f);
    std::set<std::string> current(kept.ids.begin(), kept.ids.end());
    for (const auto& id : current) CHECK(previous.count(id) == 1);
    previous = std::move(current);
  }
}

TEST_CASE("select_features honors tier definitions and order") {
  const Dataset ds = abundance_dataset(10, 19, 5, abundance_columns_large19());
  CHECK(select_features(ds, FeatureSet::small7()).n_cols() == 7);
  CHECK(select_features(ds, FeatureSet::medium11()).n_cols() == 11);
  CHECK(select_features(ds, FeatureSet::large19()).n_cols() == 19);
  CHECK(select_features(ds, FeatureSet::all()).n_cols() == 19);

  const MaskedMatrix m = select_features(ds, FeatureSet::small7());
  CHECK(m.column_names.front() == "FE_H");
  CHECK(m.column_names.back() == "AL_FE");

  FeatureSet bad{"bad", {"FE_H", "NOT_A_COLUMN"}};
  CHECK_THROWS_WITH_AS(select_features(ds, bad), doctest::Contains("NOT_A_COLUMN"),
                       DataError);

  // tier nesting
  const auto& small = abundance_columns_small7();
  const auto& medium = abundance_columns_medium11();
  const auto& large = abundance_columns_large19();
  for (const auto& c : small) CHECK(std::count(medium.begin(), medium.end(), c) == 1);
  for (const auto& c : medium) CHECK(std::count(large.begin(), large.end(), c) == 1);
}

TEST_CASE("standardize uses observed-only sample statistics") {
  SUBCASE("[1,2,3] maps to [-1,0,1] under the n-1 convention") {
    Matrix v(3, 1);
    v << 1, 2, 3;
    const StandardizeResult r = standardize(make_masked(v));
    CHECK(r.matrix.values(0, 0) == doctest::Approx(-1.0));
    CHECK(r.matrix.values(1, 0) == doctest::Approx(0.0));
    CHECK(r.matrix.values(2, 0) == doctest::Approx(1.0));
    CHECK(r.stats[0].mean == doctest::Approx(2.0));
    CHECK(r.stats[0].sd == doctest::Approx(1.0));
  }

  SUBCASE("idempotence within 1e-9") {
    Rng rng(4);
    Matrix v(50, 2);
    for (Eigen::Index i = 0; i < v.size(); ++i) v.data()[i] = rng.normal() * 3.0 + 5.0;
    const StandardizeResult once = standardize(make_masked(v));
    const StandardizeResult twice = standardize(once.matrix);
    CHECK((twice.matrix.values - once.matrix.values).cwiseAbs().maxCoeff() < 1e-9);
  }

  SUBCASE("constant column becomes zeros with a warning") {
    Matrix v(3, 1);
    v << 5, 5, 5;
    WarningLog log;
    const StandardizeResult r = standardize(make_masked(v), &log);
    CHECK(r.matrix.values.col(0).cwiseAbs().maxCoeff() == 0.0);
    CHECK(r.stats[0].sd == 0.0);
    CHECK(log.messages.size() == 1);
  }

  SUBCASE("masked entries are ignored and preserved") {
    Matrix v(4, 1);
    v << 1, 999, 2, 3;  // row 1 masked
    const MaskedMatrix m = make_masked(v, {{1, 0}});
    const StandardizeResult r = standardize(m);
    CHECK(r.matrix.mask(1, 0));
    CHECK(r.matrix.values(1, 0) == 0.0);
    CHECK(r.stats[0].observed == 3);
    CHECK(r.matrix.values(0, 0) == doctest::Approx(-1.0));
  }

  SUBCASE("fewer than 2 observed entries is an error") {
    Matrix v(2, 1);
    v << 1, 2;
    CHECK_THROWS_AS(standardize(make_masked(v, {{0, 0}})), DataError);
  }
}

TEST_CASE("impute_mean fills column means of observed entries") {
  SUBCASE("[1, missing, 3] becomes [1, 2, 3]") {
    Matrix v(3, 1);
    v << 1, 0, 3;
    const Matrix out = impute_mean(make_masked(v, {{1, 0}}));
    CHECK(out(1, 0) == doctest::Approx(2.0));
    CHECK(out(0, 0) == 1.0);
    CHECK(out(2, 0) == 3.0);
  }

  SUBCASE("no missing entries is the identity") {
    Rng rng(9);
    Matrix v(6, 3);
    for (Eigen::Index i = 0; i < v.size(); ++i) v.data()[i] = rng.normal();
    CHECK(impute_mean(make_masked(v)) == v);
  }

  SUBCASE("5x3 toy matches brute-force per-column means") {
    Matrix v(5, 3);
    v << 1, 10, 100, 2, 20, 200, 3, 30, 300, 4, 40, 400, 5, 50, 500;
    const std::vector<std::pair<int, int>> holes = {{0, 0}, {2, 1}, {4, 1}, {1, 2}};
    const MaskedMatrix m = make_masked(v, holes);
    const Matrix out = impute_mean(m);
    // brute-force oracle: recompute observed means directly
    for (const auto& [r, c] : holes) {
      double sum = 0.0;
      int count = 0;
      for (int i = 0; i < 5; ++i) {
        if (std::find(holes.begin(), holes.end(), std::make_pair(i, c)) != holes.end()) {
          continue;
        }
        sum += v(i, c);
        ++count;
      }
      CHECK(out(r, c) == doctest::Approx(sum / count));
    }
  }

  SUBCASE("fully missing column names the column") {
    Matrix v(2, 2);
    v << 1, 0, 2, 0;
    CHECK_THROWS_WITH_AS(impute_mean(make_masked(v, {{0, 1}, {1, 1}})),
                         doctest::Contains("c1"), DataError);
  }
}

TEST_CASE("standardize then mean-impute fills exact zeros") {
  Rng rng(12);
  Dataset ds;
  ds.feature_names = {"x", "y", "z"};
  ds.features.resize(40, 3);
  ds.missing = Mask::Constant(40, 3, false);
  for (Eigen::Index i = 0; i < ds.features.size(); ++i) {
    ds.features.data()[i] = rng.normal() * 2 + 1;
  }
  for (int i = 0; i < 40; ++i) {
    ds.ids.push_back("z" + std::to_string(i));
    ds.gc_tag.emplace_back();
  }
  const std::vector<std::pair<int, int>> holes = {{3, 0}, {7, 1}, {9, 1}, {20, 2}};
  for (const auto& [r, c] : holes) {
    ds.missing(r, c) = true;
    ds.features(r, c) = 0.0;
  }
  PipelineSpec spec;
  spec.features = FeatureSet::all();
  spec.imputer = ImputerKind::mean;
  spec.label = "all+mean";
  const MaterializedPipeline mat = materialize(spec, ds, 7);
  for (const auto& [r, c] : holes) CHECK(mat.features.values(r, c) == 0.0);
  // the generic column-mean imputer agrees to fp precision
  const StandardizeResult st = standardize(select_features(ds, spec.features));
  const Matrix generic = impute_mean(st.matrix);
  for (const auto& [r, c] : holes) CHECK(std::abs(generic(r, c)) < 1e-14);
}

TEST_CASE("impute_forest reconstructs a deterministic linear relation") {
  SUBCASE("no missing entries: identity with zero forest fits") {
    Rng rng(3);
    Matrix v(20, 2);
    for (Eigen::Index i = 0; i < v.size(); ++i) v.data()[i] = rng.normal();
    const ForestImputeResult r = impute_forest(make_masked(v), {}, 1);
    CHECK(r.forest_fits == 0);
    CHECK(r.values == v);
  }

  SUBCASE("B = 2A recovered within 0.2 RMSE on masked rows") {
    Rng rng(77);
    const int n = 200;
    Matrix v(n, 2);
    for (int i = 0; i < n; ++i) {
      v(i, 0) = rng.normal();
      v(i, 1) = 2.0 * v(i, 0);
    }
    std::vector<std::pair<int, int>> holes;
    for (int i = 0; i < n; i += 10) holes.emplace_back(i, 1);  // 10% of B
    const MaskedMatrix m = make_masked(v, holes);
    ForestImputeParams params;  // 100 trees
    const ForestImputeResult r = impute_forest(m, params, 41);
    CHECK(r.forest_fits > 0);
    double se = 0.0;
    for (const auto& [row, col] : holes) {
      const double err = r.values(row, col) - 2.0 * v(row, 0);
      se += err * err;
    }
    const double rmse = std::sqrt(se / static_cast<double>(holes.size()));
    CHECK(rmse <= 0.2);
  }

  SUBCASE("fixed seed reproduces the imputation exactly") {
    Rng rng(5);
    Matrix v(60, 3);
    for (Eigen::Index i = 0; i < v.size(); ++i) v.data()[i] = rng.normal();
    std::vector<std::pair<int, int>> holes = {{1, 0}, {5, 2}, {9, 1}, {33, 2}};
    const MaskedMatrix m = make_masked(v, holes);
    ForestImputeParams params;
    params.trees = 25;
    const ForestImputeResult a = impute_forest(m, params, 1234);
    const ForestImputeResult b = impute_forest(m, params, 1234);
    CHECK(a.values == b.values);
  }

  SUBCASE("observed entries are never altered") {
    Rng rng(8);
    Matrix v(50, 3);
    for (Eigen::Index i = 0; i < v.size(); ++i) v.data()[i] = rng.normal();
    std::vector<std::pair<int, int>> holes = {{0, 0}, {10, 1}, {20, 2}, {30, 0}};
    const MaskedMatrix m = make_masked(v, holes);
    ForestImputeParams params;
    params.trees = 15;
    const ForestImputeResult r = impute_forest(m, params, 2);
    for (Eigen::Index i = 0; i < m.n_rows(); ++i) {
      for (Eigen::Index c = 0; c < m.n_cols(); ++c) {
        if (!m.mask(i, c)) CHECK(r.values(i, c) == m.values(i, c));
      }
    }
  }
}

TEST_CASE("materialize composes the pipeline stages") {
  const Dataset ds = abundance_dataset(60, 19, 6, abundance_columns_large19());

  SUBCASE("mean + small7 without embedder gives a 7-column standardized matrix") {
    PipelineSpec spec;
    spec.features = FeatureSet::small7();
    spec.imputer = ImputerKind::mean;
    spec.label = "small7+mean";
    const MaterializedPipeline mat = materialize(spec, ds, 1);
    CHECK_FALSE(mat.embedded.has_value());
    CHECK(mat.features.n_cols() == 7);
    for (Eigen::Index c = 0; c < 7; ++c) {
      const auto col = mat.features.values.col(c);
      CHECK(std::abs(col.mean()) < 1e-9);
      const double sd = std::sqrt((col.array() - col.mean()).square().sum() / 59.0);
      CHECK(sd == doctest::Approx(1.0).epsilon(1e-9));
    }
  }

  SUBCASE("tsne embedder yields a 2-column cluster input") {
    PipelineSpec spec;
    spec.features = FeatureSet::small7();
    spec.imputer = ImputerKind::mean;
    spec.embedder = EmbedderSpec{EmbedderSpec::Method::tsne, 2, 10.0};
    spec.tsne_options.max_iter = 60;  // smoke speed
    spec.label = "small7+mean+tsne10";
    const MaterializedPipeline mat = materialize(spec, ds, 1);
    REQUIRE(mat.embedded.has_value());
    CHECK(mat.embedded->n_cols() == 2);
    CHECK(mat.cluster_input().n_cols() == 2);
    CHECK(mat.features.n_cols() == 7);  // pre-embedding matrix kept
  }

  SUBCASE("distinct specs carry distinct provenance labels") {
    PipelineSpec a;
    a.features = FeatureSet::small7();
    a.label = "small7+mean";
    PipelineSpec b;
    b.features = FeatureSet::medium11();
    b.label = "medium11+mean";
    CHECK(materialize(a, ds, 1).features.label != materialize(b, ds, 1).features.label);
  }

  SUBCASE("byte-identical across repeated materialization") {
    PipelineSpec spec;
    spec.features = FeatureSet::large19();
    spec.imputer = ImputerKind::forest;
    spec.forest_params.trees = 10;
    spec.label = "large19+forest";
    Dataset holey = ds;
    holey.missing(3, 2) = true;
    holey.features(3, 2) = 0.0;
    holey.missing(11, 7) = true;
    holey.features(11, 7) = 0.0;
    testsup::TempDir tmp("mat");
    export_feature_matrix(materialize(spec, holey, 99).features, tmp.file("a.csv"));
    export_feature_matrix(materialize(spec, holey, 99).features, tmp.file("b.csv"));
    CHECK(testsup::slurp(tmp.file("a.csv")) == testsup::slurp(tmp.file("b.csv")));
  }
}
