#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "seraph/data.hpp"
#include "seraph/types.hpp"

using namespace seraph;
namespace fs = std::filesystem;

namespace {

// scratch file that cleans up after itself
struct TempFile {
  fs::path path;
  explicit TempFile(const std::string& name, const std::string& contents = "") {
    path = fs::temp_directory_path() / ("seraph_test_" + name);
    if (!contents.empty()) {
      std::ofstream out(path);
      out << contents;
    }
  }
  ~TempFile() {
    std::error_code ec;
    fs::remove(path, ec);
  }
  std::string str() const { return path.string(); }
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

double sample_sd(const Vector& col) {
  const double mean = col.mean();
  return std::sqrt((col.array() - mean).square().sum() / double(col.size() - 1));
}

}  // namespace

TEST_CASE("load_csv on a plain three-row file") {
  TempFile f("basic.csv", "1,2,a\n3,4,b\n5,6,a\n");
  const Dataset d = load_csv(f.str(), false);
  CHECK(d.n() == 3);
  CHECK(d.m() == 2);
  CHECK(d.points(0, 0) == 1.0);
  CHECK(d.points(2, 1) == 6.0);
  CHECK(d.labels == std::vector<std::string>{"a", "b", "a"});
  CHECK(d.feature_names.empty());
}

TEST_CASE("load_csv header and label column options") {
  TempFile f("opts.csv", "cls,u,v\nx,1,2\ny,3,4\n");
  const Dataset d = load_csv(f.str(), true, 0);
  CHECK(d.n() == 2);
  CHECK(d.m() == 2);
  CHECK(d.labels == std::vector<std::string>{"x", "y"});
  CHECK(d.feature_names == std::vector<std::string>{"u", "v"});
  CHECK(d.points(1, 0) == 3.0);

  TempFile g("nolab.csv", "1,2\n3,4\n5,6\n");
  const Dataset e = load_csv(g.str(), false, kNoLabels);
  CHECK(e.m() == 2);
  CHECK_FALSE(e.has_labels());
}

TEST_CASE("load_csv on the bundled iris table") {
  const Dataset d = load_csv(std::string(SERAPH_DATA_DIR) + "/iris.csv", true);
  CHECK(d.n() == 150);
  CHECK(d.m() == 4);
  const std::set<std::string> classes(d.labels.begin(), d.labels.end());
  CHECK(classes.size() == 3);
}

TEST_CASE("load_csv error reporting") {
  SUBCASE("missing file") {
    CHECK_THROWS_AS(load_csv("/nonexistent/nope.csv", false), DataError);
  }
  SUBCASE("non-numeric feature cell names the spot") {
    TempFile f("bad.csv", "1,2,a\n1,x,b\n");
    try {
      load_csv(f.str(), false);
      FAIL("expected DataError");
    } catch (const DataError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("row 2") != std::string::npos);
      CHECK(msg.find("column 2") != std::string::npos);
    }
  }
  SUBCASE("ragged rows") {
    TempFile f("ragged.csv", "1,2,a\n1,2,3,a\n");
    CHECK_THROWS_AS(load_csv(f.str(), false), DataError);
  }
  SUBCASE("label column out of range") {
    TempFile f("col.csv", "1,2,a\n");
    CHECK_THROWS_AS(load_csv(f.str(), false, 7), DataError);
  }
}

TEST_CASE("save_csv round trip") {
  Dataset d;
  d.points = Matrix(2, 2);
  d.points << 0.1, -2.5, 1.0 / 3.0, 4e-17;
  d.labels = {"p", "q"};
  d.feature_names = {"f0", "f1"};

  TempFile f("round.csv");
  save_csv(d, f.str());
  const Dataset back = load_csv(f.str(), true);
  CHECK(back.n() == 2);
  CHECK(back.feature_names == d.feature_names);
  CHECK(back.labels == d.labels);
  CHECK((back.points - d.points).cwiseAbs().maxCoeff() == 0.0);  // 17 digits preserve doubles
}

TEST_CASE("zscore scaler on a hand-checked column") {
  // column (1,2,3): mean 2, sample sd (divisor n-1) = 1 -> scaled (-1, 0, 1)
  Dataset d;
  d.points = Matrix(3, 1);
  d.points << 1, 2, 3;
  const ScalerParams p = fit_scaler(d, ScalingKind::zscore);
  CHECK(p.shift[0] == doctest::Approx(2.0));
  CHECK(p.scale[0] == doctest::Approx(1.0));
  const Dataset s = apply_scaler(d, p);
  CHECK(s.points(0, 0) == doctest::Approx(-1.0));
  CHECK(s.points(1, 0) == doctest::Approx(0.0));
  CHECK(s.points(2, 0) == doctest::Approx(1.0));
}

TEST_CASE("standardize yields zero mean unit sample sd") {
  Dataset d;
  d.points = Matrix(5, 3);
  d.points << 1, 10, 7, 2, 20, 7, 3, 35, 7, 4, 41, 7, 5, 58, 7;  // third column constant
  auto [s, params] = standardize(d);

  for (Index j = 0; j < 2; ++j) {
    const Vector col = s.points.col(j);
    CHECK(std::abs(col.mean()) < 1e-10);
    CHECK(sample_sd(col) == doctest::Approx(1.0).epsilon(1e-10));
  }
  // constant column passes through centered, scale forced to 1
  CHECK(s.points.col(2).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(params.scale[2] == 1.0);

  SUBCASE("idempotent on already standardized data") {
    auto [s2, p2] = standardize(s);
    CHECK((s2.points - s.points).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("minmax scaler maps the training range onto [-1, 1]") {
  Dataset d;
  d.points = Matrix(4, 2);
  d.points << 0, 5, 2, 5, 6, 5, 10, 5;
  const ScalerParams p = fit_scaler(d, ScalingKind::minmax);
  const Dataset s = apply_scaler(d, p);
  CHECK(s.points.col(0).minCoeff() == doctest::Approx(-1.0));
  CHECK(s.points.col(0).maxCoeff() == doctest::Approx(1.0));
  CHECK(s.points(1, 0) == doctest::Approx(-0.6));  // (2-5)/5
  CHECK(s.points.col(1).cwiseAbs().maxCoeff() == 0.0);  // constant -> 0

  // scaler fit on train extrapolates beyond the seen range
  Dataset test;
  test.points = Matrix(1, 2);
  test.points << 12, 5;
  CHECK(apply_scaler(test, p).points(0, 0) == doctest::Approx(1.4));
}

TEST_CASE("none scaling is the identity transform") {
  Dataset d;
  d.points = Matrix(2, 2);
  d.points << 3, -4, 5, 9;
  const Dataset s = apply_scaler(d, fit_scaler(d, ScalingKind::none));
  CHECK((s.points - d.points).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("build_pairs on a tiny labeled triple") {
  Dataset d;
  d.points = Matrix::Zero(5, 2);
  d.labels = {"a", "a", "b", "b", "a"};
  const PairSet ps = build_pairs(d, {0, 1, 2});
  REQUIRE(ps.S.size() == 1);
  CHECK(ps.S[0] == IndexPair{0, 1});
  REQUIRE(ps.D.size() == 2);
  CHECK(ps.D[0] == IndexPair{0, 2});
  CHECK(ps.D[1] == IndexPair{1, 2});
  CHECK(ps.U.size() == 10 - 3);  // C(5,2) minus the labeled pairs
}

TEST_CASE("build_pairs counts at benchmark scale") {
  // 100 points, 10 labeled -> 45 labeled pairs and 4905 unlabeled
  Dataset d;
  d.points = Matrix::Zero(100, 2);
  for (int i = 0; i < 100; ++i) d.labels.push_back("c" + std::to_string(i % 3));
  std::vector<Index> labeled;
  for (Index i = 0; i < 10; ++i) labeled.push_back(i);
  const PairSet ps = build_pairs(d, labeled);
  CHECK(ps.n_labeled_pairs() == 45);
  CHECK(ps.U.size() == 4905);

  // 5 classes, 2 labeled each: S = 5 same-class pairs, D = C(10,2)-5 = 40
  Dataset e;
  e.points = Matrix::Zero(100, 2);
  for (int i = 0; i < 100; ++i) e.labels.push_back("k" + std::to_string(i / 20));
  std::vector<Index> two_each;
  for (Index c = 0; c < 5; ++c) {
    two_each.push_back(20 * c);
    two_each.push_back(20 * c + 1);
  }
  const PairSet qs = build_pairs(e, two_each);
  CHECK(qs.S.size() == 5);
  CHECK(qs.D.size() == 40);
  CHECK(qs.U.size() == 4905);
}

TEST_CASE("build_pairs partitions all unordered pairs") {
  Dataset d;
  d.points = Matrix::Zero(17, 2);
  for (int i = 0; i < 17; ++i) d.labels.push_back(i % 2 ? "x" : "y");
  const PairSet ps = build_pairs(d, {3, 8, 11, 16});

  std::set<std::pair<Index, Index>> seen;
  auto absorb = [&](const std::vector<IndexPair>& v) {
    for (const IndexPair& p : v) {
      CHECK(p.i < p.j);
      CHECK(seen.insert({p.i, p.j}).second);  // disjointness
    }
  };
  absorb(ps.S);
  absorb(ps.D);
  absorb(ps.U);
  CHECK(seen.size() == 17 * 16 / 2);

  // weak labels agree with class labels
  for (const IndexPair& p : ps.S) CHECK(d.labels[p.i] == d.labels[p.j]);
  for (const IndexPair& p : ps.D) CHECK(d.labels[p.i] != d.labels[p.j]);
}

TEST_CASE("build_pairs input validation") {
  Dataset d;
  d.points = Matrix::Zero(4, 2);
  d.labels = {"a", "b", "a", "b"};
  CHECK_THROWS_AS(build_pairs(d, {0, 7}), DataError);   // out of range
  CHECK_THROWS_AS(build_pairs(d, {1, 1}), DataError);   // duplicate
  Dataset unlabeled;
  unlabeled.points = Matrix::Zero(4, 2);
  CHECK_THROWS_AS(build_pairs(unlabeled, {0, 1}), DataError);
}

TEST_CASE("posterior scenario layout") {
  const Scenario sc = gen_posterior_scenario(25, 0.25, 5);
  CHECK(sc.data.n() == 100);
  CHECK(sc.data.m() == 2);
  REQUIRE(sc.labeled.size() == 4);

  // one labeled anchor per cluster block, 6 weak pairs downstream
  const PairSet ps = build_pairs(sc.data, sc.labeled);
  CHECK(ps.n_labeled_pairs() == 6);
  CHECK(ps.S.size() == 1);  // exactly one same-class anchor pair
  CHECK(ps.D.size() == 5);

  SUBCASE("deterministic in the seed") {
    const Scenario again = gen_posterior_scenario(25, 0.25, 5);
    CHECK((again.data.points - sc.data.points).cwiseAbs().maxCoeff() == 0.0);
    CHECK(again.data.labels == sc.data.labels);
    CHECK(again.labeled == sc.labeled);
    const Scenario other = gen_posterior_scenario(25, 0.25, 6);
    CHECK((other.data.points - sc.data.points).cwiseAbs().maxCoeff() > 0.0);
  }

  SUBCASE("cluster sample means sit near the noise-free centers") {
    // shrink the noise to expose the configured centers, then check the
    // noisy sample means stay within 3*noise/sqrt(n) of them
    const Index n = 200;
    const Scenario tight = gen_posterior_scenario(n, 1e-9, 11);
    const Scenario loose = gen_posterior_scenario(n, 0.25, 11);
    for (int c = 0; c < 4; ++c) {
      const auto block_mean = [&](const Scenario& s, int col) {
        double acc = 0.0;
        for (Index i = c * n; i < (c + 1) * n; ++i) acc += s.data.points(i, col);
        return acc / double(n);
      };
      const double tol = 3.0 * 0.25 / std::sqrt(double(n));
      CHECK(std::abs(block_mean(loose, 0) - block_mean(tight, 0)) < tol);
      CHECK(std::abs(block_mean(loose, 1) - block_mean(tight, 1)) < tol);
    }
  }
}

TEST_CASE("projection scenario layout") {
  const Scenario sc = gen_projection_scenario(50, 5.0, 3);
  CHECK(sc.data.n() == 100);
  CHECK(sc.data.m() == 2);
  CHECK(sc.labeled.size() == 16);  // 8 curated anchors per class
  const std::set<std::string> classes(sc.data.labels.begin(), sc.data.labels.end());
  CHECK(classes.size() == 2);

  SUBCASE("classes separate along the horizontal axis only") {
    double mx[2] = {0, 0}, my[2] = {0, 0};
    int cnt[2] = {0, 0};
    for (Index i = 0; i < sc.data.n(); ++i) {
      const int c = sc.data.labels[i] == sc.data.labels[0] ? 0 : 1;
      mx[c] += sc.data.points(i, 0);
      my[c] += sc.data.points(i, 1);
      ++cnt[c];
    }
    for (int c : {0, 1}) {
      mx[c] /= cnt[c];
      my[c] /= cnt[c];
    }
    CHECK(std::abs(mx[0] - mx[1]) > 2.0);              // informative direction
    CHECK(std::abs(my[0]) < 3.0 * 5.0 / std::sqrt(34.0));  // vertical is centered noise
    CHECK(std::abs(my[1]) < 3.0 * 5.0 / std::sqrt(34.0));
  }

  SUBCASE("deterministic in the seed") {
    const Scenario again = gen_projection_scenario(50, 5.0, 3);
    CHECK((again.data.points - sc.data.points).cwiseAbs().maxCoeff() == 0.0);
    CHECK(again.labeled == sc.labeled);
  }

  SUBCASE("keeping only the horizontal feature beats keeping only the vertical") {
    // 1-NN comparison against a held-out draw decides which axis carries class
    const Scenario test = gen_projection_scenario(50, 5.0, 1003);
    Matrix keep_h = Matrix::Zero(2, 2), keep_v = Matrix::Zero(2, 2);
    keep_h(0, 0) = 1.0;
    keep_v(1, 1) = 1.0;
    auto err = [&](const Matrix& A) {
      int wrong = 0;
      for (Index t = 0; t < test.data.n(); ++t) {
        double best = 1e300;
        Index arg = 0;
        for (Index r = 0; r < sc.data.n(); ++r) {
          const Vector d = sc.data.points.row(r) - test.data.points.row(t);
          const double v = d.dot(A * d);
          if (v < best) {
            best = v;
            arg = r;
          }
        }
        wrong += sc.data.labels[arg] != test.data.labels[t];
      }
      return double(wrong) / double(test.data.n());
    };
    CHECK(err(keep_h) < err(keep_v));
  }
}

TEST_CASE("index list files round trip") {
  TempFile f("idx.txt");
  save_index_list({0, 25, 50, 75}, f.str());
  CHECK(load_index_list(f.str()) == std::vector<Index>{0, 25, 50, 75});

  TempFile bad("idx_bad.txt", "3\nfive\n");
  CHECK_THROWS_AS(load_index_list(bad.str()), DataError);
}

TEST_CASE("generator output survives the CSV round trip byte for byte") {
  const Scenario sc = gen_posterior_scenario(10, 0.25, 9);
  TempFile a("gen_a.csv"), b("gen_b.csv");
  save_csv(sc.data, a.str());
  save_csv(load_csv(a.str(), !sc.data.feature_names.empty()), b.str());
  CHECK(slurp(a.str()) == slurp(b.str()));
}
