#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "seraph/linalg.hpp"
#include "seraph/model.hpp"
#include "seraph/optimizer.hpp"
#include "seraph/rng.hpp"
#include "seraph/types.hpp"

using namespace seraph;

namespace {

struct Instance {
  Matrix points;
  PairSet pairs;
  PosteriorTable q;
};

Instance random_instance(Rng& rng, Index n, Index m, Index n_s, Index n_d, Index n_u) {
  Instance inst;
  inst.points = Matrix(n, m);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < m; ++j) inst.points(i, j) = rng.next_normal();

  std::vector<IndexPair> all;
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j) all.push_back({i, j});
  std::vector<Index> order(all.size());
  for (std::size_t k = 0; k < all.size(); ++k) order[k] = Index(k);
  rng.shuffle(order);

  std::size_t at = 0;
  for (Index k = 0; k < n_s; ++k) inst.pairs.S.push_back(all[order[at++]]);
  for (Index k = 0; k < n_d; ++k) inst.pairs.D.push_back(all[order[at++]]);
  for (Index k = 0; k < n_u; ++k) inst.pairs.U.push_back(all[order[at++]]);

  inst.q.q_plus.resize(n_u);
  for (Index k = 0; k < n_u; ++k) inst.q.q_plus[k] = rng.next_double();
  return inst;
}

}  // namespace

TEST_CASE("init_metric matches eta to the labeled scale") {
  SUBCASE("unit mean squared distance gives the identity") {
    Matrix pts(2, 1);
    pts << 0.0, 1.0;
    PairSet pairs;
    pairs.S.push_back({0, 1});
    const Metric metric = init_metric(pts, pairs, 1.0);
    CHECK((metric.A - Matrix::Identity(1, 1)).norm() == 0.0);
    CHECK(metric.eta == 1.0);
  }

  SUBCASE("hand-computed three point instance") {
    Matrix pts(3, 2);
    pts << 0, 0, 2, 0, 0, 1;
    PairSet pairs;
    pairs.S.push_back({0, 1});  // squared distance 4
    pairs.D.push_back({0, 2});  // squared distance 1
    const Metric metric = init_metric(pts, pairs, 1.0);
    CHECK(metric.A(0, 0) == doctest::Approx(1.0 / 2.5).epsilon(1e-12));
    CHECK(metric.A(0, 1) == 0.0);
  }

  SUBCASE("scaling the points by sqrt(2) halves the coefficient") {
    Matrix pts(3, 2);
    pts << 0, 0, 2, 0, 0, 1;
    PairSet pairs;
    pairs.S.push_back({0, 1});
    pairs.D.push_back({0, 2});
    const double c1 = init_metric(pts, pairs, 1.0).A(0, 0);
    const double c2 = init_metric(Matrix(std::sqrt(2.0) * pts), pairs, 1.0).A(0, 0);
    CHECK(c2 == doctest::Approx(0.5 * c1).epsilon(1e-12));
  }

  SUBCASE("falls back to all pairs when nothing is labeled") {
    Matrix pts(2, 1);
    pts << 0.0, 3.0;  // only pair, squared distance 9
    const Metric metric = init_metric(pts, PairSet{}, 1.0);
    CHECK(metric.A(0, 0) == doctest::Approx(1.0 / 9.0).epsilon(1e-12));
  }

  SUBCASE("degenerate data is rejected") {
    Matrix pts = Matrix::Zero(3, 2);
    PairSet pairs;
    pairs.S.push_back({0, 1});
    CHECK_THROWS_AS(init_metric(pts, pairs, 1.0), DataError);
    CHECK_THROWS_AS(init_metric(pts, pairs, -1.0), DataError);
  }
}

TEST_CASE("m_step with only the trace penalty shrinks to zero") {
  Matrix pts(2, 2);
  pts << 0, 0, 1, 1;
  PairSet empty;
  PosteriorTable q;
  TrainConfig cfg;
  const Matrix A = m_step(Matrix::Identity(2, 2), q, empty, pts, Hyper{0.0, 1.0, 1.0}, cfg);
  CHECK(A.norm() < 1e-6);
  CHECK(sym_eigen(A).values.minCoeff() >= -1e-10);
}

TEST_CASE("m_step reaches the grid-search optimum on a 2x2 problem") {
  // one similar pair along x, one dissimilar along y, trace penalty 0.3;
  // stationarity puts the optimum inside the grid box [0,3]^2
  Matrix pts(3, 2);
  pts << 0, 0, 1, 0, 0, 1;
  PairSet pairs;
  pairs.S.push_back({0, 1});
  pairs.D.push_back({0, 2});
  const Hyper h{0.0, 0.3, 1.0};
  PosteriorTable q;

  // exhaustive oracle over A = [[a,c],[c,b]], step 0.05, PSD candidates only
  auto f = [&](double a, double b, double c) {
    Matrix A(2, 2);
    A << a, c, c, b;
    return m_objective(A, q, pairs, pts, h);
  };
  double best = -1e300;
  for (double a = 0.0; a <= 3.0; a += 0.05)
    for (double b = 0.0; b <= 3.0; b += 0.05)
      for (double c = -1.0; c <= 1.0; c += 0.05)
        if (c * c <= a * b) best = std::max(best, f(a, b, c));

  TrainConfig cfg;
  cfg.max_m_iters = 5000;
  cfg.m_tol = 1e-13;
  const Matrix A = m_step(Matrix::Identity(2, 2), q, pairs, pts, h, cfg);
  const double reached = m_objective(A, q, pairs, pts, h);
  CHECK(reached >= best - 1e-4);

  // and the analytic stationary point: a -> 0 (boundary), b solving
  // sigmoid(1-b) = lambda, c -> 0
  CHECK(A(0, 0) < 0.02);
  CHECK(A(1, 1) == doctest::Approx(1.0 - std::log(0.3 / 0.7)).epsilon(0.02));
  CHECK(std::abs(A(0, 1)) < 0.02);
}

TEST_CASE("accepted objective values never decrease within an M-step") {
  // rerunning with a growing iteration cap replays the same deterministic
  // trajectory, exposing the accepted-step objective sequence
  Rng rng(71);
  for (int rep = 0; rep < 6; ++rep) {
    const Instance inst = random_instance(rng, 8, 2 + Index(rng.next_below(2)), 2, 2, 8);
    const Hyper h{0.5 * rng.next_double(), 0.5 * rng.next_double(), 1.0};
    const Matrix A0 = init_metric(inst.points, inst.pairs, h.eta).A;
    double prev = -1e300;
    for (int cap = 1; cap <= 15; ++cap) {
      TrainConfig cfg;
      cfg.max_m_iters = cap;
      cfg.m_tol = 1e-300;
      const Matrix A = m_step(A0, inst.q, inst.pairs, inst.points, h, cfg);
      const double val = m_objective(A, inst.q, inst.pairs, inst.points, h);
      CHECK(val >= prev);
      prev = val;
    }
  }
}

TEST_CASE("every m_step output stays inside the PSD cone") {
  Rng rng(73);
  for (int rep = 0; rep < 10; ++rep) {
    const Instance inst = random_instance(rng, 7, 3, 2, 2, 5);
    const Hyper h{rng.next_double(), rng.next_double(), 1.0};
    TrainConfig cfg;
    cfg.max_m_iters = 1 + int(rng.next_below(40));
    const Matrix A = m_step(init_metric(inst.points, inst.pairs, 1.0).A, inst.q, inst.pairs,
                            inst.points, h, cfg);
    CHECK(sym_eigen(A).values.minCoeff() >= -1e-10);
  }
}

TEST_CASE("mu=0 training ignores unlabeled pairs bit for bit") {
  Rng rng(79);
  const Instance inst = random_instance(rng, 10, 3, 3, 3, 15);
  PairSet no_u = inst.pairs;
  no_u.U.clear();
  const Hyper h{0.0, 0.5, 1.0};
  TrainConfig cfg;

  const TrainResult with_u = train(inst.points, inst.pairs, h, cfg);
  const TrainResult without_u = train(inst.points, no_u, h, cfg);
  CHECK((with_u.metric.A - without_u.metric.A).cwiseAbs().maxCoeff() == 0.0);
  CHECK(with_u.objective_trace == without_u.objective_trace);
  CHECK(with_u.m_step_iterations == without_u.m_step_iterations);
}

TEST_CASE("a lone dissimilar pair is driven to a confident prediction") {
  // a similar pair saturates at sigmoid(eta) since distances cannot go below
  // zero, so the unbounded-growth direction is the dissimilar one
  Matrix pts(2, 2);
  pts << 0, 0, 1, 1;
  PairSet pairs;
  pairs.D.push_back({0, 1});
  const TrainResult result = train(pts, pairs, Hyper{0.0, 0.0, 1.0}, TrainConfig{});
  const double p = pair_prob(result.metric, pts.row(0), pts.row(1), -1);
  CHECK(p > 0.9);
}

TEST_CASE("a heavier trace penalty cannot grow the trace") {
  Rng rng(83);
  const Instance inst = random_instance(rng, 9, 3, 3, 3, 8);
  TrainConfig cfg;
  cfg.max_m_iters = 3000;
  cfg.m_tol = 1e-12;
  const Matrix A0 = init_metric(inst.points, inst.pairs, 1.0).A;
  const Matrix light =
      m_step(A0, inst.q, inst.pairs, inst.points, Hyper{0.4, 0.5, 1.0}, cfg);
  const Matrix heavy =
      m_step(A0, inst.q, inst.pairs, inst.points, Hyper{0.4, 2.0, 1.0}, cfg);
  CHECK(trace(heavy) <= trace(light) + 1e-3);
}

TEST_CASE("train is deterministic and well-formed") {
  Rng rng(89);
  const Instance inst = random_instance(rng, 12, 3, 3, 3, 20);
  const Hyper h{0.3, 0.2, 1.0};
  TrainConfig cfg;

  const TrainResult a = train(inst.points, inst.pairs, h, cfg);
  const TrainResult b = train(inst.points, inst.pairs, h, cfg);
  CHECK((a.metric.A - b.metric.A).cwiseAbs().maxCoeff() == 0.0);
  CHECK(a.objective_trace == b.objective_trace);

  CHECK(a.metric.eta == h.eta);
  CHECK(sym_eigen(a.metric.A).values.minCoeff() >= -1e-10);
  CHECK(a.objective_trace.size() <= std::size_t(cfg.max_em_iters) + 1);
  CHECK(a.objective_trace.size() == a.m_step_iterations.size() + 1);
  CHECK(a.effective_rank == effective_rank(a.metric.A, cfg.rank_tol));
  CHECK(a.wall_time_sec >= 0.0);
  CHECK(a.converged);  // easy instance, loose default tolerance
}

TEST_CASE("train validates configuration and hyperparameters") {
  Matrix pts(3, 2);
  pts << 0, 0, 1, 0, 0, 1;
  PairSet pairs;
  pairs.S.push_back({0, 1});

  TrainConfig bad;
  bad.backtrack_factor = 1.5;
  CHECK_THROWS_AS(train(pts, pairs, Hyper{}, bad), DataError);
  bad = TrainConfig{};
  bad.em_tol = 0.0;
  CHECK_THROWS_AS(train(pts, pairs, Hyper{}, bad), DataError);
  bad = TrainConfig{};
  bad.max_m_iters = 0;
  CHECK_THROWS_AS(train(pts, pairs, Hyper{}, bad), DataError);

  CHECK_THROWS_AS(train(pts, pairs, Hyper{-0.1, 0.0, 1.0}, TrainConfig{}), DataError);
  CHECK_THROWS_AS(train(pts, pairs, Hyper{0.0, -0.1, 1.0}, TrainConfig{}), DataError);
  CHECK_THROWS_AS(train(pts, pairs, Hyper{0.0, 0.0, 0.0}, TrainConfig{}), DataError);
}

TEST_CASE("a fixed positive initial step is honored") {
  Matrix pts(2, 2);
  pts << 0, 0, 1, 1;
  PairSet pairs;
  pairs.D.push_back({0, 1});
  TrainConfig cfg;
  cfg.init_step = 0.25;
  const TrainResult result = train(pts, pairs, Hyper{0.0, 0.0, 1.0}, cfg);
  CHECK(pair_prob(result.metric, pts.row(0), pts.row(1), -1) > 0.9);
}

TEST_CASE("effective_rank counts relative to the top eigenvalue") {
  Matrix A = Matrix::Zero(2, 2);
  A.diagonal() << 1.0, 1e-9;
  CHECK(effective_rank(A, 1e-6) == 1);
  CHECK(effective_rank(Matrix::Zero(3, 3), 1e-6) == 0);

  Matrix B = Matrix::Zero(3, 3);
  B.diagonal() << 3.0, 2.0, 1.0;
  CHECK(effective_rank(B, 1e-6) == 3);
  CHECK(effective_rank(Matrix(1e-8 * B), 1e-6) == 3);  // scale free
  CHECK_THROWS_AS(effective_rank(B, 0.0), DataError);
}
