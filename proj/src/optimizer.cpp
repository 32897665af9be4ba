#include "seraph/optimizer.hpp"

#include <chrono>
#include <cmath>

#include "seraph/linalg.hpp"

namespace seraph {
namespace {

void check_config(const TrainConfig& cfg) {
  if (cfg.max_em_iters < 1 || cfg.max_m_iters < 1) {
    throw DataError("iteration caps must be >= 1");
  }
  if (cfg.em_tol <= 0.0 || cfg.m_tol <= 0.0 || cfg.rank_tol <= 0.0) {
    throw DataError("tolerances must be > 0");
  }
  if (cfg.armijo_c <= 0.0 || cfg.armijo_c >= 1.0) {
    throw DataError("armijo_c must lie in (0, 1)");
  }
  if (cfg.backtrack_factor <= 0.0 || cfg.backtrack_factor >= 1.0) {
    throw DataError("backtrack_factor must lie in (0, 1)");
  }
}

void check_hyper(const Hyper& hyper) {
  if (hyper.mu < 0.0) throw DataError("mu must be >= 0");
  if (hyper.lambda < 0.0) throw DataError("lambda must be >= 0");
  if (hyper.eta <= 0.0) throw DataError("eta must be > 0");
}

struct MStepOutcome {
  Matrix A;
  double objective = 0.0;
  int iterations = 0;
};

// Projected gradient ascent with Armijo backtracking. The step size carries
// over between iterations and is allowed to grow again after a backoff;
// starting every iteration from the conservative 1/L step makes runs with
// well-conditioned data absurdly slow.
MStepOutcome m_step_impl(const Eigen::Ref<const Matrix>& A_init, const PosteriorTable& q,
                         const PairCache& cache, const Hyper& hyper, const TrainConfig& cfg,
                         double base_step) {
  MStepOutcome out;
  out.A = A_init;
  out.objective = m_objective_cached(out.A, q, cache, hyper);
  const double step_cap = base_step * 1e8;
  double step = base_step;
  for (int it = 0; it < cfg.max_m_iters; ++it) {
    const Matrix g = m_gradient_cached(out.A, q, cache, hyper);
    step = std::min(step / cfg.backtrack_factor, step_cap);
    bool accepted = false;
    Matrix candidate;
    double candidate_obj = 0.0;
    while (step > 1e-18 * base_step) {
      candidate = project_psd(out.A + step * g);
      candidate_obj = m_objective_cached(candidate, q, cache, hyper);
      const double predicted = (g.array() * (candidate - out.A).array()).sum();
      if (candidate_obj >= out.objective + cfg.armijo_c * predicted) {
        accepted = true;
        break;
      }
      step *= cfg.backtrack_factor;
    }
    if (!accepted) break;  // no acceptable ascent step left: stationary
    const double gain = (candidate_obj - out.objective) / (1.0 + std::abs(out.objective));
    out.A = std::move(candidate);
    out.objective = candidate_obj;
    ++out.iterations;
    if (gain < cfg.m_tol) break;
  }
  return out;
}

double initial_step(const PairSet& pairs, const Hyper& hyper,
                    const Eigen::Ref<const Matrix>& points, const TrainConfig& cfg) {
  if (cfg.init_step > 0.0) return cfg.init_step;
  const double bound = lipschitz_bound(pairs, hyper, data_diameter(points), points.cols());
  return 1.0 / std::max(bound, 1e-300);
}

}  // namespace

Metric init_metric(const Eigen::Ref<const Matrix>& points, const PairSet& pairs, double eta) {
  if (eta <= 0.0) throw DataError("eta must be > 0");
  double mean_sq = 0.0;
  if (pairs.n_labeled_pairs() > 0) {
    for (const IndexPair& p : pairs.S) mean_sq += (points.row(p.i) - points.row(p.j)).squaredNorm();
    for (const IndexPair& p : pairs.D) mean_sq += (points.row(p.i) - points.row(p.j)).squaredNorm();
    mean_sq /= static_cast<double>(pairs.n_labeled_pairs());
  } else {
    const Index n = points.rows();
    if (n < 2) throw DataError("need at least 2 points");
    for (Index i = 0; i < n; ++i) {
      for (Index j = i + 1; j < n; ++j) mean_sq += (points.row(i) - points.row(j)).squaredNorm();
    }
    mean_sq /= static_cast<double>(n * (n - 1) / 2);
  }
  if (mean_sq <= 0.0) {
    throw DataError("degenerate data: all pairwise distances are zero");
  }
  Metric metric;
  metric.eta = eta;
  metric.A = (eta / mean_sq) * Matrix::Identity(points.cols(), points.cols());
  return metric;
}

Matrix m_step(const Eigen::Ref<const Matrix>& A_init, const PosteriorTable& q,
              const PairSet& pairs, const Eigen::Ref<const Matrix>& points, const Hyper& hyper,
              const TrainConfig& cfg) {
  check_config(cfg);
  check_hyper(hyper);
  const PairCache cache = make_pair_cache(points, pairs);
  return m_step_impl(A_init, q, cache, hyper, cfg, initial_step(pairs, hyper, points, cfg)).A;
}

TrainResult train(const Eigen::Ref<const Matrix>& points, const PairSet& pairs,
                  const Hyper& hyper, const TrainConfig& cfg) {
  const auto t_start = std::chrono::steady_clock::now();
  check_config(cfg);
  check_hyper(hyper);
  const PairCache cache = make_pair_cache(points, pairs);
  const bool use_unlabeled = hyper.mu > 0.0 && !pairs.U.empty();

  TrainResult result;
  result.metric = init_metric(points, pairs, hyper.eta);
  Matrix& A = result.metric.A;

  PosteriorTable q;
  q.q_plus = Vector::Zero(use_unlabeled ? static_cast<Index>(pairs.U.size()) : 0);

  const double base_step = initial_step(pairs, hyper, points, cfg);
  result.objective_trace.push_back(objective_cached(A, cache, hyper));
  for (int round = 0; round < cfg.max_em_iters; ++round) {
    MStepOutcome m = m_step_impl(A, q, cache, hyper, cfg, base_step);
    result.m_step_iterations.push_back(m.iterations);
    if (use_unlabeled) q = e_step_cached(m.A, cache, hyper);
    result.objective_trace.push_back(objective_cached(m.A, cache, hyper));
    const double rel = (m.A - A).norm() / std::max(A.norm(), 1e-300);
    A = std::move(m.A);
    if (rel < cfg.em_tol) {
      result.converged = true;
      break;
    }
  }
  result.effective_rank = effective_rank(A, cfg.rank_tol);
  result.wall_time_sec =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return result;
}

int effective_rank(const Eigen::Ref<const Matrix>& A, double rank_tol) {
  if (rank_tol <= 0.0) throw DataError("rank_tol must be > 0");
  const EigenDecomposition dec = sym_eigen(A);
  const double top = dec.values.size() > 0 ? dec.values[0] : 0.0;
  const double threshold = rank_tol * std::max(top, 1e-300);
  int rank = 0;
  for (Index k = 0; k < dec.values.size(); ++k) {
    if (dec.values[k] > threshold) ++rank;
  }
  return rank;
}

}  // namespace seraph
