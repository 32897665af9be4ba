#include "seraph/model.hpp"

#include <algorithm>
#include <cmath>

#include "seraph/linalg.hpp"

namespace seraph {
namespace {

// log(1 + exp(t)) without overflow
double softplus(double t) {
  const double a = std::abs(t);
  return std::log1p(std::exp(-a)) + std::max(t, 0.0);
}

double sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

double clamp_prob(double p) { return std::clamp(p, kProbEps, 1.0 - kProbEps); }

// ln p(y | s) = -softplus(y * s), kept consistent with the probability clamp
double log_prob(double s, double y) {
  return std::max(-softplus(y * s), std::log(kProbEps));
}

void check_metric(const Metric& metric, Index m) {
  if (metric.A.rows() != m || metric.A.cols() != m) {
    throw DataError("metric is " + std::to_string(metric.A.rows()) + "x" +
                    std::to_string(metric.A.cols()) + ", points have " + std::to_string(m) +
                    " features");
  }
}

}  // namespace

double pair_prob(const Metric& metric, const Eigen::Ref<const Vector>& x,
                 const Eigen::Ref<const Vector>& y_point, int y) {
  if (x.size() != y_point.size()) {
    throw DataError("pair_prob: points have " + std::to_string(x.size()) + " and " +
                    std::to_string(y_point.size()) + " features");
  }
  check_metric(metric, x.size());
  if (y != 1 && y != -1) throw DataError("pair label must be +1 or -1");
  const double s = mahalanobis_sq(metric.A, x, y_point) - metric.eta;
  return clamp_prob(sigmoid(-double(y) * s));
}

double entropy(double p_plus) {
  if (p_plus < 0.0 || p_plus > 1.0) {
    throw DataError("entropy: probability " + std::to_string(p_plus) + " outside [0, 1]");
  }
  double h = 0.0;
  if (p_plus > 0.0) h -= p_plus * std::log(p_plus);
  if (p_plus < 1.0) h -= (1.0 - p_plus) * std::log(1.0 - p_plus);
  return h;
}

PairCache make_pair_cache(const Eigen::Ref<const Matrix>& points, const PairSet& pairs) {
  const Index m = points.cols();
  PairCache cache;
  cache.diff_labeled.resize(pairs.n_labeled_pairs(), m);
  cache.y_labeled.resize(pairs.n_labeled_pairs());
  Index r = 0;
  for (const IndexPair& p : pairs.S) {
    cache.diff_labeled.row(r) = points.row(p.i) - points.row(p.j);
    cache.y_labeled[r++] = 1.0;
  }
  for (const IndexPair& p : pairs.D) {
    cache.diff_labeled.row(r) = points.row(p.i) - points.row(p.j);
    cache.y_labeled[r++] = -1.0;
  }
  cache.diff_unlabeled.resize(static_cast<Index>(pairs.U.size()), m);
  r = 0;
  for (const IndexPair& p : pairs.U) {
    cache.diff_unlabeled.row(r++) = points.row(p.i) - points.row(p.j);
  }
  return cache;
}

Vector pair_sq_dists(const Eigen::Ref<const Matrix>& A, const Eigen::Ref<const Matrix>& diff) {
  if (diff.rows() == 0) return Vector(0);
  return ((diff * A).cwiseProduct(diff)).rowwise().sum();
}

double objective_cached(const Eigen::Ref<const Matrix>& A, const PairCache& cache,
                        const Hyper& hyper) {
  double val = 0.0;
  const Vector sL = pair_sq_dists(A, cache.diff_labeled).array() - hyper.eta;
  for (Index p = 0; p < sL.size(); ++p) val += log_prob(sL[p], cache.y_labeled[p]);
  if (hyper.mu > 0.0 && cache.diff_unlabeled.rows() > 0) {
    const Vector sU = pair_sq_dists(A, cache.diff_unlabeled).array() - hyper.eta;
    double ent = 0.0;
    for (Index p = 0; p < sU.size(); ++p) ent += entropy(clamp_prob(sigmoid(-sU[p])));
    val -= hyper.mu * ent;
  }
  return val - hyper.lambda * A.trace();
}

double objective(const Metric& metric, const PairSet& pairs,
                 const Eigen::Ref<const Matrix>& points, const Hyper& hyper) {
  check_metric(metric, points.cols());
  const PairCache cache = make_pair_cache(points, pairs);
  return objective_cached(metric.A, cache, Hyper{hyper.mu, hyper.lambda, metric.eta});
}

PosteriorTable e_step_cached(const Eigen::Ref<const Matrix>& A, const PairCache& cache,
                             const Hyper& hyper) {
  PosteriorTable q;
  const Vector sU = pair_sq_dists(A, cache.diff_unlabeled).array() - hyper.eta;
  q.q_plus.resize(sU.size());
  for (Index p = 0; p < sU.size(); ++p) q.q_plus[p] = sigmoid(-(1.0 + hyper.mu) * sU[p]);
  return q;
}

PosteriorTable e_step(const Metric& metric, const std::vector<IndexPair>& U,
                      const Eigen::Ref<const Matrix>& points, double mu) {
  if (mu < 0.0) throw DataError("mu must be >= 0");
  check_metric(metric, points.cols());
  PairSet only_u;
  only_u.U = U;
  const PairCache cache = make_pair_cache(points, only_u);
  return e_step_cached(metric.A, cache, Hyper{mu, 0.0, metric.eta});
}

double m_objective_cached(const Eigen::Ref<const Matrix>& A, const PosteriorTable& q,
                          const PairCache& cache, const Hyper& hyper) {
  double val = 0.0;
  const Vector sL = pair_sq_dists(A, cache.diff_labeled).array() - hyper.eta;
  for (Index p = 0; p < sL.size(); ++p) val += log_prob(sL[p], cache.y_labeled[p]);
  if (hyper.mu > 0.0 && cache.diff_unlabeled.rows() > 0) {
    const Vector sU = pair_sq_dists(A, cache.diff_unlabeled).array() - hyper.eta;
    double u = 0.0;
    for (Index p = 0; p < sU.size(); ++p) {
      u += q.q_plus[p] * log_prob(sU[p], 1.0) + (1.0 - q.q_plus[p]) * log_prob(sU[p], -1.0);
    }
    val += hyper.mu * u;
  }
  return val - hyper.lambda * A.trace();
}

Matrix m_gradient_cached(const Eigen::Ref<const Matrix>& A, const PosteriorTable& q,
                         const PairCache& cache, const Hyper& hyper) {
  const Index m = A.rows();
  Matrix g = Matrix::Zero(m, m);
  if (cache.diff_labeled.rows() > 0) {
    const Vector sL = pair_sq_dists(A, cache.diff_labeled).array() - hyper.eta;
    Vector w(sL.size());
    for (Index p = 0; p < sL.size(); ++p) {
      const double p_plus = sigmoid(-sL[p]);
      const double target = cache.y_labeled[p] > 0.0 ? 1.0 : 0.0;
      w[p] = p_plus - target;
    }
    g += cache.diff_labeled.transpose() * w.asDiagonal() * cache.diff_labeled;
  }
  if (hyper.mu > 0.0 && cache.diff_unlabeled.rows() > 0) {
    const Vector sU = pair_sq_dists(A, cache.diff_unlabeled).array() - hyper.eta;
    Vector w(sU.size());
    for (Index p = 0; p < sU.size(); ++p) w[p] = hyper.mu * (sigmoid(-sU[p]) - q.q_plus[p]);
    g += cache.diff_unlabeled.transpose() * w.asDiagonal() * cache.diff_unlabeled;
  }
  g.diagonal().array() -= hyper.lambda;
  return symmetrize(g);
}

double m_objective(const Eigen::Ref<const Matrix>& A, const PosteriorTable& q,
                   const PairSet& pairs, const Eigen::Ref<const Matrix>& points,
                   const Hyper& hyper) {
  if (hyper.mu > 0.0 && q.q_plus.size() != static_cast<Index>(pairs.U.size())) {
    throw DataError("posterior table has " + std::to_string(q.q_plus.size()) + " entries, U has " +
                    std::to_string(pairs.U.size()));
  }
  const PairCache cache = make_pair_cache(points, pairs);
  return m_objective_cached(A, q, cache, hyper);
}

Matrix m_gradient(const Eigen::Ref<const Matrix>& A, const PosteriorTable& q,
                  const PairSet& pairs, const Eigen::Ref<const Matrix>& points,
                  const Hyper& hyper) {
  if (hyper.mu > 0.0 && q.q_plus.size() != static_cast<Index>(pairs.U.size())) {
    throw DataError("posterior table has " + std::to_string(q.q_plus.size()) + " entries, U has " +
                    std::to_string(pairs.U.size()));
  }
  const PairCache cache = make_pair_cache(points, pairs);
  return m_gradient_cached(A, q, cache, hyper);
}

double lipschitz_bound(const PairSet& pairs, const Hyper& hyper, double diameter, Index m) {
  if (diameter < 0.0) throw DataError("diameter must be >= 0");
  const double n_labeled = static_cast<double>(pairs.n_labeled_pairs());
  const double n_unlabeled = static_cast<double>(pairs.U.size());
  return (n_labeled + hyper.mu * n_unlabeled) * diameter * diameter +
         hyper.lambda * static_cast<double>(m);
}

double data_diameter(const Eigen::Ref<const Matrix>& points) {
  double best = 0.0;
  for (Index i = 0; i < points.rows(); ++i) {
    for (Index j = i + 1; j < points.rows(); ++j) {
      best = std::max(best, (points.row(i) - points.row(j)).squaredNorm());
    }
  }
  return std::sqrt(best);
}

}  // namespace seraph
