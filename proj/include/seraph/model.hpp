#pragma once

#include "seraph/data.hpp"
#include "seraph/types.hpp"

namespace seraph {

/// Mahalanobis metric: symmetric PSD matrix A plus the threshold eta at
/// which a pair is equally likely to be similar or dissimilar. The model is
///   p(y | x, x') = 1 / (1 + exp(y * (||x - x'||_A^2 - eta))),  y in {+1,-1}.
struct Metric {
  Matrix A;
  double eta = 1.0;
};

/// mu weights the unlabeled entropy term, lambda the trace penalty.
struct Hyper {
  double mu = 0.0;
  double lambda = 0.0;
  double eta = 1.0;
};

/// Posterior q(y = +1 | x_i, x_j) for each unlabeled pair, indexed exactly
/// like PairSet::U.
struct PosteriorTable {
  Vector q_plus;
};

/// Probabilities are clamped into [kProbEps, 1 - kProbEps] so logarithms
/// stay finite when the sigmoid saturates in floating point.
inline constexpr double kProbEps = 1e-12;

double pair_prob(const Metric& metric, const Eigen::Ref<const Vector>& x,
                 const Eigen::Ref<const Vector>& y_point, int y);

/// Binary entropy in nats with the 0*ln(0) = 0 convention.
double entropy(double p_plus);

/// Full training objective: labeled log-likelihood, minus mu times the total
/// entropy of the unlabeled pair predictions, minus lambda * tr(A).
double objective(const Metric& metric, const PairSet& pairs,
                 const Eigen::Ref<const Matrix>& points, const Hyper& hyper);

/// Analytic posterior over unlabeled pairs: q(y) proportional to p(y)^(1+mu),
/// evaluated in log-space as a logistic of the scaled logit difference.
PosteriorTable e_step(const Metric& metric, const std::vector<IndexPair>& U,
                      const Eigen::Ref<const Matrix>& points, double mu);

/// Objective maximized in each M-step: labeled log-likelihood plus the
/// q-weighted unlabeled log-likelihood minus the trace penalty. Concave in A.
double m_objective(const Eigen::Ref<const Matrix>& A, const PosteriorTable& q,
                   const PairSet& pairs, const Eigen::Ref<const Matrix>& points,
                   const Hyper& hyper);

Matrix m_gradient(const Eigen::Ref<const Matrix>& A, const PosteriorTable& q,
                  const PairSet& pairs, const Eigen::Ref<const Matrix>& points,
                  const Hyper& hyper);

/// Upper bound on ||grad F||_F over the PSD cone:
/// (#S + #D + mu * #U) * diameter^2 + lambda * m.
double lipschitz_bound(const PairSet& pairs, const Hyper& hyper, double diameter, Index m);

/// Largest pairwise Euclidean distance between the points.
double data_diameter(const Eigen::Ref<const Matrix>& points);

// Precomputed pair differences. All objective/gradient evaluations inside the
// optimizer run off this cache; the PairSet-taking entry points above build
// one per call and are meant for tests and one-shot evaluation.
struct PairCache {
  Matrix diff_labeled;    // one row x_i - x_j per pair in S then D
  Vector y_labeled;       // +1 for S rows, -1 for D rows
  Matrix diff_unlabeled;  // one row per pair in U
};

PairCache make_pair_cache(const Eigen::Ref<const Matrix>& points, const PairSet& pairs);

/// Row-wise squared Mahalanobis lengths diff_p^T A diff_p.
Vector pair_sq_dists(const Eigen::Ref<const Matrix>& A, const Eigen::Ref<const Matrix>& diff);

double m_objective_cached(const Eigen::Ref<const Matrix>& A, const PosteriorTable& q,
                          const PairCache& cache, const Hyper& hyper);
Matrix m_gradient_cached(const Eigen::Ref<const Matrix>& A, const PosteriorTable& q,
                         const PairCache& cache, const Hyper& hyper);
double objective_cached(const Eigen::Ref<const Matrix>& A, const PairCache& cache,
                        const Hyper& hyper);
PosteriorTable e_step_cached(const Eigen::Ref<const Matrix>& A, const PairCache& cache,
                             const Hyper& hyper);

}  // namespace seraph
