#pragma once

#include <cstdint>
#include <vector>

#include "seraph/model.hpp"

namespace seraph {

struct TrainConfig {
  int max_em_iters = 50;
  double em_tol = 1e-4;  // relative Frobenius change of A between EM rounds
  int max_m_iters = 500;
  double m_tol = 1e-6;  // relative objective improvement within an M-step
  double armijo_c = 1e-4;
  double backtrack_factor = 0.5;
  // <= 0 means seed the step size with 1 / lipschitz_bound; a positive value
  // fixes the initial step explicitly.
  double init_step = 0.0;
  double rank_tol = 1e-6;
  std::uint64_t seed = 0;
};

struct TrainResult {
  Metric metric;
  std::vector<double> objective_trace;   // full objective after init and each EM round
  std::vector<int> m_step_iterations;    // accepted gradient steps per EM round
  int effective_rank = 0;
  bool converged = false;
  double wall_time_sec = 0.0;
};

/// A0 = c I with c = eta / (mean squared Euclidean distance over S and D),
/// falling back to the mean over all point pairs when no pair is labeled.
/// Matching the starting scale to eta keeps the sigmoids off their flat
/// tails, where gradients vanish.
Metric init_metric(const Eigen::Ref<const Matrix>& points, const PairSet& pairs, double eta);

/// Projected gradient ascent on the M-step objective with Armijo
/// backtracking: A <- project_psd(A + alpha * grad F), accepted when F gains
/// at least armijo_c * <grad, A_new - A>. The accepted-step F sequence is
/// non-decreasing.
Matrix m_step(const Eigen::Ref<const Matrix>& A_init, const PosteriorTable& q,
              const PairSet& pairs, const Eigen::Ref<const Matrix>& points, const Hyper& hyper,
              const TrainConfig& cfg);

/// EM-like alternation: starting from q(-1) = 1 on every unlabeled pair and
/// A0 from init_metric, repeat M-step then E-step until the relative
/// Frobenius change of A drops below em_tol. mu = 0 skips the E-step and
/// ignores U entirely.
TrainResult train(const Eigen::Ref<const Matrix>& points, const PairSet& pairs,
                  const Hyper& hyper, const TrainConfig& cfg);

/// Number of eigenvalues above rank_tol relative to the largest one.
int effective_rank(const Eigen::Ref<const Matrix>& A, double rank_tol);

}  // namespace seraph
