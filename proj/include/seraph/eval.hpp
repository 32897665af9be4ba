#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "seraph/data.hpp"
#include "seraph/optimizer.hpp"
#include "seraph/types.hpp"

namespace seraph {

/// The four trained configurations. Which (mu, lambda) each one denotes:
///   none  -> (0, 0)          post  -> (r, 0)
///   proj  -> (0, 1)          hyper -> (r, 1)
/// with r = #(S u D) / #U computed from the run's own pair sets. The
/// Euclidean baseline (A = I, no training) is always benchmarked alongside.
enum class Variant { none, post, proj, hyper };

std::string variant_name(Variant v);
Variant variant_from_name(const std::string& name);

struct Protocol {
  Index n_train = 100;
  Index n_labeled = 10;
  int n_runs = 50;
  std::uint64_t base_seed = 0;
  std::vector<Variant> variants = {Variant::none, Variant::post, Variant::proj, Variant::hyper};
  ScalingKind scaling = ScalingKind::minmax;
  // Labels are revealed class-stratified (round-robin over classes in order
  // of first appearance in the shuffled training block). See README for why
  // this deviates from plain order.
  bool stratify_reveal = true;
};

struct RunRecord {
  std::uint64_t seed = 0;
  double error = 0.0;
  bool converged = false;
  bool ok = false;            // training and evaluation completed
  std::string failure;        // populated when !ok
  Index n_S = 0, n_D = 0, n_U = 0;
  double mu_used = 0.0;
  double lambda_used = 0.0;
};

struct VariantSummary {
  std::string name;
  double mean_error = 0.0;
  double std_error = 0.0;  // sample sd of run errors / sqrt(n_runs)
  std::vector<RunRecord> runs;
  bool complete = false;  // every run ok
};

struct BenchmarkSummary {
  Protocol protocol;
  std::vector<VariantSummary> variants;  // "euclidean" first, then requested variants
};

/// Class label decided by the k nearest reference points under
/// (x-r)^T A (x-r). Distance ties and vote ties break toward the smallest
/// reference index. k stays at 1 everywhere in this project.
std::string knn_predict(const Eigen::Ref<const Matrix>& A,
                        const Eigen::Ref<const Matrix>& ref_points,
                        const std::vector<std::string>& ref_labels,
                        const Eigen::Ref<const Vector>& query, int k = 1);

/// Fraction of test points whose nearest reference has a different label.
double error_rate(const Eigen::Ref<const Matrix>& A, const Dataset& refs, const Dataset& test);

/// Random-sampling benchmark. Per run r: derive a seed from (base_seed, r),
/// shuffle the pool, split off the first n_train points as training and the
/// rest as test, reveal n_labeled training labels, build pairs, scale
/// (fit on training data only), train each variant, and score 1-NN with the
/// revealed labeled points as references (they carry the only labels the
/// classifier is allowed to see). Bit-reproducible given base_seed; honors
/// SERAPH_THREADS for parallel runs without changing results.
BenchmarkSummary run_benchmark(const Dataset& pool, const Protocol& protocol,
                               const TrainConfig& cfg, double eta = 1.0);

}  // namespace seraph
