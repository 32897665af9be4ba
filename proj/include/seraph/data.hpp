#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "seraph/types.hpp"

namespace seraph {

/// Points are rows; labels (class identifiers compared by exact token
/// equality) are optional and, when present, parallel to the rows.
struct Dataset {
  Matrix points;
  std::vector<std::string> labels;
  std::vector<std::string> feature_names;

  Index n() const { return points.rows(); }
  Index m() const { return points.cols(); }
  bool has_labels() const { return !labels.empty(); }
};

/// Per-feature affine transform x -> (x - shift) / scale. For z-scoring,
/// shift is the feature mean and scale its sample standard deviation
/// (divisor n-1); constant features get scale 1 so they pass through
/// centered. For min-max scaling, shift/scale are chosen so the training
/// range maps onto [-1, 1].
struct ScalerParams {
  Vector shift;
  Vector scale;
};

enum class ScalingKind { none, zscore, minmax };

ScalerParams fit_scaler(const Dataset& d, ScalingKind kind);
Dataset apply_scaler(const Dataset& d, const ScalerParams& p);

/// Zero mean, unit sample standard deviation per feature.
std::pair<Dataset, ScalerParams> standardize(const Dataset& d);

/// Unordered index pair, always stored with i < j.
struct IndexPair {
  Index i;
  Index j;
  friend bool operator==(const IndexPair&, const IndexPair&) = default;
};

/// Weakly labeled pair sets: S similar (y=+1), D dissimilar (y=-1), U
/// unlabeled. Mutually disjoint; S, D and U together cover all C(n,2)
/// unordered pairs of the dataset they were built from.
struct PairSet {
  std::vector<IndexPair> S;
  std::vector<IndexPair> D;
  std::vector<IndexPair> U;

  Index n_labeled_pairs() const { return static_cast<Index>(S.size() + D.size()); }
};

/// Pairs within labeled_indices become S or D according to class equality;
/// every other unordered pair of the n points goes to U.
PairSet build_pairs(const Dataset& d, const std::vector<Index>& labeled_indices);

/// A generated dataset plus the indices whose class labels are revealed.
struct Scenario {
  Dataset data;
  std::vector<Index> labeled;
};

/// Four tight 2-D Gaussian clusters, one labeled anchor each, giving six
/// weak pairs (one similar, five dissimilar). The two class-a clusters span
/// the vertical axis, so a fit to the weak labels alone prefers to null the
/// direction that separates the right-column classes b and c; the unlabeled
/// cloud is what rescues it. noise_scale is the cluster standard deviation
/// (0.25 is the intended setting).
Scenario gen_posterior_scenario(Index n_per_cluster, double noise_scale, std::uint64_t seed);

/// Two 2-D classes separated along the horizontal axis; the vertical
/// coordinate is pure nuisance. Eight curated labeled points per class with
/// small vertical noise (class a's alternating around y = +-2, class b's
/// around 0); the remaining rows get vertical noise of magnitude noise_scale
/// (5 is the intended setting).
Scenario gen_projection_scenario(Index n_per_class, double noise_scale, std::uint64_t seed);

inline constexpr Index kLastColumn = -1;
inline constexpr Index kNoLabels = -2;

/// Comma-separated UTF-8, features real-valued. label_column selects which
/// column holds class identifiers (kLastColumn for the last one, kNoLabels
/// for a label-free file).
Dataset load_csv(const std::string& path, bool has_header, Index label_column = kLastColumn);
void save_csv(const Dataset& d, const std::string& path);

/// Newline-separated 0-based integers.
std::vector<Index> load_index_list(const std::string& path);
void save_index_list(const std::vector<Index>& indices, const std::string& path);

}  // namespace seraph
