#include "seraph/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <thread>
#include <unordered_map>

#include "seraph/linalg.hpp"
#include "seraph/model.hpp"
#include "seraph/rng.hpp"

namespace seraph {

std::string variant_name(Variant v) {
  switch (v) {
    case Variant::none: return "none";
    case Variant::post: return "post";
    case Variant::proj: return "proj";
    case Variant::hyper: return "hyper";
  }
  throw DataError("unknown variant value");
}

Variant variant_from_name(const std::string& name) {
  if (name == "none") return Variant::none;
  if (name == "post") return Variant::post;
  if (name == "proj") return Variant::proj;
  if (name == "hyper") return Variant::hyper;
  throw DataError("unknown variant '" + name + "' (expected none, post, proj or hyper)");
}

std::string knn_predict(const Eigen::Ref<const Matrix>& A,
                        const Eigen::Ref<const Matrix>& ref_points,
                        const std::vector<std::string>& ref_labels,
                        const Eigen::Ref<const Vector>& query, int k) {
  const Index n = ref_points.rows();
  if (n == 0) throw DataError("knn_predict needs at least one reference point");
  if (static_cast<Index>(ref_labels.size()) != n)
    throw DataError("reference labels and points disagree in count");
  if (ref_points.cols() != query.size())
    throw DataError("query dimension " + std::to_string(query.size()) +
                    " does not match reference dimension " + std::to_string(ref_points.cols()));
  if (k < 1) throw DataError("k must be >= 1");

  if (k == 1) {
    Index best = 0;
    double best_d = mahalanobis_sq(A, ref_points.row(0).transpose(), query);
    for (Index i = 1; i < n; ++i) {
      const double d = mahalanobis_sq(A, ref_points.row(i).transpose(), query);
      if (d < best_d) {
        best_d = d;
        best = i;
      }
    }
    return ref_labels[static_cast<std::size_t>(best)];
  }

  std::vector<std::pair<double, Index>> dist(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i)
    dist[static_cast<std::size_t>(i)] = {mahalanobis_sq(A, ref_points.row(i).transpose(), query),
                                         i};
  const auto kth = dist.begin() + std::min<Index>(k, n);
  std::partial_sort(dist.begin(), kth, dist.end());
  // majority vote; a vote tie goes to the label holding the smallest index
  std::unordered_map<std::string, std::pair<int, Index>> votes;
  for (auto it = dist.begin(); it != kth; ++it) {
    auto& slot = votes[ref_labels[static_cast<std::size_t>(it->second)]];
    if (slot.first == 0) slot.second = it->second;
    slot.first += 1;
    slot.second = std::min(slot.second, it->second);
  }
  std::string winner;
  int best_count = -1;
  Index best_index = n;
  for (const auto& [label, slot] : votes) {
    if (slot.first > best_count || (slot.first == best_count && slot.second < best_index)) {
      winner = label;
      best_count = slot.first;
      best_index = slot.second;
    }
  }
  return winner;
}

double error_rate(const Eigen::Ref<const Matrix>& A, const Dataset& refs, const Dataset& test) {
  if (test.n() == 0) throw DataError("error_rate needs a non-empty test set");
  if (!refs.has_labels() || !test.has_labels())
    throw DataError("error_rate needs class labels on both sides");
  Index wrong = 0;
  for (Index i = 0; i < test.n(); ++i) {
    const std::string got =
        knn_predict(A, refs.points, refs.labels, test.points.row(i).transpose());
    if (got != test.labels[static_cast<std::size_t>(i)]) ++wrong;
  }
  return static_cast<double>(wrong) / static_cast<double>(test.n());
}

namespace {

// Round-robin over classes in order of first appearance within the shuffled
// training block: every class gets a labeled representative before any class
// gets its second, mirroring how a curator would reveal a budget of labels.
std::vector<Index> stratified_reveal(const std::vector<std::string>& labels, Index n_labeled) {
  std::vector<std::vector<Index>> queues;
  std::unordered_map<std::string, std::size_t> slot_of;
  for (Index i = 0; i < static_cast<Index>(labels.size()); ++i) {
    const auto [it, inserted] = slot_of.try_emplace(labels[static_cast<std::size_t>(i)],
                                                    queues.size());
    if (inserted) queues.emplace_back();
    queues[it->second].push_back(i);
  }
  std::vector<Index> out;
  out.reserve(static_cast<std::size_t>(n_labeled));
  for (std::size_t round = 0; static_cast<Index>(out.size()) < n_labeled; ++round) {
    bool took_any = false;
    for (const auto& q : queues) {
      if (round < q.size()) {
        out.push_back(q[round]);
        took_any = true;
        if (static_cast<Index>(out.size()) == n_labeled) break;
      }
    }
    if (!took_any) break;  // fewer points than n_labeled; caller validated, defensive only
  }
  std::sort(out.begin(), out.end());
  return out;
}

struct RunOutput {
  RunRecord euclidean;
  std::vector<RunRecord> per_variant;
};

RunOutput execute_run(const Dataset& pool, const Protocol& protocol, const TrainConfig& cfg,
                      double eta, int run_index) {
  const std::uint64_t seed = derive_seed(protocol.base_seed, run_index);
  RunOutput out;
  out.per_variant.resize(protocol.variants.size());

  Rng rng(seed);
  std::vector<Index> perm(static_cast<std::size_t>(pool.n()));
  std::iota(perm.begin(), perm.end(), Index{0});
  rng.shuffle(perm);

  Dataset train_ds, test_ds;
  train_ds.feature_names = test_ds.feature_names = pool.feature_names;
  train_ds.points.resize(protocol.n_train, pool.m());
  test_ds.points.resize(pool.n() - protocol.n_train, pool.m());
  for (Index i = 0; i < pool.n(); ++i) {
    const Index src = perm[static_cast<std::size_t>(i)];
    if (i < protocol.n_train) {
      train_ds.points.row(i) = pool.points.row(src);
      train_ds.labels.push_back(pool.labels[static_cast<std::size_t>(src)]);
    } else {
      test_ds.points.row(i - protocol.n_train) = pool.points.row(src);
      test_ds.labels.push_back(pool.labels[static_cast<std::size_t>(src)]);
    }
  }

  const ScalerParams scaler = fit_scaler(train_ds, protocol.scaling);
  train_ds = apply_scaler(train_ds, scaler);
  test_ds = apply_scaler(test_ds, scaler);

  std::vector<Index> labeled;
  if (protocol.stratify_reveal) {
    labeled = stratified_reveal(train_ds.labels, protocol.n_labeled);
  } else {
    labeled.resize(static_cast<std::size_t>(protocol.n_labeled));
    std::iota(labeled.begin(), labeled.end(), Index{0});
  }

  const PairSet pairs = build_pairs(train_ds, labeled);
  const Index n_S = static_cast<Index>(pairs.S.size());
  const Index n_D = static_cast<Index>(pairs.D.size());
  const Index n_U = static_cast<Index>(pairs.U.size());
  const double ratio = n_U > 0 ? static_cast<double>(n_S + n_D) / static_cast<double>(n_U) : 0.0;

  // The classifier only ever sees the revealed labels, so the 1-NN reference
  // set is the labeled subset, not the whole training block.
  Dataset ref_ds;
  ref_ds.feature_names = train_ds.feature_names;
  ref_ds.points.resize(static_cast<Index>(labeled.size()), train_ds.m());
  for (std::size_t i = 0; i < labeled.size(); ++i) {
    ref_ds.points.row(static_cast<Index>(i)) = train_ds.points.row(labeled[i]);
    ref_ds.labels.push_back(train_ds.labels[static_cast<std::size_t>(labeled[i])]);
  }

  auto base_record = [&](double mu, double lambda) {
    RunRecord rec;
    rec.seed = seed;
    rec.n_S = n_S;
    rec.n_D = n_D;
    rec.n_U = n_U;
    rec.mu_used = mu;
    rec.lambda_used = lambda;
    return rec;
  };

  out.euclidean = base_record(0.0, 0.0);
  out.euclidean.converged = true;
  try {
    const Matrix identity = Matrix::Identity(pool.m(), pool.m());
    out.euclidean.error = error_rate(identity, ref_ds, test_ds);
    out.euclidean.ok = true;
  } catch (const std::exception& e) {
    out.euclidean.failure = e.what();
  }

  for (std::size_t v = 0; v < protocol.variants.size(); ++v) {
    const Variant variant = protocol.variants[v];
    const bool uses_mu = variant == Variant::post || variant == Variant::hyper;
    const bool uses_lambda = variant == Variant::proj || variant == Variant::hyper;
    Hyper hyper;
    hyper.mu = uses_mu ? ratio : 0.0;
    hyper.lambda = uses_lambda ? 1.0 : 0.0;
    hyper.eta = eta;
    RunRecord rec = base_record(hyper.mu, hyper.lambda);
    try {
      const TrainResult result = train(train_ds.points, pairs, hyper, cfg);
      rec.error = error_rate(result.metric.A, ref_ds, test_ds);
      rec.converged = result.converged;
      rec.ok = true;
    } catch (const std::exception& e) {
      rec.failure = e.what();
    }
    out.per_variant[v] = rec;
  }
  return out;
}

int thread_budget() {
  const char* env = std::getenv("SERAPH_THREADS");
  if (env == nullptr || *env == '\0') return 1;
  const long parsed = std::strtol(env, nullptr, 10);
  if (parsed <= 1) return 1;
  return static_cast<int>(std::min<long>(parsed, 64));
}

VariantSummary summarize(std::string name, std::vector<RunRecord> runs) {
  VariantSummary s;
  s.name = std::move(name);
  s.runs = std::move(runs);
  s.complete = true;
  double sum = 0.0;
  Index ok_count = 0;
  for (const RunRecord& r : s.runs) {
    if (r.ok) {
      sum += r.error;
      ++ok_count;
    } else {
      s.complete = false;
    }
  }
  if (ok_count > 0) s.mean_error = sum / static_cast<double>(ok_count);
  if (ok_count > 1) {
    double sq = 0.0;
    for (const RunRecord& r : s.runs)
      if (r.ok) sq += (r.error - s.mean_error) * (r.error - s.mean_error);
    const double sample_sd = std::sqrt(sq / static_cast<double>(ok_count - 1));
    s.std_error = sample_sd / std::sqrt(static_cast<double>(ok_count));
  }
  return s;
}

}  // namespace

BenchmarkSummary run_benchmark(const Dataset& pool, const Protocol& protocol,
                               const TrainConfig& cfg, double eta) {
  if (!pool.has_labels()) throw DataError("benchmark pool needs class labels");
  if (protocol.n_runs < 1) throw DataError("n_runs must be >= 1");
  if (protocol.n_labeled < 1) throw DataError("n_labeled must be >= 1");
  if (protocol.n_labeled > protocol.n_train)
    throw DataError("n_labeled exceeds n_train");
  if (protocol.n_train >= pool.n())
    throw DataError("n_train (" + std::to_string(protocol.n_train) +
                    ") must leave test points in a pool of " + std::to_string(pool.n()));

  std::vector<RunOutput> outputs(static_cast<std::size_t>(protocol.n_runs));
  const int threads = std::min<int>(thread_budget(), protocol.n_runs);
  if (threads <= 1) {
    for (int r = 0; r < protocol.n_runs; ++r)
      outputs[static_cast<std::size_t>(r)] = execute_run(pool, protocol, cfg, eta, r);
  } else {
    std::atomic<int> next{0};
    auto worker = [&]() {
      for (int r = next.fetch_add(1); r < protocol.n_runs; r = next.fetch_add(1))
        outputs[static_cast<std::size_t>(r)] = execute_run(pool, protocol, cfg, eta, r);
    };
    std::vector<std::thread> team;
    team.reserve(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t) team.emplace_back(worker);
    for (std::thread& t : team) t.join();
  }

  // outputs are indexed by run, so aggregation order is independent of the
  // thread interleaving
  BenchmarkSummary summary;
  summary.protocol = protocol;
  std::vector<RunRecord> euclid;
  euclid.reserve(outputs.size());
  for (const RunOutput& o : outputs) euclid.push_back(o.euclidean);
  summary.variants.push_back(summarize("euclidean", std::move(euclid)));
  for (std::size_t v = 0; v < protocol.variants.size(); ++v) {
    std::vector<RunRecord> runs;
    runs.reserve(outputs.size());
    for (const RunOutput& o : outputs) runs.push_back(o.per_variant[v]);
    summary.variants.push_back(summarize(variant_name(protocol.variants[v]), std::move(runs)));
  }
  return summary;
}

}  // namespace seraph
