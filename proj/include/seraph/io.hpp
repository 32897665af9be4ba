#pragma once

#include <string>

#include "seraph/data.hpp"
#include "seraph/eval.hpp"
#include "seraph/model.hpp"
#include "seraph/optimizer.hpp"
#include "seraph/types.hpp"

namespace seraph {

std::string scaling_kind_name(ScalingKind kind);
ScalingKind scaling_kind_from_name(const std::string& name);

/// On-disk model document. A is validated symmetric PSD on load; anything
/// else is rejected with a message naming the violated field.
struct ModelFile {
  int schema_version = 1;
  Metric metric;
  Hyper hyper;
  TrainConfig config;
  std::vector<double> objective_trace;
  std::vector<int> m_step_iterations;
  int effective_rank = 0;
  bool converged = false;
  double wall_time_sec = 0.0;
};

ModelFile make_model_file(const TrainResult& result, const Hyper& hyper, const TrainConfig& cfg);

/// Deterministic JSON (sorted keys, two-space indent, trailing newline);
/// write -> read -> write is byte-identical.
std::string model_to_json(const ModelFile& model);
ModelFile model_from_json(const std::string& text);
void save_model(const ModelFile& model, const std::string& path);
ModelFile load_model(const std::string& path);

struct EvalReport {
  double error = 0.0;
  Index n_test = 0;
  Index tie_count = 0;  // queries whose nearest distance is shared by >1 reference
};

std::string eval_report_to_json(const EvalReport& report);

/// On-disk benchmark results document; eta rides along so the document fully
/// determines the run.
struct ResultsFile {
  int schema_version = 1;
  double eta = 1.0;
  BenchmarkSummary summary;
};

std::string results_to_json(const ResultsFile& results);
ResultsFile results_from_json(const std::string& text);
void save_results(const ResultsFile& results, const std::string& path);
ResultsFile load_results(const std::string& path);

/// Standalone SVG scatter. Without a metric: the first two feature columns
/// colored by class (requires m == 2). With a metric: adds (or, for m > 2,
/// shows only) the data mapped through sqrt(eig) * eigvec for the top two
/// eigenvectors, the view in which a rank-1 metric flattens to a line.
std::string render_svg(const Dataset& d, const Metric* metric);

}  // namespace seraph
