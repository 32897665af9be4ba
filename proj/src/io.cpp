#include "seraph/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

#include "json.hpp"
#include "seraph/linalg.hpp"

namespace seraph {

using nlohmann::json;

std::string scaling_kind_name(ScalingKind kind) {
  switch (kind) {
    case ScalingKind::none: return "none";
    case ScalingKind::zscore: return "zscore";
    case ScalingKind::minmax: return "minmax";
  }
  throw DataError("unknown scaling kind value");
}

ScalingKind scaling_kind_from_name(const std::string& name) {
  if (name == "none") return ScalingKind::none;
  if (name == "zscore") return ScalingKind::zscore;
  if (name == "minmax") return ScalingKind::minmax;
  throw DataError("unknown scaling '" + name + "' (expected none, zscore or minmax)");
}

namespace {

json config_to_json(const TrainConfig& cfg) {
  return json{{"max_em_iters", cfg.max_em_iters},
              {"em_tol", cfg.em_tol},
              {"max_m_iters", cfg.max_m_iters},
              {"m_tol", cfg.m_tol},
              {"armijo_c", cfg.armijo_c},
              {"backtrack_factor", cfg.backtrack_factor},
              {"init_step", cfg.init_step},
              {"rank_tol", cfg.rank_tol},
              {"seed", cfg.seed}};
}

TrainConfig config_from_json(const json& j) {
  TrainConfig cfg;
  cfg.max_em_iters = j.value("max_em_iters", cfg.max_em_iters);
  cfg.em_tol = j.value("em_tol", cfg.em_tol);
  cfg.max_m_iters = j.value("max_m_iters", cfg.max_m_iters);
  cfg.m_tol = j.value("m_tol", cfg.m_tol);
  cfg.armijo_c = j.value("armijo_c", cfg.armijo_c);
  cfg.backtrack_factor = j.value("backtrack_factor", cfg.backtrack_factor);
  cfg.init_step = j.value("init_step", cfg.init_step);
  cfg.rank_tol = j.value("rank_tol", cfg.rank_tol);
  cfg.seed = j.value("seed", cfg.seed);
  return cfg;
}

json parse_document(const std::string& text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw DataError(std::string(what) + " is not valid JSON: " + e.what());
  }
}

void require(bool ok, const std::string& message) {
  if (!ok) throw DataError(message);
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

std::string slurp(const std::string& path, const char* what) {
  std::ifstream in(path);
  if (!in) throw DataError(std::string("cannot open ") + what + " '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spill(const std::string& text, const std::string& path, const char* what) {
  std::ofstream out(path);
  if (!out) throw DataError(std::string("cannot write ") + what + " '" + path + "'");
  out << text;
  if (!out) throw DataError(std::string("write to ") + what + " '" + path + "' failed");
}

}  // namespace

ModelFile make_model_file(const TrainResult& result, const Hyper& hyper, const TrainConfig& cfg) {
  ModelFile model;
  model.metric = result.metric;
  model.hyper = hyper;
  model.config = cfg;
  model.objective_trace = result.objective_trace;
  model.m_step_iterations = result.m_step_iterations;
  model.effective_rank = result.effective_rank;
  model.converged = result.converged;
  model.wall_time_sec = result.wall_time_sec;
  return model;
}

std::string model_to_json(const ModelFile& model) {
  const Index m = model.metric.A.rows();
  std::vector<double> a_flat;
  a_flat.reserve(static_cast<std::size_t>(m * m));
  for (Index r = 0; r < m; ++r)
    for (Index c = 0; c < m; ++c) a_flat.push_back(model.metric.A(r, c));
  json j{{"schema_version", model.schema_version},
         {"kind", "seraph-model"},
         {"m", m},
         {"eta", model.metric.eta},
         {"A", a_flat},
         {"training",
          json{{"hyper",
                json{{"mu", model.hyper.mu}, {"lambda", model.hyper.lambda},
                     {"eta", model.hyper.eta}}},
               {"config", config_to_json(model.config)},
               {"objective_trace", model.objective_trace},
               {"m_step_iterations", model.m_step_iterations},
               {"effective_rank", model.effective_rank},
               {"converged", model.converged},
               {"wall_time_sec", model.wall_time_sec}}}};
  return dump(j);
}

ModelFile model_from_json(const std::string& text) {
  const json j = parse_document(text, "model file");
  require(j.is_object(), "model file: top level must be an object");
  require(j.contains("schema_version") && j["schema_version"].is_number_integer(),
          "model file: missing integer field 'schema_version'");
  const int version = j["schema_version"].get<int>();
  require(version == 1, "model file: unsupported schema_version " + std::to_string(version));
  require(j.value("kind", "seraph-model") == "seraph-model",
          "model file: field 'kind' is not 'seraph-model'");
  require(j.contains("m") && j["m"].is_number_integer(),
          "model file: missing integer field 'm'");
  const Index m = j["m"].get<Index>();
  require(m >= 1, "model file: m must be >= 1");
  require(j.contains("eta") && j["eta"].is_number(), "model file: missing numeric field 'eta'");
  require(j.contains("A") && j["A"].is_array(), "model file: missing array field 'A'");
  const auto& arr = j["A"];
  require(static_cast<Index>(arr.size()) == m * m,
          "model file: A has " + std::to_string(arr.size()) + " entries, expected m*m = " +
              std::to_string(m * m));

  ModelFile model;
  model.schema_version = version;
  model.metric.eta = j["eta"].get<double>();
  model.metric.A.resize(m, m);
  for (Index r = 0; r < m; ++r) {
    for (Index c = 0; c < m; ++c) {
      const auto& cell = arr[static_cast<std::size_t>(r * m + c)];
      require(cell.is_number(), "model file: A contains a non-numeric entry");
      model.metric.A(r, c) = cell.get<double>();
    }
  }
  require(model.metric.A.allFinite(), "model file: A contains non-finite entries");
  const double scale = 1.0 + model.metric.A.cwiseAbs().maxCoeff();
  const double asym = (model.metric.A - model.metric.A.transpose()).cwiseAbs().maxCoeff();
  require(asym <= 1e-9 * scale, "model file: A is not symmetric");
  const EigenDecomposition eig = sym_eigen(model.metric.A);
  const double min_eig = eig.values(eig.values.size() - 1);
  const double max_eig = eig.values(0);
  require(min_eig >= -1e-9 * (1.0 + std::abs(max_eig)),
          "model file: A is not positive semidefinite (min eigenvalue " +
              std::to_string(min_eig) + ")");

  if (j.contains("training")) {
    const json& t = j["training"];
    require(t.is_object(), "model file: 'training' must be an object");
    if (t.contains("hyper")) {
      model.hyper.mu = t["hyper"].value("mu", 0.0);
      model.hyper.lambda = t["hyper"].value("lambda", 0.0);
      model.hyper.eta = t["hyper"].value("eta", model.metric.eta);
    }
    if (t.contains("config")) model.config = config_from_json(t["config"]);
    if (t.contains("objective_trace"))
      model.objective_trace = t["objective_trace"].get<std::vector<double>>();
    if (t.contains("m_step_iterations"))
      model.m_step_iterations = t["m_step_iterations"].get<std::vector<int>>();
    model.effective_rank = t.value("effective_rank", 0);
    model.converged = t.value("converged", false);
    model.wall_time_sec = t.value("wall_time_sec", 0.0);
  }
  return model;
}

void save_model(const ModelFile& model, const std::string& path) {
  spill(model_to_json(model), path, "model file");
}

ModelFile load_model(const std::string& path) {
  return model_from_json(slurp(path, "model file"));
}

std::string eval_report_to_json(const EvalReport& report) {
  return dump(json{{"error", report.error},
                   {"n_test", report.n_test},
                   {"tie_count", report.tie_count}});
}

namespace {

json run_to_json(const RunRecord& r) {
  return json{{"seed", r.seed},          {"error", r.error},     {"converged", r.converged},
              {"ok", r.ok},              {"failure", r.failure}, {"n_S", r.n_S},
              {"n_D", r.n_D},            {"n_U", r.n_U},         {"mu", r.mu_used},
              {"lambda", r.lambda_used}};
}

RunRecord run_from_json(const json& j) {
  RunRecord r;
  r.seed = j.at("seed").get<std::uint64_t>();
  r.error = j.at("error").get<double>();
  r.converged = j.at("converged").get<bool>();
  r.ok = j.at("ok").get<bool>();
  r.failure = j.at("failure").get<std::string>();
  r.n_S = j.at("n_S").get<Index>();
  r.n_D = j.at("n_D").get<Index>();
  r.n_U = j.at("n_U").get<Index>();
  r.mu_used = j.at("mu").get<double>();
  r.lambda_used = j.at("lambda").get<double>();
  return r;
}

}  // namespace

std::string results_to_json(const ResultsFile& results) {
  const Protocol& p = results.summary.protocol;
  json variant_names = json::array();
  for (Variant v : p.variants) variant_names.push_back(variant_name(v));
  json variants = json::array();
  for (const VariantSummary& vs : results.summary.variants) {
    json per_run = json::array();
    for (const RunRecord& r : vs.runs) per_run.push_back(run_to_json(r));
    variants.push_back(json{{"name", vs.name},
                            {"mean_error", vs.mean_error},
                            {"std_error", vs.std_error},
                            {"complete", vs.complete},
                            {"per_run", per_run}});
  }
  json j{{"schema_version", results.schema_version},
         {"kind", "seraph-results"},
         {"eta", results.eta},
         {"environment",
          json{{"feature_scaling", scaling_kind_name(p.scaling)},
               {"stratified_reveal", p.stratify_reveal}}},
         {"protocol",
          json{{"n_train", p.n_train},
               {"n_labeled", p.n_labeled},
               {"n_runs", p.n_runs},
               {"base_seed", p.base_seed},
               {"variants", variant_names},
               {"scaling", scaling_kind_name(p.scaling)},
               {"stratify_reveal", p.stratify_reveal}}},
         {"variants", variants}};
  return dump(j);
}

ResultsFile results_from_json(const std::string& text) {
  const json j = parse_document(text, "results file");
  require(j.is_object(), "results file: top level must be an object");
  require(j.value("schema_version", -1) == 1, "results file: unsupported schema_version");
  require(j.value("kind", "seraph-results") == "seraph-results",
          "results file: field 'kind' is not 'seraph-results'");
  ResultsFile out;
  try {
    out.eta = j.at("eta").get<double>();
    const json& p = j.at("protocol");
    Protocol& proto = out.summary.protocol;
    proto.n_train = p.at("n_train").get<Index>();
    proto.n_labeled = p.at("n_labeled").get<Index>();
    proto.n_runs = p.at("n_runs").get<int>();
    proto.base_seed = p.at("base_seed").get<std::uint64_t>();
    proto.variants.clear();
    for (const auto& name : p.at("variants"))
      proto.variants.push_back(variant_from_name(name.get<std::string>()));
    proto.scaling = scaling_kind_from_name(p.at("scaling").get<std::string>());
    proto.stratify_reveal = p.at("stratify_reveal").get<bool>();
    for (const auto& vj : j.at("variants")) {
      VariantSummary vs;
      vs.name = vj.at("name").get<std::string>();
      vs.mean_error = vj.at("mean_error").get<double>();
      vs.std_error = vj.at("std_error").get<double>();
      vs.complete = vj.at("complete").get<bool>();
      for (const auto& rj : vj.at("per_run")) vs.runs.push_back(run_from_json(rj));
      out.summary.variants.push_back(std::move(vs));
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("results file: ") + e.what());
  }
  return out;
}

void save_results(const ResultsFile& results, const std::string& path) {
  spill(results_to_json(results), path, "results file");
}

ResultsFile load_results(const std::string& path) {
  return results_from_json(slurp(path, "results file"));
}

namespace {

const char* kPalette[8] = {"#4269d0", "#efb118", "#ff725c", "#6cc5b0",
                           "#3ca951", "#ff8ab7", "#a463f2", "#97bbf5"};

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

struct Panel {
  std::string title;
  Matrix coords;  // n x 2
};

void draw_panel(std::ostringstream& svg, const Panel& panel,
                const std::vector<std::string>& labels,
                const std::vector<std::string>& class_order, double x0, double y0, double side) {
  double lo_x = panel.coords.col(0).minCoeff(), hi_x = panel.coords.col(0).maxCoeff();
  double lo_y = panel.coords.col(1).minCoeff(), hi_y = panel.coords.col(1).maxCoeff();
  const double pad_x = std::max(1e-9, (hi_x - lo_x) * 0.05 + 1e-12);
  const double pad_y = std::max(1e-9, (hi_y - lo_y) * 0.05 + 1e-12);
  lo_x -= pad_x;
  hi_x += pad_x;
  lo_y -= pad_y;
  hi_y += pad_y;

  svg << "<rect x=\"" << fmt(x0) << "\" y=\"" << fmt(y0) << "\" width=\"" << fmt(side)
      << "\" height=\"" << fmt(side) << "\" fill=\"none\" stroke=\"#404040\"/>\n";
  svg << "<text x=\"" << fmt(x0 + side / 2) << "\" y=\"" << fmt(y0 - 8)
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">" << panel.title
      << "</text>\n";
  for (Index i = 0; i < panel.coords.rows(); ++i) {
    const double px = x0 + (panel.coords(i, 0) - lo_x) / (hi_x - lo_x) * side;
    const double py = y0 + side - (panel.coords(i, 1) - lo_y) / (hi_y - lo_y) * side;
    std::size_t cls = 0;
    if (!labels.empty()) {
      cls = static_cast<std::size_t>(
          std::find(class_order.begin(), class_order.end(), labels[static_cast<std::size_t>(i)]) -
          class_order.begin());
    }
    svg << "<circle cx=\"" << fmt(px) << "\" cy=\"" << fmt(py) << "\" r=\"2.5\" fill=\""
        << kPalette[cls % 8] << "\" fill-opacity=\"0.8\"/>\n";
  }
}

}  // namespace

std::string render_svg(const Dataset& d, const Metric* metric) {
  if (d.n() == 0) throw DataError("nothing to plot: dataset is empty");
  if (d.m() < 2) throw DataError("plotting needs at least 2 feature dimensions, got " +
                                 std::to_string(d.m()));
  if (metric == nullptr && d.m() != 2)
    throw DataError("raw scatter needs exactly 2 dimensions, got " + std::to_string(d.m()) +
                    " (supply a model for an eigenvector projection)");

  std::vector<std::string> class_order;
  for (const std::string& lab : d.labels)
    if (std::find(class_order.begin(), class_order.end(), lab) == class_order.end())
      class_order.push_back(lab);

  std::vector<Panel> panels;
  if (d.m() == 2) panels.push_back({"data", d.points});
  if (metric != nullptr) {
    if (metric->A.rows() != d.m())
      throw DataError("model dimension " + std::to_string(metric->A.rows()) +
                      " does not match data dimension " + std::to_string(d.m()));
    const EigenDecomposition eig = sym_eigen(metric->A);
    Matrix proj(d.n(), 2);
    for (int axis = 0; axis < 2; ++axis) {
      const double scale = std::sqrt(std::max(0.0, eig.values(axis)));
      proj.col(axis) = scale * (d.points * eig.vectors.col(axis));
    }
    panels.push_back({"metric projection", proj});
  }

  const double side = 300.0, margin = 40.0, gap = 40.0;
  const double width = margin * 2 + side * panels.size() + gap * (panels.size() - 1);
  const double height = margin * 2 + side;
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(width) << "\" height=\""
      << fmt(height) << "\" viewBox=\"0 0 " << fmt(width) << ' ' << fmt(height) << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (std::size_t p = 0; p < panels.size(); ++p)
    draw_panel(svg, panels[p], d.labels, class_order, margin + p * (side + gap), margin, side);
  // simple legend along the bottom edge
  double lx = margin;
  for (std::size_t c = 0; c < class_order.size(); ++c) {
    svg << "<circle cx=\"" << fmt(lx) << "\" cy=\"" << fmt(height - 14) << "\" r=\"4\" fill=\""
        << kPalette[c % 8] << "\"/>\n";
    svg << "<text x=\"" << fmt(lx + 8) << "\" y=\"" << fmt(height - 10)
        << "\" font-family=\"sans-serif\" font-size=\"12\">" << class_order[c] << "</text>\n";
    lx += 24 + 7.0 * class_order[c].size();
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace seraph
