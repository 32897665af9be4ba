#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "seraph/data.hpp"
#include "seraph/eval.hpp"
#include "seraph/io.hpp"
#include "seraph/linalg.hpp"
#include "seraph/model.hpp"
#include "seraph/optimizer.hpp"
#include "seraph/types.hpp"

namespace {

using namespace seraph;

struct DataFlags {
  std::string path;
  bool header = false;
  Index label_column = kLastColumn;
  bool no_labels = false;

  Dataset load() const {
    return load_csv(path, header, no_labels ? kNoLabels : label_column);
  }
};

void add_data_flags(CLI::App* sub, DataFlags& flags, const std::string& name,
                    const std::string& help) {
  sub->add_option(name, flags.path, help)->required();
  sub->add_flag("--header", flags.header, "first CSV line is a header");
  sub->add_option("--label-column", flags.label_column,
                  "0-based class column (-1 = last column)");
  sub->add_flag("--no-labels", flags.no_labels, "CSV carries no class column");
}

void add_config_flags(CLI::App* sub, TrainConfig& cfg) {
  sub->add_option("--max-em-iters", cfg.max_em_iters, "EM round cap")->capture_default_str();
  sub->add_option("--em-tol", cfg.em_tol, "relative metric change that stops EM")
      ->capture_default_str();
  sub->add_option("--max-m-iters", cfg.max_m_iters, "gradient steps per M-step")
      ->capture_default_str();
  sub->add_option("--m-tol", cfg.m_tol, "relative objective gain that stops an M-step")
      ->capture_default_str();
  sub->add_option("--armijo-c", cfg.armijo_c, "Armijo acceptance constant")
      ->capture_default_str();
  sub->add_option("--backtrack", cfg.backtrack_factor, "step shrink factor")
      ->capture_default_str();
  sub->add_option("--init-step", cfg.init_step,
                  "initial step size (<= 0 uses the inverse Lipschitz bound)")
      ->capture_default_str();
  sub->add_option("--rank-tol", cfg.rank_tol, "relative eigenvalue cutoff for effective rank")
      ->capture_default_str();
}

double parse_mu(const std::string& text, const PairSet& pairs) {
  if (text == "auto") {
    if (pairs.U.empty())
      throw DataError("--mu auto needs unlabeled pairs, but every pair is labeled");
    return static_cast<double>(pairs.n_labeled_pairs()) / static_cast<double>(pairs.U.size());
  }
  double value = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last)
    throw CLI::ValidationError("--mu", "expected a number or 'auto', got '" + text + "'");
  if (value < 0.0) throw CLI::ValidationError("--mu", "must be >= 0");
  return value;
}

int run_gen(const std::string& scenario, Index n, double noise, std::uint64_t seed,
            const std::string& out, std::string labeled_out) {
  if (labeled_out.empty()) labeled_out = out + ".labeled";
  Scenario sc;
  if (scenario == "posterior") {
    if (n < 0) n = 25;
    if (std::isnan(noise)) noise = 0.25;
    sc = gen_posterior_scenario(n, noise, seed);
  } else {
    if (n < 0) n = 50;
    if (std::isnan(noise)) noise = 5.0;
    sc = gen_projection_scenario(n, noise, seed);
  }
  save_csv(sc.data, out);
  save_index_list(sc.labeled, labeled_out);
  std::cout << "wrote " << sc.data.n() << " points to " << out << " and " << sc.labeled.size()
            << " labeled indices to " << labeled_out << "\n";
  return 0;
}

int run_train(const DataFlags& data_flags, const std::string& labeled_path,
              const std::string& mu_text, double lambda, double eta, const TrainConfig& cfg,
              const std::string& out) {
  const Dataset data = data_flags.load();
  const std::vector<Index> labeled = load_index_list(labeled_path);
  const PairSet pairs = build_pairs(data, labeled);
  Hyper hyper;
  hyper.mu = parse_mu(mu_text, pairs);
  hyper.lambda = lambda;
  hyper.eta = eta;
  const TrainResult result = train(data.points, pairs, hyper, cfg);
  save_model(make_model_file(result, hyper, cfg), out);
  std::printf("trained on %lld points (|S|=%zu |D|=%zu |U|=%zu, mu=%g lambda=%g): "
              "objective %.6f, effective rank %d, %s after %zu EM rounds, %.2fs\n",
              static_cast<long long>(data.n()), pairs.S.size(), pairs.D.size(), pairs.U.size(),
              hyper.mu, hyper.lambda, result.objective_trace.back(), result.effective_rank,
              result.converged ? "converged" : "iteration cap hit",
              result.m_step_iterations.size(), result.wall_time_sec);
  std::cout << "model written to " << out << "\n";
  return 0;
}

int run_eval(const std::string& model_path, const DataFlags& train_flags,
             const DataFlags& test_flags, const std::string& out) {
  const ModelFile model = load_model(model_path);
  const Dataset train_ds = train_flags.load();
  const Dataset test_ds = test_flags.load();
  for (const Dataset* d : {&train_ds, &test_ds}) {
    if (d->m() != model.metric.A.rows())
      throw DataError("model dimension " + std::to_string(model.metric.A.rows()) +
                      " does not match data dimension " + std::to_string(d->m()));
  }
  EvalReport report;
  report.n_test = test_ds.n();
  report.error = error_rate(model.metric.A, train_ds, test_ds);
  for (Index i = 0; i < test_ds.n(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    Index at_best = 0;
    for (Index r = 0; r < train_ds.n(); ++r) {
      const double d = mahalanobis_sq(model.metric.A, train_ds.points.row(r).transpose(),
                                      test_ds.points.row(i).transpose());
      if (d < best) {
        best = d;
        at_best = 1;
      } else if (d == best) {
        ++at_best;
      }
    }
    if (at_best > 1) ++report.tie_count;
  }
  if (!out.empty()) {
    std::ofstream file(out);
    if (!file) throw DataError("cannot write metrics file '" + out + "'");
    file << eval_report_to_json(report);
  }
  std::printf("error %.2f%% on %lld test points (%lld nearest-distance ties)\n",
              100.0 * report.error, static_cast<long long>(report.n_test),
              static_cast<long long>(report.tie_count));
  return 0;
}

int run_bench(const DataFlags& data_flags, const Protocol& protocol, const TrainConfig& cfg,
              double eta, const std::string& out) {
  const Dataset pool = data_flags.load();
  ResultsFile results;
  results.eta = eta;
  results.summary = run_benchmark(pool, protocol, cfg, eta);
  if (!out.empty()) save_results(results, out);

  std::printf("%-10s %14s\n", "variant", "error");
  bool healthy = true;
  for (const VariantSummary& vs : results.summary.variants) {
    std::printf("%-10s %6.2f +- %4.2f %%", vs.name.c_str(), 100.0 * vs.mean_error,
                100.0 * vs.std_error);
    int ok = 0;
    for (const RunRecord& r : vs.runs) ok += r.ok ? 1 : 0;
    if (!vs.complete) std::printf("   (%d/%zu runs ok)", ok, vs.runs.size());
    std::printf("\n");
    if (ok < static_cast<int>(0.9 * static_cast<double>(vs.runs.size()))) healthy = false;
  }
  if (!out.empty()) std::cout << "results written to " << out << "\n";
  if (!healthy) {
    std::cerr << "more than 10% of runs failed; see the per-run records\n";
    return 3;
  }
  return 0;
}

int run_plot(const DataFlags& data_flags, const std::string& model_path, const std::string& out) {
  const Dataset data = data_flags.load();
  std::string svg;
  if (model_path.empty()) {
    svg = render_svg(data, nullptr);
  } else {
    const ModelFile model = load_model(model_path);
    svg = render_svg(data, &model.metric);
  }
  std::ofstream file(out);
  if (!file) throw DataError("cannot write figure '" + out + "'");
  file << svg;
  if (!file) throw DataError("write to figure '" + out + "' failed");
  std::cout << "figure written to " << out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"seraph: semi-supervised metric learning with entropy regularization"};
  app.require_subcommand(1);
  int status = 0;

  // gen
  auto* gen = app.add_subcommand("gen", "generate a synthetic scenario");
  std::string scenario;
  Index gen_n = -1;
  double gen_noise = std::numeric_limits<double>::quiet_NaN();
  std::uint64_t gen_seed = 0;
  std::string gen_out, gen_labeled_out;
  gen->add_option("--scenario", scenario, "posterior or projection")
      ->required()
      ->check(CLI::IsMember({"posterior", "projection"}));
  gen->add_option("--n", gen_n, "points per cluster/class (scenario default if omitted)");
  gen->add_option("--noise", gen_noise, "noise scale (scenario default if omitted)");
  gen->add_option("--seed", gen_seed, "RNG seed")->capture_default_str();
  gen->add_option("--out", gen_out, "output CSV path")->required();
  gen->add_option("--labeled-out", gen_labeled_out,
                  "labeled-index file (default: <out>.labeled)");
  gen->callback([&] {
    if (gen->count("--n") > 0 && gen_n < 2)
      throw CLI::ValidationError("--n", "needs at least 2 points per cluster/class");
    status = run_gen(scenario, gen_n, gen_noise, gen_seed, gen_out, gen_labeled_out);
  });

  // train
  auto* tr = app.add_subcommand("train", "learn a metric from weak labels");
  DataFlags tr_data;
  std::string tr_labeled, tr_mu = "0", tr_out = "model.json";
  double tr_lambda = 0.0, tr_eta = 1.0;
  TrainConfig tr_cfg;
  add_data_flags(tr, tr_data, "--data", "training CSV (features + class column)");
  tr->add_option("--labeled", tr_labeled, "file of 0-based indices whose labels are revealed")
      ->required();
  tr->add_option("--mu", tr_mu, "entropy weight, a number or 'auto' (= #(S u D)/#U)")
      ->capture_default_str();
  tr->add_option("--lambda", tr_lambda, "trace penalty weight")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  tr->add_option("--eta", tr_eta, "distance threshold")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  tr->add_option("--seed", tr_cfg.seed, "echoed into the model file")->capture_default_str();
  tr->add_option("--out", tr_out, "model file path")->capture_default_str();
  add_config_flags(tr, tr_cfg);
  tr->callback([&] { status = run_train(tr_data, tr_labeled, tr_mu, tr_lambda, tr_eta, tr_cfg,
                                        tr_out); });

  // eval
  auto* ev = app.add_subcommand("eval", "1-NN error of a saved model");
  std::string ev_model, ev_out;
  DataFlags ev_train, ev_test;
  ev->add_option("--model", ev_model, "model file")->required();
  add_data_flags(ev, ev_train, "--train", "reference CSV (features + class column)");
  ev->add_option("--test", ev_test.path, "test CSV")->required();
  ev_test.header = false;
  ev->callback([&] {
    ev_test.header = ev_train.header;
    ev_test.label_column = ev_train.label_column;
    ev_test.no_labels = false;
    status = run_eval(ev_model, ev_train, ev_test, ev_out);
  });
  ev->add_option("--out", ev_out, "metrics JSON path");

  // bench
  auto* be = app.add_subcommand("bench", "random-sampling benchmark of the variants");
  DataFlags be_data;
  Protocol protocol;
  TrainConfig be_cfg;
  double be_eta = 1.0;
  std::string be_out = "results.json", be_variants = "none,post,proj,hyper",
              be_scaling = "minmax";
  bool plain_reveal = false;
  add_data_flags(be, be_data, "--data", "pool CSV (features + class column)");
  be->add_option("--runs", protocol.n_runs, "random samplings")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  be->add_option("--train", protocol.n_train, "training points per run")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  be->add_option("--labeled", protocol.n_labeled, "revealed labels per run")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  be->add_option("--variants", be_variants, "comma list from none,post,proj,hyper")
      ->capture_default_str();
  be->add_option("--seed", protocol.base_seed, "base seed")->capture_default_str();
  be->add_option("--scaling", be_scaling, "per-run feature scaling")
      ->check(CLI::IsMember({"none", "zscore", "minmax"}))
      ->capture_default_str();
  be->add_flag("--plain-reveal", plain_reveal,
               "reveal the first labels in shuffle order instead of class-stratified");
  be->add_option("--eta", be_eta, "distance threshold")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  be->add_option("--out", be_out, "results JSON path")->capture_default_str();
  add_config_flags(be, be_cfg);
  be->callback([&] {
    protocol.scaling = scaling_kind_from_name(be_scaling);
    protocol.stratify_reveal = !plain_reveal;
    protocol.variants.clear();
    std::stringstream ss(be_variants);
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (item.empty()) continue;
      try {
        protocol.variants.push_back(variant_from_name(item));
      } catch (const DataError& e) {
        throw CLI::ValidationError("--variants", e.what());
      }
    }
    if (protocol.variants.empty())
      throw CLI::ValidationError("--variants", "needs at least one variant");
    status = run_bench(be_data, protocol, be_cfg, be_eta, be_out);
  });

  // plot
  auto* pl = app.add_subcommand("plot", "SVG scatter of data, optionally through a metric");
  DataFlags pl_data;
  std::string pl_model, pl_out = "fig.svg";
  add_data_flags(pl, pl_data, "--data", "CSV to draw");
  pl->add_option("--model", pl_model, "model file for the eigenvector projection");
  pl->add_option("--out", pl_out, "SVG path")->capture_default_str();
  pl->callback([&] { status = run_plot(pl_data, pl_model, pl_out); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return status;
}
