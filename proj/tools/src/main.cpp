// stgp: command line front end for fitting, prediction, simulation and timing.
//
// Exit codes: 0 success, 1 usage, 2 data, 3 numerical failure. Any failure
// prints exactly one JSON line on stderr and removes files the command had
// started to write.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "stgp/config.hpp"
#include "stgp/dataset.hpp"
#include "stgp/errors.hpp"
#include "stgp/harness.hpp"
#include "stgp/metrics.hpp"
#include "stgp/synthesize.hpp"

namespace {

using nlohmann::json;

enum ExitCode : int { kOk = 0, kUsage = 1, kData = 2, kNumerical = 3 };

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Deletes registered outputs unless the command finishes.
class Artifacts {
 public:
  const std::string& add(const std::string& path) {
    paths_.push_back(path);
    return path;
  }
  void commit() { paths_.clear(); }
  ~Artifacts() {
    std::error_code ec;
    for (const auto& p : paths_) std::filesystem::remove(p, ec);
  }

 private:
  std::vector<std::string> paths_;
};

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw stgp::DataError("cannot write '" + path + "'");
  out.precision(17);
  return out;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out = open_output(path);
  out << text << '\n';
  if (!out) throw stgp::DataError("failed writing '" + path + "'");
}

json metrics_json(const stgp::Metrics& m, const stgp::TrainingState* training) {
  json j = {{"rmse", m.rmse}, {"nlpd", m.nlpd}, {"count", m.count}};
  if (training) {
    j["elbo_final"] = training->elbo_trace.empty() ? 0.0 : training->elbo_trace.back();
    j["iters"] = training->iteration;
    j["seconds_per_iter"] = training->seconds_per_iteration();
  }
  return j;
}

stgp::Metrics grid_metrics(const stgp::FittedModel& model, const stgp::GridDataset& data) {
  const stgp::Prediction p = stgp::run_predict(model, stgp::grid_query(data));
  return stgp::evaluate_metrics(model.training_state().likelihood, stgp::vec(data.values), p.mean,
                                p.var);
}

// --- fit ---------------------------------------------------------------------

struct FitArgs {
  std::string config;
  std::string data;
  std::string model_out;
  std::string metrics_out;
  std::string test;
  int iterations = -1;
};

int run_fit_command(const FitArgs& a) {
  Artifacts out;
  stgp::RunConfig config = stgp::load_run_config(a.config);
  if (a.iterations >= 0) config.iterations = a.iterations;
  const stgp::GridDataset train = stgp::load_csv(a.data);
  const stgp::FittedModel model = stgp::run_fit(config, train);

  write_text(out.add(a.model_out), stgp::model_to_json(model));
  if (!a.metrics_out.empty()) {
    const stgp::GridDataset eval = a.test.empty() ? train : stgp::load_csv(a.test);
    const stgp::Metrics m = grid_metrics(model, eval);
    write_text(out.add(a.metrics_out), metrics_json(m, &model.training_state()).dump(2));
  }
  out.commit();
  return kOk;
}

// --- predict -----------------------------------------------------------------

struct PredictArgs {
  std::string model;
  std::string query;
  std::string out;
  std::string metrics_out;
};

int run_predict_command(const PredictArgs& a) {
  Artifacts out;
  std::ifstream in(a.model);
  if (!in) throw stgp::DataError("cannot open model '" + a.model + "'");
  std::stringstream text;
  text << in.rdbuf();
  const stgp::FittedModel model = stgp::model_from_json(text.str());
  const stgp::QueryTable q = stgp::load_query_csv(a.query);
  if (q.sites.cols() != model.training.spatial_dim()) {
    throw stgp::DataError("query has " + std::to_string(q.sites.cols()) +
                          " spatial columns, model expects " +
                          std::to_string(model.training.spatial_dim()));
  }
  const stgp::Prediction p = stgp::run_predict(model, {q.times, q.sites});
  const stgp::Likelihood& lik = model.training_state().likelihood;

  std::ofstream csv = open_output(out.add(a.out));
  csv << 't';
  for (stgp::Index j = 0; j < q.sites.cols(); ++j) csv << ",s" << (j + 1);
  csv << ",mean,var";
  if (q.has_targets()) csv << ",nlpd";
  csv << '\n';
  for (stgp::Index i = 0; i < q.times.size(); ++i) {
    csv << q.times(i);
    for (stgp::Index j = 0; j < q.sites.cols(); ++j) csv << ',' << q.sites(i, j);
    csv << ',' << p.mean(i) << ',' << p.var(i);
    if (q.has_targets()) {
      if (std::isfinite(q.targets(i))) {
        csv << ',' << stgp::nlpd(lik, q.targets(i), p.mean(i), p.var(i));
      } else {
        csv << ",nan";
      }
    }
    csv << '\n';
  }
  csv.close();
  if (!csv) throw stgp::DataError("failed writing '" + a.out + "'");

  if (!a.metrics_out.empty()) {
    if (!q.has_targets()) throw UsageError("--metrics-out needs a y column in the query file");
    const stgp::Metrics m = stgp::evaluate_metrics(lik, q.targets, p.mean, p.var);
    write_text(out.add(a.metrics_out), metrics_json(m, &model.training_state()).dump(2));
  }
  out.commit();
  return kOk;
}

// --- simulate ----------------------------------------------------------------

struct SimulateArgs {
  std::string kind = "pseudo_periodic";
  stgp::Index nt = 100;
  stgp::Index ns = 10;
  std::uint64_t seed = 0;
  double t_end = 1.0;
  std::string out;
};

int run_simulate_command(const SimulateArgs& a) {
  Artifacts out;
  stgp::SynthOptions opts;
  try {
    opts.kind = stgp::parse_synth_kind(a.kind);
  } catch (const stgp::DomainError& e) {
    throw UsageError(e.what());
  }
  opts.num_times = a.nt;
  opts.num_sites = a.ns;
  opts.seed = a.seed;
  opts.t_end = a.t_end;
  const stgp::GridDataset d = stgp::synthesize(opts);
  if (a.out.empty()) {
    stgp::write_csv(std::cout, d);
  } else {
    std::ofstream f = open_output(out.add(a.out));
    stgp::write_csv(f, d);
    f.close();
    if (!f) throw stgp::DataError("failed writing '" + a.out + "'");
  }
  out.commit();
  return kOk;
}

// --- bench -------------------------------------------------------------------

struct BenchArgs {
  std::vector<stgp::Index> nt{100, 200, 400, 800, 1600};
  stgp::Index ns = 5;
  int iterations = 3;
  std::string filter = "sequential";
  std::string model = "st-vgp";
  std::uint64_t seed = 0;
  std::string out;
};

int run_bench_command(const BenchArgs& a) {
  Artifacts out;
  std::vector<stgp::FilterMode> modes;
  if (a.filter == "sequential" || a.filter == "both") modes.push_back(stgp::FilterMode::kSequential);
  if (a.filter == "parallel" || a.filter == "both") modes.push_back(stgp::FilterMode::kParallel);
  stgp::ModelVariant variant;
  try {
    variant = stgp::parse_model_variant(a.model);
  } catch (const stgp::DataError& e) {
    throw UsageError(e.what());
  }

  std::ofstream file;
  std::ostream* sink = &std::cout;
  if (!a.out.empty()) {
    file = open_output(out.add(a.out));
    sink = &file;
  }
  *sink << "num_times,num_sites,filter,variant,iterations,seconds_per_iteration,total_seconds\n";
  for (const stgp::FilterMode mode : modes) {
    for (const stgp::Index nt : a.nt) {
      const stgp::BenchRow r = stgp::bench_fit(nt, a.ns, a.iterations, mode, variant, a.seed);
      *sink << r.num_times << ',' << r.num_sites << ','
            << (r.filter == stgp::FilterMode::kParallel ? "parallel" : "sequential") << ','
            << stgp::to_string(r.variant) << ',' << r.iterations << ',' << r.seconds_per_iteration
            << ',' << r.total_seconds << '\n';
      sink->flush();
    }
  }
  if (file.is_open()) {
    file.close();
    if (!file) throw stgp::DataError("failed writing '" + a.out + "'");
  }
  out.commit();
  return kOk;
}

int report(ExitCode code, const std::string& kind, const std::string& message) {
  const json line = {{"error", kind}, {"exit_code", static_cast<int>(code)}, {"message", message}};
  std::cerr << line.dump() << std::endl;
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spatio-temporal Gaussian process inference with Kalman-filter CVI"};
  app.require_subcommand(1);
  app.set_help_flag("-h,--help", "Print help and exit");

  FitArgs fit;
  CLI::App* fit_cmd = app.add_subcommand("fit", "Train a model and write its state");
  fit_cmd->add_option("--config", fit.config, "JSON run configuration")->required()->check(CLI::ExistingFile);
  fit_cmd->add_option("--data", fit.data, "Training CSV t,s1[,s2,...],y")->required()->check(CLI::ExistingFile);
  fit_cmd->add_option("--model-out", fit.model_out, "Where to write the model JSON")->required();
  fit_cmd->add_option("--metrics-out", fit.metrics_out, "Where to write metrics JSON");
  fit_cmd->add_option("--test", fit.test, "Held-out CSV for the metrics (default: training data)")
      ->check(CLI::ExistingFile);
  fit_cmd->add_option("--iterations", fit.iterations, "Override training.iterations")
      ->check(CLI::NonNegativeNumber);

  PredictArgs pred;
  CLI::App* pred_cmd = app.add_subcommand("predict", "Predict latent moments at query points");
  pred_cmd->add_option("--model", pred.model, "Model JSON written by fit")->required()->check(CLI::ExistingFile);
  pred_cmd->add_option("--query", pred.query, "CSV t,s1[,s2,...][,y]")->required()->check(CLI::ExistingFile);
  pred_cmd->add_option("--out", pred.out, "Prediction CSV")->required();
  pred_cmd->add_option("--metrics-out", pred.metrics_out, "Metrics JSON against the query's y column");

  SimulateArgs sim;
  CLI::App* sim_cmd = app.add_subcommand("simulate", "Generate a synthetic dataset");
  sim_cmd->add_option("--kind", sim.kind, "pseudo_periodic or lgcp_counts")->capture_default_str();
  sim_cmd->add_option("--nt", sim.nt, "Number of time steps")->capture_default_str()->check(CLI::PositiveNumber);
  sim_cmd->add_option("--ns", sim.ns, "Number of sites")->capture_default_str()->check(CLI::PositiveNumber);
  sim_cmd->add_option("--seed", sim.seed, "Random seed")->capture_default_str();
  sim_cmd->add_option("--t-end", sim.t_end, "End of the time span starting at 0")->capture_default_str();
  sim_cmd->add_option("--out", sim.out, "Output CSV (default: stdout)");

  BenchArgs bench;
  CLI::App* bench_cmd = app.add_subcommand("bench", "Time training iterations against N_t");
  bench_cmd->add_option("--nt", bench.nt, "Comma-separated time-step counts")
      ->delimiter(',')
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  bench_cmd->add_option("--ns", bench.ns, "Number of sites")->capture_default_str()->check(CLI::PositiveNumber);
  bench_cmd->add_option("--iterations", bench.iterations, "Iterations per run")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  bench_cmd->add_option("--filter", bench.filter, "sequential, parallel or both")
      ->capture_default_str()
      ->check(CLI::IsMember({"sequential", "parallel", "both"}));
  bench_cmd->add_option("--model", bench.model, "Model variant")->capture_default_str();
  bench_cmd->add_option("--seed", bench.seed, "Random seed")->capture_default_str();
  bench_cmd->add_option("--out", bench.out, "Output CSV (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report(kUsage, "usage", e.what());
  }

  try {
    if (*fit_cmd) return run_fit_command(fit);
    if (*pred_cmd) return run_predict_command(pred);
    if (*sim_cmd) return run_simulate_command(sim);
    if (*bench_cmd) return run_bench_command(bench);
  } catch (const UsageError& e) {
    return report(kUsage, "usage", e.what());
  } catch (const stgp::DataError& e) {
    return report(kData, "data", e.what());
  } catch (const stgp::DimensionError& e) {
    return report(kData, "data", e.what());
  } catch (const stgp::DomainError& e) {
    return report(kData, "data", e.what());
  } catch (const stgp::UnsupportedKernelError& e) {
    return report(kData, "data", e.what());
  } catch (const stgp::Error& e) {
    return report(kNumerical, "numerical", e.what());
  } catch (const std::exception& e) {
    return report(kNumerical, "numerical", e.what());
  }
  return report(kUsage, "usage", "no command given");
}
