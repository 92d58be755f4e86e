#include "stgp/harness.hpp"

#include <chrono>
#include <cmath>
#include <json.hpp>
#include <limits>

#include "stgp/errors.hpp"
#include "stgp/synthesize.hpp"

namespace stgp {

using nlohmann::json;

namespace {

json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < m.cols(); ++j) {
      if (std::isfinite(m(i, j))) {
        row.push_back(m(i, j));
      } else {
        row.push_back(nullptr);
      }
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from(const json& rows, Index cols_if_empty = 0) {
  if (!rows.is_array()) throw DataError("model: expected a matrix");
  if (rows.empty()) return Matrix(0, cols_if_empty);
  Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (Index i = 0; i < m.rows(); ++i) {
    if (static_cast<Index>(rows[i].size()) != m.cols()) throw DataError("model: ragged matrix");
    for (Index j = 0; j < m.cols(); ++j) {
      const json& v = rows[i][j];
      m(i, j) = v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>();
    }
  }
  return m;
}

json vector_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Vector vector_from(const json& v) {
  const auto values = v.get<std::vector<double>>();
  return Eigen::Map<const Vector>(values.data(), static_cast<Index>(values.size()));
}

json hypers_json(const Hyperparameters& h) {
  return {{"variance", h.variance},
          {"lengthscale_t", h.lengthscale_t},
          {"lengthscale_s", vector_json(h.lengthscale_s)},
          {"noise_variance", h.noise_variance}};
}

Hyperparameters hypers_from(const json& j) {
  Hyperparameters h;
  h.variance = j.at("variance").get<double>();
  h.lengthscale_t = j.at("lengthscale_t").get<double>();
  h.lengthscale_s = vector_from(j.at("lengthscale_s"));
  h.noise_variance = j.at("noise_variance").get<double>();
  return h;
}

void fill_training(TrainingState& st, const json& j) {
  st.hypers = hypers_from(j.at("hypers"));
  st.iteration = j.at("iterations").get<int>();
  st.elbo_trace = j.at("elbo_trace").get<std::vector<double>>();
  st.iteration_seconds = j.at("iteration_seconds").get<std::vector<double>>();
}

}  // namespace

const TrainingState& FittedModel::training_state() const {
  return std::visit([](const auto& s) -> const TrainingState& { return s; }, state);
}

FittedModel run_fit(const RunConfig& config, const GridDataset& data) {
  if (data.empty()) throw DataError("empty dataset: nothing observed");
  FittedModel out;
  out.config = config;
  out.training = data;
  out.scaling = config.normalize_inputs ? fit_scaling(data) : InputScaling{};
  const GridDataset scaled = config.normalize_inputs ? apply_scaling(data, out.scaling) : data;
  const Hyperparameters init = config.initial_hypers(scaled.spatial_dim());
  const ModelConfig mc = config.model_config();
  const TrainConfig tc = config.train_config();
  if (!is_sparse(config.variant)) {
    out.state = fit(scaled, mc, init, config.likelihood, tc);
    return out;
  }
  Matrix z;
  if (config.inducing_points) {
    if (config.inducing_points->cols() != data.spatial_dim()) {
      throw DataError("inducing points do not match the spatial dimension of the data");
    }
    z = *config.inducing_points;
    if (config.normalize_inputs) {
      for (Index i = 0; i < z.rows(); ++i) {
        z.row(i) = out.scaling.map_site(z.row(i).transpose()).transpose();
      }
    }
  } else {
    const Index m = config.inducing_count > 0 ? std::min(config.inducing_count, scaled.num_sites())
                                              : scaled.num_sites();
    z = m == scaled.num_sites() ? scaled.sites : kmeans(scaled.sites, m, config.inducing_seed);
  }
  out.state = sparse_fit(scaled, mc, init, config.likelihood, z, tc);
  return out;
}

PredictionQuery grid_query(const GridDataset& data) {
  PredictionQuery q;
  const Index total = data.num_times() * data.num_sites();
  q.times.resize(total);
  q.sites.resize(total, data.spatial_dim());
  for (Index n = 0; n < data.num_times(); ++n) {
    for (Index k = 0; k < data.num_sites(); ++k) {
      q.times(n * data.num_sites() + k) = data.times(n);
      q.sites.row(n * data.num_sites() + k) = data.sites.row(k);
    }
  }
  return q;
}

Prediction run_predict(const FittedModel& model, const PredictionQuery& query) {
  PredictionQuery q = query;
  if (model.config.normalize_inputs) {
    for (Index i = 0; i < q.times.size(); ++i) {
      q.times(i) = model.scaling.map_time(q.times(i));
      q.sites.row(i) = model.scaling.map_site(q.sites.row(i).transpose()).transpose();
    }
  }
  return std::visit(
      [&](const auto& s) -> Prediction {
        if constexpr (std::is_same_v<std::decay_t<decltype(s)>, FitState>) {
          return predict(s, q);
        } else {
          return sparse_predict(s, q);
        }
      },
      model.state);
}

std::string model_to_json(const FittedModel& model) {
  json doc;
  doc["config"] = json::parse(run_config_to_json(model.config));
  doc["scaling"] = {{"time_offset", model.scaling.time_offset},
                    {"time_scale", model.scaling.time_scale},
                    {"space_offset", vector_json(model.scaling.space_offset)},
                    {"space_scale", vector_json(model.scaling.space_scale)}};
  doc["training_data"] = {{"times", vector_json(model.training.times)},
                          {"sites", matrix_json(model.training.sites)},
                          {"values", matrix_json(model.training.values)}};
  const TrainingState& ts = model.training_state();
  doc["hypers"] = hypers_json(ts.hypers);
  doc["iterations"] = ts.iteration;
  doc["elbo_trace"] = ts.elbo_trace;
  doc["iteration_seconds"] = ts.iteration_seconds;
  if (const auto* full = std::get_if<FitState>(&model.state)) {
    doc["bank"] = {{"lambda1", matrix_json(full->bank.lambda1)},
                   {"lambda2", matrix_json(full->bank.lambda2)}};
  } else {
    const auto& sp = std::get<SparseFitState>(model.state);
    doc["inducing"] = matrix_json(sp.inducing);
    json l1 = json::array();
    json l2 = json::array();
    for (Index n = 0; n < sp.bank.num_steps(); ++n) {
      l1.push_back(vector_json(sp.bank.lambda1[n]));
      l2.push_back(matrix_json(sp.bank.lambda2[n]));
    }
    doc["bank"] = {{"lambda1", l1}, {"lambda2", l2}};
  }
  return doc.dump(1);
}

FittedModel model_from_json(const std::string& text) {
  FittedModel out;
  try {
    const json doc = json::parse(text);
    out.config = parse_run_config(doc.at("config").dump());
    const json& sc = doc.at("scaling");
    out.scaling.time_offset = sc.at("time_offset").get<double>();
    out.scaling.time_scale = sc.at("time_scale").get<double>();
    out.scaling.space_offset = vector_from(sc.at("space_offset"));
    out.scaling.space_scale = vector_from(sc.at("space_scale"));
    const json& td = doc.at("training_data");
    out.training.times = vector_from(td.at("times"));
    out.training.sites = matrix_from(td.at("sites"));
    out.training.values = matrix_from(td.at("values"), out.training.sites.rows());
    const GridDataset scaled =
        out.config.normalize_inputs ? apply_scaling(out.training, out.scaling) : out.training;
    const Likelihood base = out.config.likelihood;
    if (!is_sparse(out.config.variant)) {
      FitState st;
      fill_training(st, doc);
      st.likelihood = likelihood_with(base, st.hypers);
      st.config = out.config.model_config();
      st.times = scaled.times;
      st.sites = scaled.sites;
      st.bank.lambda1 = matrix_from(doc.at("bank").at("lambda1"), scaled.num_sites());
      st.bank.lambda2 = matrix_from(doc.at("bank").at("lambda2"), scaled.num_sites());
      out.state = std::move(st);
    } else {
      SparseFitState st;
      fill_training(st, doc);
      st.likelihood = likelihood_with(base, st.hypers);
      st.config = out.config.model_config();
      st.times = scaled.times;
      st.sites = scaled.sites;
      st.inducing = matrix_from(doc.at("inducing"));
      for (const auto& v : doc.at("bank").at("lambda1")) st.bank.lambda1.push_back(vector_from(v));
      for (const auto& m : doc.at("bank").at("lambda2")) st.bank.lambda2.push_back(matrix_from(m));
      out.state = std::move(st);
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("model file: ") + e.what());
  }
  return out;
}

BenchRow bench_fit(Index num_times, Index num_sites, int iterations, FilterMode filter,
                   ModelVariant variant, std::uint64_t seed) {
  SynthOptions so;
  so.num_times = num_times;
  so.num_sites = num_sites;
  so.seed = seed;
  const GridDataset data = synthesize(so);
  RunConfig rc;
  rc.variant = variant;
  rc.likelihood = Likelihood::gaussian(0.1);
  rc.lengthscale_t = 0.1;
  rc.lengthscale_s = Vector::Constant(1, 0.1);
  rc.iterations = iterations;
  rc.rho = 0.01;
  rc.filter = filter;
  if (is_sparse(variant)) rc.inducing_count = std::min<Index>(num_sites, 6);
  const auto start = std::chrono::steady_clock::now();
  const FittedModel model = run_fit(rc, data);
  BenchRow row;
  row.num_times = num_times;
  row.num_sites = num_sites;
  row.filter = filter;
  row.variant = variant;
  row.iterations = iterations;
  row.total_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  row.seconds_per_iteration = model.training_state().seconds_per_iteration();
  return row;
}

}  // namespace stgp
