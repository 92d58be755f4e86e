#include "stgp/config.hpp"

#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>

#include "stgp/errors.hpp"

namespace stgp {

using nlohmann::json;

namespace {

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key)) throw DataError("config: unknown key '" + key + "' in " + where);
  }
}

Matrix matrix_from_json(const json& rows) {
  if (!rows.is_array() || rows.empty()) throw DataError("config: inducing points must be a non-empty array");
  const std::size_t dim = rows.front().size();
  Matrix out(static_cast<Index>(rows.size()), static_cast<Index>(dim));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (!rows[i].is_array() || rows[i].size() != dim) throw DataError("config: ragged inducing points");
    for (std::size_t j = 0; j < dim; ++j) out(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j].get<double>();
  }
  return out;
}

}  // namespace

ModelVariant parse_model_variant(const std::string& name) {
  if (name == "st-vgp") return ModelVariant::kStVgp;
  if (name == "st-svgp") return ModelVariant::kStSvgp;
  if (name == "mf-st-vgp") return ModelVariant::kMfStVgp;
  if (name == "mf-st-svgp") return ModelVariant::kMfStSvgp;
  throw DataError("config: unknown model '" + name + "'");
}

std::string to_string(ModelVariant variant) {
  switch (variant) {
    case ModelVariant::kStVgp: return "st-vgp";
    case ModelVariant::kStSvgp: return "st-svgp";
    case ModelVariant::kMfStVgp: return "mf-st-vgp";
    case ModelVariant::kMfStSvgp: return "mf-st-svgp";
  }
  return "unknown";
}

double RunConfig::effective_beta() const {
  if (beta) return *beta;
  return likelihood.conjugate() ? 1.0 : 0.1;
}

ModelConfig RunConfig::model_config() const {
  ModelConfig mc;
  mc.temporal_family = temporal_family;
  mc.spatial_family = spatial_family;
  mc.mean_field = is_mean_field(variant);
  mc.filter = filter;
  mc.scan.threads = threads;
  return mc;
}

TrainConfig RunConfig::train_config() const {
  TrainConfig tc;
  tc.beta = effective_beta();
  tc.rho = rho;
  tc.iterations = iterations;
  tc.fd_step = fd_step;
  tc.optimize_inducing = optimize_inducing;
  return tc;
}

Hyperparameters RunConfig::initial_hypers(Index spatial_dim) const {
  Hyperparameters h;
  h.variance = variance;
  h.lengthscale_t = lengthscale_t;
  if (lengthscale_s) {
    if (lengthscale_s->size() == 1 && spatial_dim > 1) {
      h.lengthscale_s = Vector::Constant(spatial_dim, (*lengthscale_s)(0));
    } else if (lengthscale_s->size() == spatial_dim) {
      h.lengthscale_s = *lengthscale_s;
    } else {
      throw DataError("config: lengthscale_s has the wrong number of entries");
    }
  } else {
    h.lengthscale_s = Vector::Ones(spatial_dim);
  }
  h.noise_variance = likelihood.noise_variance;
  return h;
}

RunConfig parse_run_config(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw DataError(std::string("config: invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw DataError("config: top level must be an object");
  RunConfig c;
  try {
    reject_unknown(doc, {"model", "kernel", "likelihood", "inducing", "training", "filter",
                         "normalize_inputs", "seed"},
                   "top level");
    if (doc.contains("model")) c.variant = parse_model_variant(doc["model"].get<std::string>());
    if (doc.contains("kernel")) {
      const json& k = doc["kernel"];
      reject_unknown(k, {"temporal", "spatial", "variance", "lengthscale_t", "lengthscale_s"}, "kernel");
      if (k.contains("temporal")) c.temporal_family = parse_matern_order(k["temporal"].get<std::string>());
      if (k.contains("spatial")) c.spatial_family = parse_matern_order(k["spatial"].get<std::string>());
      c.variance = k.value("variance", c.variance);
      c.lengthscale_t = k.value("lengthscale_t", c.lengthscale_t);
      if (k.contains("lengthscale_s")) {
        const json& ls = k["lengthscale_s"];
        if (ls.is_number()) {
          c.lengthscale_s = Vector::Constant(1, ls.get<double>());
        } else {
          const auto v = ls.get<std::vector<double>>();
          c.lengthscale_s = Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size()));
        }
      }
    }
    if (doc.contains("likelihood")) {
      const json& l = doc["likelihood"];
      reject_unknown(l, {"family", "noise_variance", "bin_area", "train_order", "nlpd_order"}, "likelihood");
      Likelihood lik;
      lik.family = parse_likelihood_family(l.value("family", std::string("gaussian")));
      lik.noise_variance = l.value("noise_variance", 1.0);
      lik.bin_area = l.value("bin_area", 1.0);
      lik.train_order = l.value("train_order", lik.train_order);
      lik.nlpd_order = l.value("nlpd_order", lik.nlpd_order);
      lik.validate();
      c.likelihood = lik;
    }
    if (doc.contains("inducing")) {
      const json& z = doc["inducing"];
      reject_unknown(z, {"count", "points", "optimize", "seed"}, "inducing");
      c.inducing_count = z.value("count", Index{0});
      if (z.contains("points")) c.inducing_points = matrix_from_json(z["points"]);
      c.optimize_inducing = z.value("optimize", false);
      c.inducing_seed = z.value("seed", std::uint64_t{0});
    }
    if (doc.contains("training")) {
      const json& t = doc["training"];
      reject_unknown(t, {"beta", "rho", "iterations", "fd_step"}, "training");
      if (t.contains("beta")) c.beta = t["beta"].get<double>();
      c.rho = t.value("rho", c.rho);
      c.iterations = t.value("iterations", c.iterations);
      c.fd_step = t.value("fd_step", c.fd_step);
    }
    if (doc.contains("filter")) {
      const json& f = doc["filter"];
      reject_unknown(f, {"mode", "threads"}, "filter");
      const std::string mode = f.value("mode", std::string("sequential"));
      if (mode == "sequential") {
        c.filter = FilterMode::kSequential;
      } else if (mode == "parallel") {
        c.filter = FilterMode::kParallel;
      } else {
        throw DataError("config: filter mode must be 'sequential' or 'parallel'");
      }
      c.threads = f.value("threads", 1u);
    }
    c.normalize_inputs = doc.value("normalize_inputs", false);
    c.seed = doc.value("seed", std::uint64_t{0});
  } catch (const json::exception& e) {
    throw DataError(std::string("config: ") + e.what());
  } catch (const UnsupportedKernelError& e) {
    throw DataError(std::string("config: ") + e.what());
  } catch (const DomainError& e) {
    throw DataError(std::string("config: ") + e.what());
  }
  if (c.beta && !(*c.beta > 0.0 && *c.beta <= 1.0)) throw DataError("config: beta must lie in (0, 1]");
  if (!(c.rho >= 0.0)) throw DataError("config: rho must be >= 0");
  if (c.iterations < 0) throw DataError("config: iterations must be >= 0");
  if (!(c.variance > 0.0) || !(c.lengthscale_t > 0.0)) {
    throw DataError("config: variance and lengthscale_t must be positive");
  }
  if (!is_sparse(c.variant) && (c.inducing_points || c.inducing_count > 0)) {
    throw DataError("config: inducing points given for a non-sparse model");
  }
  return c;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str());
}

std::string run_config_to_json(const RunConfig& c) {
  json doc;
  doc["model"] = to_string(c.variant);
  doc["kernel"] = {{"temporal", std::string(to_string(c.temporal_family))},
                   {"spatial", std::string(to_string(c.spatial_family))},
                   {"variance", c.variance},
                   {"lengthscale_t", c.lengthscale_t}};
  if (c.lengthscale_s) {
    doc["kernel"]["lengthscale_s"] =
        std::vector<double>(c.lengthscale_s->data(), c.lengthscale_s->data() + c.lengthscale_s->size());
  }
  doc["likelihood"] = {{"family", std::string(to_string(c.likelihood.family))},
                       {"noise_variance", c.likelihood.noise_variance},
                       {"bin_area", c.likelihood.bin_area},
                       {"train_order", c.likelihood.train_order},
                       {"nlpd_order", c.likelihood.nlpd_order}};
  if (is_sparse(c.variant)) {
    json z = {{"count", c.inducing_count}, {"optimize", c.optimize_inducing}, {"seed", c.inducing_seed}};
    if (c.inducing_points) {
      json rows = json::array();
      for (Index i = 0; i < c.inducing_points->rows(); ++i) {
        json row = json::array();
        for (Index j = 0; j < c.inducing_points->cols(); ++j) row.push_back((*c.inducing_points)(i, j));
        rows.push_back(row);
      }
      z["points"] = rows;
    }
    doc["inducing"] = z;
  }
  doc["training"] = {{"beta", c.effective_beta()}, {"rho", c.rho}, {"iterations", c.iterations},
                     {"fd_step", c.fd_step}};
  doc["filter"] = {{"mode", c.filter == FilterMode::kParallel ? "parallel" : "sequential"},
                   {"threads", c.threads}};
  doc["normalize_inputs"] = c.normalize_inputs;
  doc["seed"] = c.seed;
  return doc.dump(2);
}

}  // namespace stgp
