#include "stgp/mean_field.hpp"

#include <span>
#include <string>

#include "stgp/errors.hpp"
#include "stgp/gaussian.hpp"
#include "stgp/kronecker.hpp"

namespace stgp {

namespace {

Matrix chol_rows(const Matrix& c, const std::vector<Index>& rows) {
  Matrix out(static_cast<Index>(rows.size()), c.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) out.row(static_cast<Index>(r)) = c.row(rows[r]);
  return out;
}

// Conditions block states on y = C_o (h^T x_g)_g + e, e ~ N(0, V), keeping
// only the diagonal blocks of the updated covariance. Returns log N(y | prediction).
double mf_update(const Matrix& c_o, const Vector& h, const StepObservation& o, BlockState& st,
                 Index step) {
  const Index g_count = c_o.cols();
  Vector s(g_count);
  Vector f(g_count);
  std::vector<Vector> ph(static_cast<std::size_t>(g_count));
  for (Index g = 0; g < g_count; ++g) {
    ph[g] = st.cov[g] * h;
    s(g) = h.dot(ph[g]);
    f(g) = h.dot(st.mean.col(g));
  }
  const Matrix innov = symmetrized(c_o * s.asDiagonal() * c_o.transpose() + o.cov);
  const auto llt = robust_llt(innov, "innovation covariance", step);
  const Vector resid = o.mean - c_o * f;
  const Vector alpha = llt.solve(resid);
  const Matrix gamma = llt.solve(c_o);
  for (Index g = 0; g < g_count; ++g) {
    const double kappa = c_o.col(g).dot(gamma.col(g));
    st.mean.col(g) += ph[g] * c_o.col(g).dot(alpha);
    st.cov[g] -= kappa * ph[g] * ph[g].transpose();
    symmetrize(st.cov[g]);
  }
  return mvn_logpdf(resid, llt);
}

BlockState prior_state(const MFModel& mf) {
  BlockState st;
  st.mean = Matrix::Zero(mf.temporal_dim(), mf.num_points());
  st.cov.assign(static_cast<std::size_t>(mf.num_points()), mf.temporal_noises.front());
  return st;
}

void predict(const Matrix& a, const Matrix& q, BlockState& st) {
  st.mean = a * st.mean;
  for (auto& p : st.cov) {
    p = a * p * a.transpose() + q;
    symmetrize(p);
  }
}

void check_steps(const MFModel& mf, const PseudoObservations& obs) {
  if (obs.num_steps() != mf.num_steps()) {
    throw DimensionError("mean-field filter: observation steps (" +
                         std::to_string(obs.num_steps()) + ") differ from model steps (" +
                         std::to_string(mf.num_steps()) + ")");
  }
}

using BlockFilterElement = std::vector<FilterElement>;
using BlockSmootherElement = std::vector<SmootherElement>;

BlockFilterElement combine_block_filter(const BlockFilterElement& a, const BlockFilterElement& b) {
  BlockFilterElement out(a.size());
  for (std::size_t g = 0; g < a.size(); ++g) out[g] = combine_filter_elements(a[g], b[g]);
  return out;
}

BlockSmootherElement combine_block_smoother(const BlockSmootherElement& a,
                                            const BlockSmootherElement& b) {
  BlockSmootherElement out(a.size());
  for (std::size_t g = 0; g < a.size(); ++g) out[g] = combine_smoother_elements(a[g], b[g]);
  return out;
}

BlockFilterElement make_block_element(const MFModel& mf, const StepObservation& o, Index n) {
  const Index g_count = mf.num_points();
  const Index dt = mf.temporal_dim();
  const Vector& h = mf.temporal_measurement;
  const Matrix& a = mf.temporal_transitions[n];
  const Matrix& q = mf.temporal_noises[n];
  BlockFilterElement e(static_cast<std::size_t>(g_count));
  if (n == 0) {
    BlockState st = prior_state(mf);
    if (!o.missing()) mf_update(chol_rows(mf.spatial_chol, o.rows), h, o, st, n);
    for (Index g = 0; g < g_count; ++g) {
      e[g] = {Matrix::Zero(dt, dt), st.mean.col(g), st.cov[g], Vector::Zero(dt),
              Matrix::Zero(dt, dt)};
    }
    return e;
  }
  if (o.missing()) {
    for (auto& el : e) el = {a, Vector::Zero(dt), q, Vector::Zero(dt), Matrix::Zero(dt, dt)};
    return e;
  }
  // Diagonal blocks of the dense element for H = C_o (x) h^T and block-diagonal Q.
  const Matrix c_o = chol_rows(mf.spatial_chol, o.rows);
  const Vector qh = q * h;
  const double sq = h.dot(qh);
  const Matrix t = symmetrized(sq * c_o * c_o.transpose() + o.cov);
  const auto llt = robust_llt(t, "innovation covariance", n);
  const Vector alpha = llt.solve(o.mean);
  const Matrix gamma = llt.solve(c_o);
  const Vector at_h = a.transpose() * h;
  for (Index g = 0; g < g_count; ++g) {
    const double kappa = c_o.col(g).dot(gamma.col(g));
    const double proj = c_o.col(g).dot(alpha);
    FilterElement& el = e[g];
    el.B = a - kappa * qh * at_h.transpose();
    el.m = proj * qh;
    el.P = symmetrized(q - kappa * qh * qh.transpose());
    el.phi = proj * at_h;
    el.J = kappa * at_h * at_h.transpose();
  }
  return e;
}

double mf_predictive_log_lik(const MFModel& mf, const StepObservation& o, const BlockState& pred,
                             Index n) {
  BlockState scratch = pred;
  return mf_update(chol_rows(mf.spatial_chol, o.rows), mf.temporal_measurement, o, scratch, n);
}

}  // namespace

MFModel reformulate(const DiscreteSTModel& model) {
  const Index g = model.num_points();
  MFModel mf;
  mf.spatial_chol = cholesky_factor(model.spatial_gram, "spatial gram");
  mf.temporal_transitions = model.temporal_transitions;
  mf.temporal_noises = model.temporal_noises;
  mf.temporal_measurement = model.temporal.measurement.transpose();
  const Matrix eye = Matrix::Identity(g, g);
  StateSpaceModel& ss = mf.state_space;
  ss.measurement = kron_dense(mf.spatial_chol, model.temporal.measurement);
  ss.initial_mean = Vector::Zero(g * model.temporal_dim());
  for (std::size_t n = 0; n < model.temporal_transitions.size(); ++n) {
    ss.transitions.push_back(kron_dense(eye, model.temporal_transitions[n]));
    ss.noises.push_back(kron_dense(eye, model.temporal_noises[n]));
  }
  return mf;
}

Vector dense_mean(const BlockState& s) { return Eigen::Map<const Vector>(s.mean.data(), s.mean.size()); }

Matrix dense_cov(const BlockState& s) {
  const Index dt = s.mean.rows();
  const Index g = s.mean.cols();
  Matrix out = Matrix::Zero(g * dt, g * dt);
  for (Index i = 0; i < g; ++i) out.block(i * dt, i * dt, dt, dt) = s.cov[i];
  return out;
}

Matrix project_block_diagonal(const Matrix& p, Index blocks, Index block_dim) {
  if (p.rows() != blocks * block_dim || p.cols() != blocks * block_dim) {
    throw DimensionError("project_block_diagonal: shape mismatch");
  }
  Matrix out = Matrix::Zero(p.rows(), p.cols());
  for (Index i = 0; i < blocks; ++i) {
    out.block(i * block_dim, i * block_dim, block_dim, block_dim) =
        p.block(i * block_dim, i * block_dim, block_dim, block_dim);
  }
  return out;
}

BlockFilterResult mf_filter(const MFModel& mf, const PseudoObservations& obs) {
  check_steps(mf, obs);
  const Index nt = mf.num_steps();
  BlockFilterResult out;
  out.filtered.reserve(nt);
  out.step_log_lik.assign(static_cast<std::size_t>(nt), 0.0);
  BlockState st = prior_state(mf);
  for (Index n = 0; n < nt; ++n) {
    if (n > 0) predict(mf.temporal_transitions[n], mf.temporal_noises[n], st);
    const StepObservation& o = obs.steps[n];
    if (!o.missing()) {
      const double ll = mf_update(chol_rows(mf.spatial_chol, o.rows), mf.temporal_measurement, o, st, n);
      out.step_log_lik[n] = ll;
      out.log_lik += ll;
    }
    out.filtered.push_back(st);
  }
  return out;
}

std::vector<BlockState> mf_smoother(const MFModel& mf, const BlockFilterResult& filtered) {
  const Index nt = static_cast<Index>(filtered.filtered.size());
  std::vector<BlockState> out = filtered.filtered;
  for (Index n = nt - 2; n >= 0; --n) {
    const Matrix& a = mf.temporal_transitions[n + 1];
    const Matrix& q = mf.temporal_noises[n + 1];
    const BlockState& f = filtered.filtered[n];
    BlockState& s = out[n];
    for (Index g = 0; g < mf.num_points(); ++g) {
      const Vector m_pred = a * f.mean.col(g);
      const Matrix ap = a * f.cov[g];
      const Matrix p_pred = symmetrized(ap * a.transpose() + q);
      const Matrix gain = robust_llt(p_pred, "predictive covariance", n + 1).solve(ap).transpose();
      s.mean.col(g) = f.mean.col(g) + gain * (out[n + 1].mean.col(g) - m_pred);
      s.cov[g] = f.cov[g] + gain * (out[n + 1].cov[g] - p_pred) * gain.transpose();
      symmetrize(s.cov[g]);
    }
  }
  return out;
}

BlockFilterResult mf_parallel_filter(const MFModel& mf, const PseudoObservations& obs,
                                     const ScanOptions& options) {
  check_steps(mf, obs);
  const std::size_t nt = static_cast<std::size_t>(mf.num_steps());
  const Index g_count = mf.num_points();
  std::vector<BlockFilterElement> elems(nt);
  detail::strided_for(0, nt, 1, options.threads, [&](std::size_t n) {
    elems[n] = make_block_element(mf, obs.steps[n], static_cast<Index>(n));
  });
  inclusive_scan(std::span<BlockFilterElement>(elems), combine_block_filter, options);

  BlockFilterResult out;
  out.filtered.resize(nt);
  out.step_log_lik.assign(nt, 0.0);
  for (std::size_t n = 0; n < nt; ++n) {
    BlockState& st = out.filtered[n];
    st.mean.resize(mf.temporal_dim(), g_count);
    st.cov.resize(static_cast<std::size_t>(g_count));
    for (Index g = 0; g < g_count; ++g) {
      st.mean.col(g) = elems[n][g].m;
      st.cov[g] = std::move(elems[n][g].P);
    }
  }
  detail::strided_for(0, nt, 1, options.threads, [&](std::size_t n) {
    const StepObservation& o = obs.steps[n];
    if (o.missing()) return;
    BlockState pred = n == 0 ? prior_state(mf) : out.filtered[n - 1];
    if (n > 0) predict(mf.temporal_transitions[n], mf.temporal_noises[n], pred);
    out.step_log_lik[n] = mf_predictive_log_lik(mf, o, pred, static_cast<Index>(n));
  });
  for (double ll : out.step_log_lik) out.log_lik += ll;
  return out;
}

std::vector<BlockState> mf_parallel_smoother(const MFModel& mf, const BlockFilterResult& filtered,
                                             const ScanOptions& options) {
  const std::size_t nt = filtered.filtered.size();
  const Index g_count = mf.num_points();
  const Index dt = mf.temporal_dim();
  std::vector<BlockSmootherElement> elems(nt);
  detail::strided_for(0, nt, 1, options.threads, [&](std::size_t n) {
    const BlockState& f = filtered.filtered[n];
    BlockSmootherElement e(static_cast<std::size_t>(g_count));
    for (Index g = 0; g < g_count; ++g) {
      if (n + 1 == nt) {
        e[g] = {Matrix::Zero(dt, dt), f.mean.col(g), f.cov[g]};
        continue;
      }
      const Matrix& a = mf.temporal_transitions[n + 1];
      const Matrix ap = a * f.cov[g];
      const Matrix r = symmetrized(ap * a.transpose() + mf.temporal_noises[n + 1]);
      SmootherElement& el = e[g];
      el.E = robust_llt(r, "predictive covariance", static_cast<Index>(n + 1)).solve(ap).transpose();
      el.m = f.mean.col(g) - el.E * (a * f.mean.col(g));
      el.P = symmetrized(f.cov[g] - el.E * ap);
    }
    elems[n] = std::move(e);
  });
  reverse_inclusive_scan(std::span<BlockSmootherElement>(elems), combine_block_smoother, options);

  std::vector<BlockState> out(nt);
  for (std::size_t n = 0; n < nt; ++n) {
    out[n].mean.resize(dt, g_count);
    out[n].cov.resize(static_cast<std::size_t>(g_count));
    for (Index g = 0; g < g_count; ++g) {
      out[n].mean.col(g) = elems[n][g].m;
      out[n].cov[g] = std::move(elems[n][g].P);
    }
  }
  return out;
}

BlockMarginals mf_filter_smoother(const MFModel& mf, const PseudoObservations& obs, FilterMode mode,
                                  const ScanOptions& options) {
  BlockMarginals out;
  if (mode == FilterMode::kParallel) {
    const BlockFilterResult f = mf_parallel_filter(mf, obs, options);
    out.log_lik = f.log_lik;
    out.smoothed = mf_parallel_smoother(mf, f, options);
  } else {
    const BlockFilterResult f = mf_filter(mf, obs);
    out.log_lik = f.log_lik;
    out.smoothed = mf_smoother(mf, f);
  }
  return out;
}

void mf_function_moments(const MFModel& mf, const BlockState& s, Vector& mean, Matrix& cov) {
  const Index g_count = mf.num_points();
  const Vector& h = mf.temporal_measurement;
  Vector f(g_count);
  Vector var(g_count);
  for (Index g = 0; g < g_count; ++g) {
    f(g) = h.dot(s.mean.col(g));
    var(g) = h.dot(s.cov[g] * h);
  }
  mean = mf.spatial_chol * f;
  cov = symmetrized(mf.spatial_chol * var.asDiagonal() * mf.spatial_chol.transpose());
}

}  // namespace stgp
