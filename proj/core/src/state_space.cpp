#include "stgp/state_space.hpp"

#include <Eigen/LU>
#include <span>
#include <string>

#include "stgp/errors.hpp"
#include "stgp/gaussian.hpp"

namespace stgp {

namespace {

void check_conforming(const StateSpaceModel& model, const PseudoObservations& obs) {
  if (obs.num_steps() != model.num_steps()) {
    throw DimensionError("filter: observation steps (" + std::to_string(obs.num_steps()) +
                         ") differ from model steps (" + std::to_string(model.num_steps()) + ")");
  }
  if (static_cast<Index>(model.noises.size()) != model.num_steps()) {
    throw DimensionError("filter: transitions and noises differ in length");
  }
}

Matrix observed_rows(const Matrix& h, const std::vector<Index>& rows) {
  Matrix out(static_cast<Index>(rows.size()), h.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) out.row(static_cast<Index>(r)) = h.row(rows[r]);
  return out;
}

// log N(y | H_r m, H_r P H_r^T + V) for predictive (m, P).
double predictive_log_lik(const Matrix& hr, const StepObservation& o, const Vector& m,
                          const Matrix& p, Index step) {
  const Matrix s = symmetrized(hr * p * hr.transpose() + o.cov);
  const auto llt = robust_llt(s, "innovation covariance", step);
  return mvn_logpdf(o.mean - hr * m, llt);
}

}  // namespace

PseudoObservations PseudoObservations::empty(Index num_steps) {
  PseudoObservations out;
  out.steps.resize(static_cast<std::size_t>(num_steps));
  return out;
}

Vector StateMarginals::function_mean(const Matrix& measurement, Index n) const {
  return measurement * means[static_cast<std::size_t>(n)];
}

Matrix StateMarginals::function_cov(const Matrix& measurement, Index n) const {
  return symmetrized(measurement * covs[static_cast<std::size_t>(n)] * measurement.transpose());
}

FilterResult sequential_filter(const StateSpaceModel& model, const PseudoObservations& obs) {
  check_conforming(model, obs);
  const Index nt = model.num_steps();
  const Index d = model.state_dim();
  FilterResult out;
  out.means.reserve(nt);
  out.covs.reserve(nt);
  out.step_log_lik.assign(static_cast<std::size_t>(nt), 0.0);

  Vector m = model.initial_mean;
  Matrix p = Matrix::Zero(d, d);
  for (Index n = 0; n < nt; ++n) {
    const Matrix& a = model.transitions[n];
    m = a * m;
    p = a * p * a.transpose() + model.noises[n];
    symmetrize(p);

    const StepObservation& o = obs.steps[n];
    if (!o.missing()) {
      const Matrix hr = observed_rows(model.measurement, o.rows);
      const Matrix s = symmetrized(hr * p * hr.transpose() + o.cov);
      const auto llt = robust_llt(s, "innovation covariance", n);
      const Vector resid = o.mean - hr * m;
      const double ll = mvn_logpdf(resid, llt);
      out.step_log_lik[n] = ll;
      out.log_lik += ll;
      const Matrix ph = p * hr.transpose();
      const Matrix gain = llt.solve(ph.transpose()).transpose();
      m += gain * resid;
      p -= gain * ph.transpose();
      symmetrize(p);
    }
    out.means.push_back(m);
    out.covs.push_back(p);
  }
  return out;
}

StateMarginals rts_smoother(const StateSpaceModel& model, const FilterResult& filtered) {
  const Index nt = static_cast<Index>(filtered.means.size());
  if (nt != model.num_steps()) throw DimensionError("rts_smoother: filter/model length mismatch");
  StateMarginals out;
  out.means = filtered.means;
  out.covs = filtered.covs;
  for (Index n = nt - 2; n >= 0; --n) {
    const Matrix& a = model.transitions[n + 1];
    const Vector& mf = filtered.means[n];
    const Matrix& pf = filtered.covs[n];
    const Vector m_pred = a * mf;
    const Matrix p_pred = symmetrized(a * pf * a.transpose() + model.noises[n + 1]);
    const auto llt = robust_llt(p_pred, "predictive covariance", n + 1);
    // G = P_f A^T R^{-1}, obtained as (R^{-1} A P_f)^T.
    const Matrix gain = llt.solve(a * pf).transpose();
    out.means[n] = mf + gain * (out.means[n + 1] - m_pred);
    out.covs[n] = pf + gain * (out.covs[n + 1] - p_pred) * gain.transpose();
    symmetrize(out.covs[n]);
  }
  return out;
}

FilterElement identity_filter_element(Index d) {
  return {Matrix::Identity(d, d), Vector::Zero(d), Matrix::Zero(d, d), Vector::Zero(d),
          Matrix::Zero(d, d)};
}

FilterElement combine_filter_elements(const FilterElement& ei, const FilterElement& ej) {
  const Index d = ei.P.rows();
  const Matrix ident = Matrix::Identity(d, d);
  // W = (I + P_i J_j)^{-1}; the transpose (I + J_j P_i)^{-1} is reused for phi and J.
  const Matrix w = Eigen::PartialPivLU<Matrix>(ident + ei.P * ej.J).solve(ident);
  const Matrix bjw = ej.B * w;
  const Matrix bit_wt = ei.B.transpose() * w.transpose();

  FilterElement out;
  out.B = bjw * ei.B;
  out.m = bjw * (ei.m + ei.P * ej.phi) + ej.m;
  out.P = bjw * ei.P * ej.B.transpose() + ej.P;
  symmetrize(out.P);
  out.phi = bit_wt * (ej.phi - ej.J * ei.m) + ei.phi;
  out.J = bit_wt * ej.J * ei.B + ei.J;
  symmetrize(out.J);
  return out;
}

SmootherElement combine_smoother_elements(const SmootherElement& ei, const SmootherElement& ej) {
  SmootherElement out;
  out.E = ei.E * ej.E;
  out.m = ei.E * ej.m + ei.m;
  out.P = ei.E * ej.P * ei.E.transpose() + ei.P;
  symmetrize(out.P);
  return out;
}

namespace {

FilterElement make_filter_element(const StateSpaceModel& model, const StepObservation& o,
                                  Index n) {
  const Matrix& a = model.transitions[n];
  const Matrix& q = model.noises[n];
  const Index d = model.state_dim();
  FilterElement e;
  if (n == 0) {
    // The first element carries the prior: B = 0 and (m, P) are the
    // filtered moments at step 0.
    Vector m = a * model.initial_mean;
    Matrix p = q;
    if (!o.missing()) {
      const Matrix hr = observed_rows(model.measurement, o.rows);
      const Matrix s = symmetrized(hr * p * hr.transpose() + o.cov);
      const auto llt = robust_llt(s, "innovation covariance", n);
      const Matrix ph = p * hr.transpose();
      const Matrix gain = llt.solve(ph.transpose()).transpose();
      m += gain * (o.mean - hr * m);
      p -= gain * ph.transpose();
    }
    e.B = Matrix::Zero(d, d);
    e.m = std::move(m);
    e.P = symmetrized(p);
    e.phi = Vector::Zero(d);
    e.J = Matrix::Zero(d, d);
    return e;
  }
  if (o.missing()) {
    return {a, Vector::Zero(d), q, Vector::Zero(d), Matrix::Zero(d, d)};
  }
  const Matrix hr = observed_rows(model.measurement, o.rows);
  const Matrix s = symmetrized(hr * q * hr.transpose() + o.cov);
  const auto llt = robust_llt(s, "innovation covariance", n);
  const Matrix qh = q * hr.transpose();
  const Matrix gain = llt.solve(qh.transpose()).transpose();
  const Matrix ha = hr * a;
  e.B = a - gain * ha;
  e.m = gain * o.mean;
  e.P = symmetrized(q - gain * qh.transpose());
  e.phi = ha.transpose() * llt.solve(o.mean);
  e.J = symmetrized(ha.transpose() * llt.solve(ha));
  return e;
}

}  // namespace

std::vector<FilterElement> make_filter_elements(const StateSpaceModel& model,
                                                const PseudoObservations& obs) {
  check_conforming(model, obs);
  std::vector<FilterElement> elems(static_cast<std::size_t>(model.num_steps()));
  for (Index n = 0; n < model.num_steps(); ++n) elems[n] = make_filter_element(model, obs.steps[n], n);
  return elems;
}

FilterResult parallel_filter(const StateSpaceModel& model, const PseudoObservations& obs,
                             const ScanOptions& options) {
  check_conforming(model, obs);
  const std::size_t nt = static_cast<std::size_t>(model.num_steps());
  std::vector<FilterElement> elems(nt);
  detail::strided_for(0, nt, 1, options.threads, [&](std::size_t n) {
    elems[n] = make_filter_element(model, obs.steps[n], static_cast<Index>(n));
  });
  inclusive_scan(std::span<FilterElement>(elems), combine_filter_elements, options);

  FilterResult out;
  out.means.resize(nt);
  out.covs.resize(nt);
  out.step_log_lik.assign(nt, 0.0);
  for (std::size_t n = 0; n < nt; ++n) {
    out.means[n] = std::move(elems[n].m);
    out.covs[n] = std::move(elems[n].P);
  }
  detail::strided_for(0, nt, 1, options.threads, [&](std::size_t n) {
    const StepObservation& o = obs.steps[n];
    if (o.missing()) return;
    const Matrix& a = model.transitions[n];
    const Matrix& q = model.noises[n];
    const Matrix hr = observed_rows(model.measurement, o.rows);
    Vector m_pred;
    Matrix p_pred;
    if (n == 0) {
      m_pred = a * model.initial_mean;
      p_pred = q;
    } else {
      m_pred = a * out.means[n - 1];
      p_pred = a * out.covs[n - 1] * a.transpose() + q;
    }
    out.step_log_lik[n] = predictive_log_lik(hr, o, m_pred, p_pred, static_cast<Index>(n));
  });
  for (double ll : out.step_log_lik) out.log_lik += ll;
  return out;
}

StateMarginals parallel_smoother(const StateSpaceModel& model, const FilterResult& filtered,
                                 const ScanOptions& options) {
  const std::size_t nt = filtered.means.size();
  if (static_cast<Index>(nt) != model.num_steps()) {
    throw DimensionError("parallel_smoother: filter/model length mismatch");
  }
  std::vector<SmootherElement> elems(nt);
  detail::strided_for(0, nt, 1, options.threads, [&](std::size_t n) {
    const Vector& mf = filtered.means[n];
    const Matrix& pf = filtered.covs[n];
    if (n + 1 == nt) {
      elems[n] = {Matrix::Zero(pf.rows(), pf.cols()), mf, pf};
      return;
    }
    const Matrix& a = model.transitions[n + 1];
    const Matrix ap = a * pf;
    const Matrix r = symmetrized(ap * a.transpose() + model.noises[n + 1]);
    const auto llt = robust_llt(r, "predictive covariance", static_cast<Index>(n + 1));
    SmootherElement e;
    e.E = llt.solve(ap).transpose();
    e.m = mf - e.E * (a * mf);
    e.P = symmetrized(pf - e.E * ap);
    elems[n] = std::move(e);
  });
  reverse_inclusive_scan(std::span<SmootherElement>(elems), combine_smoother_elements, options);

  StateMarginals out;
  out.means.resize(nt);
  out.covs.resize(nt);
  for (std::size_t n = 0; n < nt; ++n) {
    out.means[n] = std::move(elems[n].m);
    out.covs[n] = std::move(elems[n].P);
  }
  return out;
}

SmoothingResult filter_smooth(const StateSpaceModel& model, const PseudoObservations& obs,
                              FilterMode mode, const ScanOptions& options) {
  SmoothingResult out;
  if (mode == FilterMode::kParallel) {
    const FilterResult f = parallel_filter(model, obs, options);
    out.log_lik = f.log_lik;
    out.marginals = parallel_smoother(model, f, options);
  } else {
    const FilterResult f = sequential_filter(model, obs);
    out.log_lik = f.log_lik;
    out.marginals = rts_smoother(model, f);
  }
  return out;
}

}  // namespace stgp
