#include "eio/theory.hpp"

#include <algorithm>
#include <cmath>

namespace eio {

SpectralProfile SpectralProfile::parametric(int p, int q, double s, double beta,
                                            double c_w, double n1) {
  SpectralProfile prof;
  prof.s = s;
  prof.beta = beta;
  prof.c_w = c_w;
  prof.n1 = n1;
  prof.n_seq.resize(p);
  prof.w2_seq.resize(p);
  for (int j = 0; j < p; ++j) {
    prof.n_seq(j) = n1 * std::pow(double(j + 1), -2.0 * s);
    prof.w2_seq(j) = c_w * std::pow(double(j + 1), 2.0 * beta);
  }
  prof.tail_seq = VectorXd::Zero(q + 1);
  for (int m = 0; m <= q; ++m) prof.tail_seq(m) = (m < p) ? prof.n_seq(m) : 0.0;
  return prof;
}

SpectralProfile SpectralProfile::from_operator(const MatrixXd& a_star, VectorXd w2_seq) {
  const int q = static_cast<int>(a_star.rows());
  SpectralProfile prof;
  prof.w2_seq = std::move(w2_seq);
  const MatrixXd d2 = a_star.transpose() * a_star;
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(d2, Eigen::EigenvaluesOnly);
  prof.n_seq = es.eigenvalues().reverse();
  prof.tail_seq.resize(q + 1);
  for (int m = 0; m <= q; ++m) {
    const MatrixXd tail = a_star.bottomRows(q - m);
    prof.tail_seq(m) = (m < q) ? operator_norm_sym(tail.transpose() * tail) : 0.0;
  }
  prof.n1 = prof.n_seq.size() > 0 ? prof.n_seq(0) : 0.0;
  return prof;
}

NoiseModel NoiseModel::homogeneous(int p, int q, double sigma_omega2, double c_u) {
  return {VectorXd::Constant(q, sigma_omega2), MatrixXd::Constant(q, p, c_u)};
}

InfoMatrix assemble_info(const FullParameter& at, double mu2, const PenaltyConfig& pen,
                         bool at_population) {
  InfoMatrix info = hessian_blocks(at, mu2, pen);
  info.at_population = at_population;
  return info;
}

MatrixXd semiparametric_block(const InfoMatrix& info) { return FullSolver(info).phi_tt(); }

VectorXd fisher_leading_term(const InfoMatrix& info, const ScoreVector& score) {
  return full_score_solve(info, score).theta;
}

FullVec full_score_solve(const InfoMatrix& info, const ScoreVector& score) {
  FullVec rhs;
  rhs.theta = VectorXd::Zero(info.p);
  rhs.z = score.z_part;
  rhs.a = score.a_part;
  return FullSolver(info).solve(rhs);
}

VectorXd efficient_score(const InfoMatrix& info, const ScoreVector& score) {
  FullSolver solver(info);
  FullVec rhs;
  rhs.theta = VectorXd::Zero(info.p);
  rhs.z = score.z_part;
  rhs.a = score.a_part;
  const VectorXd lead = solver.solve(rhs).theta;
  return sym_sqrt(solver.phi_tt()) * lead;
}

FullVec penalty_bias_solution(const TruthSpec& truth, double mu2,
                              const PenaltyConfig& pen) {
  const int p = truth.p(), q = truth.q();
  const FullParameter star = truth.full();
  InfoMatrix info = hessian_blocks(star, mu2, pen);
  const auto sig_act = pen.signal.active(p);
  const auto row_act = pen.op.row_active(q);

  FullVec rhs;
  rhs.theta = pen.signal.g2_diag(p).cwiseProduct(truth.theta_star);
  rhs.z = VectorXd::Zero(q);
  rhs.a = MatrixXd::Zero(q, p);
  for (int m = 0; m < q; ++m)
    if (row_act[static_cast<size_t>(m)])
      rhs.a.row(m) =
          pen.op.k2_row(m, p).cwiseProduct(truth.a_star.row(m).transpose()).transpose();

  // Pinned coordinates (exact infinite-penalty limit): truncated thetas take
  // theta*_j, truncated operator rows take A*_m; move their couplings to the rhs.
  for (int j = 0; j < p; ++j) {
    if (sig_act[static_cast<size_t>(j)]) continue;
    const double tj = truth.theta_star(j);
    if (tj == 0.0) continue;
    rhs.theta -= info.f_tt.col(j) * tj;
    rhs.z -= info.f_tz.row(j).transpose() * tj;
    for (int m = 0; m < q; ++m)
      if (row_act[static_cast<size_t>(m)])
        rhs.a.row(m) -= info.f_ta[static_cast<size_t>(m)].row(j) * tj;
  }
  // Truncated operator rows: the row and its image coordinate are pinned at
  // their limit values A*_m and (A* theta*)_m; the two couplings into the
  // active theta equations cancel exactly, so no rhs correction is needed.
  FullVec x = FullSolver(info).solve(rhs);
  for (int j = 0; j < p; ++j)
    if (!sig_act[static_cast<size_t>(j)]) x.theta(j) = truth.theta_star(j);
  const VectorXd image = truth.image_star();
  for (int m = 0; m < q; ++m)
    if (!row_act[static_cast<size_t>(m)]) {
      x.a.row(m) = truth.a_star.row(m);
      x.z(m) = image(m);
    }
  return x;
}

BiasResult bias_closed_form(const TruthSpec& truth, double mu2, const PenaltyConfig& pen) {
  const int p = truth.p(), q = truth.q();
  const VectorXd& theta = truth.theta_star;
  const double theta_sq = theta.squaredNorm();
  const auto row_act = pen.op.row_active(q);
  const auto sig_act = pen.signal.active(p);

  BiasResult res;
  res.margin = mu2;  // margin when no operator penalty
  res.s_k = MatrixXd::Zero(p, p);
  for (int m = 0; m < q; ++m) {
    const VectorXd am = truth.a_star.row(m).transpose();
    if (!row_act[static_cast<size_t>(m)]) {
      // Truncated row: its image coordinate is dropped with it, the pinned
      // couplings cancel, and the full a a^T term stays in the theta block.
      continue;
    }
    const VectorXd k2 = pen.op.k2_row(m, p);
    const double row_margin = mu2 + k2.minCoeff() - 0.5 * theta_sq;
    res.margin = std::min(res.margin, row_margin);
    if (row_margin <= 0)
      throw InvalidInputError("bias_closed_form: identifiability margin mu^2 + k^2 - "
                              "||theta*||^2/2 is not positive");
    if (k2.isZero(0)) continue;
    // Q_m = diag(mu^2 + k^2) + theta theta^T / 2 (see the nuisance Schur block).
    const VectorXd d = VectorXd::Constant(p, mu2) + k2;
    const VectorXd td = theta.cwiseQuotient(d);
    const double denom = 1.0 + 0.5 * theta.dot(td);
    MatrixXd q_inv = MatrixXd(d.cwiseInverse().asDiagonal());
    q_inv -= (0.5 / denom) * td * td.transpose();
    res.s_k += 0.5 * am * am.transpose() * MatrixXd(k2.asDiagonal()) * q_inv;
  }

  // Semiparametric block at upsilon*, with the full theta set (signal
  // truncation handled below by its exact limit).
  PenaltyConfig pen_full_theta{SignalPenalty::none(), pen.op};
  InfoMatrix info = hessian_blocks(truth.full(), mu2, pen_full_theta);
  MatrixXd phi = FullSolver(info).phi_tt();
  phi += MatrixXd(pen.signal.g2_diag(p).asDiagonal());

  const VectorXd v = pen.signal.g2_diag(p).cwiseProduct(theta) - res.s_k * theta;
  res.bias_theta = VectorXd::Zero(p);
  std::vector<int> ja;
  for (int j = 0; j < p; ++j)
    if (sig_act[static_cast<size_t>(j)]) ja.push_back(j);
  if (ja.size() == static_cast<size_t>(p)) {
    res.bias_theta = SpdFactor(phi, "semiparametric_block").solve(v);
  } else {
    // Signal-truncation limit: bias_j = theta*_j beyond J; active block solves
    // with the cross-coupling to the pinned coordinates moved to the rhs.
    const int na = static_cast<int>(ja.size());
    MatrixXd phi_act(na, na);
    VectorXd v_act(na);
    for (int i = 0; i < na; ++i) {
      v_act(i) = v(ja[static_cast<size_t>(i)]);
      for (int j = 0; j < p; ++j)
        if (!sig_act[static_cast<size_t>(j)])
          v_act(i) -= phi(ja[static_cast<size_t>(i)], j) * theta(j);
      for (int k = 0; k < na; ++k)
        phi_act(i, k) = phi(ja[static_cast<size_t>(i)], ja[static_cast<size_t>(k)]);
    }
    VectorXd sol = na > 0 ? VectorXd(SpdFactor(phi_act, "semiparametric_block").solve(v_act))
                          : VectorXd();
    for (int i = 0; i < na; ++i) res.bias_theta(ja[static_cast<size_t>(i)]) = sol(i);
    for (int j = 0; j < p; ++j)
      if (!sig_act[static_cast<size_t>(j)]) res.bias_theta(j) = theta(j);
  }
  return res;
}

TruncationBiasBound truncation_bias_bound(const SpectralProfile& profile,
                                          const VectorXd& theta_star, int j_keep,
                                          int m_keep, double kappa) {
  TruncationBiasBound out;
  if (j_keep < 1 || j_keep > profile.n_seq.size() || m_keep < 0 ||
      m_keep >= profile.tail_seq.size())
    throw InvalidInputError("truncation_bias_bound: indices out of range");
  out.n_j = profile.n_seq(j_keep - 1);
  out.n_tail = profile.tail_seq(m_keep);
  out.applicable = out.n_tail <= 0.5 * out.n_j && out.n_j > 0;
  const double head = theta_star.size() > j_keep
                          ? theta_star.tail(theta_star.size() - j_keep).norm()
                          : 0.0;
  out.value = head + kappa * kappa * out.n_tail / (2.0 * out.n_j) * theta_star.norm();
  return out;
}

EffectiveDimension effective_dimension(const NoiseModel& noise, double mu2,
                                       const PenaltyConfig& pen, double kappa) {
  const int q = static_cast<int>(noise.var_omega.size());
  const int p = static_cast<int>(noise.var_u.cols());
  const double k4 = std::pow(kappa, 4.0);
  EffectiveDimension dim;
  const auto row_act = pen.op.row_active(q);
  for (int m = 0; m < q; ++m) {
    if (!row_act[static_cast<size_t>(m)]) continue;
    dim.p_z += k4 * noise.var_omega(m);
    const VectorXd k2 = pen.op.k2_row(m, p);
    for (int j = 0; j < p; ++j) {
      const double damp = 1.0 + kappa * kappa * k2(j) / mu2;
      dim.p_a += k4 * noise.var_u(m, j) / (damp * damp);
    }
  }
  dim.total = dim.p_z + dim.p_a;
  return dim;
}

double deviation_radius(const MatrixXd& b, double x) {
  return deviation_radius(b.trace(), operator_norm_sym(b), x);
}

double deviation_radius(double trace_b, double norm_b, double x) {
  if (x <= 0) throw InvalidInputError("deviation_radius: x must be positive");
  return std::sqrt(std::max(0.0, trace_b)) + std::sqrt(2.0 * x * std::max(0.0, norm_b));
}

VarianceBound variance_bound(double c_omega, double c_nu, double delta0, double kappa,
                             const MatrixXd& d2, const PenaltyConfig& pen,
                             const std::optional<MatrixXd>& q_map) {
  const int p = static_cast<int>(d2.rows());
  const double factor = 2.0 * kappa * kappa * (c_omega + 4.0 * c_nu * delta0 * delta0);
  MatrixXd core = d2 / (kappa * kappa);
  core += MatrixXd(pen.signal.g2_diag(p).asDiagonal());
  const auto sig_act = pen.signal.active(p);
  std::vector<int> ja;
  for (int j = 0; j < p; ++j)
    if (sig_act[static_cast<size_t>(j)]) ja.push_back(j);
  VarianceBound out;
  out.matrix = MatrixXd::Zero(p, p);
  if (!ja.empty()) {
    const int na = static_cast<int>(ja.size());
    MatrixXd core_act(na, na);
    for (int i = 0; i < na; ++i)
      for (int k = 0; k < na; ++k)
        core_act(i, k) = core(ja[static_cast<size_t>(i)], ja[static_cast<size_t>(k)]);
    const MatrixXd inv_act = SpdFactor(core_act, "variance_bound_core").inverse();
    for (int i = 0; i < na; ++i)
      for (int k = 0; k < na; ++k)
        out.matrix(ja[static_cast<size_t>(i)], ja[static_cast<size_t>(k)]) =
            factor * inv_act(i, k);
  }
  const MatrixXd qm = q_map.value_or(MatrixXd::Identity(p, p));
  out.trace = (qm * (out.matrix / factor) * qm.transpose()).trace() * factor;
  return out;
}

ExpansionReport expansion_bounds(const InfoMatrix& info, const LocalRegion& region,
                                 const ScoreVector* score, BoundKind kind,
                                 const ExpansionOptions& opts) {
  ExpansionReport rep;
  rep.kind = kind;
  rep.tau3 = smoothness_constants(region, region.mu).tau3;
  const double kappa2 = region.kappa * region.kappa;

  if (score != nullptr) {
    FullSolver solver(info);
    FullVec rhs;
    rhs.theta = VectorXd::Zero(info.p);
    rhs.z = score->z_part;
    rhs.a = score->a_part;
    rep.leading_norm = region.script_d_norm(solver.solve(rhs));
    const auto [wz, wa] = solver.solve_nuisance(score->z_part, score->a_part);
    rep.nuisance_norm =
        std::sqrt(wz.squaredNorm() + region.mu * region.mu * wa.squaredNorm());
  }
  const double r_d = opts.r_d.value_or(rep.leading_norm);
  rep.r_or_b = std::max(r_d, opts.b_d);
  rep.applicable = region.radius >= 1.5 * rep.r_or_b &&
                   kappa2 * rep.tau3 * rep.r_or_b < 4.0 / 9.0;

  const MatrixXd qd_inv = opts.q_map.value_or(MatrixXd::Identity(info.p, info.p)) *
                          region.d_inv_sqrt();
  const double qdn = operator_norm(qd_inv);
  const double c = qdn * 0.75 * kappa2 * rep.tau3;

  switch (kind) {
    case BoundKind::Fisher:
      rep.bound = c * rep.leading_norm * rep.leading_norm;
      break;
    case BoundKind::Wilks:
      rep.bound = 0.5 * rep.tau3 *
                  (std::pow(rep.leading_norm, 3.0) + std::pow(rep.nuisance_norm, 3.0));
      break;
    case BoundKind::Bias:
      rep.bound = c * opts.b_d * opts.b_d;
      break;
    case BoundKind::Pac:
      rep.bound = c * (rep.leading_norm * rep.leading_norm + opts.b_d * opts.b_d);
      break;
    case BoundKind::L2Risk:
      rep.bound = std::sqrt(std::max(0.0, opts.cal_r_q)) +
                  c * (opts.p_bar_d + opts.b_d * opts.b_d);
      break;
    case BoundKind::SquaredRisk: {
      if (opts.cal_r_q <= 0) {
        rep.applicable = false;
        break;
      }
      rep.alpha_q = qdn * 0.75 * kappa2 * rep.tau3 *
                    (opts.c4 * opts.p_bar_d + opts.b_d * opts.b_d) /
                    std::sqrt(opts.cal_r_q);
      rep.interval_lo = std::pow(std::max(0.0, 1.0 - rep.alpha_q), 2.0) * opts.cal_r_q;
      rep.interval_hi = std::pow(1.0 + rep.alpha_q, 2.0) * opts.cal_r_q;
      rep.applicable = rep.applicable && rep.alpha_q < 1.0;
      break;
    }
  }
  return rep;
}

RiskBreakdown ridge_risk_bound(const SpectralProfile& profile, const VectorXd& theta_star,
                               double g2, double kappa) {
  RiskBreakdown rb;
  rb.kappa = kappa;
  const int p = static_cast<int>(profile.n_seq.size());
  const int j_g = ridge_cutoff_index(profile.n_seq, kappa, g2);
  rb.cutoff = j_g;
  const double k4 = std::pow(kappa, 4.0);
  for (int j = 0; j < j_g; ++j) rb.variance_term += k4 / profile.n_seq(j);
  if (g2 > 0)
    for (int j = j_g; j < p; ++j) rb.variance_term += profile.n_seq(j) / (g2 * g2);

  // Monotonicity premise: w_j increasing and w_j N_j decreasing.
  for (int j = 1; j < p && rb.premise_ok; ++j) {
    const double w_prev = std::sqrt(profile.w2_seq(j - 1));
    const double w_cur = std::sqrt(profile.w2_seq(j));
    if (w_cur < w_prev || w_cur * profile.n_seq(j) > w_prev * profile.n_seq(j - 1))
      rb.premise_ok = false;
  }
  if (!rb.premise_ok) rb.note = "phase-transition regime: use cutoff";

  if (g2 > 0) {
    for (int j = 0; j < p; ++j) {
      const double term =
          1.0 / (profile.w2_seq(j) * (profile.n_seq(j) / (kappa * kappa * g2) + 1.0));
      rb.bias_term = std::max(rb.bias_term, term);
    }
    for (int j = 0; j < static_cast<int>(theta_star.size()) && j < p; ++j) {
      const double shrink = 1.0 + profile.n_seq(j) / (kappa * kappa * g2);
      rb.bias_exact += theta_star(j) * theta_star(j) / (shrink * shrink);
    }
  }
  rb.total = rb.variance_term + rb.bias_term;
  return rb;
}

RiskBreakdown cutoff_risk_bound(const SpectralProfile& profile, const VectorXd& theta_star,
                                int j_keep, double kappa) {
  if (j_keep < 0 || j_keep > profile.n_seq.size())
    throw InvalidInputError("cutoff_risk_bound: J out of range");
  RiskBreakdown rb;
  rb.kappa = kappa;
  rb.cutoff = j_keep;
  const double k4 = std::pow(kappa, 4.0);
  for (int j = 0; j < j_keep; ++j) rb.variance_term += k4 / profile.n_seq(j);
  for (int j = j_keep; j < theta_star.size(); ++j)
    rb.bias_term += theta_star(j) * theta_star(j);
  rb.bias_exact = rb.bias_term;
  rb.total = rb.variance_term + rb.bias_term;
  return rb;
}

AppspaceReport appspace_quantities(const MatrixXd& a_star, int j_keep, int m_keep) {
  const int p = static_cast<int>(a_star.cols());
  const int q = static_cast<int>(a_star.rows());
  if (j_keep < 1 || j_keep > p || m_keep < 0 || m_keep > q)
    throw InvalidInputError("appspace_quantities: indices out of range");
  AppspaceReport rep;
  const MatrixXd d2 = a_star.transpose() * a_star;
  rep.n_seq.resize(p);
  for (int j = 1; j <= p; ++j)
    rep.n_seq(j - 1) = min_eigenvalue(d2.topLeftCorner(j, j));
  const MatrixXd tail = a_star.bottomRows(q - m_keep);
  rep.n_tail = (m_keep < q) ? operator_norm_sym(tail.transpose() * tail) : 0.0;
  const double n_j = rep.n_seq(j_keep - 1);
  rep.applicable = rep.n_tail <= 0.5 * n_j && n_j > 0;
  if (rep.applicable)
    for (int j = 0; j < j_keep; ++j)
      rep.trace_bound += 1.0 / (rep.n_seq(j) - rep.n_tail);
  return rep;
}

RatePrediction rate_prediction(double s, double beta, double c_w, double n1, double rho,
                               const SpectralProfile* profile) {
  if (s <= 0.5 || beta <= 0 || n1 <= 0 || c_w <= 0 || rho <= 0 || rho > 0.5)
    throw InvalidInputError("rate_prediction: need s > 1/2, beta > 0, n1 > 0, 0 < rho <= 1/2");
  RatePrediction rp;
  rp.rho = rho;
  const double denom = 1.0 + 2.0 * beta + 2.0 * s;
  rp.j_opt = std::max(1, static_cast<int>(std::lround(std::pow(n1 / c_w, 1.0 / denom))));
  rp.risk_exponent = -2.0 * beta / denom;
  rp.risk_order = std::pow(c_w, -(2.0 * s + 1.0) / denom) * std::pow(n1, rp.risk_exponent);
  if (profile != nullptr) {
    const double n_j = profile->n_seq(std::min<Eigen::Index>(rp.j_opt, profile->n_seq.size()) - 1);
    rp.m_opt = static_cast<int>(profile->tail_seq.size()) - 1;
    for (int m = 0; m < profile->tail_seq.size(); ++m)
      if (profile->tail_seq(m) <= rho * n_j) {
        rp.m_opt = m;
        break;
      }
  } else {
    // Parametric tails n_{m+1} = n1 (m+1)^{-2s}: smallest m with
    // (m+1)^{-2s} <= rho j_opt^{-2s}.
    const double target = double(rp.j_opt) * std::pow(rho, -1.0 / (2.0 * s));
    rp.m_opt = static_cast<int>(std::ceil(target - 1.0 + 1e-12));
  }
  rp.m_opt = std::max(rp.m_opt, rp.j_opt);
  return rp;
}

CriticalDimension critical_dimension_check(int p, int m_keep, double mu2, double n_eff,
                                           double threshold) {
  CriticalDimension cd;
  cd.threshold = threshold;
  cd.ratio = double(p) * double(m_keep) / (mu2 * n_eff);
  cd.consistent_regime = cd.ratio < threshold;
  return cd;
}

ScoreMoments score_moments(const InfoMatrix& info, const LocalRegion& region,
                           const NoiseModel& noise) {
  const int p = info.p, q = info.q;
  FullSolver solver(info);
  ScoreMoments mom;
  mom.var_lead = MatrixXd::Zero(p, p);
  FullVec rhs;
  rhs.theta = VectorXd::Zero(p);
  rhs.z = VectorXd::Zero(q);
  rhs.a = MatrixXd::Zero(q, p);
  const MatrixXd d_half = region.d_sqrt();
  const double mu = region.mu;
  const int dim = p + q + q * p;
  MatrixXd var_full = MatrixXd::Zero(dim, dim);
  VectorXd stacked(dim);
  auto accumulate = [&](double var) {
    const FullVec sol = solver.solve(rhs);
    const double dn = region.script_d_norm(sol);
    mom.p_bar_d += var * dn * dn;
    mom.var_lead += var * sol.theta * sol.theta.transpose();
    stacked.head(p) = d_half * sol.theta;
    stacked.segment(p, q) = sol.z;
    stacked.tail(q * p) = mu * sol.a.reshaped();
    var_full.selfadjointView<Eigen::Lower>().rankUpdate(stacked, var);
  };
  for (int m = 0; m < q; ++m) {
    if (!info.row_active[static_cast<size_t>(m)]) continue;
    rhs.z(m) = 1.0;
    accumulate(noise.var_omega(m));
    rhs.z(m) = 0.0;
  }
  const double mu2 = region.mu * region.mu;
  for (int m = 0; m < q; ++m) {
    if (!info.row_active[static_cast<size_t>(m)]) continue;
    for (int j = 0; j < p; ++j) {
      rhs.a(m, j) = 1.0;
      accumulate(mu2 * noise.var_u(m, j));  // a_part = mu * U
      rhs.a(m, j) = 0.0;
    }
  }
  var_full = var_full.selfadjointView<Eigen::Lower>();
  mom.norm_var_d = operator_norm_sym(var_full);
  mom.trace_var_lead = mom.var_lead.trace();
  mom.trace_var_efficient = (solver.phi_tt() * mom.var_lead).trace();
  return mom;
}

}  // namespace eio
