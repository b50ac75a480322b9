#include "eio/full_solver.hpp"

namespace eio {

FullSolver::FullSolver(const InfoMatrix& info)
    : info_(std::make_shared<InfoMatrix>(info)) {
  const int p = info.p, q = info.q;
  row_act_ = info.row_active;
  for (int j = 0; j < p; ++j)
    if (info.theta_active[static_cast<size_t>(j)]) ja_.push_back(j);

  c_fact_.resize(static_cast<size_t>(q));
  c_inv_theta_.assign(static_cast<size_t>(q), VectorXd());
  s_zz_ = VectorXd::Constant(q, 2.0);
  s_tz_ = info.f_tz;
  MatrixXd s_tt = info.f_tt;
  for (int m = 0; m < q; ++m) {
    if (!row_act_[static_cast<size_t>(m)]) {
      s_tz_.col(m).setZero();
      continue;
    }
    const MatrixXd& cm = info.a_diag[static_cast<size_t>(m)];
    c_fact_[static_cast<size_t>(m)] =
        std::make_unique<SpdFactor>(cm, "a_block_" + std::to_string(m + 1));
    const VectorXd cit = c_fact_[static_cast<size_t>(m)]->solve(info.theta_ref);
    c_inv_theta_[static_cast<size_t>(m)] = cit;
    s_zz_(m) = 2.0 - info.theta_ref.dot(cit);
    const MatrixXd& bm = info.f_ta[static_cast<size_t>(m)];
    s_tz_.col(m) += bm * cit;
    s_tt -= bm * c_fact_[static_cast<size_t>(m)]->solve(MatrixXd(bm.transpose()));
  }
  if (s_zz_.minCoeff() <= 0)
    throw SingularBlockError("FullSolver: nuisance z Schur block not positive");

  MatrixXd phi = s_tt;
  for (int m = 0; m < q; ++m) {
    if (!row_act_[static_cast<size_t>(m)]) continue;
    phi -= s_tz_.col(m) * s_tz_.col(m).transpose() / s_zz_(m);
  }
  phi = 0.5 * (phi + phi.transpose());

  phi_embedded_ = MatrixXd::Zero(p, p);
  const int na = static_cast<int>(ja_.size());
  phi_active_.resize(na, na);
  for (int i = 0; i < na; ++i)
    for (int k = 0; k < na; ++k) phi_active_(i, k) = phi(ja_[static_cast<size_t>(i)], ja_[static_cast<size_t>(k)]);
  for (int i = 0; i < na; ++i)
    for (int k = 0; k < na; ++k)
      phi_embedded_(ja_[static_cast<size_t>(i)], ja_[static_cast<size_t>(k)]) = phi_active_(i, k);
  if (na > 0) phi_fact_ = std::make_unique<SpdFactor>(phi_active_, "semiparametric_block");
}

VectorXd FullSolver::solve_phi(const VectorXd& v) const {
  const int p = info_->p;
  const int na = static_cast<int>(ja_.size());
  VectorXd out = VectorXd::Zero(p);
  if (na == 0) return out;
  VectorXd vr(na);
  for (int i = 0; i < na; ++i) vr(i) = v(ja_[static_cast<size_t>(i)]);
  const VectorXd xr = phi_fact_->solve(vr);
  for (int i = 0; i < na; ++i) out(ja_[static_cast<size_t>(i)]) = xr(i);
  return out;
}

FullVec FullSolver::solve(const FullVec& rhs) const {
  const int p = info_->p, q = info_->q;
  // Eliminate A rows.
  VectorXd r_z = rhs.z;
  VectorXd r_t = rhs.theta;
  for (int m = 0; m < q; ++m) {
    if (!row_act_[static_cast<size_t>(m)]) continue;
    const VectorXd ci_va = c_fact_[static_cast<size_t>(m)]->solve(VectorXd(rhs.a.row(m).transpose()));
    r_z(m) += info_->theta_ref.dot(ci_va);
    r_t -= info_->f_ta[static_cast<size_t>(m)] * ci_va;
  }
  // Eliminate z.
  VectorXd rt2 = r_t;
  for (int m = 0; m < q; ++m) {
    if (!row_act_[static_cast<size_t>(m)]) continue;
    rt2 -= s_tz_.col(m) * (r_z(m) / s_zz_(m));
  }
  FullVec x;
  x.theta = solve_phi(rt2);
  x.z = (r_z - s_tz_.transpose() * x.theta).cwiseQuotient(s_zz_);
  for (int m = 0; m < q; ++m)
    if (!row_act_[static_cast<size_t>(m)]) x.z(m) = 0.0;
  // Back-substitute A rows.
  x.a = MatrixXd::Zero(q, p);
  for (int m = 0; m < q; ++m) {
    if (!row_act_[static_cast<size_t>(m)]) continue;
    const VectorXd va = rhs.a.row(m).transpose() -
                        info_->f_ta[static_cast<size_t>(m)].transpose() * x.theta +
                        info_->theta_ref * x.z(m);
    x.a.row(m) = c_fact_[static_cast<size_t>(m)]->solve(va).transpose();
  }
  return x;
}

std::pair<VectorXd, MatrixXd> FullSolver::solve_nuisance(const VectorXd& vz,
                                                         const MatrixXd& va) const {
  const int p = info_->p, q = info_->q;
  VectorXd r_z = vz;
  for (int m = 0; m < q; ++m) {
    if (!row_act_[static_cast<size_t>(m)]) continue;
    r_z(m) += info_->theta_ref.dot(c_fact_[static_cast<size_t>(m)]->solve(VectorXd(va.row(m).transpose())));
  }
  VectorXd wz = r_z.cwiseQuotient(s_zz_);
  for (int m = 0; m < q; ++m)
    if (!row_act_[static_cast<size_t>(m)]) wz(m) = 0.0;
  MatrixXd wa = MatrixXd::Zero(q, p);
  for (int m = 0; m < q; ++m) {
    if (!row_act_[static_cast<size_t>(m)]) continue;
    const VectorXd rhs_m = va.row(m).transpose() + info_->theta_ref * wz(m);
    wa.row(m) = c_fact_[static_cast<size_t>(m)]->solve(rhs_m).transpose();
  }
  return {wz, wa};
}

}  // namespace eio
