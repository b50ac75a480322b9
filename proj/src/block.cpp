#include "eio/block.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <cmath>
#include <utility>

namespace eio {

MatrixXd symmetrized(const MatrixXd& m, double warn_tol) {
  if (m.rows() != m.cols()) throw InvalidInputError("symmetrized: matrix not square");
  const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
  const double scale = 1.0 + m.cwiseAbs().maxCoeff();
  if (asym > warn_tol * scale) {
    log_warn("symmetrized: asymmetry " + std::to_string(asym) + " exceeds tolerance");
  }
  return 0.5 * (m + m.transpose());
}

double operator_norm(const MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<MatrixXd> svd(m);
  return svd.singularValues()(0);
}

double operator_norm_sym(const MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

MatrixXd sym_sqrt(const MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(symmetrized(m));
  VectorXd ev = es.eigenvalues();
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev(i) < 0) {
      if (ev(i) < -1e-10 * std::max(1.0, ev.cwiseAbs().maxCoeff()))
        throw SingularBlockError("sym_sqrt: matrix has negative eigenvalue");
      ev(i) = 0;
    }
  }
  return es.eigenvectors() * ev.cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
}

MatrixXd sym_inv_sqrt(const MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(symmetrized(m));
  const VectorXd& ev = es.eigenvalues();
  const double floor = 1e-14 * std::max(1.0, ev.cwiseAbs().maxCoeff());
  if (ev.minCoeff() <= floor)
    throw SingularBlockError("sym_inv_sqrt: matrix not positive definite");
  return es.eigenvectors() * ev.cwiseSqrt().cwiseInverse().asDiagonal() *
         es.eigenvectors().transpose();
}

double min_eigenvalue(const MatrixXd& sym) {
  if (sym.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(sym, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

SpdFactor::SpdFactor(const MatrixXd& m, std::string label, double pivot_rel_tol) {
  if (m.rows() != m.cols()) throw InvalidInputError("SpdFactor: matrix not square");
  ldlt_.compute(0.5 * (m + m.transpose()));
  if (ldlt_.info() != Eigen::Success)
    throw SingularBlockError("SpdFactor: factorization failed for " + label);
  if (m.size() > 0) {
    const VectorXd d = ldlt_.vectorD();
    const double dmax = d.cwiseAbs().maxCoeff();
    if (d.minCoeff() <= pivot_rel_tol * std::max(dmax, 1e-300))
      throw SingularBlockError("SpdFactor: pivot below tolerance in " + label);
  }
}

VectorXd SpdFactor::solve(const VectorXd& rhs) const { return ldlt_.solve(rhs); }
MatrixXd SpdFactor::solve(const MatrixXd& rhs) const { return ldlt_.solve(rhs); }
MatrixXd SpdFactor::inverse() const {
  return ldlt_.solve(MatrixXd::Identity(ldlt_.rows(), ldlt_.rows()));
}

BlockSymMatrix2::BlockSymMatrix2(MatrixXd aa, MatrixXd ab, MatrixXd bb)
    : f_aa(symmetrized(aa)), f_ab(std::move(ab)), f_bb(symmetrized(bb)) {
  if (f_ab.rows() != f_aa.rows() || f_ab.cols() != f_bb.rows())
    throw InvalidInputError("BlockSymMatrix2: inconsistent block dimensions");
}

MatrixXd BlockSymMatrix2::dense() const {
  const Eigen::Index p = rows_a(), q = rows_b();
  MatrixXd m(p + q, p + q);
  m.topLeftCorner(p, p) = f_aa;
  m.topRightCorner(p, q) = f_ab;
  m.bottomLeftCorner(q, p) = f_ab.transpose();
  m.bottomRightCorner(q, q) = f_bb;
  return m;
}

BlockSymMatrix2 BlockSymMatrix2::from_dense(const MatrixXd& m, Eigen::Index p) {
  if (m.rows() != m.cols() || p < 0 || p > m.rows())
    throw InvalidInputError("BlockSymMatrix2::from_dense: bad split");
  const Eigen::Index q = m.rows() - p;
  return BlockSymMatrix2(m.topLeftCorner(p, p), m.topRightCorner(p, q),
                         m.bottomRightCorner(q, q));
}

BlockSymMatrix3::BlockSymMatrix3(MatrixXd xx, MatrixXd yy, MatrixXd tt, MatrixXd xy,
                                 MatrixXd xt, MatrixXd yt)
    : f_xx(symmetrized(xx)),
      f_yy(symmetrized(yy)),
      f_tt(symmetrized(tt)),
      f_xy(std::move(xy)),
      f_xt(std::move(xt)),
      f_yt(std::move(yt)) {
  if (f_xy.rows() != f_xx.rows() || f_xy.cols() != f_yy.rows() ||
      f_xt.rows() != f_xx.rows() || f_xt.cols() != f_tt.rows() ||
      f_yt.rows() != f_yy.rows() || f_yt.cols() != f_tt.rows())
    throw InvalidInputError("BlockSymMatrix3: inconsistent block dimensions");
}

MatrixXd BlockSymMatrix3::dense() const {
  const Eigen::Index nx = f_xx.rows(), ny = f_yy.rows(), nt = f_tt.rows();
  MatrixXd m(nx + ny + nt, nx + ny + nt);
  m.block(0, 0, nx, nx) = f_xx;
  m.block(0, nx, nx, ny) = f_xy;
  m.block(0, nx + ny, nx, nt) = f_xt;
  m.block(nx, 0, ny, nx) = f_xy.transpose();
  m.block(nx, nx, ny, ny) = f_yy;
  m.block(nx, nx + ny, ny, nt) = f_yt;
  m.block(nx + ny, 0, nt, nx) = f_xt.transpose();
  m.block(nx + ny, nx, nt, ny) = f_yt.transpose();
  m.block(nx + ny, nx + ny, nt, nt) = f_tt;
  return m;
}

MatrixXd schur_complement(const BlockSymMatrix2& f, SchurWhich which) {
  if (which == SchurWhich::First) {
    SpdFactor bb(f.f_bb, "f_bb");
    return symmetrized(f.f_aa - f.f_ab * bb.solve(MatrixXd(f.f_ab.transpose())), 1e-6);
  }
  SpdFactor aa(f.f_aa, "f_aa");
  return symmetrized(f.f_bb - f.f_ab.transpose() * aa.solve(f.f_ab), 1e-6);
}

BlockSymMatrix2 block_invert(const BlockSymMatrix2& f) {
  SpdFactor bb(f.f_bb, "f_bb");
  const MatrixXd phi_aa = schur_complement(f, SchurWhich::First);
  SpdFactor phi(phi_aa, "schur_aa");
  const MatrixXd inv_aa = phi.inverse();
  const MatrixXd ab_bbinv = bb.solve(MatrixXd(f.f_ab.transpose())).transpose();  // f_ab f_bb^{-1}
  const MatrixXd inv_ab = -inv_aa * ab_bbinv;
  const MatrixXd inv_bb = bb.inverse() + ab_bbinv.transpose() * inv_aa * ab_bbinv;
  return BlockSymMatrix2(inv_aa, inv_ab, inv_bb);
}

SchurResidualReport verify_schur_identities(const BlockSymMatrix2& f, double tol) {
  SpdFactor aa(f.f_aa, "f_aa");
  SpdFactor bb(f.f_bb, "f_bb");
  SpdFactor phi_aa(schur_complement(f, SchurWhich::First), "schur_aa");
  SpdFactor phi_bb(schur_complement(f, SchurWhich::Second), "schur_bb");

  const MatrixXd aa_inv = aa.inverse();
  const MatrixXd phi_aa_inv = phi_aa.inverse();
  const MatrixXd phi_bb_inv = phi_bb.inverse();

  SchurResidualReport rep;
  const MatrixXd expand =
      aa_inv + aa_inv * f.f_ab * phi_bb_inv * f.f_ab.transpose() * aa_inv;
  rep.inverse_identity_residual = (phi_aa_inv - expand).cwiseAbs().maxCoeff();
  const MatrixXd cross_lhs = phi_aa_inv * f.f_ab * bb.inverse();
  const MatrixXd cross_rhs = aa_inv * f.f_ab * phi_bb_inv;
  rep.cross_identity_residual = (cross_lhs - cross_rhs).cwiseAbs().maxCoeff();
  rep.pass = rep.inverse_identity_residual <= tol && rep.cross_identity_residual <= tol;
  return rep;
}

NormDecomposition norm_decomposition(const BlockSymMatrix2& f, const VectorXd& a,
                                     const VectorXd& b) {
  SpdFactor bb(f.f_bb, "f_bb");
  const MatrixXd phi_aa = schur_complement(f, SchurWhich::First);
  NormDecomposition d;
  VectorXd w(a.size() + b.size());
  w << a, b;
  d.quadratic_form = w.dot(f.dense() * w);
  d.head_term = a.dot(phi_aa * a);
  const VectorXd shifted = b + bb.solve(VectorXd(f.f_ab.transpose() * a));
  d.tail_term = shifted.dot(f.f_bb * shifted);
  d.residual = std::abs(d.quadratic_form - d.head_term - d.tail_term);
  return d;
}

SandwichReport sandwich_bounds(const BlockSymMatrix2& f, double tol) {
  SandwichReport rep;
  const MatrixXd aa_is = sym_inv_sqrt(f.f_aa);
  SpdFactor bb(f.f_bb, "f_bb");
  const MatrixXd inner =
      aa_is * f.f_ab * bb.solve(MatrixXd(f.f_ab.transpose())) * aa_is;
  rep.rho = std::sqrt(std::max(0.0, operator_norm_sym(inner)));
  rep.applicable = rep.rho < 1.0;

  const Eigen::Index p = f.rows_a(), q = f.rows_b();
  MatrixXd f0 = MatrixXd::Zero(p + q, p + q);
  f0.topLeftCorner(p, p) = f.f_aa;
  f0.bottomRightCorner(q, q) = f.f_bb;
  const MatrixXd dense = f.dense();
  const double scale = 1.0 + dense.cwiseAbs().maxCoeff();
  rep.min_eig_lower = min_eigenvalue(dense - (1.0 - rep.rho) * f0);
  rep.min_eig_upper = min_eigenvalue((1.0 + rep.rho) * f0 - dense);
  rep.lower_pass = rep.min_eig_lower >= -tol * scale;
  rep.upper_pass = rep.min_eig_upper >= -tol * scale;

  const MatrixXd phi_aa = schur_complement(f, SchurWhich::First);
  rep.schur_lower_pass =
      min_eigenvalue(phi_aa - (1.0 - rep.rho * rep.rho) * f.f_aa) >= -tol * scale;
  rep.schur_upper_pass = min_eigenvalue(f.f_aa - phi_aa) >= -tol * scale;
  return rep;
}

ThreeBlockCertificate three_block_lower_bound(
    const BlockSymMatrix3& f, ThreeBlockMode mode,
    const std::optional<std::array<MatrixXd, 3>>& d_ref, double tol) {
  ThreeBlockCertificate cert;
  cert.mode = mode;
  const Eigen::Index nx = f.f_xx.rows(), ny = f.f_yy.rows(), nt = f.f_tt.rows();
  const MatrixXd dense = f.dense();
  const double scale = 1.0 + dense.cwiseAbs().maxCoeff();

  if (mode == ThreeBlockMode::Correlation) {
    const MatrixXd xis = sym_inv_sqrt(f.f_xx);
    const MatrixXd yis = sym_inv_sqrt(f.f_yy);
    const MatrixXd tis = sym_inv_sqrt(f.f_tt);
    cert.rho_xy = operator_norm(xis * f.f_xy * yis);
    cert.rho_xt = operator_norm(xis * f.f_xt * tis);
    cert.rho_yt = operator_norm(yis * f.f_yt * tis);
    cert.applicable = (cert.rho_xy + cert.rho_xt <= 1.0) &&
                      (cert.rho_xy + cert.rho_yt <= 1.0) &&
                      (cert.rho_xt + cert.rho_yt <= 1.0);
    if (!cert.applicable) return cert;
    MatrixXd lower = MatrixXd::Zero(nx + ny + nt, nx + ny + nt);
    lower.block(0, 0, nx, nx) = (1.0 - cert.rho_xy - cert.rho_xt) * f.f_xx;
    lower.block(nx, nx, ny, ny) = (1.0 - cert.rho_xy - cert.rho_yt) * f.f_yy;
    lower.block(nx + ny, nx + ny, nt, nt) = (1.0 - cert.rho_xt - cert.rho_yt) * f.f_tt;
    cert.min_eig = min_eigenvalue(dense - lower);
    cert.psd_pass = cert.min_eig >= -tol * scale;
    return cert;
  }

  if (!d_ref.has_value())
    throw InvalidInputError("three_block_lower_bound: scaled mode needs reference blocks");
  const MatrixXd& dx = (*d_ref)[0];
  const MatrixXd& dy = (*d_ref)[1];
  const MatrixXd& dt = (*d_ref)[2];
  const MatrixXd dxi = sym_inv_sqrt(dx * dx);
  const MatrixXd dyi = sym_inv_sqrt(dy * dy);
  const MatrixXd dti = sym_inv_sqrt(dt * dt);
  cert.alpha_xy = operator_norm(dxi * f.f_xy * dyi);
  cert.alpha_xt = operator_norm(dxi * f.f_xt * dti);
  cert.alpha_yt = operator_norm(dyi * f.f_yt * dti);
  cert.beta_x = std::sqrt(std::max(0.0, min_eigenvalue(dxi * f.f_xx * dxi)));
  cert.beta_y = std::sqrt(std::max(0.0, min_eigenvalue(dyi * f.f_yy * dyi)));
  cert.beta_t = std::sqrt(std::max(0.0, min_eigenvalue(dti * f.f_tt * dti)));
  if (cert.beta_x <= 0 || cert.beta_y <= 0 || cert.beta_t <= 0) return cert;
  const double cx = cert.beta_x * cert.beta_x - cert.beta_x * cert.alpha_xy / cert.beta_y -
                    cert.beta_x * cert.alpha_xt / cert.beta_t;
  const double cy = cert.beta_y * cert.beta_y - cert.beta_y * cert.alpha_xy / cert.beta_x -
                    cert.beta_y * cert.alpha_yt / cert.beta_t;
  const double ct = cert.beta_t * cert.beta_t - cert.beta_t * cert.alpha_xt / cert.beta_x -
                    cert.beta_t * cert.alpha_yt / cert.beta_y;
  cert.kappa_inv2 = std::min({cx, cy, ct});
  cert.applicable = cert.kappa_inv2 > 0;
  if (!cert.applicable) return cert;
  MatrixXd dref2 = MatrixXd::Zero(nx + ny + nt, nx + ny + nt);
  dref2.block(0, 0, nx, nx) = dx * dx;
  dref2.block(nx, nx, ny, ny) = dy * dy;
  dref2.block(nx + ny, nx + ny, nt, nt) = dt * dt;
  cert.min_eig = min_eigenvalue(dense - cert.kappa_inv2 * dref2);
  cert.psd_pass = cert.min_eig >= -tol * scale;
  return cert;
}

}  // namespace eio
