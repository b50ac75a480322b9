#pragma once

// Block-symmetric matrix algebra: Schur complements, block inversion, and
// positive-definiteness certificates (sandwich bounds, two- and three-block
// lower bounds).

#include "eio/common.hpp"

#include <array>
#include <optional>

namespace eio {

// Averages (M + M^T)/2; warns when the asymmetry exceeds warn_tol relative
// to the largest entry (finite-difference Hessians are slightly asymmetric).
MatrixXd symmetrized(const MatrixXd& m, double warn_tol = 1e-8);

// Largest singular value (general) / largest |eigenvalue| (symmetric input).
double operator_norm(const MatrixXd& m);
double operator_norm_sym(const MatrixXd& m);

// Symmetric square root / inverse square root via eigendecomposition.
MatrixXd sym_sqrt(const MatrixXd& m);
MatrixXd sym_inv_sqrt(const MatrixXd& m);

double min_eigenvalue(const MatrixXd& sym);

// Symmetric positive-definite factorization with a relative pivot tolerance.
// Singularity is reported (SingularBlockError), never silently regularized.
class SpdFactor {
 public:
  explicit SpdFactor(const MatrixXd& m, std::string label = "matrix",
                     double pivot_rel_tol = 1e-12);
  VectorXd solve(const VectorXd& rhs) const;
  MatrixXd solve(const MatrixXd& rhs) const;
  MatrixXd inverse() const;
  Eigen::Index size() const { return ldlt_.rows(); }

 private:
  Eigen::LDLT<MatrixXd> ldlt_;
};

// Two-block symmetric matrix [[f_aa, f_ab], [f_ab^T, f_bb]].
struct BlockSymMatrix2 {
  MatrixXd f_aa;  // p x p, symmetric
  MatrixXd f_ab;  // p x q
  MatrixXd f_bb;  // q x q, symmetric

  BlockSymMatrix2(MatrixXd aa, MatrixXd ab, MatrixXd bb);

  Eigen::Index rows_a() const { return f_aa.rows(); }
  Eigen::Index rows_b() const { return f_bb.rows(); }
  MatrixXd dense() const;
  static BlockSymMatrix2 from_dense(const MatrixXd& m, Eigen::Index p);
};

// Three-block symmetric matrix with diagonal blocks f_xx, f_yy, f_tt.
struct BlockSymMatrix3 {
  MatrixXd f_xx, f_yy, f_tt;
  MatrixXd f_xy, f_xt, f_yt;

  BlockSymMatrix3(MatrixXd xx, MatrixXd yy, MatrixXd tt, MatrixXd xy,
                  MatrixXd xt, MatrixXd yt);
  MatrixXd dense() const;
};

enum class SchurWhich { First, Second };

// Phi_aa = f_aa - f_ab f_bb^{-1} f_ab^T (First), or the b-counterpart.
MatrixXd schur_complement(const BlockSymMatrix2& f, SchurWhich which);

// Inverse of a positive-definite two-block matrix assembled from the
// Gauss-elimination three-factor product; (.)_aa equals the inverse of the
// a-Schur complement exactly.
BlockSymMatrix2 block_invert(const BlockSymMatrix2& f);

struct SchurResidualReport {
  double inverse_identity_residual = 0;  // Phi_aa^{-1} vs expansion through Phi_bb^{-1}
  double cross_identity_residual = 0;    // Phi_aa^{-1} f_ab f_bb^{-1} vs f_aa^{-1} f_ab Phi_bb^{-1}
  bool pass = false;
};
SchurResidualReport verify_schur_identities(const BlockSymMatrix2& f, double tol);

// Completing-the-square decomposition of w^T F w for w = (a, b):
//   w^T F w = ||Phi_aa^{1/2} a||^2 + ||f_bb^{1/2} (b + f_bb^{-1} f_ab^T a)||^2.
struct NormDecomposition {
  double quadratic_form = 0;
  double head_term = 0;
  double tail_term = 0;
  double residual = 0;
};
NormDecomposition norm_decomposition(const BlockSymMatrix2& f, const VectorXd& a,
                                     const VectorXd& b);

struct SandwichReport {
  double rho = 0;           // coupling norm
  bool applicable = false;  // rho < 1
  bool lower_pass = false;  // (1-rho) F0 <= F
  bool upper_pass = false;  // F <= (1+rho) F0
  bool schur_lower_pass = false;  // (1-rho^2) f_aa <= Phi_aa
  bool schur_upper_pass = false;  // Phi_aa <= f_aa
  double min_eig_lower = 0;
  double min_eig_upper = 0;
};
SandwichReport sandwich_bounds(const BlockSymMatrix2& f, double tol = 1e-10);

enum class ThreeBlockMode { Correlation, Scaled };

struct ThreeBlockCertificate {
  ThreeBlockMode mode = ThreeBlockMode::Correlation;
  double rho_xy = 0, rho_xt = 0, rho_yt = 0;  // coupling norms (correlation mode)
  double alpha_xy = 0, alpha_xt = 0, alpha_yt = 0;  // scaled-mode couplings
  double beta_x = 0, beta_y = 0, beta_t = 0;        // scaled-mode diagonal floors
  double kappa_inv2 = 0;  // certified F >= kappa_inv2 * Dref^2 (scaled mode)
  bool applicable = false;
  bool psd_pass = false;
  double min_eig = 0;  // min eig of F minus the certified lower bound
};

// Correlation mode: couplings rho_uv = ||F_uu^{-1/2} F_uv F_vv^{-1/2}||;
// when every pairwise sum is <= 1, certifies
//   F >= blockdiag{(1-rho_xy-rho_xt)F_xx, (1-rho_xy-rho_yt)F_yy,
//                  (1-rho_xt-rho_yt)F_tt}.
// Scaled mode: relative to a reference blockdiag{D_x^2, D_y^2, D_t^2}:
// alpha_uv = ||D_u^{-1}F_uv D_v^{-1}||, beta_u^2 = lambda_min(D_u^{-1}F_uu D_u^{-1}),
// certifies F >= kappa_inv2 * blockdiag{D_x^2, D_y^2, D_t^2} with
// kappa_inv2 = min_u (beta_u^2 - beta_u alpha_uv / beta_v - beta_u alpha_uw / beta_w).
ThreeBlockCertificate three_block_lower_bound(
    const BlockSymMatrix3& f, ThreeBlockMode mode,
    const std::optional<std::array<MatrixXd, 3>>& d_ref = std::nullopt,
    double tol = 1e-10);

}  // namespace eio
