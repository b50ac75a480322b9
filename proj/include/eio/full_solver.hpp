#pragma once

// Structured solver for the penalized information matrix over (theta, z, A):
// eliminates the row-block-diagonal A-block (one p x p factorization per
// active row), then the diagonal z-block, then solves the semiparametric
// theta-block. Never forms the dense (p+q+pq)^2 matrix. Coordinates excluded
// by truncation masks are pinned to zero (their right-hand side is ignored).

#include "eio/block.hpp"
#include "eio/model.hpp"

#include <memory>
#include <utility>
#include <vector>

namespace eio {

class FullSolver {
 public:
  explicit FullSolver(const InfoMatrix& info);

  // Solve F_G x = rhs over active coordinates; inactive components of x are 0.
  FullVec solve(const FullVec& rhs) const;

  // The nuisance sub-system over (z, A) only.
  std::pair<VectorXd, MatrixXd> solve_nuisance(const VectorXd& vz, const MatrixXd& va) const;

  // Semiparametric block Phi = F_tt + G^2 - F_{t,eta} F_{G,eta eta}^{-1} F_{eta,t},
  // embedded into p x p with zero rows/cols on inactive theta coordinates.
  const MatrixXd& phi_tt() const { return phi_embedded_; }
  // Solve Phi x = v restricted to active theta coordinates (v entries on
  // inactive coordinates ignored; output zero there).
  VectorXd solve_phi(const VectorXd& v) const;

  const InfoMatrix& info() const { return *info_; }

 private:
  std::shared_ptr<const InfoMatrix> info_;
  std::vector<int> ja_;               // active theta indices
  std::vector<char> row_act_;
  std::vector<std::unique_ptr<SpdFactor>> c_fact_;  // per active row
  std::vector<VectorXd> c_inv_theta_;               // C_m^{-1} theta_ref
  VectorXd s_zz_;                                   // diagonal z Schur block
  MatrixXd s_tz_;                                   // p x q theta-z Schur cross block
  MatrixXd phi_embedded_;                           // p x p
  MatrixXd phi_active_;                             // |ja| x |ja|
  std::unique_ptr<SpdFactor> phi_fact_;
};

}  // namespace eio
