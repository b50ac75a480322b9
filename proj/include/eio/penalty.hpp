#pragma once

// Signal and operator penalties: ridge, diagonal/roughness, truncation, and
// the (J,M) joint truncation that reduces the problem to a smaller one.
// Infinite (truncation) penalties are represented as activity masks, never as
// IEEE infinities, so every linear solve stays finite-dimensional.

#include "eio/common.hpp"

#include <vector>

namespace eio {

class SignalPenalty {
 public:
  enum class Kind { None, Ridge, Diagonal, Roughness, Truncation };

  static SignalPenalty none();
  static SignalPenalty ridge(double g2);
  static SignalPenalty diagonal(VectorXd g2);
  static SignalPenalty roughness(double w2, double beta);
  static SignalPenalty truncation(int j_keep);  // keep coordinates 1..J (1-based J)

  Kind kind() const { return kind_; }
  // Finite diagonal of G^2 (zeros on truncated coordinates).
  VectorXd g2_diag(int p) const;
  std::vector<char> active(int p) const;  // per-coordinate activity mask
  bool has_truncation() const { return kind_ == Kind::Truncation; }
  int j_keep() const { return j_keep_; }

 private:
  Kind kind_ = Kind::None;
  double g2_ = 0, w2_ = 0, beta_ = 0;
  VectorXd g2_vec_;
  int j_keep_ = 0;
};

class OperatorPenalty {
 public:
  enum class Kind { None, Elementwise, RowScalar, RowTruncation };

  static OperatorPenalty none();
  static OperatorPenalty elementwise(MatrixXd k2);  // q x p, K_m^2 = diag(row m)
  static OperatorPenalty row_scalar(VectorXd k2);   // K_m^2 = k2_m I_p
  static OperatorPenalty row_truncation(int m_keep);  // keep rows 1..M (1-based M)

  Kind kind() const { return kind_; }
  // Finite diagonal of K_m^2 for row m (0-based), zeros if truncated row.
  VectorXd k2_row(int m, int p) const;
  std::vector<char> row_active(int q) const;
  bool has_truncation() const { return kind_ == Kind::RowTruncation; }
  int m_keep() const { return m_keep_; }

 private:
  Kind kind_ = Kind::None;
  MatrixXd k2_mat_;
  VectorXd k2_vec_;
  int m_keep_ = 0;
};

struct PenaltyConfig {
  SignalPenalty signal;
  OperatorPenalty op;

  static PenaltyConfig zero() { return {SignalPenalty::none(), OperatorPenalty::none()}; }
};

struct FullParameter;  // defined in model.hpp
struct Observation;

// (1/2)||G theta||^2 + (1/2)||A||_K^2 over finite-penalty coordinates.
// Throws InfeasibleParameterError if a truncated coordinate is nonzero.
double penalty_value(const PenaltyConfig& pen, const FullParameter& p);

// The (J,M) sub-problem: leading M coordinates of Z and leading M x J block
// of A_hat, plus zero-padding re-embedding maps. Indices J, M are 1-based
// counts of retained coordinates.
struct ReducedProblem {
  int j_keep = 0;
  int m_keep = 0;
  int full_p = 0;
  int full_q = 0;
  VectorXd z_obs;   // first M coordinates
  MatrixXd a_hat;   // leading M x J block
  double mu2 = 0;

  VectorXd embed_theta(const VectorXd& reduced) const;
  MatrixXd embed_a(const MatrixXd& reduced) const;
};
ReducedProblem reduce_truncation(const Observation& obs, int j_keep, int m_keep);

// J_g = max{j : N_j >= kappa^2 g^2} over a descending eigenvalue sequence
// (1-based; returns 0 if none qualify).
int ridge_cutoff_index(const VectorXd& eigs_desc, double kappa, double g2);

}  // namespace eio
