#pragma once

// The extended error-in-operator model: penalized objective over
// (theta, z, A), gradient, Hessian blocks, higher directional derivatives,
// score vector, local region, and smoothness constants.

#include "eio/common.hpp"
#include "eio/penalty.hpp"

#include <vector>

namespace eio {

// The triple the objective is maximized over.
struct FullParameter {
  VectorXd theta;  // R^p
  VectorXd z;      // R^q
  MatrixXd a;      // R^{q x p}

  int p() const { return static_cast<int>(theta.size()); }
  int q() const { return static_cast<int>(z.size()); }
  static FullParameter zeros(int p, int q);
  VectorXd stacked() const;  // (theta, z, rows of A) in R^{p+q+pq}
  static FullParameter from_stacked(const VectorXd& v, int p, int q);
};

// A direction u = (alpha, h, Delta) in the full parameter space.
using FullVec = FullParameter;

// The data pair (Z, A_hat) plus operator-noise precision mu^2.
struct Observation {
  VectorXd z_obs;  // R^q
  MatrixXd a_hat;  // R^{q x p}
  double mu2 = 0;

  int p() const { return static_cast<int>(a_hat.cols()); }
  int q() const { return static_cast<int>(z_obs.size()); }
  double mu() const;
  void validate() const;
};

struct TruthSpec {
  VectorXd theta_star;
  MatrixXd a_star;

  int p() const { return static_cast<int>(theta_star.size()); }
  int q() const { return static_cast<int>(a_star.rows()); }
  VectorXd image_star() const { return a_star * theta_star; }
  FullParameter full() const { return {theta_star, image_star(), a_star}; }
  // The noiseless observation (Z = A* theta*, A_hat = A*).
  Observation noiseless(double mu2) const { return {image_star(), a_star, mu2}; }
};

// The locality structure: D^2 >= A*^T A*, effective sample size N = lambda_min(D^2),
// radius R = delta0 * mu * sqrt(N), concavity constant kappa (default 2).
struct LocalRegion {
  MatrixXd d2;
  double n_eff = 0;
  double delta0 = 0.1;
  double radius = 0;
  double kappa = 2.0;
  double mu = 0;

  // D^2 = A*^T A* + g0^2 I (g0 = 0 default).
  static LocalRegion from_truth(const TruthSpec& truth, double mu, double delta0 = 0.1,
                                double g0 = 0.0, double kappa = 2.0);
  MatrixXd d_sqrt() const;      // D (symmetric square root of D^2)
  MatrixXd d_inv_sqrt() const;  // D^{-1}
  // || scriptD u || with scriptD^2 = blockdiag{D^2, I_q, mu^2 I_{pq}}.
  double script_d_norm(const FullVec& u) const;
};

// Score: gradient of the stochastic part, constant in the parameter.
struct ScoreVector {
  VectorXd z_part;  // omega = Z - E Z
  MatrixXd a_part;  // mu * U with U = mu * (A_hat - E A_hat)
  VectorXd theta_part(int p) const { return VectorXd::Zero(p); }
  MatrixXd u_mat(double mu) const { return a_part / mu; }  // U itself
};

// Labeled blocks of the (penalized) information matrix F_G = F + G^2-blocks,
// evaluated at a given parameter point. The A-block is block-diagonal over
// rows m. Truncation penalties enter as activity masks; dense() materializes
// only the finite part.
struct InfoMatrix {
  int p = 0, q = 0;
  double mu2 = 0;
  VectorXd theta_ref;             // theta at the evaluation point
  MatrixXd f_tt;                  // p x p: A^T A (+ finite G^2)
  MatrixXd f_tz;                  // p x q: -A^T
  std::vector<MatrixXd> f_ta;     // q blocks p x p: (A_m^T theta - z_m) I + A_m theta^T
  std::vector<MatrixXd> a_diag;   // q blocks p x p: theta theta^T + mu^2 I (+ K_m^2)
  std::vector<char> theta_active;
  std::vector<char> row_active;
  bool penalized = false;
  bool at_population = false;  // provenance: evaluated at upsilon*_G vs upsilon*

  int full_dim() const { return p + q + p * q; }
  // Row m of F_{z A_m} is -theta_ref^T; f_zz = 2 I_q.
  MatrixXd dense() const;  // finite parts over all coordinates, masks ignored
  bool any_mask() const;
};

double objective(const Observation& obs, const FullParameter& p, const PenaltyConfig& pen);

FullVec gradient(const Observation& obs, const FullParameter& p, const PenaltyConfig& pen);

InfoMatrix hessian_blocks(const FullParameter& p, double mu2, const PenaltyConfig& pen);

// u^T F(upsilon) u of the unpenalized Hessian:
// ||h||^2 + mu^2 ||Delta||_Fr^2 + ||h - (A alpha + Delta theta)||^2
//   + 2 (z - A theta)^T Delta alpha.
double hessian_quadratic_form(const FullParameter& p, double mu2, const FullVec& u);

// -d^3/dt^3 of the unpenalized objective along u: 3 (Delta theta + A alpha - h)^T Delta alpha.
double third_directional(const FullParameter& p, const FullVec& u);

// -d^4/dt^4 along u: 12 ||Delta alpha||^2 (constant in the parameter).
double fourth_directional(const FullVec& u);

ScoreVector score(const Observation& obs, const TruthSpec& truth);

struct RegionDiagnostic {
  double d_theta_norm = 0;   // ||D theta|| vs radius
  double z_norm = 0;         // ||z|| vs radius
  double op_frobenius = 0;   // ||(A - A*) D^{-1}||_Fr vs delta0
  bool pass = false;
};
RegionDiagnostic region_membership(const FullParameter& p, const LocalRegion& region,
                                   const TruthSpec& truth);

struct SmoothnessConstants {
  double tau3 = 0;  // 4.5 N^{-1/2} mu^{-1}
  double tau4 = 0;  // 3 N^{-1} mu^{-2}
};
SmoothnessConstants smoothness_constants(const LocalRegion& region, double mu);

}  // namespace eio
