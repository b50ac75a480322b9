#pragma once

// Closed-form theoretical quantities: penalized information matrix,
// semiparametric block, Fisher/Wilks leading terms and remainder bounds,
// penalization bias, effective dimension, variance bounds, ridge/cutoff risk
// bounds, approximation-space quantities, and rate predictions.

#include "eio/full_solver.hpp"
#include "eio/model.hpp"
#include "eio/penalty.hpp"

#include <optional>
#include <string>

namespace eio {

// Sequences describing operator regularity and signal smoothness:
// n_seq(j-1) = N_j (descending), tail_seq(m) = ||A*^T (I - P_m) A*|| for
// m = 0..q (so tail_seq(M) is the (M+1)-st tail value), w2_seq(j-1) = w_j^2.
struct SpectralProfile {
  VectorXd n_seq;
  VectorXd tail_seq;
  VectorXd w2_seq;
  double s = 0, beta = 0, c_w = 0, n1 = 0;

  // Parametric profile: N_j = n1 j^{-2s}, w_j^2 = c_w j^{2beta}, diagonal
  // operator convention for the tails (n_{m+1} = N_{m+1} for m < p, else 0).
  static SpectralProfile parametric(int p, int q, double s, double beta, double c_w,
                                    double n1);
  static SpectralProfile from_operator(const MatrixXd& a_star, VectorXd w2_seq);
};

// Entrywise noise variances: Var(omega_m) and Var(U_mj) for the operator
// noise U = mu (A_hat - A*).
struct NoiseModel {
  VectorXd var_omega;  // length q
  MatrixXd var_u;      // q x p
  static NoiseModel homogeneous(int p, int q, double sigma_omega2, double c_u);
  double c_omega() const { return var_omega.maxCoeff(); }
  double c_u() const { return var_u.maxCoeff(); }
};

// Penalized information matrix at an evaluation point (default: the
// population fit upsilon*_G; option: the truth upsilon*).
InfoMatrix assemble_info(const FullParameter& at, double mu2, const PenaltyConfig& pen,
                         bool at_population = true);

// Phi_{G,theta theta} = F_tt + G^2 - F_{t,eta} F_{G,eta eta}^{-1} F_{eta,t},
// embedded with zero rows/cols on truncated signal coordinates.
MatrixXd semiparametric_block(const InfoMatrix& info);

// theta-component of F_G^{-1} grad zeta.
VectorXd fisher_leading_term(const InfoMatrix& info, const ScoreVector& score);

// Full solve F_G^{-1} grad zeta (masked coordinates pinned to zero).
FullVec full_score_solve(const InfoMatrix& info, const ScoreVector& score);

// breve-xi_G = Phi^{1/2} (F_G^{-1} grad zeta)_theta.
VectorXd efficient_score(const InfoMatrix& info, const ScoreVector& score);

// Penalization-bias solution F_G^{-1} G^2 upsilon* evaluated at upsilon*.
// Truncation masks are handled by their exact limits: pinned coordinates take
// their upsilon* values and the active block absorbs the cross-coupling.
FullVec penalty_bias_solution(const TruthSpec& truth, double mu2, const PenaltyConfig& pen);

struct BiasResult {
  VectorXd bias_theta;  // (F_G^{-1} G^2 upsilon*)_theta
  MatrixXd s_k;         // operator-penalty bias matrix
  double margin = 0;    // min over rows of mu^2 + k_m^2 - ||theta*||^2 / 2
};
BiasResult bias_closed_form(const TruthSpec& truth, double mu2, const PenaltyConfig& pen);

struct TruncationBiasBound {
  double value = 0;
  double n_tail = 0;  // n_{M+1}
  double n_j = 0;     // N_J
  bool applicable = false;  // n_{M+1} <= N_J / 2
};
TruncationBiasBound truncation_bias_bound(const SpectralProfile& profile,
                                          const VectorXd& theta_star, int j_keep,
                                          int m_keep, double kappa);

struct EffectiveDimension {
  double p_z = 0;
  double p_a = 0;
  double total = 0;
};
EffectiveDimension effective_dimension(const NoiseModel& noise, double mu2,
                                       const PenaltyConfig& pen, double kappa);

// Surrogate Gaussian deviation radius sqrt(tr B) + sqrt(2 x ||B||).
double deviation_radius(const MatrixXd& b, double x);
double deviation_radius(double trace_b, double norm_b, double x);

struct VarianceBound {
  MatrixXd matrix;  // 2 kappa^2 (C_omega + 4 C_nu delta0^2) (kappa^{-2} D^2 + G^2)^{-1}
  double trace = 0; // same constant times tr{Q (kappa^{-2} D^2 + G^2)^{-1} Q^T}
};
VarianceBound variance_bound(double c_omega, double c_nu, double delta0, double kappa,
                             const MatrixXd& d2, const PenaltyConfig& pen,
                             const std::optional<MatrixXd>& q_map = std::nullopt);

enum class BoundKind { Fisher, Wilks, Bias, Pac, L2Risk, SquaredRisk };

struct ExpansionOptions {
  std::optional<MatrixXd> q_map;  // default identity
  double x = 3.0;
  double c4 = 3.0;       // fourth-moment constant for the squared-risk interval
  double b_d = 0.0;      // bias norm ||scriptD F_G^{-1} G^2 upsilon*||
  double cal_r_q = 0.0;  // R_Q for the risk bounds
  double p_bar_d = 0.0;  // effective dimension tr Var(scriptD F_G^{-1} grad zeta)
  std::optional<double> r_d;  // deviation radius; default: observed score norm
};

struct ExpansionReport {
  BoundKind kind = BoundKind::Fisher;
  bool applicable = false;
  double bound = 0;
  double leading_norm = 0;   // ||scriptD F_G^{-1} grad zeta|| (when score given)
  double nuisance_norm = 0;  // ||scriptD_eta F_{G,eta eta}^{-1} grad_eta zeta||
  double tau3 = 0;
  double r_or_b = 0;  // r_D v b_D entering the applicability conditions
  double alpha_q = 0;
  double interval_lo = 0, interval_hi = 0;  // squared-risk interval
  double observed = 0;  // filled by the caller when truth is known
  bool pass = false;
};
ExpansionReport expansion_bounds(const InfoMatrix& info, const LocalRegion& region,
                                 const ScoreVector* score, BoundKind kind,
                                 const ExpansionOptions& opts);

struct RiskBreakdown {
  double variance_term = 0;
  double bias_term = 0;
  double total = 0;
  double kappa = 2;
  int cutoff = 0;  // J used
  bool premise_ok = true;
  std::string note;
  double bias_exact = 0;  // exact ||B theta*||^2 / tail norm where available
};
RiskBreakdown ridge_risk_bound(const SpectralProfile& profile, const VectorXd& theta_star,
                               double g2, double kappa);
RiskBreakdown cutoff_risk_bound(const SpectralProfile& profile, const VectorXd& theta_star,
                                int j_keep, double kappa);

struct AppspaceReport {
  VectorXd n_seq;     // N_j = lambda_j(Pi_j D^2 Pi_j), j = 1..p
  double n_tail = 0;  // n_{M+1}
  double trace_bound = 0;  // sum_{j<=J} 1/(N_j - n_{M+1})
  bool applicable = false;
};
AppspaceReport appspace_quantities(const MatrixXd& a_star, int j_keep, int m_keep);

struct RatePrediction {
  int j_opt = 1;
  int m_opt = 0;
  double rho = 0.5;
  double risk_exponent = 0;  // -2 beta / (1 + 2 beta + 2 s)
  double risk_order = 0;     // c_w^{-(2s+1)/(1+2b+2s)} n1^{exponent}
};
RatePrediction rate_prediction(double s, double beta, double c_w, double n1,
                               double rho = 0.5,
                               const SpectralProfile* profile = nullptr);

struct CriticalDimension {
  double ratio = 0;  // p M / (mu^2 N)
  bool consistent_regime = false;
  double threshold = 0.1;
};
CriticalDimension critical_dimension_check(int p, int m_keep, double mu2, double n_eff,
                                           double threshold = 0.1);

// Exact second moments of the linear terms under the given noise model:
// covariance of the Fisher leading term, its trace, the effective dimension
// tr Var(scriptD F_G^{-1} grad zeta), and tr Var(breve-xi_G).
struct ScoreMoments {
  MatrixXd var_lead;
  double trace_var_lead = 0;
  double p_bar_d = 0;
  double norm_var_d = 0;
  double trace_var_efficient = 0;
};
ScoreMoments score_moments(const InfoMatrix& info, const LocalRegion& region,
                           const NoiseModel& noise);

}  // namespace eio
