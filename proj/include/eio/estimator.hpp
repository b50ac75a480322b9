#pragma once

// Maximization of the penalized objective over (theta, z, A) by cyclic exact
// block updates (z -> A -> theta) with optional Newton refinement, plus the
// population counterpart and the reference estimators.

#include "eio/model.hpp"
#include "eio/penalty.hpp"

#include <optional>

namespace eio {

struct SolveOptions {
  enum class Init { Zeros, Plugin, User };
  int max_iters = 500;
  double obj_tol = 1e-12;   // relative: scaled by 1 + |objective|
  double grad_tol = 1e-8;   // relative: scaled by 1 + ||data||
  bool newton_refine = true;
  Init init = Init::Plugin;
  std::optional<FullParameter> user_init;
};

struct FitResult {
  FullParameter param;
  double objective = 0;
  double grad_norm = 0;
  int iters = 0;
  bool converged = false;
  std::optional<RegionDiagnostic> region;
};

VectorXd block_update_z(const Observation& obs, const FullParameter& p);
VectorXd block_update_theta(const Observation& obs, const FullParameter& p,
                            const PenaltyConfig& pen);
MatrixXd block_update_a(const Observation& obs, const FullParameter& p,
                        const PenaltyConfig& pen);

FitResult maximize(const Observation& obs, const PenaltyConfig& pen,
                   const SolveOptions& opts = {},
                   const LocalRegion* region = nullptr,
                   const TruthSpec* truth = nullptr);

// Maximizer of the expected objective: runs maximize on the noiseless
// observation (Z = A* theta*, A_hat = A*).
FitResult population_fit(const TruthSpec& truth, double mu2, const PenaltyConfig& pen,
                         const SolveOptions& opts = {});

// Known-operator ridge benchmark (A*^T A* + G^2)^{-1} A*^T Z.
VectorXd benchmark_ridge(const VectorXd& z_obs, const MatrixXd& a_star,
                         const SignalPenalty& pen_signal);

// Naive plug-in least squares (A_hat^T A_hat)^{-1} A_hat^T Z.
VectorXd plugin_lse(const VectorXd& z_obs, const MatrixXd& a_hat);

// Value of the profile objective at fixed theta: the conditional problem in
// (z, A) is a concave quadratic with a closed-form maximizer
//   A_m = (mu^2 I + K_m^2 + theta theta^T/2)^{-1} (mu^2 Ahat_m + Z_m theta / 2),
//   z = (Z + A theta)/2.
double profile_value(const Observation& obs, const PenaltyConfig& pen,
                     const VectorXd& theta);

}  // namespace eio
