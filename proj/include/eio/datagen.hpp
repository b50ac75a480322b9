#pragma once

// Synthetic instance builders: direct spectral model, random-design
// regression, and instrumental-variable regression.

#include "eio/model.hpp"
#include "eio/theory.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace eio {

struct DirectModelSpec {
  int p = 8;
  int q = 12;
  double s = 1.0;
  double beta = 1.0;
  double c_w = 1.0;
  double n1 = 1e4;
  double sigma_omega = 1.0;
  double sigma_u = 1.0;
  double mu2 = 1e4;
  double delta0 = 0.1;
  double g0 = 0.0;  // optional ridge inside D^2 when lambda_min would vanish
  std::uint64_t seed = 1;

  NoiseModel noise_model() const {
    return NoiseModel::homogeneous(p, q, sigma_omega * sigma_omega, sigma_u * sigma_u);
  }
};

struct Instance {
  Observation obs;
  TruthSpec truth;
  LocalRegion region;
  SpectralProfile profile;
};

// Direct spectral model: A* diagonal with singular values sqrt(N_j)
// (canonical basis), theta* on the smoothness-ball boundary
// (sum_j w_j^2 theta_j^2 = 1, mass proportional to 1/j per shell, random
// signs), Z = A* theta* + omega, A_hat = A* + U / mu.
Instance gen_direct(const DirectModelSpec& spec);

// Truth and region only (noise-independent parts), shared across replicates.
Instance gen_direct_population(const DirectModelSpec& spec);

// Fresh noise for replicate r of a base instance (deterministic substreams).
Observation gen_direct_observation(const DirectModelSpec& spec, const TruthSpec& truth,
                                   std::uint64_t replicate);

enum class BasisFamily { Cosine, Legendre, Monomial };
enum class DesignDensity { Uniform, Tilted };  // tilted: 1 + a (x - 1/2) on [0,1]

struct RegressionSpec {
  int n = 1000;
  int p = 6;   // source basis size (Psi)
  int q = 8;   // image basis size (Phi)
  BasisFamily psi = BasisFamily::Cosine;
  BasisFamily phi = BasisFamily::Cosine;
  DesignDensity density = DesignDensity::Uniform;
  double tilt = 0.0;
  VectorXd target_coeffs;  // f = Psi^T target (defaults to e_1 when empty)
  double noise_sd = 1.0;
  double mu2_factor = 1.0;  // mu^2 = mu2_factor * n
  std::uint64_t seed = 1;
  int quadrature_nodes = 256;
};

struct RegressionInstance {
  Observation obs;
  TruthSpec truth;          // A* by quadrature; theta* = target coefficients
  double quadrature_error = 0;  // convergence self-check (256 vs 128 nodes)
  std::vector<MatrixXd> a_hat_terms;  // per-sample contributions n*Phi(X_i)Psi(X_i)^T
};

RegressionInstance gen_random_design(const RegressionSpec& spec);

struct IvSpec {
  RegressionSpec base;        // psi/q/p reused; phi evaluated at the instrument W
  double instrument_corr = 0.8;  // X = rho W + sqrt(1-rho^2) V, V independent
};
RegressionInstance gen_iv(const IvSpec& spec);

// Residual of sum_i ||A_i - A||^2 = sum_i ||A_i - Abar||^2 + n ||Abar - A||^2.
double design_decomposition_check(const std::vector<MatrixXd>& a_hat_terms,
                                  const MatrixXd& a);

// Basis evaluation (1-based function index j = 1..count) on [0,1].
double basis_eval(BasisFamily family, int j, double x);

}  // namespace eio
