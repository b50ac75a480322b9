#include "eio/datagen.hpp"

#include <cmath>
#include <random>

namespace eio {
namespace {

constexpr double kPi = 3.14159265358979323846;

// Legendre polynomial P_n(x) and derivative on [-1,1] via recurrence.
std::pair<double, double> legendre_pair(int n, double x) {
  double p0 = 1.0, p1 = x;
  if (n == 0) return {1.0, 0.0};
  for (int k = 2; k <= n; ++k) {
    const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
    p0 = p1;
    p1 = pk;
  }
  const double dp = n * (x * p1 - p0) / (x * x - 1.0);
  return {p1, dp};
}

// Gauss-Legendre nodes/weights on [0,1], Newton iteration from Chebyshev guesses.
void gauss_legendre01(int n, std::vector<double>& nodes, std::vector<double>& weights) {
  nodes.assign(n, 0.0);
  weights.assign(n, 0.0);
  for (int i = 0; i < n; ++i) {
    double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
    for (int it = 0; it < 100; ++it) {
      auto [p, dp] = legendre_pair(n, x);
      const double dx = p / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    auto [p, dp] = legendre_pair(n, x);
    (void)p;
    nodes[i] = 0.5 * (x + 1.0);
    weights[i] = 1.0 / ((1.0 - x * x) * dp * dp);  // [0,1] weight: 2/((1-x^2)dp^2) / 2
  }
}

double density_value(const RegressionSpec& spec, double x) {
  if (spec.density == DesignDensity::Uniform) return 1.0;
  return 1.0 + spec.tilt * (x - 0.5);
}

double sample_design(const RegressionSpec& spec, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  if (spec.density == DesignDensity::Uniform) return unif(rng);
  // Inverse CDF of 1 + a(x - 1/2): F(x) = x + a x (x-1)/2.
  const double a = spec.tilt;
  if (std::abs(a) < 1e-14) return unif(rng);
  const double u = unif(rng);
  // Solve (a/2) x^2 + (1 - a/2) x - u = 0 for the root in [0,1].
  const double b = 1.0 - 0.5 * a;
  const double disc = b * b + 2.0 * a * u;
  return (-b + std::sqrt(disc)) / a;
}

VectorXd eval_basis_vec(BasisFamily family, int count, double x) {
  VectorXd v(count);
  for (int j = 1; j <= count; ++j) v(j - 1) = basis_eval(family, j, x);
  return v;
}

// A* = n * E[Phi(X) Psi(X)^T] by Gauss-Legendre quadrature with the given
// node count.
MatrixXd quadrature_a_star(const RegressionSpec& spec, int nodes_n) {
  std::vector<double> nodes, weights;
  gauss_legendre01(nodes_n, nodes, weights);
  MatrixXd a = MatrixXd::Zero(spec.q, spec.p);
  for (int i = 0; i < nodes_n; ++i) {
    const double x = nodes[i];
    const double w = weights[i] * density_value(spec, x);
    a.noalias() += w * eval_basis_vec(spec.phi, spec.q, x) *
                   eval_basis_vec(spec.psi, spec.p, x).transpose();
  }
  return double(spec.n) * a;
}

// A* for the IV model: n * E[Phi(W) Psi(X)^T] with X = rho W + sqrt(1-rho^2) V,
// W, V independent uniform on [0,1] (X reduced modulo 1 to stay on [0,1]).
MatrixXd quadrature_a_star_iv(const IvSpec& spec, int nodes_n) {
  const RegressionSpec& base = spec.base;
  const double rho = spec.instrument_corr;
  if (std::abs(rho - 1.0) < 1e-14) return quadrature_a_star(base, nodes_n);
  std::vector<double> nodes, weights;
  gauss_legendre01(nodes_n, nodes, weights);
  MatrixXd a = MatrixXd::Zero(base.q, base.p);
  const double sv = std::sqrt(1.0 - rho * rho);
  for (int i = 0; i < nodes_n; ++i) {
    const double w1 = nodes[i];
    const VectorXd phi_w = eval_basis_vec(base.phi, base.q, w1);
    for (int j = 0; j < nodes_n; ++j) {
      const double v = nodes[j];
      double x = rho * w1 + sv * v;
      x -= std::floor(x);
      a.noalias() += (weights[i] * weights[j]) * phi_w *
                     eval_basis_vec(base.psi, base.p, x).transpose();
    }
  }
  return double(base.n) * a;
}

double target_value(const RegressionSpec& spec, const VectorXd& coeffs, double x) {
  return coeffs.dot(eval_basis_vec(spec.psi, spec.p, x));
}

VectorXd effective_target(const RegressionSpec& spec) {
  if (spec.target_coeffs.size() > 0) {
    if (spec.target_coeffs.size() != spec.p)
      throw InvalidInputError("target coefficient vector must have length p");
    return spec.target_coeffs;
  }
  VectorXd t = VectorXd::Zero(spec.p);
  t(0) = 1.0;
  return t;
}

}  // namespace

double basis_eval(BasisFamily family, int j, double x) {
  switch (family) {
    case BasisFamily::Cosine:
      return j == 1 ? 1.0 : std::sqrt(2.0) * std::cos((j - 1) * kPi * x);
    case BasisFamily::Legendre: {
      auto [p, dp] = legendre_pair(j - 1, 2.0 * x - 1.0);
      (void)dp;
      return std::sqrt(2.0 * j - 1.0) * p;
    }
    case BasisFamily::Monomial:
      return std::pow(x, j - 1);
  }
  throw InvalidInputError("unknown basis family");
}

Instance gen_direct_population(const DirectModelSpec& spec) {
  if (spec.p < 1 || spec.q < spec.p) throw InvalidInputError("gen_direct needs 1 <= p <= q");
  if (spec.mu2 <= 0) throw InvalidInputError("mu2 must be positive");
  Instance inst;
  inst.profile = SpectralProfile::parametric(spec.p, spec.q, spec.s, spec.beta, spec.c_w,
                                             spec.n1);
  MatrixXd a_star = MatrixXd::Zero(spec.q, spec.p);
  for (int j = 0; j < spec.p; ++j) a_star(j, j) = std::sqrt(inst.profile.n_seq(j));

  // theta*_j = sign_j j^{-1/2} / w_j, normalized so sum_j w_j^2 theta_j^2 = 1.
  std::mt19937_64 sign_rng(substream_seed(spec.seed, 0x7e7a5151u));
  VectorXd theta(spec.p);
  double mass = 0;
  for (int j = 0; j < spec.p; ++j) {
    const double sgn = (sign_rng() & 1u) ? 1.0 : -1.0;
    theta(j) = sgn / (std::sqrt(double(j + 1) * inst.profile.w2_seq(j)));
    mass += inst.profile.w2_seq(j) * theta(j) * theta(j);
  }
  theta /= std::sqrt(mass);

  inst.truth = TruthSpec{theta, a_star};
  inst.region = LocalRegion::from_truth(inst.truth, std::sqrt(spec.mu2), spec.delta0,
                                        spec.g0);
  inst.obs = inst.truth.noiseless(spec.mu2);
  return inst;
}

Observation gen_direct_observation(const DirectModelSpec& spec, const TruthSpec& truth,
                                   std::uint64_t replicate) {
  std::mt19937_64 rng_omega(substream_seed(spec.seed, 2 * replicate + 1));
  std::mt19937_64 rng_u(substream_seed(spec.seed, 2 * replicate + 2));
  std::normal_distribution<double> gauss(0.0, 1.0);
  const int p = truth.p(), q = truth.q();
  Observation obs;
  obs.mu2 = spec.mu2;
  obs.z_obs = truth.image_star();
  for (int m = 0; m < q; ++m) obs.z_obs(m) += spec.sigma_omega * gauss(rng_omega);
  obs.a_hat = truth.a_star;
  const double inv_mu = 1.0 / std::sqrt(spec.mu2);
  if (spec.sigma_u != 0.0) {
    for (int m = 0; m < q; ++m)
      for (int j = 0; j < p; ++j) obs.a_hat(m, j) += spec.sigma_u * inv_mu * gauss(rng_u);
  }
  return obs;
}

Instance gen_direct(const DirectModelSpec& spec) {
  Instance inst = gen_direct_population(spec);
  inst.obs = gen_direct_observation(spec, inst.truth, 0);
  return inst;
}

RegressionInstance gen_random_design(const RegressionSpec& spec) {
  if (spec.n < 1 || spec.p < 1 || spec.q < 1)
    throw InvalidInputError("gen_random_design needs n, p, q >= 1");
  if (spec.density == DesignDensity::Tilted && std::abs(spec.tilt) >= 2.0)
    throw InvalidInputError("tilted density needs |tilt| < 2 to stay positive");
  RegressionInstance inst;
  const VectorXd target = effective_target(spec);

  const MatrixXd a_star = quadrature_a_star(spec, spec.quadrature_nodes);
  const MatrixXd a_check = quadrature_a_star(spec, std::max(8, spec.quadrature_nodes / 2));
  inst.quadrature_error = (a_star - a_check).norm() / std::max(1.0, a_star.norm());

  std::mt19937_64 rng_x(substream_seed(spec.seed, 1));
  std::mt19937_64 rng_eps(substream_seed(spec.seed, 2));
  std::normal_distribution<double> gauss(0.0, 1.0);

  VectorXd z = VectorXd::Zero(spec.q);
  MatrixXd a_hat = MatrixXd::Zero(spec.q, spec.p);
  inst.a_hat_terms.reserve(spec.n);
  for (int i = 0; i < spec.n; ++i) {
    const double x = sample_design(spec, rng_x);
    const double y = target_value(spec, target, x) + spec.noise_sd * gauss(rng_eps);
    const VectorXd phi = eval_basis_vec(spec.phi, spec.q, x);
    const VectorXd psi = eval_basis_vec(spec.psi, spec.p, x);
    const MatrixXd term = phi * psi.transpose();
    a_hat += term;
    z += y * phi;
    inst.a_hat_terms.push_back(double(spec.n) * term);
  }
  inst.obs = Observation{z, a_hat, spec.mu2_factor * double(spec.n)};
  inst.truth = TruthSpec{target, a_star};
  return inst;
}

RegressionInstance gen_iv(const IvSpec& spec) {
  const RegressionSpec& base = spec.base;
  if (base.n < 1 || base.p < 1 || base.q < 1)
    throw InvalidInputError("gen_iv needs n, p, q >= 1");
  const double rho = spec.instrument_corr;
  if (rho <= 0.0 || rho > 1.0)
    throw InvalidInputError("instrument correlation must lie in (0, 1]");
  if (std::abs(rho - 1.0) < 1e-14) {
    // Exogenous case W = X: identical to the random-design construction.
    return gen_random_design(base);
  }
  RegressionInstance inst;
  const VectorXd target = effective_target(base);

  const MatrixXd a_star = quadrature_a_star_iv(spec, base.quadrature_nodes);
  const MatrixXd a_check =
      quadrature_a_star_iv(spec, std::max(8, base.quadrature_nodes / 2));
  inst.quadrature_error = (a_star - a_check).norm() / std::max(1.0, a_star.norm());

  std::mt19937_64 rng_w(substream_seed(base.seed, 1));
  std::mt19937_64 rng_eps(substream_seed(base.seed, 2));
  std::mt19937_64 rng_v(substream_seed(base.seed, 3));
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double sv = std::sqrt(1.0 - rho * rho);

  VectorXd z = VectorXd::Zero(base.q);
  MatrixXd a_hat = MatrixXd::Zero(base.q, base.p);
  inst.a_hat_terms.reserve(base.n);
  for (int i = 0; i < base.n; ++i) {
    const double w = unif(rng_w);
    double x = rho * w + sv * unif(rng_v);
    x -= std::floor(x);
    const double y = target_value(base, target, x) + base.noise_sd * gauss(rng_eps);
    const VectorXd phi_w = eval_basis_vec(base.phi, base.q, w);
    const VectorXd psi_x = eval_basis_vec(base.psi, base.p, x);
    const MatrixXd term = phi_w * psi_x.transpose();
    a_hat += term;
    z += y * phi_w;
    inst.a_hat_terms.push_back(double(base.n) * term);
  }
  inst.obs = Observation{z, a_hat, base.mu2_factor * double(base.n)};
  inst.truth = TruthSpec{target, a_star};
  return inst;
}

double design_decomposition_check(const std::vector<MatrixXd>& a_hat_terms,
                                  const MatrixXd& a) {
  if (a_hat_terms.empty()) throw InvalidInputError("need at least one design term");
  const double n = double(a_hat_terms.size());
  MatrixXd mean = MatrixXd::Zero(a.rows(), a.cols());
  for (const auto& t : a_hat_terms) mean += t;
  mean /= n;
  double lhs = 0, spread = 0;
  for (const auto& t : a_hat_terms) {
    lhs += (t - a).squaredNorm();
    spread += (t - mean).squaredNorm();
  }
  return std::abs(lhs - (spread + n * (mean - a).squaredNorm()));
}

}  // namespace eio
