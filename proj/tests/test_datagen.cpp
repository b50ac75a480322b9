#include "eio/datagen.hpp"

#include "eio/estimator.hpp"
#include "helpers.hpp"

#include <doctest.h>

using namespace eio;
using namespace eio::test;

namespace {

DirectModelSpec spec_with(double sw, double su, std::uint64_t seed = 1) {
  DirectModelSpec spec;
  spec.p = 4;
  spec.q = 6;
  spec.n1 = 400.0;
  spec.mu2 = 400.0;
  spec.sigma_omega = sw;
  spec.sigma_u = su;
  spec.seed = seed;
  return spec;
}

}  // namespace

TEST_CASE("direct model construction") {
  const Instance inst = gen_direct(spec_with(1.0, 0.5));
  SUBCASE("operator spectrum matches the profile") {
    const MatrixXd d2 = inst.truth.a_star.transpose() * inst.truth.a_star;
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(d2, Eigen::EigenvaluesOnly);
    const VectorXd eigs = es.eigenvalues().reverse();
    for (int j = 0; j < 4; ++j)
      CHECK(eigs(j) == doctest::Approx(inst.profile.n_seq(j)).epsilon(1e-10));
  }
  SUBCASE("signal saturates the smoothness ball") {
    double mass = 0;
    for (int j = 0; j < 4; ++j)
      mass += inst.profile.w2_seq(j) * inst.truth.theta_star(j) * inst.truth.theta_star(j);
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("region uses the operator gram matrix") {
    CHECK(inst.region.n_eff ==
          doctest::Approx(inst.profile.n_seq(3)).epsilon(1e-10));
  }
}

TEST_CASE("zero noise gives the noiseless observation") {
  const Instance inst = gen_direct(spec_with(0.0, 0.0));
  CHECK((inst.obs.z_obs - inst.truth.image_star()).norm() == 0.0);
  CHECK((inst.obs.a_hat - inst.truth.a_star).norm() == 0.0);
}

TEST_CASE("observations are deterministic per replicate and seed") {
  const DirectModelSpec spec = spec_with(1.0, 0.5, 42);
  const Instance inst = gen_direct_population(spec);
  const Observation a = gen_direct_observation(spec, inst.truth, 3);
  const Observation b = gen_direct_observation(spec, inst.truth, 3);
  CHECK((a.z_obs - b.z_obs).norm() == 0.0);
  CHECK((a.a_hat - b.a_hat).norm() == 0.0);
  const Observation c = gen_direct_observation(spec, inst.truth, 4);
  CHECK((a.z_obs - c.z_obs).norm() > 0.0);
}

TEST_CASE("operator noise is centered: E A_hat = A* (MC, 4 sigma)") {
  const DirectModelSpec spec = spec_with(0.0, 0.7, 5);
  const Instance inst = gen_direct_population(spec);
  const int reps = 500;
  MatrixXd mean = MatrixXd::Zero(6, 4);
  for (int r = 0; r < reps; ++r)
    mean += gen_direct_observation(spec, inst.truth, std::uint64_t(r)).a_hat;
  mean /= reps;
  const double se = spec.sigma_u / std::sqrt(spec.mu2) / std::sqrt(double(reps));
  CHECK((mean - inst.truth.a_star).cwiseAbs().maxCoeff() <= 4.0 * se);
}

TEST_CASE("random design with a single constant basis") {
  RegressionSpec spec;
  spec.n = 1;
  spec.p = 1;
  spec.q = 1;
  spec.psi = BasisFamily::Monomial;  // psi_1 = 1
  spec.phi = BasisFamily::Monomial;
  spec.noise_sd = 1.0;
  spec.seed = 9;
  const RegressionInstance inst = gen_random_design(spec);
  CHECK(inst.obs.a_hat(0, 0) == doctest::Approx(1.0));
  // Z_1 = Y_1 and theta* = e_1 with f = 1: Y_1 = 1 + noise.
  CHECK(inst.obs.mu2 == doctest::Approx(1.0));
  CHECK(inst.truth.a_star(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("structural identity: noiseless target in the span gives Z = A_hat theta*") {
  RegressionSpec spec;
  spec.n = 50;
  spec.p = 3;
  spec.q = 5;
  spec.noise_sd = 0.0;
  spec.target_coeffs = VectorXd::Zero(3);
  spec.target_coeffs << 1.0, -0.5, 0.25;
  spec.seed = 21;
  const RegressionInstance inst = gen_random_design(spec);
  CHECK((inst.obs.z_obs - inst.obs.a_hat * inst.truth.theta_star).norm() <=
        1e-12 * inst.obs.z_obs.norm());
}

TEST_CASE("quadrature recovers the orthonormality of the cosine basis") {
  RegressionSpec spec;
  spec.n = 10;
  spec.p = 4;
  spec.q = 6;
  const RegressionInstance inst = gen_random_design(spec);
  // Uniform density, identical families: A*/n should be the leading block of I.
  const MatrixXd id = inst.truth.a_star / double(spec.n);
  for (int m = 0; m < 6; ++m)
    for (int j = 0; j < 4; ++j)
      CHECK(id(m, j) == doctest::Approx(m == j ? 1.0 : 0.0).epsilon(1e-10));
  CHECK(inst.quadrature_error <= 1e-12);
}

TEST_CASE("empirical operator converges to the quadrature operator") {
  double prev_err = 1e300;
  for (int n : {100, 1000, 10000}) {
    RegressionSpec spec;
    spec.n = n;
    spec.p = 3;
    spec.q = 4;
    spec.seed = 31;
    const RegressionInstance inst = gen_random_design(spec);
    const double err =
        (inst.obs.a_hat - inst.truth.a_star).norm() / double(n);
    CHECK(err < prev_err * 1.5);  // allow MC slack, trend must decrease
    prev_err = err;
  }
  CHECK(prev_err <= 0.05);
}

TEST_CASE("exogenous IV reduces to random design") {
  IvSpec iv;
  iv.base.n = 40;
  iv.base.p = 3;
  iv.base.q = 4;
  iv.base.seed = 17;
  iv.instrument_corr = 1.0;
  const RegressionInstance a = gen_iv(iv);
  const RegressionInstance b = gen_random_design(iv.base);
  CHECK((a.obs.z_obs - b.obs.z_obs).norm() == 0.0);
  CHECK((a.obs.a_hat - b.obs.a_hat).norm() == 0.0);
}

TEST_CASE("IV moment condition: E U = 0 (MC, 4 sigma)") {
  IvSpec iv;
  iv.base.n = 200;
  iv.base.p = 2;
  iv.base.q = 3;
  iv.base.noise_sd = 0.5;
  iv.instrument_corr = 0.8;
  const int reps = 200;
  VectorXd mean_u = VectorXd::Zero(3);
  double scale = 0;
  for (int r = 0; r < reps; ++r) {
    iv.base.seed = 1000 + std::uint64_t(r);
    const RegressionInstance inst = gen_iv(iv);
    const VectorXd u = inst.obs.z_obs - inst.obs.a_hat * inst.truth.theta_star;
    mean_u += u;
    scale += u.squaredNorm();
  }
  mean_u /= reps;
  const double se = std::sqrt(scale / reps / 3.0) / std::sqrt(double(reps));
  CHECK(mean_u.cwiseAbs().maxCoeff() <= 4.0 * se);
}

TEST_CASE("design decomposition identity") {
  SUBCASE("hand-computed scalars") {
    std::vector<MatrixXd> terms{MatrixXd::Constant(1, 1, 2.0),
                                MatrixXd::Constant(1, 1, 4.0)};
    // sum (a_i - 1)^2 = 1 + 9 = 10; spread = 2; n (mean - 1)^2 = 8.
    CHECK(design_decomposition_check(terms, MatrixXd::Constant(1, 1, 1.0)) <= 1e-12);
  }
  SUBCASE("random matrices") {
    std::mt19937_64 rng(3);
    std::vector<MatrixXd> terms;
    for (int i = 0; i < 7; ++i) terms.push_back(random_matrix(rng, 3, 2));
    const MatrixXd a = random_matrix(rng, 3, 2);
    CHECK(design_decomposition_check(terms, a) <= 1e-10);
    MatrixXd mean = MatrixXd::Zero(3, 2);
    for (const auto& t : terms) mean += t;
    mean /= 7.0;
    CHECK(design_decomposition_check(terms, mean) <= 1e-10);
  }
}

TEST_CASE("basis families are orthonormal under Gauss-Legendre quadrature") {
  // Self-check of the Legendre shifted basis via a fine midpoint rule.
  for (const BasisFamily fam : {BasisFamily::Cosine, BasisFamily::Legendre}) {
    const int nodes = 4000;
    for (int a = 1; a <= 3; ++a)
      for (int b = a; b <= 3; ++b) {
        double acc = 0;
        for (int i = 0; i < nodes; ++i) {
          const double x = (i + 0.5) / nodes;
          acc += basis_eval(fam, a, x) * basis_eval(fam, b, x) / nodes;
        }
        CHECK(acc == doctest::Approx(a == b ? 1.0 : 0.0).epsilon(1e-4));
      }
  }
}
