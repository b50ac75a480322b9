#include "eio/estimator.hpp"

#include "eio/datagen.hpp"
#include "helpers.hpp"

#include <doctest.h>

using namespace eio;
using namespace eio::test;

namespace {

DirectModelSpec small_spec(std::uint64_t seed, double sw = 0.3, double su = 0.3) {
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

TEST_CASE("noiseless fit recovers the truth") {
  const Instance inst = gen_direct(small_spec(2, 0.0, 0.0));
  const FitResult fit = maximize(inst.obs, PenaltyConfig::zero());
  CHECK(fit.converged);
  CHECK((fit.param.theta - inst.truth.theta_star).norm() <= 1e-8);
  CHECK((fit.param.a - inst.truth.a_star).norm() <= 1e-8);
  CHECK((fit.param.z - inst.truth.image_star()).norm() <= 1e-8);
}

TEST_CASE("block updates never decrease the objective") {
  const Instance inst = gen_direct(small_spec(3));
  const PenaltyConfig pen{SignalPenalty::ridge(0.5), OperatorPenalty::none()};
  FullParameter par = FullParameter::zeros(4, 6);
  par.a = inst.obs.a_hat;
  double prev = objective(inst.obs, par, pen);
  for (int it = 0; it < 5; ++it) {
    par.z = block_update_z(inst.obs, par);
    double v = objective(inst.obs, par, pen);
    CHECK(v >= prev - 1e-12);
    prev = v;
    par.a = block_update_a(inst.obs, par, pen);
    v = objective(inst.obs, par, pen);
    CHECK(v >= prev - 1e-12);
    prev = v;
    par.theta = block_update_theta(inst.obs, par, pen);
    v = objective(inst.obs, par, pen);
    CHECK(v >= prev - 1e-12);
    prev = v;
  }
}

TEST_CASE("maximize reaches a stationary point that dominates the truth") {
  DirectModelSpec spec = small_spec(5);
  spec.mu2 = 1e4;  // wide locality ball so the truth and the fit both land inside
  const Instance inst = gen_direct(spec);
  const PenaltyConfig pen{SignalPenalty::ridge(1.0), OperatorPenalty::none()};
  const FitResult fit = maximize(inst.obs, pen, {}, &inst.region, &inst.truth);
  CHECK(fit.converged);
  CHECK(fit.grad_norm <= 1e-6);
  CHECK(fit.objective >= objective(inst.obs, inst.truth.full(), pen) - 1e-10);
  REQUIRE(fit.region.has_value());
  CHECK(fit.region->pass);
}

TEST_CASE("truncation masks are honored by the fit") {
  const Instance inst = gen_direct(small_spec(7));
  const PenaltyConfig pen{SignalPenalty::truncation(2), OperatorPenalty::row_truncation(4)};
  const FitResult fit = maximize(inst.obs, pen);
  CHECK(fit.converged);
  CHECK(fit.param.theta.tail(2).isZero());
  CHECK(fit.param.a.bottomRows(2).isZero());
  CHECK(fit.param.z.tail(2).isZero());
}

TEST_CASE("huge mu2 with no signal penalty matches the plug-in least squares") {
  const Instance base = gen_direct(small_spec(11));
  Observation obs = base.obs;
  obs.mu2 = 1e16;
  const FitResult fit = maximize(obs, PenaltyConfig::zero());
  CHECK(fit.converged);
  const VectorXd lse = plugin_lse(obs.z_obs, obs.a_hat);
  CHECK((fit.param.theta - lse).norm() <= 1e-6 * (1 + lse.norm()));
}

TEST_CASE("benchmark ridge closed form") {
  std::mt19937_64 rng(13);
  const MatrixXd a = random_matrix(rng, 5, 3);
  const VectorXd z = random_vector(rng, 5);
  const VectorXd got = benchmark_ridge(z, a, SignalPenalty::ridge(2.0));
  const MatrixXd normal = a.transpose() * a + 2.0 * MatrixXd::Identity(3, 3);
  const VectorXd expect = normal.ldlt().solve(a.transpose() * z);
  CHECK((got - expect).norm() <= 1e-10);
}

TEST_CASE("profile value equals the nuisance-maximized objective") {
  const Instance inst = gen_direct(small_spec(17));
  const PenaltyConfig pen{SignalPenalty::ridge(0.3),
                          OperatorPenalty::row_scalar(VectorXd::Constant(6, 0.2))};
  std::mt19937_64 rng(99);
  const VectorXd theta = random_vector(rng, 4, 0.1);
  const double prof = profile_value(inst.obs, pen, theta);
  // Independent check: maximize over (z, A) at fixed theta by many cyclic
  // conditional updates.
  FullParameter par;
  par.theta = theta;
  par.a = inst.obs.a_hat;
  par.z = block_update_z(inst.obs, par);
  for (int it = 0; it < 200; ++it) {
    par.a = block_update_a(inst.obs, par, pen);
    par.z = block_update_z(inst.obs, par);
  }
  const double iterated = objective(inst.obs, par, pen);
  CHECK(prof == doctest::Approx(iterated).epsilon(1e-10));
  // The full maximizer's profile value matches its objective.
  const FitResult fit = maximize(inst.obs, pen);
  CHECK(profile_value(inst.obs, pen, fit.param.theta) ==
        doctest::Approx(fit.objective).epsilon(1e-9));
  // And dominates the profile at any other theta.
  CHECK(fit.objective >= prof - 1e-10);
}
