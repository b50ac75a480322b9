#include "eio/theory.hpp"

#include "eio/block.hpp"
#include "eio/datagen.hpp"
#include "eio/estimator.hpp"
#include "helpers.hpp"

#include <doctest.h>

#include <random>

using namespace eio;
using namespace eio::test;

namespace {

std::vector<int> active_indices(const InfoMatrix& info) {
  std::vector<int> idx;
  for (int j = 0; j < info.p; ++j)
    if (info.theta_active.empty() || info.theta_active[static_cast<size_t>(j)])
      idx.push_back(j);
  for (int m = 0; m < info.q; ++m)
    if (info.row_active.empty() || info.row_active[static_cast<size_t>(m)])
      idx.push_back(info.p + m);
  for (int m = 0; m < info.q; ++m)
    if (info.row_active.empty() || info.row_active[static_cast<size_t>(m)])
      for (int j = 0; j < info.p; ++j) idx.push_back(info.p + info.q + m * info.p + j);
  return idx;
}

// Dense reference solve of F_G x = rhs restricted to active coordinates.
VectorXd dense_masked_solve(const InfoMatrix& info, const VectorXd& rhs) {
  const MatrixXd f = info.dense();
  const auto idx = active_indices(info);
  const int n = static_cast<int>(idx.size());
  MatrixXd fa(n, n);
  VectorXd ra(n);
  for (int i = 0; i < n; ++i) {
    ra(i) = rhs(idx[static_cast<size_t>(i)]);
    for (int k = 0; k < n; ++k)
      fa(i, k) = f(idx[static_cast<size_t>(i)], idx[static_cast<size_t>(k)]);
  }
  const VectorXd xa = fa.fullPivLu().solve(ra);
  VectorXd x = VectorXd::Zero(f.rows());
  for (int i = 0; i < n; ++i) x(idx[static_cast<size_t>(i)]) = xa(i);
  return x;
}

InfoMatrix random_info(std::mt19937_64& rng, int p, int q, const PenaltyConfig& pen,
                       double mu2 = 9.0) {
  FullParameter par = random_param(rng, p, q, 0.4);
  apply_masks(par, pen);
  return hessian_blocks(par, mu2, pen);
}

}  // namespace

TEST_CASE("semiparametric block equals the dense Schur complement") {
  std::mt19937_64 rng(3);
  const int p = 3, q = 5;
  const PenaltyConfig pen{SignalPenalty::ridge(0.5),
                          OperatorPenalty::row_scalar(VectorXd::Constant(q, 0.3))};
  const InfoMatrix info = random_info(rng, p, q, pen);
  const MatrixXd dense = info.dense();
  const auto f2 = BlockSymMatrix2::from_dense(dense, p);
  const MatrixXd phi_dense = schur_complement(f2, SchurWhich::First);
  const MatrixXd phi = semiparametric_block(info);
  CHECK((phi - phi_dense).norm() <= 1e-9 * (1 + phi_dense.norm()));
}

TEST_CASE("structured score solve equals the dense masked solve") {
  std::mt19937_64 rng(7);
  const int p = 3, q = 4;
  SUBCASE("finite penalties") {
    const PenaltyConfig pen{SignalPenalty::ridge(0.2),
                            OperatorPenalty::row_scalar(VectorXd::Constant(q, 0.4))};
    const InfoMatrix info = random_info(rng, p, q, pen);
    ScoreVector sc{random_vector(rng, q), random_matrix(rng, q, p)};
    const FullVec x = full_score_solve(info, sc);
    VectorXd rhs = VectorXd::Zero(p + q + p * q);
    rhs.segment(p, q) = sc.z_part;
    for (int m = 0; m < q; ++m)
      rhs.segment(p + q + m * p, p) = sc.a_part.row(m).transpose();
    const VectorXd ref = dense_masked_solve(info, rhs);
    CHECK((x.stacked() - ref).norm() <= 1e-9 * (1 + ref.norm()));
  }
  SUBCASE("with truncation masks") {
    const PenaltyConfig pen{SignalPenalty::truncation(2),
                            OperatorPenalty::row_truncation(3)};
    const InfoMatrix info = random_info(rng, p, q, pen);
    ScoreVector sc{random_vector(rng, q), random_matrix(rng, q, p)};
    const FullVec x = full_score_solve(info, sc);
    VectorXd rhs = VectorXd::Zero(p + q + p * q);
    rhs.segment(p, q) = sc.z_part;
    for (int m = 0; m < q; ++m)
      rhs.segment(p + q + m * p, p) = sc.a_part.row(m).transpose();
    const VectorXd ref = dense_masked_solve(info, rhs);
    CHECK((x.stacked() - ref).norm() <= 1e-9 * (1 + ref.norm()));
    CHECK(x.theta(2) == 0.0);
    CHECK(x.a.row(3).isZero());
  }
}

TEST_CASE("closed-form bias equals the structured limit solve") {
  std::mt19937_64 rng(11);
  const int p = 3, q = 5;
  TruthSpec truth{random_vector(rng, p, 0.5), random_matrix(rng, q, p)};
  const double mu2 = 25.0;
  SUBCASE("ridge signal + row-scalar operator penalty") {
    const PenaltyConfig pen{SignalPenalty::ridge(0.8),
                            OperatorPenalty::row_scalar(VectorXd::Constant(q, 0.5))};
    const FullVec ref = penalty_bias_solution(truth, mu2, pen);
    const BiasResult bias = bias_closed_form(truth, mu2, pen);
    CHECK((bias.bias_theta - ref.theta).norm() <= 1e-9 * (1 + ref.theta.norm()));
    CHECK(bias.margin > 0);
  }
  SUBCASE("signal truncation") {
    const PenaltyConfig pen{SignalPenalty::truncation(2), OperatorPenalty::none()};
    const FullVec ref = penalty_bias_solution(truth, mu2, pen);
    const BiasResult bias = bias_closed_form(truth, mu2, pen);
    CHECK((bias.bias_theta - ref.theta).norm() <= 1e-9 * (1 + ref.theta.norm()));
    // Pinned coordinates keep their truth values in the bias limit.
    CHECK(bias.bias_theta(2) == doctest::Approx(truth.theta_star(2)));
  }
}

TEST_CASE("margin violation is rejected") {
  std::mt19937_64 rng(13);
  const int p = 2, q = 3;
  TruthSpec truth{VectorXd::Constant(p, 10.0), random_matrix(rng, q, p)};
  // ||theta*||^2 / 2 = 100 > mu^2 + k^2 = 1.25.
  const PenaltyConfig pen{SignalPenalty::none(),
                          OperatorPenalty::row_scalar(VectorXd::Constant(q, 0.25))};
  CHECK_THROWS_AS(bias_closed_form(truth, 1.0, pen), InvalidInputError);
}

TEST_CASE("effective dimension formula") {
  const int p = 2, q = 3;
  const NoiseModel noise = NoiseModel::homogeneous(p, q, 1.0, 1.0);
  const double kappa = 2.0, mu2 = 4.0;
  SUBCASE("no operator penalty: each U entry contributes kappa^4") {
    const auto ed = effective_dimension(noise, mu2, PenaltyConfig::zero(), kappa);
    CHECK(ed.p_z == doctest::Approx(16.0 * q));
    CHECK(ed.p_a == doctest::Approx(16.0 * q * p));
    CHECK(ed.total == doctest::Approx(ed.p_z + ed.p_a));
  }
  SUBCASE("row-scalar penalty shrinks the operator part") {
    const PenaltyConfig pen{SignalPenalty::none(),
                            OperatorPenalty::row_scalar(VectorXd::Constant(q, 4.0))};
    const auto ed = effective_dimension(noise, mu2, pen, kappa);
    // denominator (1 + kappa^2 k^2 / mu^2)^2 = (1 + 4)^2 = 25 per entry
    CHECK(ed.p_a == doctest::Approx(16.0 * q * p / 25.0));
  }
  SUBCASE("truncated rows are excluded") {
    const PenaltyConfig pen{SignalPenalty::none(), OperatorPenalty::row_truncation(2)};
    const auto ed = effective_dimension(noise, mu2, pen, kappa);
    CHECK(ed.p_z == doctest::Approx(16.0 * 2));
    CHECK(ed.p_a == doctest::Approx(16.0 * 2 * p));
  }
}

TEST_CASE("deviation radius") {
  CHECK(deviation_radius(9.0, 2.0, 2.0) == doctest::Approx(3.0 + std::sqrt(8.0)));
  MatrixXd b = MatrixXd::Identity(4, 4);
  CHECK(deviation_radius(b, 3.0) == doctest::Approx(2.0 + std::sqrt(6.0)));
  CHECK_THROWS_AS(deviation_radius(1.0, 1.0, 0.0), InvalidInputError);
}

TEST_CASE("cutoff risk is exact variance plus tail bias") {
  SpectralProfile prof = SpectralProfile::parametric(4, 6, 1.0, 1.0, 1.0, 100.0);
  VectorXd theta(4);
  theta << 1.0, 0.5, 0.25, 0.125;
  const auto risk = cutoff_risk_bound(prof, theta, 2, 2.0);
  // variance: kappa^4 (1/N_1 + 1/N_2) = 16 (1/100 + 4/100)
  CHECK(risk.variance_term == doctest::Approx(16.0 * 0.05));
  CHECK(risk.bias_term == doctest::Approx(0.25 * 0.25 + 0.125 * 0.125));
  CHECK(risk.total == doctest::Approx(risk.variance_term + risk.bias_term));
}

TEST_CASE("ridge risk bound components") {
  SpectralProfile prof = SpectralProfile::parametric(4, 6, 1.0, 1.0, 1.0, 100.0);
  VectorXd theta(4);
  theta << 0.5, 0.25, 0.125, 0.06;
  const double g2 = 4.0, kappa = 2.0;
  const auto risk = ridge_risk_bound(prof, theta, g2, kappa);
  // J_g = max{j : N_j >= kappa^2 g^2 = 16}: N = (100, 25, 11.1, 6.25) -> J = 2.
  CHECK(risk.cutoff == 2);
  CHECK(risk.variance_term ==
        doctest::Approx(16.0 * (1.0 / 100.0 + 1.0 / 25.0) +
                        (100.0 / 9.0 + 6.25) / 16.0));
  CHECK(risk.premise_ok);
  CHECK(risk.total >= risk.variance_term);
}

TEST_CASE("approximation-space quantities for a diagonal operator") {
  const int p = 3, q = 5;
  MatrixXd a_star = MatrixXd::Zero(q, p);
  a_star(0, 0) = 4.0;
  a_star(1, 1) = 2.0;
  a_star(2, 2) = 1.0;
  const auto rep = appspace_quantities(a_star, 2, 3);
  CHECK(rep.n_seq(0) == doctest::Approx(16.0));
  CHECK(rep.n_seq(1) == doctest::Approx(4.0));
  // Tail after the first 3 rows is zero here.
  CHECK(rep.n_tail == doctest::Approx(0.0));
  CHECK(rep.applicable);
  CHECK(rep.trace_bound == doctest::Approx(1.0 / 16.0 + 1.0 / 4.0));
}

TEST_CASE("rate prediction") {
  const auto pred = rate_prediction(1.0, 1.0, 1.0, 1e4);
  CHECK(pred.risk_exponent == doctest::Approx(-0.4));
  CHECK(pred.j_opt >= 1);
  CHECK(pred.m_opt >= pred.j_opt);
  int prev = 1;
  for (double n1 : {1e3, 1e4, 1e5, 1e6}) {
    const auto pr = rate_prediction(1.0, 1.0, 1.0, n1);
    CHECK(pr.j_opt >= prev);
    prev = pr.j_opt;
  }
  CHECK_THROWS_AS(rate_prediction(0.4, 1.0, 1.0, 1e4), InvalidInputError);
  CHECK_THROWS_AS(rate_prediction(1.0, 1.0, 1.0, 1e4, 0.8), InvalidInputError);
}

TEST_CASE("critical dimension check") {
  const auto ok = critical_dimension_check(4, 6, 1e4, 1e4);
  CHECK(ok.consistent_regime);
  const auto bad = critical_dimension_check(100, 100, 10.0, 10.0);
  CHECK(!bad.consistent_regime);
}

TEST_CASE("score moments match a Monte-Carlo oracle") {
  std::mt19937_64 rng(19);
  const int p = 2, q = 3;
  const DirectModelSpec spec = [] {
    DirectModelSpec s;
    s.p = 2;
    s.q = 3;
    s.n1 = 100.0;
    s.mu2 = 100.0;
    s.sigma_omega = 1.0;
    s.sigma_u = 0.5;
    return s;
  }();
  const Instance inst = gen_direct_population(spec);
  const PenaltyConfig pen{SignalPenalty::ridge(0.5), OperatorPenalty::none()};
  const InfoMatrix info = assemble_info(inst.truth.full(), spec.mu2, pen, false);
  const ScoreMoments mom = score_moments(info, inst.region, spec.noise_model());

  std::normal_distribution<double> gauss(0.0, 1.0);
  const int reps = 20000;
  double tr_lead = 0, tr_d = 0;
  for (int r = 0; r < reps; ++r) {
    ScoreVector sc;
    sc.z_part = VectorXd::Zero(q);
    sc.a_part = MatrixXd::Zero(q, p);
    for (int m = 0; m < q; ++m) sc.z_part(m) = spec.sigma_omega * gauss(rng);
    for (int m = 0; m < q; ++m)
      for (int j = 0; j < p; ++j)
        sc.a_part(m, j) = std::sqrt(spec.mu2) * spec.sigma_u * gauss(rng);
    const FullVec sol = full_score_solve(info, sc);
    tr_lead += sol.theta.squaredNorm();
    const double dn = inst.region.script_d_norm(sol);
    tr_d += dn * dn;
  }
  tr_lead /= reps;
  tr_d /= reps;
  CHECK(tr_lead == doctest::Approx(mom.trace_var_lead).epsilon(0.05));
  CHECK(tr_d == doctest::Approx(mom.p_bar_d).epsilon(0.05));
}

TEST_CASE("expansion bound structure on a deterministic score") {
  const DirectModelSpec spec = [] {
    DirectModelSpec s;
    s.p = 3;
    s.q = 4;
    s.n1 = 1e4;
    s.mu2 = 1e4;
    return s;
  }();
  const Instance inst = gen_direct_population(spec);
  const PenaltyConfig pen{SignalPenalty::ridge(1.0), OperatorPenalty::none()};
  const InfoMatrix info = assemble_info(inst.truth.full(), spec.mu2, pen, false);
  ScoreVector sc{VectorXd::Zero(4), MatrixXd::Zero(4, 3)};
  ExpansionOptions opts;
  opts.r_d = 1.0;
  SUBCASE("zero score gives zero Fisher bound") {
    const auto rep = expansion_bounds(info, inst.region, &sc, BoundKind::Fisher, opts);
    CHECK(rep.applicable);
    CHECK(rep.leading_norm == doctest::Approx(0.0));
    CHECK(rep.bound == doctest::Approx(0.0));
  }
  SUBCASE("fisher bound formula") {
    sc.z_part(0) = 2.0;
    const auto rep = expansion_bounds(info, inst.region, &sc, BoundKind::Fisher, opts);
    const auto sm = smoothness_constants(inst.region, inst.region.mu);
    const double kappa2 = inst.region.kappa * inst.region.kappa;
    const MatrixXd d_inv = inst.region.d_inv_sqrt();
    const double expect = operator_norm(d_inv) * 0.75 * kappa2 * sm.tau3 *
                          rep.leading_norm * rep.leading_norm;
    CHECK(rep.bound == doctest::Approx(expect).epsilon(1e-10));
  }
}

TEST_CASE("variance bound shape") {
  std::mt19937_64 rng(29);
  const MatrixXd d2 = random_spd(rng, 3, 1.0);
  const auto vb = variance_bound(1.0, 1.0, 0.1, 2.0, d2, PenaltyConfig::zero());
  CHECK(vb.matrix.rows() == 3);
  CHECK(min_eigenvalue(symmetrized(vb.matrix, 1.0)) > 0);
  CHECK(vb.trace == doctest::Approx(vb.matrix.trace()).epsilon(1e-9));
}

TEST_CASE("truncation bias bound applicability") {
  SpectralProfile prof = SpectralProfile::parametric(4, 6, 1.0, 1.0, 1.0, 100.0);
  VectorXd theta(4);
  theta << 1, 0.5, 0.2, 0.1;
  const auto b = truncation_bias_bound(prof, theta, 2, 4, 2.0);
  CHECK(b.applicable);  // n_{M+1} = N_5 = 0 (p = 4) <= N_2 / 2
  CHECK(b.value >= 0);
}
