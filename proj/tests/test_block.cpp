#include "eio/block.hpp"

#include "helpers.hpp"

#include <doctest.h>

using namespace eio;
using namespace eio::test;

TEST_CASE("symmetrized averages the transpose pair") {
  MatrixXd m(2, 2);
  m << 1, 2, 4, 3;
  const MatrixXd s = symmetrized(m, 10.0);
  CHECK(s(0, 1) == doctest::Approx(3.0));
  CHECK(s(1, 0) == doctest::Approx(3.0));
  CHECK(s(0, 0) == doctest::Approx(1.0));
}

TEST_CASE("operator norms") {
  MatrixXd m(2, 2);
  m << 3, 0, 0, -5;
  CHECK(operator_norm(m) == doctest::Approx(5.0));
  CHECK(operator_norm_sym(m) == doctest::Approx(5.0));
  CHECK(min_eigenvalue(m) == doctest::Approx(-5.0));
}

TEST_CASE("sym_sqrt squares back and rejects indefinite input") {
  std::mt19937_64 rng(7);
  const MatrixXd m = random_spd(rng, 6);
  const MatrixXd r = sym_sqrt(m);
  CHECK((r * r - m).norm() <= 1e-10 * m.norm());
  CHECK((sym_inv_sqrt(m) * r - MatrixXd::Identity(6, 6)).norm() <= 1e-9);
  MatrixXd neg(2, 2);
  neg << -1, 0, 0, 1;
  CHECK_THROWS_AS(sym_sqrt(neg), SingularBlockError);
}

TEST_CASE("SpdFactor solves and reports singularity") {
  std::mt19937_64 rng(11);
  const MatrixXd m = random_spd(rng, 8);
  SpdFactor f(m);
  const VectorXd b = random_vector(rng, 8);
  CHECK((m * f.solve(b) - b).norm() <= 1e-9 * b.norm());
  CHECK((m * f.inverse() - MatrixXd::Identity(8, 8)).norm() <= 1e-9);
  MatrixXd sing = MatrixXd::Zero(3, 3);
  sing(0, 0) = 1;
  CHECK_THROWS_AS(SpdFactor{sing}, SingularBlockError);
}

TEST_CASE("schur complement of a 2x2 scalar split") {
  MatrixXd aa(1, 1), ab(1, 1), bb(1, 1);
  aa << 4;
  ab << 2;
  bb << 8;
  BlockSymMatrix2 f(aa, ab, bb);
  CHECK(schur_complement(f, SchurWhich::First)(0, 0) == doctest::Approx(4.0 - 4.0 / 8.0));
  CHECK(schur_complement(f, SchurWhich::Second)(0, 0) == doctest::Approx(8.0 - 4.0 / 4.0));
}

TEST_CASE("block_invert equals the dense inverse") {
  std::mt19937_64 rng(23);
  const int p = 12, q = 18;
  const MatrixXd m = random_spd(rng, p + q);
  const auto f = BlockSymMatrix2::from_dense(m, p);
  const auto inv = block_invert(f);
  const MatrixXd dense_inv = m.inverse();
  CHECK((inv.dense() - dense_inv).norm() <= 1e-9 * dense_inv.norm());
  // (.)_aa equals the inverse of the a-Schur complement.
  const MatrixXd phi = schur_complement(f, SchurWhich::First);
  CHECK((inv.f_aa * phi - MatrixXd::Identity(p, p)).norm() <= 1e-9);
}

TEST_CASE("schur identity residuals vanish on random SPD matrices") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 5; ++trial) {
    const int p = 5 + trial * 9;  // up to 41
    const int q = 50 - p;
    const auto f = BlockSymMatrix2::from_dense(random_spd(rng, 50), p);
    const auto rep = verify_schur_identities(f, 1e-10);
    CHECK(rep.pass);
    CHECK(rep.inverse_identity_residual <= 1e-10);
    CHECK(rep.cross_identity_residual <= 1e-10);
    (void)q;
  }
}

TEST_CASE("norm decomposition splits the quadratic form exactly") {
  std::mt19937_64 rng(41);
  const int p = 6, q = 9;
  const auto f = BlockSymMatrix2::from_dense(random_spd(rng, p + q), p);
  const VectorXd a = random_vector(rng, p);
  const VectorXd b = random_vector(rng, q);
  const auto nd = norm_decomposition(f, a, b);
  VectorXd w(p + q);
  w << a, b;
  const double direct = w.dot(f.dense() * w);
  CHECK(nd.quadratic_form == doctest::Approx(direct));
  CHECK(nd.head_term + nd.tail_term == doctest::Approx(direct));
  CHECK(nd.residual <= 1e-10 * (1 + std::abs(direct)));
}

TEST_CASE("sandwich bounds hold for weakly coupled blocks") {
  std::mt19937_64 rng(53);
  const int p = 5, q = 7;
  MatrixXd m = MatrixXd::Zero(p + q, p + q);
  m.topLeftCorner(p, p) = random_spd(rng, p, 1.0);
  m.bottomRightCorner(q, q) = random_spd(rng, q, 1.0);
  m.topRightCorner(p, q) = 0.05 * random_matrix(rng, p, q);
  m.bottomLeftCorner(q, p) = m.topRightCorner(p, q).transpose();
  const auto f = BlockSymMatrix2::from_dense(m, p);
  const auto rep = sandwich_bounds(f);
  CHECK(rep.applicable);
  CHECK(rep.rho < 1.0);
  CHECK(rep.lower_pass);
  CHECK(rep.upper_pass);
  CHECK(rep.schur_lower_pass);
  CHECK(rep.schur_upper_pass);
}

TEST_CASE("three-block certificates verified by eigensolve") {
  std::mt19937_64 rng(67);
  const int nx = 4, ny = 5, nt = 6;
  auto make = [&](double coupling) {
    const MatrixXd xx = random_spd(rng, nx, 1.0);
    const MatrixXd yy = random_spd(rng, ny, 1.0);
    const MatrixXd tt = random_spd(rng, nt, 1.0);
    return BlockSymMatrix3(xx, yy, tt, coupling * random_matrix(rng, nx, ny),
                           coupling * random_matrix(rng, nx, nt),
                           coupling * random_matrix(rng, ny, nt));
  };
  SUBCASE("correlation mode") {
    const auto f = make(0.05);
    const auto cert = three_block_lower_bound(f, ThreeBlockMode::Correlation);
    CHECK(cert.applicable);
    CHECK(cert.psd_pass);
    CHECK(cert.rho_xy + cert.rho_xt <= 1.0);
  }
  SUBCASE("scaled mode") {
    const auto f = make(0.05);
    std::array<MatrixXd, 3> d = {MatrixXd::Identity(nx, nx), MatrixXd::Identity(ny, ny),
                                 MatrixXd::Identity(nt, nt)};
    const auto cert = three_block_lower_bound(f, ThreeBlockMode::Scaled, d);
    CHECK(cert.applicable);
    CHECK(cert.kappa_inv2 > 0.0);
    CHECK(cert.psd_pass);
    // The certificate is a true lower bound on the spectrum in the D metric.
    CHECK(min_eigenvalue(f.dense()) >= cert.kappa_inv2 - 1e-10);
  }
}
