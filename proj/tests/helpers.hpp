#pragma once

// Shared test utilities: random instances, finite differences, dense
// reference computations used as independent oracles.

#include "eio/model.hpp"
#include "eio/penalty.hpp"

#include <random>

namespace eio::test {

inline MatrixXd random_matrix(std::mt19937_64& rng, int rows, int cols,
                              double scale = 1.0) {
  std::normal_distribution<double> gauss(0.0, scale);
  MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = gauss(rng);
  return m;
}

inline VectorXd random_vector(std::mt19937_64& rng, int n, double scale = 1.0) {
  std::normal_distribution<double> gauss(0.0, scale);
  VectorXd v(n);
  for (int i = 0; i < n; ++i) v(i) = gauss(rng);
  return v;
}

inline MatrixXd random_spd(std::mt19937_64& rng, int n, double ridge = 0.5) {
  const MatrixXd m = random_matrix(rng, n, n);
  return m * m.transpose() / n + ridge * MatrixXd::Identity(n, n);
}

inline Observation random_observation(std::mt19937_64& rng, int p, int q,
                                      double mu2 = 4.0) {
  return {random_vector(rng, q), random_matrix(rng, q, p), mu2};
}

inline FullParameter random_param(std::mt19937_64& rng, int p, int q,
                                  double scale = 1.0) {
  return {random_vector(rng, p, scale), random_vector(rng, q, scale),
          random_matrix(rng, q, p, scale)};
}

// Zero the coordinates excluded by truncation masks so the parameter is
// feasible for the penalty.
inline void apply_masks(FullParameter& par, const PenaltyConfig& pen) {
  const auto sig = pen.signal.active(par.p());
  for (int j = 0; j < par.p(); ++j)
    if (!sig[static_cast<size_t>(j)]) par.theta(j) = 0;
  const auto row = pen.op.row_active(par.q());
  for (int m = 0; m < par.q(); ++m)
    if (!row[static_cast<size_t>(m)]) {
      par.z(m) = 0;
      par.a.row(m).setZero();
    }
}

// Central finite-difference gradient of the objective over the stacked
// parameter (only meaningful for penalties without truncation masks).
inline VectorXd fd_gradient(const Observation& obs, const FullParameter& par,
                            const PenaltyConfig& pen, double eps = 1e-6) {
  const VectorXd x0 = par.stacked();
  VectorXd g(x0.size());
  for (Eigen::Index i = 0; i < x0.size(); ++i) {
    VectorXd xp = x0, xm = x0;
    xp(i) += eps;
    xm(i) -= eps;
    const double fp = objective(obs, FullParameter::from_stacked(xp, par.p(), par.q()), pen);
    const double fm = objective(obs, FullParameter::from_stacked(xm, par.p(), par.q()), pen);
    g(i) = (fp - fm) / (2 * eps);
  }
  return g;
}

// Central finite-difference Hessian of the negative objective.
inline MatrixXd fd_neg_hessian(const Observation& obs, const FullParameter& par,
                               const PenaltyConfig& pen, double eps = 1e-4) {
  const VectorXd x0 = par.stacked();
  const Eigen::Index n = x0.size();
  auto at = [&](const VectorXd& x) {
    return objective(obs, FullParameter::from_stacked(x, par.p(), par.q()), pen);
  };
  MatrixXd h(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i; j < n; ++j) {
      VectorXd xpp = x0, xpm = x0, xmp = x0, xmm = x0;
      xpp(i) += eps;
      xpp(j) += eps;
      xpm(i) += eps;
      xpm(j) -= eps;
      xmp(i) -= eps;
      xmp(j) += eps;
      xmm(i) -= eps;
      xmm(j) -= eps;
      const double v = (at(xpp) - at(xpm) - at(xmp) + at(xmm)) / (4 * eps * eps);
      h(i, j) = -v;
      h(j, i) = -v;
    }
  return h;
}

// Objective along par + t * dir.
inline double objective_on_line(const Observation& obs, const FullParameter& par,
                                const FullVec& dir, double t,
                                const PenaltyConfig& pen) {
  FullParameter at;
  at.theta = par.theta + t * dir.theta;
  at.z = par.z + t * dir.z;
  at.a = par.a + t * dir.a;
  return objective(obs, at, pen);
}

}  // namespace eio::test
