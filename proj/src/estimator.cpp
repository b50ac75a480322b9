#include "eio/estimator.hpp"

#include "eio/block.hpp"
#include "eio/full_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace eio {

namespace {

// Solve (diag(d) + c * theta theta^T) x = v by Sherman-Morrison (d > 0, c >= 0).
VectorXd rank1_diag_solve(const VectorXd& d, const VectorXd& theta, double c,
                          const VectorXd& v) {
  const VectorXd vd = v.cwiseQuotient(d);
  if (c == 0.0 || theta.isZero(0)) return vd;
  const VectorXd td = theta.cwiseQuotient(d);
  const double denom = 1.0 + c * theta.dot(td);
  return vd - td * (c * theta.dot(vd) / denom);
}

double data_scale(const Observation& obs) { return obs.z_obs.norm() + obs.a_hat.norm(); }

void enforce_masks(FullParameter& p, const PenaltyConfig& pen) {
  const auto sig = pen.signal.active(p.p());
  const auto row = pen.op.row_active(p.q());
  for (int j = 0; j < p.p(); ++j)
    if (!sig[static_cast<size_t>(j)]) p.theta(j) = 0;
  for (int m = 0; m < p.q(); ++m)
    if (!row[static_cast<size_t>(m)]) {
      p.a.row(m).setZero();
      p.z(m) = 0;
    }
}

// Gradient entries in the operator block scale with mu2; near the optimum the
// representable resolution of A - A_hat limits how small they can get.
double grad_floor(const Observation& obs) {
  return obs.mu2 * std::numeric_limits<double>::epsilon() * (1.0 + obs.a_hat.norm());
}

double masked_grad_norm(const FullVec& g) {
  return std::sqrt(g.theta.squaredNorm() + g.z.squaredNorm() + g.a.squaredNorm());
}

}  // namespace

VectorXd block_update_z(const Observation& obs, const FullParameter& p) {
  return 0.5 * (obs.z_obs + p.a * p.theta);
}

VectorXd block_update_theta(const Observation& obs, const FullParameter& p,
                            const PenaltyConfig& pen) {
  (void)obs;
  const int np = p.p();
  const auto sig = pen.signal.active(np);
  std::vector<int> ja;
  for (int j = 0; j < np; ++j)
    if (sig[static_cast<size_t>(j)]) ja.push_back(j);
  VectorXd theta = VectorXd::Zero(np);
  if (ja.empty()) return theta;
  const VectorXd g2 = pen.signal.g2_diag(np);
  MatrixXd normal(ja.size(), ja.size());
  VectorXd rhs(ja.size());
  const MatrixXd ata = p.a.transpose() * p.a;
  const VectorXd atz = p.a.transpose() * p.z;
  for (size_t i = 0; i < ja.size(); ++i) {
    for (size_t k = 0; k < ja.size(); ++k) normal(i, k) = ata(ja[i], ja[k]);
    normal(i, i) += g2(ja[i]);
    rhs(static_cast<Eigen::Index>(i)) = atz(ja[i]);
  }
  try {
    SpdFactor fact(normal, "theta_normal_matrix");
    const VectorXd sol = fact.solve(rhs);
    for (size_t i = 0; i < ja.size(); ++i) theta(ja[i]) = sol(static_cast<Eigen::Index>(i));
  } catch (const SingularBlockError&) {
    throw SingularBlockError(
        "block_update_theta: normal matrix A^T A + G^2 is singular; add a ridge penalty");
  }
  return theta;
}

MatrixXd block_update_a(const Observation& obs, const FullParameter& p,
                        const PenaltyConfig& pen) {
  const int np = p.p(), nq = p.q();
  const auto row = pen.op.row_active(nq);
  MatrixXd a = MatrixXd::Zero(nq, np);
  for (int m = 0; m < nq; ++m) {
    if (!row[static_cast<size_t>(m)]) continue;
    const VectorXd d = VectorXd::Constant(np, obs.mu2) + pen.op.k2_row(m, np);
    if (d.minCoeff() <= 0 && p.theta.isZero(0))
      throw SingularBlockError("block_update_a: row system singular (mu=0, theta=0, no penalty)");
    const VectorXd rhs = obs.mu2 * obs.a_hat.row(m).transpose() + p.z(m) * p.theta;
    if (d.minCoeff() <= 0) {
      // mu = 0 with no row penalty: rank-one system solvable only along theta.
      throw SingularBlockError("block_update_a: row system singular; need mu > 0 or penalty");
    }
    a.row(m) = rank1_diag_solve(d, p.theta, 1.0, rhs).transpose();
  }
  return a;
}

FitResult maximize(const Observation& obs, const PenaltyConfig& pen,
                   const SolveOptions& opts, const LocalRegion* region,
                   const TruthSpec* truth) {
  obs.validate();
  const int np = obs.p(), nq = obs.q();

  FullParameter cur = FullParameter::zeros(np, nq);
  switch (opts.init) {
    case SolveOptions::Init::Zeros:
      break;
    case SolveOptions::Init::Plugin: {
      cur.a = obs.a_hat;
      try {
        cur.theta = plugin_lse(obs.z_obs, obs.a_hat);
      } catch (const SingularBlockError&) {
        cur.theta.setZero();
      }
      enforce_masks(cur, pen);
      cur.z = 0.5 * (obs.z_obs + cur.a * cur.theta);
      break;
    }
    case SolveOptions::Init::User:
      if (!opts.user_init) throw InvalidInputError("maximize: user init missing");
      cur = *opts.user_init;
      enforce_masks(cur, pen);
      break;
  }

  const double gtol = opts.grad_tol * (1.0 + data_scale(obs)) + grad_floor(obs);
  double obj = objective(obs, cur, pen);
  double gnorm = masked_grad_norm(gradient(obs, cur, pen));
  int iters = 0;

  for (; iters < opts.max_iters; ++iters) {
    cur.z = block_update_z(obs, cur);
    cur.a = block_update_a(obs, cur, pen);
    cur.theta = block_update_theta(obs, cur, pen);
    enforce_masks(cur, pen);
    const double obj_new = objective(obs, cur, pen);
    gnorm = masked_grad_norm(gradient(obs, cur, pen));
    const bool obj_settled = (obj_new - obj) < opts.obj_tol * (1.0 + std::abs(obj_new));
    obj = obj_new;
    if (obj_settled && gnorm <= gtol) {
      ++iters;
      break;
    }
  }

  if (opts.newton_refine) {
    const double refine_floor = 1e-15 * (1.0 + data_scale(obs)) + grad_floor(obs);
    for (int k = 0; k < 50 && gnorm > refine_floor; ++k) {
      FullVec g = gradient(obs, cur, pen);
      try {
        FullSolver solver(hessian_blocks(cur, obs.mu2, pen));
        const FullVec step = solver.solve(g);
        double t = 1.0;
        FullParameter cand = cur;
        double obj_cand = obj;
        bool accepted = false;
        while (t > 1e-10) {
          cand.theta = cur.theta + t * step.theta;
          cand.z = cur.z + t * step.z;
          cand.a = cur.a + t * step.a;
          obj_cand = objective(obs, cand, pen);
          if (obj_cand >= obj - 1e-14 * (1.0 + std::abs(obj))) {
            accepted = true;
            break;
          }
          t *= 0.5;
        }
        if (!accepted) break;
        const double gnorm_new = masked_grad_norm(gradient(obs, cand, pen));
        if (gnorm_new >= gnorm && obj_cand <= obj) break;
        cur = cand;
        obj = obj_cand;
        gnorm = gnorm_new;
      } catch (const SingularBlockError&) {
        break;  // Hessian indefinite/singular away from the optimum; keep block result
      }
    }
  }

  FitResult res;
  res.param = cur;
  res.objective = obj;
  res.grad_norm = gnorm;
  res.iters = iters;
  res.converged = gnorm <= gtol;
  if (region != nullptr && truth != nullptr) {
    res.region = region_membership(cur, *region, *truth);
    if (!res.region->pass)
      log_debug("maximize: solution outside the local region (diagnostic only)");
  }
  return res;
}

FitResult population_fit(const TruthSpec& truth, double mu2, const PenaltyConfig& pen,
                         const SolveOptions& opts) {
  return maximize(truth.noiseless(mu2), pen, opts);
}

VectorXd benchmark_ridge(const VectorXd& z_obs, const MatrixXd& a_star,
                         const SignalPenalty& pen_signal) {
  const int np = static_cast<int>(a_star.cols());
  MatrixXd normal = a_star.transpose() * a_star;
  normal += MatrixXd(pen_signal.g2_diag(np).asDiagonal());
  SpdFactor fact(normal, "benchmark_normal_matrix");
  return fact.solve(VectorXd(a_star.transpose() * z_obs));
}

VectorXd plugin_lse(const VectorXd& z_obs, const MatrixXd& a_hat) {
  SpdFactor fact(MatrixXd(a_hat.transpose() * a_hat), "plugin_normal_matrix");
  return fact.solve(VectorXd(a_hat.transpose() * z_obs));
}

double profile_value(const Observation& obs, const PenaltyConfig& pen,
                     const VectorXd& theta) {
  const int np = obs.p(), nq = obs.q();
  const auto sig = pen.signal.active(np);
  for (int j = 0; j < np; ++j)
    if (!sig[static_cast<size_t>(j)] && theta(j) != 0.0)
      throw InfeasibleParameterError("profile_value: nonzero truncated theta coordinate");
  const auto row = pen.op.row_active(nq);
  FullParameter p;
  p.theta = theta;
  p.a = MatrixXd::Zero(nq, np);
  for (int m = 0; m < nq; ++m) {
    if (!row[static_cast<size_t>(m)]) continue;
    const VectorXd d = VectorXd::Constant(np, obs.mu2) + pen.op.k2_row(m, np);
    const VectorXd rhs =
        obs.mu2 * obs.a_hat.row(m).transpose() + 0.5 * obs.z_obs(m) * theta;
    p.a.row(m) = rank1_diag_solve(d, theta, 0.5, rhs).transpose();
  }
  p.z = 0.5 * (obs.z_obs + p.a * theta);
  for (int m = 0; m < nq; ++m)
    if (!row[static_cast<size_t>(m)]) p.z(m) = 0;
  return objective(obs, p, pen);
}

}  // namespace eio
