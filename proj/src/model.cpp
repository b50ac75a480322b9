#include "eio/model.hpp"

#include "eio/block.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

namespace eio {

FullParameter FullParameter::zeros(int p, int q) {
  return {VectorXd::Zero(p), VectorXd::Zero(q), MatrixXd::Zero(q, p)};
}

VectorXd FullParameter::stacked() const {
  const int np = p(), nq = q();
  VectorXd v(np + nq + np * nq);
  v.head(np) = theta;
  v.segment(np, nq) = z;
  for (int m = 0; m < nq; ++m) v.segment(np + nq + m * np, np) = a.row(m).transpose();
  return v;
}

FullParameter FullParameter::from_stacked(const VectorXd& v, int p, int q) {
  if (v.size() != p + q + p * q) throw InvalidInputError("from_stacked: size mismatch");
  FullParameter out;
  out.theta = v.head(p);
  out.z = v.segment(p, q);
  out.a.resize(q, p);
  for (int m = 0; m < q; ++m) out.a.row(m) = v.segment(p + q + m * p, p).transpose();
  return out;
}

double Observation::mu() const { return std::sqrt(mu2); }

void Observation::validate() const {
  if (mu2 < 0) throw InvalidInputError("Observation: mu2 < 0");
  if (a_hat.rows() != z_obs.size()) throw InvalidInputError("Observation: dim mismatch");
}

LocalRegion LocalRegion::from_truth(const TruthSpec& truth, double mu, double delta0,
                                    double g0, double kappa) {
  LocalRegion r;
  r.d2 = truth.a_star.transpose() * truth.a_star;
  if (g0 > 0) r.d2 += g0 * g0 * MatrixXd::Identity(truth.p(), truth.p());
  r.n_eff = min_eigenvalue(r.d2);
  if (r.n_eff <= 0)
    throw InvalidInputError("LocalRegion: lambda_min(D^2) <= 0; supply g0 > 0");
  r.delta0 = delta0;
  r.kappa = kappa;
  r.mu = mu;
  r.radius = delta0 * mu * std::sqrt(r.n_eff);
  return r;
}

MatrixXd LocalRegion::d_sqrt() const { return sym_sqrt(d2); }
MatrixXd LocalRegion::d_inv_sqrt() const { return sym_inv_sqrt(d2); }

double LocalRegion::script_d_norm(const FullVec& u) const {
  const double t = u.theta.dot(d2 * u.theta);
  const double h = u.z.squaredNorm();
  const double a = mu * mu * u.a.squaredNorm();
  return std::sqrt(t + h + a);
}

static void check_dims(const Observation& obs, const FullParameter& p) {
  if (p.p() != obs.p() || p.q() != obs.q() || p.a.rows() != obs.q() || p.a.cols() != obs.p())
    throw InvalidInputError("model: observation/parameter dimension mismatch");
}

double objective(const Observation& obs, const FullParameter& p, const PenaltyConfig& pen) {
  check_dims(obs, p);
  const double fit_z = (obs.z_obs - p.z).squaredNorm();
  const double fit_a = (p.a - obs.a_hat).squaredNorm();
  const double structural = (p.z - p.a * p.theta).squaredNorm();
  return -0.5 * fit_z - 0.5 * obs.mu2 * fit_a - 0.5 * structural - penalty_value(pen, p);
}

FullVec gradient(const Observation& obs, const FullParameter& p, const PenaltyConfig& pen) {
  check_dims(obs, p);
  penalty_value(pen, p);  // feasibility check for truncated coordinates
  const int np = p.p(), nq = p.q();
  const VectorXd resid = p.z - p.a * p.theta;
  FullVec g;
  g.theta = p.a.transpose() * resid - pen.signal.g2_diag(np).cwiseProduct(p.theta);
  g.z = (obs.z_obs - p.z) - resid;
  g.a.resize(nq, np);
  const auto row_act = pen.op.row_active(nq);
  for (int m = 0; m < nq; ++m) {
    VectorXd gm = obs.mu2 * (obs.a_hat.row(m) - p.a.row(m)).transpose() +
                  resid(m) * p.theta -
                  pen.op.k2_row(m, np).cwiseProduct(p.a.row(m).transpose());
    g.a.row(m) = gm.transpose();
    if (!row_act[static_cast<size_t>(m)]) {
      g.a.row(m).setZero();
      g.z(m) = 0;
    }
  }
  const auto sig_act = pen.signal.active(np);
  for (int j = 0; j < np; ++j)
    if (!sig_act[static_cast<size_t>(j)]) g.theta(j) = 0;
  return g;
}

InfoMatrix hessian_blocks(const FullParameter& p, double mu2, const PenaltyConfig& pen) {
  const int np = p.p(), nq = p.q();
  InfoMatrix info;
  info.p = np;
  info.q = nq;
  info.mu2 = mu2;
  info.theta_ref = p.theta;
  info.penalized = true;
  info.theta_active = pen.signal.active(np);
  info.row_active = pen.op.row_active(nq);
  info.f_tt = p.a.transpose() * p.a;
  info.f_tt += MatrixXd(pen.signal.g2_diag(np).asDiagonal());
  info.f_tz = -p.a.transpose();
  info.f_ta.resize(static_cast<size_t>(nq));
  info.a_diag.resize(static_cast<size_t>(nq));
  const MatrixXd theta_outer = p.theta * p.theta.transpose();
  for (int m = 0; m < nq; ++m) {
    const double slack = p.a.row(m).dot(p.theta) - p.z(m);
    info.f_ta[static_cast<size_t>(m)] =
        slack * MatrixXd::Identity(np, np) + p.a.row(m).transpose() * p.theta.transpose();
    info.a_diag[static_cast<size_t>(m)] =
        theta_outer + mu2 * MatrixXd::Identity(np, np) +
        MatrixXd(pen.op.k2_row(m, np).asDiagonal());
  }
  return info;
}

MatrixXd InfoMatrix::dense() const {
  const int n = full_dim();
  MatrixXd m = MatrixXd::Zero(n, n);
  m.topLeftCorner(p, p) = f_tt;
  m.block(0, p, p, q) = f_tz;
  m.block(p, 0, q, p) = f_tz.transpose();
  m.block(p, p, q, q) = 2.0 * MatrixXd::Identity(q, q);
  for (int r = 0; r < q; ++r) {
    const int off = p + q + r * p;
    m.block(0, off, p, p) = f_ta[static_cast<size_t>(r)];
    m.block(off, 0, p, p) = f_ta[static_cast<size_t>(r)].transpose();
    m.block(p + r, off, 1, p) = -theta_ref.transpose();
    m.block(off, p + r, p, 1) = -theta_ref;
    m.block(off, off, p, p) = a_diag[static_cast<size_t>(r)];
  }
  return m;
}

bool InfoMatrix::any_mask() const {
  for (char c : theta_active)
    if (!c) return true;
  for (char c : row_active)
    if (!c) return true;
  return false;
}

double hessian_quadratic_form(const FullParameter& p, double mu2, const FullVec& u) {
  const VectorXd h = u.z;
  const VectorXd mix = p.a * u.theta + u.a * p.theta;
  const VectorXd resid = p.z - p.a * p.theta;
  return h.squaredNorm() + mu2 * u.a.squaredNorm() + (h - mix).squaredNorm() -
         2.0 * resid.dot(u.a * u.theta);
}

double third_directional(const FullParameter& p, const FullVec& u) {
  const VectorXd mix = u.a * p.theta + p.a * u.theta - u.z;
  return 6.0 * mix.dot(u.a * u.theta);
}

double fourth_directional(const FullVec& u) { return 12.0 * (u.a * u.theta).squaredNorm(); }

ScoreVector score(const Observation& obs, const TruthSpec& truth) {
  ScoreVector s;
  s.z_part = obs.z_obs - truth.image_star();
  s.a_part = obs.mu2 * (obs.a_hat - truth.a_star);
  return s;
}

RegionDiagnostic region_membership(const FullParameter& p, const LocalRegion& region,
                                   const TruthSpec& truth) {
  RegionDiagnostic d;
  const MatrixXd dsq = region.d_sqrt();
  const MatrixXd dis = region.d_inv_sqrt();
  d.d_theta_norm = (dsq * p.theta).norm();
  d.z_norm = p.z.norm();
  d.op_frobenius = ((p.a - truth.a_star) * dis).norm();
  d.pass = d.d_theta_norm <= region.radius && d.z_norm <= region.radius &&
           d.op_frobenius <= region.delta0;
  return d;
}

SmoothnessConstants smoothness_constants(const LocalRegion& region, double mu) {
  if (region.n_eff <= 0 || mu <= 0)
    throw InvalidInputError("smoothness_constants: need N > 0 and mu > 0");
  SmoothnessConstants c;
  c.tau3 = 4.5 / (std::sqrt(region.n_eff) * mu);
  c.tau4 = 3.0 / (region.n_eff * mu * mu);
  return c;
}

}  // namespace eio
