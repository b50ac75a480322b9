#include "eio/penalty.hpp"

#include "eio/model.hpp"

#include <cmath>
#include <utility>

namespace eio {

SignalPenalty SignalPenalty::none() { return SignalPenalty{}; }

SignalPenalty SignalPenalty::ridge(double g2) {
  if (g2 < 0) throw InvalidInputError("SignalPenalty::ridge: g2 < 0");
  SignalPenalty s;
  s.kind_ = Kind::Ridge;
  s.g2_ = g2;
  return s;
}

SignalPenalty SignalPenalty::diagonal(VectorXd g2) {
  if ((g2.array() < 0).any()) throw InvalidInputError("SignalPenalty::diagonal: negative entry");
  SignalPenalty s;
  s.kind_ = Kind::Diagonal;
  s.g2_vec_ = std::move(g2);
  return s;
}

SignalPenalty SignalPenalty::roughness(double w2, double beta) {
  if (w2 < 0) throw InvalidInputError("SignalPenalty::roughness: w2 < 0");
  SignalPenalty s;
  s.kind_ = Kind::Roughness;
  s.w2_ = w2;
  s.beta_ = beta;
  return s;
}

SignalPenalty SignalPenalty::truncation(int j_keep) {
  if (j_keep < 0) throw InvalidInputError("SignalPenalty::truncation: J < 0");
  SignalPenalty s;
  s.kind_ = Kind::Truncation;
  s.j_keep_ = j_keep;
  return s;
}

VectorXd SignalPenalty::g2_diag(int p) const {
  switch (kind_) {
    case Kind::None:
    case Kind::Truncation:
      return VectorXd::Zero(p);
    case Kind::Ridge:
      return VectorXd::Constant(p, g2_);
    case Kind::Diagonal:
      if (g2_vec_.size() != p) throw InvalidInputError("SignalPenalty: g2 length != p");
      return g2_vec_;
    case Kind::Roughness: {
      VectorXd g(p);
      for (int j = 0; j < p; ++j) g(j) = w2_ * std::pow(double(j + 1), 2.0 * beta_);
      return g;
    }
  }
  return VectorXd::Zero(p);
}

std::vector<char> SignalPenalty::active(int p) const {
  std::vector<char> m(static_cast<size_t>(p), 1);
  if (kind_ == Kind::Truncation)
    for (int j = j_keep_; j < p; ++j) m[static_cast<size_t>(j)] = 0;
  return m;
}

OperatorPenalty OperatorPenalty::none() { return OperatorPenalty{}; }

OperatorPenalty OperatorPenalty::elementwise(MatrixXd k2) {
  if ((k2.array() < 0).any()) throw InvalidInputError("OperatorPenalty::elementwise: negative entry");
  OperatorPenalty o;
  o.kind_ = Kind::Elementwise;
  o.k2_mat_ = std::move(k2);
  return o;
}

OperatorPenalty OperatorPenalty::row_scalar(VectorXd k2) {
  if ((k2.array() < 0).any()) throw InvalidInputError("OperatorPenalty::row_scalar: negative entry");
  OperatorPenalty o;
  o.kind_ = Kind::RowScalar;
  o.k2_vec_ = std::move(k2);
  return o;
}

OperatorPenalty OperatorPenalty::row_truncation(int m_keep) {
  if (m_keep < 0) throw InvalidInputError("OperatorPenalty::row_truncation: M < 0");
  OperatorPenalty o;
  o.kind_ = Kind::RowTruncation;
  o.m_keep_ = m_keep;
  return o;
}

VectorXd OperatorPenalty::k2_row(int m, int p) const {
  switch (kind_) {
    case Kind::None:
    case Kind::RowTruncation:
      return VectorXd::Zero(p);
    case Kind::Elementwise:
      if (k2_mat_.cols() != p || m >= k2_mat_.rows())
        throw InvalidInputError("OperatorPenalty: k2 matrix shape mismatch");
      return k2_mat_.row(m).transpose();
    case Kind::RowScalar:
      if (m >= k2_vec_.size()) throw InvalidInputError("OperatorPenalty: k2 vector too short");
      return VectorXd::Constant(p, k2_vec_(m));
  }
  return VectorXd::Zero(p);
}

std::vector<char> OperatorPenalty::row_active(int q) const {
  std::vector<char> m(static_cast<size_t>(q), 1);
  if (kind_ == Kind::RowTruncation)
    for (int r = m_keep_; r < q; ++r) m[static_cast<size_t>(r)] = 0;
  return m;
}

double penalty_value(const PenaltyConfig& pen, const FullParameter& p) {
  const int np = p.p(), nq = p.q();
  const auto sig_active = pen.signal.active(np);
  const auto row_act = pen.op.row_active(nq);
  double v = 0;
  const VectorXd g2 = pen.signal.g2_diag(np);
  for (int j = 0; j < np; ++j) {
    if (!sig_active[static_cast<size_t>(j)]) {
      if (p.theta(j) != 0.0)
        throw InfeasibleParameterError("penalty_value: nonzero truncated theta coordinate");
      continue;
    }
    v += 0.5 * g2(j) * p.theta(j) * p.theta(j);
  }
  for (int m = 0; m < nq; ++m) {
    if (!row_act[static_cast<size_t>(m)]) {
      if (p.a.row(m).cwiseAbs().maxCoeff() != 0.0)
        throw InfeasibleParameterError("penalty_value: nonzero truncated operator row");
      continue;
    }
    const VectorXd k2 = pen.op.k2_row(m, np);
    for (int j = 0; j < np; ++j) v += 0.5 * k2(j) * p.a(m, j) * p.a(m, j);
  }
  return v;
}

ReducedProblem reduce_truncation(const Observation& obs, int j_keep, int m_keep) {
  if (j_keep < 1 || j_keep > obs.p() || m_keep < 1 || m_keep > obs.q())
    throw InvalidInputError("reduce_truncation: indices out of range");
  ReducedProblem r;
  r.j_keep = j_keep;
  r.m_keep = m_keep;
  r.full_p = obs.p();
  r.full_q = obs.q();
  r.z_obs = obs.z_obs.head(m_keep);
  r.a_hat = obs.a_hat.topLeftCorner(m_keep, j_keep);
  r.mu2 = obs.mu2;
  return r;
}

VectorXd ReducedProblem::embed_theta(const VectorXd& reduced) const {
  if (reduced.size() != j_keep) throw InvalidInputError("embed_theta: size mismatch");
  VectorXd full = VectorXd::Zero(full_p);
  full.head(j_keep) = reduced;
  return full;
}

MatrixXd ReducedProblem::embed_a(const MatrixXd& reduced) const {
  if (reduced.rows() != m_keep || reduced.cols() != j_keep)
    throw InvalidInputError("embed_a: size mismatch");
  MatrixXd full = MatrixXd::Zero(full_q, full_p);
  full.topLeftCorner(m_keep, j_keep) = reduced;
  return full;
}

int ridge_cutoff_index(const VectorXd& eigs_desc, double kappa, double g2) {
  for (Eigen::Index j = 1; j < eigs_desc.size(); ++j)
    if (eigs_desc(j) > eigs_desc(j - 1))
      throw InvalidInputError("ridge_cutoff_index: eigenvalues not descending");
  if ((eigs_desc.array() < 0).any())
    throw InvalidInputError("ridge_cutoff_index: negative eigenvalue");
  const double threshold = kappa * kappa * g2;
  int j_g = 0;
  for (Eigen::Index j = 0; j < eigs_desc.size(); ++j) {
    const bool qualifies = (g2 == 0.0) ? (eigs_desc(j) > 0) : (eigs_desc(j) >= threshold);
    if (qualifies) j_g = static_cast<int>(j) + 1;
  }
  return j_g;
}

}  // namespace eio
