#include "knt/moment.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <cmath>
#include <random>

namespace knt {

MomentValue linear_moment(const GroupAction& action, const VectorXc& v) {
  MatrixXc cols = action.action_columns(v);
  MomentValue out(action.algebra_dim());
  for (int j = 0; j < action.algebra_dim(); ++j) {
    out(j) = 0.5 * cols.col(j).dot(v).imag();  // dot conjugates the first arg
  }
  return out;
}

MomentValue moment_derivative(const GroupAction& action, const VectorXc& v,
                              const VectorXc& u) {
  MatrixXc av = action.action_columns(v);
  MatrixXc au = action.action_columns(u);
  MomentValue out(action.algebra_dim());
  for (int j = 0; j < action.algebra_dim(); ++j) {
    out(j) = 0.5 * (au.col(j).dot(v).imag() + av.col(j).dot(u).imag());
  }
  return out;
}

double omega0(const VectorXc& u, const VectorXc& w) {
  return u.dot(w).imag();
}

namespace {

Complex eval_monomial(const Monomial& m, const VectorXc& x) {
  Complex v = m.coeff;
  for (int i = 0; i < m.exponents.size(); ++i) {
    for (int e = 0; e < m.exponents(i); ++e) v *= x(i);
  }
  return v;
}

}  // namespace

SliceModel::SliceModel(GroupAction inner, GroupAction outer,
                       std::vector<Polynomial> phi, double ball_radius,
                       unsigned seed)
    : inner_(std::move(inner)),
      outer_(std::move(outer)),
      phi_(std::move(phi)),
      ball_radius_(ball_radius) {
  if (static_cast<int>(phi_.size()) != outer_.ambient_dim()) {
    fail(ErrorCode::DimensionMismatch, "phi output count != outer dimension");
  }
  if (inner_.algebra_dim() != outer_.algebra_dim()) {
    fail(ErrorCode::DimensionMismatch, "inner/outer algebra dimension mismatch");
  }
  for (const auto& p : phi_) {
    for (const auto& m : p) {
      if (m.exponents.size() != inner_.ambient_dim()) {
        fail(ErrorCode::DimensionMismatch, "monomial exponent length");
      }
    }
  }
  dphi0_ = jacobian(VectorXc::Zero(inner_.ambient_dim()));
  validate(seed);
}

VectorXc SliceModel::eval(const VectorXc& x) const {
  VectorXc out(outer_.ambient_dim());
  for (int m = 0; m < out.size(); ++m) {
    Complex acc = 0.0;
    for (const auto& term : phi_[m]) acc += eval_monomial(term, x);
    out(m) = acc;
  }
  return out;
}

MatrixXc SliceModel::jacobian(const VectorXc& x) const {
  MatrixXc jac = MatrixXc::Zero(outer_.ambient_dim(), inner_.ambient_dim());
  for (int m = 0; m < jac.rows(); ++m) {
    for (const auto& term : phi_[m]) {
      for (int i = 0; i < jac.cols(); ++i) {
        int e = term.exponents(i);
        if (e == 0) continue;
        Monomial d = term;
        d.coeff *= static_cast<double>(e);
        d.exponents(i) -= 1;
        jac(m, i) += eval_monomial(d, x);
      }
    }
  }
  return jac;
}

void SliceModel::check_inside(const StatePoint& x) const {
  if (x.norm() > ball_radius_ * (1.0 + 1e-12)) {
    fail(ErrorCode::OutsideBall, "||x|| = " + std::to_string(x.norm()) +
                                     " exceeds ball radius " +
                                     std::to_string(ball_radius_));
  }
}

MomentValue SliceModel::moment(const StatePoint& x) const {
  check_inside(x);
  return linear_moment(outer_, eval(x.coords));
}

double SliceModel::pulled_back_form(const StatePoint& x, const VectorXc& u,
                                    const VectorXc& w) const {
  check_inside(x);
  MatrixXc jac = jacobian(x.coords);
  return omega0(jac * u, jac * w);
}

MomentValue SliceModel::hessian_moment(const VectorXc& v) const {
  VectorXc pushed = dphi0_ * v;
  return 2.0 * linear_moment(outer_, pushed);
}

double SliceModel::taylor_defect(const StatePoint& v, double t) const {
  StatePoint tv(VectorXc(t * v.coords));
  check_inside(tv);
  MomentValue mu = moment(tv);
  MomentValue hess = hessian_moment(v.coords);
  return (mu - 0.5 * t * t * hess).norm();
}

void SliceModel::validate(unsigned seed) {
  const int n = inner_.ambient_dim();
  const int k = inner_.algebra_dim();

  // Base point: Phi(0) must be a zero of the outer linear moment map.
  VectorXc phi0 = eval(VectorXc::Zero(n));
  if (linear_moment(outer_, phi0).norm() > 1e-10) {
    fail(ErrorCode::InternalInconsistency,
         "Phi(0) is not a zero of the outer moment map");
  }

  // dPhi_0 injective.
  Eigen::JacobiSVD<MatrixXc> svd(dphi0_);
  if (svd.singularValues().size() < n ||
      svd.singularValues()(n - 1) < 1e-10) {
    fail(ErrorCode::RankDeficient, "dPhi_0 is not injective");
  }

  // Pulled-back form nondegenerate at 0: Omega_0(u, w) = Im <Ju, Jw> as a
  // real 2N x 2N antisymmetric matrix must have full rank.
  Eigen::MatrixXd form(2 * n, 2 * n);
  for (int a = 0; a < 2 * n; ++a) {
    Eigen::VectorXd ea = Eigen::VectorXd::Zero(2 * n);
    ea(a) = 1.0;
    VectorXc ua = dphi0_ * complexify(ea);
    for (int b = 0; b < 2 * n; ++b) {
      Eigen::VectorXd eb = Eigen::VectorXd::Zero(2 * n);
      eb(b) = 1.0;
      form(a, b) = omega0(ua, dphi0_ * complexify(eb));
    }
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> fsvd(form);
  if (fsvd.singularValues()(2 * n - 1) < 1e-10) {
    fail(ErrorCode::RankDeficient, "pulled-back form degenerate at 0");
  }

  // Equivariance on random samples inside the ball.
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  double worst = 0.0;
  for (int trial = 0; trial < 24; ++trial) {
    VectorXc x(n);
    for (int i = 0; i < n; ++i) x(i) = Complex(gauss(rng), gauss(rng));
    double nrm = x.norm();
    if (nrm > 0) x *= (0.5 * ball_radius_ / nrm) * std::abs(unif(rng));
    Eigen::VectorXd xi(k);
    for (int j = 0; j < k; ++j) xi(j) = unif(rng);
    double s = unif(rng);

    StatePoint moved =
        exp_action(inner_, xi, s, StatePoint(x), FlowDirection::real);
    VectorXc lhs = eval(moved.coords);
    StatePoint rhs = exp_action(outer_, xi, s, StatePoint(eval(x)),
                                FlowDirection::real);
    worst = std::max(worst, (lhs - rhs.coords).norm() /
                                std::max(1.0, rhs.coords.norm()));
  }
  equivariance_residual_ = worst;
  if (worst > 1e-9) {
    fail(ErrorCode::InternalInconsistency,
         "slice map is not equivariant, residual " + std::to_string(worst));
  }
}

SliceModel identity_model(const GroupAction& action, double ball_radius) {
  std::vector<Polynomial> phi(action.ambient_dim());
  for (int m = 0; m < action.ambient_dim(); ++m) {
    Monomial mono;
    mono.coeff = 1.0;
    mono.exponents = Eigen::VectorXi::Zero(action.ambient_dim());
    mono.exponents(m) = 1;
    phi[m].push_back(mono);
  }
  return SliceModel(action, action, std::move(phi), ball_radius);
}

QOperator slice_q_operator(const SliceModel& model, const StatePoint& x,
                           double rank_tol) {
  const GroupAction& inner = model.inner();
  StabilizerData stab = stabilizer(inner, x, rank_tol);
  const int m = inner.algebra_dim() - stab.dim;
  if (m == 0) {
    fail(ErrorCode::EmptyComplement, "stabilizer is the whole algebra");
  }
  MatrixXc jac = model.jacobian(x.coords);
  MatrixXc pushed = jac * inner.action_columns(x.coords);  // M x k
  Eigen::MatrixXd sigma(2 * model.outer().ambient_dim(), inner.algebra_dim());
  for (int j = 0; j < inner.algebra_dim(); ++j) {
    sigma.col(j) = realify(pushed.col(j));
  }
  Eigen::MatrixXd se = sigma * stab.complement;
  QOperator out;
  out.q = se.transpose() * se;
  out.complement = stab.complement;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(out.q);
  out.lambda = 1.0 / es.eigenvalues()(0);
  return out;
}

}  // namespace knt
