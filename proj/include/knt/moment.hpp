#ifndef KNT_MOMENT_HPP
#define KNT_MOMENT_HPP

#include <vector>

#include "knt/algebra.hpp"

namespace knt {

/// Coordinates of an element of the algebra in the orthonormal basis; the
/// trace-form norm is the Euclidean norm of the coefficient vector.
using MomentValue = Eigen::VectorXd;

/// nu(v)_j = 1/2 Im <A_j v, v>, conjugate-linear in the first slot.
MomentValue linear_moment(const GroupAction& action, const VectorXc& v);
inline MomentValue linear_moment(const GroupAction& action, const StatePoint& v) {
  return linear_moment(action, v.coords);
}

/// d nu_v(u); satisfies <d nu_v(u), xi> = Omega_0(sigma_v(xi), u).
MomentValue moment_derivative(const GroupAction& action, const VectorXc& v,
                              const VectorXc& u);

/// The linear symplectic form Omega_0(u, w) = Im <u, w>.
double omega0(const VectorXc& u, const VectorXc& w);

/// One term of a holomorphic polynomial map: coeff * prod z_i^{exponents_i}.
struct Monomial {
  Complex coeff;
  Eigen::VectorXi exponents;
};

using Polynomial = std::vector<Monomial>;

/// An equivariant polynomial embedding of a ball in the inner representation
/// space into a larger representation, with the pulled-back symplectic form
/// and moment map.
class SliceModel {
 public:
  /// Validates equivariance, the base-point moment zero, injectivity of the
  /// differential at 0, and nondegeneracy of the pulled-back form there.
  SliceModel(GroupAction inner, GroupAction outer, std::vector<Polynomial> phi,
             double ball_radius, unsigned seed = 0);

  const GroupAction& inner() const { return inner_; }
  const GroupAction& outer() const { return outer_; }
  const std::vector<Polynomial>& phi() const { return phi_; }
  double ball_radius() const { return ball_radius_; }

  VectorXc eval(const VectorXc& x) const;
  /// Complex M x N Jacobian of the holomorphic map.
  MatrixXc jacobian(const VectorXc& x) const;

  /// mu(x) = nu_W(Phi(x)). Refuses points outside the ball.
  MomentValue moment(const StatePoint& x) const;

  /// Omega_x(u, w) = Omega_W(dPhi_x u, dPhi_x w).
  double pulled_back_form(const StatePoint& x, const VectorXc& u,
                          const VectorXc& w) const;

  /// Second-derivative coefficient of mu(tv) at t=0: the moment map of the
  /// linearized action through dPhi_0, nu1(v)_j = Im <A'_j dPhi_0 v, dPhi_0 v>.
  MomentValue hessian_moment(const VectorXc& v) const;

  /// || mu(tv) - (t^2/2) nu1(v) ||.
  double taylor_defect(const StatePoint& v, double t) const;

  /// Max equivariance residual observed during validation.
  double equivariance_residual() const { return equivariance_residual_; }

 private:
  void check_inside(const StatePoint& x) const;
  void validate(unsigned seed);

  GroupAction inner_;
  GroupAction outer_;
  std::vector<Polynomial> phi_;
  double ball_radius_;
  MatrixXc dphi0_;
  double equivariance_residual_ = 0.0;
};

/// The identity slice (Phi = inclusion) for a linear action.
SliceModel identity_model(const GroupAction& action, double ball_radius);

/// Q_x of the pulled-back geometry: Q(eta, xi) = Re <dPhi_x sigma_x(eta),
/// dPhi_x sigma_x(xi)>_W on the complement of the inner stabilizer of x.
QOperator slice_q_operator(const SliceModel& model, const StatePoint& x,
                           double rank_tol = kDefaultRankTol);

}  // namespace knt

#endif
