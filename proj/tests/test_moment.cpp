#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "knt/moment.hpp"

using namespace knt;

namespace {

const double kSqrt2 = std::sqrt(2.0);

std::mt19937_64 rng(777);

VectorXc random_cvec(int n) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  VectorXc v(n);
  for (int i = 0; i < n; ++i) v(i) = Complex(gauss(rng), gauss(rng));
  return v;
}

Eigen::MatrixXi random_weights(int k, int n, int bound) {
  std::uniform_int_distribution<int> unif(-bound, bound);
  if (n < k) n = k;
  while (true) {
    Eigen::MatrixXi w(k, n);
    for (int i = 0; i < k; ++i) {
      for (int j = 0; j < n; ++j) w(i, j) = unif(rng);
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(w.cast<double>());
    if (svd.singularValues().minCoeff() > 1e-9) return w;
  }
}

GroupAction circle_pm1() {
  return GroupAction::torus((Eigen::MatrixXi(1, 2) << 1, -1).finished());
}

Monomial mono(Complex coeff, std::initializer_list<int> exps) {
  Monomial m;
  m.coeff = coeff;
  m.exponents = Eigen::VectorXi(exps.size());
  int i = 0;
  for (int e : exps) m.exponents(i++) = e;
  return m;
}

// Phi(z1, z2) = (z1, z2, eps * z1^2) with outer weights (1, -1, 2).
SliceModel quadratic_model(double eps, double radius = 8.0) {
  GroupAction inner = circle_pm1();
  GroupAction outer = GroupAction::induced(
      inner, (Eigen::MatrixXi(1, 3) << 1, -1, 2).finished());
  std::vector<Polynomial> phi(3);
  phi[0].push_back(mono(1.0, {1, 0}));
  phi[1].push_back(mono(1.0, {0, 1}));
  phi[2].push_back(mono(eps, {2, 0}));
  return SliceModel(inner, outer, phi, radius);
}

}  // namespace

TEST_CASE("linear moment vanishes at the origin") {
  GroupAction a = circle_pm1();
  CHECK(linear_moment(a, VectorXc::Zero(2)).norm() == 0.0);
}

TEST_CASE("weights (1,-1) closed form: -(|a|^2-|b|^2)/(2 sqrt(2))") {
  GroupAction a = circle_pm1();
  for (int trial = 0; trial < 20; ++trial) {
    VectorXc v = random_cvec(2);
    double want = -(std::norm(v(0)) - std::norm(v(1))) / (2.0 * kSqrt2);
    MomentValue nu = linear_moment(a, v);
    CHECK(nu(0) == doctest::Approx(want).epsilon(1e-12));
  }
  // Zero exactly when |a| = |b|.
  VectorXc balanced(2);
  balanced << Complex(0.6, 0.8), Complex(0.0, -1.0);
  CHECK(linear_moment(a, balanced).norm() < 1e-15);
}

TEST_CASE("weight-0 slot contributes nothing to the moment") {
  GroupAction a =
      GroupAction::torus((Eigen::MatrixXi(1, 3) << 1, -1, 0).finished());
  VectorXc v(3);
  v << 0.0, 0.0, Complex(2.0, -1.0);
  CHECK(linear_moment(a, v).norm() < 1e-15);
}

TEST_CASE("moment map is homogeneous of degree 2") {
  for (int trial = 0; trial < 30; ++trial) {
    std::uniform_int_distribution<int> dim_k(1, 3), dim_n(2, 6);
    int k = dim_k(rng), n = std::max(dim_n(rng), k);
    GroupAction a = GroupAction::torus(random_weights(k, n, 5));
    VectorXc v = random_cvec(n);
    std::uniform_real_distribution<double> unif(0.1, 3.0);
    double t = unif(rng);
    MomentValue lhs = linear_moment(a, VectorXc(t * v));
    MomentValue rhs = t * t * linear_moment(a, v);
    CHECK((lhs - rhs).norm() <= 1e-12 * rhs.norm());
  }
}

TEST_CASE("moment map is invariant along real torus orbits") {
  GroupAction a =
      GroupAction::torus((Eigen::MatrixXi(2, 4) << 1, -1, 0, 2, 0, 1, 1, -1)
                             .finished());
  std::uniform_real_distribution<double> unif(-2.0, 2.0);
  for (int trial = 0; trial < 20; ++trial) {
    StatePoint x(random_cvec(4));
    Eigen::VectorXd xi(2);
    xi << unif(rng), unif(rng);
    StatePoint y = exp_action(a, xi, unif(rng), x, FlowDirection::real);
    CHECK((linear_moment(a, y.coords) - linear_moment(a, x.coords)).norm() <
          1e-12);
  }
}

TEST_CASE("moment derivative at the origin vanishes") {
  GroupAction a = circle_pm1();
  CHECK(moment_derivative(a, VectorXc::Zero(2), random_cvec(2)).norm() == 0.0);
}

TEST_CASE("Euler identity: d nu_v(v) = 2 nu(v)") {
  for (int trial = 0; trial < 20; ++trial) {
    std::uniform_int_distribution<int> dim_k(1, 3), dim_n(2, 6);
    int k = dim_k(rng), n = std::max(dim_n(rng), k);
    GroupAction a = GroupAction::torus(random_weights(k, n, 5));
    VectorXc v = random_cvec(n);
    MomentValue lhs = moment_derivative(a, v, v);
    MomentValue rhs = 2.0 * linear_moment(a, v);
    CHECK((lhs - rhs).norm() <= 1e-12 * (1.0 + rhs.norm()));
  }
}

TEST_CASE("moment derivative agrees with central finite differences") {
  const double h = 1e-5;
  for (int trial = 0; trial < 200; ++trial) {
    std::uniform_int_distribution<int> dim_k(1, 3), dim_n(2, 6);
    int k = dim_k(rng), n = std::max(dim_n(rng), k);
    GroupAction a = GroupAction::torus(random_weights(k, n, 5));
    VectorXc v = random_cvec(n), u = random_cvec(n);
    MomentValue fd = (linear_moment(a, VectorXc(v + h * u)) -
                      linear_moment(a, VectorXc(v - h * u))) /
                     (2.0 * h);
    CHECK((moment_derivative(a, v, u) - fd).norm() < 1e-8);
  }
}

TEST_CASE("defining identity <d nu_v(u), xi> = Omega0(sigma_v(xi), u)") {
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::uniform_int_distribution<int> dim_k(1, 3), dim_n(2, 6);
    int k = dim_k(rng), n = std::max(dim_n(rng), k);
    GroupAction a = GroupAction::torus(random_weights(k, n, 5));
    VectorXc v = random_cvec(n), u = random_cvec(n);
    Eigen::VectorXd xi(k);
    for (int j = 0; j < k; ++j) xi(j) = gauss(rng);
    double lhs = moment_derivative(a, v, u).dot(xi);
    double rhs = omega0(a.apply(xi, v), u);
    CHECK(std::abs(lhs - rhs) < 1e-8);
  }
}

TEST_CASE("slice moment at the base point is zero") {
  SliceModel model = quadratic_model(0.25);
  CHECK(model.moment(StatePoint(VectorXc::Zero(2))).norm() < 1e-15);
}

TEST_CASE("identity model reproduces the linear moment exactly") {
  GroupAction a = circle_pm1();
  SliceModel model = identity_model(a, 8.0);
  for (int trial = 0; trial < 20; ++trial) {
    StatePoint x(random_cvec(2));
    CHECK((model.moment(x) - linear_moment(a, x.coords)).norm() == 0.0);
  }
}

TEST_CASE("quadratic model: exact quartic Taylor defect") {
  const double eps = 0.3;
  SliceModel model = quadratic_model(eps);
  for (int trial = 0; trial < 10; ++trial) {
    StatePoint v(random_cvec(2));
    std::uniform_real_distribution<double> unif(0.01, 0.5);
    double t = unif(rng);
    // Phi(tv) = (t v1, t v2, eps t^2 v1^2): the only deviation from the
    // Hessian term is the quartic outer contribution of the third slot.
    // The algebra basis is fixed by the inner action, so the outer weights
    // are scaled by the same 1/sqrt(2) as the inner ones.
    double want = t * t * t * t * eps * eps *
                  std::pow(std::abs(v.coords(0)), 4) / kSqrt2;
    CHECK(model.taylor_defect(v, t) == doctest::Approx(want).epsilon(1e-9));
  }
}

TEST_CASE("quadratic model: mu(tv) closed form from polynomial expansion") {
  const double eps = 0.2;
  SliceModel model = quadratic_model(eps);
  StatePoint v(random_cvec(2));
  double t = 0.3;
  StatePoint tv(VectorXc(t * v.coords));
  double a2 = std::norm(v.coords(0)), b2 = std::norm(v.coords(1));
  double want = -(t * t * a2 - t * t * b2 +
                  2.0 * eps * eps * t * t * t * t * a2 * a2) /
                (2.0 * kSqrt2);
  CHECK(model.moment(tv)(0) == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("identity model has identically zero Taylor defect") {
  SliceModel model = identity_model(circle_pm1(), 8.0);
  StatePoint v(random_cvec(2));
  for (double t : {0.001, 0.01, 0.1, 1.0}) {
    CHECK(model.taylor_defect(v, t) < 1e-14);
  }
}

TEST_CASE("taylor defect decays at least cubically") {
  SliceModel model = quadratic_model(0.5);
  StatePoint v(random_cvec(2));
  std::vector<std::pair<double, double>> pts;
  for (int i = 0; i < 20; ++i) {
    double t = 1e-1 * std::pow(1e-2, i / 19.0);
    double d = model.taylor_defect(v, t);
    if (d > 1e-300) pts.emplace_back(std::log(t), std::log(d));
    CHECK(d / (t * t * t) < 1.0);  // bounded t^3 ratio on this model
  }
  REQUIRE(pts.size() >= 2);
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (auto& [x, y] : pts) sx += x, sy += y, sxx += x * x, sxy += x * y;
  double n = static_cast<double>(pts.size());
  double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  CHECK(slope >= 3.0 - 1e-6);
}

TEST_CASE("hessian moment cross-checks against small-t finite differences") {
  SliceModel model = quadratic_model(0.4);
  StatePoint v(random_cvec(2));
  double t = 1e-4;
  MomentValue fd = (2.0 / (t * t)) * model.moment(StatePoint(VectorXc(t * v.coords)));
  CHECK((fd - model.hessian_moment(v.coords)).norm() < 1e-6);
}

TEST_CASE("pulled-back form is alternating") {
  SliceModel model = quadratic_model(0.25);
  StatePoint x(random_cvec(2));
  VectorXc u = random_cvec(2), w = random_cvec(2);
  CHECK(model.pulled_back_form(x, u, u) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(model.pulled_back_form(x, u, w) ==
        doctest::Approx(-model.pulled_back_form(x, w, u)).epsilon(1e-12));
}

TEST_CASE("identity model pulls back the standard form") {
  SliceModel model = identity_model(circle_pm1(), 8.0);
  StatePoint x(random_cvec(2));
  VectorXc u = random_cvec(2), w = random_cvec(2);
  CHECK(model.pulled_back_form(x, u, w) ==
        doctest::Approx(omega0(u, w)).epsilon(1e-14));
}

TEST_CASE("slice moment satisfies the defining identity against the form") {
  SliceModel model = quadratic_model(0.35);
  const double h = 1e-5;
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int trial = 0; trial < 40; ++trial) {
    VectorXc x = random_cvec(2);
    x *= 0.5 / std::max(1.0, x.norm());
    VectorXc u = random_cvec(2);
    Eigen::VectorXd xi(1);
    xi << gauss(rng);
    MomentValue fd = (model.moment(StatePoint(VectorXc(x + h * u))) -
                      model.moment(StatePoint(VectorXc(x - h * u)))) /
                     (2.0 * h);
    double lhs = fd.dot(xi);
    double rhs = model.pulled_back_form(StatePoint(x),
                                        model.inner().apply(xi, x), u);
    CHECK(std::abs(lhs - rhs) < 1e-8);
  }
}

TEST_CASE("points outside the model ball are refused") {
  SliceModel model = quadratic_model(0.25, 1.0);
  VectorXc big(2);
  big << 3.0, 0.0;
  CHECK_THROWS_WITH_AS(model.moment(StatePoint(big)),
                       doctest::Contains("OutsideBall"), Error);
  CHECK_THROWS_WITH_AS(model.taylor_defect(StatePoint(big), 1.0),
                       doctest::Contains("OutsideBall"), Error);
}

TEST_CASE("slice model construction validates equivariance") {
  GroupAction inner = circle_pm1();
  GroupAction outer = GroupAction::induced(
      inner, (Eigen::MatrixXi(1, 3) << 1, -1, 2).finished());
  // z2^2 has weight -2 but lands in the weight-2 slot: not equivariant.
  std::vector<Polynomial> phi(3);
  phi[0].push_back(mono(1.0, {1, 0}));
  phi[1].push_back(mono(1.0, {0, 1}));
  phi[2].push_back(mono(0.3, {0, 2}));
  CHECK_THROWS_WITH_AS(SliceModel(inner, outer, phi, 4.0),
                       doctest::Contains("equivariant"), Error);
}

TEST_CASE("slice model construction requires an injective differential") {
  GroupAction inner = circle_pm1();
  GroupAction outer = GroupAction::induced(
      inner, (Eigen::MatrixXi(1, 3) << 1, -1, 2).finished());
  // Second coordinate never appears: dPhi_0 kills it.
  std::vector<Polynomial> phi(3);
  phi[0].push_back(mono(1.0, {1, 0}));
  phi[2].push_back(mono(0.3, {2, 0}));
  CHECK_THROWS_AS(SliceModel(inner, outer, phi, 4.0), Error);
}

TEST_CASE("slice q operator matches the plain operator on the identity model") {
  GroupAction a = circle_pm1();
  SliceModel model = identity_model(a, 8.0);
  StatePoint x(random_cvec(2));
  QOperator lhs = slice_q_operator(model, x);
  QOperator rhs = q_operator(a, x);
  CHECK((lhs.q - rhs.q).norm() < 1e-12);
  CHECK(lhs.lambda == doctest::Approx(rhs.lambda).epsilon(1e-12));
}
