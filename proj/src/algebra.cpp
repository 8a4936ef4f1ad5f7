#include "knt/algebra.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <numeric>

namespace knt {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonAntiHermitian: return "NonAntiHermitian";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::EmptyComplement: return "EmptyComplement";
    case ErrorCode::IrrationalSpectrum: return "IrrationalSpectrum";
    case ErrorCode::OutsideBall: return "OutsideBall";
    case ErrorCode::BallExitsModel: return "BallExitsModel";
    case ErrorCode::HypothesisFailed: return "HypothesisFailed";
    case ErrorCode::OrthogonalityFailed: return "OrthogonalityFailed";
    case ErrorCode::LeftBall: return "LeftBall";
    case ErrorCode::Stagnation: return "Stagnation";
    case ErrorCode::MaxIterExceeded: return "MaxIterExceeded";
    case ErrorCode::OracleMismatch: return "OracleMismatch";
    case ErrorCode::NoLimit: return "NoLimit";
    case ErrorCode::NeverSatisfied: return "NeverSatisfied";
    case ErrorCode::PreconditionFailed: return "PreconditionFailed";
    case ErrorCode::InternalInconsistency: return "InternalInconsistency";
    case ErrorCode::SchemaMismatch: return "SchemaMismatch";
    case ErrorCode::ParseError: return "ParseError";
  }
  return "Unknown";
}

double trace_form(const MatrixXc& a, const MatrixXc& b) {
  return -((a * b).trace()).real();
}

namespace {

void require_anti_hermitian(const MatrixXc& g, double tol) {
  double defect = (g + g.adjoint()).norm();
  if (defect > tol) {
    fail(ErrorCode::NonAntiHermitian,
         "generator has ||G + G^dagger|| = " + std::to_string(defect));
  }
}

double closure_residual_of(const std::vector<MatrixXc>& basis) {
  const int k = static_cast<int>(basis.size());
  double worst = 0.0;
  for (int i = 0; i < k; ++i) {
    for (int j = i + 1; j < k; ++j) {
      MatrixXc bracket = basis[i] * basis[j] - basis[j] * basis[i];
      MatrixXc rem = bracket;
      for (int m = 0; m < k; ++m) {
        rem -= trace_form(bracket, basis[m]) * basis[m];
      }
      worst = std::max(worst, rem.norm());
    }
  }
  return worst;
}

}  // namespace

LieAlgebraBasis orthonormalize(const std::vector<MatrixXc>& generators) {
  const int k = static_cast<int>(generators.size());
  if (k == 0) fail(ErrorCode::RankDeficient, "empty generator list");
  for (const auto& g : generators) require_anti_hermitian(g, 1e-8);

  LieAlgebraBasis out;
  out.transform = Eigen::MatrixXd::Zero(k, k);
  double scale = 0.0;
  for (const auto& g : generators) scale = std::max(scale, g.norm());

  for (int i = 0; i < k; ++i) {
    MatrixXc v = generators[i];
    Eigen::VectorXd row = Eigen::VectorXd::Zero(k);
    row(i) = 1.0;
    for (int j = 0; j < static_cast<int>(out.generators.size()); ++j) {
      double c = trace_form(v, out.generators[j]);
      v -= c * out.generators[j];
      row -= c * out.transform.row(j).transpose();
    }
    // Re-orthogonalize once; classical Gram-Schmidt alone loses digits.
    for (int j = 0; j < static_cast<int>(out.generators.size()); ++j) {
      double c = trace_form(v, out.generators[j]);
      v -= c * out.generators[j];
      row -= c * out.transform.row(j).transpose();
    }
    double nrm = std::sqrt(std::max(0.0, trace_form(v, v)));
    if (nrm < 1e-10 * std::max(1.0, scale)) {
      fail(ErrorCode::RankDeficient,
           "generator " + std::to_string(i) + " is dependent");
    }
    out.generators.push_back(v / nrm);
    out.transform.row(i) = (row / nrm).transpose();
  }
  out.closure_residual = closure_residual_of(out.generators);
  return out;
}

GroupAction GroupAction::torus(const Eigen::MatrixXi& weights) {
  const int k = static_cast<int>(weights.rows());
  const int n = static_cast<int>(weights.cols());
  if (k == 0 || n == 0) fail(ErrorCode::DimensionMismatch, "empty weights");

  std::vector<MatrixXc> gens;
  gens.reserve(k);
  for (int j = 0; j < k; ++j) {
    MatrixXc g = MatrixXc::Zero(n, n);
    for (int m = 0; m < n; ++m) g(m, m) = Complex(0.0, weights(j, m));
    gens.push_back(std::move(g));
  }
  LieAlgebraBasis basis = orthonormalize(gens);

  GroupAction a;
  a.k_ = k;
  a.n_ = n;
  a.torus_ = true;
  a.lattice_ = weights;
  a.transform_ = basis.transform;
  a.ortho_weights_ = basis.transform * weights.cast<double>();
  a.rep_ = basis.generators;
  a.basis_ = std::move(basis);
  return a;
}

GroupAction GroupAction::matrix_rep(const std::vector<MatrixXc>& generators) {
  LieAlgebraBasis basis = orthonormalize(generators);
  GroupAction a;
  a.k_ = basis.dim();
  a.n_ = static_cast<int>(basis.generators.front().rows());
  a.torus_ = false;
  a.transform_ = basis.transform;
  a.rep_ = basis.generators;
  a.basis_ = std::move(basis);
  return a;
}

GroupAction GroupAction::induced(const GroupAction& base,
                                 const Eigen::MatrixXi& outer_weights) {
  if (!base.torus_) fail(ErrorCode::DimensionMismatch, "base is not a torus");
  if (outer_weights.rows() != base.k_) {
    fail(ErrorCode::DimensionMismatch, "outer weight row count != k");
  }
  const int m = static_cast<int>(outer_weights.cols());
  GroupAction a;
  a.k_ = base.k_;
  a.n_ = m;
  a.torus_ = true;
  a.lattice_ = outer_weights;
  a.transform_ = base.transform_;
  a.ortho_weights_ = base.transform_ * outer_weights.cast<double>();
  a.basis_ = base.basis_;
  a.rep_.reserve(a.k_);
  for (int j = 0; j < a.k_; ++j) {
    MatrixXc g = MatrixXc::Zero(m, m);
    for (int c = 0; c < m; ++c) g(c, c) = Complex(0.0, a.ortho_weights_(j, c));
    a.rep_.push_back(std::move(g));
  }
  return a;
}

GroupAction GroupAction::induced(const GroupAction& base,
                                 const std::vector<MatrixXc>& outer_generators) {
  if (static_cast<int>(outer_generators.size()) != base.k_) {
    fail(ErrorCode::DimensionMismatch, "outer generator count != k");
  }
  for (const auto& g : outer_generators) require_anti_hermitian(g, 1e-8);
  const int m = static_cast<int>(outer_generators.front().rows());

  GroupAction a;
  a.k_ = base.k_;
  a.n_ = m;
  a.torus_ = false;
  a.transform_ = base.transform_;
  a.basis_ = base.basis_;
  a.rep_.reserve(a.k_);
  for (int j = 0; j < a.k_; ++j) {
    MatrixXc g = MatrixXc::Zero(m, m);
    for (int l = 0; l < a.k_; ++l) g += base.transform_(j, l) * outer_generators[l];
    a.rep_.push_back(std::move(g));
  }

  // The induced rep must match the base's structure constants.
  double worst = 0.0;
  for (int i = 0; i < a.k_; ++i) {
    for (int j = i + 1; j < a.k_; ++j) {
      MatrixXc lhs = a.rep_[i] * a.rep_[j] - a.rep_[j] * a.rep_[i];
      MatrixXc base_bracket =
          base.rep_[i] * base.rep_[j] - base.rep_[j] * base.rep_[i];
      for (int l = 0; l < a.k_; ++l) {
        lhs -= trace_form(base_bracket, base.rep_[l]) * a.rep_[l];
      }
      worst = std::max(worst, lhs.norm());
    }
  }
  if (worst > 1e-8) {
    fail(ErrorCode::InternalInconsistency,
         "induced rep violates structure constants, residual " +
             std::to_string(worst));
  }
  return a;
}

const Eigen::MatrixXi& GroupAction::lattice_weights() const {
  if (!torus_) fail(ErrorCode::DimensionMismatch, "not a torus action");
  return lattice_;
}

const Eigen::MatrixXd& GroupAction::ortho_weights() const {
  if (!torus_) fail(ErrorCode::DimensionMismatch, "not a torus action");
  return ortho_weights_;
}

MatrixXc GroupAction::rep_of(const Eigen::VectorXd& xi) const {
  if (xi.size() != k_) fail(ErrorCode::DimensionMismatch, "bad xi length");
  MatrixXc a = MatrixXc::Zero(n_, n_);
  for (int j = 0; j < k_; ++j) a += xi(j) * rep_[j];
  return a;
}

VectorXc GroupAction::apply(const Eigen::VectorXd& xi, const VectorXc& x) const {
  if (xi.size() != k_ || x.size() != n_) {
    fail(ErrorCode::DimensionMismatch, "apply: bad dimensions");
  }
  if (torus_) {
    Eigen::VectorXd pair = ortho_weights_.transpose() * xi;  // N
    VectorXc out(n_);
    for (int m = 0; m < n_; ++m) out(m) = Complex(0.0, pair(m)) * x(m);
    return out;
  }
  return rep_of(xi) * x;
}

MatrixXc GroupAction::action_columns(const VectorXc& x) const {
  MatrixXc cols(n_, k_);
  for (int j = 0; j < k_; ++j) {
    if (torus_) {
      for (int m = 0; m < n_; ++m) {
        cols(m, j) = Complex(0.0, ortho_weights_(j, m)) * x(m);
      }
    } else {
      cols.col(j) = rep_[j] * x;
    }
  }
  return cols;
}

Eigen::VectorXd GroupAction::lattice_to_ortho(const Eigen::VectorXi& xi) const {
  if (!torus_) fail(ErrorCode::DimensionMismatch, "not a torus action");
  // Pairing of the returned element with W' equals <w_j, xi>:
  // W'^T eta = W^T xi with W' = T W  =>  eta = T^{-T} xi.
  return transform_.transpose()
      .colPivHouseholderQr()
      .solve(xi.cast<double>());
}

int GroupAction::trivial_subalgebra_dim() const {
  // Kernel of xi -> A_xi as a map into N x N matrices.
  Eigen::MatrixXd flat(2 * n_ * n_, k_);
  for (int j = 0; j < k_; ++j) {
    int idx = 0;
    for (int c = 0; c < n_; ++c) {
      for (int r = 0; r < n_; ++r) {
        flat(idx++, j) = rep_[j](r, c).real();
        flat(idx++, j) = rep_[j](r, c).imag();
      }
    }
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(flat);
  int dim = 0;
  for (int i = 0; i < svd.singularValues().size(); ++i) {
    if (svd.singularValues()(i) < 1e-10) ++dim;
  }
  dim += k_ - static_cast<int>(svd.singularValues().size());
  return dim;
}

Eigen::VectorXd realify(const VectorXc& v) {
  Eigen::VectorXd out(2 * v.size());
  for (int i = 0; i < v.size(); ++i) {
    out(2 * i) = v(i).real();
    out(2 * i + 1) = v(i).imag();
  }
  return out;
}

VectorXc complexify(const Eigen::VectorXd& v) {
  VectorXc out(v.size() / 2);
  for (int i = 0; i < out.size(); ++i) {
    out(i) = Complex(v(2 * i), v(2 * i + 1));
  }
  return out;
}

Eigen::MatrixXd infinitesimal_action(const GroupAction& action,
                                     const StatePoint& x) {
  MatrixXc cols = action.action_columns(x.coords);
  Eigen::MatrixXd sigma(2 * action.ambient_dim(), action.algebra_dim());
  for (int j = 0; j < action.algebra_dim(); ++j) {
    sigma.col(j) = realify(cols.col(j));
  }
  return sigma;
}

StatePoint exp_action(const GroupAction& action, const Eigen::VectorXd& xi,
                      double s, const StatePoint& x, FlowDirection direction) {
  if (s == 0.0 || xi.norm() == 0.0) return x;
  if (action.is_torus()) {
    Eigen::VectorXd pair = action.ortho_weights().transpose() * xi;  // N
    VectorXc out(x.dim());
    for (int m = 0; m < x.dim(); ++m) {
      if (direction == FlowDirection::real) {
        out(m) = std::exp(Complex(0.0, s * pair(m))) * x.coords(m);
      } else {
        out(m) = std::exp(-s * pair(m)) * x.coords(m);
      }
    }
    return StatePoint(std::move(out));
  }
  // A_xi = i H with H Hermitian; exp(sA) = U e^{i s L} U^*, exp(s iA) = U e^{-s L} U^*.
  MatrixXc a = action.rep_of(xi);
  MatrixXc h = Complex(0.0, -1.0) * a;
  h = 0.5 * (h + MatrixXc(h.adjoint()));
  Eigen::SelfAdjointEigenSolver<MatrixXc> es(h);
  const auto& u = es.eigenvectors();
  VectorXc y = u.adjoint() * x.coords;
  for (int m = 0; m < y.size(); ++m) {
    double lam = es.eigenvalues()(m);
    if (direction == FlowDirection::real) {
      y(m) *= std::exp(Complex(0.0, s * lam));
    } else {
      y(m) *= std::exp(-s * lam);
    }
  }
  return StatePoint(u * y);
}

StabilizerData stabilizer(const GroupAction& action, const StatePoint& x,
                          double rank_tol) {
  StabilizerData out;
  out.point = x;
  const int k = action.algebra_dim();
  Eigen::MatrixXd sigma = infinitesimal_action(action, x);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(
      sigma, Eigen::ComputeFullV | Eigen::ComputeThinU);
  const double threshold = rank_tol * std::max(x.norm(), 1.0);
  const auto& sv = svd.singularValues();

  int rank = 0;
  for (int i = 0; i < sv.size(); ++i) {
    if (sv(i) > threshold) ++rank;
    if (sv(i) > threshold / 100.0 && sv(i) < threshold * 100.0) {
      out.conditioning_warning = true;
    }
  }
  out.dim = k - rank;
  out.basis_of_kx = svd.matrixV().rightCols(out.dim);
  out.complement = svd.matrixV().leftCols(rank);
  out.sigma_min_perp = rank > 0 ? sv(rank - 1) : 0.0;
  return out;
}

QOperator q_operator(const GroupAction& action, const StatePoint& x,
                     double rank_tol) {
  StabilizerData stab = stabilizer(action, x, rank_tol);
  const int m = action.algebra_dim() - stab.dim;
  if (m == 0) {
    fail(ErrorCode::EmptyComplement, "stabilizer is the whole algebra");
  }
  Eigen::MatrixXd sigma = infinitesimal_action(action, x);
  Eigen::MatrixXd se = sigma * stab.complement;
  QOperator out;
  out.q = se.transpose() * se;
  out.complement = stab.complement;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(out.q);
  out.lambda = 1.0 / es.eigenvalues()(0);
  return out;
}

namespace {

long long gcd_ll(long long a, long long b) {
  a = std::abs(a);
  b = std::abs(b);
  while (b) {
    long long t = a % b;
    a = b;
    b = t;
  }
  return a;
}

Eigen::VectorXi make_primitive(Eigen::VectorXi v) {
  long long g = 0;
  for (int i = 0; i < v.size(); ++i) g = gcd_ll(g, v(i));
  if (g > 1) {
    for (int i = 0; i < v.size(); ++i) v(i) = static_cast<int>(v(i) / g);
  }
  return v;
}

}  // namespace

OneParameterSubgroup OneParameterSubgroup::lattice(const Eigen::VectorXi& xi) {
  OneParameterSubgroup out;
  out.num = make_primitive(xi);
  out.den = Eigen::VectorXi::Ones(xi.size());
  return out;
}

OneParameterSubgroup OneParameterSubgroup::rational(const Eigen::VectorXi& num,
                                                    const Eigen::VectorXi& den) {
  if (num.size() != den.size()) {
    fail(ErrorCode::DimensionMismatch, "num/den length mismatch");
  }
  for (int i = 0; i < den.size(); ++i) {
    if (den(i) == 0) fail(ErrorCode::ParseError, "zero denominator");
  }
  OneParameterSubgroup out;
  out.num = num;
  out.den = den;
  return out;
}

bool OneParameterSubgroup::trivial() const {
  for (int i = 0; i < num.size(); ++i) {
    if (num(i) != 0) return false;
  }
  return true;
}

Eigen::VectorXd OneParameterSubgroup::as_real() const {
  Eigen::VectorXd out(num.size());
  for (int i = 0; i < num.size(); ++i) {
    out(i) = static_cast<double>(num(i)) / static_cast<double>(den(i));
  }
  return out;
}

std::optional<std::pair<long long, long long>> round_rational(double x,
                                                              long long max_den,
                                                              double tol) {
  if (!std::isfinite(x)) return std::nullopt;
  long long best_p = std::llround(x), best_q = 1;
  double best_err = std::abs(x - static_cast<double>(best_p));
  // Stern-Brocot style continued-fraction expansion.
  double v = x;
  long long p0 = 1, q0 = 0, p1 = std::llround(std::floor(v)), q1 = 1;
  v -= std::floor(v);
  for (int it = 0; it < 64 && q1 <= max_den; ++it) {
    double approx = static_cast<double>(p1) / static_cast<double>(q1);
    double err = std::abs(x - approx);
    if (err < best_err) {
      best_err = err;
      best_p = p1;
      best_q = q1;
    }
    if (v < 1e-15) break;
    v = 1.0 / v;
    long long a = static_cast<long long>(std::floor(v));
    v -= std::floor(v);
    long long p2 = a * p1 + p0, q2 = a * q1 + q0;
    p0 = p1;
    q0 = q1;
    p1 = p2;
    q1 = q2;
  }
  if (best_err <= tol) return std::make_pair(best_p, best_q);
  return std::nullopt;
}

namespace {

LimitResult torus_limit(const GroupAction& action,
                        const OneParameterSubgroup& rho, const StatePoint& x) {
  const Eigen::MatrixXi& w = action.lattice_weights();
  if (rho.num.size() != w.rows()) {
    fail(ErrorCode::DimensionMismatch, "1-PS dimension mismatch");
  }
  LimitResult out;
  VectorXc limit = x.coords;
  const double dead = 1e-14 * std::max(1.0, x.norm());
  for (int m = 0; m < x.dim(); ++m) {
    long long pairing = 0;
    for (int j = 0; j < w.rows(); ++j) {
      pairing += static_cast<long long>(rho.num(j)) * w(j, m);
    }
    if (pairing > 0) {
      limit(m) = 0.0;
    } else if (pairing < 0 && std::abs(x.coords(m)) > dead) {
      return out;  // diverges
    } else if (pairing < 0) {
      limit(m) = 0.0;
    }
  }
  out.exists = true;
  out.limit = StatePoint(std::move(limit));
  return out;
}

}  // namespace

LimitResult ops_limit(const GroupAction& action, const OneParameterSubgroup& rho,
                      const StatePoint& x) {
  if (action.is_torus()) return torus_limit(action, rho, x);

  MatrixXc a = action.rep_of(rho.as_real());
  MatrixXc h = Complex(0.0, -1.0) * a;
  h = 0.5 * (h + MatrixXc(h.adjoint()));
  Eigen::SelfAdjointEigenSolver<MatrixXc> es(h);
  // An algebraic C*-action needs integer exponents up to one overall scale,
  // i.e. rational eigenvalue *ratios*; absolute values inherit irrational
  // normalization factors from the orthonormal basis.
  const double scale = es.eigenvalues().cwiseAbs().maxCoeff();
  if (scale > 0.0) {
    for (int m = 0; m < es.eigenvalues().size(); ++m) {
      if (!round_rational(es.eigenvalues()(m) / scale, 1000, 1e-7)) {
        fail(ErrorCode::IrrationalSpectrum,
             "generator spectrum ratio " +
                 std::to_string(es.eigenvalues()(m) / scale) +
                 " is not recognizably rational");
      }
    }
  }
  const auto& u = es.eigenvectors();
  VectorXc y = u.adjoint() * x.coords;
  const double dead = 1e-14 * std::max(1.0, x.norm());
  LimitResult out;
  for (int m = 0; m < y.size(); ++m) {
    double lam = es.eigenvalues()(m);
    if (std::abs(lam) < 1e-9 * std::max(scale, 1.0)) continue;
    if (lam > 0.0) {
      y(m) = 0.0;
    } else if (std::abs(y(m)) > dead) {
      return out;
    } else {
      y(m) = 0.0;
    }
  }
  out.exists = true;
  out.limit = StatePoint(u * y);
  return out;
}

}  // namespace knt
