#ifndef KNT_ALGEBRA_HPP
#define KNT_ALGEBRA_HPP

#include <Eigen/Dense>
#include <complex>
#include <optional>
#include <vector>

#include "knt/error.hpp"

namespace knt {

using Complex = std::complex<double>;
using VectorXc = Eigen::VectorXcd;
using MatrixXc = Eigen::MatrixXcd;

/// Trace-form inner product on anti-Hermitian matrices, <A,B> = -Re tr(AB).
double trace_form(const MatrixXc& a, const MatrixXc& b);

/// Orthonormal basis of a compact Lie algebra, given by anti-Hermitian
/// matrices orthonormal with respect to the negative trace pairing.
struct LieAlgebraBasis {
  std::vector<MatrixXc> generators;
  /// Coefficients expressing the orthonormal basis in the input generators.
  Eigen::MatrixXd transform;
  /// Residual of the commutator-closure check over the real span.
  double closure_residual = 0.0;

  int dim() const { return static_cast<int>(generators.size()); }
};

/// Gram-Schmidt in the trace form. Rejects non-anti-Hermitian or
/// real-linearly dependent inputs.
LieAlgebraBasis orthonormalize(const std::vector<MatrixXc>& generators);

/// A point of the representation space with its cached squared norm.
struct StatePoint {
  VectorXc coords;
  double norm2 = 0.0;

  StatePoint() = default;
  explicit StatePoint(VectorXc c) : coords(std::move(c)) {
    norm2 = coords.squaredNorm();
  }

  double norm() const { return std::sqrt(norm2); }
  int dim() const { return static_cast<int>(coords.size()); }
};

/// A compact group acting linearly on C^N. Algebra elements are real
/// k-vectors of coordinates in the orthonormal basis; rep_of maps them to
/// the anti-Hermitian matrices acting on the ambient space.
class GroupAction {
 public:
  /// Torus action from an integer weight matrix (k rows, N columns).
  /// The defining diagonal generators i*diag(w_j) are orthonormalized, so
  /// coordinates always refer to the trace-orthonormal basis.
  static GroupAction torus(const Eigen::MatrixXi& weights);

  /// Matrix action from anti-Hermitian generators (defining representation).
  static GroupAction matrix_rep(const std::vector<MatrixXc>& generators);

  /// Representation of the same abstract algebra on another space. For the
  /// torus case outer_weights pairs rows with the base lattice; for the
  /// matrix case the generators are given in the base's original (pre-
  /// orthonormalization) generator order.
  static GroupAction induced(const GroupAction& base,
                             const Eigen::MatrixXi& outer_weights);
  static GroupAction induced(const GroupAction& base,
                             const std::vector<MatrixXc>& outer_generators);

  int algebra_dim() const { return k_; }
  int ambient_dim() const { return n_; }
  bool is_torus() const { return torus_; }

  /// Integer weight matrix (torus only).
  const Eigen::MatrixXi& lattice_weights() const;
  /// Orthonormalized real weight matrix W' = T * W (torus only).
  const Eigen::MatrixXd& ortho_weights() const;
  /// Change of basis from input generators to the orthonormal basis.
  const Eigen::MatrixXd& basis_transform() const { return transform_; }
  const std::vector<MatrixXc>& rep() const { return rep_; }
  const LieAlgebraBasis& basis() const { return basis_; }

  /// A_xi = sum_j xi_j A_j.
  MatrixXc rep_of(const Eigen::VectorXd& xi) const;
  /// A_xi x without materializing the matrix (fast diagonal path for tori).
  VectorXc apply(const Eigen::VectorXd& xi, const VectorXc& x) const;
  /// Column j = A_j x.
  MatrixXc action_columns(const VectorXc& x) const;

  /// Orthonormal-basis coordinates of the lattice vector xi (torus only):
  /// the algebra element whose pairing with weight w_j is <w_j, xi>.
  Eigen::VectorXd lattice_to_ortho(const Eigen::VectorXi& xi) const;

  /// Dimension of the subalgebra acting trivially on the whole space.
  int trivial_subalgebra_dim() const;

 private:
  GroupAction() = default;

  int k_ = 0;
  int n_ = 0;
  bool torus_ = false;
  Eigen::MatrixXi lattice_;       // k x N, torus only
  Eigen::MatrixXd ortho_weights_; // k x N, torus only
  Eigen::MatrixXd transform_;     // k x k
  std::vector<MatrixXc> rep_;
  LieAlgebraBasis basis_;
};

/// The infinitesimal action sigma_x : k -> T_x, as a real (2N x k) matrix.
/// Column j is A_j x with real and imaginary parts stacked.
Eigen::MatrixXd infinitesimal_action(const GroupAction& action,
                                     const StatePoint& x);

Eigen::VectorXd realify(const VectorXc& v);
VectorXc complexify(const Eigen::VectorXd& v);

enum class FlowDirection { real, imaginary };

/// exp(s A_xi) x for the real direction (an isometry), exp(s i A_xi) x for
/// the imaginary (K^c) direction.
StatePoint exp_action(const GroupAction& action, const Eigen::VectorXd& xi,
                      double s, const StatePoint& x, FlowDirection direction);

/// Numerical kernel and cokernel data of sigma_x.
struct StabilizerData {
  StatePoint point;
  Eigen::MatrixXd basis_of_kx;   // k x dim, orthonormal columns
  Eigen::MatrixXd complement;    // k x (k - dim), orthonormal columns
  int dim = 0;
  double sigma_min_perp = 0.0;
  bool conditioning_warning = false;
};

constexpr double kDefaultRankTol = 1e-8;

StabilizerData stabilizer(const GroupAction& action, const StatePoint& x,
                          double rank_tol = kDefaultRankTol);

/// Q_x = sigma_x^* sigma_x restricted to the complement of the stabilizer,
/// with Lambda_x = ||Q_x^{-1}|| = 1/lambda_min(Q_x).
struct QOperator {
  Eigen::MatrixXd q;           // m x m, symmetric positive definite
  Eigen::MatrixXd complement;  // k x m
  double lambda = 0.0;         // ||Q^{-1}||
};

QOperator q_operator(const GroupAction& action, const StatePoint& x,
                     double rank_tol = kDefaultRankTol);

/// A rational algebra element generating an algebraic C^* degeneration.
/// For torus actions: a primitive integer vector in the weight-pairing
/// lattice. For matrix actions: rational coordinates in the algebra basis.
struct OneParameterSubgroup {
  Eigen::VectorXi num;
  Eigen::VectorXi den;  // all 1 in the torus case

  static OneParameterSubgroup lattice(const Eigen::VectorXi& xi);
  static OneParameterSubgroup rational(const Eigen::VectorXi& num,
                                       const Eigen::VectorXi& den);

  bool trivial() const;
  Eigen::VectorXd as_real() const;
};

struct LimitResult {
  bool exists = false;
  StatePoint limit;
};

/// lim_{lambda -> 0} rho(lambda) x. Torus actions use exact integer weight
/// pairings; matrix actions diagonalize the generator and require a
/// recognizably rational spectrum.
LimitResult ops_limit(const GroupAction& action,
                      const OneParameterSubgroup& rho, const StatePoint& x);

/// Continued-fraction rounding to the nearest rational with bounded
/// denominator; returns nullopt if nothing within tol is found.
std::optional<std::pair<long long, long long>> round_rational(
    double x, long long max_den, double tol);

}  // namespace knt

#endif
