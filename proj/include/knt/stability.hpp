#ifndef KNT_STABILITY_HPP
#define KNT_STABILITY_HPP

#include <optional>
#include <string>
#include <vector>

#include "knt/algebra.hpp"
#include "knt/moment.hpp"

namespace knt {

enum class StabilityClass {
  stable,
  polystable_not_stable,
  semistable_not_polystable,
  unstable,
};

const char* stability_class_name(StabilityClass c);

struct StabilityVerdict {
  StabilityClass cls = StabilityClass::unstable;
  std::optional<OneParameterSubgroup> witness;
  std::optional<StatePoint> zero_point;
  int iterations = 0;
  double final_nu_norm = 0.0;
  double final_norm = 0.0;
  /// Torus verdicts are certified; non-abelian ones are flow evidence only.
  bool certified = false;
  std::string note;
};

struct FlowOptions {
  /// Negative means the default 1e-11 * max(1, ||v||^2).
  double zero_tol = -1.0;
  int max_iter = 20000;
  /// A coordinate below this fraction of the current norm is a *candidate*
  /// dead coordinate (torus support tracking). Candidates are confirmed by
  /// exact-arithmetic witness verification, so this only needs to sit above
  /// the sqrt(zero_tol) scale that dying coordinates reach at convergence.
  double support_tol = 1e-4;
  double rank_tol = kDefaultRankTol;
  /// Window for the stagnation detector.
  int stagnation_window = 100;
  long long witness_max_den = 64;
};

/// The Kempf-Ness functional 1/2 ||exp(s i A_xi) v||^2 along one ray.
double kempf_ness_value(const GroupAction& action, const StatePoint& v,
                        const Eigen::VectorXd& xi, double s);

/// Norm-minimizing descent over the complexified orbit; classifies v and
/// extracts degeneration witnesses from the accumulated drift direction.
StabilityVerdict kempf_ness_flow(const GroupAction& action, const StatePoint& v,
                                 const FlowOptions& opts = {});

/// Exact combinatorial Hilbert-Mumford verdict for torus actions, from the
/// position of the origin relative to the hull of the active weights.
/// Internally exact rational arithmetic; witnesses are primitive integer
/// vectors in the weight-pairing lattice.
StabilityVerdict torus_polystability(const Eigen::MatrixXi& weights,
                                     const std::vector<int>& support);

std::vector<int> support_of(const StatePoint& v, double rel_tol = 0.0);

struct CrossReport {
  StabilityVerdict flow;
  StabilityVerdict oracle;
  bool agree = false;
};

/// Runs the flow and the exact oracle on a torus instance and requires the
/// classes to match; a mismatch signals a numerical-tolerance failure.
CrossReport cross_validate(const GroupAction& action, const StatePoint& v,
                           const FlowOptions& opts = {},
                           bool throw_on_mismatch = true);

}  // namespace knt

#endif
