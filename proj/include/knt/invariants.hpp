#ifndef KNT_INVARIANTS_HPP
#define KNT_INVARIANTS_HPP

#include <vector>

#include "knt/moment.hpp"
#include "knt/stability.hpp"

namespace knt {

/// A one-parameter degeneration with its central-fibre data.
struct DegenerationRecord {
  OneParameterSubgroup rho;
  StatePoint start;
  StatePoint limit;
  /// Pairing of the linear moment map at the limit with the generator of
  /// rho — the finite-dimensional stand-in for the Futaki pairing.
  double weight = 0.0;
  int dim_start = 0;
  int dim_limit = 0;
  bool is_product = false;
  double orbit_distance = 0.0;
};

/// <mu(x), xi_i> over an orthonormal basis of the stabilizer algebra of x.
/// Vanishes identically on valid models; a nonzero return flags a model
/// violating the moment-map axioms.
Eigen::VectorXd futaki_character(const GroupAction& action, const StatePoint& x,
                                 double rank_tol = kDefaultRankTol);
Eigen::VectorXd futaki_character(const SliceModel& model, const StatePoint& x,
                                 double rank_tol = kDefaultRankTol);

/// <nu(v_0), xi_rho> at the limit v_0 of rho; throws NoLimit.
double degeneration_weight(const GroupAction& action,
                           const OneParameterSubgroup& rho, const StatePoint& v);

/// Residual distance between the complexified orbit of v and the target,
/// by norm-functional descent over the group parameters.
double orbit_distance(const GroupAction& action, const StatePoint& v,
                      const StatePoint& target);

struct DegenerationOptions {
  double rank_tol = kDefaultRankTol;
  /// Relative threshold for the orbit-membership test.
  double orbit_tol = 1e-7;
};

DegenerationRecord analyze_degeneration(const GroupAction& action,
                                        const OneParameterSubgroup& rho,
                                        const StatePoint& v,
                                        const DegenerationOptions& opts = {});

struct SemicontinuityReport {
  int cases = 0;
  int strict_jumps = 0;
  int products = 0;
  std::vector<DegenerationRecord> violations;
};

/// Checks dim k_limit >= dim k_v on every degeneration, strictly whenever
/// the limit left the orbit. Violations are report entries, not errors.
SemicontinuityReport semicontinuity_scan(
    const GroupAction& action,
    const std::vector<std::pair<OneParameterSubgroup, StatePoint>>& cases,
    const DegenerationOptions& opts = {});

}  // namespace knt

#endif
