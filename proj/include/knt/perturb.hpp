#ifndef KNT_PERTURB_HPP
#define KNT_PERTURB_HPP

#include <string>
#include <vector>

#include "knt/moment.hpp"
#include "knt/stability.hpp"

namespace knt {

/// Machine-checkable record that the perturbation hypothesis
/// lambda * ||mu(x0)|| < delta was verified and a zero y = exp(i eta) x0 was
/// found with ||eta|| <= lambda * ||mu(x0)||. Self-contained: carries the
/// sampling parameters so an independent checker can recompute lambda.
struct ZeroCertificate {
  StatePoint x0;
  Eigen::VectorXd eta;  // in the complement of the stabilizer of x0
  StatePoint y;
  double lambda_used = 0.0;
  double delta_used = 0.0;
  double mu_norm_initial = 0.0;
  double mu_norm_final = 0.0;
  double eta_norm = 0.0;
  double zero_tol = 0.0;
  int lambda_samples = 0;
  double lambda_margin = 0.0;
  unsigned seed = 0;
};

struct PerturbOptions {
  /// Negative means the default 1e-10 * (1 + ||x0||^2).
  double zero_tol = -1.0;
  int max_steps = 500;
  int lambda_samples = 64;
  double lambda_margin = 0.25;
  unsigned seed = 0;
  double rank_tol = kDefaultRankTol;
};

/// lambda = (1 + margin) * max over deterministically sampled xi with
/// ||xi|| < delta (including 0 and boundary points) of Lambda at
/// exp(i xi) x0 in the pulled-back geometry.
double lambda_bound(const SliceModel& model, const StatePoint& x0, double delta,
                    int samples, double margin = 0.25, unsigned seed = 0,
                    double rank_tol = kDefaultRankTol);

/// Damped Newton continuation in the complement of the stabilizer of x0,
/// flowing exp(i eta) x0 to a zero of the slice moment map. Refuses (rather
/// than fails) when the hypothesis lambda * ||mu(x0)|| < delta does not hold.
ZeroCertificate perturb_to_zero(const SliceModel& model, const StatePoint& x0,
                                double delta, const PerturbOptions& opts = {});

struct CertificateCheck {
  bool ok = false;
  std::vector<std::string> failures;
};

/// Independent re-verification from raw certificate fields; uses no solver
/// state. Recomputes y, mu(x0), mu(y), ||eta||, lambda, and all four
/// certificate inequalities.
CertificateCheck check_certificate(const SliceModel& model,
                                   const ZeroCertificate& cert);

struct ScalingSample {
  double t = 0.0;
  double mu_norm = 0.0;
  double lambda_estimate = 0.0;
  double product = 0.0;  // lambda * ||mu(tv)||
  bool hypothesis_ok = false;
};

struct ScalingReport {
  StatePoint v;
  double t_star = 0.0;
  bool found = false;
  ZeroCertificate certificate;
  std::vector<ScalingSample> samples;
  /// Least-squares slope of log ||mu(tv)|| against log t over the sampled
  /// grid (NaN when all samples vanish).
  double decay_slope = 0.0;
};

struct ScalingOptions {
  double t_start = 1e-1;
  double t_stop = 1e-3;
  int t_count = 20;
  PerturbOptions perturb;
  double balance_tol = 1e-9;
};

/// Scaling pipeline: checks polystability of v for the linearized action
/// (rebalancing through the flow when nu1(v) != 0), walks the t-grid
/// downward, and at the first t where the hypothesis
/// lambda * ||mu(tv)|| < delta holds runs the certified solver. When the
/// grid bottoms out the report comes back with found=false and the sampled
/// products, an honest refusal rather than an error.
ScalingReport scaling_search(const SliceModel& model, const StatePoint& v,
                             double delta, const ScalingOptions& opts = {});

}  // namespace knt

#endif
