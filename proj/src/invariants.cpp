#include "knt/invariants.hpp"

#include <Eigen/QR>
#include <cmath>
#include <random>

namespace knt {

namespace {

Eigen::VectorXd ops_algebra_coords(const GroupAction& action,
                                   const OneParameterSubgroup& rho) {
  if (action.is_torus()) {
    // Lattice vector -> orthonormal-basis coordinates.
    return action.basis_transform()
        .transpose()
        .colPivHouseholderQr()
        .solve(rho.as_real());
  }
  return rho.as_real();
}

}  // namespace

Eigen::VectorXd futaki_character(const GroupAction& action, const StatePoint& x,
                                 double rank_tol) {
  StabilizerData stab = stabilizer(action, x, rank_tol);
  MomentValue mu = linear_moment(action, x);
  return stab.basis_of_kx.transpose() * mu;
}

Eigen::VectorXd futaki_character(const SliceModel& model, const StatePoint& x,
                                 double rank_tol) {
  StabilizerData stab = stabilizer(model.inner(), x, rank_tol);
  MomentValue mu = model.moment(x);
  return stab.basis_of_kx.transpose() * mu;
}

double degeneration_weight(const GroupAction& action,
                           const OneParameterSubgroup& rho,
                           const StatePoint& v) {
  LimitResult lim = ops_limit(action, rho, v);
  if (!lim.exists) fail(ErrorCode::NoLimit, "degeneration limit diverges");
  if (rho.trivial()) return 0.0;
  return linear_moment(action, lim.limit).dot(ops_algebra_coords(action, rho));
}

double orbit_distance(const GroupAction& action, const StatePoint& v,
                      const StatePoint& target) {
  const int k = action.algebra_dim();
  auto value = [&](const Eigen::VectorXd& p) {
    StatePoint y = exp_action(action, p.head(k), 1.0, v, FlowDirection::real);
    y = exp_action(action, p.tail(k), 1.0, y, FlowDirection::imaginary);
    return (y.coords - target.coords).norm();
  };

  double best = value(Eigen::VectorXd::Zero(2 * k));
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> unif(-2.0, 2.0);
  for (int restart = 0; restart < 4; ++restart) {
    Eigen::VectorXd p = Eigen::VectorXd::Zero(2 * k);
    if (restart > 0) {
      for (int i = 0; i < k; ++i) p(i) = unif(rng);  // phase restarts
    }
    double f = value(p);
    const double h = 1e-6;
    for (int it = 0; it < 400; ++it) {
      Eigen::VectorXd grad(2 * k);
      for (int i = 0; i < 2 * k; ++i) {
        Eigen::VectorXd pp = p, pm = p;
        pp(i) += h;
        pm(i) -= h;
        grad(i) = (value(pp) - value(pm)) / (2.0 * h);
      }
      if (grad.norm() < 1e-14) break;
      double step = 1.0;
      bool moved = false;
      while (step > 1e-14) {
        Eigen::VectorXd cand = p - step * grad;
        double fc = value(cand);
        if (fc < f - 1e-12 * step * grad.squaredNorm()) {
          p = cand;
          f = fc;
          moved = true;
          break;
        }
        step *= 0.5;
      }
      if (!moved) break;
    }
    best = std::min(best, f);
  }
  return best;
}

DegenerationRecord analyze_degeneration(const GroupAction& action,
                                        const OneParameterSubgroup& rho,
                                        const StatePoint& v,
                                        const DegenerationOptions& opts) {
  LimitResult lim = ops_limit(action, rho, v);
  if (!lim.exists) fail(ErrorCode::NoLimit, "degeneration limit diverges");

  DegenerationRecord rec;
  rec.rho = rho;
  rec.start = v;
  rec.limit = lim.limit;
  rec.weight = rho.trivial() ? 0.0
                             : linear_moment(action, lim.limit)
                                   .dot(ops_algebra_coords(action, rho));
  rec.dim_start = stabilizer(action, v, opts.rank_tol).dim;
  rec.dim_limit = stabilizer(action, lim.limit, opts.rank_tol).dim;

  if (rec.dim_start == rec.dim_limit) {
    rec.orbit_distance = orbit_distance(action, v, lim.limit);
    rec.is_product =
        rec.orbit_distance < opts.orbit_tol * std::max(v.norm(), 1.0);
  } else {
    rec.orbit_distance = std::abs(v.norm() - lim.limit.norm());
    rec.is_product = false;
  }
  return rec;
}

SemicontinuityReport semicontinuity_scan(
    const GroupAction& action,
    const std::vector<std::pair<OneParameterSubgroup, StatePoint>>& cases,
    const DegenerationOptions& opts) {
  SemicontinuityReport rep;
  for (const auto& [rho, v] : cases) {
    DegenerationRecord rec = analyze_degeneration(action, rho, v, opts);
    ++rep.cases;
    if (rec.is_product) {
      ++rep.products;
      if (rec.dim_limit != rec.dim_start) rep.violations.push_back(rec);
    } else {
      if (rec.dim_limit > rec.dim_start) {
        ++rep.strict_jumps;
      } else {
        rep.violations.push_back(rec);
      }
    }
  }
  return rep;
}

}  // namespace knt
