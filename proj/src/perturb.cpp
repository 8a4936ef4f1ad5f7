#include "knt/perturb.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

namespace knt {

namespace {

double default_zero_tol(const StatePoint& x0) {
  return 1e-10 * (1.0 + x0.norm2);
}

// Q on a fixed complement basis (the solver works in the complement of the
// stabilizer of x0 along the whole path).
Eigen::MatrixXd slice_q_on(const SliceModel& model, const StatePoint& x,
                           const Eigen::MatrixXd& complement) {
  MatrixXc jac = model.jacobian(x.coords);
  MatrixXc pushed = jac * model.inner().action_columns(x.coords);
  Eigen::MatrixXd sigma(2 * model.outer().ambient_dim(),
                        model.inner().algebra_dim());
  for (int j = 0; j < sigma.cols(); ++j) sigma.col(j) = realify(pushed.col(j));
  Eigen::MatrixXd se = sigma * complement;
  return se.transpose() * se;
}

double lambda_at(const SliceModel& model, const StatePoint& x,
                 const Eigen::MatrixXd& complement) {
  Eigen::MatrixXd q = slice_q_on(model, x, complement);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(q);
  if (es.eigenvalues()(0) <= 0.0) {
    fail(ErrorCode::InternalInconsistency, "Q_x is not positive definite");
  }
  return 1.0 / es.eigenvalues()(0);
}

}  // namespace

double lambda_bound(const SliceModel& model, const StatePoint& x0, double delta,
                    int samples, double margin, unsigned seed, double rank_tol) {
  if (delta <= 0.0) fail(ErrorCode::PreconditionFailed, "delta must be positive");
  StabilizerData stab = stabilizer(model.inner(), x0, rank_tol);
  const int m = model.inner().algebra_dim() - stab.dim;
  if (m == 0) fail(ErrorCode::EmptyComplement, "no transverse directions at x0");

  auto probe = [&](const Eigen::VectorXd& xi) {
    StatePoint x = exp_action(model.inner(), xi, 1.0, x0,
                              FlowDirection::imaginary);
    if (x.norm() > model.ball_radius() * (1.0 + 1e-12)) {
      fail(ErrorCode::BallExitsModel,
           "exp(i xi) x0 leaves the model ball at ||xi|| = " +
               std::to_string(xi.norm()));
    }
    return lambda_at(model, x, stab.complement);
  };

  double worst = probe(Eigen::VectorXd::Zero(model.inner().algebra_dim()));

  // Deterministic sampling: seeded directions in the complement, radii
  // stratified up to the (open) boundary of the delta-ball.
  std::mt19937_64 rng(static_cast<unsigned long long>(seed) * 0x9e3779b97f4a7c15ULL + 1);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const int levels = 4;
  for (int i = 0; i < samples; ++i) {
    Eigen::VectorXd dir(m);
    for (int j = 0; j < m; ++j) dir(j) = gauss(rng);
    double nrm = dir.norm();
    if (nrm == 0.0) continue;
    dir /= nrm;
    double frac = (i % levels == levels - 1)
                      ? 1.0 - 1e-9
                      : static_cast<double>(i % levels + 1) / levels;
    Eigen::VectorXd xi = stab.complement * (delta * frac * dir);
    worst = std::max(worst, probe(xi));
  }
  return (1.0 + margin) * worst;
}

ZeroCertificate perturb_to_zero(const SliceModel& model, const StatePoint& x0,
                                double delta, const PerturbOptions& opts) {
  const GroupAction& inner = model.inner();
  const int k = inner.algebra_dim();
  const double zero_tol =
      opts.zero_tol > 0 ? opts.zero_tol : default_zero_tol(x0);

  ZeroCertificate cert;
  cert.x0 = x0;
  cert.delta_used = delta;
  cert.zero_tol = zero_tol;
  cert.lambda_margin = opts.lambda_margin;
  cert.seed = opts.seed;

  StabilizerData stab = stabilizer(inner, x0, opts.rank_tol);
  MomentValue mu0 = model.moment(x0);
  cert.mu_norm_initial = mu0.norm();

  if (stab.dim > 0) {
    double ortho = (stab.basis_of_kx.transpose() * mu0).norm();
    if (ortho > 1e-9 * (1.0 + mu0.norm())) {
      fail(ErrorCode::OrthogonalityFailed,
           "mu(x0) has a stabilizer component of size " + std::to_string(ortho));
    }
  }

  const int m = k - stab.dim;
  if (m == 0) {
    // Moment values are orthogonal to stabilizer directions, so a full
    // stabilizer forces mu(x0) = 0.
    if (cert.mu_norm_initial >= zero_tol) {
      fail(ErrorCode::InternalInconsistency,
           "full stabilizer with mu(x0) != 0 violates the orthogonality law");
    }
    cert.eta = Eigen::VectorXd::Zero(k);
    cert.y = x0;
    cert.mu_norm_final = cert.mu_norm_initial;
    cert.eta_norm = 0.0;
    cert.lambda_used = 0.0;
    cert.lambda_samples = 0;
    return cert;
  }

  cert.lambda_samples = opts.lambda_samples;
  cert.lambda_used = lambda_bound(model, x0, delta, opts.lambda_samples,
                                  opts.lambda_margin, opts.seed, opts.rank_tol);

  if (cert.lambda_used * cert.mu_norm_initial >= delta) {
    std::ostringstream msg;
    msg << "lambda * ||mu(x0)|| = " << cert.lambda_used * cert.mu_norm_initial
        << " >= delta = " << delta;
    fail(ErrorCode::HypothesisFailed, msg.str());
  }

  Eigen::VectorXd eta = Eigen::VectorXd::Zero(k);
  StatePoint y = x0;
  double mu_norm = cert.mu_norm_initial;
  const double max_step = delta / 8.0;

  for (int step = 0; step < opts.max_steps && mu_norm >= zero_tol; ++step) {
    MomentValue mu = model.moment(y);
    Eigen::MatrixXd q = slice_q_on(model, y, stab.complement);
    Eigen::VectorXd rhs = stab.complement.transpose() * mu;
    Eigen::VectorXd dc = -q.ldlt().solve(rhs);
    Eigen::VectorXd deta = stab.complement * dc;
    if (deta.norm() > max_step) deta *= max_step / deta.norm();

    double alpha = 1.0;
    bool accepted = false;
    while (alpha > 1e-12) {
      Eigen::VectorXd eta_try = eta + alpha * deta;
      if (eta_try.norm() >= delta) {
        alpha *= 0.5;
        continue;
      }
      StatePoint y_try =
          exp_action(inner, eta_try, 1.0, x0, FlowDirection::imaginary);
      if (y_try.norm() > model.ball_radius() * (1.0 + 1e-12)) {
        fail(ErrorCode::LeftBall,
             "continuation path left the model ball at ||eta|| = " +
                 std::to_string(eta_try.norm()));
      }
      double mu_try = model.moment(y_try).norm();
      if (mu_try < mu_norm) {
        eta = eta_try;
        y = y_try;
        mu_norm = mu_try;
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) {
      if (eta.norm() + 1e-12 >= delta) {
        fail(ErrorCode::LeftBall,
             "path pinned against the delta-ball; lambda was underestimated");
      }
      fail(ErrorCode::Stagnation,
           "Newton continuation stalled with ||mu|| = " + std::to_string(mu_norm));
    }
  }

  if (mu_norm >= zero_tol) {
    fail(ErrorCode::MaxIterExceeded,
         "continuation did not reach zero_tol; ||mu|| = " +
             std::to_string(mu_norm));
  }

  cert.eta = eta;
  cert.y = y;
  cert.mu_norm_final = mu_norm;
  cert.eta_norm = eta.norm();

  if (cert.eta_norm >
      cert.lambda_used * cert.mu_norm_initial * (1.0 + 1e-6)) {
    fail(ErrorCode::LeftBall,
         "||eta|| exceeded lambda * ||mu(x0)||; lambda was underestimated");
  }
  return cert;
}

CertificateCheck check_certificate(const SliceModel& model,
                                   const ZeroCertificate& cert) {
  CertificateCheck out;
  auto flag = [&](const std::string& why) { out.failures.push_back(why); };

  StatePoint y2 = exp_action(model.inner(), cert.eta, 1.0, cert.x0,
                             FlowDirection::imaginary);
  if ((y2.coords - cert.y.coords).norm() > 1e-9 * (1.0 + cert.y.norm())) {
    flag("stored y does not match exp(i eta) x0");
  }
  if (std::abs(cert.eta.norm() - cert.eta_norm) >
      1e-12 * (1.0 + cert.eta_norm)) {
    flag("eta_norm does not match ||eta||");
  }
  double mu0 = model.moment(cert.x0).norm();
  if (std::abs(mu0 - cert.mu_norm_initial) > 1e-12 * (1.0 + mu0)) {
    flag("mu_norm_initial does not match recomputed ||mu(x0)||");
  }
  double muf = model.moment(y2).norm();
  if (std::abs(muf - cert.mu_norm_final) > 1e-12 * (1.0 + mu0)) {
    flag("mu_norm_final does not match recomputed ||mu(y)||");
  }
  if (!(muf < cert.zero_tol)) flag("||mu(y)|| is not below zero_tol");
  if (!(cert.lambda_used * cert.mu_norm_initial < cert.delta_used)) {
    flag("hypothesis lambda * ||mu(x0)|| < delta does not hold");
  }
  if (cert.eta_norm >
      cert.lambda_used * cert.mu_norm_initial * (1.0 + 1e-6)) {
    flag("||eta|| exceeds lambda * ||mu(x0)||");
  }
  StabilizerData stab = stabilizer(model.inner(), cert.x0);
  if (stab.dim > 0 &&
      (stab.basis_of_kx.transpose() * cert.eta).norm() >
          1e-9 * (1.0 + cert.eta_norm)) {
    flag("eta is not orthogonal to the stabilizer of x0");
  }
  if (cert.lambda_samples > 0) {
    try {
      double lam =
          lambda_bound(model, cert.x0, cert.delta_used, cert.lambda_samples,
                       cert.lambda_margin, cert.seed);
      if (std::abs(lam - cert.lambda_used) > 1e-9 * (1.0 + lam)) {
        flag("lambda_used does not match the recomputed deterministic bound");
      }
    } catch (const Error& e) {
      flag(std::string("lambda recomputation failed: ") + e.what());
    }
  } else if (cert.eta_norm != 0.0) {
    flag("trivial certificate with nonzero eta");
  }
  out.ok = out.failures.empty();
  return out;
}

ScalingReport scaling_search(const SliceModel& model, const StatePoint& v,
                             double delta, const ScalingOptions& opts) {
  ScalingReport rep;
  rep.v = v;

  StabilityVerdict lin = kempf_ness_flow(model.inner(), v);
  if (lin.cls == StabilityClass::unstable ||
      lin.cls == StabilityClass::semistable_not_polystable) {
    fail(ErrorCode::PreconditionFailed,
         std::string("v is ") + stability_class_name(lin.cls) +
             " for the linearized action");
  }
  StatePoint base = v;
  if (model.hessian_moment(base.coords).norm() >
      opts.balance_tol * std::max(1.0, base.norm2)) {
    // Norm minimization over the orbit balances the linear moment first.
    if (!lin.zero_point) {
      fail(ErrorCode::PreconditionFailed, "no balanced representative found");
    }
    base = *lin.zero_point;
    if (model.hessian_moment(base.coords).norm() >
        opts.balance_tol * std::max(1.0, base.norm2)) {
      fail(ErrorCode::PreconditionFailed,
           "flow representative does not balance the linearized moment map");
    }
  }

  const double ratio =
      opts.t_count > 1
          ? std::pow(opts.t_stop / opts.t_start, 1.0 / (opts.t_count - 1))
          : 1.0;

  double t = opts.t_start;
  for (int i = 0; i < opts.t_count; ++i, t *= ratio) {
    StatePoint x(VectorXc(t * base.coords));
    if (x.norm() > model.ball_radius()) continue;

    ScalingSample s;
    s.t = t;
    s.mu_norm = model.moment(x).norm();
    try {
      double lam = lambda_bound(model, x, delta, opts.perturb.lambda_samples,
                                opts.perturb.lambda_margin, opts.perturb.seed,
                                opts.perturb.rank_tol);
      s.lambda_estimate = lam / (1.0 + opts.perturb.lambda_margin);
      s.product = lam * s.mu_norm;
      s.hypothesis_ok = s.product < delta;
    } catch (const Error& e) {
      if (e.code() == ErrorCode::BallExitsModel) {
        rep.samples.push_back(s);
        continue;
      }
      if (e.code() != ErrorCode::EmptyComplement) throw;
      // Full stabilizer: a zero moment gives the trivial certificate.
      s.hypothesis_ok = s.mu_norm < default_zero_tol(x);
    }
    rep.samples.push_back(s);

    if (s.hypothesis_ok && !rep.found) {
      rep.certificate = perturb_to_zero(model, x, delta, opts.perturb);
      rep.t_star = t;
      rep.found = true;
    }
  }

  // Decay diagnostics over the nonvanishing samples.
  std::vector<std::pair<double, double>> pts;
  for (const auto& s : rep.samples) {
    if (s.mu_norm > 1e-300) pts.emplace_back(std::log(s.t), std::log(s.mu_norm));
  }
  if (pts.size() >= 2) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (auto& [x, y] : pts) {
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
    }
    double n = static_cast<double>(pts.size());
    rep.decay_slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  } else {
    rep.decay_slope = std::numeric_limits<double>::quiet_NaN();
  }
  return rep;
}

}  // namespace knt
