// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Run from the repository root (the bundled specs are loaded by
// relative path).
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "knt/invariants.hpp"
#include "knt/io.hpp"
#include "knt/perturb.hpp"

using namespace knt;

namespace {

std::mt19937_64 rng(20260823);

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

StatePoint sparse_random_point(int n) {
  VectorXc v = random_cvec(n);
  std::uniform_int_distribution<int> coin(0, 2);
  for (int i = 0; i < n; ++i) {
    if (coin(rng) == 0) v(i) = 0.0;
  }
  return StatePoint(v);
}

struct Criterion {
  int id;
  std::string summary;
  std::function<bool(std::string&)> run;
};

// Slice models bundled with the repository, used by criteria 3, 4, and 6.
std::vector<std::pair<std::string, SliceModel>> bundled_models() {
  std::vector<std::pair<std::string, SliceModel>> out;
  for (const char* path : {"specs/torus_identity.json", "specs/torus_rank2.json"}) {
    SpecFile spec = load_spec(path);
    for (const auto& [name, model] : spec.models) out.emplace_back(name, model);
  }
  return out;
}

// A vector with vanishing linearized moment for the given model (all inner
// coordinates of equal modulus works for every bundled model: each weight
// row of the linearized action sums to zero over the active block).
StatePoint balanced_vector(const SliceModel& model) {
  int n = model.inner().ambient_dim();
  VectorXc v(n);
  for (int i = 0; i < n; ++i) v(i) = Complex(1.0, 0.0);
  return StatePoint(v);
}

double least_squares_slope(const std::vector<double>& xs,
                           const std::vector<double>& ys) {
  double mx = 0.0, my = 0.0;
  for (size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= xs.size();
  my /= ys.size();
  double num = 0.0, den = 0.0;
  for (size_t i = 0; i < xs.size(); ++i) {
    num += (xs[i] - mx) * (ys[i] - my);
    den += (xs[i] - mx) * (xs[i] - mx);
  }
  return num / den;
}

bool criterion1(std::string& detail) {
  // Finite-difference validation of the moment derivative and the defining
  // identity <d nu_v(u), xi> = Omega_0(sigma_v(xi), u) on 200 random
  // instances.
  const double h = 1e-5;
  double worst = 0.0;
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_int_distribution<int> dim_k(1, 3), dim_n(2, 6);
  for (int trial = 0; trial < 200; ++trial) {
    int k = dim_k(rng), n = std::max(dim_n(rng), k);
    GroupAction a = GroupAction::torus(random_weights(k, n, 5));
    VectorXc v = random_cvec(n), u = random_cvec(n);
    MomentValue analytic = moment_derivative(a, v, u);
    MomentValue fd = (linear_moment(a, VectorXc(v + h * u)) -
                      linear_moment(a, VectorXc(v - h * u))) /
                     (2.0 * h);
    worst = std::max(worst, (analytic - fd).cwiseAbs().maxCoeff());
    Eigen::VectorXd xi(k);
    for (int j = 0; j < k; ++j) xi(j) = gauss(rng);
    double lhs = analytic.dot(xi);
    Eigen::MatrixXd sigma = infinitesimal_action(a, StatePoint(v));
    VectorXc sig_xi = complexify(sigma * xi);
    double rhs = omega0(sig_xi, u);
    worst = std::max(worst, std::abs(lhs - rhs));
  }
  detail = "max residual " + std::to_string(worst) + " over 200 instances";
  return worst < 1e-8;
}

bool criterion2(std::string& detail) {
  // Flow classification agrees with the exact convex-geometry verdict on 200
  // random torus instances.
  std::uniform_int_distribution<int> dim_k(1, 3), dim_n(2, 6);
  int agree = 0;
  for (int trial = 0; trial < 200; ++trial) {
    int k = dim_k(rng), n = std::max(dim_n(rng), k);
    GroupAction a = GroupAction::torus(random_weights(k, n, 5));
    CrossReport rep = cross_validate(a, sparse_random_point(n));
    if (rep.agree) ++agree;
  }
  detail = std::to_string(agree) + "/200 flow vs oracle agreements";
  return agree == 200;
}

bool criterion3(std::string& detail) {
  // Moment-map / stabilizer orthogonality on 500 points across the bundled
  // slice models: the moment value pairs to < 1e-9 with every stabilizer
  // direction.
  auto models = bundled_models();
  std::uniform_real_distribution<double> unif(-0.4, 0.4);
  double worst = 0.0;
  int points = 0;
  while (points < 500) {
    for (const auto& [name, model] : models) {
      int n = model.inner().ambient_dim();
      VectorXc v(n);
      for (int i = 0; i < n; ++i) v(i) = Complex(unif(rng), unif(rng));
      // Zero one coordinate occasionally so nontrivial stabilizers appear.
      if (points % 3 == 0) v(points % n) = 0.0;
      Eigen::VectorXd f = futaki_character(model, StatePoint(v));
      if (f.size() > 0) worst = std::max(worst, f.cwiseAbs().maxCoeff());
      ++points;
      if (points >= 500) break;
    }
  }
  detail = "max stabilizer pairing " + std::to_string(worst) +
           " over 500 points";
  return worst < 1e-9;
}

bool criterion4(std::string& detail) {
  // On each curved bundled model the Taylor defect
  // ||mu(tv) - (t^2/2) nu1(v)|| decays with log-log slope >= 2.9 for a
  // balanced v over t in [1e-3, 1e-1] (20 points). Models with identically
  // zero defect pass trivially.
  double worst_slope = 1e9;
  std::string which;
  for (const auto& [name, model] : bundled_models()) {
    StatePoint v = balanced_vector(model);
    std::vector<double> lt, ld;
    for (int i = 0; i < 20; ++i) {
      double t = std::pow(10.0, -3.0 + 2.0 * i / 19.0);
      double defect = model.taylor_defect(v, t);
      if (defect < 1e-300) continue;  // exactly linear model
      lt.push_back(std::log(t));
      ld.push_back(std::log(defect));
    }
    if (lt.size() < 2) continue;  // defect identically zero: trivially cubic
    double slope = least_squares_slope(lt, ld);
    if (slope < worst_slope) {
      worst_slope = slope;
      which = name;
    }
  }
  detail = "min defect slope " + std::to_string(worst_slope) + " (model " +
           which + ")";
  return worst_slope >= 2.9;
}

bool criterion5(std::string& detail) {
  // On a linear model Lambda_tv scales exactly like t^-2: the product
  // Lambda_tv * t^2 varies by < 1% across the grid.
  SpecFile spec = load_spec("specs/torus_identity.json");
  const SliceModel& model = spec.models.at("identity");
  StatePoint v = balanced_vector(model);
  double lo = 1e300, hi = 0.0;
  for (int i = 0; i < 20; ++i) {
    double t = std::pow(10.0, -3.0 + 2.0 * i / 19.0);
    StatePoint tv(StatePoint((t * v.coords).eval()));
    double lam = slice_q_operator(model, tv).lambda;
    double prod = lam * t * t;
    lo = std::min(lo, prod);
    hi = std::max(hi, prod);
  }
  double variation = (hi - lo) / lo;
  detail = "Lambda*t^2 relative variation " + std::to_string(variation);
  return variation < 0.01;
}

bool criterion6(std::string& detail) {
  // Every scaling search ends in a verifiable certificate or an honest
  // refusal whose recorded products really violate the hypothesis.
  int certs = 0, refusals = 0;
  for (const auto& [name, model] : bundled_models()) {
    StatePoint v = balanced_vector(model);
    for (double delta : {0.25, 1e-12}) {
      ScalingReport rep;
      try {
        rep = scaling_search(model, v, delta);
      } catch (const Error& e) {
        detail = std::string("unexpected error on ") + name + ": " + e.what();
        return false;
      }
      if (rep.found) {
        Json j = certificate_to_json(rep.certificate, model);
        if (!verify_certificate_json(j).ok) {
          detail = "unverifiable certificate on model " + name;
          return false;
        }
        ++certs;
      } else {
        if (rep.samples.empty()) {
          detail = "refusal without sampled evidence on model " + name;
          return false;
        }
        for (const ScalingSample& s : rep.samples) {
          if (s.hypothesis_ok || s.product < delta) {
            detail = "refusal contradicted by its own samples on " + name;
            return false;
          }
        }
        ++refusals;
      }
    }
  }
  detail = std::to_string(certs) + " verified certificates, " +
           std::to_string(refusals) + " honest refusals";
  return certs > 0 && refusals > 0;
}

bool criterion7(std::string& detail) {
  // Stabilizer-dimension semicontinuity on 50 random degenerations with
  // existing limits, strict whenever the limit leaves the orbit.
  std::uniform_int_distribution<int> dim_k(1, 3), dim_n(2, 6), wt(-3, 3);
  int done = 0, violations = 0, strict = 0;
  while (done < 50) {
    int k = dim_k(rng), n = std::max(dim_n(rng), k);
    GroupAction a = GroupAction::torus(random_weights(k, n, 4));
    StatePoint v = sparse_random_point(n);
    Eigen::VectorXi xi(k);
    for (int j = 0; j < k; ++j) xi(j) = wt(rng);
    OneParameterSubgroup rho = OneParameterSubgroup::lattice(xi);
    if (!ops_limit(a, rho, v).exists) continue;
    SemicontinuityReport rep = semicontinuity_scan(a, {{rho, v}});
    violations += static_cast<int>(rep.violations.size());
    strict += rep.strict_jumps;
    ++done;
  }
  detail = std::to_string(violations) + " violations, " +
           std::to_string(strict) + " strict jumps over 50 degenerations";
  return violations == 0;
}

bool criterion8(std::string& detail) {
  // The bundled weights (1,-1,0) example: degenerating (1,0,1) along (1)
  // leaves the orbit, jumps the stabilizer from 0 to 1, and has pairing
  // weight exactly zero.
  SpecFile spec = load_spec("specs/torus_futaki.json");
  StatePoint v = spec.points.at("generic");
  OneParameterSubgroup rho =
      OneParameterSubgroup::lattice((Eigen::VectorXi(1) << 1).finished());
  DegenerationRecord rec = analyze_degeneration(spec.action, rho, v);
  detail = "is_product=" + std::string(rec.is_product ? "true" : "false") +
           ", dims " + std::to_string(rec.dim_start) + "->" +
           std::to_string(rec.dim_limit) + ", weight " +
           std::to_string(rec.weight);
  return !rec.is_product && rec.dim_start == 0 && rec.dim_limit == 1 &&
         rec.weight == 0.0;
}

bool criterion9(std::string& detail) {
  // 200 random single-field mutations of a valid certificate are all
  // rejected by the independent verifier.
  SliceModel model =
      identity_model(GroupAction::torus(
                         (Eigen::MatrixXi(1, 2) << 1, -1).finished()),
                     64.0);
  VectorXc x(2);
  x << Complex(2.0, 0.0), Complex(1.0, 0.0);
  ZeroCertificate cert = perturb_to_zero(model, StatePoint(x), 1.0);
  Json good = certificate_to_json(cert, model);
  if (!verify_certificate_json(good).ok) {
    detail = "baseline certificate failed verification";
    return false;
  }

  std::vector<std::string> leaves;
  std::function<void(const Json&, const std::string&)> walk =
      [&](const Json& node, const std::string& prefix) {
        if (node.is_object()) {
          for (auto it = node.begin(); it != node.end(); ++it) {
            walk(it.value(), prefix + "/" + it.key());
          }
        } else if (node.is_array()) {
          for (size_t i = 0; i < node.size(); ++i) {
            walk(node[i], prefix + "/" + std::to_string(i));
          }
        } else {
          leaves.push_back(prefix);
        }
      };
  walk(good, "");

  std::uniform_int_distribution<size_t> pick(0, leaves.size() - 1);
  std::normal_distribution<double> gauss(0.0, 1.0);
  int rejected = 0;
  for (int trial = 0; trial < 200; ++trial) {
    Json bad = good;
    Json& leaf = bad[Json::json_pointer(leaves[pick(rng)])];
    if (leaf.is_number()) {
      double x0 = leaf.get<double>();
      double bump = std::max(1.0, std::abs(x0)) *
                    std::pow(10.0, -1.0 - (trial % 8));
      leaf = x0 + (gauss(rng) < 0 ? -bump : bump);
    } else if (leaf.is_string()) {
      std::string s = leaf.get<std::string>();
      s.push_back('a' + trial % 26);
      leaf = s;
    } else if (leaf.is_boolean()) {
      leaf = !leaf.get<bool>();
    } else {
      leaf = 1;
    }
    bool ok = true;
    try {
      ok = verify_certificate_json(bad).ok;
    } catch (const Error&) {
      ok = false;
    }
    if (!ok) ++rejected;
  }
  detail = std::to_string(rejected) + "/200 mutations rejected";
  return rejected == 200;
}

}  // namespace

int main() {
  std::vector<Criterion> criteria = {
      {1, "moment derivative matches finite differences and the defining"
          " identity",
       criterion1},
      {2, "flow classification agrees with the exact torus verdict",
       criterion2},
      {3, "moment values are orthogonal to stabilizer directions",
       criterion3},
      {4, "curved-model Taylor defect decays at least cubically", criterion4},
      {5, "linear-model Lambda scales exactly like t^-2", criterion5},
      {6, "scaling searches yield verified certificates or honest refusals",
       criterion6},
      {7, "stabilizer dimension is semicontinuous along degenerations",
       criterion7},
      {8, "weights (1,-1,0) degeneration: non-product, jump 0->1, weight 0",
       criterion8},
      {9, "mutated certificates are always rejected", criterion9},
  };

  int failures = 0;
  for (const Criterion& c : criteria) {
    std::string detail;
    bool ok = false;
    try {
      ok = c.run(detail);
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
    }
    if (!ok) ++failures;
    std::printf("[%s] criterion %d: %s (%s)\n", ok ? "PASS" : "FAIL", c.id,
                c.summary.c_str(), detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
