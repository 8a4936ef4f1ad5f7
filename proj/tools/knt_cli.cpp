// knt — moment-map stability toolkit command-line driver.

#include <CLI11.hpp>
#include <chrono>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "knt/io.hpp"

namespace {

using knt::Json;

constexpr int kExitOk = 0;
constexpr int kExitRefusal = 2;
constexpr int kExitInconsistency = 3;
constexpr int kExitParse = 4;

int exit_code_for(knt::ErrorCode code) {
  switch (code) {
    case knt::ErrorCode::ParseError:
    case knt::ErrorCode::SchemaMismatch:
      return kExitParse;
    case knt::ErrorCode::HypothesisFailed:
    case knt::ErrorCode::NeverSatisfied:
    case knt::ErrorCode::PreconditionFailed:
    case knt::ErrorCode::NoLimit:
    case knt::ErrorCode::EmptyComplement:
    case knt::ErrorCode::OutsideBall:
    case knt::ErrorCode::BallExitsModel:
      return kExitRefusal;
    default:
      return kExitInconsistency;
  }
}

struct Output {
  std::string format = "text";
  std::string out_path;
  Json report;

  void emit() const {
    std::string text = format == "machine"
                           ? knt::canonical_dump(report)
                           : to_text();
    if (out_path.empty()) {
      std::cout << text;
    } else {
      std::ofstream out(out_path);
      out << text;
    }
  }

  std::string to_text() const {
    std::string s;
    render(report, 0, s);
    return s;
  }

 private:
  static void render(const Json& j, int depth, std::string& s) {
    std::string pad(2 * depth, ' ');
    if (j.is_object()) {
      for (const auto& [k, v] : j.items()) {
        if (v.is_object() || (v.is_array() && !v.empty() && v[0].is_object())) {
          s += pad + k + ":\n";
          render(v, depth + 1, s);
        } else {
          s += pad + k + " = " + v.dump() + "\n";
        }
      }
    } else if (j.is_array()) {
      for (const auto& v : j) {
        render(v, depth, s);
        s += "\n";
      }
    } else {
      s += pad + j.dump() + "\n";
    }
  }
};

const knt::StatePoint& named_point(const knt::SpecFile& spec,
                                   const std::string& name) {
  auto it = spec.points.find(name);
  if (it == spec.points.end()) {
    knt::fail(knt::ErrorCode::ParseError, "unknown point '" + name + "'");
  }
  return it->second;
}

const knt::SliceModel& named_model(const knt::SpecFile& spec,
                                   const std::string& name) {
  auto it = spec.models.find(name);
  if (it == spec.models.end()) {
    knt::fail(knt::ErrorCode::ParseError, "unknown model '" + name + "'");
  }
  return it->second;
}

knt::FlowOptions flow_options(const knt::SpecFile& spec) {
  knt::FlowOptions opts;
  auto get = [&](const char* name, double& slot) {
    auto it = spec.tolerances.find(name);
    if (it != spec.tolerances.end()) slot = it->second;
  };
  get("zero_tol", opts.zero_tol);
  get("rank_tol", opts.rank_tol);
  get("support_tol", opts.support_tol);
  return opts;
}

Json run_selftest(const knt::SpecFile& spec) {
  Json checks = Json::array();
  bool all_ok = true;
  auto record = [&](const std::string& name, bool ok, const std::string& note) {
    checks.push_back(Json{{"check", name}, {"pass", ok}, {"note", note}});
    all_ok = all_ok && ok;
  };

  const knt::GroupAction& action = spec.action;
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto random_vec = [&](int n) {
    knt::VectorXc v(n);
    for (int i = 0; i < n; ++i) v(i) = knt::Complex(gauss(rng), gauss(rng));
    return v;
  };

  // Basis invariants.
  {
    double anti = 0.0, ortho = 0.0;
    const auto& gens = action.basis().generators;
    for (size_t i = 0; i < gens.size(); ++i) {
      anti = std::max(anti, (gens[i] + gens[i].adjoint()).norm());
      for (size_t j = 0; j < gens.size(); ++j) {
        double want = i == j ? 1.0 : 0.0;
        ortho = std::max(ortho,
                         std::abs(knt::trace_form(gens[i], gens[j]) - want));
      }
    }
    record("basis_anti_hermitian", anti < 1e-12,
           "max defect " + std::to_string(anti));
    record("basis_orthonormal", ortho < 1e-10,
           "max defect " + std::to_string(ortho));
    record("basis_closure", action.basis().closure_residual < 1e-10,
           "residual " + std::to_string(action.basis().closure_residual));
  }

  // Linearity of the infinitesimal action.
  {
    double worst = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
      knt::StatePoint x(random_vec(action.ambient_dim()));
      double t = 0.25 + 2.0 * std::abs(gauss(rng));
      knt::StatePoint tx(knt::VectorXc(t * x.coords));
      Eigen::MatrixXd s1 = knt::infinitesimal_action(action, tx);
      Eigen::MatrixXd s2 = t * knt::infinitesimal_action(action, x);
      worst = std::max(worst, (s1 - s2).norm() / std::max(1.0, s2.norm()));
    }
    record("sigma_linear_in_x", worst < 1e-12, "max rel " + std::to_string(worst));
  }

  // Moment-map defining identity against finite differences.
  {
    double worst = 0.0;
    const double h = 1e-5;
    for (int trial = 0; trial < 50; ++trial) {
      knt::VectorXc v = random_vec(action.ambient_dim());
      knt::VectorXc u = random_vec(action.ambient_dim());
      Eigen::VectorXd xi(action.algebra_dim());
      for (int i = 0; i < xi.size(); ++i) xi(i) = gauss(rng);
      Eigen::VectorXd fd =
          (knt::linear_moment(action, knt::VectorXc(v + h * u)) -
           knt::linear_moment(action, knt::VectorXc(v - h * u))) /
          (2.0 * h);
      double lhs = fd.dot(xi);
      double rhs = knt::omega0(action.apply(xi, v), u);
      worst = std::max(worst, std::abs(lhs - rhs));
    }
    record("moment_defining_identity", worst < 1e-8,
           "max defect " + std::to_string(worst));
  }

  // Orthogonality mu(x) in the complement of the stabilizer, per model.
  for (const auto& [name, model] : spec.models) {
    double worst = 0.0;
    std::uniform_int_distribution<int> coin(0, 2);
    for (int trial = 0; trial < 50; ++trial) {
      knt::VectorXc x = random_vec(model.inner().ambient_dim());
      for (int i = 0; i < x.size(); ++i) {
        if (coin(rng) == 0) x(i) = 0.0;
      }
      double nrm = x.norm();
      if (nrm > 0) x *= 0.5 * model.ball_radius() / nrm;
      Eigen::VectorXd pairing = knt::futaki_character(model, knt::StatePoint(x));
      if (pairing.size() > 0) {
        worst = std::max(worst, pairing.cwiseAbs().maxCoeff());
      }
    }
    record("orthogonality_" + name, worst < 1e-9,
           "max pairing " + std::to_string(worst));
  }

  // Flow against the exact oracle on the declared points.
  if (action.is_torus()) {
    int agree = 0, total = 0;
    for (const auto& [name, point] : spec.points) {
      knt::CrossReport rep =
          knt::cross_validate(action, point, flow_options(spec), false);
      ++total;
      if (rep.agree) ++agree;
    }
    record("flow_oracle_agreement", agree == total,
           std::to_string(agree) + "/" + std::to_string(total));
  }

  Json out{{"checks", checks}, {"all_pass", all_ok}};
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"knt — GIT stability, Kempf-Ness flow, and certified "
               "moment-map perturbation"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string spec_path;
  std::string out_path;
  std::string format = "text";
  unsigned seed_override = 0;
  bool seed_set = false;
  std::vector<std::string> tol_overrides;
  app.add_option("--spec", spec_path, "problem specification file");
  app.add_option("--out", out_path, "write the report here instead of stdout");
  app.add_option("--format", format, "text | machine")
      ->check(CLI::IsMember({"text", "machine"}));
  app.add_option("--seed", seed_override, "override the spec seed")
      ->each([&](const std::string&) { seed_set = true; });
  app.add_option("--tol", tol_overrides, "tolerance override name=value");

  std::string point_name, model_name, ops_text, t_grid = "1e-1:1e-3:20";
  double delta = 0.5;

  auto* classify = app.add_subcommand(
      "classify", "stability verdict with oracle cross-validation");
  classify->add_option("point", point_name)->required();

  auto* flow = app.add_subcommand("flow", "Kempf-Ness flow trace");
  flow->add_option("point", point_name)->required();

  auto* perturb =
      app.add_subcommand("perturb", "certified perturbation to a moment zero");
  perturb->add_option("model", model_name)->required();
  perturb->add_option("point", point_name)->required();
  perturb->add_option("--delta", delta, "algebra-ball radius for the perturbation hypothesis");

  auto* scan = app.add_subcommand("scan", "scaling search over a t-grid");
  scan->add_option("model", model_name)->required();
  scan->add_option("point", point_name)->required();
  scan->add_option("--delta", delta);
  scan->add_option("--t-grid", t_grid, "start:stop:count");

  auto* degenerate =
      app.add_subcommand("degenerate", "one-parameter degeneration record");
  degenerate->add_option("point", point_name)->required();
  degenerate->add_option("--ops", ops_text, "comma-separated 1-PS entries")
      ->required();

  auto* selftest = app.add_subcommand("selftest", "run the invariant suite");

  std::string verify_path;
  auto* verify = app.add_subcommand("verify", "re-verify stored certificates");
  verify->add_option("report", verify_path)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? 0 : kExitParse;
  }

  Output output;
  output.format = format;
  output.out_path = out_path;

  try {
    Json results = Json::array();
    std::string command;
    std::string spec_digest;
    unsigned seed = 0;

    auto started = std::chrono::steady_clock::now();

    if (verify->parsed()) {
      command = "verify";
      std::ifstream in(verify_path);
      if (!in) knt::fail(knt::ErrorCode::ParseError, "cannot open " + verify_path);
      Json doc = Json::parse(in, nullptr, false);
      if (doc.is_discarded()) {
        knt::fail(knt::ErrorCode::ParseError, "invalid JSON report");
      }
      std::vector<Json> certs;
      std::function<void(const Json&)> collect = [&](const Json& j) {
        if (j.is_object()) {
          if (j.value("type", "") == "zero_certificate") {
            certs.push_back(j);
            return;
          }
          for (const auto& [k, v] : j.items()) collect(v);
        } else if (j.is_array()) {
          for (const auto& v : j) collect(v);
        }
      };
      collect(doc);
      if (certs.empty()) {
        knt::fail(knt::ErrorCode::SchemaMismatch, "no certificates in report");
      }
      bool all_ok = true;
      for (const auto& c : certs) {
        knt::CertificateCheck check = knt::verify_certificate_json(c);
        all_ok = all_ok && check.ok;
        results.push_back(Json{{"ok", check.ok}, {"failures", check.failures}});
      }
      Json report{{"schema_version", knt::kSchemaVersion},
                  {"tool_version", knt::kToolVersion},
                  {"command", command},
                  {"results", results},
                  {"all_ok", all_ok}};
      output.report = report;
      output.emit();
      return all_ok ? kExitOk : kExitInconsistency;
    }

    if (spec_path.empty()) {
      knt::fail(knt::ErrorCode::ParseError, "--spec is required");
    }
    knt::SpecFile spec = knt::load_spec(spec_path);
    if (seed_set) spec.seed = seed_override;
    for (const auto& t : tol_overrides) {
      size_t eq = t.find('=');
      if (eq == std::string::npos) {
        knt::fail(knt::ErrorCode::ParseError, "--tol wants name=value");
      }
      spec.tolerances[t.substr(0, eq)] = std::stod(t.substr(eq + 1));
    }
    spec_digest = spec.digest;
    seed = spec.seed;

    int exit_code = kExitOk;

    if (classify->parsed()) {
      command = "classify";
      const knt::StatePoint& p = named_point(spec, point_name);
      if (spec.action.is_torus()) {
        knt::CrossReport rep =
            knt::cross_validate(spec.action, p, flow_options(spec), false);
        results.push_back(Json{{"point", point_name},
                               {"flow", knt::verdict_to_json(rep.flow)},
                               {"oracle", knt::verdict_to_json(rep.oracle)},
                               {"agree", rep.agree}});
        if (!rep.agree) exit_code = kExitInconsistency;
      } else {
        knt::StabilityVerdict v =
            knt::kempf_ness_flow(spec.action, p, flow_options(spec));
        results.push_back(
            Json{{"point", point_name}, {"flow", knt::verdict_to_json(v)}});
      }
    } else if (flow->parsed()) {
      command = "flow";
      knt::StabilityVerdict v = knt::kempf_ness_flow(
          spec.action, named_point(spec, point_name), flow_options(spec));
      results.push_back(
          Json{{"point", point_name}, {"verdict", knt::verdict_to_json(v)}});
    } else if (perturb->parsed()) {
      command = "perturb";
      const knt::SliceModel& model = named_model(spec, model_name);
      knt::PerturbOptions opts;
      opts.seed = spec.seed;
      if (spec.tolerances.count("zero_tol")) {
        opts.zero_tol = spec.tolerances.at("zero_tol");
      }
      knt::ZeroCertificate cert =
          knt::perturb_to_zero(model, named_point(spec, point_name), delta, opts);
      results.push_back(Json{{"point", point_name},
                             {"model", model_name},
                             {"certificate",
                              knt::certificate_to_json(cert, model)}});
    } else if (scan->parsed()) {
      command = "scan";
      const knt::SliceModel& model = named_model(spec, model_name);
      knt::ScalingOptions opts;
      opts.perturb.seed = spec.seed;
      // start:stop:count
      {
        std::istringstream in(t_grid);
        std::string a, b, c;
        if (!std::getline(in, a, ':') || !std::getline(in, b, ':') ||
            !std::getline(in, c, ':')) {
          knt::fail(knt::ErrorCode::ParseError, "--t-grid wants start:stop:count");
        }
        opts.t_start = std::stod(a);
        opts.t_stop = std::stod(b);
        opts.t_count = std::stoi(c);
      }
      knt::ScalingReport rep = knt::scaling_search(
          model, named_point(spec, point_name), delta, opts);
      results.push_back(Json{{"point", point_name},
                             {"model", model_name},
                             {"scan", knt::scaling_report_to_json(rep, model)}});
      if (!rep.found) exit_code = kExitRefusal;
    } else if (degenerate->parsed()) {
      command = "degenerate";
      Json ops_json = Json::array();
      std::istringstream in(ops_text);
      std::string item;
      while (std::getline(in, item, ',')) ops_json.push_back(item);
      knt::OneParameterSubgroup rho = knt::ops_from_json(ops_json);
      knt::DegenerationRecord rec = knt::analyze_degeneration(
          spec.action, rho, named_point(spec, point_name));
      results.push_back(Json{{"point", point_name},
                             {"record", knt::degeneration_to_json(rec)}});
    } else if (selftest->parsed()) {
      command = "selftest";
      Json st = run_selftest(spec);
      results.push_back(st);
      if (!st["all_pass"].get<bool>()) exit_code = kExitInconsistency;
    }

    auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
                       std::chrono::steady_clock::now() - started)
                       .count();

    Json report{{"schema_version", knt::kSchemaVersion},
                {"tool_version", knt::kToolVersion},
                {"spec_digest", spec_digest},
                {"seed", seed},
                {"command", command},
                {"results", results},
                {"wall_ms", elapsed}};
    output.report = report;
    output.emit();
    return exit_code;
  } catch (const knt::Error& e) {
    Json report{{"error", e.what()}};
    output.report = report;
    output.emit();
    std::cerr << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return kExitInconsistency;
  }
}
