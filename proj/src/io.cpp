#include "knt/io.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

// json.hpp comes in through knt/io.hpp

namespace knt {

std::string canonical_dump(const Json& j) { return j.dump(2) + "\n"; }

std::string content_digest(const std::string& text) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0') << h;
  return out.str();
}

Json complex_to_json(const Complex& z) { return Json::array({z.real(), z.imag()}); }

Complex complex_from_json(const Json& j) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    fail(ErrorCode::ParseError, "complex numbers are [re, im] arrays");
  }
  return Complex(j[0].get<double>(), j[1].get<double>());
}

Json point_to_json(const StatePoint& p) {
  Json out = Json::array();
  for (int i = 0; i < p.dim(); ++i) out.push_back(complex_to_json(p.coords(i)));
  return out;
}

StatePoint point_from_json(const Json& j) {
  if (!j.is_array()) fail(ErrorCode::ParseError, "point must be an array");
  VectorXc v(j.size());
  for (size_t i = 0; i < j.size(); ++i) v(i) = complex_from_json(j[i]);
  return StatePoint(std::move(v));
}

namespace {

std::string rational_to_string(long long num, long long den) {
  if (den == 1) return std::to_string(num);
  return std::to_string(num) + "/" + std::to_string(den);
}

std::pair<long long, long long> rational_from_string(const std::string& s) {
  size_t slash = s.find('/');
  try {
    if (slash == std::string::npos) return {std::stoll(s), 1};
    long long num = std::stoll(s.substr(0, slash));
    long long den = std::stoll(s.substr(slash + 1));
    if (den <= 0) fail(ErrorCode::ParseError, "nonpositive denominator");
    return {num, den};
  } catch (const std::invalid_argument&) {
    fail(ErrorCode::ParseError, "malformed rational '" + s + "'");
  } catch (const std::out_of_range&) {
    fail(ErrorCode::ParseError, "rational out of range '" + s + "'");
  }
}

Json real_vector_to_json(const Eigen::VectorXd& v) {
  Json out = Json::array();
  for (int i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Eigen::VectorXd real_vector_from_json(const Json& j) {
  Eigen::VectorXd v(j.size());
  for (size_t i = 0; i < j.size(); ++i) v(i) = j[i].get<double>();
  return v;
}

Eigen::MatrixXi weights_from_json(const Json& j) {
  if (!j.is_array() || j.empty()) {
    fail(ErrorCode::ParseError, "weights must be a nonempty array of rows");
  }
  const size_t cols = j[0].is_array() ? j[0].size() : 0;
  Eigen::MatrixXi w(j.size(), cols);
  for (size_t r = 0; r < j.size(); ++r) {
    if (!j[r].is_array() || j[r].size() != cols) {
      fail(ErrorCode::ParseError, "ragged weight matrix");
    }
    for (size_t c = 0; c < cols; ++c) {
      if (!j[r][c].is_number_integer()) {
        fail(ErrorCode::ParseError, "weights must be integers");
      }
      w(r, c) = j[r][c].get<int>();
    }
  }
  return w;
}

Json weights_to_json(const Eigen::MatrixXi& w) {
  Json out = Json::array();
  for (int r = 0; r < w.rows(); ++r) {
    Json row = Json::array();
    for (int c = 0; c < w.cols(); ++c) row.push_back(w(r, c));
    out.push_back(row);
  }
  return out;
}

MatrixXc matrix_from_json(const Json& j) {
  if (!j.is_array() || j.empty()) fail(ErrorCode::ParseError, "empty matrix");
  const size_t n = j.size();
  MatrixXc m(n, j[0].size());
  for (size_t r = 0; r < n; ++r) {
    if (!j[r].is_array() || j[r].size() != static_cast<size_t>(m.cols())) {
      fail(ErrorCode::ParseError, "ragged matrix");
    }
    for (size_t c = 0; c < j[r].size(); ++c) {
      m(r, c) = complex_from_json(j[r][c]);
    }
  }
  return m;
}

Json matrix_to_json(const MatrixXc& m) {
  Json out = Json::array();
  for (int r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (int c = 0; c < m.cols(); ++c) row.push_back(complex_to_json(m(r, c)));
    out.push_back(row);
  }
  return out;
}

std::vector<Polynomial> phi_from_json(const Json& j) {
  if (!j.is_array()) fail(ErrorCode::ParseError, "phi must be an array");
  std::vector<Polynomial> phi;
  for (const auto& coord : j) {
    Polynomial p;
    for (const auto& term : coord) {
      Monomial m;
      m.coeff = complex_from_json(term.at("coeff"));
      const auto& exps = term.at("exponents");
      m.exponents = Eigen::VectorXi(exps.size());
      for (size_t i = 0; i < exps.size(); ++i) {
        m.exponents(static_cast<int>(i)) = exps[i].get<int>();
      }
      p.push_back(std::move(m));
    }
    phi.push_back(std::move(p));
  }
  return phi;
}

Json phi_to_json(const std::vector<Polynomial>& phi) {
  Json out = Json::array();
  for (const auto& p : phi) {
    Json coord = Json::array();
    for (const auto& m : p) {
      Json exps = Json::array();
      for (int i = 0; i < m.exponents.size(); ++i) exps.push_back(m.exponents(i));
      coord.push_back(Json{{"coeff", complex_to_json(m.coeff)},
                           {"exponents", exps}});
    }
    out.push_back(coord);
  }
  return out;
}

GroupAction action_from_json(const Json& group) {
  const std::string type = group.at("type").get<std::string>();
  if (type == "torus") {
    return GroupAction::torus(weights_from_json(group.at("weights")));
  }
  if (type == "matrix") {
    std::vector<MatrixXc> gens;
    for (const auto& g : group.at("generators")) {
      gens.push_back(matrix_from_json(g));
    }
    return GroupAction::matrix_rep(gens);
  }
  fail(ErrorCode::ParseError, "group type must be 'torus' or 'matrix'");
}

Json action_to_json(const GroupAction& action) {
  if (action.is_torus()) {
    return Json{{"type", "torus"},
                {"weights", weights_to_json(action.lattice_weights())}};
  }
  Json gens = Json::array();
  for (const auto& g : action.rep()) gens.push_back(matrix_to_json(g));
  return Json{{"type", "matrix"}, {"generators", gens}};
}

SliceModel model_from_json_with_inner(const GroupAction& inner, const Json& j,
                                      unsigned seed) {
  double radius = j.at("ball_radius").get<double>();
  std::vector<Polynomial> phi = phi_from_json(j.at("phi"));
  if (j.contains("outer_weights")) {
    GroupAction outer =
        GroupAction::induced(inner, weights_from_json(j.at("outer_weights")));
    return SliceModel(inner, std::move(outer), std::move(phi), radius, seed);
  }
  if (j.contains("outer_generators")) {
    std::vector<MatrixXc> gens;
    for (const auto& g : j.at("outer_generators")) {
      gens.push_back(matrix_from_json(g));
    }
    GroupAction outer = GroupAction::induced(inner, gens);
    return SliceModel(inner, std::move(outer), std::move(phi), radius, seed);
  }
  fail(ErrorCode::ParseError,
       "model needs outer_weights or outer_generators");
}

Json model_outer_json(const SliceModel& model) {
  if (model.outer().is_torus()) {
    return weights_to_json(model.outer().lattice_weights());
  }
  return Json();
}

}  // namespace

SpecFile parse_spec(const Json& j) {
  try {
    if (!j.is_object()) fail(ErrorCode::ParseError, "spec must be an object");
    if (!j.contains("schema_version") ||
        j.at("schema_version").get<int>() != kSchemaVersion) {
      fail(ErrorCode::SchemaMismatch, "unsupported or missing schema_version");
    }
    SpecFile spec{action_from_json(j.at("group"))};
    spec.seed = j.value("seed", 0u);
    if (j.contains("points")) {
      for (const auto& [name, pj] : j.at("points").items()) {
        StatePoint p = point_from_json(pj);
        if (p.dim() != spec.action.ambient_dim()) {
          fail(ErrorCode::ParseError, "point '" + name + "' has wrong dimension");
        }
        spec.points.emplace(name, std::move(p));
      }
    }
    if (j.contains("models")) {
      for (const auto& [name, mj] : j.at("models").items()) {
        spec.models.emplace(
            name, model_from_json_with_inner(spec.action, mj, spec.seed));
      }
    }
    if (j.contains("tolerances")) {
      for (const auto& [name, tj] : j.at("tolerances").items()) {
        spec.tolerances[name] = tj.get<double>();
      }
    }
    spec.digest = content_digest(canonical_dump(j));
    return spec;
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    fail(ErrorCode::ParseError, e.what());
  }
}

SpecFile parse_spec_text(const std::string& text) {
  Json j = Json::parse(text, nullptr, false);
  if (j.is_discarded()) fail(ErrorCode::ParseError, "invalid JSON");
  return parse_spec(j);
}

SpecFile load_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::ParseError, "cannot open spec file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_spec_text(buf.str());
}

Json ops_to_json(const OneParameterSubgroup& rho) {
  Json out = Json::array();
  for (int i = 0; i < rho.num.size(); ++i) {
    out.push_back(rational_to_string(rho.num(i), rho.den(i)));
  }
  return out;
}

OneParameterSubgroup ops_from_json(const Json& j) {
  if (!j.is_array()) fail(ErrorCode::ParseError, "1-PS must be an array");
  Eigen::VectorXi num(j.size()), den(j.size());
  bool all_integer = true;
  for (size_t i = 0; i < j.size(); ++i) {
    std::pair<long long, long long> r =
        j[i].is_number_integer()
            ? std::pair<long long, long long>{j[i].get<long long>(), 1}
            : rational_from_string(j[i].get<std::string>());
    num(static_cast<int>(i)) = static_cast<int>(r.first);
    den(static_cast<int>(i)) = static_cast<int>(r.second);
    all_integer = all_integer && r.second == 1;
  }
  return all_integer ? OneParameterSubgroup::lattice(num)
                     : OneParameterSubgroup::rational(num, den);
}

Json verdict_to_json(const StabilityVerdict& v) {
  Json out{{"class", stability_class_name(v.cls)},
           {"iterations", v.iterations},
           {"final_nu_norm", v.final_nu_norm},
           {"final_norm", v.final_norm},
           {"certified", v.certified}};
  if (!v.note.empty()) out["note"] = v.note;
  if (v.witness) out["witness"] = ops_to_json(*v.witness);
  if (v.zero_point) out["zero_point"] = point_to_json(*v.zero_point);
  return out;
}

Json degeneration_to_json(const DegenerationRecord& rec) {
  return Json{{"rho", ops_to_json(rec.rho)},
              {"start", point_to_json(rec.start)},
              {"limit", point_to_json(rec.limit)},
              {"weight", rec.weight},
              {"dim_start", rec.dim_start},
              {"dim_limit", rec.dim_limit},
              {"is_product", rec.is_product},
              {"orbit_distance", rec.orbit_distance}};
}

Json model_to_json(const SliceModel& model) {
  Json out{{"ball_radius", model.ball_radius()},
           {"phi", phi_to_json(model.phi())}};
  out["group"] = action_to_json(model.inner());
  if (model.outer().is_torus()) {
    out["outer_weights"] = model_outer_json(model);
  } else {
    Json gens = Json::array();
    // Outer generators in the orthonormal basis; re-induce with identity
    // transform semantics is avoided by storing the already-transformed rep
    // alongside a marker.
    for (const auto& g : model.outer().rep()) gens.push_back(matrix_to_json(g));
    out["outer_generators_orthonormal"] = gens;
  }
  return out;
}

SliceModel model_from_json(const Json& j) {
  GroupAction inner = action_from_json(j.at("group"));
  double radius = j.at("ball_radius").get<double>();
  std::vector<Polynomial> phi = phi_from_json(j.at("phi"));
  if (j.contains("outer_weights")) {
    GroupAction outer =
        GroupAction::induced(inner, weights_from_json(j.at("outer_weights")));
    return SliceModel(std::move(inner), std::move(outer), std::move(phi), radius);
  }
  if (j.contains("outer_generators_orthonormal")) {
    std::vector<MatrixXc> gens;
    for (const auto& g : j.at("outer_generators_orthonormal")) {
      gens.push_back(matrix_from_json(g));
    }
    // Already expressed in the orthonormal basis: undo the transform so the
    // induced constructor reapplies it.
    Eigen::MatrixXd tinv = inner.basis_transform().inverse();
    std::vector<MatrixXc> original(gens.size());
    for (size_t l = 0; l < gens.size(); ++l) {
      MatrixXc acc = MatrixXc::Zero(gens[0].rows(), gens[0].cols());
      for (size_t m = 0; m < gens.size(); ++m) {
        acc += tinv(l, m) * gens[m];
      }
      original[l] = acc;
    }
    GroupAction outer = GroupAction::induced(inner, original);
    return SliceModel(std::move(inner), std::move(outer), std::move(phi), radius);
  }
  fail(ErrorCode::SchemaMismatch, "model record lacks an outer representation");
}

namespace {

Json certificate_body(const ZeroCertificate& cert, const SliceModel& model) {
  return Json{{"schema_version", kSchemaVersion},
              {"type", "zero_certificate"},
              {"model", model_to_json(model)},
              {"x0", point_to_json(cert.x0)},
              {"eta", real_vector_to_json(cert.eta)},
              {"y", point_to_json(cert.y)},
              {"lambda_used", cert.lambda_used},
              {"delta_used", cert.delta_used},
              {"mu_norm_initial", cert.mu_norm_initial},
              {"mu_norm_final", cert.mu_norm_final},
              {"eta_norm", cert.eta_norm},
              {"zero_tol", cert.zero_tol},
              {"lambda_samples", cert.lambda_samples},
              {"lambda_margin", cert.lambda_margin},
              {"seed", cert.seed}};
}

}  // namespace

Json certificate_to_json(const ZeroCertificate& cert, const SliceModel& model) {
  Json body = certificate_body(cert, model);
  body["digest"] = content_digest(canonical_dump(body));
  return body;
}

std::pair<ZeroCertificate, SliceModel> certificate_from_json(const Json& j) {
  try {
    if (j.value("type", "") != "zero_certificate" ||
        j.value("schema_version", -1) != kSchemaVersion) {
      fail(ErrorCode::SchemaMismatch, "not a zero_certificate record");
    }
    SliceModel model = model_from_json(j.at("model"));
    ZeroCertificate cert;
    cert.x0 = point_from_json(j.at("x0"));
    cert.eta = real_vector_from_json(j.at("eta"));
    cert.y = point_from_json(j.at("y"));
    cert.lambda_used = j.at("lambda_used").get<double>();
    cert.delta_used = j.at("delta_used").get<double>();
    cert.mu_norm_initial = j.at("mu_norm_initial").get<double>();
    cert.mu_norm_final = j.at("mu_norm_final").get<double>();
    cert.eta_norm = j.at("eta_norm").get<double>();
    cert.zero_tol = j.at("zero_tol").get<double>();
    cert.lambda_samples = j.at("lambda_samples").get<int>();
    cert.lambda_margin = j.at("lambda_margin").get<double>();
    cert.seed = j.at("seed").get<unsigned>();
    return {std::move(cert), std::move(model)};
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    fail(ErrorCode::SchemaMismatch, e.what());
  }
}

CertificateCheck verify_certificate_json(const Json& j) {
  CertificateCheck out;
  Json body = j;
  std::string stored;
  if (body.contains("digest")) {
    stored = body.at("digest").get<std::string>();
    body.erase("digest");
  }
  if (stored != content_digest(canonical_dump(body))) {
    out.ok = false;
    out.failures.push_back("binding digest mismatch");
    return out;
  }
  auto [cert, model] = certificate_from_json(j);
  return check_certificate(model, cert);
}

Json scaling_report_to_json(const ScalingReport& rep, const SliceModel& model) {
  Json samples = Json::array();
  for (const auto& s : rep.samples) {
    samples.push_back(Json{{"t", s.t},
                           {"mu_norm", s.mu_norm},
                           {"lambda_estimate", s.lambda_estimate},
                           {"product", s.product},
                           {"hypothesis_ok", s.hypothesis_ok}});
  }
  Json out{{"v", point_to_json(rep.v)},
           {"found", rep.found},
           {"samples", samples},
           {"decay_slope", rep.decay_slope}};
  if (rep.found) {
    out["t_star"] = rep.t_star;
    out["certificate"] = certificate_to_json(rep.certificate, model);
  }
  return out;
}

}  // namespace knt
