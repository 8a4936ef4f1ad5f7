#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "knt/io.hpp"

using namespace knt;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

const char* kSpecFiles[] = {
    "specs/torus_identity.json",
    "specs/torus_rank2.json",
    "specs/torus_futaki.json",
    "specs/su2_defining.json",
};

GroupAction circle_pm1() {
  return GroupAction::torus((Eigen::MatrixXi(1, 2) << 1, -1).finished());
}

VectorXc cvec(std::initializer_list<Complex> entries) {
  VectorXc v(entries.size());
  int i = 0;
  for (const Complex& e : entries) v(i++) = e;
  return v;
}

Json valid_certificate_json() {
  SliceModel model = identity_model(circle_pm1(), 64.0);
  ZeroCertificate cert =
      perturb_to_zero(model, StatePoint(cvec({2.0, 1.0})), 1.0);
  return certificate_to_json(cert, model);
}

}  // namespace

TEST_CASE("bundled specs load and canonicalize idempotently") {
  for (const char* path : kSpecFiles) {
    CAPTURE(path);
    std::string text = read_file(path);
    SpecFile spec = parse_spec_text(text);
    CHECK(!spec.points.empty());
    std::string canon = canonical_dump(Json::parse(text));
    // parse -> dump is a fixed point on the canonical form.
    CHECK(canonical_dump(Json::parse(canon)) == canon);
    // Re-parsing the canonical text yields the same digest-relevant content.
    SpecFile again = parse_spec_text(canon);
    CHECK(again.points.size() == spec.points.size());
    CHECK(again.models.size() == spec.models.size());
    CHECK(again.seed == spec.seed);
  }
}

TEST_CASE("load_spec matches parse_spec_text and records a stable digest") {
  for (const char* path : kSpecFiles) {
    CAPTURE(path);
    SpecFile a = load_spec(path);
    SpecFile b = parse_spec_text(read_file(path));
    CHECK(a.digest == b.digest);
    CHECK(a.digest.size() == 16);  // 64-bit hex
  }
}

TEST_CASE("content digest is deterministic and collision-sensitive") {
  CHECK(content_digest("abc") == content_digest("abc"));
  CHECK(content_digest("abc") != content_digest("abd"));
  CHECK(content_digest("") != content_digest(" "));
}

TEST_CASE("complex round trip") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> gauss(0.0, 10.0);
  for (int i = 0; i < 50; ++i) {
    Complex z(gauss(rng), gauss(rng));
    CHECK(complex_from_json(complex_to_json(z)) == z);
  }
  CHECK(complex_to_json(Complex(1.0, -2.0)).is_array());
}

TEST_CASE("point round trip preserves every coordinate bit-exactly") {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> gauss(0.0, 1.0);
  VectorXc v(5);
  for (int i = 0; i < 5; ++i) v(i) = Complex(gauss(rng), gauss(rng));
  StatePoint p(v);
  StatePoint q = point_from_json(point_to_json(p));
  REQUIRE(q.coords.size() == p.coords.size());
  for (int i = 0; i < 5; ++i) CHECK(q.coords(i) == p.coords(i));
}

TEST_CASE("one-parameter subgroup round trip keeps exact rationals") {
  OneParameterSubgroup rho = OneParameterSubgroup::rational(
      (Eigen::VectorXi(2) << 3, -5).finished(),
      (Eigen::VectorXi(2) << 2, 7).finished());
  OneParameterSubgroup back = ops_from_json(ops_to_json(rho));
  CHECK(back.num == rho.num);
  CHECK(back.den == rho.den);
}

TEST_CASE("model round trip reproduces the moment map exactly") {
  SpecFile spec = load_spec("specs/torus_identity.json");
  for (const auto& [name, model] : spec.models) {
    CAPTURE(name);
    SliceModel back = model_from_json(model_to_json(model));
    CHECK(canonical_dump(model_to_json(back)) ==
          canonical_dump(model_to_json(model)));
    StatePoint x(cvec({0.3, Complex(0.1, 0.2)}));
    CHECK((back.moment(x) - model.moment(x)).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("verdict serialization carries class, witness, and zero point") {
  GroupAction a = circle_pm1();
  StabilityVerdict stable = kempf_ness_flow(a, StatePoint(cvec({2.0, 1.0})));
  Json js = verdict_to_json(stable);
  CHECK(js.at("class") == "stable");
  CHECK(js.contains("zero_point"));

  StabilityVerdict unstable = kempf_ness_flow(a, StatePoint(cvec({1.0, 0.0})));
  Json ju = verdict_to_json(unstable);
  CHECK(ju.at("class") == "unstable");
  CHECK(ju.contains("witness"));
  OneParameterSubgroup rho = ops_from_json(ju.at("witness"));
  CHECK(rho.num(0) == 1);
}

TEST_CASE("certificate JSON round trip verifies cleanly") {
  Json j = valid_certificate_json();
  CHECK(verify_certificate_json(j).ok);
  auto [cert, model] = certificate_from_json(j);
  Json again = certificate_to_json(cert, model);
  CHECK(canonical_dump(again) == canonical_dump(j));
}

TEST_CASE("certificates are deterministic across identical runs") {
  Json a = valid_certificate_json();
  Json b = valid_certificate_json();
  CHECK(canonical_dump(a) == canonical_dump(b));
}

TEST_CASE("single-field mutations of a certificate are rejected") {
  Json good = valid_certificate_json();
  REQUIRE(verify_certificate_json(good).ok);

  std::mt19937_64 rng(2718);
  // Collect every scalar leaf path.
  std::vector<Json::json_pointer> leaves;
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
          leaves.emplace_back(prefix);
        }
      };
  walk(good, "");
  REQUIRE(leaves.size() > 10);

  int rejected = 0, total = 0;
  for (const auto& ptr : leaves) {
    Json bad = good;
    Json& leaf = bad[ptr];
    if (leaf.is_number()) {
      double x = leaf.get<double>();
      leaf = x + std::max(1.0, std::abs(x)) * 1e-3;
    } else if (leaf.is_string()) {
      leaf = leaf.get<std::string>() + "x";
    } else if (leaf.is_boolean()) {
      leaf = !leaf.get<bool>();
    } else {
      continue;
    }
    ++total;
    bool ok = false;
    try {
      ok = verify_certificate_json(bad).ok;
    } catch (const Error&) {
      ok = false;  // schema-level rejection also counts
    }
    if (!ok) ++rejected;
  }
  CHECK(total >= 10);
  CHECK(rejected == total);
}

TEST_CASE("malformed input raises ParseError") {
  CHECK_THROWS_WITH_AS(parse_spec_text("{ not json"),
                       doctest::Contains("ParseError"), Error);
  CHECK_THROWS_WITH_AS(parse_spec_text("[1,2,3]"),
                       doctest::Contains("ParseError"), Error);
}

TEST_CASE("wrong schema version raises SchemaMismatch") {
  Json j = Json::parse(read_file("specs/torus_identity.json"));
  j["schema_version"] = kSchemaVersion + 1;
  CHECK_THROWS_WITH_AS(parse_spec(j), doctest::Contains("SchemaMismatch"),
                       Error);
}

TEST_CASE("missing required fields raise ParseError") {
  Json j = Json::parse(read_file("specs/torus_identity.json"));
  j.erase("group");
  CHECK_THROWS_WITH_AS(parse_spec(j), doctest::Contains("ParseError"), Error);
}

TEST_CASE("canonical_dump sorts keys and uses two-space indent") {
  Json j = Json::parse(R"({"b": 1, "a": {"d": 2, "c": 3}})");
  std::string s = canonical_dump(j);
  CHECK(s.find("\"a\"") < s.find("\"b\""));
  CHECK(s.find("\"c\"") < s.find("\"d\""));
  CHECK(s.find("\n  ") != std::string::npos);
}
