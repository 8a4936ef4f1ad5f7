#ifndef KNT_IO_HPP
#define KNT_IO_HPP

#include <map>
#include <optional>
#include <string>

#include <json.hpp>

#include "knt/invariants.hpp"
#include "knt/perturb.hpp"

namespace knt {

using Json = nlohmann::json;

constexpr int kSchemaVersion = 1;
constexpr const char* kToolVersion = "0.1.0";

/// Parsed declarative problem description: one group action, named points,
/// optional named slice models, tolerance overrides.
struct SpecFile {
  GroupAction action;
  std::map<std::string, StatePoint> points;
  std::map<std::string, SliceModel> models;
  std::map<std::string, double> tolerances;
  unsigned seed = 0;
  std::string digest;
};

/// Throws ParseError / SchemaMismatch on malformed input.
SpecFile parse_spec(const Json& j);
SpecFile parse_spec_text(const std::string& text);
SpecFile load_spec(const std::string& path);

/// Canonical serialization: two-space indent, keys sorted by nlohmann's
/// object ordering. parse -> dump is idempotent on this form.
std::string canonical_dump(const Json& j);

/// FNV-1a 64-bit content hash, hex encoded.
std::string content_digest(const std::string& text);

// JSON encodings. Complex numbers are two-element real arrays [re, im];
// exact rationals are "p/q" strings.
Json complex_to_json(const Complex& z);
Complex complex_from_json(const Json& j);
Json point_to_json(const StatePoint& p);
StatePoint point_from_json(const Json& j);
Json ops_to_json(const OneParameterSubgroup& rho);
OneParameterSubgroup ops_from_json(const Json& j);

Json verdict_to_json(const StabilityVerdict& v);
Json degeneration_to_json(const DegenerationRecord& rec);

/// Self-contained model record (group + polynomial + radius), sufficient to
/// re-verify certificates without the emitting spec.
Json model_to_json(const SliceModel& model);
SliceModel model_from_json(const Json& j);

/// Certificates carry the model, all solver inequalities' raw inputs, and a
/// content digest binding every field.
Json certificate_to_json(const ZeroCertificate& cert, const SliceModel& model);
std::pair<ZeroCertificate, SliceModel> certificate_from_json(const Json& j);

/// Recomputes every certificate invariant from raw fields and checks the
/// binding digest; returns the failure list.
CertificateCheck verify_certificate_json(const Json& j);

Json scaling_report_to_json(const ScalingReport& rep, const SliceModel& model);

}  // namespace knt

#endif
