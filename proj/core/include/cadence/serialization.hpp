#pragma once

// Canonical JSON form of the domain types. Field names are the wire contract;
// enums are lowercase snake case, timestamps integer UTC seconds and dates
// YYYY-MM-DD strings.

#include <nlohmann/json.hpp>

#include "cadence/domain.hpp"

namespace cadence {

using Json = nlohmann::json;

void to_json(Json& j, const Turn& turn);
void from_json(const Json& j, Turn& turn);
void to_json(Json& j, const SourceLabel& label);
void from_json(const Json& j, SourceLabel& label);
void to_json(Json& j, const Dialogue& dialogue);
void from_json(const Json& j, Dialogue& dialogue);
void to_json(Json& j, const Finding& finding);
void from_json(const Json& j, Finding& finding);
void to_json(Json& j, const DiagnosticReport& report);
void from_json(const Json& j, DiagnosticReport& report);
void to_json(Json& j, const Advice& advice);
void from_json(const Json& j, Advice& advice);
void to_json(Json& j, const SeverityStandard& standard);
void from_json(const Json& j, SeverityStandard& standard);

/// Only the fields a model is asked to produce: binary_class,
/// severity_degree, findings, subtype_category and narrative (when present).
Json report_body_json(const DiagnosticReport& report);

/// Strict reader for the report wire object. Throws FieldError naming the
/// offending field; does not run validate_report().
DiagnosticReport report_from_json(const Json& j);

std::string serialize_report(const DiagnosticReport& report);

}  // namespace cadence
