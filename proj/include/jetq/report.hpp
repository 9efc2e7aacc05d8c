#pragma once

#include <string>

#include "json.hpp"
#include "jetq/types.hpp"

namespace jetq {

inline constexpr const char* kEngineVersion = "0.1.0";
inline constexpr int kReportSchema = 1;

using Json = nlohmann::ordered_json;

Json to_json(cplx v);           // [re, im]
Json to_json(const CVector& v); // [[re, im], ...]
Json to_json(const CMatrix& m); // rows of [re, im]

/// Deterministic text: insertion key order, two-space indent, every number printed with 17
/// significant digits (integers as integers), non-finite numbers as null.
std::string dump_report(const Json& report);

/// %.17g
std::string format_number(double v);

}  // namespace jetq
