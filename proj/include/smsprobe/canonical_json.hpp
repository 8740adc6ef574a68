#pragma once

#include <string>
#include <string_view>

#include "json.hpp"

namespace smsprobe {

// Serializes `value` with sorted object keys, no insignificant whitespace and
// floats in shortest round-trip decimal form. Non-finite floats become null.
// Two equal documents always produce identical bytes.
std::string canonical_dump(const nlohmann::json& value);

// Shortest round-trip decimal rendering of a double ("0.1", "1e-07", "2").
std::string format_double(double value);

// RFC 4180 field quoting: returned unchanged unless it holds a comma, quote
// or line break.
std::string csv_field(std::string_view field);

}  // namespace smsprobe
