#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace fairlora {

// Shortest round-trip decimal rendering (std::to_chars). Locale independent
// and deterministic, so emitted files are byte-stable across runs.
std::string format_double(double v);

// Strict parses; the error message is prefixed with `context`.
double parse_double(std::string_view text, const std::string& context);
long long parse_int(std::string_view text, const std::string& context);
std::uint64_t parse_u64(std::string_view text, const std::string& context);

// Fixed two-decimal rendering used by report tables.
std::string format_fixed2(double v);

}  // namespace fairlora
