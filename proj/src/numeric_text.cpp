#include "fairlora/numeric_text.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>

#include "fairlora/errors.hpp"

namespace fairlora {

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

double parse_double(std::string_view text, const std::string& context) {
    double value = 0.0;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    auto res = std::from_chars(first, last, value);
    if (res.ec != std::errc{} || res.ptr != last) {
        throw data_error(context + ": expected a number, got '" + std::string(text) + "'");
    }
    return value;
}

long long parse_int(std::string_view text, const std::string& context) {
    long long value = 0;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    auto res = std::from_chars(first, last, value);
    if (res.ec != std::errc{} || res.ptr != last) {
        throw data_error(context + ": expected an integer, got '" + std::string(text) + "'");
    }
    return value;
}

std::uint64_t parse_u64(std::string_view text, const std::string& context) {
    std::uint64_t value = 0;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    auto res = std::from_chars(first, last, value);
    if (res.ec != std::errc{} || res.ptr != last) {
        throw data_error(context + ": expected an unsigned integer, got '" +
                         std::string(text) + "'");
    }
    return value;
}

std::string format_fixed2(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return std::string(buf);
}

}  // namespace fairlora
