#include "tci/format.hpp"

#include <charconv>
#include <cstdio>

#include "tci/core.hpp"

namespace tci {

std::string format_double(double v) {
    char buf[32];
    const int n = std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf, static_cast<std::size_t>(n));
}

double parse_double(std::string_view token, const std::string& context) {
    double v = 0.0;
    const char* end = token.data() + token.size();
    const auto [ptr, ec] = std::from_chars(token.data(), end, v);
    if (ec != std::errc() || ptr != end) {
        throw DataError(context + ": bad number '" + std::string(token) + "'");
    }
    return v;
}

}  // namespace tci
