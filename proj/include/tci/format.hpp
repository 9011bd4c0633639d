#pragma once

#include <string>
#include <string_view>

namespace tci {

/// "%.17g" rendering (17 significant digits); parses back to the identical double.
std::string format_double(double v);

/// Strict full-token parse. Throws DataError prefixed with `context`.
double parse_double(std::string_view token, const std::string& context);

}  // namespace tci
