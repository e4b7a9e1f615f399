#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace empatheval {

inline constexpr std::string_view kToolVersion = "0.1.0";

/// Exit codes: 0 success, 1 validation/usage error, 2 judge or transport failure.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

/// `key = value` lines; '#' starts a comment, [section] headers are ignored,
/// values may be double-quoted.
std::map<std::string, std::string> parse_config_text(std::string_view text);

}  // namespace empatheval
