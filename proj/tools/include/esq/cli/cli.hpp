#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace esq::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitBadInput = 2;

// argv without the program name, e.g. {"verify", "--scenario", "s.json"}.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace esq::cli
