#ifndef TORDIFF_CLI_HPP_
#define TORDIFF_CLI_HPP_

#include <iosfwd>

namespace tordiff {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumeric = 3;

/// The tordiff command line. Returns 0 on success, 2 on a usage or configuration error and
/// 3 on a numeric failure. Results go to `out` unless --out names a file.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace tordiff

#endif  // TORDIFF_CLI_HPP_
