#ifndef TORDIFF_EXEC_HPP_
#define TORDIFF_EXEC_HPP_

namespace tordiff {

/// Execution policy for kernels that have an OpenMP route and a serial reference route.
/// Both routes give bit-identical results.
enum class Exec { serial, parallel };

/// Number of OpenMP threads used by Exec::parallel (1 when built without OpenMP).
int max_threads();
/// Sets the OpenMP thread count; n <= 0 leaves the runtime default.
void set_threads(int n);

}  // namespace tordiff

#endif  // TORDIFF_EXEC_HPP_
