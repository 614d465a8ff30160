#ifndef TORDIFF_IO_HPP_
#define TORDIFF_IO_HPP_

#include <iosfwd>
#include <string>
#include <vector>

#include "tordiff/evo_hmm.hpp"
#include "tordiff/fokker_planck.hpp"
#include "tordiff/inference.hpp"
#include "tordiff/tpd.hpp"
#include "tordiff/wn_diffusion.hpp"

namespace tordiff {

/// First line of every CSV file written by the library.
inline constexpr const char* kCsvVersionLine = "# tordiff-v1";

/// Trajectory CSV: version line, "# delta=<delta>", header "index,time,theta1[,theta2]",
/// then one row per observation. Numbers are written in shortest round-trip form so
/// reading back is exact.
void write_trajectory_csv(std::ostream& os, const Trajectory& traj);
/// Throws ConfigError on a malformed file.
Trajectory read_trajectory_csv(std::istream& is);

/// GridDensity CSV: version line, "# p=<p>,mx=<mx>,my=<my>", header "i,theta1,density" (p = 1) or
/// "i,j,theta1,theta2,density" (p = 2), row-major cells.
void write_grid_csv(std::ostream& os, const GridDensity& grid);
GridDensity read_grid_csv(std::istream& is);

/// Shortest decimal form that reads back to the same double.
std::string format_double(double x);

/// JSON documents. Readers throw ConfigError on malformed or inconsistent input and let
/// ConstraintViolation / InvalidArgument from the model types propagate.
std::string wn_params_to_json(const WnParams& params);
WnParams wn_params_from_json(const std::string& text);

std::string fit_result_to_json(const FitResult& fit);
FitResult fit_result_from_json(const std::string& text);

/// Versioned model document (schemas/evo_model.schema.json).
std::string evo_model_to_json(const EvoModel& model);
EvoModel evo_model_from_json(const std::string& text);

/// One aligned pair per line with explicit nulls for missing observations
/// (schemas/pair_dataset.schema.json).
std::string pair_to_json_line(const AlignedPairData& pair);
AlignedPairData pair_from_json_line(const std::string& line);
void write_pair_dataset(std::ostream& os, const std::vector<AlignedPairData>& pairs);
/// Blank lines are skipped.
std::vector<AlignedPairData> read_pair_dataset(std::istream& is);

/// Whole stream as a string.
std::string read_all(std::istream& is);

}  // namespace tordiff

#endif  // TORDIFF_IO_HPP_
