#pragma once

#include <iosfwd>
#include <string>

#include "mixdc/mcmc.hpp"

namespace mixdc {

/// CSV with a header row, then per row d_y integer codes 1..N_j followed by
/// d_x reals. Code k stands for the grid value (k - 1/2) / N_j.
Dataset read_csv(std::istream& in, const GridSpec& grid);
Dataset read_csv_file(const std::string& path, const GridSpec& grid);

void write_csv(std::ostream& out, const Dataset& data);
void write_csv_file(const std::string& path, const Dataset& data);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

}  // namespace mixdc
