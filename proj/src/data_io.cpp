#include "mixdc/data_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "mixdc/errors.hpp"

namespace mixdc {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) {
    const auto b = field.find_first_not_of(" \t\r");
    const auto e = field.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? std::string{} : field.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

bool parse_double(const std::string& s, double& v) {
  if (s.empty()) return false;
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  return ec == std::errc{} && ptr == end;
}

}  // namespace

Dataset read_csv(std::istream& in, const GridSpec& grid) {
  Dataset data{grid, {}};
  std::string line;
  if (!std::getline(in, line)) throw DataError("missing header row", -1);
  if (static_cast<int>(split_fields(line).size()) != grid.d())
    throw DataError("header has " + std::to_string(split_fields(line).size()) + " columns, expected " +
                        std::to_string(grid.d()),
                    -1);
  long row = 0;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto fields = split_fields(line);
    if (static_cast<int>(fields.size()) != grid.d()) throw DataError("wrong number of columns", row);
    Observation obs;
    for (int j = 0; j < grid.d_y(); ++j) {
      double v = 0.0;
      if (!parse_double(fields[static_cast<std::size_t>(j)], v) || v != std::floor(v) || v < 1 || v > grid.N(j))
        throw DataError("discrete column " + std::to_string(j + 1) + " must be an integer in 1.." + std::to_string(grid.N(j)),
                        row);
      obs.y.levels.push_back(static_cast<int>(v) - 1);
    }
    for (int i = 0; i < grid.d_x(); ++i) {
      double v = 0.0;
      if (!parse_double(fields[static_cast<std::size_t>(grid.d_y() + i)], v) || !std::isfinite(v))
        throw DataError("continuous column " + std::to_string(i + 1) + " is not a finite number", row);
      obs.x.push_back(v);
    }
    data.rows.push_back(std::move(obs));
    ++row;
  }
  return data;
}

Dataset read_csv_file(const std::string& path, const GridSpec& grid) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open data file " + path);
  return read_csv(in, grid);
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

void write_csv(std::ostream& out, const Dataset& data) {
  const GridSpec& g = data.grid;
  for (int j = 0; j < g.d_y(); ++j) out << (j ? "," : "") << "y" << j + 1;
  for (int i = 0; i < g.d_x(); ++i) out << (g.d_y() + i ? "," : "") << "x" << i + 1;
  out << "\n";
  for (const auto& row : data.rows) {
    for (int j = 0; j < g.d_y(); ++j) out << (j ? "," : "") << row.y.levels[static_cast<std::size_t>(j)] + 1;
    for (int i = 0; i < g.d_x(); ++i) out << (g.d_y() + i ? "," : "") << format_double(row.x[static_cast<std::size_t>(i)]);
    out << "\n";
  }
}

void write_csv_file(const std::string& path, const Dataset& data) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  write_csv(out, data);
}

}  // namespace mixdc
