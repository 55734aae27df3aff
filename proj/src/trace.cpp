#include "ottv/trace.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "atomic_file.hpp"
#include "ottv/errors.hpp"

namespace ottv {

std::size_t ConvergenceTrace::column_index(const std::string& column) const {
  auto it = std::find(columns.begin(), columns.end(), column);
  if (it == columns.end()) throw std::out_of_range("trace has no column '" + column + "'");
  return static_cast<std::size_t>(it - columns.begin());
}

double ConvergenceTrace::last(const std::string& column) const {
  if (rows.empty()) throw std::out_of_range("trace is empty");
  return rows.back().at(column_index(column));
}

void write_trace(const ConvergenceTrace& trace, const std::string& path) {
  std::string text;
  for (std::size_t c = 0; c < trace.columns.size(); ++c) {
    if (c) text += ',';
    text += trace.columns[c];
  }
  text += '\n';
  char buf[32];
  for (const auto& row : trace.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) text += ',';
      std::snprintf(buf, sizeof buf, "%.17g", row[c]);
      text += buf;
    }
    text += '\n';
  }
  detail::write_file_atomic(path, text);
}

ConvergenceTrace read_trace(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open trace '" + path + "'");
  ConvergenceTrace trace;
  std::string line;
  if (!std::getline(in, line)) return trace;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) trace.columns.push_back(cell);
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw IoError("bad number '" + cell + "' in trace '" + path + "'");
      }
    }
    if (row.size() != trace.columns.size()) throw IoError("ragged row in trace '" + path + "'");
    trace.rows.push_back(std::move(row));
  }
  return trace;
}

}  // namespace ottv
