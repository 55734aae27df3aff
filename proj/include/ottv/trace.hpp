#pragma once

#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

namespace ottv {

/// Per-iteration solver diagnostics with a fixed column schema.
struct ConvergenceTrace {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  ConvergenceTrace() = default;
  explicit ConvergenceTrace(std::vector<std::string> cols) : columns(std::move(cols)) {}

  void add(std::initializer_list<double> row) { rows.emplace_back(row); }
  std::size_t size() const { return rows.size(); }
  bool empty() const { return rows.empty(); }
  /// Value of `column` in the last row. Throws std::out_of_range if absent.
  double last(const std::string& column) const;
  std::size_t column_index(const std::string& column) const;
};

namespace trace_schema {
inline const std::vector<std::string> pdhg = {"iter", "R_k", "constraint_ratio", "primal_flux_norm"};
inline const std::vector<std::string> alm = {"iter", "rel_change_u", "constraint_residual", "energy"};
inline const std::vector<std::string> outer = {"outer_iter",       "rel_u",          "rel_v", "energy",
                                               "inner_pdhg_iters", "inner_alm_iters"};
}  // namespace trace_schema

/// CSV with a header row, LF endings, 17 significant digits. Written to a
/// temporary file and renamed into place. Throws IoError.
void write_trace(const ConvergenceTrace& trace, const std::string& path);
/// Parses a file produced by write_trace. Throws IoError.
ConvergenceTrace read_trace(const std::string& path);

}  // namespace ottv
