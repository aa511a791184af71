// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace sgdlab {

inline constexpr const char* kVersion = "0.1.0";

/// 64-bit FNV-1a, as 16 lowercase hex digits.
std::string fnv1a_hex(std::string_view bytes);
std::string file_hash(const std::filesystem::path& path);

/// Numeric CSV table: "# " comment lines, a header row, then rows at 17
/// significant digits.
struct Table {
  std::vector<std::string> comments;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  void add_row(std::vector<double> row);
  void write(std::ostream& out) const;
  void write(const std::filesystem::path& path) const;
};

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

struct PlotSpec {
  std::string title;
  std::string xlabel;
  std::string ylabel;
  bool log_x = true;
  bool log_y = true;
};

/// Self-contained SVG line plot. Log axes plot log10 of the data; non-positive
/// values are dropped on log axes.
std::string line_plot_svg(const PlotSpec& spec, const std::vector<Series>& series);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace sgdlab
