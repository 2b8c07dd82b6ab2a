#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "psz/lattice.hpp"

namespace psz {

// Fixed 17-significant-digit rendering used by every artifact.
std::string format_number(double value);

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header);
  CsvTable& row(std::vector<std::string> cells);
  std::size_t rows() const { return rows_.size(); }
  std::string str() const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

void write_file(const std::filesystem::path& path, const std::string& contents);
std::string read_file(const std::filesystem::path& path);
std::string sha256_hex(const std::string& bytes);

struct PlotSeries {
  enum class Style { hollow, filled, line };
  std::vector<Complex> points;
  Style style = Style::filled;
  std::string colour = "#1f4e8c";
  std::string label;
};

struct PlotOptions {
  double half_width = 1.5;  // view is [-w, w]^2 around the origin
  int pixels = 480;
  bool unit_circle = true;
  std::string title;
};

// Deterministic SVG scatter of complex points with an optional unit-circle guide.
std::string svg_plot(const std::vector<PlotSeries>& series, const PlotOptions& options = {});

}  // namespace psz
