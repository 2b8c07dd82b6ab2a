#include "psz/io.hpp"

#include <openssl/evp.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "psz/error.hpp"

namespace psz {

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value == 0.0 ? 0.0 : value);
  return buf;
}

CsvTable::CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

CsvTable& CsvTable::row(std::vector<std::string> cells) {
  require(cells.size() == header_.size(), "csv row width does not match the header");
  rows_.push_back(std::move(cells));
  return *this;
}

std::string CsvTable::str() const {
  std::string out;
  const auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ',';
      out += cells[i];
    }
    out += '\n';
  };
  line(header_);
  for (const auto& r : rows_) line(r);
  return out;
}

void write_file(const std::filesystem::path& path, const std::string& contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::config, "cannot write " + path.string());
  out << contents;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::config, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    fail(ErrorKind::internal, "sha256 failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 15];
  }
  return out;
}

std::string svg_plot(const std::vector<PlotSeries>& series, const PlotOptions& options) {
  const double w = options.half_width;
  const int px = options.pixels;
  const auto sx = [&](double x) { return format_number(std::round((x + w) / (2 * w) * px * 100) / 100); };
  const auto sy = [&](double y) { return format_number(std::round((w - y) / (2 * w) * px * 100) / 100); };
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << px << "\" height=\"" << px << "\" viewBox=\"0 0 "
    << px << ' ' << px << "\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "<line x1=\"0\" y1=\"" << sy(0) << "\" x2=\"" << px << "\" y2=\"" << sy(0)
    << "\" stroke=\"#bbbbbb\" stroke-width=\"0.5\"/>\n";
  s << "<line x1=\"" << sx(0) << "\" y1=\"0\" x2=\"" << sx(0) << "\" y2=\"" << px
    << "\" stroke=\"#bbbbbb\" stroke-width=\"0.5\"/>\n";
  if (options.unit_circle)
    s << "<circle cx=\"" << sx(0) << "\" cy=\"" << sy(0) << "\" r=\"" << format_number(px / (2 * w))
      << "\" fill=\"none\" stroke=\"#888888\" stroke-width=\"0.75\" stroke-dasharray=\"4 3\"/>\n";
  if (!options.title.empty()) s << "<text x=\"8\" y=\"18\" font-family=\"sans-serif\" font-size=\"13\">" << options.title << "</text>\n";
  int legend = 0;
  for (const auto& ser : series) {
    if (ser.style == PlotSeries::Style::line) {
      if (ser.points.size() >= 2) {
        s << "<polyline fill=\"none\" stroke=\"" << ser.colour << "\" stroke-width=\"1.2\" points=\"";
        for (std::size_t i = 0; i < ser.points.size(); ++i)
          s << (i ? " " : "") << sx(ser.points[i].real()) << ',' << sy(ser.points[i].imag());
        s << "\"/>\n";
      }
    } else {
      const bool hollow = ser.style == PlotSeries::Style::hollow;
      for (const auto& p : ser.points)
        s << "<circle cx=\"" << sx(p.real()) << "\" cy=\"" << sy(p.imag()) << "\" r=\"" << (hollow ? 5 : 3)
          << "\" fill=\"" << (hollow ? "none" : ser.colour) << "\" stroke=\"" << ser.colour << "\" stroke-width=\"1.2\"/>\n";
    }
    if (!ser.label.empty()) {
      const int y = px - 12 - 16 * legend++;
      s << "<text x=\"10\" y=\"" << y << "\" font-family=\"sans-serif\" font-size=\"11\" fill=\"" << ser.colour << "\">"
        << ser.label << "</text>\n";
    }
  }
  s << "</svg>\n";
  return s.str();
}

}  // namespace psz
