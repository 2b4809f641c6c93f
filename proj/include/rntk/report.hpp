#pragma once

// CSV and SVG emission. CSV files start with one '#' line carrying the seed and
// the full configuration, then a column header. Reals use 17 significant digits.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "rntk/errors.hpp"

namespace rntk {

/// Round-trippable decimal form of a double.
inline std::string format_real(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

using CsvCell = std::variant<std::string, double, long long>;

/// Ordered key=value pairs written into the '#' line.
class RunConfig {
 public:
  RunConfig& set(const std::string& key, const std::string& value) {
    for (auto& kv : items_) {
      if (kv.first == key) {
        kv.second = value;
        return *this;
      }
    }
    items_.emplace_back(key, value);
    return *this;
  }
  RunConfig& set(const std::string& key, double value) { return set(key, format_real(value)); }
  RunConfig& set(const std::string& key, long long value) { return set(key, std::to_string(value)); }
  RunConfig& set(const std::string& key, int value) { return set(key, std::to_string(value)); }
  RunConfig& set(const std::string& key, unsigned long long value) { return set(key, std::to_string(value)); }
  RunConfig& set(const std::string& key, unsigned long value) {
    return set(key, static_cast<unsigned long long>(value));
  }

  std::string line() const {
    std::string s = "#";
    for (const auto& [k, v] : items_) s += " " + k + "=" + v;
    return s;
  }

 private:
  std::vector<std::pair<std::string, std::string>> items_;
};

class CsvTable {
 public:
  CsvTable(RunConfig config, std::vector<std::string> columns)
      : config_(std::move(config)), columns_(std::move(columns)) {}

  void add_row(std::vector<CsvCell> row) {
    if (row.size() != columns_.size()) throw PreconditionError("CsvTable: row width does not match header");
    rows_.push_back(std::move(row));
  }

  std::size_t size() const noexcept { return rows_.size(); }

  std::string str() const {
    std::string out = config_.line() + "\n";
    for (std::size_t i = 0; i < columns_.size(); ++i) out += (i ? "," : "") + columns_[i];
    out += "\n";
    for (const auto& row : rows_) {
      for (std::size_t i = 0; i < row.size(); ++i) {
        if (i) out += ",";
        std::visit(
            [&out](const auto& v) {
              using T = std::decay_t<decltype(v)>;
              if constexpr (std::is_same_v<T, std::string>) {
                out += v;
              } else if constexpr (std::is_same_v<T, double>) {
                out += format_real(v);
              } else {
                out += std::to_string(v);
              }
            },
            row[i]);
      }
      out += "\n";
    }
    return out;
  }

 private:
  RunConfig config_;
  std::vector<std::string> columns_;
  std::vector<std::vector<CsvCell>> rows_;
};

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path.string() + " for writing");
  f << text;
  if (!f) throw IoError("write failed for " + path.string());
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path.string() + " for reading");
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

/// Rows of a CSV written by CsvTable: '#' lines are collected as `comments`, the
/// first other line is the header.
struct CsvContent {
  std::vector<std::string> comments;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw ParseError("missing column " + name);
    return static_cast<std::size_t>(it - header.begin());
  }
};

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

inline CsvContent parse_csv(const std::string& text) {
  CsvContent c;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    if (line[0] == '#') {
      c.comments.push_back(line);
    } else if (c.header.empty()) {
      c.header = split_csv_line(line);
    } else {
      c.rows.push_back(split_csv_line(line));
      if (c.rows.back().size() != c.header.size()) {
        throw ParseError("row " + std::to_string(c.rows.size()) + " has " + std::to_string(c.rows.back().size()) +
                         " fields, header has " + std::to_string(c.header.size()));
      }
    }
  }
  if (c.header.empty()) throw ParseError("CSV has no header row");
  return c;
}

inline double parse_real(const std::string& s) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw ParseError("trailing characters in number '" + s + "'");
    return v;
  } catch (const std::logic_error&) {
    throw ParseError("not a number: '" + s + "'");
  }
}

// ---------------------------------------------------------------------------
// SVG line charts with optional +-1 SE bands.

struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> se;  // empty: no band
};

struct PlotSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_x = false;
  bool log_y = false;
  std::vector<double> reference_lines;  // horizontal dashed lines
};

namespace detail {

inline std::string svg_escape(const std::string& s) {
  std::string out;
  for (char ch : s) {
    switch (ch) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += ch;
    }
  }
  return out;
}

inline std::string svg_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

inline std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

}  // namespace detail

inline std::string render_svg(const PlotSpec& spec, const std::vector<PlotSeries>& series) {
  constexpr double W = 720, H = 460, ml = 80, mr = 170, mt = 40, mb = 60;
  const double pw = W - ml - mr, ph = H - mt - mb;
  auto tx = [&](double v) { return spec.log_x ? std::log10(v) : v; };
  auto ty = [&](double v) { return spec.log_y ? std::log10(std::max(v, 1e-300)) : v; };

  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      const double e = s.se.empty() ? 0.0 : s.se[i];
      x0 = std::min(x0, tx(s.x[i]));
      x1 = std::max(x1, tx(s.x[i]));
      y0 = std::min(y0, ty(spec.log_y ? s.y[i] : s.y[i] - e));
      y1 = std::max(y1, ty(spec.log_y ? s.y[i] : s.y[i] + e));
    }
  }
  for (double r : spec.reference_lines) {
    y0 = std::min(y0, ty(r));
    y1 = std::max(y1, ty(r));
  }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 == x0) x1 = x0 + 1;
  if (y1 == y0) y1 = y0 + 1;
  const double pad = 0.05 * (y1 - y0);
  y0 -= pad;
  y1 += pad;
  auto px = [&](double v) { return ml + (tx(v) - x0) / (x1 - x0) * pw; };
  auto py = [&](double v) { return mt + (1.0 - (ty(v) - y0) / (y1 - y0)) * ph; };

  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf"};
  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
    << " " << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << ml + pw / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
    << detail::svg_escape(spec.title) << "</text>\n";
  o << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << pw << "\" height=\"" << ph
    << "\" fill=\"none\" stroke=\"black\"/>\n";

  for (int i = 0; i <= 5; ++i) {
    const double fx = x0 + (x1 - x0) * i / 5.0, fy = y0 + (y1 - y0) * i / 5.0;
    const double sx = ml + pw * i / 5.0, sy = mt + ph * (1.0 - i / 5.0);
    const double vx = spec.log_x ? std::pow(10.0, fx) : fx, vy = spec.log_y ? std::pow(10.0, fy) : fy;
    o << "<line x1=\"" << detail::svg_num(sx) << "\" y1=\"" << mt + ph << "\" x2=\"" << detail::svg_num(sx)
      << "\" y2=\"" << mt + ph + 5 << "\" stroke=\"black\"/>\n";
    o << "<text x=\"" << detail::svg_num(sx) << "\" y=\"" << mt + ph + 18 << "\" text-anchor=\"middle\">"
      << detail::tick_label(vx) << "</text>\n";
    o << "<line x1=\"" << ml - 5 << "\" y1=\"" << detail::svg_num(sy) << "\" x2=\"" << ml << "\" y2=\""
      << detail::svg_num(sy) << "\" stroke=\"black\"/>\n";
    o << "<text x=\"" << ml - 8 << "\" y=\"" << detail::svg_num(sy + 4) << "\" text-anchor=\"end\">"
      << detail::tick_label(vy) << "</text>\n";
  }
  o << "<text x=\"" << ml + pw / 2 << "\" y=\"" << H - 15 << "\" text-anchor=\"middle\">"
    << detail::svg_escape(spec.x_label) << "</text>\n";
  o << "<text transform=\"translate(18," << mt + ph / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
    << detail::svg_escape(spec.y_label) << "</text>\n";

  for (double r : spec.reference_lines) {
    o << "<line x1=\"" << ml << "\" y1=\"" << detail::svg_num(py(r)) << "\" x2=\"" << ml + pw << "\" y2=\""
      << detail::svg_num(py(r)) << "\" stroke=\"gray\" stroke-dasharray=\"5,4\"/>\n";
  }

  for (std::size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    const char* col = palette[si % (sizeof palette / sizeof *palette)];
    if (!s.se.empty() && !s.x.empty()) {
      o << "<polygon fill=\"" << col << "\" fill-opacity=\"0.2\" stroke=\"none\" points=\"";
      for (std::size_t i = 0; i < s.x.size(); ++i) o << detail::svg_num(px(s.x[i])) << "," << detail::svg_num(py(s.y[i] + s.se[i])) << " ";
      for (std::size_t i = s.x.size(); i-- > 0;) o << detail::svg_num(px(s.x[i])) << "," << detail::svg_num(py(s.y[i] - s.se[i])) << " ";
      o << "\"/>\n";
    }
    o << "<polyline fill=\"none\" stroke=\"" << col << "\" stroke-width=\"1.8\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i) o << detail::svg_num(px(s.x[i])) << "," << detail::svg_num(py(s.y[i])) << " ";
    o << "\"/>\n";
    const double ly = mt + 14 + 18.0 * si;
    o << "<line x1=\"" << ml + pw + 12 << "\" y1=\"" << ly << "\" x2=\"" << ml + pw + 34 << "\" y2=\"" << ly
      << "\" stroke=\"" << col << "\" stroke-width=\"2\"/>\n";
    o << "<text x=\"" << ml + pw + 40 << "\" y=\"" << ly + 4 << "\">" << detail::svg_escape(s.label) << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

}  // namespace rntk
