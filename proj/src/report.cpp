#include "poseadapt/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace poseadapt {

int CsvTable::column(const std::string& name) const {
  for (size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return static_cast<int>(i);
  }
  return -1;
}

void write_csv(const CsvTable& table, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("csv: cannot write " + path);
  auto line = [&out](const std::vector<std::string>& cells) {
    for (size_t i = 0; i < cells.size(); ++i) {
      if (cells[i].find_first_of(",\n\"") != std::string::npos) {
        throw std::invalid_argument("csv: cell contains a delimiter: " + cells[i]);
      }
      if (i) out << ',';
      out << cells[i];
    }
    out << '\n';
  };
  line(table.header);
  for (const auto& row : table.rows) {
    if (row.size() != table.header.size()) {
      throw std::invalid_argument("csv: row width does not match header");
    }
    line(row);
  }
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("csv: cannot open " + path);
  CsvTable table;
  std::string lineText;
  bool first = true;
  while (std::getline(in, lineText)) {
    if (!lineText.empty() && lineText.back() == '\r') lineText.pop_back();
    if (lineText.empty()) continue;
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(lineText);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (lineText.back() == ',') cells.push_back("");
    if (first) {
      table.header = std::move(cells);
      first = false;
    } else {
      if (cells.size() != table.header.size()) {
        throw std::runtime_error("csv: malformed row in " + path);
      }
      table.rows.push_back(std::move(cells));
    }
  }
  if (first) throw std::runtime_error("csv: empty file " + path);
  return table;
}

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

bool numeric(const std::string& s, double* out) {
  if (s.empty()) return false;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size() || !std::isfinite(v)) return false;
  *out = v;
  return true;
}

const char* kPalette[] = {"#1f6fb4", "#d1542f", "#3a8c51", "#8a5cb8", "#b8860b", "#555555"};

struct Series {
  std::string name;
  std::vector<std::pair<double, double>> points;
};

}  // namespace

std::string render_plot_svg(const CsvTable& table, const std::string& kind) {
  if (kind != "line" && kind != "bar") {
    throw std::invalid_argument("plot: kind must be line or bar");
  }
  if (table.rows.empty()) throw std::invalid_argument("plot: table has no data rows");

  // pick columns
  int xcol = table.column("value");
  int ycol = table.column("metric");
  if (xcol < 0 || ycol < 0) {
    std::vector<int> numeric_cols;
    for (size_t c = 0; c < table.header.size(); ++c) {
      double v;
      if (numeric(table.rows[0][c], &v)) numeric_cols.push_back(static_cast<int>(c));
    }
    if (numeric_cols.size() < 2) {
      // a single numeric column plots against the row index
      if (numeric_cols.empty()) throw std::invalid_argument("plot: no numeric columns");
      if (ycol < 0) ycol = numeric_cols[0];
      if (xcol < 0) xcol = -2;  // row index
    } else {
      if (xcol < 0) xcol = numeric_cols.front();
      if (ycol < 0) ycol = numeric_cols.back();
    }
  }
  int gcol = table.column("param");
  if (gcol < 0) gcol = table.column("label");

  std::vector<Series> series;
  auto series_of = [&](const std::string& name) -> Series& {
    for (auto& s : series) {
      if (s.name == name) return s;
    }
    series.push_back({name, {}});
    return series.back();
  };
  for (size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    double x = static_cast<double>(r);
    if (xcol >= 0 && !numeric(row[xcol], &x)) continue;
    double y;
    if (!numeric(row[ycol], &y)) continue;
    series_of(gcol >= 0 ? row[gcol] : "series").points.emplace_back(x, y);
  }
  series.erase(std::remove_if(series.begin(), series.end(),
                              [](const Series& s) { return s.points.empty(); }),
               series.end());
  if (series.empty()) throw std::invalid_argument("plot: no plottable points");

  double min_x = 1e300, max_x = -1e300, min_y = 1e300, max_y = -1e300;
  for (const auto& s : series) {
    for (auto [x, y] : s.points) {
      min_x = std::min(min_x, x);
      max_x = std::max(max_x, x);
      min_y = std::min(min_y, y);
      max_y = std::max(max_y, y);
    }
  }
  if (max_x == min_x) {
    min_x -= 0.5;
    max_x += 0.5;
  }
  if (max_y == min_y) {
    min_y -= 0.5;
    max_y += 0.5;
  }
  const double pad_y = 0.05 * (max_y - min_y);
  min_y -= pad_y;
  max_y += pad_y;

  const double W = 640, H = 400, L = 60, R = 20, T = 24, B = 46;
  auto px = [&](double x) { return L + (x - min_x) / (max_x - min_x) * (W - L - R); };
  auto py = [&](double y) { return H - B - (y - min_y) / (max_y - min_y) * (H - T - B); };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
      << "\" viewBox=\"0 0 " << W << " " << H << "\">\n";
  svg << "<rect width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
  svg << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\""
      << H - B << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B
      << "\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double xv = min_x + (max_x - min_x) * t / 4.0;
    const double yv = min_y + (max_y - min_y) * t / 4.0;
    svg << "<text x=\"" << fmt(px(xv)) << "\" y=\"" << H - B + 16
        << "\" font-size=\"11\" text-anchor=\"middle\">" << fmt(xv) << "</text>\n";
    svg << "<text x=\"" << L - 6 << "\" y=\"" << fmt(py(yv) + 4)
        << "\" font-size=\"11\" text-anchor=\"end\">" << fmt(yv) << "</text>\n";
    svg << "<line x1=\"" << L << "\" y1=\"" << fmt(py(yv)) << "\" x2=\"" << W - R
        << "\" y2=\"" << fmt(py(yv)) << "\" stroke=\"#dddddd\"/>\n";
  }

  for (size_t si = 0; si < series.size(); ++si) {
    const char* color = kPalette[si % 6];
    const auto& s = series[si];
    if (kind == "line") {
      svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
      for (auto [x, y] : s.points) svg << fmt(px(x)) << "," << fmt(py(y)) << " ";
      svg << "\"/>\n";
      for (auto [x, y] : s.points) {
        svg << "<circle cx=\"" << fmt(px(x)) << "\" cy=\"" << fmt(py(y))
            << "\" r=\"2.5\" fill=\"" << color << "\"/>\n";
      }
    } else {
      const double group = (W - L - R) / s.points.size();
      const double bw = group * 0.7 / series.size();
      for (size_t pi = 0; pi < s.points.size(); ++pi) {
        const double x0 = L + group * pi + group * 0.15 + bw * si;
        const double y0 = py(s.points[pi].second);
        svg << "<rect x=\"" << fmt(x0) << "\" y=\"" << fmt(y0) << "\" width=\"" << fmt(bw)
            << "\" height=\"" << fmt(H - B - y0) << "\" fill=\"" << color << "\"/>\n";
      }
    }
    svg << "<text x=\"" << W - R - 4 << "\" y=\"" << T + 14 * static_cast<double>(si) + 4
        << "\" font-size=\"11\" text-anchor=\"end\" fill=\"" << color << "\">" << s.name
        << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

void emit_plot(const std::string& csv_path, const std::string& kind,
               const std::string& out_path) {
  auto table = read_csv(csv_path);
  auto svg = render_plot_svg(table, kind);  // validate before touching the file
  std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("plot: cannot write " + out_path);
  out << svg;
}

}  // namespace poseadapt
