#pragma once

#include <string>
#include <vector>

namespace poseadapt {

// Comma-separated, header row, UTF-8, LF line endings. Values are plain
// tokens (no embedded commas or newlines).
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const;  // -1 when absent
};

void write_csv(const CsvTable& table, const std::string& path);
CsvTable read_csv(const std::string& path);

// Self-contained SVG rendering of a table: kind "line" draws one polyline
// per series, kind "bar" grouped bars. The x column is "value" when present
// (else the first numeric column), y is "metric" (else the last numeric
// column), and series split on a "param" or "label" column when present.
// Pure function of the table bytes, so output is byte-deterministic.
// Throws on an empty or non-numeric table before anything is written.
std::string render_plot_svg(const CsvTable& table, const std::string& kind);

void emit_plot(const std::string& csv_path, const std::string& kind,
               const std::string& out_path);

}  // namespace poseadapt
