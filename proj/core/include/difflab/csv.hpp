#pragma once

#include <string>
#include <vector>

namespace difflab {

// Round-trip-exact double formatting (%.17g), shared by every CSV writer so
// reruns produce identical bytes.
std::string fmt_double(double v);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const;  // -1 when absent
};

// Minimal reader for the project's own CSVs: comma-separated, no quoting.
CsvTable read_csv(const std::string& path);

}  // namespace difflab
