#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mixedlm/projections.hpp"

namespace mixedlm {

// Minimal RFC 4180-style CSV support: comma separated, first record is the
// header, quoted fields may contain commas, doubled quotes, and newlines;
// LF and CRLF line endings both accepted.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const;  // -1 when absent
};

CsvTable read_csv(const std::string& path);
CsvTable parse_csv(const std::string& text);  // throws with 1-based line/field location
void write_csv(const std::string& path, const CsvTable& table);

// Formats a double with enough digits to round-trip exactly.
std::string format_double(double x);

struct DatasetSpec {
  std::string csv_path;
  std::string response_col;
  std::vector<std::string> fixed_cols;
  std::string z_factor_col;
  std::optional<std::string> w_factor_col;  // absent: no second factor (r = 0)
  bool standardize_fixed = false;           // center, then scale to ||col||^2 = n
};

struct LoadedDataset {
  MixedData data;
  std::vector<std::string> z_levels;  // factor levels in first-appearance order
  std::vector<std::string> w_levels;
  std::vector<int> z_index;  // per-row level index
  std::vector<int> w_index;
};

// Reads the CSV named by the spec into a MixedData: numeric response and
// fixed columns, factor columns expanded to one-hot indicators with levels
// ordered by first appearance. Throws std::invalid_argument with row/column
// context on missing values, parse failures, or (with standardization) a
// constant fixed column.
LoadedDataset load_dataset(const DatasetSpec& spec);

}  // namespace mixedlm
