#include "mixedlm/dataset.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace mixedlm {

int CsvTable::column(const std::string& name) const {
  for (std::size_t j = 0; j < header.size(); ++j)
    if (header[j] == name) return static_cast<int>(j);
  return -1;
}

CsvTable parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool field_was_quoted = false;
  int line = 1;

  const auto end_field = [&]() {
    record.push_back(field);
    field.clear();
    field_was_quoted = false;
  };
  const auto end_record = [&]() {
    end_field();
    records.push_back(std::move(record));
    record.clear();
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char ch = text[i];
    if (in_quotes) {
      if (ch == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (ch == '\n') ++line;
        field += ch;
      }
      continue;
    }
    switch (ch) {
      case '"':
        if (!field.empty() || field_was_quoted)
          throw std::invalid_argument("csv parse error at line " + std::to_string(line) +
                                      ": quote inside unquoted field");
        in_quotes = true;
        field_was_quoted = true;
        break;
      case ',':
        end_field();
        break;
      case '\r':
        if (i + 1 < text.size() && text[i + 1] == '\n') break;  // handled by the \n
        throw std::invalid_argument("csv parse error at line " + std::to_string(line) +
                                    ": bare carriage return");
      case '\n':
        end_record();
        ++line;
        break;
      default:
        field += ch;
    }
  }
  if (in_quotes)
    throw std::invalid_argument("csv parse error: unterminated quoted field at end of input");
  if (!field.empty() || !record.empty() || field_was_quoted) end_record();

  if (records.empty()) throw std::invalid_argument("csv parse error: empty input");
  CsvTable t;
  t.header = std::move(records.front());
  for (std::size_t i = 1; i < records.size(); ++i) {
    if (records[i].size() != t.header.size())
      throw std::invalid_argument("csv parse error at line " + std::to_string(i + 1) + ": expected " +
                                  std::to_string(t.header.size()) + " fields, got " +
                                  std::to_string(records[i].size()));
    t.rows.push_back(std::move(records[i]));
  }
  return t;
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot open csv file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str());
}

namespace {

std::string quote_if_needed(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

}  // namespace

void write_csv(const std::string& path, const CsvTable& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::invalid_argument("cannot open csv file for writing: " + path);
  const auto write_row = [&](const std::vector<std::string>& row) {
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (j) out << ',';
      out << quote_if_needed(row[j]);
    }
    out << '\n';
  };
  write_row(table.header);
  for (const auto& row : table.rows) write_row(row);
}

std::string format_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

namespace {

double parse_number(const std::string& s, int row, const std::string& col) {
  const auto fail = [&](const char* what) {
    throw std::invalid_argument("dataset: " + std::string(what) + " in column '" + col +
                                "', data row " + std::to_string(row + 1));
  };
  if (s.empty()) fail("missing value");
  char* end = nullptr;
  const double x = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size()) fail("non-numeric value");
  if (!std::isfinite(x)) fail("non-finite value");
  return x;
}

Matrix one_hot(const CsvTable& t, int col, const std::string& name,
               std::vector<std::string>& levels, std::vector<int>& index) {
  std::unordered_map<std::string, int> seen;
  index.resize(t.rows.size());
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const std::string& label = t.rows[i][col];
    if (label.empty())
      throw std::invalid_argument("dataset: missing value in column '" + name + "', data row " +
                                  std::to_string(i + 1));
    auto [it, inserted] = seen.emplace(label, static_cast<int>(levels.size()));
    if (inserted) levels.push_back(label);
    index[i] = it->second;
  }
  Matrix m(static_cast<int>(t.rows.size()), static_cast<int>(levels.size()));
  for (std::size_t i = 0; i < t.rows.size(); ++i) m(static_cast<int>(i), index[i]) = 1.0;
  return m;
}

}  // namespace

LoadedDataset load_dataset(const DatasetSpec& spec) {
  const CsvTable t = read_csv(spec.csv_path);
  const int n = static_cast<int>(t.rows.size());
  if (n < 2) throw std::invalid_argument("dataset: need at least 2 data rows");

  const auto require_col = [&](const std::string& name) {
    const int j = t.column(name);
    if (j < 0) throw std::invalid_argument("dataset: no column named '" + name + "'");
    return j;
  };

  LoadedDataset out;
  const int yc = require_col(spec.response_col);
  out.data.y.resize(n);
  for (int i = 0; i < n; ++i) out.data.y[i] = parse_number(t.rows[i][yc], i, spec.response_col);

  out.data.x = Matrix(n, static_cast<int>(spec.fixed_cols.size()));
  for (std::size_t k = 0; k < spec.fixed_cols.size(); ++k) {
    const int xc = require_col(spec.fixed_cols[k]);
    for (int i = 0; i < n; ++i)
      out.data.x(i, static_cast<int>(k)) = parse_number(t.rows[i][xc], i, spec.fixed_cols[k]);
  }
  if (spec.standardize_fixed) {
    for (int j = 0; j < out.data.x.cols(); ++j) {
      double mean = 0.0;
      for (int i = 0; i < n; ++i) mean += out.data.x(i, j);
      mean /= n;
      double ss = 0.0;
      for (int i = 0; i < n; ++i) {
        out.data.x(i, j) -= mean;
        ss += out.data.x(i, j) * out.data.x(i, j);
      }
      if (ss == 0.0)
        throw std::invalid_argument("dataset: fixed column '" + spec.fixed_cols[j] +
                                    "' is constant (zero variance), cannot standardize");
      const double scale = std::sqrt(n / ss);
      for (int i = 0; i < n; ++i) out.data.x(i, j) *= scale;
    }
  }

  out.data.z = one_hot(t, require_col(spec.z_factor_col), spec.z_factor_col, out.z_levels,
                       out.z_index);
  if (spec.w_factor_col) {
    out.data.w =
        one_hot(t, require_col(*spec.w_factor_col), *spec.w_factor_col, out.w_levels, out.w_index);
  } else {
    out.data.w = Matrix(n, 0);
    out.w_index.assign(n, -1);
  }

  out.data.validate();
  return out;
}

}  // namespace mixedlm
