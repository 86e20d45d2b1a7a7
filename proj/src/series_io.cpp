#include "qprobe/series_io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace qprobe {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::optional<double> parse_number(const std::string& text) {
  double value = 0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (text.empty() || ec != std::errc() || ptr != end) return std::nullopt;  // also rejects overflow
  return value;
}

}  // namespace

std::string format_number(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

void CsvTable::set_meta(const std::string& key, const std::string& value) {
  if (key.find('=') != std::string::npos || key.find('\n') != std::string::npos || value.find('\n') != std::string::npos)
    throw std::invalid_argument("CsvTable: metadata key/value may not contain '=' (key) or newlines");
  for (auto& [k, v] : metadata)
    if (k == key) {
      v = value;
      return;
    }
  metadata.emplace_back(key, value);
}

void CsvTable::set_meta(const std::string& key, double value) { set_meta(key, format_number(value)); }

std::optional<std::string> CsvTable::meta(const std::string& key) const {
  for (const auto& [k, v] : metadata)
    if (k == key) return v;
  return std::nullopt;
}

std::optional<double> CsvTable::meta_number(const std::string& key) const {
  const auto text = meta(key);
  if (!text) return std::nullopt;
  const auto value = parse_number(*text);
  if (!value) throw std::invalid_argument("metadata " + key + " is not a number: " + *text);
  return value;
}

std::size_t CsvTable::column_index(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i] == name) return i;
  throw std::out_of_range("CSV has no column '" + name + "'");
}

std::vector<double> CsvTable::column(const std::string& name) const {
  const std::size_t index = column_index(name);
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& row : rows) out.push_back(row[index]);
  return out;
}

void CsvTable::add_row(std::vector<double> row) {
  if (row.size() != columns.size()) throw std::invalid_argument("CsvTable: row width does not match the header");
  rows.push_back(std::move(row));
}

void write_csv(std::ostream& out, const CsvTable& table) {
  for (const auto& [k, v] : table.metadata) out << "# " << k << '=' << v << '\n';
  for (std::size_t i = 0; i < table.columns.size(); ++i) out << (i ? "," : "") << table.columns[i];
  out << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << format_number(row[i]);
    out << '\n';
  }
}

CsvTable read_csv(std::istream& in, const std::string& source) {
  CsvTable table;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string text = trim(line);
    if (text.empty()) continue;
    if (text[0] == '#') {
      if (have_header) throw CsvParseError(source, line_no, "metadata after the column header");
      const std::string body = trim(text.substr(1));
      const auto eq = body.find('=');
      if (eq == std::string::npos) continue;  // free-form comment
      table.metadata.emplace_back(trim(body.substr(0, eq)), trim(body.substr(eq + 1)));
      continue;
    }
    const auto cells = split(text);
    if (!have_header) {
      for (const auto& c : cells)
        if (c.empty()) throw CsvParseError(source, line_no, "empty column name");
      table.columns = cells;
      have_header = true;
      continue;
    }
    if (cells.size() != table.columns.size())
      throw CsvParseError(source, line_no,
                          "expected " + std::to_string(table.columns.size()) + " fields, found " +
                              std::to_string(cells.size()));
    std::vector<double> row;
    row.reserve(cells.size());
    for (std::size_t i = 0; i < cells.size(); ++i) {
      const auto value = parse_number(cells[i]);
      if (!value) throw CsvParseError(source, line_no, "field '" + table.columns[i] + "' is not a number: " + cells[i]);
      row.push_back(*value);
    }
    table.rows.push_back(std::move(row));
  }
  if (!have_header) throw CsvParseError(source, line_no, "missing column header");
  return table;
}

void write_csv_file(const std::filesystem::path& path, const CsvTable& table) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_csv(out, table);
  if (!out) throw std::runtime_error("error while writing " + path.string());
}

CsvTable read_csv_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return read_csv(in, path.string());
}

CsvTable table_from_series(const CoherenceSeries& series) {
  series.validate();
  CsvTable table;
  if (series.M) table.set_meta("M", *series.M);
  table.set_meta("M_known", series.M ? "1" : "0");
  if (series.noise) table.set_meta("noise", *series.noise);
  table.columns = {"t", "F_gen"};
  for (std::size_t i = 0; i < series.times.size(); ++i) table.add_row({series.times[i], series.fgen[i]});
  return table;
}

CoherenceSeries series_from_table(const CsvTable& table, std::optional<double> M_override) {
  CoherenceSeries series;
  series.times = table.column("t");
  series.fgen = table.column("F_gen");
  if (M_override) {
    series.M = M_override;
  } else if (table.meta("M_known").value_or("1") != "0") {
    series.M = table.meta_number("M");
  }
  series.noise = table.meta_number("noise");
  series.validate();
  return series;
}

}  // namespace qprobe
