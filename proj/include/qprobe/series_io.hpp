// CSV tables with a "# key=value" metadata header, and conversions to and
// from coherence series.
#ifndef QPROBE_SERIES_IO_HPP
#define QPROBE_SERIES_IO_HPP

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "qprobe/estimation.hpp"

namespace qprobe {

class CsvParseError : public std::runtime_error {
 public:
  CsvParseError(const std::string& source, std::size_t line, const std::string& message)
      : std::runtime_error(source + ":" + std::to_string(line) + ": " + message), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

struct CsvTable {
  std::vector<std::pair<std::string, std::string>> metadata;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  void set_meta(const std::string& key, const std::string& value);
  void set_meta(const std::string& key, double value);
  std::optional<std::string> meta(const std::string& key) const;
  std::optional<double> meta_number(const std::string& key) const;

  /// Index of a column; throws std::out_of_range when absent.
  std::size_t column_index(const std::string& name) const;
  std::vector<double> column(const std::string& name) const;
  void add_row(std::vector<double> row);
};

/// Shortest %.17g rendering, enough for an exact round trip.
std::string format_number(double value);

void write_csv(std::ostream& out, const CsvTable& table);
CsvTable read_csv(std::istream& in, const std::string& source = "<stream>");

void write_csv_file(const std::filesystem::path& path, const CsvTable& table);
CsvTable read_csv_file(const std::filesystem::path& path);

/// Columns t, F_gen; metadata M when known.
CsvTable table_from_series(const CoherenceSeries& series);

/// Reads columns t and F_gen. M comes from `M_override`, else from the
/// metadata key M unless M_known=0 is present.
CoherenceSeries series_from_table(const CsvTable& table, std::optional<double> M_override = std::nullopt);

}  // namespace qprobe

#endif  // QPROBE_SERIES_IO_HPP
