#pragma once

#include <cstdint>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace etaxi::csv {

/// Minimal RFC-4180 style reader: comma separated, double-quoted fields with
/// "" escapes, no embedded newlines. Lines starting with '#' are skipped.
class Reader {
 public:
  explicit Reader(std::istream& in);

  /// Reads the header row; returns false on empty input.
  bool read_header();
  const std::vector<std::string>& header() const { return header_; }
  std::optional<std::size_t> column(std::string_view name) const;

  /// Next data row; false at end of stream. Blank lines are skipped.
  bool next(std::vector<std::string>& fields);
  std::size_t line_number() const { return line_no_; }

 private:
  std::istream& in_;
  std::vector<std::string> header_;
  std::size_t line_no_ = 0;
};

std::vector<std::string> split_line(std::string_view line);

std::optional<double> to_double(std::string_view s);
std::optional<std::int64_t> to_int(std::string_view s);

/// Shortest representation that round-trips through to_double.
std::string format_double(double v);

std::string quote(std::string_view field);

}  // namespace etaxi::csv
