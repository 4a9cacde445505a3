#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace vcat::csv {

using Row = std::vector<std::string>;

/// Minimal RFC-4180 reader: comma separated, double-quote escaping, quoted
/// fields may contain commas, quotes and line breaks. Accepts LF or CRLF.
class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  /// Reads the next record into `row`. Returns false at end of input.
  bool next(Row& row);

  /// 1-based physical line on which the last returned record started.
  std::size_t line() const noexcept { return record_line_; }

 private:
  std::istream& in_;
  std::size_t line_ = 1;
  std::size_t record_line_ = 0;
};

/// Quotes a field when it contains a separator, quote or line break.
std::string escape(std::string_view field);

void write_row(std::ostream& out, const Row& row);

}  // namespace vcat::csv
