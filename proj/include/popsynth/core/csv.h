#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace popsynth::csv {

/// One parsed line together with its 1-based line number in the source.
struct Row {
    std::size_t line = 0;
    std::vector<std::string> fields;
};

/// @brief Splits a single CSV line (RFC 4180 quoting, no embedded newlines).
/// Throws ValidationError on an unterminated quote.
std::vector<std::string> split_line(std::string_view line, std::size_t line_number = 0);

/// @brief Sequential reader over an input stream.
///
/// Strips a trailing CR so files with CRLF endings are accepted; blank lines
/// are skipped.
class Reader {
  public:
    Reader(std::istream &input, std::string source_name);

    std::optional<Row> next();

    [[nodiscard]] const std::string &source_name() const noexcept { return source_name_; }

  private:
    std::istream &input_;
    std::string source_name_;
    std::size_t line_number_ = 0;
};

/// Quotes a field only when it contains a comma, quote or newline.
std::string escape(std::string_view field);

/// Joins fields with commas and appends LF.
void write_row(std::ostream &out, const std::vector<std::string> &fields);

/// Shortest decimal text that parses back to exactly the same double.
std::string format_exact(double value);

/// Fixed-point text with the given number of decimals; "-0.000" is printed as "0.000".
std::string format_fixed(double value, int decimals);

/// Strict integer parse of the entire field (surrounding whitespace allowed).
std::optional<long long> parse_int(std::string_view text);

/// Strict floating-point parse of the entire field (surrounding whitespace allowed).
std::optional<double> parse_double(std::string_view text);

std::string_view trim(std::string_view text);

} // namespace popsynth::csv
