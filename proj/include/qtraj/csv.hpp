#pragma once

#include "error.hpp"

#include <charconv>
#include <cmath>
#include <cstddef>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

//! Minimal CSV reading and deterministic number formatting.
namespace qtraj::csv {

//! Splits one line on commas. Double-quoted fields may contain commas and
//! doubled quotes; surrounding whitespace is trimmed.
inline std::vector<std::string> split_line(std::string_view line)
{
  std::vector<std::string> fields;
  std::string current;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          current += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        current += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(current);
      current.clear();
    } else {
      current += c;
    }
  }
  fields.push_back(current);

  for (auto& f : fields) {
    auto b = f.find_first_not_of(" \t\r");
    auto e = f.find_last_not_of(" \t\r");
    f = b == std::string::npos ? std::string() : f.substr(b, e - b + 1);
  }
  return fields;
}

struct Table
{
  std::vector<std::string> header;
  //! Data rows with their 1-based line numbers in the source.
  std::vector<std::pair<std::size_t, std::vector<std::string>>> rows;

  std::optional<std::size_t> column(std::string_view name) const
  {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name)
        return i;
    return std::nullopt;
  }
};

//! Reads a header line followed by data rows. Blank lines are skipped; every
//! data row must have as many fields as the header.
inline Table read(std::istream& in)
{
  Table table;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (line.find_first_not_of(" \t\r") == std::string::npos)
      continue;
    if (table.header.empty() && table.rows.empty()) {
      if (row == 1 && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0)
        line.erase(0, 3);
      table.header = split_line(line);
      continue;
    }
    auto fields = split_line(line);
    if (fields.size() != table.header.size())
      throw ParseError(row,
                       "expected " + std::to_string(table.header.size()) +
                         " fields, found " + std::to_string(fields.size()));
    table.rows.emplace_back(row, std::move(fields));
  }
  if (table.header.empty())
    throw ParseError(row == 0 ? 1 : row, "missing header line");
  return table;
}

//! Parses a finite real number with '.' as decimal separator.
inline std::optional<double> parse_double(std::string_view text)
{
  if (!text.empty() && text.front() == '+')
    text.remove_prefix(1);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty() ||
      !std::isfinite(value))
    return std::nullopt;
  return value;
}

//! Shortest representation that round-trips; identical on every run. NaN is
//! written as an empty field.
inline std::string format(double value)
{
  if (std::isnan(value))
    return {};
  char buffer[64];
  auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
  return std::string(buffer, ptr);
}

//! Quotes a text field when it contains separators or quotes.
inline std::string quote(std::string_view text)
{
  if (text.find_first_of(",\"\n\r") == std::string_view::npos)
    return std::string(text);
  std::string out = "\"";
  for (char c : text) {
    if (c == '"')
      out += '"';
    out += c;
  }
  out += '"';
  return out;
}

} // namespace qtraj::csv
