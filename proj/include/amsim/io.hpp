#pragma once

#include <charconv>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace amsim::io {

// 17 significant digits: round-trips every double bit-exactly.
inline std::string format_double(double x) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), x, std::chars_format::general, 17);
  if (ec != std::errc{}) throw std::runtime_error("format_double: conversion failed");
  return std::string(buf, end);
}

// Absent values serialize as an empty field.
inline std::string format_optional(const std::optional<double>& x) { return x ? format_double(*x) : std::string(); }

inline double parse_double(std::string_view s) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw std::runtime_error("parse_double: malformed number '" + std::string(s) + "'");
  }
  return v;
}

inline std::optional<double> parse_optional(std::string_view s) {
  if (s.empty()) return std::nullopt;
  return parse_double(s);
}

inline std::size_t parse_size(std::string_view s) {
  std::size_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw std::runtime_error("parse_size: malformed integer '" + std::string(s) + "'");
  }
  return v;
}

inline std::vector<std::string_view> split_fields(std::string_view line, char sep = ',') {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

inline std::string join_header(const std::vector<std::string_view>& cols) {
  std::string out;
  for (std::size_t i = 0; i < cols.size(); ++i) {
    if (i) out += ',';
    out += cols[i];
  }
  return out;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Writes to a sibling temp file and renames it over the target.
inline void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open '" + tmp.string() + "' for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw std::runtime_error("write failed for '" + tmp.string() + "'");
  }
  fs::rename(tmp, path);
}

// A parsed CSV whose header must match a fixed column list exactly.
class CsvTable {
public:
  static CsvTable parse(std::string text, const std::vector<std::string_view>& expected_header,
                        const std::string& source) {
    CsvTable t;
    t.text_ = std::make_shared<const std::string>(std::move(text));
    std::string_view all(*t.text_);
    std::size_t pos = 0;
    bool header_done = false;
    std::size_t line_no = 0;
    while (pos < all.size()) {
      std::size_t eol = all.find('\n', pos);
      if (eol == std::string_view::npos) eol = all.size();
      std::string_view line = all.substr(pos, eol - pos);
      if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
      pos = eol + 1;
      ++line_no;
      if (line.empty()) continue;
      auto fields = split_fields(line);
      if (!header_done) {
        if (fields.size() != expected_header.size()) {
          throw std::runtime_error(source + ": header has " + std::to_string(fields.size()) + " columns, expected " +
                                   std::to_string(expected_header.size()));
        }
        for (std::size_t i = 0; i < fields.size(); ++i) {
          if (fields[i] != expected_header[i]) {
            throw std::runtime_error(source + ": column " + std::to_string(i) + " is '" + std::string(fields[i]) +
                                     "', expected '" + std::string(expected_header[i]) + "'");
          }
        }
        header_done = true;
        continue;
      }
      if (fields.size() != expected_header.size()) {
        throw std::runtime_error(source + ":" + std::to_string(line_no) + ": expected " +
                                 std::to_string(expected_header.size()) + " fields, got " +
                                 std::to_string(fields.size()));
      }
      t.rows_.push_back(std::move(fields));
    }
    if (!header_done) throw std::runtime_error(source + ": missing header");
    return t;
  }

  [[nodiscard]] std::size_t rows() const noexcept { return rows_.size(); }
  [[nodiscard]] std::string_view at(std::size_t row, std::size_t col) const { return rows_.at(row).at(col); }

private:
  // Heap-held so the views in rows_ survive moves of the table.
  std::shared_ptr<const std::string> text_;
  std::vector<std::vector<std::string_view>> rows_;
};

}  // namespace amsim::io
