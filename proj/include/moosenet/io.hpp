// moosenet/io.hpp

// Copyright 2026 The MooseNet Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Little-endian binary helpers and a minimal CSV reader. CSV cells are plain
// comma-separated values without quoting; identifiers must not contain commas.

#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "moosenet/error.hpp"

namespace moosenet::io {

static_assert(std::endian::native == std::endian::little,
              "binary formats are written by byte copy on little-endian hosts");

template <typename T>
void write_le(std::ostream& os, T value) {
  os.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_le(std::istream& is, std::string_view what) {
  T value{};
  if (!is.read(reinterpret_cast<char*>(&value), sizeof(T))) {
    throw Error(Errc::TruncatedFile, "unexpected end of file while reading " + std::string(what));
  }
  return value;
}

inline void write_string(std::ostream& os, const std::string& s) {
  write_le<std::uint32_t>(os, static_cast<std::uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string read_string(std::istream& is, std::string_view what) {
  const auto n = read_le<std::uint32_t>(is, what);
  std::string s(n, '\0');
  if (n > 0 && !is.read(s.data(), n)) {
    throw Error(Errc::TruncatedFile, "unexpected end of file while reading " + std::string(what));
  }
  return s;
}

inline void expect_magic(std::istream& is, std::string_view magic, const std::string& path) {
  char buf[4] = {};
  if (!is.read(buf, 4)) throw Error(Errc::TruncatedFile, path + ": missing header");
  if (std::string_view(buf, 4) != magic) {
    throw Error(Errc::BadMagic, path + ": expected magic " + std::string(magic));
  }
}

inline std::ifstream open_in(const std::filesystem::path& path, bool binary = false) {
  std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
  if (!in) throw Error(Errc::MissingFile, "cannot open " + path.string());
  return in;
}

inline std::ofstream open_out(const std::filesystem::path& path, bool binary = false) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) throw Error(Errc::MissingFile, "cannot write " + path.string());
  return out;
}

inline std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      cells.emplace_back(line.substr(start));
      break;
    }
    cells.emplace_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return cells;
}

struct CsvRow {
  std::size_t line = 0;  // 1-based line number in the file
  std::vector<std::string> cells;
};

/// Reads a CSV file whose first line must equal `header` exactly.
/// Blank lines are skipped; every data row must have the header's width.
inline std::vector<CsvRow> read_csv(const std::filesystem::path& path, std::string_view header) {
  auto in = open_in(path);
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw Error(Errc::MalformedRow, path.string() + ": empty file");
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != header) {
    throw Error(Errc::MalformedRow, path.string() + ":1: header must be '" + std::string(header) + "'");
  }
  const auto width = split_csv_line(header).size();
  std::vector<CsvRow> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = split_csv_line(line);
    if (cells.size() != width) {
      throw Error(Errc::MalformedRow, path.string() + ":" + std::to_string(line_no) + ": expected " +
                                          std::to_string(width) + " fields, got " +
                                          std::to_string(cells.size()));
    }
    rows.push_back({line_no, std::move(cells)});
  }
  return rows;
}

inline std::string where(const std::filesystem::path& path, const CsvRow& row) {
  return path.string() + ":" + std::to_string(row.line);
}

/// Strict decimal parse; the whole cell must be consumed.
inline double parse_double(const std::string& cell, const std::string& context) {
  std::istringstream is(cell);
  double v = 0.0;
  is >> v;
  if (!is || !is.eof() || cell.empty()) {
    throw Error(Errc::MalformedRow, context + ": not a number: '" + cell + "'");
  }
  return v;
}

inline long long parse_int(const std::string& cell, const std::string& context) {
  std::size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(cell, &used);
  } catch (const std::exception&) {
    throw Error(Errc::MalformedRow, context + ": not an integer: '" + cell + "'");
  }
  if (used != cell.size()) throw Error(Errc::MalformedRow, context + ": not an integer: '" + cell + "'");
  return v;
}

/// Shortest round-tripping text for a double.
inline std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace moosenet::io
