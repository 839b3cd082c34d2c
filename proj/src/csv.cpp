#include "pamfk/csv.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "pamfk/common.hpp"

namespace pamfk::csv {

std::string format_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace {

std::string quote_field(const std::string& field) {
  if (field.find_first_of(",\"\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

void check_target(const std::string& path, bool force) {
  if (!force && std::filesystem::exists(path))
    fail_invalid("output path already exists: " + path + " (pass --force to overwrite)");
}

}  // namespace

void write_csv(const Table& table, const std::string& path, bool force) {
  check_target(path, force);
  for (const auto& row : table.rows)
    if (row.size() != table.header.size())
      fail_invalid("csv table is not rectangular");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot open output file: " + path);
  auto emit_row = [&out](const std::vector<std::string>& row) {
    for (size_t i = 0; i < row.size(); ++i) {
      if (i) out << ',';
      out << quote_field(row[i]);
    }
    out << '\n';
  };
  emit_row(table.header);
  for (const auto& row : table.rows) emit_row(row);
  out.flush();
  if (!out) throw Error(ErrorCode::Io, "write failed: " + path);
}

void write_text(const std::string& text, const std::string& path, bool force) {
  check_target(path, force);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot open output file: " + path);
  out << text;
  out.flush();
  if (!out) throw Error(ErrorCode::Io, "write failed: " + path);
}

}  // namespace pamfk::csv
