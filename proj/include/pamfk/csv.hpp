#pragma once

#include <string>
#include <vector>

namespace pamfk::csv {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

/// 17 significant digits so exact-oracle comparisons survive serialization.
std::string format_real(double v);

/// RFC-4180-style CSV with LF line endings. Refuses to overwrite an existing
/// file unless force is set.
void write_csv(const Table& table, const std::string& path, bool force);

void write_text(const std::string& text, const std::string& path, bool force);

}  // namespace pamfk::csv
