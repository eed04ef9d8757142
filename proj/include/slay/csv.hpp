// Copyright 2026 The SLAY Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdio>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "slay/error.hpp"

namespace slay {

using CsvCell = std::variant<std::string, double, long long>;

inline std::string format_real(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

inline std::string format_cell(const CsvCell& c) {
  if (const auto* s = std::get_if<std::string>(&c)) return *s;
  if (const auto* d = std::get_if<double>(&c)) return format_real(*d);
  return std::to_string(std::get<long long>(c));
}

/// Column-checked CSV table. The optional config line is emitted as
/// "# json-config: <json>" ahead of the header.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> columns, std::string json_config = {})
      : columns_(std::move(columns)), json_config_(std::move(json_config)) {}

  void add(std::vector<CsvCell> row) {
    require(row.size() == columns_.size(), ErrorKind::usage,
            "csv: row has " + std::to_string(row.size()) + " cells, expected " +
                std::to_string(columns_.size()));
    rows_.push_back(std::move(row));
  }

  const std::vector<std::string>& columns() const noexcept { return columns_; }
  const std::vector<std::vector<CsvCell>>& rows() const noexcept { return rows_; }

  void write(std::ostream& os) const {
    if (!json_config_.empty()) os << "# json-config: " << json_config_ << '\n';
    for (std::size_t c = 0; c < columns_.size(); ++c) os << (c ? "," : "") << columns_[c];
    os << '\n';
    for (const auto& row : rows_) {
      for (std::size_t c = 0; c < row.size(); ++c) os << (c ? "," : "") << format_cell(row[c]);
      os << '\n';
    }
  }

  std::string str() const {
    std::ostringstream os;
    write(os);
    return os.str();
  }

 private:
  std::vector<std::string> columns_;
  std::string json_config_;
  std::vector<std::vector<CsvCell>> rows_;
};

}  // namespace slay
