// Copyright 2026 The LabelForge Authors
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


// Readers for the published-figure fixtures under tests/data.

#pragma once

#include <fstream>
#include <string>
#include <vector>

#include "labelforge/error.hpp"
#include "labelforge/text.hpp"

namespace labelforge::testing {

inline std::vector<std::vector<std::string>> read_pipe_table(const std::string& name) {
  const std::string path = std::string(LABELFORGE_TEST_DATA) + "/" + name;
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoFailure, "missing fixture " + path);
  std::vector<std::vector<std::string>> rows;
  for (std::string line; std::getline(in, line);) {
    if (line.empty() || line.front() == '#') continue;
    rows.push_back(split_char(line, '|'));
  }
  return rows;
}

template <typename T>
T field(const std::vector<std::string>& row, std::size_t i) {
  T v{};
  if (!parse_number(row.at(i), v)) throw Error(ErrorCode::Malformed, "bad fixture cell " + row.at(i));
  return v;
}

struct Table2Row {
  std::string attribute;
  std::size_t n_differ, n_n, n_p;
  double p_in;
};
inline constexpr std::size_t kTable2Pairs = 5068;

inline std::vector<Table2Row> table2() {
  std::vector<Table2Row> out;
  for (const auto& r : read_pipe_table("table2.txt")) {
    out.push_back({r.at(0), field<std::size_t>(r, 1), field<std::size_t>(r, 2),
                   field<std::size_t>(r, 3), field<double>(r, 4)});
  }
  return out;
}

struct Table1Row {
  std::string attribute;
  std::size_t n_d;
  std::string tier;
};
inline constexpr std::size_t kTable1Images = 1000;

inline std::vector<Table1Row> table1() {
  std::vector<Table1Row> out;
  for (const auto& r : read_pipe_table("table1.txt")) {
    out.push_back({r.at(0), field<std::size_t>(r, 1), r.at(2)});
  }
  return out;
}

struct Table3Row {
  std::string attribute;
  std::size_t n_n, n_p;
  std::string err_n, err_p;  // percent, two decimals, as printed
};

inline std::vector<Table3Row> table3() {
  std::vector<Table3Row> out;
  for (const auto& r : read_pipe_table("table3.txt")) {
    out.push_back({r.at(0), field<std::size_t>(r, 1), field<std::size_t>(r, 2), r.at(3), r.at(4)});
  }
  return out;
}

}  // namespace labelforge::testing
