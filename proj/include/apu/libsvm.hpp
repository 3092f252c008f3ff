#pragma once

#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "apu/data.hpp"
#include "apu/errors.hpp"

namespace apu {

struct LibsvmData {
  std::vector<Example> examples;
  std::vector<int> labels;
};

namespace detail {

struct SparseRow {
  int label = 0;
  std::vector<std::pair<std::size_t, double>> entries;  // 1-based indices
};

inline SparseRow parse_libsvm_line(const std::string& line, std::size_t lineno) {
  std::istringstream ss(line);
  std::string token;
  if (!(ss >> token)) {
    throw DataError("libsvm parse error at line " + std::to_string(lineno) +
                    ": missing label");
  }
  SparseRow row;
  try {
    std::size_t used = 0;
    row.label = std::stoi(token, &used);
    if (used != token.size()) throw std::invalid_argument(token);
  } catch (const std::exception&) {
    throw DataError("libsvm parse error at line " + std::to_string(lineno) +
                    ": non-numeric label '" + token + "'");
  }

  std::size_t prev_index = 0;
  while (ss >> token) {
    const std::size_t colon = token.find(':');
    if (colon == std::string::npos) {
      throw DataError("libsvm parse error at line " + std::to_string(lineno) +
                      ": expected idx:val, got '" + token + "'");
    }
    std::size_t index = 0;
    const char* ib = token.data();
    const char* ie = token.data() + colon;
    auto ir = std::from_chars(ib, ie, index);
    if (ir.ec != std::errc() || ir.ptr != ie) {
      throw DataError("libsvm parse error at line " + std::to_string(lineno) +
                      ": non-numeric index in '" + token + "'");
    }
    if (index == 0) {
      throw DataError("libsvm parse error at line " + std::to_string(lineno) +
                      ": indices are 1-based, got 0");
    }
    if (index <= prev_index) {
      throw DataError("libsvm parse error at line " + std::to_string(lineno) +
                      ": indices must be ascending");
    }
    prev_index = index;

    const std::string value_str = token.substr(colon + 1);
    double value = 0.0;
    try {
      std::size_t used = 0;
      value = std::stod(value_str, &used);
      if (used != value_str.size()) throw std::invalid_argument(value_str);
    } catch (const std::exception&) {
      throw DataError("libsvm parse error at line " + std::to_string(lineno) +
                      ": non-numeric value in '" + token + "'");
    }
    row.entries.emplace_back(index, value);
  }
  return row;
}

}  // namespace detail

/// Parses LIBSVM text: `label idx:val idx:val ...` with 1-based strictly
/// ascending indices.  Vectors are densified to the maximum index seen in
/// the file; omitted indices become 0.
inline LibsvmData parse_libsvm(std::istream& in) {
  std::vector<detail::SparseRow> rows;
  std::string line;
  std::size_t lineno = 0;
  std::size_t max_index = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    rows.push_back(detail::parse_libsvm_line(line, lineno));
    if (!rows.back().entries.empty()) {
      max_index = std::max(max_index, rows.back().entries.back().first);
    }
  }

  LibsvmData out;
  out.examples.reserve(rows.size());
  out.labels.reserve(rows.size());
  for (const detail::SparseRow& row : rows) {
    std::vector<double> dense(max_index, 0.0);
    for (const auto& [idx, val] : row.entries) dense[idx - 1] = val;
    out.examples.emplace_back(std::move(dense));
    out.labels.push_back(row.label);
  }
  return out;
}

inline LibsvmData parse_libsvm(const std::string& text) {
  std::istringstream ss(text);
  return parse_libsvm(ss);
}

inline LibsvmData parse_libsvm_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open libsvm file '" + path + "'");
  return parse_libsvm(in);
}

/// Writes every coordinate (dense), with enough digits for an exact
/// round-trip of IEEE doubles.
inline void write_libsvm(std::ostream& os, const SampleSet& set) {
  char buf[64];
  for (std::size_t i = 0; i < set.size(); ++i) {
    const Example& e = set.example(i);
    const std::optional<int> y = e.true_label();
    os << (y ? *y : 0);
    const std::vector<double>& x = e.features();
    for (std::size_t j = 0; j < x.size(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", x[j]);
      os << ' ' << (j + 1) << ':' << buf;
    }
    os << '\n';
  }
}

}  // namespace apu
