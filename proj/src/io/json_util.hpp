#pragma once

#include "hvf/numerics.hpp"

#include "json.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace hvf::io {

using json = nlohmann::json;

inline json to_json(const Vec& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

/// Row-major nested arrays, one inner array per row.
inline json to_json(const Mat& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    std::vector<double> row(static_cast<std::size_t>(m.cols()));
    for (Index j = 0; j < m.cols(); ++j) row[static_cast<std::size_t>(j)] = m(i, j);
    rows.push_back(row);
  }
  return rows;
}

inline Vec vec_from_json(const json& j, const std::string& where) {
  if (!j.is_array()) throw FormatError(where + ": expected an array of numbers");
  Vec v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw FormatError(where + "[" + std::to_string(i) + "]: expected a number");
    v(static_cast<Index>(i)) = j[i].get<double>();
  }
  return v;
}

inline Mat mat_from_json(const json& j, const std::string& where, Index cols_if_empty = 0) {
  if (!j.is_array()) throw FormatError(where + ": expected an array of rows");
  if (j.empty()) return Mat(0, cols_if_empty);
  const Index rows = static_cast<Index>(j.size());
  const Index cols = static_cast<Index>(j[0].size());
  Mat m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    const Vec r = vec_from_json(j[static_cast<std::size_t>(i)], where + "[" + std::to_string(i) + "]");
    if (r.size() != cols) throw FormatError(where + ": ragged rows");
    m.row(i) = r.transpose();
  }
  return m;
}

inline const json& require(const json& j, const std::string& key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) throw FormatError(where + ": missing field '" + key + "'");
  return j.at(key);
}

inline void check_schema(const json& j, const std::string& expected, const std::string& where) {
  const std::string got = require(j, "schema", where).get<std::string>();
  if (got != expected) {
    throw FormatError(where + ": schema '" + got + "' does not match expected '" + expected + "'");
  }
}

inline json parse_json(const std::string& text, const std::string& where) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(where + ": parse error at byte " + std::to_string(e.byte) + ": " + e.what());
  }
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "' for reading");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

}  // namespace hvf::io
