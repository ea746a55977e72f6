#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <string>

#include "json.hpp"

#include "irtmpc/errors.hpp"

namespace irtmpc {

using json = nlohmann::json;

inline json to_json_matrix(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline json to_json_vector(const Eigen::VectorXd& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

inline double json_number(const json& j, const std::string& path) {
  if (!j.is_number()) throw DataError(path + ": expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw DataError(path + ": non-finite value");
  return v;
}

/// Reads a row-major array of rows. `cols_hint` is used when the array is
/// empty (a 0 x cols block).
inline Eigen::MatrixXd json_matrix(const json& j, const std::string& path,
                                   Eigen::Index cols_hint = 0) {
  if (!j.is_array()) throw DataError(path + ": expected an array of rows");
  if (j.empty()) return Eigen::MatrixXd(0, cols_hint);
  const std::size_t rows = j.size();
  if (!j[0].is_array()) throw DataError(path + "/0: expected an array");
  const std::size_t cols = j[0].size();
  Eigen::MatrixXd m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    const auto row_path = path + "/" + std::to_string(i);
    if (!j[i].is_array()) throw DataError(row_path + ": expected an array");
    if (j[i].size() != cols)
      throw DataError(row_path + ": expected " + std::to_string(cols) +
                      " entries, got " + std::to_string(j[i].size()));
    for (std::size_t k = 0; k < cols; ++k)
      m(i, k) = json_number(j[i][k], row_path + "/" + std::to_string(k));
  }
  return m;
}

inline Eigen::VectorXd json_vector(const json& j, const std::string& path) {
  if (!j.is_array()) throw DataError(path + ": expected an array");
  Eigen::VectorXd v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i)
    v(i) = json_number(j[i], path + "/" + std::to_string(i));
  return v;
}

inline const json& json_require(const json& j, const std::string& key,
                                const std::string& path) {
  if (!j.is_object()) throw DataError(path + ": expected an object");
  auto it = j.find(key);
  if (it == j.end()) throw DataError(path + "/" + key + ": missing key");
  return *it;
}

}  // namespace irtmpc
