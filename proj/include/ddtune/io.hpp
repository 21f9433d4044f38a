#pragma once

// JSON persistence for problem instances.
//
// Clustering:  {"type":"clustering","n":N,"L":L,"k":K,"R":R,"kappa":1/R,
//               "distances":[[[...]]],"target":[[...]]}
// SSL:         {"type":"ssl","n":N,"L":L,"R":R,"distances":[[[...]]],
//               "labeled":[[index,label],...],"unlabeled":[...],"eval_labels":[...]}
// LogReg:      {"type":"logreg","m":M,"p":P,"m_val":M2,"X":[[...]],"y":[...],
//               "X_val":[[...]],"y_val":[...]}
//
// An optional "meta" object (tool version, seed, config hash) is written by
// the CLI and ignored on load. Doubles are written in shortest round-trip
// form, so load(save(x)) reproduces every numeric field bit-exactly.

#include "ddtune/instances.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <sstream>
#include <string>
#include <variant>

namespace ddtune {

using json = nlohmann::json;
using AnyInstance = std::variant<ClusteringInstance, SslInstance, LogRegInstance>;

namespace detail {

inline const json& field(const json& j, const std::string& key) {
  if (!j.is_object()) throw ParseError("", "expected a JSON object");
  auto it = j.find(key);
  if (it == j.end()) throw ParseError(key, "missing required field");
  return *it;
}

template <class T>
T field_as(const json& j, const std::string& key) {
  const json& v = field(j, key);
  try {
    return v.get<T>();
  } catch (const json::exception& e) {
    throw ParseError(key, std::string("wrong type: ") + e.what());
  }
}

inline json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Matrix matrix_from_json(const json& j, const std::string& name) {
  if (!j.is_array()) throw ParseError(name, "expected an array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = rows == 0 ? Eigen::Index{0} : static_cast<Eigen::Index>(j[0].size());
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const json& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
      throw ParseError(name, "row " + std::to_string(i) + " has the wrong length");
    for (Eigen::Index c = 0; c < cols; ++c) {
      const json& v = row[static_cast<std::size_t>(c)];
      if (!v.is_number())
        throw ParseError(name, "non-numeric entry at (" + std::to_string(i) + "," +
                                   std::to_string(c) + ")");
      m(i, c) = v.get<double>();
    }
  }
  return m;
}

inline json vector_to_json(const Vector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

inline Vector vector_from_json(const json& j, const std::string& name) {
  if (!j.is_array()) throw ParseError(name, "expected an array");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ParseError(name, "non-numeric entry " + std::to_string(i));
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return v;
}

inline json matrices_to_json(const std::vector<Matrix>& ms) {
  json a = json::array();
  for (const auto& m : ms) a.push_back(matrix_to_json(m));
  return a;
}

inline std::vector<Matrix> matrices_from_json(const json& j) {
  if (!j.is_array()) throw ParseError("distances", "expected an array of matrices");
  std::vector<Matrix> out;
  for (std::size_t l = 0; l < j.size(); ++l)
    out.push_back(matrix_from_json(j[l], "distances[" + std::to_string(l) + "]"));
  return out;
}

/// Runs `validate` and re-labels any failure as a parse error.
template <class T>
void validate_loaded(const T& inst) {
  try {
    inst.validate();
  } catch (const ParseError&) {
    throw;
  } catch (const InvalidArgument& e) {
    throw ParseError(e.field(), e.message());
  }
}

inline void check_count(const json& j, const std::string& key, std::size_t actual) {
  if (j.contains(key) && field_as<std::size_t>(j, key) != actual)
    throw ParseError(key, "declared " + std::to_string(field_as<std::size_t>(j, key)) +
                              " but data has " + std::to_string(actual));
}

}  // namespace detail

inline json to_json(const ClusteringInstance& inst) {
  return json{{"type", "clustering"},
              {"n", inst.n()},
              {"L", inst.L()},
              {"k", inst.k()},
              {"R", inst.R},
              {"kappa", inst.kappa()},
              {"distances", detail::matrices_to_json(inst.distances)},
              {"target", inst.target}};
}

inline json to_json(const SslInstance& inst) {
  json labeled = json::array();
  for (const auto& lp : inst.labeled) labeled.push_back({lp.index, lp.label});
  return json{{"type", "ssl"},
              {"n", inst.n()},
              {"L", inst.L()},
              {"R", inst.R},
              {"distances", detail::matrices_to_json(inst.distances)},
              {"labeled", labeled},
              {"unlabeled", inst.unlabeled},
              {"eval_labels", inst.eval_labels}};
}

inline json to_json(const LogRegInstance& inst) {
  return json{{"type", "logreg"},
              {"m", inst.m()},
              {"p", inst.p()},
              {"m_val", inst.m_val()},
              {"X", detail::matrix_to_json(inst.X)},
              {"y", detail::vector_to_json(inst.y)},
              {"X_val", detail::matrix_to_json(inst.X_val)},
              {"y_val", detail::vector_to_json(inst.y_val)}};
}

inline json to_json(const AnyInstance& inst) {
  return std::visit([](const auto& v) { return to_json(v); }, inst);
}

inline ClusteringInstance clustering_from_json(const json& j) {
  ClusteringInstance inst;
  inst.R = detail::field_as<double>(j, "R");
  inst.distances = detail::matrices_from_json(detail::field(j, "distances"));
  inst.target = detail::field_as<Partition>(j, "target");
  detail::check_count(j, "L", inst.distances.size());
  if (!inst.distances.empty())
    detail::check_count(j, "n", static_cast<std::size_t>(inst.distances.front().rows()));
  detail::check_count(j, "k", inst.target.size());
  detail::validate_loaded(inst);
  return inst;
}

inline SslInstance ssl_from_json(const json& j) {
  SslInstance inst;
  inst.R = detail::field_as<double>(j, "R");
  inst.distances = detail::matrices_from_json(detail::field(j, "distances"));
  for (const auto& pair : detail::field(j, "labeled")) {
    if (!pair.is_array() || pair.size() != 2)
      throw ParseError("labeled", "entries must be [index, label] pairs");
    inst.labeled.push_back({pair[0].get<int>(), pair[1].get<int>()});
  }
  inst.unlabeled = detail::field_as<std::vector<int>>(j, "unlabeled");
  if (j.contains("eval_labels")) inst.eval_labels = detail::field_as<std::vector<int>>(j, "eval_labels");
  detail::check_count(j, "L", inst.distances.size());
  if (!inst.distances.empty())
    detail::check_count(j, "n", static_cast<std::size_t>(inst.distances.front().rows()));
  detail::validate_loaded(inst);
  return inst;
}

inline LogRegInstance logreg_from_json(const json& j) {
  LogRegInstance inst;
  inst.X = detail::matrix_from_json(detail::field(j, "X"), "X");
  inst.y = detail::vector_from_json(detail::field(j, "y"), "y");
  inst.X_val = detail::matrix_from_json(detail::field(j, "X_val"), "X_val");
  inst.y_val = detail::vector_from_json(detail::field(j, "y_val"), "y_val");
  detail::check_count(j, "m", static_cast<std::size_t>(inst.X.rows()));
  detail::check_count(j, "p", static_cast<std::size_t>(inst.X.cols()));
  detail::check_count(j, "m_val", static_cast<std::size_t>(inst.X_val.rows()));
  detail::validate_loaded(inst);
  return inst;
}

inline AnyInstance instance_from_json(const json& j) {
  const auto type = detail::field_as<std::string>(j, "type");
  if (type == "clustering") return clustering_from_json(j);
  if (type == "ssl") return ssl_from_json(j);
  if (type == "logreg") return logreg_from_json(j);
  throw ParseError("type", "unknown instance type '" + type + "'");
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("path", "cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError("", "malformed JSON in '" + path + "': " + e.what());
  }
}

inline void save_instance(const AnyInstance& inst, const std::string& path,
                          const json& meta = json()) {
  json j = to_json(inst);
  if (!meta.is_null()) j["meta"] = meta;
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path + "'");
  out << j.dump(1) << '\n';
}

inline AnyInstance load_instance(const std::string& path) {
  return instance_from_json(read_json_file(path));
}

}  // namespace ddtune
