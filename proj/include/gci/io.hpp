#pragma once

// Matrix exchange format: {"n": int, "rows": [[...], ...]} with full symmetric
// storage. Problem files may add {"n1": int, "t": [...]}.

#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "gci/errors.hpp"
#include "gci/matrix_core.hpp"

namespace gci {

struct ProblemSpec {
  CovMatrix cov;
  std::optional<std::size_t> n1;
  std::optional<std::vector<double>> t;
};

inline CovMatrix matrix_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw InputError("matrix JSON: expected an object");
  if (!j.contains("n") || !j["n"].is_number_integer()) throw InputError("matrix JSON: missing integer field \"n\"");
  if (!j.contains("rows") || !j["rows"].is_array()) throw InputError("matrix JSON: missing array field \"rows\"");
  const auto n64 = j["n"].get<long long>();
  if (n64 < 1) throw InputError("matrix JSON: \"n\" must be positive");
  const auto n = static_cast<std::size_t>(n64);
  const auto& rows = j["rows"];
  if (rows.size() != n) throw InputError("matrix JSON: \"rows\" must have n rows");
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!rows[i].is_array() || rows[i].size() != n) throw InputError("matrix JSON: every row must have n entries");
    for (std::size_t k = 0; k < n; ++k) {
      if (!rows[i][k].is_number()) throw InputError("matrix JSON: entries must be numbers");
      m(i, k) = rows[i][k].get<double>();
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = i + 1; k < n; ++k)
      if (std::abs(m(i, k) - m(k, i)) > CovMatrix::kSymmetryTolerance)
        throw InputError("matrix JSON: matrix is not symmetric");
  return CovMatrix(std::move(m));
}

inline nlohmann::json matrix_to_json(const Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    nlohmann::json r = nlohmann::json::array();
    for (std::size_t k = 0; k < m.cols(); ++k) r.push_back(m(i, k));
    rows.push_back(std::move(r));
  }
  return {{"n", m.rows()}, {"rows", std::move(rows)}};
}

inline ProblemSpec problem_from_json(const nlohmann::json& j) {
  ProblemSpec p{matrix_from_json(j), std::nullopt, std::nullopt};
  if (j.contains("n1")) {
    if (!j["n1"].is_number_integer() || j["n1"].get<long long>() < 0)
      throw InputError("problem JSON: \"n1\" must be a nonnegative integer");
    p.n1 = j["n1"].get<std::size_t>();
  }
  if (j.contains("t")) {
    if (!j["t"].is_array()) throw InputError("problem JSON: \"t\" must be an array");
    std::vector<double> t;
    for (const auto& v : j["t"]) {
      if (!v.is_number()) throw InputError("problem JSON: \"t\" entries must be numbers");
      t.push_back(v.get<double>());
    }
    p.t = std::move(t);
  }
  return p;
}

inline nlohmann::json parse_json_text(const std::string& text, const std::string& origin) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError("malformed JSON in " + origin + ": " + e.what());
  }
}

// `source` is either inline JSON (first non-blank character '{') or a file path.
inline ProblemSpec load_problem(const std::string& source) {
  const auto first = source.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && source[first] == '{')
    return problem_from_json(parse_json_text(source, "inline matrix"));
  std::ifstream in(source);
  if (!in) throw InputError("cannot read matrix file '" + source + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return problem_from_json(parse_json_text(buf.str(), "'" + source + "'"));
}

}  // namespace gci
