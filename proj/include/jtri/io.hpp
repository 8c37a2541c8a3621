#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "jtri/matrix.hpp"

namespace jtri {

// {"rows": r, "cols": c, "data": [[re, im], ...]} in row-major order.
nlohmann::json matrix_to_json(const CMatrix& m);
CMatrix matrix_from_json(const nlohmann::json& j);

nlohmann::json vector_to_json(const std::vector<double>& v);

// Parses either a single matrix object or an array of matrix objects.
std::vector<CMatrix> matrices_from_json(const nlohmann::json& j);

}  // namespace jtri
