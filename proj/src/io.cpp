#include "jtri/io.hpp"

#include <cmath>

#include "jtri/error.hpp"

namespace jtri {

nlohmann::json matrix_to_json(const CMatrix& m) {
    nlohmann::json data = nlohmann::json::array();
    for (const auto& x : m.data()) data.push_back({x.real(), x.imag()});
    return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

CMatrix matrix_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("rows") || !j.contains("cols") || !j.contains("data"))
        throw Error(ErrorCode::ParseError, "matrix object needs rows, cols and data");
    if (!j["rows"].is_number_unsigned() || !j["cols"].is_number_unsigned() || !j["data"].is_array())
        throw Error(ErrorCode::ParseError, "rows/cols must be counts and data an array");
    const auto rows = j["rows"].get<std::size_t>();
    const auto cols = j["cols"].get<std::size_t>();
    const auto& data = j["data"];
    if (data.size() != rows * cols)
        throw Error(ErrorCode::ParseError, "data holds " + std::to_string(data.size()) + " entries, expected " +
                                               std::to_string(rows * cols));
    CMatrix m(rows, cols);
    for (std::size_t k = 0; k < data.size(); ++k) {
        const auto& e = data[k];
        double re = 0.0, im = 0.0;
        if (e.is_number()) {
            re = e.get<double>();
        } else if (e.is_array() && e.size() == 2 && e[0].is_number() && e[1].is_number()) {
            re = e[0].get<double>();
            im = e[1].get<double>();
        } else {
            throw Error(ErrorCode::ParseError, "entry " + std::to_string(k) + " is not [re, im]");
        }
        if (!std::isfinite(re) || !std::isfinite(im)) throw Error(ErrorCode::ParseError, "non-finite entry");
        m.data()[k] = cplx(re, im);
    }
    return m;
}

nlohmann::json vector_to_json(const std::vector<double>& v) { return nlohmann::json(v); }

std::vector<CMatrix> matrices_from_json(const nlohmann::json& j) {
    std::vector<CMatrix> out;
    if (j.is_array()) {
        for (const auto& e : j) out.push_back(matrix_from_json(e));
    } else if (j.is_object() && j.contains("matrices")) {
        return matrices_from_json(j["matrices"]);
    } else {
        out.push_back(matrix_from_json(j));
    }
    return out;
}

}  // namespace jtri
