#pragma once

#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "sentinel/model.hpp"

namespace sentinel {

// Matrices travel as arrays of rows.
inline nlohmann::json matrix_json(const Matrix& M) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < M.rows(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline Matrix matrix_from_json(const nlohmann::json& rows, const std::string& what = "matrix") {
    if (!rows.is_array()) throw std::invalid_argument(what + " must be an array of rows");
    const auto nr = static_cast<Eigen::Index>(rows.size());
    const auto nc = nr > 0 ? static_cast<Eigen::Index>(rows[0].size()) : 0;
    Matrix M(nr, nc);
    for (Eigen::Index i = 0; i < nr; ++i) {
        const auto& row = rows[static_cast<std::size_t>(i)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != nc)
            throw std::invalid_argument(what + " has ragged rows");
        for (Eigen::Index j = 0; j < nc; ++j) M(i, j) = row[static_cast<std::size_t>(j)].get<double>();
    }
    return M;
}

inline nlohmann::json vector_json(const Vector& v) {
    nlohmann::json out = nlohmann::json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

inline Vector vector_from_json(const nlohmann::json& values, const std::string& what = "vector") {
    if (!values.is_array()) throw std::invalid_argument(what + " must be an array");
    Vector v(static_cast<Eigen::Index>(values.size()));
    for (std::size_t i = 0; i < values.size(); ++i) v(static_cast<Eigen::Index>(i)) = values[i].get<double>();
    return v;
}

}  // namespace sentinel
