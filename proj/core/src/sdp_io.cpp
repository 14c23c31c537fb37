#include <nlohmann/json.hpp>

#include "sentinel/sdp.hpp"

namespace sentinel::sdp {

namespace {

std::vector<double> row_major(const Matrix& M) {
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(M.size()));
    for (Eigen::Index i = 0; i < M.rows(); ++i)
        for (Eigen::Index j = 0; j < M.cols(); ++j) out.push_back(M(i, j));
    return out;
}

Matrix from_row_major(const std::vector<double>& data, Eigen::Index size) {
    if (static_cast<Eigen::Index>(data.size()) != size * size)
        throw std::invalid_argument("SDP json: block data has wrong length");
    Matrix M(size, size);
    for (Eigen::Index i = 0; i < size; ++i)
        for (Eigen::Index j = 0; j < size; ++j) M(i, j) = data[static_cast<std::size_t>(i * size + j)];
    return M;
}

}  // namespace

nlohmann::json to_json(const SdpProblem& problem) {
    nlohmann::json doc;
    doc["nvars"] = problem.nvars;
    doc["objective"] = std::vector<double>(problem.objective.data(), problem.objective.data() + problem.objective.size());
    doc["blocks"] = nlohmann::json::array();
    for (const auto& block : problem.blocks) {
        nlohmann::json jb;
        jb["size"] = block.size();
        jb["constant"] = row_major(block.constant);
        jb["coeffs"] = nlohmann::json::array();
        for (const auto& Fi : block.coeffs) jb["coeffs"].push_back(row_major(Fi));
        doc["blocks"].push_back(std::move(jb));
    }
    doc["lower_bounds"] = nlohmann::json::array();
    for (const auto& lb : problem.lower_bounds) doc["lower_bounds"].push_back(lb ? nlohmann::json(*lb) : nlohmann::json());
    return doc;
}

SdpProblem problem_from_json(const nlohmann::json& doc) {
    SdpProblem problem;
    problem.nvars = doc.at("nvars").get<int>();
    const auto objective = doc.at("objective").get<std::vector<double>>();
    problem.objective = Eigen::Map<const Vector>(objective.data(), static_cast<Eigen::Index>(objective.size()));
    for (const auto& jb : doc.at("blocks")) {
        const auto size = jb.at("size").get<Eigen::Index>();
        LmiBlock block;
        block.constant = from_row_major(jb.at("constant").get<std::vector<double>>(), size);
        for (const auto& jc : jb.at("coeffs")) block.coeffs.push_back(from_row_major(jc.get<std::vector<double>>(), size));
        problem.blocks.push_back(std::move(block));
    }
    if (doc.contains("lower_bounds")) {
        for (const auto& lb : doc.at("lower_bounds"))
            problem.lower_bounds.push_back(lb.is_null() ? std::nullopt : std::optional<double>(lb.get<double>()));
    }
    problem.validate();
    return problem;
}

}  // namespace sentinel::sdp
