#include <nlohmann/json.hpp>

#include "sentinel/json_util.hpp"
#include "sentinel/synthesis.hpp"

namespace sentinel {


nlohmann::json to_json(const ObserverDesign& design) {
    nlohmann::json doc;
    doc["subset"] = design.subset;
    doc["c3"] = design.c3;
    doc["K"] = matrix_json(design.K);
    doc["L"] = matrix_json(design.L);
    doc["P"] = matrix_json(design.P);
    doc["kappa"] = design.kappa;
    doc["mu"] = design.mu;
    doc["mu1"] = design.mu1;
    doc["multiplier"] = to_string(design.multiplier);
    doc["slope_weights"] = std::vector<double>(design.slope_weights.data(),
                                               design.slope_weights.data() + design.slope_weights.size());
    doc["certificate"] = {{"c", design.certificate.c},
                          {"lambda", design.certificate.lambda},
                          {"gamma", design.certificate.gamma}};
    nlohmann::json grid = nlohmann::json::array();
    for (const auto& gp : design.grid)
        grid.push_back({{"c3", gp.c3},
                        {"status", sdp::to_string(gp.status)},
                        {"mu", gp.mu},
                        {"mu1", gp.mu1},
                        {"gamma", gp.gamma},
                        {"iterations", gp.iterations}});
    doc["grid"] = std::move(grid);
    return doc;
}

ObserverDesign design_from_json(const nlohmann::json& doc) {
    ObserverDesign d;
    d.subset = doc.at("subset").get<std::vector<int>>();
    d.c3 = doc.at("c3").get<double>();
    d.K = matrix_from_json(doc.at("K"));
    d.L = matrix_from_json(doc.at("L"));
    d.P = matrix_from_json(doc.at("P"));
    d.kappa = doc.at("kappa").get<double>();
    d.mu = doc.at("mu").get<double>();
    d.mu1 = doc.at("mu1").get<double>();
    d.multiplier = multiplier_from_string(doc.value("multiplier", std::string("slope-restricted")));
    const auto w = doc.value("slope_weights", std::vector<double>(static_cast<std::size_t>(d.K.rows()), 0.0));
    d.slope_weights = Eigen::Map<const Vector>(w.data(), static_cast<Eigen::Index>(w.size()));
    const auto& cert = doc.at("certificate");
    d.certificate = {cert.at("c").get<double>(), cert.at("lambda").get<double>(), cert.at("gamma").get<double>()};
    if (d.L.rows() != d.P.rows() || d.L.cols() != d.K.cols() || d.P.rows() != d.P.cols())
        throw std::invalid_argument("design json: inconsistent matrix shapes");
    if (static_cast<int>(d.subset.size()) != d.K.cols())
        throw std::invalid_argument("design json: gain width does not match subset size");
    return d;
}

}  // namespace sentinel
