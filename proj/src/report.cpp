#include "latwave/report.hpp"

#include <cstdio>
#include <ostream>

#include "json.hpp"

namespace latwave {

namespace {

using json = nlohmann::json;

json complex_json(cplx z) { return json::array({z.real(), z.imag()}); }

json vector_json(const Eigen::VectorXcd& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(complex_json(v(i)));
    return a;
}

std::string sci(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.16e", v);
    return buf;
}

}  // namespace

std::string status_name(RecoveryStatus status) {
    switch (status) {
        case RecoveryStatus::Unique: return "UNIQUE";
        case RecoveryStatus::Manifold: return "MANIFOLD";
        case RecoveryStatus::Inconsistent: return "INCONSISTENT";
    }
    return "UNKNOWN";
}

std::string recovery_report(const RecoveryResult& result) {
    json doc;
    doc["status"] = status_name(result.status);
    doc["seed"] = result.seed;

    json freqs = json::array();
    for (const auto& eq : result.equations) {
        freqs.push_back(json{{"freq_index", eq.freq_index},
                             {"rank", eq.rank},
                             {"kernel_dim", eq.kernel_dim()},
                             {"consistency_residual", eq.residual},
                             {"consistent", eq.consistent}});
    }
    doc["frequencies"] = freqs;

    json candidates = json::array();
    for (const auto& cand : result.candidates) {
        candidates.push_back(json{{"defects", vector_json(cand.defects)},
                                  {"membership_residuals", cand.membership},
                                  {"verification_residual", cand.verification},
                                  {"free_components", cand.free_components}});
    }
    doc["candidates"] = candidates;
    return doc.dump(2) + "\n";
}

std::string cloak_report(const CloakDesign& design, int ring_radius) {
    json doc;
    doc["defects"] = vector_json(design.defects);
    doc["receiver_deviation"] = design.receiver_deviation;
    doc["interior_deviation"] = design.interior_deviation;
    json adm = json::array();
    for (const auto& a : design.admissibility)
        adm.push_back(json{{"admissible", a.admissible}, {"sigma_ratio", a.sigma_ratio}});
    doc["admissibility"] = adm;
    doc["ring_radius"] = ring_radius;
    doc["seed"] = design.seed;
    doc["t"] = vector_json(design.t_used);
    return doc.dump(2) + "\n";
}

std::string error_report(const std::string& module, const std::string& operation, const std::string& message) {
    json doc;
    doc["error"] = json{{"module", module}, {"operation", operation}, {"message", message}};
    return doc.dump(2) + "\n";
}

void write_field_grids(std::ostream& out, const std::vector<FieldGrid>& grids) {
    for (const auto& grid : grids) {
        out << "# freq " << grid.freq_index << "\n";
        for (std::size_t i = 0; i < grid.sites.size(); ++i) {
            std::string line;
            for (int c : grid.sites[i]) {
                line += std::to_string(c);
                line += ' ';
            }
            const cplx v = grid.values(static_cast<Eigen::Index>(i));
            line += sci(v.real());
            line += ' ';
            line += sci(v.imag());
            line += '\n';
            out << line;
        }
    }
}

}  // namespace latwave
