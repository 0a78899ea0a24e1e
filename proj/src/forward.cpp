#include "latwave/forward.hpp"

#include <Eigen/SVD>
#include <Eigen/Sparse>
#include <map>

namespace latwave {

FrequencySystem assemble_system(const Scene& scene, GreenTable& table, int freq_index) {
    FrequencySystem sys;
    sys.spec = table.frequency(freq_index);
    sys.sources = scene.sources_for(freq_index);

    const auto& sites = scene.defect_sites;
    const auto& receivers = scene.receivers;
    const Eigen::Index n = scene.defect_count();
    const Eigen::Index r = scene.receiver_count();
    const Eigen::Index s = static_cast<Eigen::Index>(sys.sources.size());

    sys.interaction = table.block(freq_index, sites, sites);
    sys.receiver = table.block(freq_index, receivers, sites);

    sys.source_defect.resize(n, s);
    sys.source_receiver.resize(r, s);
    sys.amplitudes.resize(s);
    for (Eigen::Index m = 0; m < s; ++m) {
        sys.source_defect.col(m) = table.vector_block(freq_index, sys.sources[m].site, sites);
        sys.source_receiver.col(m) = table.vector_block(freq_index, sys.sources[m].site, receivers);
        sys.amplitudes(m) = sys.sources[m].amplitude;
    }
    sys.defect_drive = sys.source_defect * sys.amplitudes;
    sys.incident = sys.source_receiver * sys.amplitudes;
    return sys;
}

std::vector<FrequencySystem> assemble_all(const Scene& scene, GreenTable& table) {
    std::vector<FrequencySystem> out;
    out.reserve(scene.frequencies.size());
    for (const auto& fs : scene.frequencies) out.push_back(assemble_system(scene, table, fs.index));
    return out;
}

Eigen::MatrixXcd gram_matrix(const FrequencySystem& system, const DefectVector& defects) {
    if (defects.size() != system.interaction.rows())
        throw std::invalid_argument("gram_matrix: defect vector length does not match the footprint");
    const Eigen::Index n = defects.size();
    return Eigen::MatrixXcd::Identity(n, n) -
           system.spec.omega2() * (system.interaction * defects.asDiagonal());
}

Admissibility check_admissible(const Eigen::MatrixXcd& gram, double adm_tol) {
    if (gram.rows() == 0) return {true, 1.0};
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(gram);
    const auto& sv = svd.singularValues();
    const double largest = sv(0);
    const double smallest = sv(sv.size() - 1);
    if (largest == 0.0) return {false, 0.0};
    const double ratio = smallest / largest;
    return {ratio > adm_tol, ratio};
}

std::vector<Admissibility> is_admissible(const std::vector<FrequencySystem>& systems, const DefectVector& defects,
                                         double adm_tol) {
    std::vector<Admissibility> out;
    out.reserve(systems.size());
    for (const auto& sys : systems) out.push_back(check_admissible(gram_matrix(sys, defects), adm_tol));
    return out;
}

ForwardSolution solve_forward(const Scene& scene, GreenTable& table, const DefectVector& defects,
                              const std::vector<Site>& query_sites, const ForwardOptions& options) {
    if (defects.size() != scene.defect_count())
        throw std::invalid_argument("solve_forward: defect vector length does not match the footprint");

    ForwardSolution solution;
    for (const auto& fs : scene.frequencies) {
        FrequencySystem sys = assemble_system(scene, table, fs.index);
        const Eigen::MatrixXcd gram = gram_matrix(sys, defects);
        const Admissibility adm = check_admissible(gram, options.adm_tol);
        if (!adm.admissible) throw NotAdmissible(fs.index, adm.sigma_ratio);

        // Interior amplitudes at the defect sites: G_j w = g_j.
        Eigen::VectorXcd w;
        if (gram.rows() > 0)
            w = gram.partialPivLu().solve(sys.defect_drive);
        else
            w = Eigen::VectorXcd();

        const Eigen::VectorXcd scattered_weights = sys.spec.omega2() * defects.asDiagonal() * w;

        FrequencyField field;
        field.freq_index = fs.index;
        field.admissibility = adm;
        field.defect_amplitudes = w;
        field.site_amplitudes.resize(static_cast<Eigen::Index>(query_sites.size()));
        for (std::size_t p = 0; p < query_sites.size(); ++p) {
            cplx value(0.0, 0.0);
            const Eigen::VectorXcd greens = table.vector_block(fs.index, query_sites[p], scene.defect_sites);
            // vector_block gives a_{p - n_l}; a_n = a_{-n}, so this is a_{n_l - p}.
            for (Eigen::Index l = 0; l < greens.size(); ++l) value += greens(l) * scattered_weights(l);
            for (const auto& src : sys.sources)
                value += src.amplitude * table.coeff(fs.index, diff(src.site, query_sites[p]));
            field.site_amplitudes(static_cast<Eigen::Index>(p)) = value;
        }
        solution.fields.push_back(std::move(field));
    }
    return solution;
}

Measurement measure(const Scene& scene, GreenTable& table, const DefectVector& defects,
                    const ForwardOptions& options) {
    const ForwardSolution solution = solve_forward(scene, table, defects, scene.receivers, options);
    Measurement out;
    out.reserve(solution.fields.size());
    for (const auto& field : solution.fields) out.push_back(field.site_amplitudes);
    return out;
}

Eigen::VectorXcd unperturbed_field(const Scene& scene, GreenTable& table, int freq_index,
                                   const std::vector<Site>& query_sites) {
    Eigen::VectorXcd out = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(query_sites.size()));
    for (const auto& src : scene.sources_for(freq_index)) {
        const Eigen::VectorXcd greens = table.vector_block(freq_index, src.site, query_sites);
        out += src.amplitude * greens;
    }
    return out;
}

std::size_t OracleSolution::flat_index(const Site& n) const {
    const std::size_t width = 2 * static_cast<std::size_t>(radius) + 1;
    std::size_t idx = 0;
    for (int a = 0; a < dimension; ++a) {
        if (std::abs(n[a]) > radius) throw std::out_of_range("OracleSolution: site outside the box");
        idx = idx * width + static_cast<std::size_t>(n[a] + radius);
    }
    return idx;
}

cplx OracleSolution::value(int freq_pos, const Site& n) const {
    return grids.at(static_cast<std::size_t>(freq_pos))(static_cast<Eigen::Index>(flat_index(n)));
}

OracleSolution brute_force_oracle(const Scene& scene, const DefectVector& defects, int radius) {
    const int d = scene.dimension;
    if (radius < 1) throw std::invalid_argument("brute_force_oracle: radius must be >= 1");
    if (defects.size() != scene.defect_count())
        throw std::invalid_argument("brute_force_oracle: defect vector length does not match the footprint");

    auto inside = [&](const Site& s) {
        for (int c : s)
            if (std::abs(c) > radius - 1) return false;
        return true;
    };
    for (const auto& s : scene.defect_sites)
        if (!inside(s)) throw std::invalid_argument("brute_force_oracle: defect site too close to the box boundary");
    for (const auto& s : scene.sources)
        if (!inside(s.site)) throw std::invalid_argument("brute_force_oracle: source too close to the box boundary");
    for (const auto& s : scene.receivers)
        if (!inside(s)) throw std::invalid_argument("brute_force_oracle: receiver too close to the box boundary");

    const std::size_t width = 2 * static_cast<std::size_t>(radius) + 1;
    std::size_t total = 1;
    for (int a = 0; a < d; ++a) total *= width;

    OracleSolution out;
    out.dimension = d;
    out.radius = radius;

    // Defect perturbations by flat index.
    std::map<std::size_t, cplx> defect_at;
    for (int l = 0; l < scene.defect_count(); ++l) {
        std::size_t idx = 0;
        for (int a = 0; a < d; ++a) idx = idx * width + static_cast<std::size_t>(scene.defect_sites[l][a] + radius);
        defect_at[idx] = defects(l);
    }

    const double s2 = scene.background_slowness * scene.background_slowness;
    std::vector<std::size_t> stride(d, 1);
    for (int a = d - 2; a >= 0; --a) stride[a] = stride[a + 1] * width;

    for (const auto& fs : scene.frequencies) {
        const cplx w2 = fs.omega2();

        std::vector<Eigen::Triplet<cplx>> triplets;
        triplets.reserve(total * (2 * d + 1));
        Site idx(d, -radius);
        for (std::size_t flat = 0; flat < total; ++flat) {
            cplx slowness_sq = s2;
            auto it = defect_at.find(flat);
            if (it != defect_at.end()) slowness_sq += it->second;
            triplets.emplace_back(static_cast<int>(flat), static_cast<int>(flat), 2.0 * d - w2 * slowness_sq);
            for (int a = 0; a < d; ++a) {
                if (idx[a] > -radius)
                    triplets.emplace_back(static_cast<int>(flat), static_cast<int>(flat - stride[a]), cplx(-1.0, 0.0));
                if (idx[a] < radius)
                    triplets.emplace_back(static_cast<int>(flat), static_cast<int>(flat + stride[a]), cplx(-1.0, 0.0));
            }
            for (int a = d - 1; a >= 0; --a) {
                if (++idx[a] <= radius) break;
                idx[a] = -radius;
            }
        }

        Eigen::SparseMatrix<cplx> matrix(static_cast<int>(total), static_cast<int>(total));
        matrix.setFromTriplets(triplets.begin(), triplets.end());

        Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(total));
        for (const auto& src : scene.sources_for(fs.index)) {
            std::size_t flat = 0;
            for (int a = 0; a < d; ++a) flat = flat * width + static_cast<std::size_t>(src.site[a] + radius);
            rhs(static_cast<Eigen::Index>(flat)) += src.amplitude;
        }

        Eigen::SparseLU<Eigen::SparseMatrix<cplx>> solver;
        solver.compute(matrix);
        if (solver.info() != Eigen::Success) throw SingularTruncation(fs.index);
        Eigen::VectorXcd grid = solver.solve(rhs);
        if (solver.info() != Eigen::Success) throw SingularTruncation(fs.index);
        out.grids.push_back(std::move(grid));
    }
    return out;
}

}  // namespace latwave
