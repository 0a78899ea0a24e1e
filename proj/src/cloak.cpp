#include "latwave/cloak.hpp"

#include <cmath>
#include <random>

namespace latwave {

namespace {

bool within_box(const DefectVector& defects, double bound, double im_tol) {
    for (Eigen::Index i = 0; i < defects.size(); ++i) {
        const cplx v = defects(i);
        if (std::abs(v.imag()) > im_tol || v.real() < -im_tol || v.real() > bound + im_tol) return false;
    }
    return true;
}

bool invisible_enough(const CloakDesign& design, double cloak_tol) {
    for (double dev : design.receiver_deviation)
        if (!(dev < cloak_tol)) return false;
    return true;
}

}  // namespace

InvisibleManifold invisible_manifold(const Scene& scene, GreenTable& table, int freq_index,
                                     const CloakOptions& options) {
    InvisibleManifold manifold;
    manifold.system = assemble_system(scene, table, freq_index);
    const Eigen::VectorXcd zero_rhs = Eigen::VectorXcd::Zero(scene.receiver_count());
    manifold.equation = solve_data_equation(manifold.system.receiver, zero_rhs, options.rank_tol);
    manifold.equation.freq_index = freq_index;
    return manifold;
}

CloakDesign verify_cloak(const Scene& scene, GreenTable& table, const DefectVector& defects,
                         const CloakOptions& options) {
    const ForwardSolution solution = solve_forward(scene, table, defects, scene.receivers, {options.adm_tol});

    CloakDesign design;
    design.defects = defects;
    design.seed = options.seed;
    design.interior_deviation = 0.0;
    for (std::size_t j = 0; j < solution.fields.size(); ++j) {
        const auto& field = solution.fields[j];
        const FrequencySystem sys = assemble_system(scene, table, field.freq_index);
        design.receiver_deviation.push_back((field.site_amplitudes - sys.incident).norm());
        design.admissibility.push_back(field.admissibility);
        // sys.defect_drive is the unperturbed field at the defect sites
        const double interior = (field.defect_amplitudes - sys.defect_drive).lpNorm<Eigen::Infinity>();
        design.interior_deviation = std::max(design.interior_deviation, interior);
    }
    return design;
}

CloakDesign design_cloak(const Scene& scene, GreenTable& table, const std::vector<Eigen::VectorXcd>& t_per_freq,
                         const CloakOptions& options) {
    const int m = scene.frequency_count();
    if (m == 0) throw std::invalid_argument("design_cloak: the scene has no frequencies");

    if (m > 1) {
        // Intersection of the invisible sets: the unperturbed receiver field
        // as the target measurement makes every data equation homogeneous.
        Measurement target;
        for (const auto& fs : scene.frequencies)
            target.push_back(unperturbed_field(scene, table, fs.index, scene.receivers));
        InverseOptions inv = options.inverse;
        inv.seed = options.seed;
        inv.adm_tol = options.adm_tol;
        inv.rank_tol = options.rank_tol;
        RecoveryResult result = intersect_manifolds(scene, table, target, inv);

        for (const auto& cand : result.candidates) {
            if (cand.defects.norm() <= options.nontrivial_tol) continue;
            if (options.box_bound && !within_box(cand.defects, *options.box_bound, options.im_tol)) continue;
            CloakDesign design = verify_cloak(scene, table, cand.defects, options);
            if (!invisible_enough(design, options.cloak_tol)) continue;
            return design;
        }
        throw NoCandidate("the invisible sets intersect only in the trivial design");
    }

    const InvisibleManifold manifold = invisible_manifold(scene, table, scene.frequencies.front().index, options);
    const int kernel_dim = manifold.equation.kernel_dim();

    const bool explicit_t = !t_per_freq.empty();
    if (explicit_t && t_per_freq.size() != 1)
        throw std::invalid_argument("design_cloak: expected one kernel coordinate vector for one frequency");

    if (kernel_dim == 0) {
        if (explicit_t && t_per_freq.front().size() != 0)
            throw std::invalid_argument("design_cloak: the kernel is trivial; only the zero design is invisible");
        return verify_cloak(scene, table, DefectVector::Zero(scene.defect_count()), options);
    }

    std::mt19937_64 rng(options.seed);
    std::normal_distribution<double> gauss(0.0, options.t_scale);
    const int draws = explicit_t ? 1 : std::max(options.max_draws, 1);
    std::string last_failure = "no draw produced an admissible design";
    for (int attempt = 0; attempt < draws; ++attempt) {
        Eigen::VectorXcd t;
        if (explicit_t) {
            t = t_per_freq.front();
        } else {
            t.resize(kernel_dim);
            for (int i = 0; i < kernel_dim; ++i) t(i) = cplx(gauss(rng), gauss(rng));
        }
        try {
            const ManifoldPoint point = manifold_point(manifold.equation, manifold.system, t);
            if (!explicit_t && options.box_bound && !within_box(point.value, *options.box_bound, options.im_tol)) {
                last_failure = "all draws rejected by the box constraint";
                continue;
            }
            CloakDesign design = verify_cloak(scene, table, point.value, options);
            if (!invisible_enough(design, options.cloak_tol)) {
                if (explicit_t)
                    throw Error("cloak", "design_cloak", "design fails the invisibility tolerance");
                last_failure = "a draw failed the invisibility tolerance";
                continue;
            }
            design.t_used = t;
            return design;
        } catch (const OffManifold&) {
            if (explicit_t) throw;
            last_failure = "all draws hit pole components";
        } catch (const NotAdmissible&) {
            if (explicit_t) throw;
            last_failure = "all draws landed outside the admissible set";
        }
    }
    throw Error("cloak", "design_cloak", last_failure);
}

}  // namespace latwave
