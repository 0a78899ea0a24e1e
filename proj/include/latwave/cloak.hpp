#pragma once

#include <optional>

#include "latwave/inverse.hpp"

namespace latwave {

struct CloakOptions {
    double cloak_tol = 1e-8;       // receiver deviation bound (2-norm per frequency)
    double adm_tol = 1e-10;
    double rank_tol = 1e-10;
    std::uint64_t seed = 1;
    double t_scale = 0.5;          // spread of random kernel draws
    int max_draws = 64;            // rejection budget for constraints / admissibility
    std::optional<double> box_bound;  // keep designs real in [0, B] when set
    double im_tol = 1e-9;
    double nontrivial_tol = 1e-8;  // designs with |s| below this count as the trivial cloak
    InverseOptions inverse;        // multi-frequency intersection settings
};

// The invisible set S_j^0 of one frequency: the data equation with zero
// right-hand side (x_j = 0), so the manifold is parametrized purely over
// ker C_j.
struct InvisibleManifold {
    FrequencySystem system;
    DataEquation equation;
};

InvisibleManifold invisible_manifold(const Scene& scene, GreenTable& table, int freq_index,
                                     const CloakOptions& options = {});

struct CloakDesign {
    DefectVector defects;
    std::vector<double> receiver_deviation;  // |u(design) - u(unperturbed)| per frequency
    double interior_deviation = 0.0;         // max over defect sites of |U(design) - U(unperturbed)|
    std::vector<Admissibility> admissibility;
    Eigen::VectorXcd t_used;  // kernel coordinates of the design (single-frequency case)
    std::uint64_t seed = 0;
};

// Forward-verifies a defect vector as a cloak for the scene's receivers.
CloakDesign verify_cloak(const Scene& scene, GreenTable& table, const DefectVector& defects,
                         const CloakOptions& options = {});

// Synthesizes an invisible defect. For M = 1 the construction is explicit:
// a point of S_1^0 at the given kernel coordinates (drawn from the seed when
// t_per_freq is empty), with rejection re-draws under box/reality constraints
// or inadmissibility. For M > 1 the operation intersects the S_j^0 and throws
// NoCandidate when only the trivial design remains.
CloakDesign design_cloak(const Scene& scene, GreenTable& table,
                         const std::vector<Eigen::VectorXcd>& t_per_freq = {}, const CloakOptions& options = {});

}  // namespace latwave
