#pragma once

#include <Eigen/Dense>
#include <vector>

#include "latwave/scene.hpp"

namespace latwave {

// Interaction matrices and source coefficient vectors of one frequency,
// filled entrywise from Green coefficients:
//   interaction(p,q)    = a_{n_q - n_p}   (N x N, complex symmetric)
//   receiver(p,q)       = a_{n_q - r_p}   (R x N)
//   source_defect(l,m)  = a_{m - n_l}     (N x S)
//   source_receiver(p,m)= a_{m - r_p}     (R x S)
struct FrequencySystem {
    FrequencySpec spec;
    std::vector<Source> sources;  // sources of this frequency, in scene order
    Eigen::MatrixXcd interaction;
    Eigen::MatrixXcd receiver;
    Eigen::MatrixXcd source_defect;
    Eigen::MatrixXcd source_receiver;
    Eigen::VectorXcd amplitudes;  // source amplitudes F, aligned with columns above

    // g_j = sum_m F_m a_{m - n_l}: the unperturbed field at the defect sites.
    Eigen::VectorXcd defect_drive;
    // h_j = sum_m F_m a_{m - r_p}: the unperturbed field at the receivers.
    Eigen::VectorXcd incident;
};

FrequencySystem assemble_system(const Scene& scene, GreenTable& table, int freq_index);
std::vector<FrequencySystem> assemble_all(const Scene& scene, GreenTable& table);

// G_j = I - omega_j^2 A_j diag(s).
Eigen::MatrixXcd gram_matrix(const FrequencySystem& system, const DefectVector& defects);

struct Admissibility {
    bool admissible = false;
    double sigma_ratio = 0.0;  // sigma_min / sigma_max of G_j
};

Admissibility check_admissible(const Eigen::MatrixXcd& gram, double adm_tol = 1e-10);

std::vector<Admissibility> is_admissible(const std::vector<FrequencySystem>& systems, const DefectVector& defects,
                                         double adm_tol = 1e-10);

struct ForwardOptions {
    double adm_tol = 1e-10;
};

struct FrequencyField {
    int freq_index = 0;
    Admissibility admissibility;
    Eigen::VectorXcd site_amplitudes;    // U_p^j at the query sites
    Eigen::VectorXcd defect_amplitudes;  // w_j = U at the defect sites (interior system solution)
};

struct ForwardSolution {
    std::vector<FrequencyField> fields;  // ordered as scene.frequencies
};

// Solves the interior system G_j w_j = g_j per frequency and evaluates
//   U_p^j = omega_j^2 sum_l a_{n_l - p} (S w_j)_l + sum_m F_m a_{m - p}
// at every query site. Throws NotAdmissible when any G_j fails the
// rank-revealing invertibility test.
ForwardSolution solve_forward(const Scene& scene, GreenTable& table, const DefectVector& defects,
                              const std::vector<Site>& query_sites, const ForwardOptions& options = {});

// Receiver amplitudes per frequency (the forward model of a Measurement).
Measurement measure(const Scene& scene, GreenTable& table, const DefectVector& defects,
                    const ForwardOptions& options = {});

// Unperturbed field sum_m F_m a_{m - p} at the query sites.
Eigen::VectorXcd unperturbed_field(const Scene& scene, GreenTable& table, int freq_index,
                                   const std::vector<Site>& query_sites);

// Direct sparse solve of the time-harmonic lattice equation
//   (2d - omega_j^2 S_n^2) U_n - sum_{n'~n} U_{n'} = F_n
// on the box [-radius, radius]^d with zero exterior values. Independent of
// the Green-coefficient path; serves as the oracle for solve_forward.
struct OracleSolution {
    int dimension = 0;
    int radius = 0;
    std::vector<Eigen::VectorXcd> grids;  // per frequency, lexicographic over the box

    std::size_t flat_index(const Site& n) const;
    cplx value(int freq_pos, const Site& n) const;  // freq_pos is 0-based
};

OracleSolution brute_force_oracle(const Scene& scene, const DefectVector& defects, int radius);

}  // namespace latwave
