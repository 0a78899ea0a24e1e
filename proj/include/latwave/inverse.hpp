#pragma once

#include <cstdint>
#include <vector>

#include "latwave/forward.hpp"

namespace latwave {

struct InverseOptions {
    double rank_tol = 1e-10;   // singular values below rank_tol * sigma_max count as zero
    double cons_tol = 1e-8;    // data equation consistent iff residual <= cons_tol * (|b| + 1)
    double ver_tol = 1e-6;     // relative forward-verification tolerance for candidates
    double den_tol = 1e-12;    // component-ratio denominators below den_tol * scale count as zero
    double adm_tol = 1e-10;
    double step_tol = 1e-12;   // intersection stops when the defect update is below this
    int max_iter = 200;
    int multistart = 16;
    double start_scale = 0.5;  // spread of random kernel draws
    double cluster_tol = 1e-6;
    std::uint64_t seed = 1;
    int threads = 1;
    cplx free_default = cplx(0.0, 0.0);
};

// Rank-revealing solve of C_j x = b_j with b_j = u_j - (unperturbed field).
struct DataEquation {
    int freq_index = 0;
    Eigen::VectorXcd rhs;         // b_j
    Eigen::VectorXcd particular;  // x_j, minimum-norm least-squares solution
    Eigen::MatrixXcd kernel;      // column-orthonormal basis of the numerical nullspace of C_j
    int rank = 0;
    double residual = 0.0;  // |C_j x_j - b_j|
    double rank_tol_used = 0.0;
    bool consistent = false;

    int kernel_dim() const { return static_cast<int>(kernel.cols()); }
};

Eigen::VectorXcd data_rhs(const FrequencySystem& system, const Eigen::VectorXcd& measured);

DataEquation solve_data_equation(const Eigen::MatrixXcd& receiver_matrix, const Eigen::VectorXcd& rhs,
                                 double rank_tol = 1e-10, double cons_tol = 1e-8);

std::vector<DataEquation> solve_all_data_equations(const std::vector<FrequencySystem>& systems,
                                                   const Measurement& measurement, const InverseOptions& options = {});

enum class ComponentKind { Regular, Free, Pole };

// One point of the solution manifold S_j: the component-wise ratio
//   s_i = omega^{-2} (x + x_j)_i / (A_j x + A_j x_j + g_j)_i,  x = K_j t.
// Components with both entries at zero are Free (any value solves the
// equation there); a nonzero numerator over a zero denominator is a Pole and
// the point lies off the manifold.
struct ManifoldPoint {
    Eigen::VectorXcd t;
    Eigen::VectorXcd numerator;
    Eigen::VectorXcd denominator;
    DefectVector value;
    std::vector<ComponentKind> kind;

    std::vector<int> free_components() const;
};

// Throws OffManifold when any Pole component exists.
ManifoldPoint manifold_point(const DataEquation& equation, const FrequencySystem& system, const Eigen::VectorXcd& t,
                             const InverseOptions& options = {});

// min over y in span(kernel) of |(y + x_j) - omega^2 S (A_j y + A_j x_j + g_j)|;
// zero (to numerical precision) iff the defect lies on the regular part of S_j.
double membership_residual(const DefectVector& defects, const DataEquation& equation, const FrequencySystem& system);

enum class RecoveryStatus { Unique, Manifold, Inconsistent };

struct Candidate {
    DefectVector defects;
    std::vector<double> membership;  // membership_residual per frequency
    double verification = 0.0;       // relative forward-verification residual
    std::vector<int> free_components;
};

struct RecoveryResult {
    std::vector<DataEquation> equations;
    std::vector<Candidate> candidates;
    RecoveryStatus status = RecoveryStatus::Manifold;
    std::uint64_t seed = 0;
};

// Recovery from a frequency with trivial kernel: the manifold is the single
// point at t = 0. Throws NoUniqueFrequency when every kernel is nontrivial
// (or no trivial-kernel frequency is consistent).
RecoveryResult recover_unique(const Scene& scene, GreenTable& table, const Measurement& measurement,
                              const InverseOptions& options = {});

// Candidates in the intersection of all S_j via alternating per-frequency
// kernel solves and component-wise defect updates, multi-started from the
// single-frequency manifold points plus random kernel draws. Every converged
// candidate is forward-verified; throws NoCandidate when nothing verifies.
RecoveryResult intersect_manifolds(const Scene& scene, GreenTable& table, const Measurement& measurement,
                                   const InverseOptions& options = {});

// Dispatcher used by the CLI: inconsistent data equations yield status
// Inconsistent; a consistent trivial-kernel frequency yields the unique
// recovery; otherwise the manifold intersection runs (an empty intersection
// is reported as status Manifold with no candidates).
RecoveryResult recover(const Scene& scene, GreenTable& table, const Measurement& measurement,
                       const InverseOptions& options = {});

// Keeps candidates whose components are real within im_tol and inside [0, B].
std::vector<Candidate> box_filter(const std::vector<Candidate>& candidates, double bound, double im_tol = 1e-9);

// Property probe for the manifold parametrization: points closer than s_tol
// must come from kernel coordinates closer than t_tol.
bool injectivity_check(const DataEquation& equation, const FrequencySystem& system, const Eigen::VectorXcd& t1,
                       const Eigen::VectorXcd& t2, double s_tol = 1e-10, double t_tol = 1e-8);

}  // namespace latwave
