#include "latwave/inverse.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "latwave/parallel.hpp"

namespace latwave {

namespace {

// Relative distance between predicted and measured receiver amplitudes,
// pooled over frequencies.
double verification_residual(const Measurement& predicted, const Measurement& measured) {
    double diff_sq = 0.0;
    double norm_sq = 0.0;
    for (std::size_t j = 0; j < measured.size(); ++j) {
        diff_sq += (predicted[j] - measured[j]).squaredNorm();
        norm_sq += measured[j].squaredNorm();
    }
    return std::sqrt(diff_sq) / std::max(std::sqrt(norm_sq), 1e-12);
}

struct Workspace {
    std::vector<FrequencySystem> systems;
    std::vector<DataEquation> equations;
};

Workspace build_workspace(const Scene& scene, GreenTable& table, const Measurement& measurement,
                          const InverseOptions& options) {
    Workspace ws;
    ws.systems = assemble_all(scene, table);
    ws.equations = solve_all_data_equations(ws.systems, measurement, options);
    return ws;
}

// Inner linear problem of the membership residual: for fixed defects,
// minimize |B t + q| over kernel coordinates t, where
//   B = (I - omega^2 S A_j) K_j,   q = x_j - omega^2 S (A_j x_j + g_j).
struct KernelFit {
    Eigen::VectorXcd t;
    double residual = 0.0;
};

KernelFit fit_kernel_coordinates(const DefectVector& defects, const DataEquation& eq, const FrequencySystem& sys) {
    const cplx w2 = sys.spec.omega2();
    const Eigen::VectorXcd scaled = w2 * (defects.asDiagonal() * (sys.interaction * eq.particular + sys.defect_drive));
    const Eigen::VectorXcd q = eq.particular - scaled;
    KernelFit fit;
    if (eq.kernel_dim() == 0) {
        fit.t = Eigen::VectorXcd();
        fit.residual = q.norm();
        return fit;
    }
    const Eigen::MatrixXcd b =
        eq.kernel - w2 * (defects.asDiagonal() * (sys.interaction * eq.kernel));
    fit.t = b.completeOrthogonalDecomposition().solve(-q);
    fit.residual = (b * fit.t + q).norm();
    return fit;
}

Candidate make_candidate(const DefectVector& defects, const Workspace& ws, std::vector<int> free_components,
                         double verification) {
    Candidate cand;
    cand.defects = defects;
    cand.membership.reserve(ws.equations.size());
    for (std::size_t j = 0; j < ws.equations.size(); ++j)
        cand.membership.push_back(membership_residual(defects, ws.equations[j], ws.systems[j]));
    cand.verification = verification;
    cand.free_components = std::move(free_components);
    return cand;
}

struct RefinedStart {
    DefectVector defects;
    std::vector<Eigen::VectorXcd> numerators;
    std::vector<Eigen::VectorXcd> denominators;
};

// One multi-start trajectory: alternating sweeps (a)/(b) for the coarse
// phase, then a damped joint Gauss-Newton over (s, {t_j}) on the stacked
// residuals r_j = omega_j^{-2} num_j - S den_j. The alternation alone is
// monotone but its linear tail stalls well above the verification tolerance;
// the joint step is quadratic once inside the basin. Both phases share the
// options.max_iter budget.
RefinedStart refine_start(const Workspace& ws, DefectVector s, const InverseOptions& options) {
    const std::size_t m = ws.systems.size();
    const Eigen::Index n = s.size();

    RefinedStart out;
    out.numerators.resize(m);
    out.denominators.resize(m);
    std::vector<Eigen::VectorXcd> ts(m);

    auto sweep_fits = [&](const DefectVector& sv) {
        for (std::size_t j = 0; j < m; ++j) {
            const KernelFit fit = fit_kernel_coordinates(sv, ws.equations[j], ws.systems[j]);
            ts[j] = fit.t;
            out.numerators[j] = ws.equations[j].particular;
            if (fit.t.size() > 0) out.numerators[j] += ws.equations[j].kernel * fit.t;
            out.denominators[j] = ws.systems[j].interaction * out.numerators[j] + ws.systems[j].defect_drive;
        }
    };

    int iter = 0;
    bool converged = false;
    for (; iter < options.max_iter; ++iter) {
        sweep_fits(s);
        DefectVector s_next(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            cplx acc(0.0, 0.0);
            double weight = 0.0;
            for (std::size_t j = 0; j < m; ++j) {
                const cplx den = out.denominators[j](i);
                acc += out.numerators[j](i) * std::conj(den) / ws.systems[j].spec.omega2();
                weight += std::norm(den);
            }
            s_next(i) = weight > 0.0 ? acc / weight : s(i);
        }
        const double step = (s_next - s).norm();
        s = std::move(s_next);
        if (step < options.step_tol) {
            converged = true;
            ++iter;
            break;
        }
        if (step < 1e-6 || iter >= 50) {
            ++iter;
            break;
        }
    }

    if (!converged) {
        Eigen::Index total_k = 0;
        for (std::size_t j = 0; j < m; ++j) total_k += ts[j].size();
        const Eigen::Index rows = static_cast<Eigen::Index>(m) * n;

        auto residual = [&](const DefectVector& sv, const std::vector<Eigen::VectorXcd>& tv) {
            Eigen::VectorXcd f(rows);
            for (std::size_t j = 0; j < m; ++j) {
                Eigen::VectorXcd num = ws.equations[j].particular;
                if (tv[j].size() > 0) num += ws.equations[j].kernel * tv[j];
                const Eigen::VectorXcd den = ws.systems[j].interaction * num + ws.systems[j].defect_drive;
                f.segment(static_cast<Eigen::Index>(j) * n, n) =
                    num / ws.systems[j].spec.omega2() - sv.asDiagonal() * den;
            }
            return f;
        };

        Eigen::VectorXcd f = residual(s, ts);
        for (; iter < options.max_iter; ++iter) {
            Eigen::MatrixXcd jac = Eigen::MatrixXcd::Zero(rows, n + total_k);
            Eigen::Index col = n;
            for (std::size_t j = 0; j < m; ++j) {
                Eigen::VectorXcd num = ws.equations[j].particular;
                if (ts[j].size() > 0) num += ws.equations[j].kernel * ts[j];
                const Eigen::VectorXcd den = ws.systems[j].interaction * num + ws.systems[j].defect_drive;
                const Eigen::Index row0 = static_cast<Eigen::Index>(j) * n;
                for (Eigen::Index i = 0; i < n; ++i) jac(row0 + i, i) = -den(i);
                const Eigen::Index k = ts[j].size();
                if (k > 0) {
                    jac.block(row0, col, n, k) =
                        ws.equations[j].kernel / ws.systems[j].spec.omega2() -
                        s.asDiagonal() * (ws.systems[j].interaction * ws.equations[j].kernel);
                    col += k;
                }
            }
            const Eigen::VectorXcd delta = jac.completeOrthogonalDecomposition().solve(-f);

            double alpha = 1.0;
            bool accepted = false;
            double s_step = 0.0;
            for (int halving = 0; halving < 12; ++halving, alpha *= 0.5) {
                DefectVector s_try = s + alpha * delta.head(n);
                std::vector<Eigen::VectorXcd> ts_try = ts;
                Eigen::Index offset = n;
                for (std::size_t j = 0; j < m; ++j) {
                    const Eigen::Index k = ts[j].size();
                    if (k > 0) {
                        ts_try[j] = ts[j] + alpha * delta.segment(offset, k);
                        offset += k;
                    }
                }
                const Eigen::VectorXcd f_try = residual(s_try, ts_try);
                if (f_try.norm() < f.norm()) {
                    s_step = (s_try - s).norm();
                    s = std::move(s_try);
                    ts = std::move(ts_try);
                    f = f_try;
                    accepted = true;
                    break;
                }
            }
            if (!accepted || s_step < options.step_tol) break;
        }
    }

    sweep_fits(s);
    out.defects = std::move(s);
    return out;
}

}  // namespace

Eigen::VectorXcd data_rhs(const FrequencySystem& system, const Eigen::VectorXcd& measured) {
    if (measured.size() != system.incident.size())
        throw std::invalid_argument("data_rhs: measurement length does not match the receiver count");
    return measured - system.incident;
}

DataEquation solve_data_equation(const Eigen::MatrixXcd& receiver_matrix, const Eigen::VectorXcd& rhs,
                                 double rank_tol, double cons_tol) {
    const Eigen::Index n = receiver_matrix.cols();
    DataEquation eq;
    eq.rhs = rhs;
    eq.rank_tol_used = rank_tol;

    if (receiver_matrix.rows() == 0 || n == 0) {
        eq.rank = 0;
        eq.particular = Eigen::VectorXcd::Zero(n);
        eq.kernel = Eigen::MatrixXcd::Identity(n, n);
        eq.residual = rhs.norm();
        eq.consistent = eq.residual <= cons_tol * (rhs.norm() + 1.0);
        return eq;
    }

    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(receiver_matrix, Eigen::ComputeThinU | Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    const double sigma_max = sv.size() > 0 ? sv(0) : 0.0;
    Eigen::Index rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv(i) > rank_tol * sigma_max && sv(i) > 0.0) ++rank;

    eq.rank = static_cast<int>(rank);
    if (rank > 0) {
        const Eigen::VectorXcd projected = svd.matrixU().leftCols(rank).adjoint() * rhs;
        eq.particular =
            svd.matrixV().leftCols(rank) * (projected.array() / sv.head(rank).array().cast<cplx>()).matrix();
    } else {
        eq.particular = Eigen::VectorXcd::Zero(n);
    }
    eq.kernel = svd.matrixV().rightCols(n - rank);
    eq.residual = (receiver_matrix * eq.particular - rhs).norm();
    eq.consistent = eq.residual <= cons_tol * (rhs.norm() + 1.0);
    return eq;
}

std::vector<DataEquation> solve_all_data_equations(const std::vector<FrequencySystem>& systems,
                                                   const Measurement& measurement, const InverseOptions& options) {
    if (measurement.size() != systems.size())
        throw std::invalid_argument("solve_all_data_equations: one measurement vector per frequency required");
    std::vector<DataEquation> out;
    out.reserve(systems.size());
    for (std::size_t j = 0; j < systems.size(); ++j) {
        DataEquation eq = solve_data_equation(systems[j].receiver, data_rhs(systems[j], measurement[j]),
                                              options.rank_tol, options.cons_tol);
        eq.freq_index = systems[j].spec.index;
        out.push_back(std::move(eq));
    }
    return out;
}

std::vector<int> ManifoldPoint::free_components() const {
    std::vector<int> out;
    for (std::size_t i = 0; i < kind.size(); ++i)
        if (kind[i] == ComponentKind::Free) out.push_back(static_cast<int>(i));
    return out;
}

ManifoldPoint manifold_point(const DataEquation& equation, const FrequencySystem& system, const Eigen::VectorXcd& t,
                             const InverseOptions& options) {
    if (t.size() != equation.kernel_dim())
        throw std::invalid_argument("manifold_point: kernel coordinate length does not match the kernel dimension");
    const Eigen::Index n = equation.particular.size();

    ManifoldPoint point;
    point.t = t;
    point.numerator = equation.particular;
    if (t.size() > 0) point.numerator += equation.kernel * t;
    point.denominator = system.interaction * point.numerator + system.defect_drive;

    const double scale = std::max(point.numerator.lpNorm<Eigen::Infinity>(),
                                  point.denominator.lpNorm<Eigen::Infinity>());
    const double threshold = options.den_tol * scale;
    const cplx inv_w2 = 1.0 / system.spec.omega2();

    point.value.resize(n);
    point.kind.resize(n);
    std::vector<int> poles;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (std::abs(point.denominator(i)) > threshold) {
            point.kind[i] = ComponentKind::Regular;
            point.value(i) = inv_w2 * point.numerator(i) / point.denominator(i);
        } else if (std::abs(point.numerator(i)) <= threshold) {
            point.kind[i] = ComponentKind::Free;
            point.value(i) = options.free_default;
        } else {
            point.kind[i] = ComponentKind::Pole;
            point.value(i) = std::numeric_limits<double>::quiet_NaN();
            poles.push_back(static_cast<int>(i));
        }
    }
    if (!poles.empty()) throw OffManifold(std::move(poles));
    return point;
}

double membership_residual(const DefectVector& defects, const DataEquation& equation, const FrequencySystem& system) {
    return fit_kernel_coordinates(defects, equation, system).residual;
}

RecoveryResult recover_unique(const Scene& scene, GreenTable& table, const Measurement& measurement,
                              const InverseOptions& options) {
    Workspace ws = build_workspace(scene, table, measurement, options);

    int chosen = -1;
    for (std::size_t j = 0; j < ws.equations.size(); ++j) {
        if (ws.equations[j].consistent && ws.equations[j].kernel_dim() == 0) {
            chosen = static_cast<int>(j);
            break;
        }
    }
    if (chosen < 0) throw NoUniqueFrequency();

    const ManifoldPoint point =
        manifold_point(ws.equations[chosen], ws.systems[chosen], Eigen::VectorXcd(), options);

    double verification = std::numeric_limits<double>::infinity();
    try {
        verification =
            verification_residual(measure(scene, table, point.value, {options.adm_tol}), measurement);
    } catch (const NotAdmissible&) {
        // leave verification at infinity; the candidate is still reported
    }

    RecoveryResult result;
    result.candidates.push_back(make_candidate(point.value, ws, point.free_components(), verification));
    result.equations = std::move(ws.equations);
    result.status = RecoveryStatus::Unique;
    result.seed = options.seed;
    return result;
}

RecoveryResult intersect_manifolds(const Scene& scene, GreenTable& table, const Measurement& measurement,
                                   const InverseOptions& options) {
    Workspace ws = build_workspace(scene, table, measurement, options);
    const std::size_t m = ws.systems.size();
    const Eigen::Index n = scene.defect_count();

    for (const auto& eq : ws.equations)
        if (!eq.consistent)
            throw NoCandidate("data equation inconsistent at frequency " + std::to_string(eq.freq_index) +
                              ": no defect on this footprint reproduces the measurements");

    // Multi-start pool: the t = 0 manifold point of every frequency, then
    // random kernel draws cycling over the frequencies.
    std::vector<DefectVector> starts;
    for (std::size_t j = 0; j < m; ++j) {
        try {
            starts.push_back(
                manifold_point(ws.equations[j], ws.systems[j],
                               Eigen::VectorXcd::Zero(ws.equations[j].kernel_dim()), options)
                    .value);
        } catch (const OffManifold&) {
        }
    }
    std::mt19937_64 rng(options.seed);
    std::normal_distribution<double> gauss(0.0, options.start_scale);
    const int want = std::max(options.multistart, static_cast<int>(starts.size()));
    bool any_kernel = false;
    for (const auto& eq : ws.equations) any_kernel |= eq.kernel_dim() > 0;
    for (int attempt = 0; any_kernel && static_cast<int>(starts.size()) < want && attempt < 64 * want; ++attempt) {
        const std::size_t j = static_cast<std::size_t>(attempt) % m;
        const int k = ws.equations[j].kernel_dim();
        if (k == 0) continue;
        Eigen::VectorXcd t(k);
        for (int i = 0; i < k; ++i) t(i) = cplx(gauss(rng), gauss(rng));
        try {
            starts.push_back(manifold_point(ws.equations[j], ws.systems[j], t, options).value);
        } catch (const OffManifold&) {
        }
    }
    if (starts.empty()) throw NoCandidate("no usable start point (all single-frequency points are off-manifold)");

    struct StartOutcome {
        bool kept = false;
        DefectVector defects;
        std::vector<int> free_components;
        double verification = 0.0;
    };
    std::vector<StartOutcome> outcomes(starts.size());

    parallel_for(starts.size(), options.threads, [&](std::size_t start_idx) {
        RefinedStart refined = refine_start(ws, starts[start_idx], options);

        double verification = 0.0;
        try {
            verification =
                verification_residual(measure(scene, table, refined.defects, {options.adm_tol}), measurement);
        } catch (const NotAdmissible&) {
            return;
        }
        if (!(verification < options.ver_tol)) return;

        std::vector<int> free_components;
        for (Eigen::Index i = 0; i < n; ++i) {
            bool free = true;
            for (std::size_t j = 0; j < m && free; ++j) {
                const double scale = refined.denominators[j].lpNorm<Eigen::Infinity>();
                free = std::abs(refined.denominators[j](i)) <= options.den_tol * scale;
            }
            if (free) free_components.push_back(static_cast<int>(i));
        }
        outcomes[start_idx] = {true, std::move(refined.defects), std::move(free_components), verification};
    });

    // Cluster the survivors; the representative is the best-verified member.
    std::vector<Candidate> clusters;
    for (const auto& outcome : outcomes) {
        if (!outcome.kept) continue;
        bool merged = false;
        for (auto& rep : clusters) {
            if ((rep.defects - outcome.defects).norm() < options.cluster_tol) {
                if (outcome.verification < rep.verification)
                    rep = make_candidate(outcome.defects, ws, outcome.free_components, outcome.verification);
                merged = true;
                break;
            }
        }
        if (!merged)
            clusters.push_back(make_candidate(outcome.defects, ws, outcome.free_components, outcome.verification));
    }
    if (clusters.empty())
        throw NoCandidate("no start converged below the verification tolerance");

    RecoveryResult result;
    result.candidates = std::move(clusters);
    result.status = result.candidates.size() == 1 ? RecoveryStatus::Unique : RecoveryStatus::Manifold;
    result.equations = std::move(ws.equations);
    result.seed = options.seed;
    return result;
}

RecoveryResult recover(const Scene& scene, GreenTable& table, const Measurement& measurement,
                       const InverseOptions& options) {
    {
        Workspace ws = build_workspace(scene, table, measurement, options);
        bool consistent = true;
        bool trivial = false;
        for (const auto& eq : ws.equations) {
            consistent &= eq.consistent;
            trivial |= eq.consistent && eq.kernel_dim() == 0;
        }
        if (!consistent) {
            RecoveryResult result;
            result.equations = std::move(ws.equations);
            result.status = RecoveryStatus::Inconsistent;
            result.seed = options.seed;
            return result;
        }
        if (trivial) {
            try {
                return recover_unique(scene, table, measurement, options);
            } catch (const OffManifold&) {
                // fall through to the intersection
            }
        }
    }
    try {
        return intersect_manifolds(scene, table, measurement, options);
    } catch (const NoCandidate&) {
        Workspace ws = build_workspace(scene, table, measurement, options);
        RecoveryResult result;
        result.equations = std::move(ws.equations);
        result.status = RecoveryStatus::Manifold;
        result.seed = options.seed;
        return result;
    }
}

std::vector<Candidate> box_filter(const std::vector<Candidate>& candidates, double bound, double im_tol) {
    if (!(bound > 0.0)) throw std::invalid_argument("box_filter: bound must be positive");
    std::vector<Candidate> out;
    for (const auto& cand : candidates) {
        bool keep = true;
        for (Eigen::Index i = 0; i < cand.defects.size() && keep; ++i) {
            const cplx v = cand.defects(i);
            keep = std::abs(v.imag()) <= im_tol && v.real() >= -im_tol && v.real() <= bound + im_tol;
        }
        if (keep) out.push_back(cand);
    }
    return out;
}

bool injectivity_check(const DataEquation& equation, const FrequencySystem& system, const Eigen::VectorXcd& t1,
                       const Eigen::VectorXcd& t2, double s_tol, double t_tol) {
    const ManifoldPoint p1 = manifold_point(equation, system, t1);
    const ManifoldPoint p2 = manifold_point(equation, system, t2);
    const double ds = (p1.value - p2.value).norm();
    const double dt = (t1 - t2).norm();
    return ds >= s_tol || dt < t_tol;
}

}  // namespace latwave
