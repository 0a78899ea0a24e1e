#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <set>
#include <vector>

#include "latwave/forward.hpp"
#include "latwave/scene.hpp"

namespace testutil {

using latwave::cplx;
using latwave::DefectVector;
using latwave::Scene;
using latwave::Site;

// Raw tensor-product trapezoid quadrature of <e^{i n.k} / A(k)>, written
// independently of the library path (plain odometer loop, no caching, no
// canonicalization). Oracle for the GreenTable implementation.
inline cplx naive_green_quadrature(const Site& n, cplx omega, double slowness, int dimension, int order) {
    const double pi = std::numbers::pi;
    const double step = 2.0 * pi / order;
    std::size_t total = 1;
    for (int a = 0; a < dimension; ++a) total *= static_cast<std::size_t>(order);

    cplx sum(0.0, 0.0);
    std::vector<int> idx(dimension, 0);
    for (std::size_t flat = 0; flat < total; ++flat) {
        double csum = 0.0;
        double phase = 0.0;
        for (int a = 0; a < dimension; ++a) {
            const double k = -pi + step * idx[a];
            csum += std::cos(k);
            phase += n[a] * k;
        }
        const cplx symbol = 2.0 * dimension - omega * omega * slowness * slowness - 2.0 * csum;
        sum += std::polar(1.0, phase) / symbol;
        for (int a = dimension - 1; a >= 0; --a) {
            if (++idx[a] < order) break;
            idx[a] = 0;
        }
    }
    return sum / static_cast<double>(total);
}

// Closed-form 1D lattice Green coefficient for c = 2 - omega^2 s^2:
//   a_n = r^{|n|} / sqrt(c^2 - 4),  r = (c - sqrt(c^2 - 4)) / 2,
// branch chosen so |r| < 1. Verified against naive_green_quadrature before
// the suites rely on it.
inline cplx closed_form_green_1d(int n, cplx c) {
    cplx w = std::sqrt(c * c - 4.0);
    if (std::abs((c - w) / 2.0) > 1.0) w = -w;
    const cplx r = (c - w) / 2.0;
    return std::pow(r, std::abs(n)) / w;
}

inline Eigen::VectorXcd random_complex_vector(std::mt19937_64& rng, int n, double scale) {
    std::normal_distribution<double> gauss(0.0, scale);
    Eigen::VectorXcd v(n);
    for (int i = 0; i < n; ++i) v(i) = cplx(gauss(rng), gauss(rng));
    return v;
}

inline double rel_diff(const Eigen::VectorXcd& a, const Eigen::VectorXcd& b) {
    return (a - b).norm() / std::max(b.norm(), 1e-300);
}

// d=2 fixture with a sparse footprint and enough receivers that every
// receiver matrix has full column rank (trivial kernels).
inline Scene sparse_scene() {
    Scene s;
    s.dimension = 2;
    s.background_slowness = 1.0;
    s.frequencies = {{cplx(0.0, -1.0), 1}, {cplx(0.0, -1.3), 2}};
    s.sources = {{1, {6, 0}, cplx(1.0, 0.0)}, {2, {0, 6}, cplx(0.8, 0.3)}};
    s.defect_sites = {{0, 0}, {2, 1}, {-1, 2}};
    s.receivers = {{4, 0}, {0, 4}, {-4, 0}, {0, -4}, {4, 4}, {-4, 4}, {4, -4}, {-4, -4}};
    return s;
}

inline DefectVector sparse_defects() {
    DefectVector d(3);
    d << cplx(0.3, 0.0), cplx(-0.2, 0.0), cplx(0.15, 0.05);
    return d;
}

// Dense 3x3 footprint with few receivers: every kernel is nontrivial.
inline Scene dense_scene(int num_frequencies = 4) {
    Scene s;
    s.dimension = 2;
    s.background_slowness = 1.0;
    const std::vector<double> rates = {1.0, 1.3, 1.6, 2.0};
    const std::vector<Site> source_sites = {{6, 0}, {0, 6}, {-6, 0}, {0, -6}};
    for (int j = 0; j < num_frequencies; ++j) {
        s.frequencies.push_back({cplx(0.0, -rates[static_cast<std::size_t>(j)]), j + 1});
        s.sources.push_back({j + 1, source_sites[static_cast<std::size_t>(j)], cplx(1.0, 0.0)});
    }
    for (int x = -1; x <= 1; ++x)
        for (int y = -1; y <= 1; ++y) s.defect_sites.push_back({x, y});
    s.receivers = {{4, 0}, {0, 4}, {-4, 0}, {0, -4}, {3, 3}, {-3, -3}};
    return s;
}

inline DefectVector dense_defects() {
    DefectVector d(9);
    d << 0.25, 0.10, -0.15, 0.20, 0.30, -0.10, 0.05, 0.15, -0.20;
    return d;
}

// Monochromatic scene with a 3x3 footprint inside a full receiver ring.
inline Scene cloak_scene() {
    Scene s;
    s.dimension = 2;
    s.background_slowness = 1.0;
    s.frequencies = {{cplx(0.0, -1.0), 1}};
    s.sources = {{1, {5, 5}, cplx(1.0, 0.0)}};
    for (int x = -1; x <= 1; ++x)
        for (int y = -1; y <= 1; ++y) s.defect_sites.push_back({x, y});
    for (int x = -3; x <= 3; ++x)
        for (int y = -3; y <= 3; ++y)
            if (std::max(std::abs(x), std::abs(y)) == 3) s.receivers.push_back({x, y});
    return s;
}

// Random admissible d=2 scene for the forward/oracle equivalence studies.
// Deterministic per index; alternates between a purely decaying and a
// complex off-spectrum frequency.
inline std::pair<Scene, DefectVector> random_scene(int index) {
    std::mt19937_64 rng(1234 + static_cast<std::uint64_t>(index));
    std::uniform_int_distribution<int> coord(-2, 2);
    std::uniform_int_distribution<int> count(1, 6);

    Scene s;
    s.dimension = 2;
    s.background_slowness = 1.0;
    const cplx omega = (index % 2 == 0) ? cplx(0.0, -1.0) : cplx(3.0, -0.4);
    s.frequencies = {{omega, 1}};
    s.sources = {{1, {6, 0}, cplx(1.0, 0.0)}, {1, {0, -6}, cplx(0.5, 0.5)}};

    const int n = count(rng);
    std::set<Site> sites;
    while (static_cast<int>(sites.size()) < n) sites.insert(Site{coord(rng), coord(rng)});
    s.defect_sites.assign(sites.begin(), sites.end());
    s.receivers = {{5, 0}, {0, 5}, {-5, 0}, {0, -5}, {4, 4}, {-4, 4}, {4, -4}, {-4, -4}};

    DefectVector defects = random_complex_vector(rng, n, 0.15);
    return {s, defects};
}

}  // namespace testutil
