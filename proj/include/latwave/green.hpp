#pragma once

#include <Eigen/Dense>
#include <complex>
#include <iosfwd>
#include <map>
#include <mutex>
#include <utility>
#include <vector>

#include "latwave/errors.hpp"

namespace latwave {

using cplx = std::complex<double>;

// Lattice site / offset in Z^d.
using Site = std::vector<int>;

// to - from, componentwise.
Site diff(const Site& to, const Site& from);

// Componentwise absolute value. a_n is invariant under flipping the sign of
// any component of n, so this is the cache key.
Site canonical_offset(const Site& n);

bool is_zero_offset(const Site& n);

struct FrequencySpec {
    cplx omega;     // angular frequency, possibly alpha - i*beta
    int index = 1;  // 1-based position in the scene's frequency list

    cplx omega2() const { return omega * omega; }
};

// Dispersion symbol A_j(k) = 2d - (omega*s)^2 - 2 sum_i cos k_i on [-pi,pi]^d.
cplx symbol(const std::vector<double>& k, cplx omega, double slowness, int dimension);

// True iff omega^2 s^2 lies on the real interval [0, 4d], i.e. the symbol
// vanishes somewhere on the zone.
bool in_passband(cplx omega, double slowness, int dimension);

struct GreenParams {
    int order = 0;                  // quadrature points per axis; 0 = 256 for d<=2, 64 for d>=3
    double singular_floor = 1e-6;   // reject evaluation when min |A_j| on the grid is below this
    int threads = 1;                // cap for batched evaluation
};

int default_quadrature_order(int dimension);

// Cached lattice Green coefficients a_n^j = <e^{i n.k} / A_j(k)> evaluated by
// the tensor-product periodic trapezoid rule. Evaluations for distinct
// offsets are independent; the cache accepts concurrent idempotent inserts.
class GreenTable {
  public:
    GreenTable(int dimension, double slowness, std::vector<FrequencySpec> frequencies, GreenParams params = {});

    int dimension() const noexcept { return dimension_; }
    double slowness() const noexcept { return slowness_; }
    int order() const noexcept { return params_.order; }
    const GreenParams& params() const noexcept { return params_; }
    const std::vector<FrequencySpec>& frequencies() const noexcept { return frequencies_; }
    const FrequencySpec& frequency(int freq_index) const;

    // a_n^j; computes and caches under the canonical key on first use.
    cplx coeff(int freq_index, const Site& n);

    // Warms the cache for a batch of offsets, split across params().threads.
    void prefetch(int freq_index, const std::vector<Site>& offsets);

    // Matrix with entry (p,q) = a_{cols[q] - rows[p]}^j.
    Eigen::MatrixXcd block(int freq_index, const std::vector<Site>& rows, const std::vector<Site>& cols);

    // Vector with entry p = a_{m - rows[p]}^j.
    Eigen::VectorXcd vector_block(int freq_index, const Site& m, const std::vector<Site>& rows);

    // Residuals of sum_{n'~n} a_{n'} = (2d - omega^2 s^2) a_n +/- delta_{n0}.
    // first  = |sum - (2d - w2s2) a_n - delta|   (sign as printed, "+delta")
    // second = |sum - (2d - w2s2) a_n + delta|   ("-delta")
    // Exactly one of the two is at quadrature-error level; the suite records
    // which sign wins.
    std::pair<double, double> neighbor_identity_residuals(int freq_index, const Site& n);

    // min |A_j| over the quadrature grid (builds the grid if needed).
    double min_symbol_abs(int freq_index);

    std::size_t cache_size() const;

    // Text dump: one line per entry, "j n_1 ... n_d re im", offsets canonical,
    // 17 significant digits. load() merges entries into the cache and fails on
    // malformed lines or unknown frequency indices.
    void dump(std::ostream& out) const;
    void load(std::istream& in);

  private:
    struct FreqGrid {
        std::vector<cplx> inverse_symbol;  // 1/A at the grid nodes, last axis fastest
        double min_abs = 0.0;
    };

    const FreqGrid& grid_for(int freq_index);
    cplx evaluate(const FreqGrid& grid, const Site& canonical) const;

    int dimension_;
    double slowness_;
    std::vector<FrequencySpec> frequencies_;
    GreenParams params_;

    mutable std::mutex mutex_;
    std::map<std::pair<int, Site>, cplx> cache_;
    std::map<int, FreqGrid> grids_;
};

}  // namespace latwave
