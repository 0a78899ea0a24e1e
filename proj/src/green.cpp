#include "latwave/green.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <set>
#include <sstream>

#include "latwave/parallel.hpp"

namespace latwave {

namespace {

constexpr double kPi = std::numbers::pi;

std::size_t grid_size(int order, int dimension) {
    std::size_t total = 1;
    for (int a = 0; a < dimension; ++a) total *= static_cast<std::size_t>(order);
    return total;
}

void append_sci(std::string& out, double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.16e", v);
    out += buf;
}

}  // namespace

Site diff(const Site& to, const Site& from) {
    Site out(to.size());
    for (std::size_t i = 0; i < to.size(); ++i) out[i] = to[i] - from[i];
    return out;
}

Site canonical_offset(const Site& n) {
    Site out(n.size());
    for (std::size_t i = 0; i < n.size(); ++i) out[i] = std::abs(n[i]);
    return out;
}

bool is_zero_offset(const Site& n) {
    for (int c : n)
        if (c != 0) return false;
    return true;
}

cplx symbol(const std::vector<double>& k, cplx omega, double slowness, int dimension) {
    double csum = 0.0;
    for (int a = 0; a < dimension; ++a) csum += std::cos(k[a]);
    return 2.0 * dimension - omega * omega * slowness * slowness - 2.0 * csum;
}

bool in_passband(cplx omega, double slowness, int dimension) {
    // A_j(k) = 0 has a solution iff omega^2 s^2 is real and in [0, 4d].
    const cplx z = omega * omega * slowness * slowness;
    return z.imag() == 0.0 && z.real() >= 0.0 && z.real() <= 4.0 * dimension;
}

int default_quadrature_order(int dimension) { return dimension <= 2 ? 256 : 64; }

GreenTable::GreenTable(int dimension, double slowness, std::vector<FrequencySpec> frequencies, GreenParams params)
    : dimension_(dimension), slowness_(slowness), frequencies_(std::move(frequencies)), params_(params) {
    if (dimension_ < 1) throw std::invalid_argument("GreenTable: dimension must be >= 1");
    if (!(slowness_ > 0.0)) throw std::invalid_argument("GreenTable: slowness must be positive");
    if (params_.order == 0) params_.order = default_quadrature_order(dimension_);
    if (params_.order < 4) throw std::invalid_argument("GreenTable: quadrature order must be >= 4");
    std::set<int> seen;
    for (const auto& fs : frequencies_) {
        if (fs.index < 1) throw std::invalid_argument("GreenTable: frequency index must be >= 1");
        if (!seen.insert(fs.index).second) throw std::invalid_argument("GreenTable: duplicate frequency index");
    }
}

const FrequencySpec& GreenTable::frequency(int freq_index) const {
    for (const auto& fs : frequencies_)
        if (fs.index == freq_index) return fs;
    throw std::invalid_argument("GreenTable: unknown frequency index " + std::to_string(freq_index));
}

const GreenTable::FreqGrid& GreenTable::grid_for(int freq_index) {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = grids_.find(freq_index);
    if (it != grids_.end()) return it->second;

    const FrequencySpec& fs = frequency(freq_index);
    const int q = params_.order;
    const double step = 2.0 * kPi / q;
    std::vector<double> cosk(q);
    for (int i = 0; i < q; ++i) cosk[i] = std::cos(-kPi + step * i);

    FreqGrid grid;
    grid.inverse_symbol.resize(grid_size(q, dimension_));
    const cplx base = 2.0 * dimension_ - fs.omega2() * slowness_ * slowness_;

    Site idx(dimension_, 0);
    double min_sq = std::numeric_limits<double>::infinity();
    for (std::size_t flat = 0; flat < grid.inverse_symbol.size(); ++flat) {
        double csum = 0.0;
        for (int a = 0; a < dimension_; ++a) csum += cosk[idx[a]];
        const cplx value = base - 2.0 * csum;
        min_sq = std::min(min_sq, std::norm(value));
        grid.inverse_symbol[flat] = 1.0 / value;
        for (int a = dimension_ - 1; a >= 0; --a) {
            if (++idx[a] < q) break;
            idx[a] = 0;
        }
    }
    grid.min_abs = std::sqrt(min_sq);
    return grids_.emplace(freq_index, std::move(grid)).first->second;
}

cplx GreenTable::evaluate(const FreqGrid& grid, const Site& n) const {
    const int q = params_.order;
    const double step = 2.0 * kPi / q;
    std::vector<cplx> phase(q);
    std::vector<cplx> cur, next;
    const cplx* src = grid.inverse_symbol.data();
    std::size_t size = grid.inverse_symbol.size();
    for (int axis = dimension_ - 1; axis >= 0; --axis) {
        // 1/q folds the equal trapezoid weights into the phase table
        for (int i = 0; i < q; ++i) phase[i] = std::polar(1.0 / q, n[axis] * (-kPi + step * i));
        const std::size_t rows = size / q;
        next.assign(rows, cplx(0.0, 0.0));
        for (std::size_t r = 0; r < rows; ++r) {
            const cplx* row = src + r * static_cast<std::size_t>(q);
            cplx acc(0.0, 0.0);
            for (int i = 0; i < q; ++i) acc += row[i] * phase[i];
            next[r] = acc;
        }
        cur.swap(next);
        src = cur.data();
        size = rows;
    }
    return cur[0];
}

cplx GreenTable::coeff(int freq_index, const Site& n) {
    if (static_cast<int>(n.size()) != dimension_)
        throw std::invalid_argument("GreenTable: offset length does not match dimension");
    Site key = canonical_offset(n);
    {
        std::lock_guard<std::mutex> lock(mutex_);
        auto it = cache_.find({freq_index, key});
        if (it != cache_.end()) return it->second;
    }
    const FreqGrid& grid = grid_for(freq_index);
    if (grid.min_abs < params_.singular_floor)
        throw NearSingularSymbol(freq_index, grid.min_abs, params_.singular_floor);
    const cplx value = evaluate(grid, key);
    std::lock_guard<std::mutex> lock(mutex_);
    cache_.emplace(std::make_pair(freq_index, std::move(key)), value);
    return value;
}

void GreenTable::prefetch(int freq_index, const std::vector<Site>& offsets) {
    std::vector<Site> todo;
    {
        std::set<Site> pending;
        std::lock_guard<std::mutex> lock(mutex_);
        for (const Site& n : offsets) {
            Site key = canonical_offset(n);
            if (cache_.count({freq_index, key}) == 0 && pending.insert(key).second) todo.push_back(std::move(key));
        }
    }
    if (todo.empty()) return;
    const FreqGrid& grid = grid_for(freq_index);
    if (grid.min_abs < params_.singular_floor)
        throw NearSingularSymbol(freq_index, grid.min_abs, params_.singular_floor);
    std::vector<cplx> values(todo.size());
    parallel_for(todo.size(), params_.threads, [&](std::size_t i) { values[i] = evaluate(grid, todo[i]); });
    std::lock_guard<std::mutex> lock(mutex_);
    for (std::size_t i = 0; i < todo.size(); ++i)
        cache_.emplace(std::make_pair(freq_index, std::move(todo[i])), values[i]);
}

Eigen::MatrixXcd GreenTable::block(int freq_index, const std::vector<Site>& rows, const std::vector<Site>& cols) {
    std::vector<Site> offsets;
    offsets.reserve(rows.size() * cols.size());
    for (const Site& r : rows)
        for (const Site& c : cols) offsets.push_back(diff(c, r));
    prefetch(freq_index, offsets);
    Eigen::MatrixXcd out(rows.size(), cols.size());
    for (std::size_t p = 0; p < rows.size(); ++p)
        for (std::size_t q = 0; q < cols.size(); ++q) out(p, q) = coeff(freq_index, diff(cols[q], rows[p]));
    return out;
}

Eigen::VectorXcd GreenTable::vector_block(int freq_index, const Site& m, const std::vector<Site>& rows) {
    std::vector<Site> offsets;
    offsets.reserve(rows.size());
    for (const Site& r : rows) offsets.push_back(diff(m, r));
    prefetch(freq_index, offsets);
    Eigen::VectorXcd out(rows.size());
    for (std::size_t p = 0; p < rows.size(); ++p) out(p) = coeff(freq_index, offsets[p]);
    return out;
}

std::pair<double, double> GreenTable::neighbor_identity_residuals(int freq_index, const Site& n) {
    if (static_cast<int>(n.size()) != dimension_)
        throw std::invalid_argument("GreenTable: offset length does not match dimension");
    cplx sum(0.0, 0.0);
    Site neighbor = n;
    for (int a = 0; a < dimension_; ++a) {
        neighbor[a] = n[a] + 1;
        sum += coeff(freq_index, neighbor);
        neighbor[a] = n[a] - 1;
        sum += coeff(freq_index, neighbor);
        neighbor[a] = n[a];
    }
    const FrequencySpec& fs = frequency(freq_index);
    const cplx factor = 2.0 * dimension_ - fs.omega2() * slowness_ * slowness_;
    const cplx lhs = sum - factor * coeff(freq_index, n);
    const double delta = is_zero_offset(n) ? 1.0 : 0.0;
    return {std::abs(lhs - delta), std::abs(lhs + delta)};
}

double GreenTable::min_symbol_abs(int freq_index) { return grid_for(freq_index).min_abs; }

std::size_t GreenTable::cache_size() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return cache_.size();
}

void GreenTable::dump(std::ostream& out) const {
    std::lock_guard<std::mutex> lock(mutex_);
    for (const auto& [key, value] : cache_) {
        std::string line = std::to_string(key.first);
        for (int c : key.second) {
            line += ' ';
            line += std::to_string(c);
        }
        line += ' ';
        append_sci(line, value.real());
        line += ' ';
        append_sci(line, value.imag());
        line += '\n';
        out << line;
    }
}

void GreenTable::load(std::istream& in) {
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream is(line);
        int j = 0;
        if (!(is >> j)) throw ParseError("green_table_load", "line " + std::to_string(lineno) + ": missing frequency index", "green");
        try {
            frequency(j);
        } catch (const std::invalid_argument&) {
            throw ParseError("green_table_load", "line " + std::to_string(lineno) + ": unknown frequency index " + std::to_string(j), "green");
        }
        Site n(dimension_);
        for (int a = 0; a < dimension_; ++a)
            if (!(is >> n[a]))
                throw ParseError("green_table_load", "line " + std::to_string(lineno) + ": truncated offset", "green");
        double re = 0.0, im = 0.0;
        if (!(is >> re >> im))
            throw ParseError("green_table_load", "line " + std::to_string(lineno) + ": truncated value", "green");
        std::string extra;
        if (is >> extra)
            throw ParseError("green_table_load", "line " + std::to_string(lineno) + ": trailing tokens", "green");
        std::lock_guard<std::mutex> lock(mutex_);
        cache_.insert_or_assign(std::make_pair(j, canonical_offset(n)), cplx(re, im));
    }
}

}  // namespace latwave
