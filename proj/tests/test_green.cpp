#include <complex>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "latwave/green.hpp"
#include "test_util.hpp"

using namespace latwave;
using testutil::closed_form_green_1d;
using testutil::naive_green_quadrature;

namespace {

const cplx kOmegaUnit(0.0, -1.0);  // omega^2 = -1

GreenTable table_1d(cplx omega2, int order = 256) {
    const cplx omega = std::sqrt(omega2);
    return GreenTable(1, 1.0, {{omega, 1}}, {order});
}

}  // namespace

TEST_CASE("symbol: direct substitution values") {
    CHECK(std::abs(symbol({0.0}, kOmegaUnit, 1.0, 1) - cplx(1.0, 0.0)) < 1e-15);
    const double pi = std::numbers::pi;
    CHECK(std::abs(symbol({pi, pi}, kOmegaUnit, 1.0, 2) - cplx(9.0, 0.0)) < 1e-12);
    CHECK(std::abs(symbol({pi / 2.0}, kOmegaUnit, 1.0, 1) - cplx(3.0, 0.0)) < 1e-15);
}

TEST_CASE("closed-form 1D coefficients match brute-force quadrature") {
    // the closed form is the oracle for everything below; check it first
    for (const cplx c : {cplx(3.0, 0.0), cplx(5.0, 0.0), cplx(2.5, -1.0), cplx(-3.0, 0.0)}) {
        const cplx omega2 = 2.0 - c;
        const cplx omega = std::sqrt(omega2);
        for (int n : {0, 1, 2, 5}) {
            const cplx direct = naive_green_quadrature({n}, omega, 1.0, 1, 512);
            CHECK(std::abs(direct - closed_form_green_1d(n, c)) < 1e-12);
        }
    }
}

TEST_CASE("green_coeff: 1D values against the closed form") {
    GreenTable table = table_1d(cplx(-1.0, 0.0));  // c = 3
    const double sqrt5 = std::sqrt(5.0);
    CHECK(std::abs(table.coeff(1, {0}) - cplx(1.0 / sqrt5, 0.0)) < 1e-10);
    const double r = (3.0 - sqrt5) / 2.0;
    CHECK(std::abs(table.coeff(1, {1}) - cplx(r / sqrt5, 0.0)) < 1e-10);
    CHECK(std::abs(table.coeff(1, {0}).real() - 0.4472136) < 1e-6);
    CHECK(std::abs(table.coeff(1, {1}).real() - 0.1708204) < 1e-6);
}

TEST_CASE("green_coeff: closed-form equivalence over |n| <= 8") {
    for (const cplx c : {cplx(3.0, 0.0), cplx(5.0, 0.0), cplx(2.5, -1.0)}) {
        GreenTable table = table_1d(2.0 - c);
        for (int n = -8; n <= 8; ++n)
            CHECK(std::abs(table.coeff(1, {n}) - closed_form_green_1d(n, c)) < 1e-10);
    }
}

TEST_CASE("green_coeff: sign-flip symmetry is exact, raw quadrature agrees") {
    GreenTable table(2, 1.0, {{kOmegaUnit, 1}}, {256});
    const cplx a = table.coeff(1, {2, -3});
    CHECK(a == table.coeff(1, {2, 3}));
    CHECK(a == table.coeff(1, {-2, 3}));
    CHECK(a == table.coeff(1, {-2, -3}));
    // raw, non-canonicalized quadrature spot check
    const cplx raw = naive_green_quadrature({2, -3}, kOmegaUnit, 1.0, 2, 256);
    const cplx raw_flipped = naive_green_quadrature({-2, 3}, kOmegaUnit, 1.0, 2, 256);
    CHECK(std::abs(raw - a) < 1e-12);
    CHECK(std::abs(raw - raw_flipped) < 1e-12);
}

TEST_CASE("neighbor identity: closed form realizes the minus sign") {
    // c = 3: a_1 + a_{-1} = 3 a_0 - 1
    const cplx a0 = closed_form_green_1d(0, 3.0);
    const cplx a1 = closed_form_green_1d(1, 3.0);
    CHECK(std::abs(2.0 * a1 - (3.0 * a0 - 1.0)) < 1e-14);

    GreenTable table = table_1d(cplx(-1.0, 0.0));
    const auto [plus, minus] = table.neighbor_identity_residuals(1, {0});
    CHECK(minus < 1e-10);
    CHECK(plus > 1.0);  // the printed "+delta" version misses by 2*delta
}

TEST_CASE("neighbor identity: residuals coincide away from the origin") {
    GreenTable table = table_1d(cplx(-1.0, 0.0));
    const auto [plus, minus] = table.neighbor_identity_residuals(1, {3});
    CHECK(plus == minus);
    CHECK(minus < 1e-10);
}

TEST_CASE("neighbor identity: d=2 at the origin, minus sign wins uniformly") {
    GreenTable table(2, 1.0, {{kOmegaUnit, 1}}, {256});
    for (int x = -4; x <= 4; ++x) {
        for (int y = -4; y <= 4; ++y) {
            const auto [plus, minus] = table.neighbor_identity_residuals(1, {x, y});
            CHECK(minus < 1e-8);
            if (x == 0 && y == 0) CHECK(plus > 1.0);
        }
    }
}

TEST_CASE("quadrature convergence: doubling the order shrinks superpolynomially") {
    // c = 2.1 decays slowly enough that low orders are far from converged
    const cplx omega2(-0.1, 0.0);
    std::vector<double> gaps;
    for (int order : {8, 16, 32, 64}) {
        GreenTable coarse = table_1d(omega2, order);
        GreenTable fine = table_1d(omega2, 2 * order);
        gaps.push_back(std::abs(coarse.coeff(1, {1}) - fine.coeff(1, {1})));
    }
    for (std::size_t i = 1; i < gaps.size(); ++i) CHECK(gaps[i] < gaps[i - 1]);
    // a fixed polynomial rate h^p would keep gap ratios constant
    CHECK(gaps[2] / gaps[1] < 0.5 * gaps[1] / gaps[0]);
}

TEST_CASE("decay: |a_n| non-increasing in each |n_i|") {
    GreenTable t1 = table_1d(cplx(-1.0, 0.0));
    for (int n = 0; n < 8; ++n) CHECK(std::abs(t1.coeff(1, {n + 1})) <= std::abs(t1.coeff(1, {n})) + 1e-15);

    GreenTable t2(2, 1.0, {{kOmegaUnit, 1}}, {128});
    for (int x = 0; x < 4; ++x)
        for (int y = 0; y < 4; ++y) {
            CHECK(std::abs(t2.coeff(1, {x + 1, y})) <= std::abs(t2.coeff(1, {x, y})) + 1e-15);
            CHECK(std::abs(t2.coeff(1, {x, y + 1})) <= std::abs(t2.coeff(1, {x, y})) + 1e-15);
        }
}

TEST_CASE("near-singular symbol is rejected") {
    // omega^2 = 2 sits inside the 1D passband [0, 4]
    GreenTable table = table_1d(cplx(2.0, 0.0), 64);
    CHECK_THROWS_AS(table.coeff(1, {0}), NearSingularSymbol);
    CHECK(table.min_symbol_abs(1) < 1e-6);
}

TEST_CASE("block assembly equals entrywise coefficients") {
    GreenTable table(2, 1.0, {{kOmegaUnit, 1}}, {128});
    const std::vector<Site> rows = {{0, 0}, {1, 0}, {-1, 2}};
    const std::vector<Site> cols = {{0, 0}, {2, -1}, {1, 1}};
    const Eigen::MatrixXcd block = table.block(1, rows, cols);
    for (int p = 0; p < 3; ++p)
        for (int q = 0; q < 3; ++q) CHECK(block(p, q) == table.coeff(1, diff(cols[q], rows[p])));
    // diagonal of <a a*/A> is a_0 everywhere
    const Eigen::MatrixXcd gram = table.block(1, rows, rows);
    for (int p = 0; p < 3; ++p) CHECK(gram(p, p) == table.coeff(1, {0, 0}));
    // a_n = a_{-n} makes the pattern symmetric
    CHECK((gram - gram.transpose()).norm() == 0.0);
}

TEST_CASE("vector_block offset arithmetic") {
    GreenTable table = table_1d(cplx(-1.0, 0.0), 64);
    // sites {0, 1}, source column site 5: entry for site 1 is a_4
    const Eigen::VectorXcd v = table.vector_block(1, {5}, {{0}, {1}});
    CHECK(v(0) == table.coeff(1, {5}));
    CHECK(v(1) == table.coeff(1, {4}));
}

TEST_CASE("parallel prefetch agrees with serial evaluation") {
    std::vector<Site> offsets;
    for (int x = -6; x <= 6; ++x)
        for (int y = -6; y <= 6; ++y) offsets.push_back({x, y});

    GreenTable serial(2, 1.0, {{kOmegaUnit, 1}}, {128, 1e-6, 1});
    GreenTable parallel(2, 1.0, {{kOmegaUnit, 1}}, {128, 1e-6, 4});
    parallel.prefetch(1, offsets);
    for (const auto& n : offsets) CHECK(parallel.coeff(1, n) == serial.coeff(1, n));
}

TEST_CASE("table dump/load round-trips value-exactly") {
    GreenTable table(2, 1.0, {{kOmegaUnit, 1}, {cplx(0.0, -1.3), 2}}, {64});
    for (int j : {1, 2})
        for (int x = 0; x <= 3; ++x)
            for (int y = 0; y <= 2; ++y) table.coeff(j, {x, y});

    std::ostringstream dumped;
    table.dump(dumped);

    GreenTable reloaded(2, 1.0, {{kOmegaUnit, 1}, {cplx(0.0, -1.3), 2}}, {64});
    std::istringstream in(dumped.str());
    reloaded.load(in);
    CHECK(reloaded.cache_size() == table.cache_size());
    for (int j : {1, 2})
        for (int x = 0; x <= 3; ++x)
            for (int y = 0; y <= 2; ++y) CHECK(reloaded.coeff(j, {x, y}) == table.coeff(j, {x, y}));

    std::ostringstream redumped;
    reloaded.dump(redumped);
    CHECK(redumped.str() == dumped.str());
}

TEST_CASE("table load rejects malformed lines") {
    GreenTable table(1, 1.0, {{kOmegaUnit, 1}}, {64});
    std::istringstream truncated("1 0");
    CHECK_THROWS_AS(table.load(truncated), ParseError);
    std::istringstream unknown("7 0 1.0 0.0");
    CHECK_THROWS_AS(table.load(unknown), ParseError);
}

TEST_CASE("green_coeff: d=3 agrees with the raw quadrature") {
    GreenTable table(3, 1.0, {{kOmegaUnit, 1}}, {16});
    for (const Site n : {Site{0, 0, 0}, Site{1, 0, 2}, Site{-1, 1, 1}}) {
        const cplx raw = naive_green_quadrature(n, kOmegaUnit, 1.0, 3, 16);
        CHECK(std::abs(table.coeff(1, n) - raw) < 1e-13);
    }
}

TEST_CASE("constructor validation") {
    CHECK_THROWS_AS(GreenTable(0, 1.0, {{kOmegaUnit, 1}}), std::invalid_argument);
    CHECK_THROWS_AS(GreenTable(1, -1.0, {{kOmegaUnit, 1}}), std::invalid_argument);
    CHECK_THROWS_AS(GreenTable(1, 1.0, {{kOmegaUnit, 1}}, {2}), std::invalid_argument);
    CHECK_THROWS_AS(GreenTable(1, 1.0, {{kOmegaUnit, 1}, {cplx(0.0, -2.0), 1}}), std::invalid_argument);
    GreenTable table(2, 1.0, {{kOmegaUnit, 1}}, {64});
    CHECK_THROWS_AS(table.coeff(1, {0}), std::invalid_argument);       // wrong offset length
    CHECK_THROWS_AS(table.coeff(3, {0, 0}), std::invalid_argument);    // unknown frequency
}
