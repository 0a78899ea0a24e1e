#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "doctest.h"
#include "json.hpp"
#include "latwave/forward.hpp"
#include "latwave/inverse.hpp"
#include "test_util.hpp"

using namespace latwave;
namespace fs = std::filesystem;

namespace {

const char* cli_path() { return LATWAVE_CLI_PATH; }

int run_cli(const std::string& args) {
    const std::string cmd = std::string(cli_path()) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    REQUIRE(WIFEXITED(status));
    return WEXITSTATUS(status);
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

fs::path artifact_dir() {
    const fs::path dir = fs::path("cli_artifacts");
    fs::create_directories(dir);
    return dir;
}

fs::path write_fixture_scene() {
    Scene s = testutil::sparse_scene();
    s.defects = testutil::sparse_defects();
    const fs::path path = artifact_dir() / "fixture_scene.json";
    std::ofstream out(path, std::ios::binary);
    out << save_scene(s);
    return path;
}

}  // namespace

TEST_CASE("cli: forward then invert recovers the planted defects") {
    const fs::path scene_path = write_fixture_scene();
    const fs::path fwd_path = artifact_dir() / "forward_out.json";
    const fs::path report_path = artifact_dir() / "invert_report.json";

    CHECK(run_cli("forward --scene " + scene_path.string() + " --out " + fwd_path.string()) == 0);
    CHECK(run_cli("invert --scene " + fwd_path.string() + " --out " + report_path.string()) == 0);

    const auto report = nlohmann::json::parse(slurp(report_path));
    CHECK(report.at("status") == "UNIQUE");
    REQUIRE(report.at("candidates").size() == 1);
    const auto& defects = report.at("candidates")[0].at("defects");
    const DefectVector truth = testutil::sparse_defects();
    double err = 0.0;
    for (Eigen::Index i = 0; i < truth.size(); ++i) {
        const cplx v(defects[static_cast<std::size_t>(i)][0].get<double>(),
                     defects[static_cast<std::size_t>(i)][1].get<double>());
        err = std::max(err, std::abs(v - truth(i)));
    }
    CHECK(err / truth.norm() < 1e-8);
}

TEST_CASE("cli: forward output is a valid scene document with measurements") {
    const fs::path scene_path = write_fixture_scene();
    const fs::path fwd_path = artifact_dir() / "forward_doc.json";
    REQUIRE(run_cli("forward --scene " + scene_path.string() + " --out " + fwd_path.string()) == 0);
    const Scene forwarded = load_scene_file(fwd_path.string());
    CHECK(validate_scene(forwarded).empty());
    CHECK(forwarded.has_measurements());
    CHECK(forwarded.has_defects());
}

TEST_CASE("cli: field on the no-defect scene equals the zero-defect field") {
    Scene s = testutil::sparse_scene();
    const fs::path no_key = artifact_dir() / "scene_nodefects.json";
    {
        std::ofstream out(no_key, std::ios::binary);
        out << save_scene(s);
    }
    s.defects = DefectVector::Zero(3);
    const fs::path zero_key = artifact_dir() / "scene_zerodefects.json";
    {
        std::ofstream out(zero_key, std::ios::binary);
        out << save_scene(s);
    }
    const fs::path grid_a = artifact_dir() / "field_a.txt";
    const fs::path grid_b = artifact_dir() / "field_b.txt";
    REQUIRE(run_cli("field --radius 6 --scene " + no_key.string() + " --out " + grid_a.string()) == 0);
    REQUIRE(run_cli("field --radius 6 --scene " + zero_key.string() + " --out " + grid_b.string()) == 0);
    CHECK(slurp(grid_a) == slurp(grid_b));
}

TEST_CASE("cli: tampered measurements report INCONSISTENT with exit 0") {
    Scene s = testutil::sparse_scene();
    GreenTable table = make_green_table(s, {128});
    s.measurements = measure(s, table, testutil::sparse_defects());
    s.measurements[0](0) += cplx(0.05, -0.02);
    const fs::path path = artifact_dir() / "tampered.json";
    {
        std::ofstream out(path, std::ios::binary);
        out << save_scene(s);
    }
    const fs::path report_path = artifact_dir() / "tampered_report.json";
    CHECK(run_cli("invert --scene " + path.string() + " --out " + report_path.string()) == 0);
    const auto report = nlohmann::json::parse(slurp(report_path));
    CHECK(report.at("status") == "INCONSISTENT");
    CHECK(report.at("candidates").empty());
}

TEST_CASE("cli: determinism of repeated runs") {
    const fs::path scene_path = write_fixture_scene();
    const fs::path fwd_path = artifact_dir() / "det_forward.json";
    REQUIRE(run_cli("forward --scene " + scene_path.string() + " --out " + fwd_path.string()) == 0);

    const fs::path report_a = artifact_dir() / "det_invert_a.json";
    const fs::path report_b = artifact_dir() / "det_invert_b.json";
    REQUIRE(run_cli("invert --seed 42 --scene " + fwd_path.string() + " --out " + report_a.string()) == 0);
    REQUIRE(run_cli("invert --seed 42 --scene " + fwd_path.string() + " --out " + report_b.string()) == 0);
    CHECK(slurp(report_a) == slurp(report_b));
}

TEST_CASE("cli: green dump round-trips through the documented format") {
    const fs::path scene_path = write_fixture_scene();
    const fs::path table_path = artifact_dir() / "green_table.txt";
    REQUIRE(run_cli("green --scene " + scene_path.string() + " --out " + table_path.string()) == 0);

    Scene s = testutil::sparse_scene();
    GreenTable table = make_green_table(s, {});
    std::istringstream in(slurp(table_path));
    table.load(in);  // throws on malformed lines
    CHECK(table.cache_size() > 0);
}

TEST_CASE("cli: input errors exit 1 with an error document") {
    const fs::path bad_path = artifact_dir() / "bad_scene.json";
    {
        std::ofstream out(bad_path, std::ios::binary);
        out << "{ not json";
    }
    const fs::path err_path = artifact_dir() / "bad_error.json";
    CHECK(run_cli("forward --scene " + bad_path.string() + " --out " + err_path.string()) == 1);
    const auto doc = nlohmann::json::parse(slurp(err_path));
    CHECK(doc.contains("error"));
    CHECK(doc.at("error").at("module") == "scene");

    CHECK(run_cli("forward --scene /nonexistent.json --out " + err_path.string()) == 1);
}

TEST_CASE("cli: numerical failures exit 2 naming the operation") {
    Scene s = testutil::sparse_scene();
    s.defects = testutil::sparse_defects();
    // make the scalar Gram matrix singular at frequency 1
    GreenTable table = make_green_table(s, {128});
    const FrequencySystem sys = assemble_system(s, table, 1);
    s.defect_sites = {{0, 0}};
    s.defects = DefectVector(1);
    s.defects(0) = 1.0 / (sys.spec.omega2() * table.coeff(1, {0, 0}));
    const fs::path path = artifact_dir() / "singular_scene.json";
    {
        std::ofstream out(path, std::ios::binary);
        out << save_scene(s);
    }
    const fs::path err_path = artifact_dir() / "singular_error.json";
    CHECK(run_cli("forward --scene " + path.string() + " --out " + err_path.string()) == 2);
    const auto doc = nlohmann::json::parse(slurp(err_path));
    CHECK(doc.at("error").at("module") == "forward");
    CHECK(doc.at("error").at("operation") == "solve_forward");
}
