#include <algorithm>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "latwave/cloak.hpp"
#include "latwave/forward.hpp"
#include "latwave/inverse.hpp"
#include "latwave/report.hpp"
#include "latwave/scene.hpp"

namespace {

using namespace latwave;

struct RunConfig {
    std::string command;
    std::string scene_path;
    std::string out_path = "-";
    int order = 0;  // 0 = per-dimension default
    int radius = 40;
    std::uint64_t seed = 1;
    int threads = 1;

    double tol_adm = 1e-10;
    double tol_rank = 1e-10;
    double tol_cons = 1e-8;
    double tol_ver = 1e-6;
    double tol_cloak = 1e-8;
    double tol_im = 1e-9;
    double tol_den = 1e-12;
    double tol_floor = 1e-6;

    int multistart = 16;
    double start_scale = 0.5;
    double t_scale = 0.5;
    int max_draws = 64;
    int ring = 0;        // cloak: replace receivers by the full ring of this radius
    double box = 0.0;    // >0: box/reality constraint bound B
    int max_offset = -1; // green: dump the offset box [0,L]^d instead of the scene offsets
};

void write_output(const std::string& path, const std::string& content) {
    if (path == "-") {
        std::cout << content;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::invalid_argument("cannot open output path: " + path);
    out << content;
}

int max_site_coordinate(const Scene& scene) {
    int radius = 0;
    auto track = [&](const Site& s) {
        for (int c : s) radius = std::max(radius, std::abs(c));
    };
    for (const auto& s : scene.defect_sites) track(s);
    for (const auto& s : scene.receivers) track(s);
    for (const auto& s : scene.sources) track(s.site);
    return radius;
}

std::vector<Site> box_sites(int dimension, int radius, bool surface_only) {
    std::vector<Site> out;
    Site idx(dimension, -radius);
    while (true) {
        if (!surface_only || std::abs(*std::max_element(idx.begin(), idx.end(), [](int a, int b) {
                return std::abs(a) < std::abs(b);
            })) == radius)
            out.push_back(idx);
        int a = dimension - 1;
        for (; a >= 0; --a) {
            if (++idx[a] <= radius) break;
            idx[a] = -radius;
        }
        if (a < 0) break;
    }
    return out;
}

DefectVector scene_defects_or_zero(const Scene& scene) {
    if (scene.has_defects()) return scene.defects;
    return DefectVector::Zero(scene.defect_count());
}

InverseOptions inverse_options(const RunConfig& cfg) {
    InverseOptions opts;
    opts.rank_tol = cfg.tol_rank;
    opts.cons_tol = cfg.tol_cons;
    opts.ver_tol = cfg.tol_ver;
    opts.den_tol = cfg.tol_den;
    opts.adm_tol = cfg.tol_adm;
    opts.multistart = cfg.multistart;
    opts.start_scale = cfg.start_scale;
    opts.seed = cfg.seed;
    opts.threads = cfg.threads;
    return opts;
}

void validate_config(const RunConfig& cfg) {
    for (double tol : {cfg.tol_adm, cfg.tol_rank, cfg.tol_cons, cfg.tol_ver, cfg.tol_cloak, cfg.tol_im, cfg.tol_den,
                       cfg.tol_floor})
        if (!(tol > 0.0)) throw std::invalid_argument("tolerances must be positive");
    if (cfg.threads < 1) throw std::invalid_argument("--threads must be >= 1");
    if (cfg.order != 0 && cfg.order < 4) throw std::invalid_argument("--order must be 0 or >= 4");
}

int run(const RunConfig& cfg) {
    validate_config(cfg);
    Scene scene = load_scene_file(cfg.scene_path);
    require_valid(scene);

    GreenParams gp;
    gp.order = cfg.order;
    gp.singular_floor = cfg.tol_floor;
    gp.threads = cfg.threads;
    GreenTable table = make_green_table(scene, gp);

    if (cfg.command == "green") {
        if (cfg.max_offset >= 0) {
            std::vector<Site> offsets;
            Site idx(scene.dimension, 0);
            while (true) {
                offsets.push_back(idx);
                int a = scene.dimension - 1;
                for (; a >= 0; --a) {
                    if (++idx[a] <= cfg.max_offset) break;
                    idx[a] = 0;
                }
                if (a < 0) break;
            }
            for (const auto& fs : scene.frequencies) table.prefetch(fs.index, offsets);
        } else {
            assemble_all(scene, table);  // populates every offset the scene's systems need
        }
        std::ostringstream out;
        table.dump(out);
        write_output(cfg.out_path, out.str());
        return 0;
    }

    if (cfg.command == "forward") {
        Scene augmented = scene;
        augmented.measurements = measure(scene, table, scene_defects_or_zero(scene), {cfg.tol_adm});
        write_output(cfg.out_path, save_scene(augmented));
        return 0;
    }

    if (cfg.command == "oracle") {
        if (cfg.radius < max_site_coordinate(scene) + 5)
            throw std::invalid_argument("oracle: radius must be >= max site coordinate + 5");
        const OracleSolution sol = brute_force_oracle(scene, scene_defects_or_zero(scene), cfg.radius);
        const std::vector<Site> sites = box_sites(scene.dimension, cfg.radius, false);
        std::vector<FieldGrid> grids;
        for (std::size_t j = 0; j < sol.grids.size(); ++j)
            grids.push_back({scene.frequencies[j].index, sites, sol.grids[j]});
        std::ostringstream out;
        write_field_grids(out, grids);
        write_output(cfg.out_path, out.str());
        return 0;
    }

    if (cfg.command == "field") {
        const std::vector<Site> sites = box_sites(scene.dimension, cfg.radius, false);
        const ForwardSolution sol = solve_forward(scene, table, scene_defects_or_zero(scene), sites, {cfg.tol_adm});
        std::vector<FieldGrid> grids;
        for (const auto& field : sol.fields) grids.push_back({field.freq_index, sites, field.site_amplitudes});
        std::ostringstream out;
        write_field_grids(out, grids);
        write_output(cfg.out_path, out.str());
        return 0;
    }

    if (cfg.command == "invert") {
        if (!scene.has_measurements())
            throw std::invalid_argument("invert: the scene document carries no measurements");
        RecoveryResult result = recover(scene, table, scene.measurements, inverse_options(cfg));
        if (cfg.box > 0.0) result.candidates = box_filter(result.candidates, cfg.box, cfg.tol_im);
        write_output(cfg.out_path, recovery_report(result));
        return 0;
    }

    if (cfg.command == "cloak") {
        Scene design_scene = scene;
        if (cfg.ring > 0) {
            design_scene.receivers = box_sites(scene.dimension, cfg.ring, true);
            design_scene.measurements.clear();
            require_valid(design_scene);
        }
        CloakOptions opts;
        opts.cloak_tol = cfg.tol_cloak;
        opts.adm_tol = cfg.tol_adm;
        opts.rank_tol = cfg.tol_rank;
        opts.seed = cfg.seed;
        opts.t_scale = cfg.t_scale;
        opts.max_draws = cfg.max_draws;
        if (cfg.box > 0.0) opts.box_bound = cfg.box;
        opts.im_tol = cfg.tol_im;
        opts.inverse = inverse_options(cfg);
        GreenTable design_table = make_green_table(design_scene, gp);
        const CloakDesign design = design_cloak(design_scene, design_table, {}, opts);
        write_output(cfg.out_path, cloak_report(design, cfg.ring));
        return 0;
    }

    throw std::invalid_argument("unknown command: " + cfg.command);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"discrete lattice wave toolkit: forward scattering, defect recovery, cloak synthesis"};
    app.require_subcommand(1);

    RunConfig cfg;
    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--scene", cfg.scene_path, "scene document (JSON)")->required();
        cmd->add_option("--out", cfg.out_path, "output path, - for stdout");
        cmd->add_option("--order", cfg.order, "quadrature points per axis (0 = per-dimension default)");
        cmd->add_option("--radius", cfg.radius, "box radius (oracle, field)");
        cmd->add_option("--seed", cfg.seed, "seed for random starts and draws");
        cmd->add_option("--threads", cfg.threads, "parallelism cap");
        cmd->add_option("--tol-adm", cfg.tol_adm, "admissibility singular-value ratio");
        cmd->add_option("--tol-rank", cfg.tol_rank, "relative rank cutoff");
        cmd->add_option("--tol-cons", cfg.tol_cons, "data-equation consistency tolerance");
        cmd->add_option("--tol-ver", cfg.tol_ver, "candidate verification tolerance");
        cmd->add_option("--tol-cloak", cfg.tol_cloak, "cloak invisibility tolerance");
        cmd->add_option("--tol-im", cfg.tol_im, "reality tolerance for the box filter");
        cmd->add_option("--tol-den", cfg.tol_den, "zero-denominator classification tolerance");
        cmd->add_option("--tol-floor", cfg.tol_floor, "near-singular symbol floor");
    };

    auto* green = app.add_subcommand("green", "dump the Green coefficient table");
    green->add_option("--max-offset", cfg.max_offset, "dump the offset box [0,L]^d instead of the scene offsets");
    auto* forward = app.add_subcommand("forward", "compute receiver amplitudes (writes a scene with measurements)");
    auto* oracle = app.add_subcommand("oracle", "truncated-lattice direct solve on a box");
    auto* invert = app.add_subcommand("invert", "characterize the defects consistent with the measurements");
    invert->add_option("--multistart", cfg.multistart, "number of intersection starts");
    invert->add_option("--start-scale", cfg.start_scale, "spread of random kernel draws");
    invert->add_option("--box", cfg.box, "apply the [0,B] box filter to candidates");
    auto* cloak = app.add_subcommand("cloak", "synthesize an invisible defect");
    cloak->add_option("--ring", cfg.ring, "replace receivers by the full ring of this radius");
    cloak->add_option("--t-scale", cfg.t_scale, "spread of random kernel draws");
    cloak->add_option("--max-draws", cfg.max_draws, "rejection budget");
    cloak->add_option("--box", cfg.box, "box/reality constraint bound for random draws");
    cloak->add_option("--multistart", cfg.multistart, "intersection starts (multi-frequency cloaks)");
    auto* field = app.add_subcommand("field", "export the wave field on a box around the origin");

    for (auto* cmd : {green, forward, oracle, invert, cloak, field}) add_common(cmd);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }
    cfg.command = app.get_subcommands().front()->get_name();

    try {
        return run(cfg);
    } catch (const ParseError& e) {
        write_output(cfg.out_path, error_report(e.module(), e.operation(), e.what()));
        std::cerr << "input error: " << e.what() << "\n";
        return 1;
    } catch (const ValidationError& e) {
        write_output(cfg.out_path, error_report(e.module(), e.operation(), e.what()));
        std::cerr << "input error: " << e.what() << "\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        write_output(cfg.out_path, error_report("cli", "run", e.what()));
        std::cerr << "input error: " << e.what() << "\n";
        return 1;
    } catch (const NoCandidate& e) {
        // analysis completed: the set searched is empty
        write_output(cfg.out_path, error_report(e.module(), e.operation(), e.what()));
        std::cerr << e.what() << "\n";
        return 0;
    } catch (const Error& e) {
        write_output(cfg.out_path, error_report(e.module(), e.operation(), e.what()));
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        write_output(cfg.out_path, error_report("cli", "run", e.what()));
        std::cerr << "failure: " << e.what() << "\n";
        return 2;
    }
}
