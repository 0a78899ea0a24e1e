#include "latwave/scene.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"

namespace latwave {

namespace {

using json = nlohmann::json;

cplx parse_complex(const json& j, const std::string& where) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
        throw ParseError("load_scene", where + ": complex values are [re, im] arrays of numbers");
    return {j[0].get<double>(), j[1].get<double>()};
}

Site parse_site(const json& j, const std::string& where) {
    if (!j.is_array()) throw ParseError("load_scene", where + ": sites are integer arrays");
    Site s;
    s.reserve(j.size());
    for (const auto& c : j) {
        if (!c.is_number_integer()) throw ParseError("load_scene", where + ": site components must be integers");
        s.push_back(c.get<int>());
    }
    return s;
}

json complex_json(cplx z) { return json::array({z.real(), z.imag()}); }

json site_json(const Site& s) {
    json a = json::array();
    for (int c : s) a.push_back(c);
    return a;
}

std::string site_text(const Site& s) {
    std::string out = "(";
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(s[i]);
    }
    return out + ")";
}

}  // namespace

bool Scene::has_measurements() const {
    if (measurements.size() != frequencies.size() || measurements.empty()) return false;
    return std::all_of(measurements.begin(), measurements.end(),
                       [](const Eigen::VectorXcd& v) { return v.size() > 0; });
}

std::vector<Source> Scene::sources_for(int freq_index) const {
    std::vector<Source> out;
    for (const auto& s : sources)
        if (s.freq_index == freq_index) out.push_back(s);
    return out;
}

std::vector<Violation> validate_scene(const Scene& scene) {
    std::vector<Violation> out;
    const int d = scene.dimension;
    const int m = scene.frequency_count();
    const int n = scene.defect_count();
    const int r = scene.receiver_count();

    if (d < 1) out.push_back({"dimension", "must be an integer >= 1"});
    if (!(scene.background_slowness > 0.0)) out.push_back({"background_slowness", "must be positive"});

    for (int i = 0; i < m; ++i) {
        const auto& fs = scene.frequencies[i];
        if (fs.index != i + 1)
            out.push_back({"frequencies[" + std::to_string(i) + "].index",
                           "must equal list position + 1 (" + std::to_string(i + 1) + ")"});
        for (int j = i + 1; j < m; ++j)
            if (fs.omega == scene.frequencies[j].omega)
                out.push_back({"frequencies", "frequencies not pairwise distinct (entries " + std::to_string(i + 1) +
                                                  " and " + std::to_string(j + 1) + ")"});
        if (d >= 1 && in_passband(fs.omega, scene.background_slowness, d))
            out.push_back({"frequencies[" + std::to_string(i) + "]",
                           "frequency in passband: omega^2 s^2 lies in [0, " + std::to_string(4 * d) +
                               "]; supply an explicit shift omega - i*eps"});
    }

    std::set<std::pair<int, Site>> seen_sources;
    for (std::size_t i = 0; i < scene.sources.size(); ++i) {
        const auto& src = scene.sources[i];
        const std::string field = "sources[" + std::to_string(i) + "]";
        if (src.freq_index < 1 || src.freq_index > m)
            out.push_back({field + ".freq_index", "out of range 1.." + std::to_string(m)});
        if (static_cast<int>(src.site.size()) != d)
            out.push_back({field + ".site", "site length must equal dimension"});
        if (src.amplitude == cplx(0.0, 0.0)) out.push_back({field + ".amplitude", "zero source amplitude"});
        if (!seen_sources.insert({src.freq_index, src.site}).second)
            out.push_back({field, "duplicate source site " + site_text(src.site) + " within frequency " +
                                      std::to_string(src.freq_index)});
    }

    auto check_sites = [&](const std::vector<Site>& sites, const std::string& name) {
        std::set<Site> seen;
        for (std::size_t i = 0; i < sites.size(); ++i) {
            if (static_cast<int>(sites[i].size()) != d)
                out.push_back({name + "[" + std::to_string(i) + "]", "site length must equal dimension"});
            if (!seen.insert(sites[i]).second)
                out.push_back({name, "duplicate site " + site_text(sites[i])});
        }
    };
    check_sites(scene.defect_sites, "defect_sites");
    check_sites(scene.receivers, "receivers");

    if (!scene.measurements.empty()) {
        if (static_cast<int>(scene.measurements.size()) != m) {
            out.push_back({"measurements", "must carry one vector per frequency"});
        } else {
            for (int j = 0; j < m; ++j) {
                if (scene.measurements[j].size() == 0)
                    out.push_back({"measurements", "missing measurement for frequency " + std::to_string(j + 1)});
                else if (scene.measurements[j].size() != r)
                    out.push_back({"measurements", "frequency " + std::to_string(j + 1) + ": expected " +
                                                       std::to_string(r) + " values, got " +
                                                       std::to_string(scene.measurements[j].size())});
            }
        }
    }

    if (scene.defects.size() != 0 && scene.defects.size() != n)
        out.push_back({"defects", "length must equal the number of defect sites"});

    return out;
}

void require_valid(const Scene& scene) {
    auto violations = validate_scene(scene);
    if (!violations.empty()) throw ValidationError(std::move(violations));
}

Scene load_scene(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError("load_scene", e.what());
    }
    if (!doc.is_object()) throw ParseError("load_scene", "top-level document must be an object");

    Scene scene;
    try {
        scene.dimension = doc.at("dimension").get<int>();
        scene.background_slowness = doc.at("background_slowness").get<double>();

        int idx = 0;
        for (const auto& f : doc.at("frequencies")) {
            ++idx;
            scene.frequencies.push_back(
                {parse_complex(f.at("omega"), "frequencies[" + std::to_string(idx) + "].omega"), idx});
        }

        for (const auto& s : doc.at("sources")) {
            Source src;
            src.freq_index = s.at("freq_index").get<int>();
            src.site = parse_site(s.at("site"), "sources[].site");
            src.amplitude = parse_complex(s.at("amplitude"), "sources[].amplitude");
            scene.sources.push_back(std::move(src));
        }

        for (const auto& s : doc.at("defect_sites")) scene.defect_sites.push_back(parse_site(s, "defect_sites[]"));
        for (const auto& s : doc.at("receivers")) scene.receivers.push_back(parse_site(s, "receivers[]"));

        if (doc.contains("measurements")) {
            scene.measurements.assign(scene.frequencies.size(), Eigen::VectorXcd());
            for (const auto& entry : doc.at("measurements")) {
                const int fi = entry.at("freq_index").get<int>();
                if (fi < 1 || fi > scene.frequency_count())
                    throw ParseError("load_scene", "measurements: freq_index " + std::to_string(fi) + " out of range");
                auto& slot = scene.measurements[fi - 1];
                if (slot.size() > 0)
                    throw ParseError("load_scene", "measurements: duplicate entry for frequency " + std::to_string(fi));
                const auto& values = entry.at("values");
                slot.resize(static_cast<Eigen::Index>(values.size()));
                for (std::size_t i = 0; i < values.size(); ++i)
                    slot(static_cast<Eigen::Index>(i)) = parse_complex(values[i], "measurements[].values");
            }
        }

        if (doc.contains("defects")) {
            const auto& values = doc.at("defects");
            scene.defects.resize(static_cast<Eigen::Index>(values.size()));
            for (std::size_t i = 0; i < values.size(); ++i)
                scene.defects(static_cast<Eigen::Index>(i)) = parse_complex(values[i], "defects[]");
        }
    } catch (const json::exception& e) {
        throw ParseError("load_scene", e.what());
    }
    return scene;
}

Scene load_scene_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("load_scene", "cannot open scene file: " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return load_scene(buffer.str());
}

std::string save_scene(const Scene& scene) {
    json doc;
    doc["dimension"] = scene.dimension;
    doc["background_slowness"] = scene.background_slowness;

    json freqs = json::array();
    for (const auto& f : scene.frequencies) freqs.push_back(json{{"omega", complex_json(f.omega)}});
    doc["frequencies"] = freqs;

    json sources = json::array();
    for (const auto& s : scene.sources)
        sources.push_back(
            json{{"freq_index", s.freq_index}, {"site", site_json(s.site)}, {"amplitude", complex_json(s.amplitude)}});
    doc["sources"] = sources;

    json defect_sites = json::array();
    for (const auto& s : scene.defect_sites) defect_sites.push_back(site_json(s));
    doc["defect_sites"] = defect_sites;

    json receivers = json::array();
    for (const auto& s : scene.receivers) receivers.push_back(site_json(s));
    doc["receivers"] = receivers;

    bool any_measurement = false;
    for (const auto& v : scene.measurements) any_measurement |= v.size() > 0;
    if (any_measurement) {
        json measurements = json::array();
        for (std::size_t j = 0; j < scene.measurements.size(); ++j) {
            const auto& v = scene.measurements[j];
            if (v.size() == 0) continue;
            json values = json::array();
            for (Eigen::Index i = 0; i < v.size(); ++i) values.push_back(complex_json(v(i)));
            measurements.push_back(json{{"freq_index", static_cast<int>(j) + 1}, {"values", values}});
        }
        doc["measurements"] = measurements;
    }

    if (scene.has_defects()) {
        json defects = json::array();
        for (Eigen::Index i = 0; i < scene.defects.size(); ++i) defects.push_back(complex_json(scene.defects(i)));
        doc["defects"] = defects;
    }

    return doc.dump(2) + "\n";
}

GreenTable make_green_table(const Scene& scene, GreenParams params) {
    return GreenTable(scene.dimension, scene.background_slowness, scene.frequencies, params);
}

}  // namespace latwave
