#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "latwave/green.hpp"

namespace latwave {

struct Source {
    int freq_index = 0;  // 1-based, into Scene::frequencies
    Site site;
    cplx amplitude;
};

// Defect perturbations of the squared slowness, ordered as defect_sites.
// A zero entry means "non-defect point". Complex values are allowed; reality
// or box priors are applied only by explicit filters.
using DefectVector = Eigen::VectorXcd;

// Receiver amplitudes, one vector of length R per frequency, ordered as
// Scene::frequencies.
using Measurement = std::vector<Eigen::VectorXcd>;

struct Scene {
    int dimension = 0;
    double background_slowness = 1.0;
    std::vector<FrequencySpec> frequencies;
    std::vector<Source> sources;
    std::vector<Site> defect_sites;  // candidate footprint, user-declared
    std::vector<Site> receivers;

    // Optional payloads (empty when absent).
    Measurement measurements;  // size 0 or frequencies.size(); entries may be empty when missing
    DefectVector defects;      // size 0 or defect_sites.size()

    int defect_count() const { return static_cast<int>(defect_sites.size()); }
    int receiver_count() const { return static_cast<int>(receivers.size()); }
    int frequency_count() const { return static_cast<int>(frequencies.size()); }

    bool has_measurements() const;
    bool has_defects() const { return defects.size() > 0; }

    std::vector<Source> sources_for(int freq_index) const;
};

std::vector<Violation> validate_scene(const Scene& scene);

// Throws ValidationError when validate_scene reports anything.
void require_valid(const Scene& scene);

// Scene documents are JSON. load_scene throws ParseError on malformed input;
// it does not validate (call validate_scene / require_valid separately).
Scene load_scene(const std::string& text);
Scene load_scene_file(const std::string& path);
std::string save_scene(const Scene& scene);

// Convenience: a Green table over the scene's frequency list.
GreenTable make_green_table(const Scene& scene, GreenParams params = {});

}  // namespace latwave
