#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "latwave/cloak.hpp"
#include "latwave/inverse.hpp"

namespace latwave {

std::string status_name(RecoveryStatus status);

// JSON documents (returned serialized, two-space indent, trailing newline).
std::string recovery_report(const RecoveryResult& result);
std::string cloak_report(const CloakDesign& design, int ring_radius);
std::string error_report(const std::string& module, const std::string& operation, const std::string& message);

// Plot-ready wave-field grid: per frequency a "# freq <j>" header followed by
// one row per site, "x [y [z]] re im", values in 17-significant-digit
// scientific notation.
struct FieldGrid {
    int freq_index = 0;
    std::vector<Site> sites;
    Eigen::VectorXcd values;
};

void write_field_grids(std::ostream& out, const std::vector<FieldGrid>& grids);

}  // namespace latwave
