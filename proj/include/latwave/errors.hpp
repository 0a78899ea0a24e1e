#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace latwave {

// Base for all toolkit errors. Carries the module/operation pair so the CLI
// can emit a machine-readable error document.
class Error : public std::runtime_error {
  public:
    Error(std::string module, std::string operation, const std::string& message)
        : std::runtime_error(message), module_(std::move(module)), operation_(std::move(operation)) {}

    const std::string& module() const noexcept { return module_; }
    const std::string& operation() const noexcept { return operation_; }

  private:
    std::string module_;
    std::string operation_;
};

// min |A_j(k)| on the quadrature grid fell below the configured floor:
// omega^2 s^2 is too close to the real interval [0, 4d] for this accuracy.
class NearSingularSymbol : public Error {
  public:
    NearSingularSymbol(int freq_index, double min_abs, double floor)
        : Error("green", "green_coeff",
                "symbol nearly singular for frequency " + std::to_string(freq_index) + ": min |A| = " +
                    std::to_string(min_abs) + " < floor " + std::to_string(floor)),
          freq_index_(freq_index), min_abs_(min_abs) {}

    int freq_index() const noexcept { return freq_index_; }
    double min_abs() const noexcept { return min_abs_; }

  private:
    int freq_index_;
    double min_abs_;
};

// G_j = I - omega^2 A_j S failed the rank-revealing invertibility test.
class NotAdmissible : public Error {
  public:
    NotAdmissible(int freq_index, double sigma_ratio)
        : Error("forward", "solve_forward",
                "defect not admissible at frequency " + std::to_string(freq_index) +
                    " (sigma_min/sigma_max = " + std::to_string(sigma_ratio) + ")"),
          freq_index_(freq_index), sigma_ratio_(sigma_ratio) {}

    int freq_index() const noexcept { return freq_index_; }
    double sigma_ratio() const noexcept { return sigma_ratio_; }

  private:
    int freq_index_;
    double sigma_ratio_;
};

// The truncated-lattice system could not be factorized.
class SingularTruncation : public Error {
  public:
    explicit SingularTruncation(int freq_index)
        : Error("forward", "brute_force_oracle",
                "truncated lattice system numerically singular at frequency " + std::to_string(freq_index)) {}
};

// A manifold-point evaluation hit a component with nonzero numerator over
// zero denominator; the point does not belong to the solution set.
class OffManifold : public Error {
  public:
    explicit OffManifold(std::vector<int> pole_indices)
        : Error("inverse", "manifold_point", "manifold point has pole components"), poles_(std::move(pole_indices)) {}

    const std::vector<int>& pole_indices() const noexcept { return poles_; }

  private:
    std::vector<int> poles_;
};

class NoUniqueFrequency : public Error {
  public:
    NoUniqueFrequency()
        : Error("inverse", "recover_unique", "no frequency with a trivial kernel and consistent data equation") {}
};

class NoCandidate : public Error {
  public:
    explicit NoCandidate(const std::string& message) : Error("inverse", "intersect_manifolds", message) {}
};

class ParseError : public Error {
  public:
    ParseError(std::string operation, const std::string& message, std::string module = "scene")
        : Error(std::move(module), std::move(operation), message) {}
};

struct Violation {
    std::string field;
    std::string message;
};

class ValidationError : public Error {
  public:
    explicit ValidationError(std::vector<Violation> violations)
        : Error("scene", "validate_scene", describe(violations)), violations_(std::move(violations)) {}

    const std::vector<Violation>& violations() const noexcept { return violations_; }

  private:
    static std::string describe(const std::vector<Violation>& vs) {
        std::string msg = "scene validation failed:";
        for (const auto& v : vs) msg += "\n  " + v.field + ": " + v.message;
        return msg;
    }

    std::vector<Violation> violations_;
};

}  // namespace latwave
