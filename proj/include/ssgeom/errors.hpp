#pragma once

#include <stdexcept>
#include <string>

namespace ssgeom {

struct GeometryError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DimensionMismatch : GeometryError {
    using GeometryError::GeometryError;
};

// Numerical rank of g(x) disagrees with the declared rank.
struct RankMismatch : GeometryError {
    using GeometryError::GeometryError;
};

struct NotAnnihilator : GeometryError {
    using GeometryError::GeometryError;
};

struct NotHorizontal : GeometryError {
    using GeometryError::GeometryError;
};

struct NotInjective : GeometryError {
    using GeometryError::GeometryError;
};

struct BlowUp : GeometryError {
    BlowUp(double last_valid_time, const std::string& what)
        : GeometryError(what), last_time(last_valid_time) {}
    double last_time;
};

struct DriftError : GeometryError {
    DriftError(double drift, const std::string& what) : GeometryError(what), max_drift(drift) {}
    double max_drift;
};

struct ModelError : GeometryError {
    using GeometryError::GeometryError;
};

}  // namespace ssgeom
