#pragma once

#include <cmath>
#include <numbers>

namespace rfforce {

inline constexpr double rad_to_deg = 180.0 / std::numbers::pi;
inline constexpr double deg_to_rad = std::numbers::pi / 180.0;

/// Wrap to [0, 360).
inline double wrap360(double deg) {
    double r = std::fmod(deg, 360.0);
    if (r < 0.0) r += 360.0;
    // fmod of a tiny negative value can round back up to exactly 360
    if (r >= 360.0) r -= 360.0;
    return r;
}

/// Wrap to (-180, 180].
inline double wrap180(double deg) {
    double r = wrap360(deg);
    return r > 180.0 ? r - 360.0 : r;
}

/// Fold to (-90, 90]: identifies angles that differ by a half turn.
inline double fold90(double deg) {
    double r = std::fmod(deg, 180.0);
    if (r <= -90.0) r += 180.0;
    else if (r > 90.0) r -= 180.0;
    return r;
}

/// Reader phase reports live on a grid of 360 / 2^32 degrees (a 32-bit phase
/// accumulator). Every grid value is k * 45 * 2^-29 with k < 2^32, so sums and
/// differences of grid values below 2^15 degrees are exact in double precision.
inline constexpr double phase_quantum_deg = 360.0 / 4294967296.0;

inline double quantize_phase(double deg) {
    return std::nearbyint(deg / phase_quantum_deg) * phase_quantum_deg;
}

}  // namespace rfforce
