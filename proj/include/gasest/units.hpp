#pragma once

#include <string>

namespace gasest::units {

// Canonical internal units: volume m3, flow m3/s, concentration ppm(v), time s.

inline constexpr double kM3PerCuft     = 0.3048 * 0.3048 * 0.3048;
inline constexpr double kSecondsPerMin = 60.0;
inline constexpr double kPpmPerFraction = 1e6;

enum class UnitKind {
    kCubicFeet,
    kCubicMeters,
    kCfm,          // cubic feet per minute
    kM3PerSecond,
    kSlpm,         // standard litres per minute
    kPpm,
    kSeconds,
};

struct Quantity {
    double value = 0.0;
    UnitKind kind = UnitKind::kCubicMeters;
};

// Throws ParameterError when v is not finite or not strictly positive.
void require_positive_finite(double v, const std::string& what);

double cuft_to_m3(double cuft);
double m3_to_cuft(double m3);

double cfm_to_m3s(double cfm);
double m3s_to_cfm(double m3s);

double slpm_to_m3s(double slpm);
double m3s_to_slpm(double m3s);

// Volume-fraction <-> ppm(v). Linear, so generation rates in m3/s map to
// ppm·m3/s with the same factor.
inline constexpr double fraction_to_ppm(double f) { return f * kPpmPerFraction; }
inline constexpr double ppm_to_fraction(double ppm) { return ppm / kPpmPerFraction; }

} // namespace gasest::units
