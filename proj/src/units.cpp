#include "gasest/units.hpp"

#include <cmath>

#include "gasest/errors.hpp"

namespace gasest::units {

void require_positive_finite(double v, const std::string& what) {
    if (!std::isfinite(v) || v <= 0.0) {
        throw ParameterError(what + " must be a positive finite number");
    }
}

double cuft_to_m3(double cuft) {
    require_positive_finite(cuft, "volume [cu.ft]");
    return cuft * kM3PerCuft;
}

double m3_to_cuft(double m3) {
    require_positive_finite(m3, "volume [m3]");
    return m3 / kM3PerCuft;
}

double cfm_to_m3s(double cfm) {
    require_positive_finite(cfm, "flow [CFM]");
    return cfm * kM3PerCuft / kSecondsPerMin;
}

double m3s_to_cfm(double m3s) {
    require_positive_finite(m3s, "flow [m3/s]");
    return m3s * kSecondsPerMin / kM3PerCuft;
}

double slpm_to_m3s(double slpm) {
    require_positive_finite(slpm, "flow [SLPM]");
    return slpm / (1000.0 * kSecondsPerMin);
}

double m3s_to_slpm(double m3s) {
    require_positive_finite(m3s, "flow [m3/s]");
    return m3s * 1000.0 * kSecondsPerMin;
}

} // namespace gasest::units
