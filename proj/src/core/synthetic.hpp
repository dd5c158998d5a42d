#pragma once

#include "lexis.hpp"
#include "model.hpp"

#include <cstdint>

namespace lexmrf {

// Ground-truth recipe: a low-frequency smooth surface, an optional sloped
// shock band across time, and an optional single-year spike column.
struct SyntheticSpec {
    int n_years = 60;
    int n_ages = 60;
    int year_origin = 0;
    int age_origin = 0;
    double exposure = 1e5;       // constant person-years per knot
    double mu0 = 0.01;           // baseline intensity used for generation
    double smooth_amplitude = 0.5;
    double band_age_lo = -1.0;   // inclusive band interval in age units;
    double band_age_hi = -1.0;   // hi < lo disables the band
    double band_amplitude = 0.0;
    double band_slope = 0.0;     // band drift in ages per year
    int spike_year = INT32_MIN;  // calendar year; INT32_MIN disables
    double spike_amplitude = 0.0;
    std::uint64_t seed = 0;

    bool band_enabled() const { return band_age_hi >= band_age_lo && band_age_lo >= 0.0; }
};

struct SyntheticResult {
    MortalityData data;
    Matrix truth_x;
    Matrix truth_z;
    Offset offset; // the mu0 the counts were drawn with
};

// x is deterministic given the spec; y_tj ~ Poisson(mu0 * n * exp(x + z)).
SyntheticResult generate_synthetic(const SyntheticSpec &spec);

} // namespace lexmrf
