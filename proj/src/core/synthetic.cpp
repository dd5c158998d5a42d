#include "synthetic.hpp"

#include "error.hpp"
#include "rng.hpp"

#include <cmath>
#include <numbers>

namespace lexmrf {

SyntheticResult generate_synthetic(const SyntheticSpec &spec) {
    if (!(spec.exposure >= 0.0) || !std::isfinite(spec.exposure))
        fail(ErrorCode::invalid_argument, "exposure must be finite and non-negative");
    if (!(spec.mu0 > 0.0) || !std::isfinite(spec.mu0))
        fail(ErrorCode::invalid_argument, "mu0 must be positive");
    if (!std::isfinite(spec.smooth_amplitude) || !std::isfinite(spec.band_amplitude) ||
        !std::isfinite(spec.band_slope) || !std::isfinite(spec.spike_amplitude))
        fail(ErrorCode::invalid_argument, "amplitudes must be finite");

    SyntheticResult result;
    result.data.lattice = build_lattice(spec.n_years, spec.n_ages, spec.year_origin,
                                        spec.age_origin);
    const LexisLattice &lat = result.data.lattice;

    if (spec.band_enabled()) {
        const double age_min = lat.age_origin();
        const double age_max = lat.age_origin() + lat.n_ages() - 1;
        if (spec.band_age_lo < age_min || spec.band_age_hi > age_max)
            fail(ErrorCode::invalid_argument, "band interval outside the age domain");
    }
    if (spec.spike_year != INT32_MIN &&
        (spec.spike_year < lat.year_origin() ||
         spec.spike_year > lat.year_origin() + lat.n_years() - 1))
        fail(ErrorCode::invalid_argument, "spike year outside the time domain");

    result.truth_x = Matrix(lat.n_years(), lat.n_ages(), 0.0);
    result.truth_z = Matrix(lat.n_years(), lat.n_ages(), 0.0);
    result.data.deaths = CountMatrix(lat.n_years(), lat.n_ages(), 0);
    result.data.exposures = Matrix(lat.n_years(), lat.n_ages(), spec.exposure);
    result.data.label = "synthetic";
    result.offset = Offset::from_rate(spec.mu0);

    const double two_pi = 2.0 * std::numbers::pi;
    Rng rng(spec.seed);
    for (int t = 0; t < lat.n_years(); ++t) {
        for (int j = 0; j < lat.n_ages(); ++j) {
            const double x = spec.smooth_amplitude *
                             (std::sin(two_pi * t / lat.n_years()) +
                              std::cos(two_pi * j / lat.n_ages())) /
                             2.0;
            double z = 0.0;
            if (spec.band_enabled()) {
                const double age = static_cast<double>(lat.age_origin() + j);
                const double drift = spec.band_slope * t;
                if (age >= spec.band_age_lo + drift && age <= spec.band_age_hi + drift)
                    z += spec.band_amplitude;
            }
            if (spec.spike_year != INT32_MIN && lat.year_origin() + t == spec.spike_year)
                z += spec.spike_amplitude;
            result.truth_x(t, j) = x;
            result.truth_z(t, j) = z;
            const double mean = spec.mu0 * spec.exposure * std::exp(x + z);
            result.data.deaths(t, j) = rng.poisson(mean);
        }
    }
    return result;
}

} // namespace lexmrf
