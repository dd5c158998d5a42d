#include "model.hpp"

#include "error.hpp"

#include <cmath>

namespace lexmrf {

void check_hyperparameters(const Hyperparameters &hyper) {
    if (!(hyper.alpha_x > 0.0) || !(hyper.beta_x > 0.0) || !(hyper.alpha_z > 0.0) ||
        !(hyper.beta_z > 0.0))
        fail(ErrorCode::invalid_argument, "Gamma hyperparameters must be strictly positive");
}

FieldState FieldState::flat(const LexisLattice &lattice, double x0, double z0, double gx,
                            double gz) {
    FieldState s;
    s.x = Matrix(lattice.n_years(), lattice.n_ages(), x0);
    s.z = Matrix(lattice.n_years(), lattice.n_ages(), z0);
    s.gamma_x = gx;
    s.gamma_z = gz;
    return s;
}

Offset Offset::from_rate(double mu0) {
    if (!(mu0 > 0.0) || !std::isfinite(mu0))
        fail(ErrorCode::invalid_argument, "offset rate must be positive and finite");
    return Offset{mu0, std::log(mu0)};
}

Offset baseline_rate(const MortalityData &data) {
    long double total_deaths = 0.0L;
    long double total_exposure = 0.0L;
    for (std::size_t i = 0; i < data.deaths.size(); ++i) {
        total_deaths += data.deaths[i];
        total_exposure += data.exposures[i];
    }
    if (!(total_exposure > 0.0L))
        fail(ErrorCode::invalid_argument, "total exposure is zero; no baseline rate");
    if (!(total_deaths > 0.0L))
        fail(ErrorCode::invalid_argument, "total death count is zero; log-offset undefined");
    return Offset::from_rate(static_cast<double>(total_deaths / total_exposure));
}

double local_potential_x(const FieldState &state, const MortalityData &data, const Offset &offset,
                         Knot knot, double x_val) {
    const auto &lat = data.lattice;
    if (!lat.contains(knot))
        fail(ErrorCode::invalid_argument, "knot outside lattice");
    const std::size_t i = lat.index_of(knot);
    const double n = data.exposures[i];
    const double y = static_cast<double>(data.deaths[i]);
    double h = 0.0;
    if (n > 0.0)
        h = offset.mu0 * n * std::exp(x_val + state.z[i]) - y * x_val;
    double prior = 0.0;
    for (const Knot &nb : neighbors(lat, knot)) {
        const double d = x_val - state.x[lat.index_of(nb)];
        prior += d * d;
    }
    return h + 0.5 * state.gamma_x * prior;
}

double local_potential_z(const FieldState &state, const MortalityData &data, const Offset &offset,
                         Knot knot, double z_val) {
    const auto &lat = data.lattice;
    if (!lat.contains(knot))
        fail(ErrorCode::invalid_argument, "knot outside lattice");
    const std::size_t i = lat.index_of(knot);
    const double n = data.exposures[i];
    const double y = static_cast<double>(data.deaths[i]);
    double h = 0.0;
    if (n > 0.0)
        h = offset.mu0 * n * std::exp(state.x[i] + z_val) - y * z_val;
    return h + 0.5 * state.gamma_z * z_val * z_val;
}

double pair_energy(const Matrix &x, const LexisLattice &lattice) {
    if (x.rows() != lattice.n_years() || x.cols() != lattice.n_ages())
        fail(ErrorCode::invalid_argument, "field shape does not match lattice");
    const int T = lattice.n_years();
    const int A = lattice.n_ages();
    double energy = 0.0;
    // Each undirected pair once: link each knot to its east, south, south-east
    // and south-west neighbours.
    for (int t = 0; t < T; ++t) {
        for (int j = 0; j < A; ++j) {
            const double v = x(t, j);
            if (j + 1 < A) {
                const double d = v - x(t, j + 1);
                energy += d * d;
            }
            if (t + 1 < T) {
                const double d = v - x(t + 1, j);
                energy += d * d;
                if (j + 1 < A) {
                    const double d2 = v - x(t + 1, j + 1);
                    energy += d2 * d2;
                }
                if (j > 0) {
                    const double d3 = v - x(t + 1, j - 1);
                    energy += d3 * d3;
                }
            }
        }
    }
    return energy;
}

double log_posterior(const FieldState &state, const MortalityData &data, const Offset &offset,
                     const Hyperparameters &hyper) {
    const auto &lat = data.lattice;
    if (!state.x.same_shape(state.z) || state.x.rows() != lat.n_years() ||
        state.x.cols() != lat.n_ages())
        fail(ErrorCode::invalid_argument, "state shape does not match lattice");
    if (!(state.gamma_x > 0.0) || !(state.gamma_z > 0.0))
        fail(ErrorCode::invalid_argument, "precisions must be positive");

    double lp = 0.0;
    for (std::size_t i = 0; i < state.x.size(); ++i) {
        const double n = data.exposures[i];
        const double s = state.x[i] + state.z[i];
        if (n > 0.0) {
            const double y = static_cast<double>(data.deaths[i]);
            lp += y * s - offset.mu0 * n * std::exp(s);
        }
        lp -= 0.5 * state.gamma_z * state.z[i] * state.z[i];
    }
    lp -= 0.5 * state.gamma_x * pair_energy(state.x, lat);

    const double half_n = 0.5 * static_cast<double>(lat.knot_count());
    lp += -hyper.beta_x * state.gamma_x + (hyper.alpha_x - 1.0 + half_n) * std::log(state.gamma_x);
    lp += -hyper.beta_z * state.gamma_z + (hyper.alpha_z - 1.0 + half_n) * std::log(state.gamma_z);

    if (!std::isfinite(lp))
        fail(ErrorCode::numeric, "log-posterior is not finite");
    return lp;
}

} // namespace lexmrf
