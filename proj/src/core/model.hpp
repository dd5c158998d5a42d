#pragma once

#include "grid.hpp"
#include "lexis.hpp"

namespace lexmrf {

struct Hyperparameters {
    double alpha_x = 0.01;
    double beta_x = 0.01;
    double alpha_z = 0.01;
    double beta_z = 0.01;
};

void check_hyperparameters(const Hyperparameters &hyper);

// Current MCMC state: the smooth field x, the shock field z and the two
// precisions.
struct FieldState {
    Matrix x;
    Matrix z;
    double gamma_x = 1.0;
    double gamma_z = 1.0;

    static FieldState flat(const LexisLattice &lattice, double x0 = 0.0, double z0 = 0.0,
                           double gx = 1.0, double gz = 1.0);
};

struct Offset {
    double mu0 = 0.0;
    double log_mu0 = 0.0;
    static Offset from_rate(double mu0);
};

// Crude death rate over the whole surface: total deaths / total exposure.
Offset baseline_rate(const MortalityData &data);

// Values of |x + z| beyond this bound are treated as diverged proposals; the
// sampler rejects them instead of exponentiating.
inline constexpr double kLogScaleBound = 50.0;

// Local potential for the smooth field at one knot, with the field value
// there replaced by x_val. Non-finite return means the exponential
// overflowed and the caller must reject.
double local_potential_x(const FieldState &state, const MortalityData &data, const Offset &offset,
                         Knot knot, double x_val);

// Shock-field analogue; the pairwise prior term is replaced by the quadratic
// shock prior.
double local_potential_z(const FieldState &state, const MortalityData &data, const Offset &offset,
                         Knot knot, double z_val);

// Sum of squared differences over undirected neighbour pairs, each pair once.
double pair_energy(const Matrix &x, const LexisLattice &lattice);

// Log of the unnormalized joint posterior. Neighbour pairs are counted once;
// this agrees with the per-site double-counted form that carries an inner /2.
double log_posterior(const FieldState &state, const MortalityData &data, const Offset &offset,
                     const Hyperparameters &hyper);

} // namespace lexmrf
