#pragma once

#include "grid.hpp"
#include "lexis.hpp"
#include "model.hpp"
#include "rng.hpp"

#include <cstdint>
#include <vector>

namespace lexmrf {

struct SamplerConfig {
    long long total_iterations = 100000;
    long long burn_in = 70000;
    int thin = 1;
    std::uint64_t seed = 0;
    Hyperparameters hyper;
    double init_x = 0.0;
    double init_z = 0.0;
    double init_gamma_x = 1.0;
    double init_gamma_z = 1.0;
    double proposal_scale_x = 0.1;
    double proposal_scale_z = 0.1;
    double target_accept_lo = 0.2;
    double target_accept_hi = 0.3;
    bool adapt_during_burn_in = true;
    int n_chains = 1;
    bool parallel_sweeps = false;
    int max_threads = 0; // 0 = LEXIS_THREADS or hardware concurrency

    // Test hooks: hold the precisions at their initial values (shrinks the
    // oracle integration dimension) and bypass the estimated offset.
    bool freeze_precisions = false;
    double fixed_mu0 = 0.0; // 0 = estimate via baseline_rate

    long long retained() const { return total_iterations - burn_in; }
    long long trace_length() const { return retained() / thin; }
};

void check_config(const SamplerConfig &config);

struct ChainOutput {
    Matrix mean_x;
    Matrix mean_z;
    double mean_gamma_x = 0.0;
    double mean_gamma_z = 0.0;
    std::vector<double> gamma_trace_x;
    std::vector<double> gamma_trace_z;
    Matrix acceptance_x; // post-burn-in per-knot acceptance rates
    Matrix acceptance_z;
    Matrix final_scale_x;
    Matrix final_scale_z;
    std::uint64_t seed_used = 0;
    long long retained = 0;
};

struct EstimateSet {
    Matrix x_hat;
    Matrix z_hat;
    double gamma_x_hat = 0.0;
    double gamma_z_hat = 0.0;
    Matrix mu_hat; // mu0 * exp(x_hat + z_hat)
    Offset offset;
};

// Potential differences for single-site proposals, shared by the sweep kernel
// and exercised directly in tests against the local_potential_* functions.
double sweep_delta_x(const FieldState &state, const MortalityData &data, const Offset &offset,
                     const NeighborPlan &plan, std::size_t i, double proposal);
double sweep_delta_z(const FieldState &state, const MortalityData &data, const Offset &offset,
                     std::size_t i, double proposal);

struct SweepScales {
    Matrix x;
    Matrix z;
    SweepScales() = default;
    SweepScales(const LexisLattice &lattice, double sx, double sz)
        : x(lattice.n_years(), lattice.n_ages(), sx), z(lattice.n_years(), lattice.n_ages(), sz) {}
};

struct SweepCounts {
    CountMatrix accepted_x;
    CountMatrix accepted_z;
};

// One full pass over the lattice in row-major order, x before z at each knot.
// Gaussian proposals centred on the current value; accept with
// min{1, exp(H(old) - H(new))}. Mutates state in place.
SweepCounts metropolis_sweep(FieldState &state, const MortalityData &data, const Offset &offset,
                             const SweepScales &scales, Rng &rng);

struct GammaConjugate {
    double alpha_x, beta_x;
    double alpha_z, beta_z;
};

// Conjugate Gamma parameters for the precision conditionals; the pairwise
// sum counts each undirected pair once.
GammaConjugate gamma_conjugate_params(const FieldState &state, const LexisLattice &lattice,
                                      const Hyperparameters &hyper);

void gibbs_update_precisions(FieldState &state, const LexisLattice &lattice,
                             const Hyperparameters &hyper, Rng &rng);

struct AdaptTarget {
    double lo = 0.2;
    double hi = 0.3;
};

inline constexpr int kAdaptWindowSweeps = 100;
inline constexpr double kMinProposalScale = 1e-4;
inline constexpr double kMaxProposalScale = 10.0;

// Diminishing-step scale adaptation: rates above the target band get bolder
// proposals, rates below get smaller ones, step exp(0.05/sqrt(window_index)).
void adapt_proposals(const CountMatrix &accepted, long long window_sweeps, int window_index,
                     Matrix &scales, AdaptTarget target);

ChainOutput run_chain(const MortalityData &data, const SamplerConfig &config);

// Independent chains with seeds config.seed + chain index, run concurrently
// up to the thread cap.
std::vector<ChainOutput> run_chains(const MortalityData &data, const SamplerConfig &config);

EstimateSet posterior_means(const ChainOutput &output, const Offset &offset);
EstimateSet pooled_means(const std::vector<ChainOutput> &outputs, const Offset &offset);

// Thread cap: explicit value if positive, else LEXIS_THREADS, else hardware.
int worker_thread_cap(int requested);

} // namespace lexmrf
