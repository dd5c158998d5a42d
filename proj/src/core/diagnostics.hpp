#pragma once

#include "sampler.hpp"

#include <vector>

namespace lexmrf {

// Gelman-Rubin potential scale reduction factor over >= 2 equal-length
// traces: R = sqrt(((K-1)/K * W + B/K) / W) with W the mean within-chain
// variance and B the between-chain variance of chain means scaled by K.
double psrf(const std::vector<std::vector<double>> &traces);

struct AcceptanceSummary {
    double global = 0.0;
    double knot_min = 0.0;
    double knot_median = 0.0;
    double knot_max = 0.0;
    bool flagged = false; // global outside [0.15, 0.35]
};

AcceptanceSummary summarize_acceptance(const Matrix &rates);

struct ConvergenceReport {
    int chain_count = 0;
    long long retained = 0;
    bool psrf_available = false;
    double psrf_gamma_x = 0.0;
    double psrf_gamma_z = 0.0;
    AcceptanceSummary accept_x;
    AcceptanceSummary accept_z;
};

// PSRF is computed only when >= 2 chains with trace length >= 10 are
// available; acceptance summaries pool the per-knot rates across chains.
ConvergenceReport convergence_report(const std::vector<ChainOutput> &chains);

} // namespace lexmrf
