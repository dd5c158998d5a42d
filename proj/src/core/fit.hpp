#pragma once

#include "diagnostics.hpp"
#include "sampler.hpp"
#include "surfaces.hpp"

namespace lexmrf {

// Everything one fit produces, bundled for export and for the C API handle.
struct FitResult {
    MortalityData data;
    SamplerConfig config;
    Offset offset;
    std::vector<ChainOutput> chains;
    EstimateSet estimates; // pooled across chains
    SurfaceSet surfaces;
    ConvergenceReport report;
};

FitResult fit_model(const MortalityData &data, const SamplerConfig &config);

} // namespace lexmrf
