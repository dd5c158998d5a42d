#include "fit.hpp"

namespace lexmrf {

FitResult fit_model(const MortalityData &data, const SamplerConfig &config) {
    check_config(config);
    require_valid(data);
    FitResult result;
    result.data = data;
    result.config = config;
    result.offset = config.fixed_mu0 > 0.0 ? Offset::from_rate(config.fixed_mu0)
                                           : baseline_rate(data);
    result.chains = run_chains(data, config);
    result.estimates = pooled_means(result.chains, result.offset);
    result.surfaces = decompose(result.estimates, data);
    result.report = convergence_report(result.chains);
    return result;
}

} // namespace lexmrf
