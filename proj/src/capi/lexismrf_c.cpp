#include "lexismrf.h"

#include "../core/diagnostics.hpp"
#include "../core/error.hpp"
#include "../core/fit.hpp"
#include "../core/hmd.hpp"
#include "../core/matrix_io.hpp"
#include "../core/sampler.hpp"
#include "../core/surfaces.hpp"
#include "../core/synthetic.hpp"

#include <cmath>
#include <cstring>
#include <string>

struct lexmrf_data {
    lexmrf::MortalityData impl;
};

struct lexmrf_fit {
    lexmrf::FitResult impl;
};

namespace {

thread_local std::string g_last_error = "no error";

int set_error(lexmrf::ErrorCode code, const std::string &message) {
    g_last_error = message;
    return static_cast<int>(code);
}

template <class Fn>
int guarded(Fn &&fn) {
    try {
        return fn();
    } catch (const lexmrf::Error &e) {
        return set_error(e.code(), e.what());
    } catch (const std::bad_alloc &) {
        return set_error(lexmrf::ErrorCode::internal, "out of memory");
    } catch (const std::exception &e) {
        return set_error(lexmrf::ErrorCode::internal, e.what());
    } catch (...) {
        return set_error(lexmrf::ErrorCode::internal, "unknown failure");
    }
}

int require(bool cond, const char *what) {
    if (cond)
        return LEXMRF_OK;
    return set_error(lexmrf::ErrorCode::invalid_argument, what);
}

const lexmrf::Matrix *select_matrix(const lexmrf::FitResult &fit, int which) {
    switch (which) {
    case LEXMRF_SURFACE_SM:
        return &fit.surfaces.s_m;
    case LEXMRF_SURFACE_SB:
        return &fit.surfaces.s_b;
    case LEXMRF_SURFACE_S1:
        return &fit.surfaces.s_1;
    case LEXMRF_SURFACE_S2:
        return &fit.surfaces.s_2;
    case LEXMRF_FIELD_XHAT:
        return &fit.estimates.x_hat;
    case LEXMRF_FIELD_ZHAT:
        return &fit.estimates.z_hat;
    case LEXMRF_FIELD_MUHAT:
        return &fit.estimates.mu_hat;
    default:
        return nullptr;
    }
}

} // namespace

extern "C" {

const char *lexmrf_version(void) { return "0.1.0"; }

const char *lexmrf_last_error(void) { return g_last_error.c_str(); }

int lexmrf_data_from_arrays(int n_years, int n_ages, int year_origin, int age_origin,
                            const double *deaths, const double *exposures, const char *label,
                            lexmrf_data **out) {
    if (int rc = require(deaths && exposures && out, "null pointer argument"))
        return rc;
    return guarded([&] {
        lexmrf::MortalityData data;
        data.lattice = lexmrf::build_lattice(n_years, n_ages, year_origin, age_origin);
        data.deaths = lexmrf::CountMatrix(n_years, n_ages, 0);
        data.exposures = lexmrf::Matrix(n_years, n_ages, 0.0);
        data.label = label ? label : "";
        for (std::size_t i = 0; i < data.deaths.size(); ++i) {
            const double d = deaths[i];
            if (std::isfinite(d)) {
                const long long c = static_cast<long long>(std::llround(d));
                if (std::abs(d - static_cast<double>(c)) > 1e-6)
                    ++data.rounded_cells;
                data.deaths[i] = c;
            } else {
                data.deaths[i] = -1; // surfaces in validate_data as negative
            }
            data.exposures[i] = exposures[i];
        }
        *out = new lexmrf_data{std::move(data)};
        return LEXMRF_OK;
    });
}

int lexmrf_data_load_hmd(const char *deaths_path, const char *exposures_path, const char *sex,
                         int year_lo, int year_hi, int age_lo, int age_hi, const char *label,
                         lexmrf_data **out) {
    if (int rc = require(deaths_path && exposures_path && sex && out, "null pointer argument"))
        return rc;
    return guarded([&] {
        const lexmrf::HmdTable deaths = lexmrf::parse_hmd_file(deaths_path);
        const lexmrf::HmdTable exposures = lexmrf::parse_hmd_file(exposures_path);
        if (year_lo > year_hi) {
            year_lo = std::max(deaths.min_year(), exposures.min_year());
            year_hi = std::min(deaths.max_year(), exposures.max_year());
        }
        if (age_lo > age_hi) {
            age_lo = 0;
            age_hi = 0;
            bool first = true;
            for (const auto &row : deaths.rows) {
                const int age = lexmrf::parse_age_label(row.age_label);
                if (first || age < age_lo)
                    age_lo = age;
                if (first || age > age_hi)
                    age_hi = age;
                first = false;
            }
        }
        lexmrf::MortalityData data = lexmrf::to_mortality_data(
            deaths, exposures, lexmrf::parse_sex(sex), year_lo, year_hi, age_lo, age_hi,
            label ? label : deaths_path);
        *out = new lexmrf_data{std::move(data)};
        return LEXMRF_OK;
    });
}

int lexmrf_data_aggregate(const lexmrf_data *const *parts, size_t count, lexmrf_data **out) {
    if (int rc = require(parts && out, "null pointer argument"))
        return rc;
    return guarded([&] {
        std::vector<lexmrf::MortalityData> datasets;
        datasets.reserve(count);
        for (size_t i = 0; i < count; ++i) {
            if (!parts[i])
                lexmrf::fail(lexmrf::ErrorCode::invalid_argument, "null dataset in aggregate");
            datasets.push_back(parts[i]->impl);
        }
        *out = new lexmrf_data{lexmrf::aggregate(datasets)};
        return LEXMRF_OK;
    });
}

void lexmrf_data_free(lexmrf_data *data) { delete data; }

int lexmrf_data_dims(const lexmrf_data *data, int *n_years, int *n_ages, int *year_origin,
                     int *age_origin) {
    if (int rc = require(data != nullptr, "null data handle"))
        return rc;
    const auto &lat = data->impl.lattice;
    if (n_years)
        *n_years = lat.n_years();
    if (n_ages)
        *n_ages = lat.n_ages();
    if (year_origin)
        *year_origin = lat.year_origin();
    if (age_origin)
        *age_origin = lat.age_origin();
    return LEXMRF_OK;
}

const char *lexmrf_data_label(const lexmrf_data *data) {
    return data ? data->impl.label.c_str() : "";
}

namespace {

int copy_matrix_out(const lexmrf::Matrix &m, double *buf, size_t len) {
    if (int rc = require(buf != nullptr, "null output buffer"))
        return rc;
    if (int rc = require(len >= m.size(), "output buffer too small"))
        return rc;
    std::memcpy(buf, m.data(), m.size() * sizeof(double));
    return LEXMRF_OK;
}

} // namespace

int lexmrf_data_deaths(const lexmrf_data *data, double *buf, size_t len) {
    if (int rc = require(data != nullptr, "null data handle"))
        return rc;
    if (int rc = require(buf && len >= data->impl.deaths.size(), "output buffer too small"))
        return rc;
    for (std::size_t i = 0; i < data->impl.deaths.size(); ++i)
        buf[i] = static_cast<double>(data->impl.deaths[i]);
    return LEXMRF_OK;
}

int lexmrf_data_exposures(const lexmrf_data *data, double *buf, size_t len) {
    if (int rc = require(data != nullptr, "null data handle"))
        return rc;
    return copy_matrix_out(data->impl.exposures, buf, len);
}

int lexmrf_data_validate(const lexmrf_data *data, long long *violations,
                         long long *zero_exposure_knots) {
    if (int rc = require(data != nullptr, "null data handle"))
        return rc;
    return guarded([&] {
        const lexmrf::ValidationReport report = lexmrf::validate_data(data->impl);
        if (violations)
            *violations = static_cast<long long>(report.issues.size());
        if (zero_exposure_knots)
            *zero_exposure_knots = report.zero_exposure_knots;
        if (!report.ok()) {
            std::string msg = "validation issues:";
            const std::size_t shown = std::min<std::size_t>(report.issues.size(), 8);
            for (std::size_t i = 0; i < shown; ++i) {
                const auto &issue = report.issues[i];
                msg += " (" + std::to_string(issue.knot.t) + "," + std::to_string(issue.knot.j) +
                       ") " + issue.what + ";";
            }
            g_last_error = msg;
        }
        return LEXMRF_OK;
    });
}

int lexmrf_data_adjustments(const lexmrf_data *data, long long *rounded_cells,
                            long long *forced_zero_cells) {
    if (int rc = require(data != nullptr, "null data handle"))
        return rc;
    if (rounded_cells)
        *rounded_cells = data->impl.rounded_cells;
    if (forced_zero_cells)
        *forced_zero_cells = data->impl.forced_zero_cells;
    return LEXMRF_OK;
}

int lexmrf_data_write_hmd(const lexmrf_data *data, const char *deaths_path,
                          const char *exposures_path) {
    if (int rc = require(data && deaths_path && exposures_path, "null pointer argument"))
        return rc;
    return guarded([&] {
        lexmrf::write_hmd_file(deaths_path, lexmrf::to_hmd_table(data->impl, true));
        lexmrf::write_hmd_file(exposures_path, lexmrf::to_hmd_table(data->impl, false));
        return LEXMRF_OK;
    });
}

void lexmrf_synth_spec_init(lexmrf_synth_spec *spec) {
    if (!spec)
        return;
    *spec = lexmrf_synth_spec{};
    spec->n_years = 60;
    spec->n_ages = 60;
    spec->year_origin = 0;
    spec->age_origin = 0;
    spec->exposure = 1e5;
    spec->mu0 = 0.01;
    spec->smooth_amplitude = 0.5;
    spec->band_age_lo = 0.0;
    spec->band_age_hi = -1.0; /* disabled */
    spec->band_amplitude = 0.0;
    spec->band_slope = 0.0;
    spec->has_spike = 0;
    spec->spike_year = 0;
    spec->spike_amplitude = 0.0;
    spec->seed = 0;
}

int lexmrf_synthesize(const lexmrf_synth_spec *spec, lexmrf_data **data, double *truth_x,
                      double *truth_z, size_t truth_len) {
    if (int rc = require(spec && data, "null pointer argument"))
        return rc;
    return guarded([&] {
        lexmrf::SyntheticSpec s;
        s.n_years = spec->n_years;
        s.n_ages = spec->n_ages;
        s.year_origin = spec->year_origin;
        s.age_origin = spec->age_origin;
        s.exposure = spec->exposure;
        s.mu0 = spec->mu0;
        s.smooth_amplitude = spec->smooth_amplitude;
        s.band_age_lo = spec->band_age_lo;
        s.band_age_hi = spec->band_age_hi;
        s.band_amplitude = spec->band_amplitude;
        s.band_slope = spec->band_slope;
        if (spec->has_spike) {
            s.spike_year = spec->spike_year;
            s.spike_amplitude = spec->spike_amplitude;
        }
        s.seed = spec->seed;
        lexmrf::SyntheticResult result = lexmrf::generate_synthetic(s);
        if (truth_x) {
            if (int rc = copy_matrix_out(result.truth_x, truth_x, truth_len))
                return rc;
        }
        if (truth_z) {
            if (int rc = copy_matrix_out(result.truth_z, truth_z, truth_len))
                return rc;
        }
        *data = new lexmrf_data{std::move(result.data)};
        return LEXMRF_OK;
    });
}

void lexmrf_fit_config_init(lexmrf_fit_config *config) {
    if (!config)
        return;
    const lexmrf::SamplerConfig d;
    *config = lexmrf_fit_config{};
    config->total_iterations = d.total_iterations;
    config->burn_in = d.burn_in;
    config->thin = d.thin;
    config->seed = d.seed;
    config->n_chains = d.n_chains;
    config->alpha_x = d.hyper.alpha_x;
    config->beta_x = d.hyper.beta_x;
    config->alpha_z = d.hyper.alpha_z;
    config->beta_z = d.hyper.beta_z;
    config->init_x = d.init_x;
    config->init_z = d.init_z;
    config->init_gamma_x = d.init_gamma_x;
    config->init_gamma_z = d.init_gamma_z;
    config->proposal_scale_x = d.proposal_scale_x;
    config->proposal_scale_z = d.proposal_scale_z;
    config->target_accept_lo = d.target_accept_lo;
    config->target_accept_hi = d.target_accept_hi;
    config->adapt_during_burn_in = d.adapt_during_burn_in ? 1 : 0;
    config->parallel_sweeps = d.parallel_sweeps ? 1 : 0;
    config->max_threads = d.max_threads;
    config->freeze_precisions = d.freeze_precisions ? 1 : 0;
    config->fixed_mu0 = d.fixed_mu0;
}

int lexmrf_fit_run(const lexmrf_data *data, const lexmrf_fit_config *config, lexmrf_fit **out) {
    if (int rc = require(data && config && out, "null pointer argument"))
        return rc;
    return guarded([&] {
        lexmrf::SamplerConfig c;
        c.total_iterations = config->total_iterations;
        c.burn_in = config->burn_in;
        c.thin = config->thin;
        c.seed = config->seed;
        c.n_chains = config->n_chains;
        c.hyper = {config->alpha_x, config->beta_x, config->alpha_z, config->beta_z};
        c.init_x = config->init_x;
        c.init_z = config->init_z;
        c.init_gamma_x = config->init_gamma_x;
        c.init_gamma_z = config->init_gamma_z;
        c.proposal_scale_x = config->proposal_scale_x;
        c.proposal_scale_z = config->proposal_scale_z;
        c.target_accept_lo = config->target_accept_lo;
        c.target_accept_hi = config->target_accept_hi;
        c.adapt_during_burn_in = config->adapt_during_burn_in != 0;
        c.parallel_sweeps = config->parallel_sweeps != 0;
        c.max_threads = config->max_threads;
        c.freeze_precisions = config->freeze_precisions != 0;
        c.fixed_mu0 = config->fixed_mu0;
        *out = new lexmrf_fit{lexmrf::fit_model(data->impl, c)};
        return LEXMRF_OK;
    });
}

void lexmrf_fit_free(lexmrf_fit *fit) { delete fit; }

int lexmrf_fit_mu0(const lexmrf_fit *fit, double *mu0) {
    if (int rc = require(fit && mu0, "null pointer argument"))
        return rc;
    *mu0 = fit->impl.offset.mu0;
    return LEXMRF_OK;
}

int lexmrf_fit_gammas(const lexmrf_fit *fit, double *gamma_x, double *gamma_z) {
    if (int rc = require(fit != nullptr, "null fit handle"))
        return rc;
    if (gamma_x)
        *gamma_x = fit->impl.estimates.gamma_x_hat;
    if (gamma_z)
        *gamma_z = fit->impl.estimates.gamma_z_hat;
    return LEXMRF_OK;
}

int lexmrf_fit_precision_ratio(const lexmrf_fit *fit, double *rho) {
    if (int rc = require(fit && rho, "null pointer argument"))
        return rc;
    return guarded([&] {
        *rho = lexmrf::precision_ratio(fit->impl.estimates).rho;
        return LEXMRF_OK;
    });
}

int lexmrf_fit_cluster(const lexmrf_fit *fit, const char **name) {
    if (int rc = require(fit && name, "null pointer argument"))
        return rc;
    return guarded([&] {
        *name = lexmrf::cluster_name(lexmrf::precision_ratio(fit->impl.estimates).cluster);
        return LEXMRF_OK;
    });
}

int lexmrf_fit_surface(const lexmrf_fit *fit, int which, double *buf, size_t len) {
    if (int rc = require(fit != nullptr, "null fit handle"))
        return rc;
    const lexmrf::Matrix *m = select_matrix(fit->impl, which);
    if (int rc = require(m != nullptr, "unknown surface selector"))
        return rc;
    return copy_matrix_out(*m, buf, len);
}

int lexmrf_fit_acceptance(const lexmrf_fit *fit, double *rate_x, double *rate_z) {
    if (int rc = require(fit != nullptr, "null fit handle"))
        return rc;
    if (rate_x)
        *rate_x = fit->impl.report.accept_x.global;
    if (rate_z)
        *rate_z = fit->impl.report.accept_z.global;
    return LEXMRF_OK;
}

int lexmrf_fit_chain_count(const lexmrf_fit *fit) {
    return fit ? static_cast<int>(fit->impl.chains.size()) : 0;
}

int lexmrf_fit_trace_length(const lexmrf_fit *fit, long long *length) {
    if (int rc = require(fit && length, "null pointer argument"))
        return rc;
    *length = fit->impl.chains.empty()
                  ? 0
                  : static_cast<long long>(fit->impl.chains[0].gamma_trace_x.size());
    return LEXMRF_OK;
}

int lexmrf_fit_trace(const lexmrf_fit *fit, int which, int chain, double *buf, size_t len) {
    if (int rc = require(fit && buf, "null pointer argument"))
        return rc;
    if (int rc = require(chain >= 0 && chain < static_cast<int>(fit->impl.chains.size()),
                         "chain index out of range"))
        return rc;
    if (int rc = require(which == LEXMRF_TRACE_GAMMA_X || which == LEXMRF_TRACE_GAMMA_Z,
                         "unknown trace selector"))
        return rc;
    const auto &trace = which == LEXMRF_TRACE_GAMMA_X ? fit->impl.chains[chain].gamma_trace_x
                                                      : fit->impl.chains[chain].gamma_trace_z;
    if (int rc = require(len >= trace.size(), "output buffer too small"))
        return rc;
    std::memcpy(buf, trace.data(), trace.size() * sizeof(double));
    return LEXMRF_OK;
}

int lexmrf_fit_psrf(const lexmrf_fit *fit, double *psrf_gamma_x, double *psrf_gamma_z) {
    if (int rc = require(fit != nullptr, "null fit handle"))
        return rc;
    if (int rc = require(fit->impl.report.psrf_available,
                         "PSRF needs at least 2 chains with trace length >= 10"))
        return rc;
    if (psrf_gamma_x)
        *psrf_gamma_x = fit->impl.report.psrf_gamma_x;
    if (psrf_gamma_z)
        *psrf_gamma_z = fit->impl.report.psrf_gamma_z;
    return LEXMRF_OK;
}

int lexmrf_fit_conditional_sd(const lexmrf_fit *fit, int degree, double *sd) {
    if (int rc = require(fit && sd, "null pointer argument"))
        return rc;
    return guarded([&] {
        *sd = lexmrf::conditional_sd(fit->impl.estimates.gamma_x_hat,
                                     fit->impl.estimates.gamma_z_hat, degree);
        return LEXMRF_OK;
    });
}

int lexmrf_fit_profile(const lexmrf_fit *fit, const char *kind, int index, double *axis,
                       double *total, double *primary, double *secondary, double *empirical,
                       size_t len, size_t *out_len) {
    if (int rc = require(fit && kind && out_len, "null pointer argument"))
        return rc;
    return guarded([&] {
        const lexmrf::Profile p = lexmrf::extract_profile(
            fit->impl.surfaces, lexmrf::parse_profile_kind(kind), index);
        *out_len = p.axis.size();
        auto emit = [&](double *dst, const std::vector<double> &src) {
            if (!dst)
                return LEXMRF_OK;
            if (len < src.size())
                return set_error(lexmrf::ErrorCode::invalid_argument,
                                 "profile buffer too small");
            std::memcpy(dst, src.data(), src.size() * sizeof(double));
            return LEXMRF_OK;
        };
        if (int rc = emit(axis, p.axis))
            return rc;
        if (int rc = emit(total, p.total))
            return rc;
        if (int rc = emit(primary, p.primary))
            return rc;
        if (int rc = emit(secondary, p.secondary))
            return rc;
        if (int rc = emit(empirical, p.empirical))
            return rc;
        return LEXMRF_OK;
    });
}

int lexmrf_fit_write_surface_csv(const lexmrf_fit *fit, int which, const char *path) {
    if (int rc = require(fit && path, "null pointer argument"))
        return rc;
    const lexmrf::Matrix *m = select_matrix(fit->impl, which);
    if (int rc = require(m != nullptr, "unknown surface selector"))
        return rc;
    return guarded([&] {
        lexmrf::write_matrix_csv(path, fit->impl.data.lattice, *m);
        return LEXMRF_OK;
    });
}

int lexmrf_fit_write_traces_csv(const lexmrf_fit *fit, const char *path) {
    if (int rc = require(fit && path, "null pointer argument"))
        return rc;
    return guarded([&] {
        lexmrf::write_traces_csv(path, fit->impl.chains);
        return LEXMRF_OK;
    });
}

int lexmrf_fit_write_summary_json(const lexmrf_fit *fit, const char *path) {
    if (int rc = require(fit && path, "null pointer argument"))
        return rc;
    return guarded([&] {
        lexmrf::write_summary_json(path, fit->impl);
        return LEXMRF_OK;
    });
}

int lexmrf_fit_write_heatmap_pgm(const lexmrf_fit *fit, int which, const char *path,
                                 double *out_min, double *out_max) {
    if (int rc = require(fit && path, "null pointer argument"))
        return rc;
    const lexmrf::Matrix *m = select_matrix(fit->impl, which);
    if (int rc = require(m != nullptr, "unknown surface selector"))
        return rc;
    return guarded([&] {
        const lexmrf::HeatmapRange range = lexmrf::write_heatmap_pgm(path, *m);
        if (out_min)
            *out_min = range.min;
        if (out_max)
            *out_max = range.max;
        return LEXMRF_OK;
    });
}

int lexmrf_write_matrix_csv(const char *path, int n_years, int n_ages, int year_origin,
                            int age_origin, const double *values) {
    if (int rc = require(path && values, "null pointer argument"))
        return rc;
    return guarded([&] {
        const auto lattice = lexmrf::LexisLattice::unchecked(n_years, n_ages, year_origin,
                                                             age_origin);
        lexmrf::Matrix m(n_years, n_ages, 0.0);
        std::memcpy(m.data(), values, m.size() * sizeof(double));
        lexmrf::write_matrix_csv(path, lattice, m);
        return LEXMRF_OK;
    });
}

} // extern "C"
