/* lexismrf: Bayesian decomposition of Lexis mortality surfaces.
 *
 * C interface over the C++ core. All functions return LEXMRF_OK (0) or an
 * error code; lexmrf_last_error() describes the most recent failure on the
 * calling thread. Handles are opaque and freed with the matching *_free.
 * Matrices cross the boundary as row-major double buffers of length
 * n_years * n_ages (time index outer, age index inner); NaN marks a gap.
 */
#ifndef LEXISMRF_H
#define LEXISMRF_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#define LEXMRF_OK 0
#define LEXMRF_E_ARG 1        /* invalid argument or precondition */
#define LEXMRF_E_PARSE 2      /* malformed input file */
#define LEXMRF_E_VALIDATION 3 /* data violates model invariants */
#define LEXMRF_E_COVERAGE 4   /* missing cells / empty domain intersection */
#define LEXMRF_E_NUMERIC 5    /* non-finite result */
#define LEXMRF_E_IO 6         /* file system failure */
#define LEXMRF_E_INTERNAL 7

const char *lexmrf_version(void);

/* Message for the last failure on this thread; never NULL. */
const char *lexmrf_last_error(void);

typedef struct lexmrf_data lexmrf_data;
typedef struct lexmrf_fit lexmrf_fit;

/* ---- data ------------------------------------------------------------- */

/* Death counts are rounded to the nearest integer; exposures stay real. */
int lexmrf_data_from_arrays(int n_years, int n_ages, int year_origin, int age_origin,
                            const double *deaths, const double *exposures, const char *label,
                            lexmrf_data **out);

/* Loads an HMD 1x1 deaths/exposures pair for one sex ("female", "male",
 * "total") on the inclusive rectangle [year_lo, year_hi] x [age_lo, age_hi].
 * Pass lo > hi to use the full range shared by both files for that axis. */
int lexmrf_data_load_hmd(const char *deaths_path, const char *exposures_path, const char *sex,
                         int year_lo, int year_hi, int age_lo, int age_hi, const char *label,
                         lexmrf_data **out);

/* Sums >= 2 datasets over the intersection of their year domains. */
int lexmrf_data_aggregate(const lexmrf_data *const *parts, size_t count, lexmrf_data **out);

void lexmrf_data_free(lexmrf_data *data);

int lexmrf_data_dims(const lexmrf_data *data, int *n_years, int *n_ages, int *year_origin,
                     int *age_origin);
const char *lexmrf_data_label(const lexmrf_data *data);
int lexmrf_data_deaths(const lexmrf_data *data, double *buf, size_t len);
int lexmrf_data_exposures(const lexmrf_data *data, double *buf, size_t len);

/* Counts invariant violations and zero-exposure knots; returns LEXMRF_OK
 * even when violations exist (inspection, not enforcement). */
int lexmrf_data_validate(const lexmrf_data *data, long long *violations,
                         long long *zero_exposure_knots);

/* Ingestion bookkeeping: cells with fractional deaths rounded, and cells
 * where deaths were dropped to zero at zero exposure. */
int lexmrf_data_adjustments(const lexmrf_data *data, long long *rounded_cells,
                            long long *forced_zero_cells);

/* Writes the dataset as an HMD-layout pair (same value in all three sex
 * columns, so the files re-ingest under any sex). */
int lexmrf_data_write_hmd(const lexmrf_data *data, const char *deaths_path,
                          const char *exposures_path);

/* ---- synthetic ground truth ------------------------------------------- */

typedef struct lexmrf_synth_spec {
    int n_years;
    int n_ages;
    int year_origin;
    int age_origin;
    double exposure;         /* constant person-years per knot */
    double mu0;              /* generation baseline intensity */
    double smooth_amplitude; /* amplitude of the low-frequency surface */
    double band_age_lo;      /* inclusive age interval of the shock band; */
    double band_age_hi;      /*   hi < lo disables the band */
    double band_amplitude;
    double band_slope; /* band drift in ages per year */
    int has_spike;
    int spike_year; /* calendar year of the spike column */
    double spike_amplitude;
    uint64_t seed;
} lexmrf_synth_spec;

void lexmrf_synth_spec_init(lexmrf_synth_spec *spec);

/* truth_x / truth_z may be NULL or buffers of n_years * n_ages doubles. */
int lexmrf_synthesize(const lexmrf_synth_spec *spec, lexmrf_data **data, double *truth_x,
                      double *truth_z, size_t truth_len);

/* ---- fitting ----------------------------------------------------------- */

typedef struct lexmrf_fit_config {
    long long total_iterations; /* default 100000 */
    long long burn_in;          /* default 70000 */
    int thin;                   /* default 1 */
    uint64_t seed;
    int n_chains; /* chains use seeds seed, seed+1, ... */
    double alpha_x, beta_x, alpha_z, beta_z;
    double init_x, init_z;
    double init_gamma_x, init_gamma_z;
    double proposal_scale_x, proposal_scale_z;
    double target_accept_lo, target_accept_hi;
    int adapt_during_burn_in;
    int parallel_sweeps;
    int max_threads; /* 0 = LEXIS_THREADS env or hardware */
    /* test hooks */
    int freeze_precisions;
    double fixed_mu0; /* 0 = estimate the offset from the data */
} lexmrf_fit_config;

void lexmrf_fit_config_init(lexmrf_fit_config *config);

int lexmrf_fit_run(const lexmrf_data *data, const lexmrf_fit_config *config, lexmrf_fit **out);
void lexmrf_fit_free(lexmrf_fit *fit);

/* ---- fit results -------------------------------------------------------- */

#define LEXMRF_SURFACE_SM 0    /* log empirical rates (NaN gaps) */
#define LEXMRF_SURFACE_SB 1    /* log(mu0) + x_hat + z_hat */
#define LEXMRF_SURFACE_S1 2    /* log(mu0) + x_hat */
#define LEXMRF_SURFACE_S2 3    /* z_hat */
#define LEXMRF_FIELD_XHAT 4
#define LEXMRF_FIELD_ZHAT 5
#define LEXMRF_FIELD_MUHAT 6   /* mu0 * exp(x_hat + z_hat) */

#define LEXMRF_TRACE_GAMMA_X 0
#define LEXMRF_TRACE_GAMMA_Z 1

int lexmrf_fit_mu0(const lexmrf_fit *fit, double *mu0);
int lexmrf_fit_gammas(const lexmrf_fit *fit, double *gamma_x, double *gamma_z);
int lexmrf_fit_precision_ratio(const lexmrf_fit *fit, double *rho);
int lexmrf_fit_cluster(const lexmrf_fit *fit, const char **name);
int lexmrf_fit_surface(const lexmrf_fit *fit, int which, double *buf, size_t len);

/* Global post-burn-in acceptance rates pooled over chains. */
int lexmrf_fit_acceptance(const lexmrf_fit *fit, double *rate_x, double *rate_z);

int lexmrf_fit_chain_count(const lexmrf_fit *fit);
int lexmrf_fit_trace_length(const lexmrf_fit *fit, long long *length);
int lexmrf_fit_trace(const lexmrf_fit *fit, int which, int chain, double *buf, size_t len);

/* Gelman-Rubin factors on the gamma traces; fails unless >= 2 chains. */
int lexmrf_fit_psrf(const lexmrf_fit *fit, double *psrf_gamma_x, double *psrf_gamma_z);

int lexmrf_fit_conditional_sd(const lexmrf_fit *fit, int degree, double *sd);

/* kind is "cohort", "year" or "age"; index is the birth year, calendar year
 * or age. Query the length with len == 0 and all buffers NULL; otherwise
 * every non-NULL buffer must hold at least *out_len doubles. */
int lexmrf_fit_profile(const lexmrf_fit *fit, const char *kind, int index, double *axis,
                       double *total, double *primary, double *secondary, double *empirical,
                       size_t len, size_t *out_len);

/* ---- exporters ---------------------------------------------------------- */

int lexmrf_fit_write_surface_csv(const lexmrf_fit *fit, int which, const char *path);
int lexmrf_fit_write_traces_csv(const lexmrf_fit *fit, const char *path);
int lexmrf_fit_write_summary_json(const lexmrf_fit *fit, const char *path);
int lexmrf_fit_write_heatmap_pgm(const lexmrf_fit *fit, int which, const char *path,
                                 double *out_min, double *out_max);

/* Canonical CSV matrix (age header row, year column, 17 significant
 * digits); values is row-major with NaN for gaps. */
int lexmrf_write_matrix_csv(const char *path, int n_years, int n_ages, int year_origin,
                            int age_origin, const double *values);

#ifdef __cplusplus
}
#endif

#endif /* LEXISMRF_H */
