#pragma once

#include "lexis.hpp"
#include "sampler.hpp"

#include <string>
#include <vector>

namespace lexmrf {

// The four estimated surfaces on the log scale. s_m uses NaN where the
// empirical rate is undefined (zero deaths or zero exposure).
struct SurfaceSet {
    LexisLattice lattice;
    Matrix s_m;  // log empirical rates, with gaps
    Matrix s_b;  // log(mu0) + x_hat + z_hat
    Matrix s_1;  // log(mu0) + x_hat
    Matrix s_2;  // z_hat
    Matrix mu_hat; // mu0 * exp(x_hat + z_hat)
    Offset offset;
};

Matrix empirical_surface(const MortalityData &data);

SurfaceSet decompose(const EstimateSet &estimates, const MortalityData &data);

enum class ProfileKind { cohort, year, age };
ProfileKind parse_profile_kind(const std::string &name);

// One slice through the surfaces: a row (fixed year), a column (fixed age)
// or a unit-slope cohort diagonal. The axis carries ages for year/cohort
// slices and calendar years for age slices.
struct Profile {
    ProfileKind kind = ProfileKind::year;
    int index = 0; // calendar year, age, or cohort birth year
    std::vector<double> axis;
    std::vector<double> total;     // s_b
    std::vector<double> primary;   // s_1
    std::vector<double> secondary; // s_2
    std::vector<double> empirical; // s_m (NaN where missing)
};

Profile extract_profile(const SurfaceSet &surfaces, ProfileKind kind, int index);

enum class Cluster { heterogeneity, moderate, smooth_dominated };
const char *cluster_name(Cluster cluster);

// Boundaries between the three precision-ratio clusters; configuration, not
// constants.
struct ClusterThresholds {
    double heterogeneity_max = 10.0;
    double moderate_max = 50.0;
};

Cluster classify_rho(double rho, const ClusterThresholds &thresholds = {});
// Paired rule for a country with both sexes: a cluster applies only when
// both ratios fall under its boundary.
Cluster classify_rho_pair(double rho_female, double rho_male,
                          const ClusterThresholds &thresholds = {});

struct PrecisionSummary {
    double gamma_x_hat = 0.0;
    double gamma_z_hat = 0.0;
    double rho = 0.0;
    Cluster cluster = Cluster::smooth_dominated;
};

PrecisionSummary precision_ratio(const EstimateSet &estimates,
                                 const ClusterThresholds &thresholds = {});

// A priori conditional standard deviation of log(mu) at a knot of the given
// neighbourhood degree: sqrt(1/(gamma_x * degree) + 1/gamma_z).
double conditional_sd(double gamma_x, double gamma_z, int degree);

} // namespace lexmrf
