#include "surfaces.hpp"

#include "error.hpp"

#include <cmath>
#include <limits>

namespace lexmrf {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

Matrix empirical_surface(const MortalityData &data) {
    const auto &lat = data.lattice;
    Matrix s_m(lat.n_years(), lat.n_ages(), kNaN);
    for (std::size_t i = 0; i < s_m.size(); ++i) {
        const long long y = data.deaths[i];
        const double n = data.exposures[i];
        if (y > 0 && n > 0.0)
            s_m[i] = std::log(static_cast<double>(y) / n);
    }
    return s_m;
}

SurfaceSet decompose(const EstimateSet &estimates, const MortalityData &data) {
    const auto &lat = data.lattice;
    if (estimates.x_hat.rows() != lat.n_years() || estimates.x_hat.cols() != lat.n_ages())
        fail(ErrorCode::invalid_argument, "estimate shape does not match the data lattice");
    SurfaceSet set;
    set.lattice = lat;
    set.offset = estimates.offset;
    set.s_m = empirical_surface(data);
    set.s_1 = Matrix(lat.n_years(), lat.n_ages(), 0.0);
    set.s_2 = estimates.z_hat;
    set.s_b = Matrix(lat.n_years(), lat.n_ages(), 0.0);
    for (std::size_t i = 0; i < set.s_1.size(); ++i) {
        set.s_1[i] = estimates.offset.log_mu0 + estimates.x_hat[i];
        set.s_b[i] = set.s_1[i] + set.s_2[i]; // identity holds bit-exactly
    }
    set.mu_hat = estimates.mu_hat;
    return set;
}

ProfileKind parse_profile_kind(const std::string &name) {
    if (name == "cohort")
        return ProfileKind::cohort;
    if (name == "year")
        return ProfileKind::year;
    if (name == "age")
        return ProfileKind::age;
    fail(ErrorCode::invalid_argument, "profile kind must be cohort, year or age");
}

Profile extract_profile(const SurfaceSet &surfaces, ProfileKind kind, int index) {
    const LexisLattice &lat = surfaces.lattice;
    Profile p;
    p.kind = kind;
    p.index = index;
    auto push = [&](int t, int j, double axis_value) {
        p.axis.push_back(axis_value);
        p.total.push_back(surfaces.s_b(t, j));
        p.primary.push_back(surfaces.s_1(t, j));
        p.secondary.push_back(surfaces.s_2(t, j));
        p.empirical.push_back(surfaces.s_m(t, j));
    };

    switch (kind) {
    case ProfileKind::year: {
        const int t = index - lat.year_origin();
        if (t < 0 || t >= lat.n_years())
            fail(ErrorCode::invalid_argument,
                 "year " + std::to_string(index) + " outside the lattice");
        for (int j = 0; j < lat.n_ages(); ++j)
            push(t, j, static_cast<double>(lat.age_origin() + j));
        break;
    }
    case ProfileKind::age: {
        const int j = index - lat.age_origin();
        if (j < 0 || j >= lat.n_ages())
            fail(ErrorCode::invalid_argument,
                 "age " + std::to_string(index) + " outside the lattice");
        for (int t = 0; t < lat.n_years(); ++t)
            push(t, j, static_cast<double>(lat.year_origin() + t));
        break;
    }
    case ProfileKind::cohort: {
        // Walk the unit-slope diagonal with birth year == index.
        for (int j = 0; j < lat.n_ages(); ++j) {
            const int t = index - lat.year_origin() + lat.age_origin() + j;
            if (t >= 0 && t < lat.n_years())
                push(t, j, static_cast<double>(lat.age_origin() + j));
        }
        if (p.axis.size() < 2)
            fail(ErrorCode::invalid_argument,
                 "cohort " + std::to_string(index) + " meets the lattice in fewer than 2 knots");
        break;
    }
    }
    return p;
}

const char *cluster_name(Cluster cluster) {
    switch (cluster) {
    case Cluster::heterogeneity:
        return "heterogeneity";
    case Cluster::moderate:
        return "moderate";
    default:
        return "smooth-dominated";
    }
}

Cluster classify_rho(double rho, const ClusterThresholds &thresholds) {
    if (rho < thresholds.heterogeneity_max)
        return Cluster::heterogeneity;
    if (rho < thresholds.moderate_max)
        return Cluster::moderate;
    return Cluster::smooth_dominated;
}

Cluster classify_rho_pair(double rho_female, double rho_male,
                          const ClusterThresholds &thresholds) {
    if (rho_female < thresholds.heterogeneity_max && rho_male < thresholds.heterogeneity_max)
        return Cluster::heterogeneity;
    if (rho_female < thresholds.moderate_max && rho_male < thresholds.moderate_max)
        return Cluster::moderate;
    return Cluster::smooth_dominated;
}

PrecisionSummary precision_ratio(const EstimateSet &estimates,
                                 const ClusterThresholds &thresholds) {
    if (!(estimates.gamma_x_hat > 0.0) || !(estimates.gamma_z_hat > 0.0))
        fail(ErrorCode::invalid_argument, "precision estimates must be positive");
    PrecisionSummary s;
    s.gamma_x_hat = estimates.gamma_x_hat;
    s.gamma_z_hat = estimates.gamma_z_hat;
    s.rho = estimates.gamma_z_hat / estimates.gamma_x_hat;
    s.cluster = classify_rho(s.rho, thresholds);
    return s;
}

double conditional_sd(double gamma_x, double gamma_z, int degree) {
    if (degree < 1)
        fail(ErrorCode::invalid_argument, "neighbourhood degree must be >= 1");
    if (!(gamma_x > 0.0) || !(gamma_z > 0.0))
        fail(ErrorCode::invalid_argument, "precisions must be positive");
    return std::sqrt(1.0 / (gamma_x * static_cast<double>(degree)) + 1.0 / gamma_z);
}

} // namespace lexmrf
