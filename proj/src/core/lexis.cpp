#include "lexis.hpp"

#include <cmath>
#include <sstream>

namespace lexmrf {

LexisLattice::LexisLattice(int n_years, int n_ages, int year_origin, int age_origin)
    : n_years_(n_years), n_ages_(n_ages), year_origin_(year_origin), age_origin_(age_origin) {
    if (n_years < 1 || n_ages < 1)
        fail(ErrorCode::invalid_argument, "lattice extents must be positive");
}

LexisLattice LexisLattice::unchecked(int n_years, int n_ages, int year_origin, int age_origin) {
    return LexisLattice(n_years, n_ages, year_origin, age_origin);
}

LexisLattice build_lattice(int n_years, int n_ages, int year_origin, int age_origin) {
    if (n_years < 2 || n_ages < 2) {
        std::ostringstream msg;
        msg << "lattice needs at least 2 years and 2 ages (got " << n_years << "x" << n_ages
            << "); a single row or column has no cohort diagonal";
        fail(ErrorCode::invalid_argument, msg.str());
    }
    return LexisLattice(n_years, n_ages, year_origin, age_origin);
}

std::vector<Knot> neighbors(const LexisLattice &lattice, Knot knot) {
    if (!lattice.contains(knot)) {
        std::ostringstream msg;
        msg << "knot (" << knot.t << "," << knot.j << ") outside " << lattice.n_years() << "x"
            << lattice.n_ages() << " lattice";
        fail(ErrorCode::invalid_argument, msg.str());
    }
    std::vector<Knot> out;
    out.reserve(8);
    for (int dt = -1; dt <= 1; ++dt) {
        for (int dj = -1; dj <= 1; ++dj) {
            if (dt == 0 && dj == 0)
                continue;
            const Knot cand{knot.t + dt, knot.j + dj};
            if (lattice.contains(cand))
                out.push_back(cand);
        }
    }
    return out;
}

NeighborPlan build_neighbor_plan(const LexisLattice &lattice) {
    NeighborPlan plan;
    const std::size_t n = lattice.knot_count();
    plan.offsets.resize(n + 1, 0);
    plan.targets.reserve(n * 8);
    for (int t = 0; t < lattice.n_years(); ++t) {
        for (int j = 0; j < lattice.n_ages(); ++j) {
            const Knot k{t, j};
            for (const Knot &nb : neighbors(lattice, k))
                plan.targets.push_back(static_cast<std::uint32_t>(lattice.index_of(nb)));
            plan.offsets[lattice.index_of(k) + 1] =
                static_cast<std::uint32_t>(plan.targets.size());
        }
    }
    return plan;
}

std::vector<std::pair<std::uint32_t, std::uint32_t>> neighbor_pairs(const LexisLattice &lattice) {
    std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;
    for (int t = 0; t < lattice.n_years(); ++t) {
        for (int j = 0; j < lattice.n_ages(); ++j) {
            const Knot k{t, j};
            const auto a = static_cast<std::uint32_t>(lattice.index_of(k));
            for (const Knot &nb : neighbors(lattice, k)) {
                const auto b = static_cast<std::uint32_t>(lattice.index_of(nb));
                if (a < b)
                    pairs.emplace_back(a, b);
            }
        }
    }
    return pairs;
}

ValidationReport validate_data(const MortalityData &data) {
    ValidationReport report;
    const auto &lat = data.lattice;
    if (data.deaths.rows() != lat.n_years() || data.deaths.cols() != lat.n_ages() ||
        data.exposures.rows() != lat.n_years() || data.exposures.cols() != lat.n_ages()) {
        report.issues.push_back({Knot{0, 0}, "matrix shape does not match lattice"});
        return report;
    }
    for (int t = 0; t < lat.n_years(); ++t) {
        for (int j = 0; j < lat.n_ages(); ++j) {
            const long long y = data.deaths(t, j);
            const double n = data.exposures(t, j);
            const Knot k{t, j};
            if (!std::isfinite(n))
                report.issues.push_back({k, "non-finite exposure"});
            else if (n < 0.0)
                report.issues.push_back({k, "negative exposure"});
            if (y < 0)
                report.issues.push_back({k, "negative death count"});
            if (n == 0.0) {
                ++report.zero_exposure_knots;
                if (y > 0)
                    report.issues.push_back({k, "deaths recorded with zero exposure"});
            }
        }
    }
    return report;
}

void require_valid(const MortalityData &data) {
    const ValidationReport report = validate_data(data);
    if (report.ok())
        return;
    std::ostringstream msg;
    msg << report.issues.size() << " invalid knot(s):";
    const std::size_t shown = std::min<std::size_t>(report.issues.size(), 8);
    for (std::size_t i = 0; i < shown; ++i) {
        const auto &issue = report.issues[i];
        msg << " (" << issue.knot.t << "," << issue.knot.j << ") " << issue.what << ";";
    }
    if (report.issues.size() > shown)
        msg << " ...";
    fail(ErrorCode::validation, msg.str());
}

} // namespace lexmrf
