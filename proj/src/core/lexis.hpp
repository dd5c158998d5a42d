#pragma once

#include "error.hpp"
#include "grid.hpp"

#include <cstddef>
#include <string>
#include <vector>

namespace lexmrf {

struct Knot {
    int t = 0; // time index, 0-based
    int j = 0; // age index, 0-based
    bool operator==(const Knot &) const = default;
};

// Regular time x age grid of knots. Indices are zero-based everywhere;
// calendar years and ages exist only at the I/O boundary.
class LexisLattice {
  public:
    LexisLattice() = default;
    LexisLattice(int n_years, int n_ages, int year_origin, int age_origin);

    // Degenerate extents (a single row or column) are accepted here so the
    // sampler can be exercised on 1x2 oracle fixtures; build_lattice applies
    // the >= 2 contract for real data.
    static LexisLattice unchecked(int n_years, int n_ages, int year_origin, int age_origin);

    int n_years() const { return n_years_; }
    int n_ages() const { return n_ages_; }
    int year_origin() const { return year_origin_; }
    int age_origin() const { return age_origin_; }
    std::size_t knot_count() const {
        return static_cast<std::size_t>(n_years_) * static_cast<std::size_t>(n_ages_);
    }

    bool contains(Knot k) const {
        return k.t >= 0 && k.t < n_years_ && k.j >= 0 && k.j < n_ages_;
    }
    std::size_t index_of(Knot k) const {
        return static_cast<std::size_t>(k.t) * n_ages_ + k.j;
    }
    int year_of(Knot k) const { return year_origin_ + k.t; }
    int age_of(Knot k) const { return age_origin_ + k.j; }
    // Birth cohort, in calendar years; derived, never stored.
    int cohort_of(Knot k) const { return year_of(k) - age_of(k); }

    bool operator==(const LexisLattice &) const = default;

  private:
    int n_years_ = 0;
    int n_ages_ = 0;
    int year_origin_ = 0;
    int age_origin_ = 0;
};

LexisLattice build_lattice(int n_years, int n_ages, int year_origin, int age_origin);

// The eight king-move neighbours clipped to the lattice: time, age, cohort
// diagonal and the anti-diagonal. Row-major order for determinism.
std::vector<Knot> neighbors(const LexisLattice &lattice, Knot knot);

// Flattened neighbour lists for the whole lattice, used by the sampler's
// inner loop. offsets has knot_count()+1 entries.
struct NeighborPlan {
    std::vector<std::uint32_t> offsets;
    std::vector<std::uint32_t> targets;
    std::size_t degree(std::size_t i) const { return offsets[i + 1] - offsets[i]; }
};
NeighborPlan build_neighbor_plan(const LexisLattice &lattice);

// Undirected neighbour pairs, each counted once (a < b in flat index order).
std::vector<std::pair<std::uint32_t, std::uint32_t>> neighbor_pairs(const LexisLattice &lattice);

struct MortalityData {
    LexisLattice lattice;
    CountMatrix deaths;    // y, non-negative integers
    Matrix exposures;      // n, person-years
    std::string label;

    // Bookkeeping from ingestion: cells whose fractional death counts were
    // rounded, and cells where deaths were forced to zero at zero exposure.
    long long rounded_cells = 0;
    long long forced_zero_cells = 0;
};

struct ValidationIssue {
    Knot knot;
    std::string what;
};

struct ValidationReport {
    std::vector<ValidationIssue> issues;
    long long zero_exposure_knots = 0;
    bool ok() const { return issues.empty(); }
};

ValidationReport validate_data(const MortalityData &data);

// Throws Error(validation) with the first issues listed when the report fails.
void require_valid(const MortalityData &data);

} // namespace lexmrf
