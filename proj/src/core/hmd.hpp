#pragma once

#include "lexis.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace lexmrf {

// One row of an HMD 1x1 table. Age labels are kept verbatim ("0".."109",
// "110+"); missing values are the HMD "." marker.
struct HmdRow {
    int year = 0;
    std::string age_label;
    std::optional<double> female;
    std::optional<double> male;
    std::optional<double> total;
    bool operator==(const HmdRow &) const = default;
};

struct HmdTable {
    std::string title; // header line(s) before the column header, joined
    std::vector<HmdRow> rows;

    int min_year() const;
    int max_year() const;
    bool operator==(const HmdTable &other) const {
        return rows == other.rows; // titles are free text, not data
    }
};

// Age label -> age in years; "110+" (any trailing '+') maps to its base age.
int parse_age_label(const std::string &label);

// Parses an HMD 1x1 layout: arbitrary header lines, then a column-header
// line with Year/Age/Female/Male/Total, then whitespace-separated rows.
// Every year must carry the same complete set of age labels.
HmdTable parse_hmd_table(std::istream &in);
HmdTable parse_hmd_file(const std::string &path);

void serialize_hmd(std::ostream &out, const HmdTable &table);
void write_hmd_file(const std::string &path, const HmdTable &table);

enum class Sex { female, male, total };
Sex parse_sex(const std::string &name);
const char *sex_name(Sex sex);

// Aligns a deaths table and an exposures table on the inclusive rectangle
// [year_lo, year_hi] x [age_lo, age_hi] for one sex. Missing cells raise a
// coverage-gap error listing the offending (year, age) pairs. Fractional
// deaths are rounded to the nearest count; zero-exposure knots force the
// count to zero. Both adjustments are tallied on the result.
MortalityData to_mortality_data(const HmdTable &deaths, const HmdTable &exposures, Sex sex,
                                int year_lo, int year_hi, int age_lo, int age_hi,
                                const std::string &label);

// Restricts all datasets to the intersection of their year domains and sums
// deaths and exposures knot-wise. Age domains must be identical.
MortalityData aggregate(const std::vector<MortalityData> &datasets);

// HMD-compatible table with the dataset's values in all three sex columns,
// so the emitted file can be re-ingested under any --sex.
HmdTable to_hmd_table(const MortalityData &data, bool deaths);

} // namespace lexmrf
