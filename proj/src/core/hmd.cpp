#include "hmd.hpp"

#include "error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace lexmrf {

namespace {

std::vector<std::string> tokenize(const std::string &line) {
    std::vector<std::string> tokens;
    std::istringstream in(line);
    std::string tok;
    while (in >> tok)
        tokens.push_back(tok);
    return tokens;
}

bool is_column_header(const std::vector<std::string> &tokens) {
    if (tokens.size() < 5)
        return false;
    return tokens[0] == "Year" && tokens[1] == "Age" && tokens[2] == "Female" &&
           tokens[3] == "Male" && tokens[4] == "Total";
}

std::optional<double> parse_value(const std::string &tok, int line_no) {
    if (tok == ".")
        return std::nullopt;
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(tok, &used);
    } catch (const std::exception &) {
        used = 0;
    }
    if (used != tok.size()) {
        std::ostringstream msg;
        msg << "line " << line_no << ": malformed numeric value '" << tok << "'";
        fail(ErrorCode::parse, msg.str());
    }
    return v;
}

} // namespace

int HmdTable::min_year() const {
    if (rows.empty())
        fail(ErrorCode::invalid_argument, "empty table has no year range");
    int y = rows.front().year;
    for (const auto &r : rows)
        y = std::min(y, r.year);
    return y;
}

int HmdTable::max_year() const {
    if (rows.empty())
        fail(ErrorCode::invalid_argument, "empty table has no year range");
    int y = rows.front().year;
    for (const auto &r : rows)
        y = std::max(y, r.year);
    return y;
}

int parse_age_label(const std::string &label) {
    if (label.empty())
        fail(ErrorCode::parse, "empty age label");
    std::string digits = label;
    if (digits.back() == '+')
        digits.pop_back();
    if (digits.empty() || !std::all_of(digits.begin(), digits.end(),
                                       [](unsigned char c) { return std::isdigit(c); }))
        fail(ErrorCode::parse, "malformed age label '" + label + "'");
    return std::stoi(digits);
}

HmdTable parse_hmd_table(std::istream &in) {
    HmdTable table;
    std::string line;
    int line_no = 0;
    bool seen_header = false;

    while (std::getline(in, line)) {
        ++line_no;
        const auto tokens = tokenize(line);
        if (!seen_header) {
            if (is_column_header(tokens)) {
                seen_header = true;
            } else if (!tokens.empty()) {
                if (!table.title.empty())
                    table.title += " ";
                table.title += line;
            }
            continue;
        }
        if (tokens.empty())
            continue;
        if (tokens.size() != 5) {
            std::ostringstream msg;
            msg << "line " << line_no << ": expected 5 columns, got " << tokens.size();
            fail(ErrorCode::parse, msg.str());
        }
        HmdRow row;
        try {
            std::size_t used = 0;
            row.year = std::stoi(tokens[0], &used);
            if (used != tokens[0].size())
                throw std::invalid_argument(tokens[0]);
        } catch (const std::exception &) {
            std::ostringstream msg;
            msg << "line " << line_no << ": malformed year '" << tokens[0] << "'";
            fail(ErrorCode::parse, msg.str());
        }
        row.age_label = tokens[1];
        parse_age_label(row.age_label); // validates the label shape
        row.female = parse_value(tokens[2], line_no);
        row.male = parse_value(tokens[3], line_no);
        row.total = parse_value(tokens[4], line_no);
        table.rows.push_back(std::move(row));
    }

    if (!seen_header)
        fail(ErrorCode::parse, "missing column-header line (Year Age Female Male Total)");

    // Duplicate and completeness checks: each (year, age) at most once and
    // every year carries the identical label set.
    std::map<int, std::set<std::string>> by_year;
    for (const auto &row : table.rows) {
        if (!by_year[row.year].insert(row.age_label).second)
            fail(ErrorCode::parse, "duplicate (year, age) row: " + std::to_string(row.year) +
                                       " / " + row.age_label);
    }
    if (!by_year.empty()) {
        const auto &reference = by_year.begin()->second;
        for (const auto &[year, labels] : by_year) {
            if (labels != reference) {
                std::ostringstream msg;
                msg << "year " << year << " has " << labels.size()
                    << " age rows but year " << by_year.begin()->first << " has "
                    << reference.size() << "; age coverage must be uniform";
                fail(ErrorCode::parse, msg.str());
            }
        }
    }
    return table;
}

HmdTable parse_hmd_file(const std::string &path) {
    std::ifstream in(path);
    if (!in)
        fail(ErrorCode::io, "cannot open '" + path + "'");
    return parse_hmd_table(in);
}

namespace {

std::string format_value(const std::optional<double> &v) {
    if (!v)
        return ".";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.2f", *v);
    return buf;
}

} // namespace

void serialize_hmd(std::ostream &out, const HmdTable &table) {
    if (!table.title.empty())
        out << table.title << "\n";
    out << "\n  Year          Age             Female            Male           Total\n";
    for (const auto &row : table.rows) {
        char buf[160];
        std::snprintf(buf, sizeof(buf), "  %-10d %6s %18s %16s %16s\n", row.year,
                      row.age_label.c_str(), format_value(row.female).c_str(),
                      format_value(row.male).c_str(), format_value(row.total).c_str());
        out << buf;
    }
}

void write_hmd_file(const std::string &path, const HmdTable &table) {
    std::ofstream out(path);
    if (!out)
        fail(ErrorCode::io, "cannot write '" + path + "'");
    serialize_hmd(out, table);
    if (!out)
        fail(ErrorCode::io, "write failed for '" + path + "'");
}

Sex parse_sex(const std::string &name) {
    if (name == "female")
        return Sex::female;
    if (name == "male")
        return Sex::male;
    if (name == "total")
        return Sex::total;
    fail(ErrorCode::invalid_argument, "sex must be female, male or total (got '" + name + "')");
}

const char *sex_name(Sex sex) {
    switch (sex) {
    case Sex::female:
        return "female";
    case Sex::male:
        return "male";
    default:
        return "total";
    }
}

namespace {

std::optional<double> sex_value(const HmdRow &row, Sex sex) {
    switch (sex) {
    case Sex::female:
        return row.female;
    case Sex::male:
        return row.male;
    default:
        return row.total;
    }
}

} // namespace

MortalityData to_mortality_data(const HmdTable &deaths, const HmdTable &exposures, Sex sex,
                                int year_lo, int year_hi, int age_lo, int age_hi,
                                const std::string &label) {
    if (year_lo > year_hi || age_lo > age_hi)
        fail(ErrorCode::invalid_argument, "empty year or age range");
    const LexisLattice lattice =
        build_lattice(year_hi - year_lo + 1, age_hi - age_lo + 1, year_lo, age_lo);

    // Index both tables by (year, age in years).
    auto index = [](const HmdTable &t) {
        std::map<std::pair<int, int>, const HmdRow *> m;
        for (const auto &row : t.rows)
            m[{row.year, parse_age_label(row.age_label)}] = &row;
        return m;
    };
    const auto deaths_ix = index(deaths);
    const auto exposures_ix = index(exposures);

    MortalityData data;
    data.lattice = lattice;
    data.deaths = CountMatrix(lattice.n_years(), lattice.n_ages(), 0);
    data.exposures = Matrix(lattice.n_years(), lattice.n_ages(), 0.0);
    data.label = label + " (" + sex_name(sex) + ")";

    std::vector<std::pair<int, int>> gaps;
    for (int t = 0; t < lattice.n_years(); ++t) {
        for (int j = 0; j < lattice.n_ages(); ++j) {
            const int year = year_lo + t;
            const int age = age_lo + j;
            const auto d_it = deaths_ix.find({year, age});
            const auto e_it = exposures_ix.find({year, age});
            std::optional<double> d =
                d_it == deaths_ix.end() ? std::nullopt : sex_value(*d_it->second, sex);
            std::optional<double> e =
                e_it == exposures_ix.end() ? std::nullopt : sex_value(*e_it->second, sex);
            if (!d || !e) {
                if (gaps.size() < 1000)
                    gaps.emplace_back(year, age);
                continue;
            }
            if (*d < 0.0 || *e < 0.0 || !std::isfinite(*d) || !std::isfinite(*e))
                fail(ErrorCode::validation, "negative or non-finite cell at year " +
                                                std::to_string(year) + ", age " +
                                                std::to_string(age));
            const long long count = static_cast<long long>(std::llround(*d));
            if (std::abs(*d - static_cast<double>(count)) > 1e-6)
                ++data.rounded_cells;
            data.deaths(t, j) = count;
            data.exposures(t, j) = *e;
            if (*e == 0.0 && count > 0) {
                data.deaths(t, j) = 0;
                ++data.forced_zero_cells;
            }
        }
    }

    if (!gaps.empty()) {
        std::ostringstream msg;
        msg << gaps.size() << " missing (year, age) cell(s) in the requested domain:";
        const std::size_t shown = std::min<std::size_t>(gaps.size(), 12);
        for (std::size_t i = 0; i < shown; ++i)
            msg << " (" << gaps[i].first << "," << gaps[i].second << ")";
        if (gaps.size() > shown)
            msg << " ...";
        fail(ErrorCode::coverage, msg.str());
    }
    return data;
}

MortalityData aggregate(const std::vector<MortalityData> &datasets) {
    if (datasets.size() < 2)
        fail(ErrorCode::invalid_argument, "aggregation needs at least 2 datasets");
    const auto &first = datasets.front().lattice;
    int year_lo = first.year_origin();
    int year_hi = first.year_origin() + first.n_years() - 1;
    for (const auto &d : datasets) {
        const auto &lat = d.lattice;
        if (lat.age_origin() != first.age_origin() || lat.n_ages() != first.n_ages())
            fail(ErrorCode::coverage, "age domains differ; aggregation needs identical ages");
        year_lo = std::max(year_lo, lat.year_origin());
        year_hi = std::min(year_hi, lat.year_origin() + lat.n_years() - 1);
    }
    if (year_lo > year_hi)
        fail(ErrorCode::coverage, "year domains have empty intersection");

    MortalityData out;
    out.lattice = build_lattice(year_hi - year_lo + 1, first.n_ages(), year_lo,
                                first.age_origin());
    out.deaths = CountMatrix(out.lattice.n_years(), out.lattice.n_ages(), 0);
    out.exposures = Matrix(out.lattice.n_years(), out.lattice.n_ages(), 0.0);
    for (const auto &d : datasets) {
        const int shift = year_lo - d.lattice.year_origin();
        for (int t = 0; t < out.lattice.n_years(); ++t)
            for (int j = 0; j < out.lattice.n_ages(); ++j) {
                out.deaths(t, j) += d.deaths(t + shift, j);
                out.exposures(t, j) += d.exposures(t + shift, j);
            }
        if (!out.label.empty())
            out.label += " + ";
        out.label += d.label;
        out.rounded_cells += d.rounded_cells;
        out.forced_zero_cells += d.forced_zero_cells;
    }
    // Summed exposure can be zero where every source is zero; re-apply the
    // zero-exposure rule to keep the data valid.
    for (std::size_t i = 0; i < out.deaths.size(); ++i)
        if (out.exposures[i] == 0.0 && out.deaths[i] > 0) {
            out.deaths[i] = 0;
            ++out.forced_zero_cells;
        }
    return out;
}

HmdTable to_hmd_table(const MortalityData &data, bool deaths) {
    HmdTable table;
    table.title = data.label + ", " + (deaths ? "Deaths" : "Exposure to risk") + " (period 1x1)";
    const auto &lat = data.lattice;
    for (int t = 0; t < lat.n_years(); ++t) {
        for (int j = 0; j < lat.n_ages(); ++j) {
            HmdRow row;
            row.year = lat.year_origin() + t;
            const int age = lat.age_origin() + j;
            row.age_label = std::to_string(age);
            if (age == 110 && j == lat.n_ages() - 1)
                row.age_label += "+"; // HMD open age class
            const double v = deaths ? static_cast<double>(data.deaths(t, j))
                                    : data.exposures(t, j);
            row.female = v;
            row.male = v;
            row.total = v;
            table.rows.push_back(std::move(row));
        }
    }
    return table;
}

} // namespace lexmrf
