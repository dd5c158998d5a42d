#include "matrix_io.hpp"

#include "error.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

namespace lexmrf {

namespace {

std::string format_real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace

void write_matrix_csv(const std::string &path, const LexisLattice &lattice,
                      const Matrix &values) {
    if (values.rows() != lattice.n_years() || values.cols() != lattice.n_ages())
        fail(ErrorCode::invalid_argument, "matrix shape does not match lattice");
    std::ofstream out(path);
    if (!out)
        fail(ErrorCode::io, "cannot write '" + path + "'");
    out << "year";
    for (int j = 0; j < lattice.n_ages(); ++j)
        out << "," << lattice.age_origin() + j;
    out << "\n";
    for (int t = 0; t < lattice.n_years(); ++t) {
        out << lattice.year_origin() + t;
        for (int j = 0; j < lattice.n_ages(); ++j) {
            out << ",";
            const double v = values(t, j);
            if (!std::isnan(v))
                out << format_real(v);
        }
        out << "\n";
    }
    if (!out)
        fail(ErrorCode::io, "write failed for '" + path + "'");
}

namespace {

std::vector<std::string> split_csv_line(const std::string &line) {
    std::vector<std::string> cells;
    std::string cell;
    for (char c : line) {
        if (c == ',') {
            cells.push_back(cell);
            cell.clear();
        } else if (c != '\r') {
            cell += c;
        }
    }
    cells.push_back(cell);
    return cells;
}

} // namespace

Matrix read_matrix_csv(const std::string &path, LexisLattice *lattice_out) {
    std::ifstream in(path);
    if (!in)
        fail(ErrorCode::io, "cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line))
        fail(ErrorCode::parse, "empty matrix file '" + path + "'");
    const auto header = split_csv_line(line);
    if (header.size() < 2)
        fail(ErrorCode::parse, "matrix header needs at least one age column");
    const int n_ages = static_cast<int>(header.size()) - 1;
    const int age_origin = std::stoi(header[1]);

    std::vector<std::vector<double>> rows;
    std::vector<int> years;
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        const auto cells = split_csv_line(line);
        if (static_cast<int>(cells.size()) != n_ages + 1)
            fail(ErrorCode::parse, "ragged row in '" + path + "'");
        years.push_back(std::stoi(cells[0]));
        std::vector<double> row;
        row.reserve(n_ages);
        for (int j = 1; j <= n_ages; ++j)
            row.push_back(cells[j].empty() ? std::numeric_limits<double>::quiet_NaN()
                                           : std::stod(cells[j]));
        rows.push_back(std::move(row));
    }
    if (rows.empty())
        fail(ErrorCode::parse, "matrix file '" + path + "' has no data rows");

    const LexisLattice lattice = LexisLattice::unchecked(
        static_cast<int>(rows.size()), n_ages, years.front(), age_origin);
    Matrix m(lattice.n_years(), lattice.n_ages(), 0.0);
    for (int t = 0; t < lattice.n_years(); ++t)
        for (int j = 0; j < n_ages; ++j)
            m(t, j) = rows[t][j];
    if (lattice_out)
        *lattice_out = lattice;
    return m;
}

void write_traces_csv(const std::string &path, const std::vector<ChainOutput> &chains) {
    if (chains.empty())
        fail(ErrorCode::invalid_argument, "no chains to export");
    std::ofstream out(path);
    if (!out)
        fail(ErrorCode::io, "cannot write '" + path + "'");
    out << "sample";
    for (std::size_t c = 0; c < chains.size(); ++c)
        out << ",gamma_x_chain" << c + 1 << ",gamma_z_chain" << c + 1;
    out << "\n";
    const std::size_t k = chains[0].gamma_trace_x.size();
    for (std::size_t i = 0; i < k; ++i) {
        out << i + 1;
        for (const auto &chain : chains)
            out << "," << format_real(chain.gamma_trace_x[i]) << ","
                << format_real(chain.gamma_trace_z[i]);
        out << "\n";
    }
    if (!out)
        fail(ErrorCode::io, "write failed for '" + path + "'");
}

HeatmapRange write_heatmap_pgm(const std::string &path, const Matrix &values) {
    HeatmapRange range{std::numeric_limits<double>::infinity(),
                       -std::numeric_limits<double>::infinity()};
    for (std::size_t i = 0; i < values.size(); ++i)
        if (!std::isnan(values[i])) {
            range.min = std::min(range.min, values[i]);
            range.max = std::max(range.max, values[i]);
        }
    if (!std::isfinite(range.min)) {
        range.min = 0.0;
        range.max = 0.0;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out)
        fail(ErrorCode::io, "cannot write '" + path + "'");
    out << "P5\n" << values.cols() << " " << values.rows() << "\n255\n";
    const double span = range.max - range.min;
    for (int t = 0; t < values.rows(); ++t) {
        for (int j = 0; j < values.cols(); ++j) {
            const double v = values(t, j);
            unsigned char px = 0; // gaps stay black
            if (!std::isnan(v))
                px = span > 0.0 ? static_cast<unsigned char>(
                                      1.0 + 254.0 * (v - range.min) / span + 0.5)
                                : 128;
            out.put(static_cast<char>(px));
        }
    }
    if (!out)
        fail(ErrorCode::io, "write failed for '" + path + "'");
    return range;
}

std::string summary_json_text(const FitResult &fit) {
    nlohmann::json j;
    const auto &lat = fit.data.lattice;
    j["label"] = fit.data.label;
    j["domain"] = {
        {"n_years", lat.n_years()},
        {"n_ages", lat.n_ages()},
        {"year_origin", lat.year_origin()},
        {"age_origin", lat.age_origin()},
        {"year_end", lat.year_origin() + lat.n_years() - 1},
        {"age_end", lat.age_origin() + lat.n_ages() - 1},
    };
    j["mu0"] = fit.offset.mu0;
    j["log_mu0"] = fit.offset.log_mu0;
    const PrecisionSummary prec = precision_ratio(fit.estimates);
    j["gamma_x_hat"] = prec.gamma_x_hat;
    j["gamma_z_hat"] = prec.gamma_z_hat;
    j["precision_ratio"] = prec.rho;
    j["cluster"] = cluster_name(prec.cluster);
    j["chains"] = fit.report.chain_count;
    j["retained_per_chain"] = fit.report.retained;
    j["trace_length"] = fit.chains.empty() ? 0
                                           : static_cast<long long>(
                                                 fit.chains[0].gamma_trace_x.size());
    j["acceptance"] = {
        {"x",
         {{"global", fit.report.accept_x.global},
          {"min", fit.report.accept_x.knot_min},
          {"median", fit.report.accept_x.knot_median},
          {"max", fit.report.accept_x.knot_max},
          {"flagged", fit.report.accept_x.flagged}}},
        {"z",
         {{"global", fit.report.accept_z.global},
          {"min", fit.report.accept_z.knot_min},
          {"median", fit.report.accept_z.knot_median},
          {"max", fit.report.accept_z.knot_max},
          {"flagged", fit.report.accept_z.flagged}}},
    };
    if (fit.report.psrf_available) {
        j["psrf_gamma_x"] = fit.report.psrf_gamma_x;
        j["psrf_gamma_z"] = fit.report.psrf_gamma_z;
    }
    j["adjustments"] = {
        {"rounded_death_cells", fit.data.rounded_cells},
        {"forced_zero_cells", fit.data.forced_zero_cells},
    };
    // Diagnostic only: the intrinsic prior leaves the x level unidentified,
    // so report how far the estimated field drifts from zero mean.
    double x_sum = 0.0;
    for (std::size_t i = 0; i < fit.estimates.x_hat.size(); ++i)
        x_sum += fit.estimates.x_hat[i];
    j["x_hat_mean"] = x_sum / static_cast<double>(fit.estimates.x_hat.size());
    return j.dump(2) + "\n";
}

void write_summary_json(const std::string &path, const FitResult &fit) {
    write_file_atomic(path, summary_json_text(fit));
}

void write_file_atomic(const std::string &path, const std::string &content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out)
            fail(ErrorCode::io, "cannot write '" + tmp + "'");
        out << content;
        if (!out)
            fail(ErrorCode::io, "write failed for '" + tmp + "'");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec)
        fail(ErrorCode::io, "cannot move '" + tmp + "' to '" + path + "': " + ec.message());
}

} // namespace lexmrf
