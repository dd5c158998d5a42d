// Command-line front end: fit / simulate / aggregate. Talks to the core
// exclusively through the lexismrf C API.

#include <lexismrf.h>

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInternal = 1;
constexpr int kExitInput = 2;
constexpr int kExitNotConverged = 3;

int exit_code_for(int status) {
    switch (status) {
    case LEXMRF_OK:
        return kExitOk;
    case LEXMRF_E_ARG:
    case LEXMRF_E_PARSE:
    case LEXMRF_E_VALIDATION:
    case LEXMRF_E_COVERAGE:
    case LEXMRF_E_IO:
        return kExitInput;
    default:
        return kExitInternal;
    }
}

[[noreturn]] void die(int status, const std::string &context) {
    std::cerr << "lexis: " << context << ": " << lexmrf_last_error() << "\n";
    std::exit(exit_code_for(status));
}

void check(int status, const std::string &context) {
    if (status != LEXMRF_OK)
        die(status, context);
}

// FNV-1a 64-bit content digest for the manifest.
std::string file_digest(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        return "unreadable";
    std::uint64_t h = 1469598103934665603ULL;
    char buf[1 << 16];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        const std::streamsize got = in.gcount();
        for (std::streamsize i = 0; i < got; ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 1099511628211ULL;
        }
        if (got < static_cast<std::streamsize>(sizeof(buf)))
            break;
    }
    char out[32];
    std::snprintf(out, sizeof(out), "fnv1a64:%016llx", static_cast<unsigned long long>(h));
    return out;
}

struct Range {
    int lo = 0;
    int hi = -1; // lo > hi means "auto"
    bool set = false;
};

Range parse_range(const std::string &text, const std::string &flag) {
    Range r;
    const auto colon = text.find(':');
    if (colon == std::string::npos)
        throw CLI::ValidationError(flag, "expected LO:HI");
    try {
        r.lo = std::stoi(text.substr(0, colon));
        r.hi = std::stoi(text.substr(colon + 1));
    } catch (const std::exception &) {
        throw CLI::ValidationError(flag, "expected integer LO:HI");
    }
    if (r.lo > r.hi)
        throw CLI::ValidationError(flag, "range is empty");
    r.set = true;
    return r;
}

// Applies a key=value config file as defaults: every key becomes --key=value
// unless that flag already appears on the command line.
std::vector<std::string> apply_config_file(std::vector<std::string> args) {
    std::string path;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) {
            path = args[i + 1];
            args.erase(args.begin() + i, args.begin() + i + 2);
            break;
        }
        if (args[i].rfind("--config=", 0) == 0) {
            path = args[i].substr(9);
            args.erase(args.begin() + i);
            break;
        }
    }
    if (path.empty())
        return args;
    std::ifstream in(path);
    if (!in) {
        std::cerr << "lexis: cannot open config file '" << path << "'\n";
        std::exit(kExitInput);
    }
    auto trim = [](std::string s) {
        const auto a = s.find_first_not_of(" \t\r");
        const auto b = s.find_last_not_of(" \t\r");
        return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    std::string line;
    while (std::getline(in, line)) {
        line = trim(line);
        if (line.empty() || line[0] == '#')
            continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            std::cerr << "lexis: config line is not key=value: '" << line << "'\n";
            std::exit(kExitInput);
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        const std::string flag = "--" + key;
        bool given = false;
        for (const std::string &arg : args)
            given = given || arg == flag || arg.rfind(flag + "=", 0) == 0;
        if (given)
            continue;
        args.push_back(flag + "=" + value); // CLI11 flags accept --name=true

    }
    return args;
}

void write_manifest(const fs::path &out_dir, const json &manifest) {
    const fs::path path = out_dir / "manifest.json";
    const fs::path tmp = out_dir / "manifest.json.tmp";
    {
        std::ofstream out(tmp);
        out << manifest.dump(2) << "\n";
        if (!out) {
            std::cerr << "lexis: cannot write manifest\n";
            std::exit(kExitInternal);
        }
    }
    fs::rename(tmp, path);
}

struct CommonArgs {
    std::string out_dir;
    std::uint64_t seed = 0;
};

json driver_info(const CommonArgs &common, const std::string &command) {
    json j;
    j["command"] = command;
    j["version"] = lexmrf_version();
    j["seed"] = common.seed;
    j["out"] = common.out_dir;
    return j;
}

struct FitArgs {
    std::string deaths, exposures, sex = "total", label;
    Range years, ages;
    long long iters = 100000, burnin = 70000;
    int thin = 1, chains = 1, threads = 0;
    bool strict = false, heatmap = false, parallel = false;
    double psrf_limit = 1.1;
    double alpha_x = 0.01, beta_x = 0.01, alpha_z = 0.01, beta_z = 0.01;
    double proposal_scale = 0.1;
};

int cmd_fit(const CommonArgs &common, const FitArgs &args) {
    const auto started = std::chrono::steady_clock::now();
    const fs::path out_dir(common.out_dir);
    fs::create_directories(out_dir);

    lexmrf_data *data = nullptr;
    check(lexmrf_data_load_hmd(args.deaths.c_str(), args.exposures.c_str(), args.sex.c_str(),
                               args.years.set ? args.years.lo : 0,
                               args.years.set ? args.years.hi : -1,
                               args.ages.set ? args.ages.lo : 0,
                               args.ages.set ? args.ages.hi : -1,
                               args.label.empty() ? nullptr : args.label.c_str(), &data),
          "loading data");

    lexmrf_fit_config config;
    lexmrf_fit_config_init(&config);
    config.total_iterations = args.iters;
    config.burn_in = args.burnin;
    config.thin = args.thin;
    config.seed = common.seed;
    config.n_chains = args.chains;
    config.alpha_x = args.alpha_x;
    config.beta_x = args.beta_x;
    config.alpha_z = args.alpha_z;
    config.beta_z = args.beta_z;
    config.proposal_scale_x = args.proposal_scale;
    config.proposal_scale_z = args.proposal_scale;
    config.parallel_sweeps = args.parallel ? 1 : 0;
    config.max_threads = args.threads;

    lexmrf_fit *fit = nullptr;
    check(lexmrf_fit_run(data, &config, &fit), "fitting");

    json outputs = json::array();
    const struct {
        int which;
        const char *name;
    } surfaces[] = {
        {LEXMRF_SURFACE_SM, "s_m.csv"},
        {LEXMRF_SURFACE_SB, "s_b.csv"},
        {LEXMRF_SURFACE_S1, "s1.csv"},
        {LEXMRF_SURFACE_S2, "s2.csv"},
    };
    for (const auto &s : surfaces) {
        const fs::path path = out_dir / s.name;
        check(lexmrf_fit_write_surface_csv(fit, s.which, path.string().c_str()), s.name);
        outputs.push_back(path.string());
    }
    const fs::path traces_path = out_dir / "gamma_trace.csv";
    check(lexmrf_fit_write_traces_csv(fit, traces_path.string().c_str()), "gamma_trace.csv");
    outputs.push_back(traces_path.string());
    const fs::path summary_path = out_dir / "summary.json";
    check(lexmrf_fit_write_summary_json(fit, summary_path.string().c_str()), "summary.json");
    outputs.push_back(summary_path.string());

    json heatmaps = json::array();
    if (args.heatmap) {
        const struct {
            int which;
            const char *name;
        } maps[] = {
            {LEXMRF_SURFACE_SM, "s_m.pgm"},
            {LEXMRF_SURFACE_SB, "s_b.pgm"},
            {LEXMRF_SURFACE_S1, "s1.pgm"},
            {LEXMRF_SURFACE_S2, "s2.pgm"},
        };
        for (const auto &m : maps) {
            const fs::path path = out_dir / m.name;
            double lo = 0.0, hi = 0.0;
            check(lexmrf_fit_write_heatmap_pgm(fit, m.which, path.string().c_str(), &lo, &hi),
                  m.name);
            outputs.push_back(path.string());
            heatmaps.push_back({{"path", path.string()}, {"min", lo}, {"max", hi}});
        }
    }

    double psrf_x = 0.0, psrf_z = 0.0;
    const bool have_psrf = lexmrf_fit_psrf(fit, &psrf_x, &psrf_z) == LEXMRF_OK;

    json manifest = driver_info(common, "fit");
    manifest["inputs"] = {
        {{"path", args.deaths}, {"digest", file_digest(args.deaths)}},
        {{"path", args.exposures}, {"digest", file_digest(args.exposures)}},
    };
    manifest["flags"] = {
        {"sex", args.sex},
        {"years", args.years.set ? json::array({args.years.lo, args.years.hi}) : json()},
        {"ages", args.ages.set ? json::array({args.ages.lo, args.ages.hi}) : json()},
        {"iters", args.iters},
        {"burnin", args.burnin},
        {"thin", args.thin},
        {"chains", args.chains},
        {"strict", args.strict},
        {"psrf_limit", args.psrf_limit},
        {"heatmap", args.heatmap},
        {"parallel_sweeps", args.parallel},
        {"threads", args.threads},
        {"alpha_x", args.alpha_x},
        {"beta_x", args.beta_x},
        {"alpha_z", args.alpha_z},
        {"beta_z", args.beta_z},
        {"proposal_scale", args.proposal_scale},
    };
    if (have_psrf) {
        manifest["psrf_gamma_x"] = psrf_x;
        manifest["psrf_gamma_z"] = psrf_z;
    }
    if (!heatmaps.empty())
        manifest["heatmaps"] = heatmaps;
    double rate_x = 0.0, rate_z = 0.0;
    lexmrf_fit_acceptance(fit, &rate_x, &rate_z);
    manifest["acceptance_x"] = rate_x;
    manifest["acceptance_z"] = rate_z;
    manifest["runtime_sec"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    manifest["outputs"] = outputs;
    write_manifest(out_dir, manifest);

    int rc = kExitOk;
    if (args.strict && have_psrf && (psrf_x > args.psrf_limit || psrf_z > args.psrf_limit)) {
        std::cerr << "lexis: strict mode: PSRF " << psrf_x << "/" << psrf_z << " above "
                  << args.psrf_limit << "\n";
        rc = kExitNotConverged;
    }
    lexmrf_fit_free(fit);
    lexmrf_data_free(data);
    return rc;
}

struct SimulateArgs {
    int T = 60, A = 60, year0 = 0, age0 = 0;
    double exposure = 1e5, mu0 = 0.01, smooth_amp = 0.5;
    std::optional<std::string> band;
    double band_amp = 0.0, slope = 0.0;
    std::optional<int> spike_year;
    double spike_amp = 0.0;
};

int cmd_simulate(const CommonArgs &common, const SimulateArgs &args) {
    const auto started = std::chrono::steady_clock::now();
    const fs::path out_dir(common.out_dir);
    fs::create_directories(out_dir);

    lexmrf_synth_spec spec;
    lexmrf_synth_spec_init(&spec);
    spec.n_years = args.T;
    spec.n_ages = args.A;
    spec.year_origin = args.year0;
    spec.age_origin = args.age0;
    spec.exposure = args.exposure;
    spec.mu0 = args.mu0;
    spec.smooth_amplitude = args.smooth_amp;
    spec.band_amplitude = args.band_amp;
    spec.band_slope = args.slope;
    if (args.band) {
        const Range band = parse_range(*args.band, "--band");
        spec.band_age_lo = band.lo;
        spec.band_age_hi = band.hi;
    }
    if (args.spike_year) {
        spec.has_spike = 1;
        spec.spike_year = *args.spike_year;
        spec.spike_amplitude = args.spike_amp;
    }
    spec.seed = common.seed;

    const size_t n = static_cast<size_t>(args.T) * static_cast<size_t>(args.A);
    std::vector<double> truth_x(n), truth_z(n);
    lexmrf_data *data = nullptr;
    check(lexmrf_synthesize(&spec, &data, truth_x.data(), truth_z.data(), n), "synthesizing");

    const fs::path deaths_path = out_dir / "deaths.txt";
    const fs::path exposures_path = out_dir / "exposures.txt";
    check(lexmrf_data_write_hmd(data, deaths_path.string().c_str(),
                                exposures_path.string().c_str()),
          "writing tables");
    const fs::path tx_path = out_dir / "truth_x.csv";
    const fs::path tz_path = out_dir / "truth_z.csv";
    check(lexmrf_write_matrix_csv(tx_path.string().c_str(), args.T, args.A, args.year0,
                                  args.age0, truth_x.data()),
          "truth_x.csv");
    check(lexmrf_write_matrix_csv(tz_path.string().c_str(), args.T, args.A, args.year0,
                                  args.age0, truth_z.data()),
          "truth_z.csv");

    json manifest = driver_info(common, "simulate");
    manifest["flags"] = {
        {"T", args.T},           {"A", args.A},
        {"year0", args.year0},   {"age0", args.age0},
        {"exposure", args.exposure}, {"mu0", args.mu0},
        {"smooth_amp", args.smooth_amp},
        {"band", args.band ? json(*args.band) : json()},
        {"band_amp", args.band_amp},
        {"slope", args.slope},
        {"spike_year", args.spike_year ? json(*args.spike_year) : json()},
        {"spike_amp", args.spike_amp},
    };
    manifest["domain"] = {{"n_years", args.T},
                          {"n_ages", args.A},
                          {"year_origin", args.year0},
                          {"age_origin", args.age0}};
    manifest["outputs"] = {deaths_path.string(), exposures_path.string(), tx_path.string(),
                           tz_path.string()};
    manifest["runtime_sec"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    write_manifest(out_dir, manifest);
    lexmrf_data_free(data);
    return kExitOk;
}

struct AggregateArgs {
    std::vector<std::string> deaths, exposures;
    std::string sex = "total";
    Range ages;
};

int cmd_aggregate(const CommonArgs &common, const AggregateArgs &args) {
    const auto started = std::chrono::steady_clock::now();
    const fs::path out_dir(common.out_dir);
    fs::create_directories(out_dir);

    std::vector<lexmrf_data *> parts;
    auto cleanup = [&] {
        for (lexmrf_data *p : parts)
            lexmrf_data_free(p);
    };
    json inputs = json::array();
    for (std::size_t i = 0; i < args.deaths.size(); ++i) {
        lexmrf_data *part = nullptr;
        const int rc = lexmrf_data_load_hmd(args.deaths[i].c_str(), args.exposures[i].c_str(),
                                            args.sex.c_str(), 0, -1,
                                            args.ages.set ? args.ages.lo : 0,
                                            args.ages.set ? args.ages.hi : -1, nullptr, &part);
        if (rc != LEXMRF_OK) {
            cleanup();
            die(rc, "loading " + args.deaths[i]);
        }
        parts.push_back(part);
        inputs.push_back({{"path", args.deaths[i]}, {"digest", file_digest(args.deaths[i])}});
        inputs.push_back(
            {{"path", args.exposures[i]}, {"digest", file_digest(args.exposures[i])}});
    }

    lexmrf_data *merged = nullptr;
    const int rc = lexmrf_data_aggregate(
        const_cast<const lexmrf_data *const *>(parts.data()), parts.size(), &merged);
    if (rc != LEXMRF_OK) {
        cleanup();
        die(rc, "aggregating");
    }

    const fs::path deaths_path = out_dir / "deaths.txt";
    const fs::path exposures_path = out_dir / "exposures.txt";
    check(lexmrf_data_write_hmd(merged, deaths_path.string().c_str(),
                                exposures_path.string().c_str()),
          "writing tables");

    int n_years = 0, n_ages = 0, year0 = 0, age0 = 0;
    lexmrf_data_dims(merged, &n_years, &n_ages, &year0, &age0);
    json manifest = driver_info(common, "aggregate");
    manifest["inputs"] = inputs;
    manifest["flags"] = {{"sex", args.sex},
                         {"ages", args.ages.set ? json::array({args.ages.lo, args.ages.hi})
                                                : json()}};
    manifest["domain"] = {{"n_years", n_years},
                          {"n_ages", n_ages},
                          {"year_origin", year0},
                          {"age_origin", age0}};
    manifest["outputs"] = {deaths_path.string(), exposures_path.string()};
    manifest["runtime_sec"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    write_manifest(out_dir, manifest);

    lexmrf_data_free(merged);
    cleanup();
    return kExitOk;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"Lexis mortality surface decomposition"};
    app.require_subcommand(1);

    CommonArgs common;
    FitArgs fit_args;
    SimulateArgs sim_args;
    AggregateArgs agg_args;
    std::string years_text, ages_text, fit_ages_text, band_text;
    int spike_year = 0;

    CLI::App *fit = app.add_subcommand("fit", "fit the two-component surface model");
    fit->add_option("--deaths", fit_args.deaths, "HMD 1x1 deaths file")->required();
    fit->add_option("--exposures", fit_args.exposures, "HMD 1x1 exposures file")->required();
    fit->add_option("--sex", fit_args.sex, "female|male|total")->required();
    fit->add_option("--years", years_text, "inclusive range, e.g. 1921:2011");
    fit->add_option("--ages", fit_ages_text, "inclusive range, e.g. 0:110");
    fit->add_option("--label", fit_args.label, "dataset label for reports");
    fit->add_option("--iters", fit_args.iters, "total MCMC iterations");
    fit->add_option("--burnin", fit_args.burnin, "burn-in iterations");
    fit->add_option("--thin", fit_args.thin, "trace thinning");
    fit->add_option("--chains", fit_args.chains, "independent chains");
    fit->add_option("--threads", fit_args.threads, "worker thread cap (0 = auto)");
    fit->add_option("--psrf-limit", fit_args.psrf_limit, "strict-mode PSRF threshold");
    fit->add_option("--alpha-x", fit_args.alpha_x, "Gamma shape, smooth precision");
    fit->add_option("--beta-x", fit_args.beta_x, "Gamma rate, smooth precision");
    fit->add_option("--alpha-z", fit_args.alpha_z, "Gamma shape, shock precision");
    fit->add_option("--beta-z", fit_args.beta_z, "Gamma rate, shock precision");
    fit->add_option("--proposal-scale", fit_args.proposal_scale, "initial proposal scale");
    fit->add_flag("--strict", fit_args.strict, "exit 3 when PSRF exceeds the limit");
    fit->add_flag("--heatmap", fit_args.heatmap, "emit grayscale PGM heatmaps");
    fit->add_flag("--parallel-sweeps", fit_args.parallel, "4-colour parallel knot updates");
    fit->add_option("--seed", common.seed, "RNG seed")->required();
    fit->add_option("--out", common.out_dir, "output directory")->required();

    CLI::App *sim = app.add_subcommand("simulate", "generate synthetic ground-truth data");
    sim->add_option("--T", sim_args.T, "number of years");
    sim->add_option("--A", sim_args.A, "number of ages");
    sim->add_option("--year0", sim_args.year0, "calendar year of the first row");
    sim->add_option("--age0", sim_args.age0, "age of the first column");
    sim->add_option("--exposure", sim_args.exposure, "person-years per knot");
    sim->add_option("--mu0", sim_args.mu0, "baseline intensity");
    sim->add_option("--smooth-amp", sim_args.smooth_amp, "smooth surface amplitude");
    sim->add_option("--band", band_text, "shock band age interval LO:HI");
    sim->add_option("--band-amp", sim_args.band_amp, "shock band amplitude");
    sim->add_option("--slope", sim_args.slope, "band drift in ages per year");
    CLI::Option *spike_opt = sim->add_option("--spike-year", spike_year, "spike column year");
    sim->add_option("--spike-amp", sim_args.spike_amp, "spike amplitude");
    sim->add_option("--seed", common.seed, "RNG seed")->required();
    sim->add_option("--out", common.out_dir, "output directory")->required();

    CLI::App *agg = app.add_subcommand("aggregate", "sum populations over shared years");
    agg->add_option("--deaths", agg_args.deaths, "deaths files (>= 2)")->required();
    agg->add_option("--exposures", agg_args.exposures, "exposures files, same order")
        ->required();
    agg->add_option("--sex", agg_args.sex, "female|male|total");
    agg->add_option("--ages", ages_text, "inclusive age range");
    agg->add_option("--seed", common.seed, "RNG seed (recorded only)")->required();
    agg->add_option("--out", common.out_dir, "output directory")->required();

    try {
        std::vector<std::string> args(argv + 1, argv + argc);
        args = apply_config_file(std::move(args));
        std::vector<const char *> cargs;
        cargs.push_back(argv[0]);
        for (const std::string &a : args)
            cargs.push_back(a.c_str());
        app.parse(static_cast<int>(cargs.size()), cargs.data());
        if (!years_text.empty())
            fit_args.years = parse_range(years_text, "--years");
        if (!fit_ages_text.empty())
            fit_args.ages = parse_range(fit_ages_text, "--ages");
        if (!ages_text.empty())
            agg_args.ages = parse_range(ages_text, "--ages");
        if (!band_text.empty())
            sim_args.band = band_text;
        if (*spike_opt)
            sim_args.spike_year = spike_year;
    } catch (const CLI::ParseError &e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitInput;
    }

    try {
        if (fit->parsed())
            return cmd_fit(common, fit_args);
        if (sim->parsed())
            return cmd_simulate(common, sim_args);
        if (agg->parsed()) {
            if (agg_args.deaths.size() < 2 || agg_args.deaths.size() != agg_args.exposures.size()) {
                std::cerr << "lexis: aggregate needs >= 2 deaths/exposures pairs\n";
                return kExitInput;
            }
            return cmd_aggregate(common, agg_args);
        }
    } catch (const std::exception &e) {
        std::cerr << "lexis: " << e.what() << "\n";
        return kExitInternal;
    }
    return kExitInternal;
}
