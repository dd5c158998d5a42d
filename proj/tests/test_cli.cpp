// End-to-end checks of the lexis binary: flag handling, emitted files, exit
// codes, reproducibility. The binary path arrives via LEXIS_CLI.
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

std::string cli_path() {
    const char *env = std::getenv("LEXIS_CLI");
    REQUIRE_MESSAGE(env != nullptr, "LEXIS_CLI must point at the lexis binary");
    return env;
}

int run_cli(const std::string &args) {
    const std::string cmd = cli_path() + " " + args + " >cli_stdout.log 2>cli_stderr.log";
    const int status = std::system(cmd.c_str());
    REQUIRE(status != -1);
    return WEXITSTATUS(status);
}

std::string slurp(const fs::path &p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct WorkDir {
    fs::path path;
    WorkDir() : path(fs::path("cli_work") / std::to_string(counter()++)) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    static int &counter() {
        static int c = 0;
        return c;
    }
    std::string str() const { return path.string(); }
};

} // namespace

TEST_CASE("simulate emits the five files and honours --band-amp 0") {
    WorkDir w;
    const std::string out = (w.path / "synth").string();
    const int rc = run_cli("simulate --T 12 --A 10 --exposure 1e4 --band 3:6 --band-amp 0 "
                           "--slope 0.1 --seed 7 --out " + out);
    CHECK(rc == 0);
    int files = 0;
    for ([[maybe_unused]] const auto &entry : fs::directory_iterator(out))
        ++files;
    CHECK(files == 5);
    for (const char *name :
         {"deaths.txt", "exposures.txt", "truth_x.csv", "truth_z.csv", "manifest.json"})
        CHECK(fs::exists(fs::path(out) / name));

    // truth_z is identically zero when the band amplitude is zero.
    std::ifstream tz(fs::path(out) / "truth_z.csv");
    std::string line;
    std::getline(tz, line); // header
    while (std::getline(tz, line)) {
        const auto comma = line.find(',');
        std::stringstream row(line.substr(comma + 1));
        std::string cell;
        while (std::getline(row, cell, ','))
            CHECK(std::stod(cell) == 0.0);
    }
}

TEST_CASE("fit on simulated data: files, determinism, manifest") {
    WorkDir w;
    const std::string synth = (w.path / "synth").string();
    REQUIRE(run_cli("simulate --T 12 --A 12 --exposure 1e4 --seed 3 --out " + synth) == 0);

    const std::string fit_cmd =
        "fit --deaths " + synth + "/deaths.txt --exposures " + synth +
        "/exposures.txt --sex total --iters 400 --burnin 200 --seed 42 --out ";
    const std::string out1 = (w.path / "fit1").string();
    const std::string out2 = (w.path / "fit2").string();
    REQUIRE(run_cli(fit_cmd + out1) == 0);
    REQUIRE(run_cli(fit_cmd + out2) == 0);

    for (const char *name : {"s_m.csv", "s_b.csv", "s1.csv", "s2.csv", "gamma_trace.csv",
                             "summary.json", "manifest.json"})
        CHECK(fs::exists(fs::path(out1) / name));

    // Identical seed and flags give byte-identical CSV outputs.
    for (const char *name : {"s_m.csv", "s_b.csv", "s1.csv", "s2.csv", "gamma_trace.csv",
                             "summary.json"})
        CHECK(slurp(fs::path(out1) / name) == slurp(fs::path(out2) / name));

    const std::string manifest = slurp(fs::path(out1) / "manifest.json");
    CHECK(manifest.find("fnv1a64:") != std::string::npos);
    CHECK(manifest.find("\"seed\": 42") != std::string::npos);
    CHECK(manifest.find("runtime_sec") != std::string::npos);

    // Everything the run wrote stayed under --out.
    int entries = 0;
    for ([[maybe_unused]] const auto &e : fs::directory_iterator(w.path))
        ++entries;
    CHECK(entries == 3); // synth, fit1, fit2
}

TEST_CASE("fit with heatmaps and multiple chains") {
    WorkDir w;
    const std::string synth = (w.path / "synth").string();
    REQUIRE(run_cli("simulate --T 10 --A 10 --exposure 1e4 --seed 5 --out " + synth) == 0);
    const std::string out = (w.path / "fit").string();
    REQUIRE(run_cli("fit --deaths " + synth + "/deaths.txt --exposures " + synth +
                    "/exposures.txt --sex female --iters 300 --burnin 150 --chains 2 "
                    "--heatmap --seed 1 --out " + out) == 0);
    for (const char *name : {"s_m.pgm", "s_b.pgm", "s1.pgm", "s2.pgm"})
        CHECK(fs::exists(fs::path(out) / name));
    const std::string manifest = slurp(fs::path(out) / "manifest.json");
    CHECK(manifest.find("heatmaps") != std::string::npos);
    CHECK(manifest.find("psrf_gamma_x") != std::string::npos);
}

TEST_CASE("exit codes: missing inputs, bad flags, strict convergence") {
    WorkDir w;
    SUBCASE("missing exposures file exits 2") {
        const std::string synth = (w.path / "synth").string();
        REQUIRE(run_cli("simulate --T 8 --A 8 --seed 2 --out " + synth) == 0);
        CHECK(run_cli("fit --deaths " + synth + "/deaths.txt --exposures nope.txt "
                      "--sex total --iters 200 --burnin 100 --seed 1 --out " +
                      (w.path / "f").string()) == 2);
    }
    SUBCASE("unknown flag exits 2") {
        CHECK(run_cli("fit --nonsense 1") == 2);
    }
    SUBCASE("degenerate requested window exits 2") {
        const std::string synth = (w.path / "synth").string();
        REQUIRE(run_cli("simulate --T 8 --A 8 --year0 1900 --seed 2 --out " + synth) == 0);
        CHECK(run_cli("fit --deaths " + synth + "/deaths.txt --exposures " + synth +
                      "/exposures.txt --sex total --years 1900:1900 --iters 200 "
                      "--burnin 100 --seed 1 --out " + (w.path / "f").string()) == 2);
    }
    SUBCASE("strict mode exits 3 when the PSRF limit is exceeded") {
        const std::string synth = (w.path / "synth").string();
        REQUIRE(run_cli("simulate --T 8 --A 8 --exposure 1e4 --seed 2 --out " + synth) == 0);
        // Any healthy pair of chains has PSRF near 1, far above this limit.
        CHECK(run_cli("fit --deaths " + synth + "/deaths.txt --exposures " + synth +
                      "/exposures.txt --sex total --iters 300 --burnin 100 --chains 2 "
                      "--strict --psrf-limit 0.5 --seed 4 --out " +
                      (w.path / "f").string()) == 3);
    }
}

TEST_CASE("aggregate: pair count enforced, duplicates double, output re-fits") {
    WorkDir w;
    const std::string a = (w.path / "a").string();
    REQUIRE(run_cli("simulate --T 10 --A 6 --year0 1950 --exposure 1e3 --seed 6 --out " + a) ==
            0);

    SUBCASE("one input is a usage error") {
        CHECK(run_cli("aggregate --deaths " + a + "/deaths.txt --exposures " + a +
                      "/exposures.txt --seed 1 --out " + (w.path / "agg").string()) == 2);
    }
    SUBCASE("duplicate inputs double the counts and the output re-ingests") {
        const std::string agg = (w.path / "agg").string();
        REQUIRE(run_cli("aggregate --deaths " + a + "/deaths.txt " + a +
                        "/deaths.txt --exposures " + a + "/exposures.txt " + a +
                        "/exposures.txt --sex total --seed 1 --out " + agg) == 0);
        CHECK(fs::exists(fs::path(agg) / "deaths.txt"));
        CHECK(fs::exists(fs::path(agg) / "manifest.json"));

        auto total_of = [](const fs::path &p) {
            std::ifstream in(p);
            std::string line;
            double sum = 0.0;
            bool in_rows = false;
            while (std::getline(in, line)) {
                std::istringstream row(line);
                std::string year, age, f, m, t;
                if (!(row >> year >> age >> f >> m >> t)) {
                    continue;
                }
                if (year == "Year") {
                    in_rows = true;
                    continue;
                }
                if (in_rows)
                    sum += std::stod(t);
            }
            return sum;
        };
        const double single = total_of(fs::path(a) / "deaths.txt");
        const double doubled = total_of(fs::path(agg) / "deaths.txt");
        CHECK(doubled == doctest::Approx(2.0 * single).epsilon(1e-9));

        // The aggregate output feeds straight back into fit.
        CHECK(run_cli("fit --deaths " + agg + "/deaths.txt --exposures " + agg +
                      "/exposures.txt --sex total --iters 200 --burnin 100 --seed 2 --out " +
                      (w.path / "fit").string()) == 0);
    }
}

TEST_CASE("config file values are applied and overridden by flags") {
    WorkDir w;
    const std::string synth = (w.path / "synth").string();
    REQUIRE(run_cli("simulate --T 8 --A 8 --exposure 1e4 --seed 2 --out " + synth) == 0);
    const fs::path cfg = w.path / "run.cfg";
    {
        std::ofstream out(cfg);
        out << "iters=250\nburnin=100\n";
    }
    const std::string out = (w.path / "fit").string();
    REQUIRE(run_cli("fit --config " + cfg.string() + " --deaths " + synth +
                    "/deaths.txt --exposures " + synth +
                    "/exposures.txt --sex total --seed 4 --out " + out) == 0);
    const std::string manifest = slurp(fs::path(out) / "manifest.json");
    CHECK(manifest.find("\"iters\": 250") != std::string::npos);

    const std::string out2 = (w.path / "fit2").string();
    REQUIRE(run_cli("fit --config " + cfg.string() + " --deaths " + synth +
                    "/deaths.txt --exposures " + synth +
                    "/exposures.txt --sex total --iters 300 --seed 4 --out " + out2) == 0);
    CHECK(slurp(fs::path(out2) / "manifest.json").find("\"iters\": 300") != std::string::npos);
}
