#include "core/diagnostics.hpp"

#include "core/rng.hpp"

#include <doctest.h>

#include <cmath>

using namespace lexmrf;

namespace {

std::vector<double> alternating(double base, int k) {
    std::vector<double> v(k);
    for (int i = 0; i < k; ++i)
        v[i] = base + (i % 2 == 0 ? 0.0 : 2.0);
    return v;
}

} // namespace

TEST_CASE("psrf on identical non-constant chains") {
    const auto t = alternating(0.0, 20);
    const double r = psrf({t, t, t});
    CHECK(r == doctest::Approx(std::sqrt(19.0 / 20.0)).epsilon(1e-12));
    CHECK(r < 1.0);
}

TEST_CASE("psrf hand-computed on separated chains") {
    // Two alternating chains of length 10 offset by 100: W = 10/9,
    // B = 10 * ((1-51)^2 + (101-51)^2) = 50000, so
    // R = sqrt((0.9*(10/9) + 5000) / (10/9)) = sqrt(4500.9).
    const double r = psrf({alternating(0.0, 10), alternating(100.0, 10)});
    CHECK(r == doctest::Approx(std::sqrt(4500.9)).epsilon(1e-12));
    CHECK(r > 10.0);
}

TEST_CASE("psrf approaches 1 for same-distribution chains") {
    Rng rng(6);
    std::vector<std::vector<double>> traces(2);
    for (auto &t : traces)
        for (int i = 0; i < 20000; ++i)
            t.push_back(rng.normal());
    const double r = psrf(traces);
    CHECK(r > 0.995);
    CHECK(r < 1.01);
}

TEST_CASE("psrf invariances") {
    Rng rng(13);
    std::vector<std::vector<double>> traces(3);
    for (auto &t : traces)
        for (int i = 0; i < 50; ++i)
            t.push_back(rng.normal() + rng.uniform());
    const double base = psrf(traces);

    auto shifted = traces;
    for (auto &t : shifted)
        for (double &v : t)
            v += 123.0;
    CHECK(psrf(shifted) == doctest::Approx(base).epsilon(1e-9));

    auto scaled = traces;
    for (auto &t : scaled)
        for (double &v : t)
            v *= 42.0;
    CHECK(psrf(scaled) == doctest::Approx(base).epsilon(1e-9));

    const std::vector<std::vector<double>> permuted{traces[2], traces[0], traces[1]};
    CHECK(psrf(permuted) == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("psrf degenerate inputs") {
    const auto t = alternating(0.0, 12);
    CHECK_THROWS_AS(psrf({t}), Error);                            // one chain
    CHECK_THROWS_AS(psrf({alternating(0, 5), alternating(0, 5)}), Error); // too short
    CHECK_THROWS_AS(psrf({t, std::vector<double>(12, 3.0)}), Error);      // constant chain
    CHECK_THROWS_AS(psrf({t, alternating(0.0, 13)}), Error);              // ragged
}

TEST_CASE("acceptance summaries") {
    SUBCASE("all moves accepted is flagged") {
        const AcceptanceSummary s = summarize_acceptance(Matrix(3, 3, 1.0));
        CHECK(s.global == 1.0);
        CHECK(s.flagged);
    }
    SUBCASE("a quarter accepted sits in the band") {
        const AcceptanceSummary s = summarize_acceptance(Matrix(3, 3, 0.25));
        CHECK(s.global == 0.25);
        CHECK_FALSE(s.flagged);
        CHECK(s.knot_min == 0.25);
        CHECK(s.knot_max == 0.25);
    }
    SUBCASE("mixed rates aggregate as total over total") {
        Matrix rates(1, 4, 0.0);
        rates[0] = 0.1;
        rates[1] = 0.2;
        rates[2] = 0.3;
        rates[3] = 0.4;
        const AcceptanceSummary s = summarize_acceptance(rates);
        // Equal proposal counts per knot, so the global rate is the mean.
        CHECK(s.global == doctest::Approx(0.25).epsilon(1e-12));
        CHECK(s.knot_min == 0.1);
        CHECK(s.knot_median == 0.3);
        CHECK(s.knot_max == 0.4);
    }
}

TEST_CASE("convergence report wires chains together") {
    ChainOutput a, b;
    a.retained = 40;
    a.acceptance_x = Matrix(2, 2, 0.2);
    a.acceptance_z = Matrix(2, 2, 0.3);
    b.acceptance_x = Matrix(2, 2, 0.3);
    b.acceptance_z = Matrix(2, 2, 0.1);
    Rng rng(4);
    for (int i = 0; i < 40; ++i) {
        a.gamma_trace_x.push_back(1.0 + 0.1 * rng.normal());
        a.gamma_trace_z.push_back(2.0 + 0.1 * rng.normal());
        b.gamma_trace_x.push_back(1.0 + 0.1 * rng.normal());
        b.gamma_trace_z.push_back(2.0 + 0.1 * rng.normal());
    }
    const ConvergenceReport rep = convergence_report({a, b});
    CHECK(rep.chain_count == 2);
    CHECK(rep.psrf_available);
    CHECK(rep.psrf_gamma_x > 0.9);
    CHECK(rep.psrf_gamma_x < 1.2);
    CHECK(rep.accept_x.global == doctest::Approx(0.25));
    CHECK(rep.accept_z.global == doctest::Approx(0.2));

    const ConvergenceReport single = convergence_report({a});
    CHECK_FALSE(single.psrf_available);
}
