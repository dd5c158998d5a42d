#include "core/sampler.hpp"

#include "core/synthetic.hpp"
#include "support/stats.hpp"

#include <doctest.h>

#include <cmath>

using namespace lexmrf;

namespace {

MortalityData uniform_data(int T, int A, long long y, double n) {
    MortalityData d;
    d.lattice = build_lattice(T, A, 0, 0);
    d.deaths = CountMatrix(T, A, y);
    d.exposures = Matrix(T, A, n);
    return d;
}

} // namespace

TEST_CASE("config validation") {
    SamplerConfig c;
    c.total_iterations = 1000;
    c.burn_in = 500;
    CHECK_NOTHROW(check_config(c));
    c.burn_in = 1000;
    CHECK_THROWS_AS(check_config(c), Error);
    c.burn_in = 950; // fewer than 100 retained
    CHECK_THROWS_AS(check_config(c), Error);
    c.burn_in = 500;
    c.thin = 0;
    CHECK_THROWS_AS(check_config(c), Error);
    c.thin = 1;
    c.proposal_scale_x = 0.0;
    CHECK_THROWS_AS(check_config(c), Error);
}

TEST_CASE("sweep deltas match the local potentials") {
    Rng rng(21);
    auto d = uniform_data(5, 6, 0, 0.0);
    for (std::size_t i = 0; i < d.deaths.size(); ++i) {
        d.exposures[i] = 200.0 + 800.0 * rng.uniform();
        d.deaths[i] = static_cast<long long>(30.0 * rng.uniform());
    }
    d.exposures(0, 3) = 0.0;
    d.deaths(0, 3) = 0;
    const Offset o = Offset::from_rate(0.02);
    const NeighborPlan plan = build_neighbor_plan(d.lattice);

    for (int rep = 0; rep < 200; ++rep) {
        FieldState s = FieldState::flat(d.lattice);
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            s.x[i] = 0.6 * rng.normal();
            s.z[i] = 0.6 * rng.normal();
        }
        s.gamma_x = 0.5 + rng.uniform();
        s.gamma_z = 0.5 + rng.uniform();
        const Knot k{static_cast<int>(rng.uniform() * 5), static_cast<int>(rng.uniform() * 6)};
        const std::size_t i = d.lattice.index_of(k);
        const double prop_x = s.x[i] + rng.normal();
        const double want_x =
            local_potential_x(s, d, o, k, prop_x) - local_potential_x(s, d, o, k, s.x[i]);
        const double got_x = sweep_delta_x(s, d, o, plan, i, prop_x);
        CHECK(got_x == doctest::Approx(want_x).epsilon(1e-10));

        const double prop_z = s.z[i] + rng.normal();
        const double want_z =
            local_potential_z(s, d, o, k, prop_z) - local_potential_z(s, d, o, k, s.z[i]);
        CHECK(sweep_delta_z(s, d, o, i, prop_z) == doctest::Approx(want_z).epsilon(1e-10));
    }
}

TEST_CASE("near-identity proposals are always accepted") {
    auto d = uniform_data(2, 2, 1, 100.0);
    const Offset o = baseline_rate(d);
    FieldState s = FieldState::flat(d.lattice);
    Rng rng(3);
    const SweepScales scales(d.lattice, 1e-12, 1e-12);
    CountMatrix total_x(2, 2, 0), total_z(2, 2, 0);
    for (int sweep = 0; sweep < 20; ++sweep) {
        const SweepCounts counts = metropolis_sweep(s, d, o, scales, rng);
        for (std::size_t i = 0; i < total_x.size(); ++i) {
            total_x[i] += counts.accepted_x[i];
            total_z[i] += counts.accepted_z[i];
        }
    }
    for (std::size_t i = 0; i < total_x.size(); ++i) {
        CHECK(total_x[i] == 20);
        CHECK(total_z[i] == 20);
    }
}

TEST_CASE("an essentially infinite smooth precision pins the field") {
    auto d = uniform_data(3, 3, 0, 0.0);
    SamplerConfig c;
    c.total_iterations = 300;
    c.burn_in = 100;
    c.seed = 77;
    c.freeze_precisions = true;
    c.init_gamma_x = 1e12;
    c.init_gamma_z = 1.0;
    c.fixed_mu0 = 1.0; // no data; prior only
    const ChainOutput out = run_chain(d, c);
    for (std::size_t i = 0; i < out.mean_x.size(); ++i)
        CHECK(std::abs(out.mean_x[i]) < 1e-3);
}

TEST_CASE("single-knot chain matches the 1-D optimization oracle") {
    MortalityData d;
    d.lattice = LexisLattice::unchecked(1, 1, 0, 0);
    const double mu0 = 0.01;
    const double exposure = 1e6;
    d.deaths = CountMatrix(1, 1, std::llround(mu0 * exposure * std::exp(0.5)));
    d.exposures = Matrix(1, 1, exposure);

    SamplerConfig c;
    c.total_iterations = 6000;
    c.burn_in = 1000;
    c.seed = 1234;
    c.fixed_mu0 = mu0;
    c.freeze_precisions = true;
    c.init_gamma_x = 1e-8; // vague smooth prior (no neighbours anyway)
    c.init_gamma_z = 1e12; // pins z at zero
    c.proposal_scale_x = 0.02;
    c.proposal_scale_z = 0.02;
    const ChainOutput out = run_chain(d, c);

    // Oracle: grid minimization of the local potential over [-3, 3].
    const double y = static_cast<double>(d.deaths(0, 0));
    double best_x = 0.0, best_h = std::numeric_limits<double>::infinity();
    for (double x = -3.0; x <= 3.0; x += 1e-5) {
        const double h = mu0 * exposure * std::exp(x) - y * x;
        if (h < best_h) {
            best_h = h;
            best_x = x;
        }
    }
    CHECK(std::abs(best_x - 0.5) < 1e-3);
    CHECK(std::abs(out.mean_x(0, 0) - best_x) < 0.02);
    CHECK(std::abs(out.mean_x(0, 0) - 0.5) < 0.05);
    CHECK(std::abs(out.mean_z(0, 0)) < 1e-4);
}

TEST_CASE("conjugate parameters: plug-in cases") {
    SUBCASE("constant x and zero z on a 2x2 grid") {
        const LexisLattice lat = build_lattice(2, 2, 0, 0);
        FieldState s = FieldState::flat(lat, 3.7, 0.0);
        const GammaConjugate g = gamma_conjugate_params(s, lat, Hyperparameters{});
        CHECK(g.alpha_x == doctest::Approx(2.01));
        CHECK(g.beta_x == doctest::Approx(0.01));
        CHECK(g.alpha_z == doctest::Approx(2.01));
        CHECK(g.beta_z == doctest::Approx(0.01));
    }
    SUBCASE("z with sum of squares 10 on a 10x10 grid") {
        const LexisLattice lat = build_lattice(10, 10, 0, 0);
        FieldState s = FieldState::flat(lat);
        s.z(0, 0) = std::sqrt(10.0);
        const GammaConjugate g = gamma_conjugate_params(s, lat, Hyperparameters{});
        CHECK(g.alpha_z == doctest::Approx(50.01));
        CHECK(g.beta_z == doctest::Approx(5.01));
        // Gamma(50.01, 5.01) has mean about 9.982
        CHECK(g.alpha_z / g.beta_z == doctest::Approx(9.982).epsilon(1e-3));
    }
}

TEST_CASE("gamma draws have the conjugate mean") {
    Rng rng(8);
    double sum = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i)
        sum += rng.gamma(2.01, 0.01);
    CHECK(sum / n == doctest::Approx(201.0).epsilon(0.015));
}

TEST_CASE("gibbs draws pass a KS test against the conjugate Gamma") {
    const LexisLattice lat = build_lattice(6, 7, 0, 0);
    Rng init(4);
    FieldState s = FieldState::flat(lat);
    for (std::size_t i = 0; i < s.x.size(); ++i) {
        s.x[i] = 0.5 * init.normal();
        s.z[i] = 0.3 * init.normal();
    }
    const Hyperparameters h;
    const GammaConjugate g = gamma_conjugate_params(s, lat, h);

    Rng rng(15);
    std::vector<double> draws_x, draws_z;
    for (int i = 0; i < 10000; ++i) {
        gibbs_update_precisions(s, lat, h, rng);
        draws_x.push_back(s.gamma_x);
        draws_z.push_back(s.gamma_z);
    }
    CHECK(testsupport::ks_pvalue_gamma(draws_x, g.alpha_x, g.beta_x) > 0.001);
    CHECK(testsupport::ks_pvalue_gamma(draws_z, g.alpha_z, g.beta_z) > 0.001);
}

TEST_CASE("proposal adaptation steers scales") {
    const double delta1 = 0.05;
    Matrix scales(1, 3, 1.0);
    CountMatrix accepted(1, 3, 0);
    accepted(0, 0) = 90; // over-accepting: bolder
    accepted(0, 1) = 2;  // under-accepting: smaller
    accepted(0, 2) = 25; // in band: unchanged
    adapt_proposals(accepted, 100, 1, scales, AdaptTarget{});
    CHECK(scales(0, 0) == doctest::Approx(std::exp(delta1)));
    CHECK(scales(0, 1) == doctest::Approx(std::exp(-delta1)));
    CHECK(scales(0, 2) == 1.0);

    // Window index 4 halves the step.
    Matrix s4(1, 1, 1.0);
    CountMatrix a4(1, 1, 100);
    adapt_proposals(a4, 100, 4, s4, AdaptTarget{});
    CHECK(s4(0, 0) == doctest::Approx(std::exp(0.025)));

    // Clamping at both ends.
    Matrix hi(1, 1, 9.9), lo(1, 1, 1.02e-4);
    CountMatrix all(1, 1, 100), none(1, 1, 0);
    adapt_proposals(all, 100, 1, hi, AdaptTarget{});
    CHECK(hi(0, 0) == kMaxProposalScale);
    adapt_proposals(none, 100, 1, lo, AdaptTarget{});
    CHECK(lo(0, 0) == kMinProposalScale);
}

TEST_CASE("proposal scales freeze at the end of burn-in") {
    auto d = uniform_data(4, 4, 3, 500.0);
    SamplerConfig c;
    c.total_iterations = 300;
    c.burn_in = 200;
    c.seed = 99;
    const ChainOutput a = run_chain(d, c);
    c.total_iterations = 500;
    const ChainOutput b = run_chain(d, c);
    CHECK(a.final_scale_x == b.final_scale_x);
    CHECK(a.final_scale_z == b.final_scale_z);
    // Adaptation actually moved the scales during burn-in.
    bool moved = false;
    for (std::size_t i = 0; i < a.final_scale_x.size(); ++i)
        moved = moved || a.final_scale_x[i] != c.proposal_scale_x;
    CHECK(moved);
}

TEST_CASE("same seed, same chain, bit for bit") {
    auto d = uniform_data(5, 5, 2, 300.0);
    SamplerConfig c;
    c.total_iterations = 400;
    c.burn_in = 150;
    c.seed = 2024;
    const ChainOutput a = run_chain(d, c);
    const ChainOutput b = run_chain(d, c);
    CHECK(a.mean_x == b.mean_x);
    CHECK(a.mean_z == b.mean_z);
    CHECK(a.gamma_trace_x == b.gamma_trace_x);
    CHECK(a.gamma_trace_z == b.gamma_trace_z);
    CHECK(a.acceptance_x == b.acceptance_x);
    // With thin = 1 the gamma estimate is the arithmetic mean of the trace.
    double sum = 0.0;
    for (double g : a.gamma_trace_x)
        sum += g;
    CHECK(a.mean_gamma_x ==
          doctest::Approx(sum / static_cast<double>(a.gamma_trace_x.size())).epsilon(1e-12));
}

TEST_CASE("thinning shortens traces but not the means") {
    auto d = uniform_data(4, 4, 2, 300.0);
    SamplerConfig c;
    c.total_iterations = 700;
    c.burn_in = 200;
    c.thin = 5;
    c.seed = 11;
    CHECK(c.trace_length() == 100);
    const ChainOutput out = run_chain(d, c);
    CHECK(out.gamma_trace_x.size() == 100);
    CHECK(out.gamma_trace_z.size() == 100);
    CHECK(out.retained == 500);
}

TEST_CASE("sweep rejects non-positive scales") {
    auto d = uniform_data(2, 2, 1, 100.0);
    const Offset o = baseline_rate(d);
    FieldState s = FieldState::flat(d.lattice);
    Rng rng(1);
    SweepScales scales(d.lattice, 0.1, 0.1);
    scales.z(1, 1) = 0.0;
    CHECK_THROWS_AS(metropolis_sweep(s, d, o, scales, rng), Error);
}

TEST_CASE("multi-chain seeds follow the master seed + index rule") {
    auto d = uniform_data(4, 5, 2, 400.0);
    SamplerConfig c;
    c.total_iterations = 250;
    c.burn_in = 100;
    c.seed = 5;
    c.n_chains = 3;
    c.max_threads = 2;
    const auto chains = run_chains(d, c);
    REQUIRE(chains.size() == 3);
    SamplerConfig single = c;
    single.n_chains = 1;
    single.seed = 7; // 5 + chain index 2
    const ChainOutput direct = run_chain(d, single);
    CHECK(chains[2].mean_x == direct.mean_x);
    CHECK(chains[2].gamma_trace_x == direct.gamma_trace_x);
    CHECK(chains[2].seed_used == 7);
}

TEST_CASE("prior-only run: shocks centred, traces finite") {
    auto d = uniform_data(4, 4, 0, 0.0);
    SamplerConfig c;
    c.total_iterations = 3000;
    c.burn_in = 1000;
    c.seed = 31;
    c.fixed_mu0 = 1.0; // likelihood absent, posterior = prior
    const ChainOutput out = run_chain(d, c);
    double grand = 0.0;
    for (std::size_t i = 0; i < out.mean_z.size(); ++i) {
        CHECK(std::isfinite(out.mean_z[i]));
        CHECK(std::abs(out.mean_z[i]) < 1.0);
        grand += out.mean_z[i];
    }
    CHECK(std::abs(grand / 16.0) < 0.5);
    for (double g : out.gamma_trace_x)
        CHECK((std::isfinite(g) && g > 0.0));
}

TEST_CASE("posterior_means and the intensity identity") {
    ChainOutput out;
    out.mean_x = Matrix(2, 2, 0.0);
    out.mean_z = Matrix(2, 2, 0.0);
    out.mean_gamma_x = 2.0;
    out.mean_gamma_z = 4.0;
    out.retained = 3;
    const Offset o = Offset::from_rate(0.01);

    SUBCASE("zero fields reproduce the offset") {
        const EstimateSet est = posterior_means(out, o);
        for (std::size_t i = 0; i < est.mu_hat.size(); ++i)
            CHECK(est.mu_hat[i] == doctest::Approx(0.01).epsilon(1e-14));
    }
    SUBCASE("log-2 field doubles the rate") {
        out.mean_x = Matrix(2, 2, std::log(2.0));
        const EstimateSet est = posterior_means(out, o);
        for (std::size_t i = 0; i < est.mu_hat.size(); ++i)
            CHECK(est.mu_hat[i] == doctest::Approx(0.02).epsilon(1e-14));
    }
    SUBCASE("gamma estimates are copied through") {
        const EstimateSet est = posterior_means(out, o);
        CHECK(est.gamma_x_hat == 2.0);
        CHECK(est.gamma_z_hat == 4.0);
    }
}

TEST_CASE("parallel sweeps: reproducible and consistent with sequential") {
    SyntheticSpec spec;
    spec.n_years = 12;
    spec.n_ages = 12;
    spec.exposure = 1e4;
    spec.smooth_amplitude = 0.3;
    spec.seed = 3;
    const SyntheticResult synth = generate_synthetic(spec);

    SamplerConfig c;
    c.total_iterations = 600;
    c.burn_in = 300;
    c.seed = 9;
    c.max_threads = 2;

    const ChainOutput seq = run_chain(synth.data, c);
    c.parallel_sweeps = true;
    const ChainOutput par1 = run_chain(synth.data, c);
    const ChainOutput par2 = run_chain(synth.data, c);

    CHECK(par1.mean_x == par2.mean_x);
    CHECK(par1.gamma_trace_x == par2.gamma_trace_x);
    for (std::size_t i = 0; i < seq.mean_x.size(); ++i) {
        CHECK(std::abs(seq.mean_x[i] - par1.mean_x[i]) < 0.25);
        CHECK(std::abs(seq.mean_z[i] - par1.mean_z[i]) < 0.25);
    }
}
