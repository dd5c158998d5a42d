#include "sampler.hpp"

#include "error.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <barrier>
#include <cmath>
#include <cstdlib>
#include <memory>
#include <thread>

namespace lexmrf {

void check_config(const SamplerConfig &config) {
    check_hyperparameters(config.hyper);
    if (config.total_iterations <= 0)
        fail(ErrorCode::invalid_argument, "total_iterations must be positive");
    if (config.burn_in < 0 || config.burn_in >= config.total_iterations)
        fail(ErrorCode::invalid_argument, "burn_in must lie in [0, total_iterations)");
    if (config.thin < 1)
        fail(ErrorCode::invalid_argument, "thin must be >= 1");
    if (config.trace_length() < 100)
        fail(ErrorCode::invalid_argument,
             "retained sample count (total - burn_in)/thin must be at least 100");
    if (!(config.init_gamma_x > 0.0) || !(config.init_gamma_z > 0.0))
        fail(ErrorCode::invalid_argument, "initial precisions must be positive");
    if (!(config.proposal_scale_x > 0.0) || !(config.proposal_scale_z > 0.0))
        fail(ErrorCode::invalid_argument, "proposal scales must be positive");
    if (!(config.target_accept_lo > 0.0) || !(config.target_accept_hi < 1.0) ||
        config.target_accept_lo >= config.target_accept_hi)
        fail(ErrorCode::invalid_argument, "acceptance target must satisfy 0 < lo < hi < 1");
    if (config.n_chains < 1)
        fail(ErrorCode::invalid_argument, "n_chains must be >= 1");
    if (config.fixed_mu0 < 0.0 || !std::isfinite(config.fixed_mu0))
        fail(ErrorCode::invalid_argument, "fixed_mu0 must be finite and non-negative");
}

int worker_thread_cap(int requested) {
    if (requested > 0)
        return requested;
    if (const char *env = std::getenv("LEXIS_THREADS")) {
        const int v = std::atoi(env);
        if (v > 0)
            return v;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

double sweep_delta_x(const FieldState &state, const MortalityData &data, const Offset &offset,
                     const NeighborPlan &plan, std::size_t i, double proposal) {
    const double cur = state.x[i];
    const double n = data.exposures[i];
    double dh = 0.0;
    if (n > 0.0) {
        const double z = state.z[i];
        dh = offset.mu0 * n * (std::exp(proposal + z) - std::exp(cur + z)) -
             static_cast<double>(data.deaths[i]) * (proposal - cur);
    }
    double nb_sum = 0.0;
    const std::uint32_t lo = plan.offsets[i];
    const std::uint32_t hi = plan.offsets[i + 1];
    for (std::uint32_t p = lo; p < hi; ++p)
        nb_sum += state.x[plan.targets[p]];
    const double degree = static_cast<double>(hi - lo);
    dh += 0.5 * state.gamma_x *
          ((proposal * proposal - cur * cur) * degree - 2.0 * (proposal - cur) * nb_sum);
    return dh;
}

double sweep_delta_z(const FieldState &state, const MortalityData &data, const Offset &offset,
                     std::size_t i, double proposal) {
    const double cur = state.z[i];
    const double n = data.exposures[i];
    double dh = 0.0;
    if (n > 0.0) {
        const double x = state.x[i];
        dh = offset.mu0 * n * (std::exp(x + proposal) - std::exp(x + cur)) -
             static_cast<double>(data.deaths[i]) * (proposal - cur);
    }
    dh += 0.5 * state.gamma_z * (proposal * proposal - cur * cur);
    return dh;
}

namespace {

inline bool metropolis_accept(double dh, Rng &rng) {
    if (!std::isfinite(dh))
        return false; // diverged potential: auto-reject
    if (dh <= 0.0)
        return true;
    return rng.uniform() < std::exp(-dh);
}

// Updates one knot (x move then z move). acc* pointers are per-knot tally
// arrays, either of which may be null.
inline void update_knot(FieldState &state, const MortalityData &data, const Offset &offset,
                        const NeighborPlan &plan, std::size_t i, double scale_x, double scale_z,
                        Rng &rng, long long *win_x, long long *win_z,
                        long long *post_x, long long *post_z) {
    {
        const double prop = state.x[i] + scale_x * rng.normal();
        if (std::abs(prop + state.z[i]) <= kLogScaleBound &&
            metropolis_accept(sweep_delta_x(state, data, offset, plan, i, prop), rng)) {
            state.x[i] = prop;
            if (win_x)
                ++win_x[i];
            if (post_x)
                ++post_x[i];
        }
    }
    {
        const double prop = state.z[i] + scale_z * rng.normal();
        if (std::abs(state.x[i] + prop) <= kLogScaleBound &&
            metropolis_accept(sweep_delta_z(state, data, offset, i, prop), rng)) {
            state.z[i] = prop;
            if (win_z)
                ++win_z[i];
            if (post_z)
                ++post_z[i];
        }
    }
}

void sweep_sequential(FieldState &state, const MortalityData &data, const Offset &offset,
                      const NeighborPlan &plan, const Matrix &scale_x, const Matrix &scale_z,
                      Rng &rng, long long *win_x, long long *win_z, long long *post_x,
                      long long *post_z) {
    const std::size_t n = data.lattice.knot_count();
    for (std::size_t i = 0; i < n; ++i)
        update_knot(state, data, offset, plan, i, scale_x[i], scale_z[i], rng, win_x, win_z,
                    post_x, post_z);
}

// Intra-sweep parallelism over the four parity classes of (t mod 2, j mod 2);
// knots within one class are never neighbours, so they update concurrently
// between class barriers. Worker RNG streams are derived from (seed, sweep,
// class, worker), which makes parallel runs reproducible for a fixed thread
// count.
class ParallelSweeper {
  public:
    ParallelSweeper(const LexisLattice &lattice, int threads)
        : threads_(std::max(1, threads)), barrier_(threads_) {
        for (int t = 0; t < lattice.n_years(); ++t)
            for (int j = 0; j < lattice.n_ages(); ++j)
                colors_[(t % 2) * 2 + (j % 2)].push_back(
                    static_cast<std::uint32_t>(lattice.index_of(Knot{t, j})));
        for (int w = 1; w < threads_; ++w)
            workers_.emplace_back([this, w] { worker_loop(w); });
    }

    ~ParallelSweeper() {
        stop_ = true;
        barrier_.arrive_and_wait();
        for (auto &th : workers_)
            th.join();
    }

    void sweep(std::uint64_t sweep_index, FieldState &state, const MortalityData &data,
               const Offset &offset, const NeighborPlan &plan, const Matrix &scale_x,
               const Matrix &scale_z, std::uint64_t master_seed, long long *win_x,
               long long *win_z, long long *post_x, long long *post_z) {
        job_ = Job{&state, &data, &offset, &plan, &scale_x, &scale_z, master_seed,
                   sweep_index, win_x, win_z, post_x, post_z};
        barrier_.arrive_and_wait(); // job published
        run_colors(0);
    }

  private:
    struct Job {
        FieldState *state = nullptr;
        const MortalityData *data = nullptr;
        const Offset *offset = nullptr;
        const NeighborPlan *plan = nullptr;
        const Matrix *scale_x = nullptr;
        const Matrix *scale_z = nullptr;
        std::uint64_t seed = 0;
        std::uint64_t sweep_index = 0;
        long long *win_x = nullptr;
        long long *win_z = nullptr;
        long long *post_x = nullptr;
        long long *post_z = nullptr;
    };

    void worker_loop(int me) {
        for (;;) {
            barrier_.arrive_and_wait(); // wait for a job (or shutdown)
            if (stop_)
                return;
            run_colors(me);
        }
    }

    void run_colors(int me) {
        for (int c = 0; c < 4; ++c) {
            const auto &knots = colors_[c];
            const std::size_t chunk = (knots.size() + threads_ - 1) / threads_;
            const std::size_t lo = std::min(knots.size(), chunk * me);
            const std::size_t hi = std::min(knots.size(), lo + chunk);
            if (lo < hi) {
                Rng rng(derive_seed(job_.seed, job_.sweep_index, static_cast<std::uint64_t>(c),
                                    static_cast<std::uint64_t>(me)));
                for (std::size_t p = lo; p < hi; ++p) {
                    const std::uint32_t i = knots[p];
                    update_knot(*job_.state, *job_.data, *job_.offset, *job_.plan, i,
                                (*job_.scale_x)[i], (*job_.scale_z)[i], rng, job_.win_x,
                                job_.win_z, job_.post_x, job_.post_z);
                }
            }
            barrier_.arrive_and_wait(); // class finished everywhere
        }
    }

    int threads_;
    std::array<std::vector<std::uint32_t>, 4> colors_;
    Job job_;
    std::atomic<bool> stop_{false};
    std::barrier<> barrier_;
    std::vector<std::thread> workers_;
};

Matrix rates_from_counts(const CountMatrix &accepted, long long sweeps) {
    Matrix rates(accepted.rows(), accepted.cols(), 0.0);
    if (sweeps > 0)
        for (std::size_t i = 0; i < accepted.size(); ++i)
            rates[i] = static_cast<double>(accepted[i]) / static_cast<double>(sweeps);
    return rates;
}

void zero(CountMatrix &m) {
    std::fill(m.data(), m.data() + m.size(), 0LL);
}

} // namespace

SweepCounts metropolis_sweep(FieldState &state, const MortalityData &data, const Offset &offset,
                             const SweepScales &scales, Rng &rng) {
    const auto &lat = data.lattice;
    if (state.x.rows() != lat.n_years() || state.x.cols() != lat.n_ages() ||
        !state.x.same_shape(state.z))
        fail(ErrorCode::invalid_argument, "state shape does not match the data lattice");
    if (!state.x.same_shape(scales.x) || !state.x.same_shape(scales.z))
        fail(ErrorCode::invalid_argument, "scale matrices must match the field shape");
    for (std::size_t i = 0; i < scales.x.size(); ++i)
        if (!(scales.x[i] > 0.0) || !(scales.z[i] > 0.0))
            fail(ErrorCode::invalid_argument, "proposal scales must be strictly positive");
    const NeighborPlan plan = build_neighbor_plan(lat);
    SweepCounts counts;
    counts.accepted_x = CountMatrix(lat.n_years(), lat.n_ages(), 0);
    counts.accepted_z = CountMatrix(lat.n_years(), lat.n_ages(), 0);
    sweep_sequential(state, data, offset, plan, scales.x, scales.z, rng,
                     counts.accepted_x.data(), counts.accepted_z.data(), nullptr, nullptr);
    return counts;
}

GammaConjugate gamma_conjugate_params(const FieldState &state, const LexisLattice &lattice,
                                      const Hyperparameters &hyper) {
    const double half_n = 0.5 * static_cast<double>(lattice.knot_count());
    double z_sq = 0.0;
    for (std::size_t i = 0; i < state.z.size(); ++i)
        z_sq += state.z[i] * state.z[i];
    return GammaConjugate{
        hyper.alpha_x + half_n,
        hyper.beta_x + 0.5 * pair_energy(state.x, lattice),
        hyper.alpha_z + half_n,
        hyper.beta_z + 0.5 * z_sq,
    };
}

void gibbs_update_precisions(FieldState &state, const LexisLattice &lattice,
                             const Hyperparameters &hyper, Rng &rng) {
    const GammaConjugate par = gamma_conjugate_params(state, lattice, hyper);
    state.gamma_x = rng.gamma(par.alpha_x, par.beta_x);
    state.gamma_z = rng.gamma(par.alpha_z, par.beta_z);
    if (!std::isfinite(state.gamma_x) || !std::isfinite(state.gamma_z) ||
        state.gamma_x <= 0.0 || state.gamma_z <= 0.0)
        fail(ErrorCode::numeric, "Gibbs precision draw is not finite and positive");
}

void adapt_proposals(const CountMatrix &accepted, long long window_sweeps, int window_index,
                     Matrix &scales, AdaptTarget target) {
    if (window_sweeps <= 0 || window_index < 1)
        fail(ErrorCode::invalid_argument, "adaptation needs a complete window");
    const double delta = 0.05 / std::sqrt(static_cast<double>(window_index));
    const double up = std::exp(delta);
    const double down = std::exp(-delta);
    for (std::size_t i = 0; i < scales.size(); ++i) {
        const double rate = static_cast<double>(accepted[i]) / static_cast<double>(window_sweeps);
        if (rate > target.hi)
            scales[i] *= up;
        else if (rate < target.lo)
            scales[i] *= down;
        scales[i] = std::clamp(scales[i], kMinProposalScale, kMaxProposalScale);
    }
}

ChainOutput run_chain(const MortalityData &data, const SamplerConfig &config) {
    check_config(config);
    require_valid(data);
    const auto &lat = data.lattice;
    const Offset offset = config.fixed_mu0 > 0.0 ? Offset::from_rate(config.fixed_mu0)
                                                 : baseline_rate(data);
    const NeighborPlan plan = build_neighbor_plan(lat);

    FieldState state = FieldState::flat(lat, config.init_x, config.init_z, config.init_gamma_x,
                                        config.init_gamma_z);
    Matrix scale_x(lat.n_years(), lat.n_ages(), config.proposal_scale_x);
    Matrix scale_z(lat.n_years(), lat.n_ages(), config.proposal_scale_z);
    const AdaptTarget target{config.target_accept_lo, config.target_accept_hi};

    const std::size_t n = lat.knot_count();
    CountMatrix win_x(lat.n_years(), lat.n_ages(), 0), win_z(lat.n_years(), lat.n_ages(), 0);
    CountMatrix post_x(lat.n_years(), lat.n_ages(), 0), post_z(lat.n_years(), lat.n_ages(), 0);
    Matrix sum_x(lat.n_years(), lat.n_ages(), 0.0), sum_z(lat.n_years(), lat.n_ages(), 0.0);
    double sum_gx = 0.0, sum_gz = 0.0;

    ChainOutput out;
    out.seed_used = config.seed;
    out.retained = config.retained();
    out.gamma_trace_x.reserve(static_cast<std::size_t>(config.trace_length()));
    out.gamma_trace_z.reserve(static_cast<std::size_t>(config.trace_length()));

    Rng rng(config.seed);
    std::unique_ptr<ParallelSweeper> sweeper;
    if (config.parallel_sweeps) {
        const int threads = worker_thread_cap(config.max_threads);
        if (threads > 1)
            sweeper = std::make_unique<ParallelSweeper>(lat, threads);
    }

    for (long long k = 1; k <= config.total_iterations; ++k) {
        const bool in_burn_in = k <= config.burn_in;
        long long *wx = in_burn_in && config.adapt_during_burn_in ? win_x.data() : nullptr;
        long long *wz = in_burn_in && config.adapt_during_burn_in ? win_z.data() : nullptr;
        long long *px = in_burn_in ? nullptr : post_x.data();
        long long *pz = in_burn_in ? nullptr : post_z.data();

        if (sweeper)
            sweeper->sweep(static_cast<std::uint64_t>(k), state, data, offset, plan, scale_x,
                           scale_z, config.seed, wx, wz, px, pz);
        else
            sweep_sequential(state, data, offset, plan, scale_x, scale_z, rng, wx, wz, px, pz);

        if (!config.freeze_precisions)
            gibbs_update_precisions(state, lat, config.hyper, rng);

        if (in_burn_in && config.adapt_during_burn_in && k % kAdaptWindowSweeps == 0) {
            const int window_index = static_cast<int>(k / kAdaptWindowSweeps);
            adapt_proposals(win_x, kAdaptWindowSweeps, window_index, scale_x, target);
            adapt_proposals(win_z, kAdaptWindowSweeps, window_index, scale_z, target);
            zero(win_x);
            zero(win_z);
        }

        if (!in_burn_in) {
            for (std::size_t i = 0; i < n; ++i) {
                sum_x[i] += state.x[i];
                sum_z[i] += state.z[i];
            }
            sum_gx += state.gamma_x;
            sum_gz += state.gamma_z;
            if ((k - config.burn_in) % config.thin == 0) {
                out.gamma_trace_x.push_back(state.gamma_x);
                out.gamma_trace_z.push_back(state.gamma_z);
            }
        }
    }

    const double inv_k = 1.0 / static_cast<double>(out.retained);
    out.mean_x = Matrix(lat.n_years(), lat.n_ages(), 0.0);
    out.mean_z = Matrix(lat.n_years(), lat.n_ages(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        out.mean_x[i] = sum_x[i] * inv_k;
        out.mean_z[i] = sum_z[i] * inv_k;
    }
    out.mean_gamma_x = sum_gx * inv_k;
    out.mean_gamma_z = sum_gz * inv_k;
    out.acceptance_x = rates_from_counts(post_x, out.retained);
    out.acceptance_z = rates_from_counts(post_z, out.retained);
    out.final_scale_x = scale_x;
    out.final_scale_z = scale_z;
    return out;
}

std::vector<ChainOutput> run_chains(const MortalityData &data, const SamplerConfig &config) {
    check_config(config);
    std::vector<ChainOutput> outputs(config.n_chains);
    if (config.n_chains == 1) {
        outputs[0] = run_chain(data, config);
        return outputs;
    }
    const int threads = std::min(worker_thread_cap(config.max_threads), config.n_chains);
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(config.n_chains);
    auto work = [&] {
        for (;;) {
            const int c = next.fetch_add(1);
            if (c >= config.n_chains)
                return;
            try {
                SamplerConfig chain_config = config;
                chain_config.seed = config.seed + static_cast<std::uint64_t>(c);
                chain_config.n_chains = 1;
                outputs[c] = run_chain(data, chain_config);
            } catch (...) {
                errors[c] = std::current_exception();
            }
        }
    };
    for (int t = 1; t < threads; ++t)
        pool.emplace_back(work);
    work();
    for (auto &th : pool)
        th.join();
    for (auto &err : errors)
        if (err)
            std::rethrow_exception(err);
    return outputs;
}

EstimateSet posterior_means(const ChainOutput &output, const Offset &offset) {
    EstimateSet est;
    est.x_hat = output.mean_x;
    est.z_hat = output.mean_z;
    est.gamma_x_hat = output.mean_gamma_x;
    est.gamma_z_hat = output.mean_gamma_z;
    est.offset = offset;
    est.mu_hat = Matrix(est.x_hat.rows(), est.x_hat.cols(), 0.0);
    for (std::size_t i = 0; i < est.mu_hat.size(); ++i)
        est.mu_hat[i] = offset.mu0 * std::exp(est.x_hat[i] + est.z_hat[i]);
    return est;
}

EstimateSet pooled_means(const std::vector<ChainOutput> &outputs, const Offset &offset) {
    if (outputs.empty())
        fail(ErrorCode::invalid_argument, "no chains to pool");
    EstimateSet est;
    est.x_hat = Matrix(outputs[0].mean_x.rows(), outputs[0].mean_x.cols(), 0.0);
    est.z_hat = Matrix(outputs[0].mean_z.rows(), outputs[0].mean_z.cols(), 0.0);
    const double w = 1.0 / static_cast<double>(outputs.size());
    for (const auto &chain : outputs) {
        if (!chain.mean_x.same_shape(est.x_hat))
            fail(ErrorCode::invalid_argument, "chains have mismatched shapes");
        for (std::size_t i = 0; i < est.x_hat.size(); ++i) {
            est.x_hat[i] += w * chain.mean_x[i];
            est.z_hat[i] += w * chain.mean_z[i];
        }
        est.gamma_x_hat += w * chain.mean_gamma_x;
        est.gamma_z_hat += w * chain.mean_gamma_z;
    }
    est.offset = offset;
    est.mu_hat = Matrix(est.x_hat.rows(), est.x_hat.cols(), 0.0);
    for (std::size_t i = 0; i < est.mu_hat.size(); ++i)
        est.mu_hat[i] = offset.mu0 * std::exp(est.x_hat[i] + est.z_hat[i]);
    return est;
}

} // namespace lexmrf
