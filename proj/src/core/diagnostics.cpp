#include "diagnostics.hpp"

#include "error.hpp"

#include <algorithm>
#include <cmath>

namespace lexmrf {

double psrf(const std::vector<std::vector<double>> &traces) {
    const std::size_t m = traces.size();
    if (m < 2)
        fail(ErrorCode::invalid_argument, "PSRF needs at least 2 chains");
    const std::size_t k = traces[0].size();
    if (k < 10)
        fail(ErrorCode::invalid_argument, "PSRF needs trace length >= 10");
    for (const auto &trace : traces)
        if (trace.size() != k)
            fail(ErrorCode::invalid_argument, "PSRF traces must have equal length");

    std::vector<double> means(m, 0.0);
    std::vector<double> vars(m, 0.0);
    for (std::size_t c = 0; c < m; ++c) {
        double sum = 0.0;
        for (double v : traces[c])
            sum += v;
        means[c] = sum / static_cast<double>(k);
        double ss = 0.0;
        for (double v : traces[c]) {
            const double d = v - means[c];
            ss += d * d;
        }
        vars[c] = ss / static_cast<double>(k - 1);
        if (!(vars[c] > 0.0))
            fail(ErrorCode::numeric, "degenerate trace: a chain has zero within-chain variance");
    }

    double w = 0.0;
    for (double v : vars)
        w += v;
    w /= static_cast<double>(m);

    double grand = 0.0;
    for (double v : means)
        grand += v;
    grand /= static_cast<double>(m);
    double between = 0.0;
    for (double v : means) {
        const double d = v - grand;
        between += d * d;
    }
    const double b = static_cast<double>(k) * between / static_cast<double>(m - 1);

    const double kk = static_cast<double>(k);
    return std::sqrt(((kk - 1.0) / kk * w + b / kk) / w);
}

AcceptanceSummary summarize_acceptance(const Matrix &rates) {
    AcceptanceSummary s;
    if (rates.size() == 0)
        return s;
    std::vector<double> sorted(rates.data(), rates.data() + rates.size());
    std::sort(sorted.begin(), sorted.end());
    double total = 0.0;
    for (double r : sorted)
        total += r;
    s.global = total / static_cast<double>(sorted.size());
    s.knot_min = sorted.front();
    s.knot_max = sorted.back();
    s.knot_median = sorted[sorted.size() / 2];
    s.flagged = s.global < 0.15 || s.global > 0.35;
    return s;
}

ConvergenceReport convergence_report(const std::vector<ChainOutput> &chains) {
    if (chains.empty())
        fail(ErrorCode::invalid_argument, "no chains");
    ConvergenceReport report;
    report.chain_count = static_cast<int>(chains.size());
    report.retained = chains[0].retained;

    Matrix pooled_x(chains[0].acceptance_x.rows(), chains[0].acceptance_x.cols(), 0.0);
    Matrix pooled_z = pooled_x;
    const double w = 1.0 / static_cast<double>(chains.size());
    for (const auto &chain : chains)
        for (std::size_t i = 0; i < pooled_x.size(); ++i) {
            pooled_x[i] += w * chain.acceptance_x[i];
            pooled_z[i] += w * chain.acceptance_z[i];
        }
    report.accept_x = summarize_acceptance(pooled_x);
    report.accept_z = summarize_acceptance(pooled_z);

    if (chains.size() >= 2 && chains[0].gamma_trace_x.size() >= 10) {
        std::vector<std::vector<double>> tx, tz;
        for (const auto &chain : chains) {
            tx.push_back(chain.gamma_trace_x);
            tz.push_back(chain.gamma_trace_z);
        }
        report.psrf_gamma_x = psrf(tx);
        report.psrf_gamma_z = psrf(tz);
        report.psrf_available = true;
    }
    return report;
}

} // namespace lexmrf
