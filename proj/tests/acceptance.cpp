// Acceptance run: prints one PASS/FAIL line per criterion and exits nonzero
// if any criterion fails. Criteria can be selected by name (e.g. "A1 A5").

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "histrecon/evaluation.hpp"
#include "histrecon/pipeline.hpp"
#include "support.hpp"

using namespace histrecon;
using namespace testing_support;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) { return std::chrono::duration<double>(Clock::now() - start).count(); }

std::size_t worker_count() { return std::max(1u, std::thread::hardware_concurrency()); }

struct Verdict {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* format, double a, double b = 0.0, double c = 0.0, double d = 0.0)
{
    char buf[256];
    std::snprintf(buf, sizeof buf, format, a, b, c, d);
    return buf;
}

Instance six_node_instance() { return make_ba_instance(6, 2, {0.3, 0.2}, 4, 1.0 / 6.0, 4); }

// ---- A1 / A2: six-node oracle instance -------------------------------------

Verdict oracle_mcmc_agreement()
{
    const Instance inst = six_node_instance();
    const Snapshot y_T = inst.truth.final_snapshot();
    const DiffusionParams beta{0.3, 0.2};
    const PriorSpec prior{1.0, 1.0};
    const OracleResult oracle = exact_posterior(inst.graph, beta, y_T, 4, prior, worker_count());

    PipelineConfig cfg;
    ProposalModel model = initial_model(4, cfg, 4);
    train_proposal(model, inst.graph, beta, prior, cfg.training, 4);
    McmcConfig mcmc;
    mcmc.steps = 2000;
    mcmc.chains = 20;
    mcmc.plain_average = true;
    mcmc.burn_in = 200;
    mcmc.threads = worker_count();
    const ReconstructionRun run = run_reconstruction(inst.graph, y_T, beta, prior, model, mcmc, 4);

    double worst = 0.0;
    for (std::size_t u = 0; u < 6; ++u) {
        worst = std::max(worst, std::abs(run.estimate.h_I[u] - oracle.expected_h_I[u]));
        worst = std::max(worst, std::abs(run.estimate.h_R[u] - oracle.expected_h_R[u]));
    }
    return {worst <= 0.2, fmt("max |mcmc - oracle| = %.4f (limit 0.2), %g feasible histories, acceptance %.3f", worst,
                              static_cast<double>(oracle.histories.size()), run.diagnostics.overall_acceptance())};
}

Verdict stability_demonstration()
{
    const Instance inst = six_node_instance();
    const Snapshot y_T = inst.truth.final_snapshot();
    const PriorSpec prior{1.0, 1.0};
    const OracleResult a = exact_posterior(inst.graph, {0.3, 0.2}, y_T, 4, prior, worker_count());
    const OracleResult b = exact_posterior(inst.graph, {0.2, 0.3}, y_T, 4, prior, worker_count());
    double worst = 0.0;
    for (std::size_t u = 0; u < 6; ++u) {
        worst = std::max(worst, std::abs(a.expected_h_I[u] - b.expected_h_I[u]));
        worst = std::max(worst, std::abs(a.expected_h_R[u] - b.expected_h_R[u]));
    }
    std::size_t changed = 0;
    for (std::size_t k = 0; k < a.histories.size(); ++k)
        if (std::abs(a.histories[k].log_weight - b.histories[k].log_weight) >= std::log(2.0)) ++changed;
    const double fraction = static_cast<double>(changed) / static_cast<double>(a.histories.size());
    const bool same_support = a.histories.size() == b.histories.size();
    return {same_support && worst <= 0.5 && fraction >= 0.5,
            fmt("max |dE[h]| = %.4f (limit 0.5), %.1f%% of histories change likelihood by >= 2x (limit 50%%)", worst,
                100.0 * fraction)};
}

// ---- A3 ---------------------------------------------------------------------

Verdict small_rate_derivative()
{
    const Graph g = path_graph(3);
    const History h = history_of({"ISS", "IIS", "RII"});
    const double beta = 1e-3, step = 1e-7;
    auto prob = [&](double bI) { return std::exp(log_transition_sum(g, {bI, 1e-3}, h)); };
    const double relative = (prob(beta + step) - prob(beta - step)) / (2.0 * step) / prob(beta);
    const double predicted = (3.0 - 1.0) / beta;
    const double err = std::abs(relative - predicted) / predicted;
    return {err <= 0.10, fmt("(dP/dbeta_I)/P = %.2f, predicted %.2f, relative error %.4f (limit 0.10)", relative,
                             predicted, err)};
}

// ---- A4 ---------------------------------------------------------------------

double meanfield_gradient_error(std::uint64_t seed, bool& usable)
{
    Rng rng(seed, 5);
    const std::size_t n = 2 + rng.below(29);
    const std::size_t T = 1 + rng.below(5);
    const Graph g = generate_er(n, 0.1 + 0.3 * rng.uniform(), rng);
    const std::size_t sources = 1 + rng.below(std::max<std::size_t>(1, n / 4));
    const Snapshot y0 = sample_initial(g, sources, rng);
    const History h = simulate(g, {0.1 + 0.5 * rng.uniform(), 0.05 + 0.4 * rng.uniform()}, y0, T, rng);
    const DiffusionParams at{0.05 + 0.8 * rng.uniform(), 0.05 + 0.8 * rng.uniform()};
    const double n0 = static_cast<double>(sources);
    const auto grad = pseudo_loglik_and_grad(g, at, h.final_snapshot(), T, n0);
    usable = std::isfinite(grad.value);
    if (!usable) return 0.0;
    auto f = [&](double bI, double bR) { return pseudo_loglik(g, {bI, bR}, h.final_snapshot(), T, n0); };
    const double step = 1e-6;
    const double fd_I = (f(at.beta_I + step, at.beta_R) - f(at.beta_I - step, at.beta_R)) / (2 * step);
    const double fd_R = (f(at.beta_I, at.beta_R + step) - f(at.beta_I, at.beta_R - step)) / (2 * step);
    const double scale =
        std::max({std::hypot(grad.d_beta_I, grad.d_beta_R), std::hypot(fd_I, fd_R), 1e-8});
    return std::hypot(grad.d_beta_I - fd_I, grad.d_beta_R - fd_R) / scale;
}

double proposal_gradient_error(std::uint64_t seed)
{
    Rng rng(seed, 17);
    const std::size_t n = 2 + rng.below(4);
    const std::size_t T = 1 + rng.below(3);
    const Graph g = generate_er(n, 0.6, rng);
    std::vector<History> batch;
    for (int k = 0; k < 3; ++k) batch.push_back(simulate(g, {0.4, 0.3}, sample_initial(g, 1, rng), T, rng));
    ProposalShape shape;
    shape.timespan = T;
    shape.identity_norm = true;
    Rng init(seed, 3);
    ProposalModel model = init_proposal(shape, init);
    ProposalModel grads;
    proposal_loss_and_grad(model, g, batch, NormMode::batch, &grads);
    std::vector<double> analytic;
    grads.for_each_parameter([&](const std::string&, const Mat& m) {
        for (Eigen::Index i = 0; i < m.size(); ++i) analytic.push_back(m.data()[i]);
    });
    double diff = 0.0, na = 0.0, nn = 0.0;
    std::size_t k = 0;
    model.for_each_parameter([&](const std::string&, Mat& m) {
        for (Eigen::Index i = 0; i < m.size(); ++i, ++k) {
            const double keep = m.data()[i];
            m.data()[i] = keep + 1e-6;
            const double up = proposal_loss_and_grad(model, g, batch, NormMode::batch, nullptr);
            m.data()[i] = keep - 1e-6;
            const double down = proposal_loss_and_grad(model, g, batch, NormMode::batch, nullptr);
            m.data()[i] = keep;
            const double fd = (up - down) / 2e-6;
            diff += (fd - analytic[k]) * (fd - analytic[k]);
            na += analytic[k] * analytic[k];
            nn += fd * fd;
        }
    });
    return std::sqrt(diff) / std::max({std::sqrt(na), std::sqrt(nn), 1e-12});
}

Verdict gradient_suites()
{
    const auto start = Clock::now();
    double worst_mf = 0.0;
    int checked = 0;
    for (std::uint64_t seed = 1; checked < 100; ++seed) {
        bool usable = false;
        const double err = meanfield_gradient_error(seed, usable);
        if (!usable) continue;
        ++checked;
        worst_mf = std::max(worst_mf, err);
    }
    double worst_nn = 0.0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) worst_nn = std::max(worst_nn, proposal_gradient_error(seed));
    const double elapsed = seconds_since(start);
    return {worst_mf <= 1e-5 && worst_nn <= 1e-3 && elapsed <= 60.0,
            fmt("mean-field max rel err %.2e (limit 1e-5), network max rel err %.2e (limit 1e-3), %.1f s", worst_mf,
                worst_nn, elapsed)};
}

// ---- A5 ---------------------------------------------------------------------

Verdict proposal_correctness()
{
    const Instance inst = make_ba_instance(100, 4, {0.2, 0.2}, 5, 0.05, 5);
    const Snapshot y_T = inst.truth.final_snapshot();
    PipelineConfig cfg;
    const ProposalProbs probs = forward_probs(initial_model(5, cfg, 5), inst.graph, y_T);
    Rng rng(5, stream_id(streams::mcmc, 0));
    std::size_t infeasible = 0;
    double worst_replay = 0.0;
    for (int i = 0; i < 10000; ++i) {
        const SampledHistory s = sample_history(probs, inst.graph, y_T, rng);
        if (!ref_feasible(inst.graph, s.history) || s.history.final_snapshot() != y_T) ++infeasible;
        worst_replay = std::max(worst_replay, std::abs(eval_log_q(probs, inst.graph, y_T, s.history) - s.log_q));
    }

    double worst_mass = 0.0;
    std::size_t support_mismatches = 0, cases = 0;
    std::uint64_t seed = 0;
    for (std::size_t n = 1; n <= 3; ++n) {
        std::vector<std::pair<NodeId, NodeId>> pairs;
        for (NodeId u = 0; u < n; ++u)
            for (NodeId v = u + 1; v < n; ++v) pairs.emplace_back(u, v);
        for (std::size_t mask = 0; mask < (std::size_t{1} << pairs.size()); ++mask) {
            std::vector<std::pair<NodeId, NodeId>> edges;
            for (std::size_t i = 0; i < pairs.size(); ++i)
                if (mask >> i & 1) edges.push_back(pairs[i]);
            const Graph g = make_graph(n, edges);
            for (std::size_t T = 1; T <= 2; ++T)
                for (const Snapshot& snap : all_snapshots(n)) {
                    Rng q(++seed, 41);
                    ProposalProbs p{T, n, std::vector<double>(T * n), std::vector<double>(T * n)};
                    for (auto& x : p.q_I) x = 0.05 + 0.9 * q.uniform();
                    for (auto& x : p.q_R) x = 0.05 + 0.9 * q.uniform();
                    std::set<std::string> support, feasible;
                    auto key = [&](const History& h) {
                        std::string k;
                        for (std::size_t t = 0; t <= T; ++t) k += row_string(h, t);
                        return k;
                    };
                    double mass = 0.0;
                    for_each_matrix(n, T, snap, [&](const History& h) {
                        const double lq = eval_log_q(p, g, snap, h);
                        if (lq > kNegInf) {
                            mass += std::exp(lq);
                            support.insert(key(h));
                        }
                    });
                    for (const History& h : ref_feasible_histories(g, snap, T)) feasible.insert(key(h));
                    worst_mass = std::max(worst_mass, std::abs(mass - 1.0));
                    support_mismatches += support != feasible;
                    ++cases;
                }
        }
    }
    return {infeasible == 0 && worst_replay <= 1e-9 && worst_mass <= 1e-9 && support_mismatches == 0,
            fmt("%g of 10000 samples infeasible, max replay error %.1e, micro-instance max |mass-1| %.1e, %g "
                "support mismatches",
                static_cast<double>(infeasible), worst_replay, worst_mass, static_cast<double>(support_mismatches)) +
                " over " + std::to_string(cases) + " micro-instances"};
}

// ---- A6, A7, A9: desk-scale quality ----------------------------------------

struct QualityRun {
    double f1 = 0.0;
    double nrmse = 0.0;
    double acceptance = 0.0;
    double seconds = 0.0;
};

struct DeskScale {
    std::vector<QualityRun> estimated, true_params, untrained;
    std::vector<DiffusionParams> estimates;
};

const std::vector<std::uint64_t> kDeskSeeds = {1, 2, 3};

Instance desk_instance(std::uint64_t seed) { return make_ba_instance(1000, 4, {0.1, 0.1}, 10, 0.05, seed); }

QualityRun quality_of(const Instance& inst, const PipelineResult& r, double seconds)
{
    const MetricReport m = evaluate(inst.truth, r.history);
    return {m.macro_f1, m.nrmse, r.run.diagnostics.overall_acceptance(), seconds};
}

DeskScale& desk_scale()
{
    static DeskScale cache;
    if (!cache.estimated.empty()) return cache;
    for (std::uint64_t seed : kDeskSeeds) {
        const Instance inst = desk_instance(seed);
        const Snapshot y_T = inst.truth.final_snapshot();
        const double n0 = static_cast<double>(inst.num_sources);
        PipelineConfig cfg;
        cfg.threads = worker_count();

        auto start = Clock::now();
        const PipelineResult est = run_pipeline(inst.graph, y_T, 10, n0, cfg, seed);
        cache.estimated.push_back(quality_of(inst, est, seconds_since(start)));
        cache.estimates.push_back(est.params);

        PipelineConfig untrained = cfg;
        untrained.params = est.params;
        untrained.model = initial_model(10, cfg, seed);
        start = Clock::now();
        cache.untrained.push_back(
            quality_of(inst, run_pipeline(inst.graph, y_T, 10, n0, untrained, seed), seconds_since(start)));

        PipelineConfig truth = cfg;
        truth.params = inst.params;
        start = Clock::now();
        cache.true_params.push_back(
            quality_of(inst, run_pipeline(inst.graph, y_T, 10, n0, truth, seed), seconds_since(start)));
        std::fprintf(stderr,
                     "  seed %llu: beta_hat=(%.4f, %.4f) estimated f1=%.4f nrmse=%.4f acc=%.3f | true f1=%.4f "
                     "nrmse=%.4f | untrained nrmse=%.4f acc=%.3f\n",
                     static_cast<unsigned long long>(seed), est.params.beta_I, est.params.beta_R,
                     cache.estimated.back().f1, cache.estimated.back().nrmse, cache.estimated.back().acceptance,
                     cache.true_params.back().f1, cache.true_params.back().nrmse, cache.untrained.back().nrmse,
                     cache.untrained.back().acceptance);
    }
    return cache;
}

double mean_of(const std::vector<QualityRun>& runs, double QualityRun::*field)
{
    double s = 0.0;
    for (const auto& r : runs) s += r.*field;
    return s / static_cast<double>(runs.size());
}

Verdict end_to_end_quality()
{
    const DeskScale& d = desk_scale();
    const double f1 = mean_of(d.estimated, &QualityRun::f1);
    const double err = mean_of(d.estimated, &QualityRun::nrmse);
    const double worst_seconds = std::max_element(d.estimated.begin(), d.estimated.end(), [](auto& a, auto& b) {
                                     return a.seconds < b.seconds;
                                 })->seconds;
    const double total = worst_seconds * static_cast<double>(d.estimated.size());
    return {f1 >= 0.70 && err <= 0.25 && total <= 1800.0,
            fmt("mean macro F1 %.4f (min 0.70), mean NRMSE %.4f (max 0.25), %.0f s for 3 seeds", f1, err,
                mean_of(d.estimated, &QualityRun::seconds) * 3.0)};
}

Verdict estimated_vs_true()
{
    const DeskScale& d = desk_scale();
    const double df1 = std::abs(mean_of(d.estimated, &QualityRun::f1) - mean_of(d.true_params, &QualityRun::f1));
    const double dn = std::abs(mean_of(d.estimated, &QualityRun::nrmse) - mean_of(d.true_params, &QualityRun::nrmse));
    return {df1 <= 0.05 && dn <= 0.05,
            fmt("true-beta F1 %.4f NRMSE %.4f; |dF1| = %.4f, |dNRMSE| = %.4f (limits 0.05)",
                mean_of(d.true_params, &QualityRun::f1), mean_of(d.true_params, &QualityRun::nrmse), df1, dn)};
}

Verdict ablation()
{
    const DeskScale& d = desk_scale();
    const double acc_t = mean_of(d.estimated, &QualityRun::acceptance);
    const double acc_u = mean_of(d.untrained, &QualityRun::acceptance);
    const double n_t = mean_of(d.estimated, &QualityRun::nrmse);
    const double n_u = mean_of(d.untrained, &QualityRun::nrmse);
    return {acc_t > acc_u && n_t <= n_u,
            fmt("acceptance trained %.4f vs untrained %.4f; NRMSE trained %.4f vs untrained %.4f", acc_t, acc_u, n_t,
                n_u)};
}

// ---- A8 ---------------------------------------------------------------------

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y)
{
    const std::size_t k = x.size();
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        mx += std::log(x[i]);
        my += std::log(y[i]);
    }
    mx /= static_cast<double>(k);
    my /= static_cast<double>(k);
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        sxy += (std::log(x[i]) - mx) * (std::log(y[i]) - my);
        sxx += (std::log(x[i]) - mx) * (std::log(x[i]) - mx);
    }
    return sxy / sxx;
}

Verdict scalability()
{
    const auto start = Clock::now();
    PipelineConfig cfg = bench_config();
    cfg.threads = worker_count();
    std::vector<double> ns, n_times, ts, t_times;
    for (std::size_t n : {1000, 2000, 4000, 8000, 16000}) {
        const BenchPoint p = bench_point(n, 10, cfg, 1);
        ns.push_back(static_cast<double>(n));
        n_times.push_back(p.seconds);
        std::fprintf(stderr, "  bench n=%zu T=10: %.3f s\n", n, p.seconds);
    }
    for (std::size_t T = 2; T <= 10; ++T) {
        const BenchPoint p = bench_point(1000, T, cfg, 1);
        ts.push_back(static_cast<double>(T));
        t_times.push_back(p.seconds);
        std::fprintf(stderr, "  bench n=1000 T=%zu: %.3f s\n", T, p.seconds);
    }
    const double sn = loglog_slope(ns, n_times), st = loglog_slope(ts, t_times);
    const double elapsed = seconds_since(start);
    auto in_range = [](double s) { return s >= 0.8 && s <= 1.3; };
    return {in_range(sn) && in_range(st) && elapsed <= 1200.0,
            fmt("log-log slope vs n %.3f, vs T %.3f (range [0.8, 1.3]), %.0f s", sn, st, elapsed)};
}

// ---- A10 --------------------------------------------------------------------

std::vector<double> ranks(const std::vector<double>& v)
{
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < idx.size();) {
        std::size_t j = i;
        while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
        for (std::size_t k = i; k <= j; ++k) r[idx[k]] = 0.5 * static_cast<double>(i + j);
        i = j + 1;
    }
    return r;
}

double spearman(const std::vector<double>& x, const std::vector<double>& y)
{
    const std::vector<double> rx = ranks(x), ry = ranks(y);
    const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / static_cast<double>(rx.size());
    const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / static_cast<double>(ry.size());
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    return sxy / std::sqrt(sxx * syy);
}

Verdict timespan_sweep()
{
    std::vector<double> ts, errs;
    std::string trace;
    for (std::size_t T = 2; T <= 10; ++T) {
        const Instance inst = make_ba_instance(1000, 4, {0.1, 0.1}, T, 0.05, 1);
        PipelineConfig cfg;
        cfg.threads = worker_count();
        const PipelineResult r =
            run_pipeline(inst.graph, inst.truth.final_snapshot(), T, static_cast<double>(inst.num_sources), cfg, 1);
        const double e = nrmse(inst.truth, r.history);
        std::fprintf(stderr, "  sweep T=%zu nrmse=%.4f f1=%.4f\n", T, e, macro_f1(inst.truth, r.history));
        ts.push_back(static_cast<double>(T));
        errs.push_back(e);
    }
    const double rho = spearman(ts, errs);
    return {rho >= 0.6, fmt("Spearman rho(T, NRMSE) = %.3f over T = 2..10 (min 0.6)", rho)};
}

}  // namespace

int main(int argc, char** argv)
{
    const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
        {"A1", oracle_mcmc_agreement}, {"A2", stability_demonstration}, {"A3", small_rate_derivative},
        {"A4", gradient_suites},       {"A5", proposal_correctness},    {"A6", end_to_end_quality},
        {"A7", estimated_vs_true},     {"A8", scalability},             {"A9", ablation},
        {"A10", timespan_sweep},
    };
    std::set<std::string> selected(argv + 1, argv + argc);
    int failures = 0;
    for (const auto& [name, check] : criteria) {
        if (!selected.empty() && !selected.count(name)) continue;
        const auto start = Clock::now();
        const Verdict v = check();
        std::printf("%s %s: %s [%.1f s]\n", v.pass ? "PASS" : "FAIL", name.c_str(), v.detail.c_str(),
                    seconds_since(start));
        std::fflush(stdout);
        failures += !v.pass;
    }
    return failures == 0 ? 0 : 1;
}
