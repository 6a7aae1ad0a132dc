#include "histrecon/evaluation.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "histrecon/errors.hpp"
#include "histrecon/parallel.hpp"

namespace histrecon {

namespace {

using Pair = std::pair<std::uint32_t, std::uint32_t>;

std::vector<Pair> admissible_pairs(State final_state, std::uint32_t T)
{
    std::vector<Pair> out;
    switch (final_state) {
    case State::S: out.emplace_back(T + 1, T + 1); break;
    case State::I:
        for (std::uint32_t hi = 0; hi <= T; ++hi) out.emplace_back(hi, T + 1);
        break;
    case State::R:
        for (std::uint32_t hi = 0; hi <= T; ++hi)
            for (std::uint32_t hr = hi; hr <= T; ++hr) out.emplace_back(hi, hr);
        break;
    }
    return out;
}

class Enumerator {
public:
    Enumerator(const Graph& graph, const Snapshot& y_T, std::size_t timespan)
        : graph_(graph), T_(static_cast<std::uint32_t>(timespan)), n_(graph.num_nodes())
    {
        options_.reserve(n_);
        for (std::size_t u = 0; u < n_; ++u) options_.push_back(admissible_pairs(y_T[u], T_));
        // A node's infection condition is decidable once it and all its
        // neighbours are assigned, i.e. at depth max(N[u]).
        checks_at_.resize(n_);
        for (NodeId u = 0; u < n_; ++u) {
            NodeId last = u;
            for (NodeId v : graph.neighbors(u)) last = std::max(last, v);
            checks_at_[last].push_back(u);
        }
        hits_.h_I.assign(n_, 0);
        hits_.h_R.assign(n_, 0);
    }

    std::size_t first_options() const { return n_ == 0 ? 1 : options_[0].size(); }

    /// Enumerates with node 0 fixed to its `choice`-th option.
    void run(std::size_t choice, const std::function<void(const HittingTimes&)>& visit)
    {
        if (n_ == 0) {
            visit(hits_);
            return;
        }
        assign(0, choice, visit);
    }

private:
    bool infection_supported(NodeId u) const
    {
        const std::uint32_t hi = hits_.h_I[u];
        if (hi == 0 || hi > T_) return true;
        // Some neighbour must be I at time hi - 1.
        for (NodeId v : graph_.neighbors(u))
            if (hits_.h_I[v] <= hi - 1 && hi - 1 < hits_.h_R[v]) return true;
        return false;
    }

    void assign(std::size_t depth, std::size_t choice, const std::function<void(const HittingTimes&)>& visit)
    {
        const auto [hi, hr] = options_[depth][choice];
        hits_.h_I[depth] = hi;
        hits_.h_R[depth] = hr;
        for (NodeId w : checks_at_[depth])
            if (!infection_supported(w)) return;
        if (depth + 1 == n_) {
            visit(hits_);
            return;
        }
        for (std::size_t c = 0; c < options_[depth + 1].size(); ++c) assign(depth + 1, c, visit);
    }

    const Graph& graph_;
    std::uint32_t T_;
    std::size_t n_;
    std::vector<std::vector<Pair>> options_;
    std::vector<std::vector<NodeId>> checks_at_;
    HittingTimes hits_;
};

void check_instance(const Graph& graph, const Snapshot& y_T, std::size_t timespan)
{
    require(y_T.size() == graph.num_nodes(), ErrorCode::shape_mismatch, "snapshot length differs from node count");
    require(timespan >= 1 && timespan < 255, ErrorCode::invalid_argument, "oracle timespan must lie in [1, 254]");
    const double size = enumeration_size(y_T, timespan);
    require(size <= kEnumerationGuard, ErrorCode::guard,
            "instance has " + std::to_string(size) + " candidate histories, above the enumeration guard 1e8");
}

}  // namespace

double enumeration_size(const Snapshot& y_T, std::size_t timespan)
{
    const double T = static_cast<double>(timespan);
    double size = 1.0;
    for (State s : y_T) {
        if (s == State::I) size *= T + 1.0;
        if (s == State::R) size *= (T + 1.0) * (T + 2.0) / 2.0;
    }
    return size;
}

void enumerate_histories(const Graph& graph, const Snapshot& y_T, std::size_t timespan,
                         const std::function<void(const HittingTimes&)>& visit)
{
    check_instance(graph, y_T, timespan);
    Enumerator e(graph, y_T, timespan);
    for (std::size_t c = 0; c < e.first_options(); ++c) e.run(c, visit);
}

OracleResult exact_posterior(const Graph& graph, const DiffusionParams& params, const Snapshot& y_T,
                             std::size_t timespan, const PriorSpec& prior, std::size_t threads)
{
    check_instance(graph, y_T, timespan);
    const std::size_t n = graph.num_nodes();

    // Partition on node 0's options; concatenating partitions in option order
    // reproduces the sequential enumeration order exactly.
    Enumerator probe(graph, y_T, timespan);
    const std::size_t parts = probe.first_options();
    std::vector<std::vector<OracleEntry>> partial(parts);
    parallel_for(parts, threads, [&](std::size_t c) {
        Enumerator e(graph, y_T, timespan);
        e.run(c, [&](const HittingTimes& hits) {
            const History h = history_from_hitting_times(hits, timespan);
            const double lw = log_history_prob(graph, params, h, prior);
            if (!std::isfinite(lw)) return;
            OracleEntry entry;
            entry.h_I.assign(hits.h_I.begin(), hits.h_I.end());
            entry.h_R.assign(hits.h_R.begin(), hits.h_R.end());
            entry.log_weight = lw;
            partial[c].push_back(std::move(entry));
        });
    });

    OracleResult result;
    for (auto& p : partial)
        for (auto& e : p) result.histories.push_back(std::move(e));
    require(!result.histories.empty(), ErrorCode::invalid_argument,
            "snapshot is inconsistent: no feasible history has positive weight");

    double max_lw = kNegInf;
    for (const auto& e : result.histories) max_lw = std::max(max_lw, e.log_weight);
    double total = 0.0;
    result.expected_h_I.assign(n, 0.0);
    result.expected_h_R.assign(n, 0.0);
    for (const auto& e : result.histories) {
        const double w = std::exp(e.log_weight - max_lw);
        total += w;
        for (std::size_t u = 0; u < n; ++u) {
            result.expected_h_I[u] += w * e.h_I[u];
            result.expected_h_R[u] += w * e.h_R[u];
        }
    }
    for (std::size_t u = 0; u < n; ++u) {
        result.expected_h_I[u] /= total;
        result.expected_h_R[u] /= total;
    }
    result.log_snapshot_prob = max_lw + std::log(total);
    return result;
}

namespace {

void check_same_shape(const History& a, const History& b)
{
    require(a.timespan() == b.timespan() && a.num_nodes() == b.num_nodes(), ErrorCode::shape_mismatch,
            "histories have different shapes");
}

}  // namespace

double macro_f1(const History& truth, const History& reconstruction)
{
    check_same_shape(truth, reconstruction);
    // confusion[true][predicted] over rows t < T.
    std::array<std::array<std::uint64_t, 3>, 3> confusion{};
    for (std::size_t t = 0; t < truth.timespan(); ++t)
        for (NodeId u = 0; u < truth.num_nodes(); ++u)
            ++confusion[static_cast<int>(truth.at(t, u))][static_cast<int>(reconstruction.at(t, u))];

    double sum = 0.0;
    int classes = 0;
    for (int c = 0; c < 3; ++c) {
        std::uint64_t tp = confusion[c][c], fp = 0, fn = 0;
        for (int o = 0; o < 3; ++o) {
            if (o == c) continue;
            fp += confusion[o][c];
            fn += confusion[c][o];
        }
        if (tp + fp + fn == 0) continue;  // class absent from both
        ++classes;
        sum += 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
    }
    return classes == 0 ? 1.0 : sum / classes;
}

double nrmse(const History& truth, const History& reconstruction)
{
    check_same_shape(truth, reconstruction);
    const HittingTimes a = hitting_times(truth);
    const HittingTimes b = hitting_times(reconstruction);
    double squared = 0.0;
    for (std::size_t u = 0; u < a.h_I.size(); ++u) {
        const double dI = static_cast<double>(a.h_I[u]) - static_cast<double>(b.h_I[u]);
        const double dR = static_cast<double>(a.h_R[u]) - static_cast<double>(b.h_R[u]);
        squared += dI * dI + dR * dR;
    }
    const double T1 = static_cast<double>(truth.timespan() + 1);
    const double n = static_cast<double>(truth.num_nodes());
    if (n == 0) return 0.0;
    return std::sqrt(squared / (2.0 * n * T1 * T1));
}

double gap(double actual, double ideal, Direction direction)
{
    require(ideal != 0.0, ErrorCode::invalid_argument, "gap is undefined for an ideal score of zero");
    return direction == Direction::higher_better ? (ideal - actual) / ideal : (actual - ideal) / ideal;
}

MetricReport evaluate(const History& truth, const History& reconstruction)
{
    MetricReport report;
    report.macro_f1 = macro_f1(truth, reconstruction);
    report.nrmse = nrmse(truth, reconstruction);
    return report;
}

}  // namespace histrecon
