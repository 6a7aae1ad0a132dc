#include "histrecon/proposal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "histrecon/errors.hpp"

namespace histrecon {

namespace {

constexpr std::uint32_t kUnbounded = std::numeric_limits<std::uint32_t>::max();

/// Stage-2 sort key: q_I on a 2^-36 grid, so nodes whose probabilities differ
/// only by rounding noise (e.g. structurally symmetric nodes) tie and fall back
/// to node-id order.
std::int64_t order_key(double q) { return static_cast<std::int64_t>(q * 0x1p36); }

/// One reverse step y_{t+1} -> y_t. In sampling mode the choices are drawn
/// from `rng`; in replay mode they are read from `target` and the step fails
/// (returns false) when the target is unreachable. `on_choice(kind, u, chose_first)`
/// is told about every stochastic choice: kind 0 = recovery flip (first = flip to I),
/// kind 1 = infection undo (first = become S).
template <class OnChoice>
bool reverse_step(const ProposalProbs& probs, const Graph& graph, std::size_t t, std::span<const State> next,
                  std::span<State> out, const std::span<const State>* target, Rng* rng, OnChoice&& on_choice,
                  SamplerCounters* counters, std::vector<std::uint32_t>& rho, std::vector<NodeId>& order)
{
    const std::size_t n = graph.num_nodes();

    // Stage 1: R nodes may step back to I. `out` holds the intermediate states.
    for (NodeId u = 0; u < n; ++u) {
        const State s = next[u];
        if (s == State::S) {
            if (target && (*target)[u] != State::S) return false;
            out[u] = State::S;
        } else if (s == State::I) {
            if (target && (*target)[u] == State::R) return false;
            out[u] = State::I;
        } else {
            const double q = probs.recover(t, u);
            bool flip;
            if (target)
                flip = (*target)[u] != State::R;
            else
                flip = rng->uniform() < q;
            on_choice(0, u, flip);
            out[u] = flip ? State::I : State::R;
        }
    }

    // Stage 2: decide which intermediate-I nodes were still susceptible.
    order.clear();
    for (NodeId u = 0; u < n; ++u)
        if (out[u] == State::I) order.push_back(u);
    std::uint64_t comparisons = 0;
    std::sort(order.begin(), order.end(), [&](NodeId a, NodeId b) {
        ++comparisons;
        const std::int64_t ka = order_key(probs.infect(t, a)), kb = order_key(probs.infect(t, b));
        return ka != kb ? ka > kb : a < b;
    });
    if (counters) counters->sort_comparisons += comparisons;

    // rho[u]: for a node that may need an infector, the number of closed
    // neighbours that could still be I at time t; unbounded otherwise.
    rho.assign(n, kUnbounded);
    for (NodeId u : order) {
        std::uint32_t count = 1;
        for (NodeId v : graph.neighbors(u))
            if (out[v] == State::I) ++count;
        rho[u] = count;
    }
    if (counters) counters->counter_updates += order.size();

    for (NodeId v : order) {
        const auto nb = graph.neighbors(v);
        bool forced = rho[v] <= 1;
        for (std::size_t i = 0; i < nb.size() && !forced; ++i) forced = rho[nb[i]] <= 1;
        if (counters) counters->counter_updates += nb.size() + 1;

        bool to_S;
        if (forced) {
            if (target && (*target)[v] == State::S) return false;
            to_S = false;
            if (counters) ++counters->forced_choices;
        } else {
            if (target)
                to_S = (*target)[v] == State::S;
            else
                to_S = rng->uniform() < probs.infect(t, v);
            on_choice(1, v, to_S);
            if (counters) ++counters->stochastic_choices;
        }

        if (to_S) {
            out[v] = State::S;
            if (rho[v] != kUnbounded) --rho[v];
            for (NodeId u : nb)
                if (rho[u] != kUnbounded) --rho[u];
        } else {
            rho[v] = kUnbounded;
            for (NodeId u : nb) rho[u] = kUnbounded;
        }
        if (counters) counters->counter_updates += nb.size() + 1;
    }
    return true;
}

void check_shapes(const ProposalProbs& probs, const Graph& graph, const Snapshot& y_T)
{
    require(probs.num_nodes == graph.num_nodes() && y_T.size() == graph.num_nodes(), ErrorCode::shape_mismatch,
            "proposal probabilities, graph and snapshot disagree on node count");
    require(probs.timespan >= 1, ErrorCode::shape_mismatch, "proposal probabilities have no time steps");
}

}  // namespace

SampledHistory sample_history(const ProposalProbs& probs, const Graph& graph, const Snapshot& y_T, Rng& rng,
                              SamplerCounters* counters)
{
    check_shapes(probs, graph, y_T);
    const std::size_t T = probs.timespan;
    SampledHistory result{History(T, graph.num_nodes()), 0.0};
    std::copy(y_T.begin(), y_T.end(), result.history.row(T).begin());
    std::vector<std::uint32_t> rho;
    std::vector<NodeId> order;
    double log_q = 0.0;
    for (std::size_t t = T; t-- > 0;) {
        auto on_choice = [&](int kind, NodeId u, bool first) {
            const double q = kind == 0 ? probs.recover(t, u) : probs.infect(t, u);
            log_q += first ? std::log(q) : std::log1p(-q);
        };
        reverse_step(probs, graph, t, result.history.row(t + 1), result.history.row(t), nullptr, &rng, on_choice,
                     counters, rho, order);
    }
    result.log_q = log_q;
    return result;
}

double eval_log_q(const ProposalProbs& probs, const Graph& graph, const Snapshot& y_T, const History& history)
{
    check_shapes(probs, graph, y_T);
    require(history.timespan() == probs.timespan && history.num_nodes() == graph.num_nodes(),
            ErrorCode::shape_mismatch, "history shape does not match the proposal");
    const std::size_t T = probs.timespan;
    if (!std::equal(y_T.begin(), y_T.end(), history.row(T).begin())) return kNegInf;
    std::vector<State> scratch(graph.num_nodes());
    std::vector<std::uint32_t> rho;
    std::vector<NodeId> order;
    double log_q = 0.0;
    for (std::size_t t = T; t-- > 0;) {
        auto on_choice = [&](int kind, NodeId u, bool first) {
            const double q = kind == 0 ? probs.recover(t, u) : probs.infect(t, u);
            log_q += first ? std::log(q) : std::log1p(-q);
        };
        const auto target = history.row(t);
        if (!reverse_step(probs, graph, t, history.row(t + 1), scratch, &target, nullptr, on_choice, nullptr, rho,
                          order))
            return kNegInf;
    }
    return log_q;
}

double eval_log_q_grad(const ProposalProbs& probs, const Graph& graph, const Snapshot& y_T, const History& history,
                       std::vector<double>& d_q_I, std::vector<double>& d_q_R)
{
    check_shapes(probs, graph, y_T);
    require(history.timespan() == probs.timespan && history.num_nodes() == graph.num_nodes(),
            ErrorCode::shape_mismatch, "history shape does not match the proposal");
    const std::size_t T = probs.timespan;
    const std::size_t n = graph.num_nodes();
    d_q_I.assign(T * n, 0.0);
    d_q_R.assign(T * n, 0.0);
    if (!std::equal(y_T.begin(), y_T.end(), history.row(T).begin())) return kNegInf;
    std::vector<State> scratch(n);
    std::vector<std::uint32_t> rho;
    std::vector<NodeId> order;
    double log_q = 0.0;
    for (std::size_t t = T; t-- > 0;) {
        auto on_choice = [&](int kind, NodeId u, bool first) {
            const double q = kind == 0 ? probs.recover(t, u) : probs.infect(t, u);
            auto& dq = kind == 0 ? d_q_R : d_q_I;
            if (first) {
                log_q += std::log(q);
                dq[t * n + u] += 1.0 / q;
            } else {
                log_q += std::log1p(-q);
                dq[t * n + u] -= 1.0 / (1.0 - q);
            }
        };
        const auto target = history.row(t);
        if (!reverse_step(probs, graph, t, history.row(t + 1), scratch, &target, nullptr, on_choice, nullptr, rho,
                          order))
            return kNegInf;
    }
    return log_q;
}

}  // namespace histrecon
