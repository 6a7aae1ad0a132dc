#include "histrecon/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "histrecon/errors.hpp"

namespace histrecon {

char state_char(State s)
{
    switch (s) {
    case State::S: return 'S';
    case State::I: return 'I';
    case State::R: return 'R';
    }
    return '?';
}

State state_from_char(char c)
{
    switch (c) {
    case 'S': return State::S;
    case 'I': return State::I;
    case 'R': return State::R;
    default: fail(ErrorCode::parse, std::string("invalid state character '") + c + "'");
    }
}

double transition_prob(const DiffusionParams& params, State prev, std::size_t k, State next)
{
    const double escape = std::pow(1.0 - params.beta_I, static_cast<double>(k));
    switch (prev) {
    case State::S:
        switch (next) {
        case State::S: return escape;
        case State::I: return (1.0 - escape) * (1.0 - params.beta_R);
        case State::R: return (1.0 - escape) * params.beta_R;
        }
        break;
    case State::I:
        switch (next) {
        case State::S: return 0.0;
        case State::I: return 1.0 - params.beta_R;
        case State::R: return params.beta_R;
        }
        break;
    case State::R: return next == State::R ? 1.0 : 0.0;
    }
    return 0.0;
}

double log_transition_prob(const DiffusionParams& params, State prev, std::size_t k, State next)
{
    const double log_escape = static_cast<double>(k) * std::log1p(-params.beta_I);
    // log(1 - escape), accurate for small beta_I * k.
    auto log_infect = [&] { return k == 0 ? kNegInf : std::log(-std::expm1(log_escape)); };
    auto log_or_neginf = [](double p) { return p > 0.0 ? std::log(p) : kNegInf; };
    switch (prev) {
    case State::S:
        switch (next) {
        case State::S: return log_escape;
        case State::I: return log_infect() + std::log1p(-params.beta_R);
        case State::R: return log_infect() + log_or_neginf(params.beta_R);
        }
        break;
    case State::I:
        switch (next) {
        case State::S: return kNegInf;
        case State::I: return std::log1p(-params.beta_R);
        case State::R: return log_or_neginf(params.beta_R);
        }
        break;
    case State::R: return next == State::R ? 0.0 : kNegInf;
    }
    return kNegInf;
}

Snapshot sample_initial(const Graph& graph, std::size_t n0_I, Rng& rng)
{
    const std::size_t n = graph.num_nodes();
    require(n0_I <= n, ErrorCode::invalid_argument,
            "n0_I=" + std::to_string(n0_I) + " exceeds node count " + std::to_string(n));
    // Partial Fisher-Yates: the first n0_I entries form a uniform subset.
    std::vector<NodeId> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = static_cast<NodeId>(i);
    for (std::size_t i = 0; i < n0_I; ++i) {
        std::size_t j = i + rng.below(n - i);
        std::swap(order[i], order[j]);
    }
    Snapshot y0(n, State::S);
    for (std::size_t i = 0; i < n0_I; ++i) y0[order[i]] = State::I;
    return y0;
}

void count_infected_neighbors(const Graph& graph, std::span<const State> row, std::vector<std::uint32_t>& out)
{
    const std::size_t n = graph.num_nodes();
    out.assign(n, 0);
    const auto& offsets = graph.offsets();
    const auto& adjacency = graph.adjacency();
    for (std::size_t u = 0; u < n; ++u) {
        if (row[u] != State::I) continue;
        for (std::size_t slot = offsets[u]; slot < offsets[u + 1]; ++slot) ++out[adjacency[slot]];
    }
}

History simulate(const Graph& graph, const DiffusionParams& params, const Snapshot& y0, std::size_t timespan,
                 Rng& rng)
{
    const std::size_t n = graph.num_nodes();
    require(y0.size() == n, ErrorCode::shape_mismatch, "initial snapshot length differs from node count");
    require(timespan >= 1, ErrorCode::invalid_argument, "timespan must be >= 1");
    History history(timespan, n);
    std::copy(y0.begin(), y0.end(), history.row(0).begin());
    std::vector<std::uint32_t> infected;
    for (std::size_t t = 0; t < timespan; ++t) {
        auto prev = history.row(t);
        auto next = history.row(t + 1);
        count_infected_neighbors(graph, prev, infected);
        for (std::size_t u = 0; u < n; ++u) {
            switch (prev[u]) {
            case State::S: {
                const double escape = std::pow(1.0 - params.beta_I, static_cast<double>(infected[u]));
                if (infected[u] == 0 || rng.uniform() < escape)
                    next[u] = State::S;
                else
                    next[u] = rng.uniform() < params.beta_R ? State::R : State::I;
                break;
            }
            case State::I: next[u] = rng.uniform() < params.beta_R ? State::R : State::I; break;
            case State::R: next[u] = State::R; break;
            }
        }
    }
    return history;
}

std::size_t count_state(std::span<const State> row, State s)
{
    return static_cast<std::size_t>(std::count(row.begin(), row.end(), s));
}

double log_prior(std::span<const State> y0, const PriorSpec& prior)
{
    const double n_I = static_cast<double>(count_state(y0, State::I));
    const double n_R = static_cast<double>(count_state(y0, State::R));
    return -prior.gamma * std::abs(n_I - prior.n0_I) - prior.gamma * n_R;
}

double log_transition_sum(const Graph& graph, const DiffusionParams& params, const History& history)
{
    const std::size_t n = graph.num_nodes();
    require(history.num_nodes() == n, ErrorCode::shape_mismatch, "history width differs from node count");
    const double log_keep_I = std::log1p(-params.beta_R);
    const double log_recover = params.beta_R > 0.0 ? std::log(params.beta_R) : kNegInf;
    const double log_not_infected_by_one = std::log1p(-params.beta_I);
    std::vector<std::uint32_t> infected;
    double total = 0.0;
    for (std::size_t t = 0; t < history.timespan(); ++t) {
        auto prev = history.row(t);
        auto next = history.row(t + 1);
        count_infected_neighbors(graph, prev, infected);
        for (std::size_t u = 0; u < n; ++u) {
            const State a = prev[u];
            const State b = next[u];
            if (a == State::S) {
                const double log_escape = infected[u] * log_not_infected_by_one;
                if (b == State::S) {
                    total += log_escape;
                } else {
                    if (infected[u] == 0) return kNegInf;
                    total += std::log(-std::expm1(log_escape)) + (b == State::I ? log_keep_I : log_recover);
                }
            } else if (a == State::I) {
                if (b == State::S) return kNegInf;
                total += b == State::I ? log_keep_I : log_recover;
            } else if (b != State::R) {
                return kNegInf;
            }
        }
        if (total == kNegInf) return kNegInf;
    }
    return total;
}

double log_history_prob(const Graph& graph, const DiffusionParams& params, const History& history,
                        const PriorSpec& prior)
{
    const double transitions = log_transition_sum(graph, params, history);
    if (transitions == kNegInf) return kNegInf;
    return log_prior(history.row(0), prior) + transitions;
}

bool is_feasible(const Graph& graph, const History& history)
{
    const std::size_t n = graph.num_nodes();
    if (history.num_nodes() != n) return false;
    std::vector<std::uint32_t> infected;
    for (std::size_t t = 0; t < history.timespan(); ++t) {
        auto prev = history.row(t);
        auto next = history.row(t + 1);
        count_infected_neighbors(graph, prev, infected);
        for (std::size_t u = 0; u < n; ++u) {
            const State a = prev[u];
            const State b = next[u];
            if (a == State::S && b != State::S && infected[u] == 0) return false;
            if (a == State::I && b == State::S) return false;
            if (a == State::R && b != State::R) return false;
        }
    }
    return true;
}

HittingTimes hitting_times(const History& history)
{
    const std::size_t n = history.num_nodes();
    const auto cap = static_cast<std::uint32_t>(history.timespan() + 1);
    HittingTimes hits{std::vector<std::uint32_t>(n, cap), std::vector<std::uint32_t>(n, cap)};
    for (std::size_t t = history.timespan() + 1; t-- > 0;) {
        auto row = history.row(t);
        for (std::size_t u = 0; u < n; ++u) {
            if (row[u] != State::S) hits.h_I[u] = static_cast<std::uint32_t>(t);
            if (row[u] == State::R) hits.h_R[u] = static_cast<std::uint32_t>(t);
        }
    }
    return hits;
}

History history_from_hitting_times(const HittingTimes& hits, std::size_t timespan)
{
    require(hits.h_I.size() == hits.h_R.size(), ErrorCode::shape_mismatch, "h_I and h_R lengths differ");
    const std::size_t n = hits.h_I.size();
    History history(timespan, n);
    for (std::size_t u = 0; u < n; ++u) {
        require(hits.h_I[u] <= hits.h_R[u], ErrorCode::invalid_argument,
                "node " + std::to_string(u) + " has h_I > h_R");
        for (std::size_t t = 0; t <= timespan; ++t) {
            State s = State::S;
            if (t >= hits.h_R[u])
                s = State::R;
            else if (t >= hits.h_I[u])
                s = State::I;
            history.at(t, static_cast<NodeId>(u)) = s;
        }
    }
    return history;
}

}  // namespace histrecon
