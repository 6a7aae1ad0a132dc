#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "histrecon/graph.hpp"
#include "histrecon/rng.hpp"

namespace histrecon {

enum class State : std::uint8_t { S = 0, I = 1, R = 2 };

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

char state_char(State s);
State state_from_char(char c);

using Snapshot = std::vector<State>;

/// Node states over t = 0..T, stored row-major (one row per time step).
class History {
public:
    History() = default;
    History(std::size_t timespan, std::size_t num_nodes, State fill = State::S)
        : timespan_(timespan), num_nodes_(num_nodes), cells_((timespan + 1) * num_nodes, fill)
    {
    }

    std::size_t timespan() const { return timespan_; }
    std::size_t num_nodes() const { return num_nodes_; }

    State at(std::size_t t, NodeId u) const { return cells_[t * num_nodes_ + u]; }
    State& at(std::size_t t, NodeId u) { return cells_[t * num_nodes_ + u]; }

    std::span<const State> row(std::size_t t) const { return {cells_.data() + t * num_nodes_, num_nodes_}; }
    std::span<State> row(std::size_t t) { return {cells_.data() + t * num_nodes_, num_nodes_}; }
    Snapshot snapshot(std::size_t t) const { return {row(t).begin(), row(t).end()}; }
    Snapshot final_snapshot() const { return snapshot(timespan_); }

    friend bool operator==(const History&, const History&) = default;

private:
    std::size_t timespan_ = 0;
    std::size_t num_nodes_ = 0;
    std::vector<State> cells_;
};

/// SIR rates; the SI model is beta_R == 0.
struct DiffusionParams {
    double beta_I = 0.1;
    double beta_R = 0.1;
};

/// Soft prior on y_0: log P[y_0] = -gamma |n^I(y_0) - n0_I| - gamma n^R(y_0) + const.
struct PriorSpec {
    double n0_I = 0.0;
    double gamma = 1.0;
};

struct HittingTimes {
    std::vector<std::uint32_t> h_I;
    std::vector<std::uint32_t> h_R;

    friend bool operator==(const HittingTimes&, const HittingTimes&) = default;
};

double transition_prob(const DiffusionParams& params, State prev, std::size_t infected_neighbors, State next);
double log_transition_prob(const DiffusionParams& params, State prev, std::size_t infected_neighbors, State next);

Snapshot sample_initial(const Graph& graph, std::size_t n0_I, Rng& rng);
History simulate(const Graph& graph, const DiffusionParams& params, const Snapshot& y0, std::size_t timespan,
                 Rng& rng);

std::size_t count_state(std::span<const State> row, State s);
double log_prior(std::span<const State> y0, const PriorSpec& prior);

/// Number of neighbours of each node that are in state I in `row`.
void count_infected_neighbors(const Graph& graph, std::span<const State> row, std::vector<std::uint32_t>& out);

/// log P_beta[Y] including the unnormalised prior; kNegInf when infeasible.
double log_history_prob(const Graph& graph, const DiffusionParams& params, const History& history,
                        const PriorSpec& prior);
/// Same without the prior term.
double log_transition_sum(const Graph& graph, const DiffusionParams& params, const History& history);

bool is_feasible(const Graph& graph, const History& history);

HittingTimes hitting_times(const History& history);
History history_from_hitting_times(const HittingTimes& hits, std::size_t timespan);

}  // namespace histrecon
