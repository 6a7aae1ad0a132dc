#pragma once

// Test-side reference implementations. They are written from the model
// definition directly and share no code with the library beyond data types.

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "histrecon/diffusion.hpp"
#include "histrecon/graph.hpp"

namespace testing_support {

using histrecon::DiffusionParams;
using histrecon::Graph;
using histrecon::History;
using histrecon::NodeId;
using histrecon::PriorSpec;
using histrecon::Snapshot;
using histrecon::State;

Graph make_graph(std::size_t n, std::vector<std::pair<NodeId, NodeId>> edges);
Graph path_graph(std::size_t n);

/// Builds a history from rows written as strings, e.g. {"IS", "II"}.
History history_of(const std::vector<std::string>& rows);
Snapshot snapshot_of(const std::string& states);
std::string row_string(const History& h, std::size_t t);

/// Plain-probability kernel.
double ref_kernel(const DiffusionParams& p, State prev, std::size_t infected_neighbours, State next);

/// Product of kernel factors (no prior), as a probability.
double ref_transition_prob(const Graph& g, const DiffusionParams& p, const History& h);

/// Monotone states and every new infection adjacent to a previously infected node.
bool ref_feasible(const Graph& g, const History& h);

/// Every (T+1) x n state matrix whose last row equals y_T, in lexicographic
/// order of cells; 3^(n*T) candidates, so only for micro-instances.
void for_each_matrix(std::size_t n, std::size_t timespan, const Snapshot& y_T,
                     const std::function<void(const History&)>& visit);

/// All feasible histories ending in y_T (brute force over all matrices).
std::vector<History> ref_feasible_histories(const Graph& g, const Snapshot& y_T, std::size_t timespan);

/// All snapshots {S,I,R}^n.
std::vector<Snapshot> all_snapshots(std::size_t n);

/// Relabelling helpers: node u becomes perm[u].
std::vector<NodeId> random_permutation(std::size_t n, std::uint64_t seed);
Graph permute_graph(const Graph& g, const std::vector<NodeId>& perm);
History permute_history(const History& h, const std::vector<NodeId>& perm);

double rel_err(double a, double b);

}  // namespace testing_support
