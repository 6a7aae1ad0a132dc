#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "histrecon/rng.hpp"

namespace histrecon {

using NodeId = std::uint32_t;

/// Immutable undirected simple graph in compressed adjacency form.
/// Neighbour lists are sorted ascending; node ids are dense 0..n-1.
class Graph {
public:
    Graph() = default;

    /// Builds from an edge list. Throws on self-loops, duplicates (in either
    /// orientation) and ids >= n.
    Graph(std::size_t n, std::span<const std::pair<NodeId, NodeId>> edges);

    std::size_t num_nodes() const { return offsets_.empty() ? 0 : offsets_.size() - 1; }
    std::size_t num_edges() const { return edges_.size(); }

    std::span<const NodeId> neighbors(NodeId u) const
    {
        return {adjacency_.data() + offsets_[u], adjacency_.data() + offsets_[u + 1]};
    }
    std::size_t degree(NodeId u) const { return offsets_[u + 1] - offsets_[u]; }
    bool has_edge(NodeId u, NodeId v) const;

    /// Edges as (min, max) pairs, sorted lexicographically.
    const std::vector<std::pair<NodeId, NodeId>>& edges() const { return edges_; }

    /// CSR arrays: the neighbours of u occupy slots offsets()[u]..offsets()[u+1].
    const std::vector<std::size_t>& offsets() const { return offsets_; }
    const std::vector<NodeId>& adjacency() const { return adjacency_; }

    /// External id of a dense node (identity unless the graph was read from
    /// a header-less file with sparse ids).
    std::uint64_t external_id(NodeId u) const { return external_ids_.empty() ? u : external_ids_[u]; }
    bool has_id_map() const { return !external_ids_.empty(); }
    void set_external_ids(std::vector<std::uint64_t> ids);

    friend bool operator==(const Graph& a, const Graph& b)
    {
        return a.num_nodes() == b.num_nodes() && a.edges_ == b.edges_;
    }

private:
    std::vector<std::size_t> offsets_;
    std::vector<NodeId> adjacency_;
    std::vector<std::pair<NodeId, NodeId>> edges_;
    std::vector<std::uint64_t> external_ids_;
};

/// Reads the edge-list text format: optional first non-comment line
/// "n <count>", then one "u v" per line, '#' starting a comment line.
Graph parse_edge_list(std::string_view text);
std::string serialize_edge_list(const Graph& graph);

/// Barabasi-Albert graph seeded with a complete graph on `attachment` nodes.
Graph generate_ba(std::size_t n, std::size_t attachment, Rng& rng);
/// Erdos-Renyi G(n, p).
Graph generate_er(std::size_t n, double p, Rng& rng);

}  // namespace histrecon
