#include "histrecon/graph.hpp"

#include <algorithm>
#include <charconv>
#include <map>
#include <optional>
#include <sstream>

#include "histrecon/errors.hpp"

namespace histrecon {

const char* error_code_name(ErrorCode code) noexcept
{
    switch (code) {
    case ErrorCode::invalid_argument: return "invalid_argument";
    case ErrorCode::io: return "io";
    case ErrorCode::parse: return "parse";
    case ErrorCode::guard: return "guard";
    case ErrorCode::estimation_impossible: return "estimation_impossible";
    case ErrorCode::numeric: return "numeric";
    case ErrorCode::shape_mismatch: return "shape_mismatch";
    }
    return "unknown";
}

Graph::Graph(std::size_t n, std::span<const std::pair<NodeId, NodeId>> edges)
{
    edges_.reserve(edges.size());
    for (auto [u, v] : edges) {
        require(u < n && v < n, ErrorCode::invalid_argument,
                "edge (" + std::to_string(u) + "," + std::to_string(v) + ") references a node >= n=" +
                    std::to_string(n));
        require(u != v, ErrorCode::invalid_argument, "self-loop at node " + std::to_string(u));
        edges_.emplace_back(std::min(u, v), std::max(u, v));
    }
    std::sort(edges_.begin(), edges_.end());
    auto dup = std::adjacent_find(edges_.begin(), edges_.end());
    if (dup != edges_.end())
        fail(ErrorCode::invalid_argument,
             "duplicate edge (" + std::to_string(dup->first) + "," + std::to_string(dup->second) + ")");

    std::vector<std::size_t> degree(n, 0);
    for (auto [u, v] : edges_) {
        ++degree[u];
        ++degree[v];
    }
    offsets_.assign(n + 1, 0);
    for (std::size_t u = 0; u < n; ++u) offsets_[u + 1] = offsets_[u] + degree[u];
    adjacency_.resize(offsets_[n]);
    std::vector<std::size_t> cursor(offsets_.begin(), offsets_.end() - 1);
    // Edges are sorted, so filling in this order leaves every list ascending
    // for the larger endpoint; sort anyway to cover the smaller endpoint.
    for (auto [u, v] : edges_) {
        adjacency_[cursor[u]++] = v;
        adjacency_[cursor[v]++] = u;
    }
    for (std::size_t u = 0; u < n; ++u)
        std::sort(adjacency_.begin() + offsets_[u], adjacency_.begin() + offsets_[u + 1]);
}

bool Graph::has_edge(NodeId u, NodeId v) const
{
    auto nb = neighbors(u);
    return std::binary_search(nb.begin(), nb.end(), v);
}

void Graph::set_external_ids(std::vector<std::uint64_t> ids)
{
    require(ids.size() == num_nodes(), ErrorCode::shape_mismatch, "id map size differs from node count");
    external_ids_ = std::move(ids);
}

namespace {

std::string_view trim(std::string_view s)
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

bool parse_u64(std::string_view token, std::uint64_t& out)
{
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), out);
    return ec == std::errc() && ptr == token.data() + token.size();
}

std::vector<std::string_view> split_ws(std::string_view line)
{
    std::vector<std::string_view> tokens;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
        std::size_t j = i;
        while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
        if (j > i) tokens.push_back(line.substr(i, j - i));
        i = j;
    }
    return tokens;
}

}  // namespace

Graph parse_edge_list(std::string_view text)
{
    std::vector<std::pair<std::uint64_t, std::uint64_t>> raw;
    std::optional<std::uint64_t> declared_n;
    std::size_t line_no = 0;
    bool seen_content = false;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = trim(text.substr(pos, end - pos));
        ++line_no;
        pos = end + 1;
        if (line.empty() || line.front() == '#') {
            if (end == text.size()) break;
            continue;
        }
        auto tokens = split_ws(line);
        const std::string where = "line " + std::to_string(line_no);
        if (!seen_content && tokens.size() == 2 && tokens[0] == "n") {
            std::uint64_t n = 0;
            require(parse_u64(tokens[1], n), ErrorCode::parse, where + ": malformed node-count header");
            declared_n = n;
            seen_content = true;
            continue;
        }
        seen_content = true;
        std::uint64_t u = 0, v = 0;
        require(tokens.size() == 2 && parse_u64(tokens[0], u) && parse_u64(tokens[1], v), ErrorCode::parse,
                where + ": expected \"u v\" with non-negative integers");
        if (declared_n)
            require(u < *declared_n && v < *declared_n, ErrorCode::parse,
                    where + ": node id exceeds declared n=" + std::to_string(*declared_n));
        require(u != v, ErrorCode::parse, where + ": self-loop at node " + std::to_string(u));
        raw.emplace_back(u, v);
        if (end == text.size()) break;
    }

    std::vector<std::pair<NodeId, NodeId>> edges;
    edges.reserve(raw.size());
    std::vector<std::uint64_t> id_map;
    std::size_t n = 0;
    if (declared_n) {
        n = *declared_n;
        for (auto [u, v] : raw) edges.emplace_back(static_cast<NodeId>(u), static_cast<NodeId>(v));
    } else {
        for (auto [u, v] : raw) {
            id_map.push_back(u);
            id_map.push_back(v);
        }
        std::sort(id_map.begin(), id_map.end());
        id_map.erase(std::unique(id_map.begin(), id_map.end()), id_map.end());
        n = id_map.size();
        auto dense = [&](std::uint64_t id) {
            return static_cast<NodeId>(std::lower_bound(id_map.begin(), id_map.end(), id) - id_map.begin());
        };
        for (auto [u, v] : raw) edges.emplace_back(dense(u), dense(v));
    }

    std::vector<std::pair<NodeId, NodeId>> sorted = edges;
    for (auto& e : sorted)
        if (e.first > e.second) std::swap(e.first, e.second);
    std::sort(sorted.begin(), sorted.end());
    auto dup = std::adjacent_find(sorted.begin(), sorted.end());
    if (dup != sorted.end()) {
        // Report the line of the second occurrence.
        std::map<std::pair<NodeId, NodeId>, int> seen;
        std::size_t index = 0;
        for (auto e : edges) {
            if (e.first > e.second) std::swap(e.first, e.second);
            if (seen[e]++ > 0) break;
            ++index;
        }
        fail(ErrorCode::parse, "edge #" + std::to_string(index + 1) + ": duplicate edge (" +
                                   std::to_string(raw[index].first) + "," + std::to_string(raw[index].second) + ")");
    }

    Graph graph(n, edges);
    bool identity = true;
    for (std::size_t i = 0; i < id_map.size(); ++i) identity = identity && id_map[i] == i;
    if (!identity) graph.set_external_ids(std::move(id_map));
    return graph;
}

std::string serialize_edge_list(const Graph& graph)
{
    std::ostringstream out;
    out << "n " << graph.num_nodes() << '\n';
    for (auto [u, v] : graph.edges()) out << u << ' ' << v << '\n';
    return out.str();
}

Graph generate_ba(std::size_t n, std::size_t attachment, Rng& rng)
{
    require(attachment >= 1, ErrorCode::invalid_argument, "BA attachment must be >= 1");
    require(n > attachment, ErrorCode::invalid_argument, "BA requires n > attachment");

    std::vector<std::pair<NodeId, NodeId>> edges;
    edges.reserve(attachment * (attachment - 1) / 2 + attachment * (n - attachment));
    // Every edge endpoint once: uniform draws from this list are degree-proportional.
    std::vector<NodeId> endpoints;
    endpoints.reserve(2 * edges.capacity());
    for (NodeId u = 0; u < attachment; ++u)
        for (NodeId v = u + 1; v < attachment; ++v) {
            edges.emplace_back(u, v);
            endpoints.push_back(u);
            endpoints.push_back(v);
        }

    std::vector<NodeId> targets;
    std::vector<char> chosen(n, 0);
    for (NodeId w = static_cast<NodeId>(attachment); w < n; ++w) {
        targets.clear();
        if (endpoints.empty()) {
            // attachment == 1: the seed is a single isolated node.
            targets.push_back(0);
        } else {
            while (targets.size() < attachment) {
                NodeId v = endpoints[rng.below(endpoints.size())];
                if (!chosen[v]) {
                    chosen[v] = 1;
                    targets.push_back(v);
                }
            }
        }
        for (NodeId v : targets) {
            chosen[v] = 0;
            edges.emplace_back(v, w);
            endpoints.push_back(v);
            endpoints.push_back(w);
        }
    }
    return Graph(n, edges);
}

Graph generate_er(std::size_t n, double p, Rng& rng)
{
    require(p >= 0.0 && p <= 1.0, ErrorCode::invalid_argument, "ER edge probability must lie in [0,1]");
    std::vector<std::pair<NodeId, NodeId>> edges;
    for (NodeId u = 0; u < n; ++u)
        for (NodeId v = u + 1; v < n; ++v)
            if (rng.uniform() < p) edges.emplace_back(u, v);
    return Graph(n, edges);
}

}  // namespace histrecon
