#include "support.hpp"

#include <algorithm>
#include <stdexcept>

#include "histrecon/rng.hpp"

namespace testing_support {

Graph make_graph(std::size_t n, std::vector<std::pair<NodeId, NodeId>> edges) { return Graph(n, edges); }

Graph path_graph(std::size_t n)
{
    std::vector<std::pair<NodeId, NodeId>> edges;
    for (NodeId u = 0; u + 1 < n; ++u) edges.emplace_back(u, u + 1);
    return Graph(n, edges);
}

State state_of(char c)
{
    switch (c) {
    case 'S': return State::S;
    case 'I': return State::I;
    case 'R': return State::R;
    }
    throw std::invalid_argument("bad state char");
}

History history_of(const std::vector<std::string>& rows)
{
    History h(rows.size() - 1, rows[0].size());
    for (std::size_t t = 0; t < rows.size(); ++t)
        for (std::size_t u = 0; u < rows[t].size(); ++u) h.at(t, static_cast<NodeId>(u)) = state_of(rows[t][u]);
    return h;
}

Snapshot snapshot_of(const std::string& states)
{
    Snapshot s;
    for (char c : states) s.push_back(state_of(c));
    return s;
}

std::string row_string(const History& h, std::size_t t)
{
    std::string s;
    for (std::size_t u = 0; u < h.num_nodes(); ++u) s += "SIR"[static_cast<int>(h.at(t, static_cast<NodeId>(u)))];
    return s;
}

double ref_kernel(const DiffusionParams& p, State prev, std::size_t k, State next)
{
    double escape = 1.0;
    for (std::size_t i = 0; i < k; ++i) escape *= 1.0 - p.beta_I;
    if (prev == State::S) {
        if (next == State::S) return escape;
        if (next == State::I) return (1.0 - escape) * (1.0 - p.beta_R);
        return (1.0 - escape) * p.beta_R;
    }
    if (prev == State::I) {
        if (next == State::S) return 0.0;
        if (next == State::I) return 1.0 - p.beta_R;
        return p.beta_R;
    }
    return next == State::R ? 1.0 : 0.0;
}

namespace {

std::size_t infected_neighbours(const Graph& g, const History& h, std::size_t t, NodeId u)
{
    std::size_t k = 0;
    for (NodeId v = 0; v < g.num_nodes(); ++v)
        if (v != u && g.has_edge(u, v) && h.at(t, v) == State::I) ++k;
    return k;
}

}  // namespace

double ref_transition_prob(const Graph& g, const DiffusionParams& p, const History& h)
{
    double prob = 1.0;
    for (std::size_t t = 0; t < h.timespan(); ++t)
        for (NodeId u = 0; u < h.num_nodes(); ++u)
            prob *= ref_kernel(p, h.at(t, u), infected_neighbours(g, h, t, u), h.at(t + 1, u));
    return prob;
}

bool ref_feasible(const Graph& g, const History& h)
{
    for (std::size_t t = 0; t < h.timespan(); ++t)
        for (NodeId u = 0; u < h.num_nodes(); ++u) {
            const int a = static_cast<int>(h.at(t, u));
            const int b = static_cast<int>(h.at(t + 1, u));
            if (b < a) return false;
            if (a == 0 && b > 0 && infected_neighbours(g, h, t, u) == 0) return false;
        }
    return true;
}

void for_each_matrix(std::size_t n, std::size_t timespan, const Snapshot& y_T,
                     const std::function<void(const History&)>& visit)
{
    const std::size_t free_cells = n * timespan;
    History h(timespan, n);
    for (NodeId u = 0; u < n; ++u) h.at(timespan, u) = y_T[u];
    std::vector<int> digits(free_cells, 0);
    while (true) {
        for (std::size_t c = 0; c < free_cells; ++c)
            h.at(c / n, static_cast<NodeId>(c % n)) = static_cast<State>(digits[c]);
        visit(h);
        std::size_t c = 0;
        while (c < free_cells && digits[c] == 2) digits[c++] = 0;
        if (c == free_cells) break;
        ++digits[c];
    }
}

std::vector<History> ref_feasible_histories(const Graph& g, const Snapshot& y_T, std::size_t timespan)
{
    std::vector<History> out;
    for_each_matrix(g.num_nodes(), timespan, y_T, [&](const History& h) {
        if (ref_feasible(g, h)) out.push_back(h);
    });
    return out;
}

std::vector<Snapshot> all_snapshots(std::size_t n)
{
    std::vector<Snapshot> out;
    std::size_t total = 1;
    for (std::size_t i = 0; i < n; ++i) total *= 3;
    for (std::size_t code = 0; code < total; ++code) {
        Snapshot s(n);
        std::size_t c = code;
        for (std::size_t u = 0; u < n; ++u) {
            s[u] = static_cast<State>(c % 3);
            c /= 3;
        }
        out.push_back(s);
    }
    return out;
}

std::vector<NodeId> random_permutation(std::size_t n, std::uint64_t seed)
{
    histrecon::Rng rng(seed, 99);
    std::vector<NodeId> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = static_cast<NodeId>(i);
    for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);
    return perm;
}

Graph permute_graph(const Graph& g, const std::vector<NodeId>& perm)
{
    std::vector<std::pair<NodeId, NodeId>> edges;
    for (auto [u, v] : g.edges()) edges.emplace_back(perm[u], perm[v]);
    return Graph(g.num_nodes(), edges);
}

History permute_history(const History& h, const std::vector<NodeId>& perm)
{
    History out(h.timespan(), h.num_nodes());
    for (std::size_t t = 0; t <= h.timespan(); ++t)
        for (NodeId u = 0; u < h.num_nodes(); ++u) out.at(t, perm[u]) = h.at(t, u);
    return out;
}

double rel_err(double a, double b)
{
    const double scale = std::max({std::abs(a), std::abs(b), 1e-12});
    return std::abs(a - b) / scale;
}

}  // namespace testing_support
