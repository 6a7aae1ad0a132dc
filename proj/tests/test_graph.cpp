#include <doctest.h>

#include <cmath>
#include <queue>

#include "histrecon/errors.hpp"
#include "histrecon/graph.hpp"
#include "support.hpp"

using namespace histrecon;

namespace {

ErrorCode code_of(const std::function<void()>& fn)
{
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an error");
    return ErrorCode::invalid_argument;
}

std::string message_of(const std::function<void()>& fn)
{
    try {
        fn();
    } catch (const Error& e) {
        return e.what();
    }
    return {};
}

bool connected(const Graph& g)
{
    if (g.num_nodes() == 0) return true;
    std::vector<char> seen(g.num_nodes(), 0);
    std::queue<NodeId> q;
    q.push(0);
    seen[0] = 1;
    std::size_t count = 1;
    while (!q.empty()) {
        NodeId u = q.front();
        q.pop();
        for (NodeId v : g.neighbors(u))
            if (!seen[v]) {
                seen[v] = 1;
                ++count;
                q.push(v);
            }
    }
    return count == g.num_nodes();
}

std::size_t degree_sum(const Graph& g)
{
    std::size_t s = 0;
    for (NodeId u = 0; u < g.num_nodes(); ++u) s += g.degree(u);
    return s;
}

}  // namespace

TEST_CASE("two-edge path parses with sorted neighbour lists")
{
    Graph g = parse_edge_list("0 1\n1 2");
    CHECK(g.num_nodes() == 3);
    CHECK(g.num_edges() == 2);
    auto nb = g.neighbors(1);
    REQUIRE(nb.size() == 2);
    CHECK(nb[0] == 0);
    CHECK(nb[1] == 2);
    CHECK(g.has_edge(2, 1));
    CHECK_FALSE(g.has_edge(0, 2));
    CHECK_FALSE(g.has_id_map());
}

TEST_CASE("self-loops and duplicates are rejected with a location")
{
    CHECK(code_of([] { parse_edge_list("0 0"); }) == ErrorCode::parse);
    CHECK(message_of([] { parse_edge_list("0 1\n1 1"); }).find("line 2") != std::string::npos);
    CHECK(code_of([] { parse_edge_list("0 1\n0 1"); }) == ErrorCode::parse);
    CHECK(message_of([] { parse_edge_list("0 1\n1 0"); }).find("edge #2") != std::string::npos);
    CHECK(message_of([] { parse_edge_list("0 1\n1 x"); }).find("line 2") != std::string::npos);
    CHECK(message_of([] { parse_edge_list("n 3\n0 1\n2 3"); }).find("line 3") != std::string::npos);
    CHECK(code_of([] { parse_edge_list("n three"); }) == ErrorCode::parse);

    const std::vector<std::pair<NodeId, NodeId>> loop{{1, 1}};
    CHECK(code_of([&] { Graph(3, loop); }) == ErrorCode::invalid_argument);
    const std::vector<std::pair<NodeId, NodeId>> out_of_range{{0, 3}};
    CHECK(code_of([&] { Graph(3, out_of_range); }) == ErrorCode::invalid_argument);
}

TEST_CASE("header, comments and isolated nodes")
{
    Graph g = parse_edge_list("# comment\nn 5\n\n0 4\n# another\n2 3\n");
    CHECK(g.num_nodes() == 5);
    CHECK(g.num_edges() == 2);
    CHECK(g.degree(1) == 0);
    CHECK_FALSE(g.has_id_map());
}

TEST_CASE("sparse ids without a header are remapped in ascending order")
{
    Graph g = parse_edge_list("30 10\n10 20\n");
    REQUIRE(g.num_nodes() == 3);
    CHECK(g.has_id_map());
    CHECK(g.external_id(0) == 10);
    CHECK(g.external_id(1) == 20);
    CHECK(g.external_id(2) == 30);
    CHECK(g.has_edge(0, 2));
    CHECK(g.has_edge(0, 1));
    CHECK_FALSE(g.has_edge(1, 2));
}

TEST_CASE("serialize then parse is the identity")
{
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        Rng rng(seed);
        Graph g = seed % 2 ? generate_ba(60, 3, rng) : generate_er(40, 0.1, rng);
        CHECK(parse_edge_list(serialize_edge_list(g)) == g);
    }
    Graph lonely = parse_edge_list("n 4\n");
    CHECK(parse_edge_list(serialize_edge_list(lonely)) == lonely);
}

TEST_CASE("BA edge count follows the complete-seed construction")
{
    Rng rng(42);
    Graph g = generate_ba(1000, 4, rng);
    CHECK(g.num_nodes() == 1000);
    CHECK(g.num_edges() == 6 + 4 * 996);
    // Reference count reported for this family: 3,984.
    CHECK(std::abs(static_cast<double>(g.num_edges()) - 3984.0) / 3984.0 < 0.005);
    CHECK(degree_sum(g) == 2 * g.num_edges());
    CHECK(connected(g));
    for (NodeId u = 4; u < 1000; ++u) CHECK(g.degree(u) >= 4);
}

TEST_CASE("BA small and degenerate sizes")
{
    Rng rng(1);
    Graph g = generate_ba(5, 4, rng);
    CHECK(g.num_nodes() == 5);
    CHECK(g.num_edges() == 10);  // K4 seed plus one node attached to all four

    Rng rng2(3);
    Graph tree = generate_ba(50, 1, rng2);
    CHECK(tree.num_edges() == 49);
    CHECK(connected(tree));

    Rng rng3(3);
    CHECK_THROWS_AS(generate_ba(4, 4, rng3), Error);
    CHECK_THROWS_AS(generate_ba(10, 0, rng3), Error);
}

TEST_CASE("generators are pure functions of their seed")
{
    Rng a(7), b(7), c(8);
    Graph ga = generate_ba(300, 4, a);
    Graph gb = generate_ba(300, 4, b);
    Graph gc = generate_ba(300, 4, c);
    CHECK(ga == gb);
    CHECK_FALSE(ga == gc);

    Rng d(7), e(7);
    CHECK(generate_er(100, 0.05, d) == generate_er(100, 0.05, e));
}

TEST_CASE("ER extremes and edge-count concentration")
{
    Rng rng(11);
    CHECK(generate_er(10, 0.0, rng).num_edges() == 0);
    CHECK(generate_er(10, 1.0, rng).num_edges() == 45);

    Rng big(12);
    Graph g = generate_er(1000, 0.008, big);
    const double pairs = 1000.0 * 999.0 / 2.0;
    const double mean = pairs * 0.008;  // 3996
    const double sd = std::sqrt(pairs * 0.008 * 0.992);
    CHECK(std::abs(static_cast<double>(g.num_edges()) - mean) <= 4.0 * sd);
    CHECK(degree_sum(g) == 2 * g.num_edges());
    CHECK_THROWS_AS(generate_er(10, 1.5, big), Error);
}

TEST_CASE("CSR layout agrees with the edge list")
{
    Rng rng(5);
    Graph g = generate_ba(200, 3, rng);
    for (auto [u, v] : g.edges()) {
        CHECK(u < v);
        CHECK(g.has_edge(u, v));
        CHECK(g.has_edge(v, u));
    }
    for (NodeId u = 0; u < g.num_nodes(); ++u) {
        auto nb = g.neighbors(u);
        CHECK(std::is_sorted(nb.begin(), nb.end()));
        CHECK(std::adjacent_find(nb.begin(), nb.end()) == nb.end());
    }
}
