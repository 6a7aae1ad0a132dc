#include <doctest.h>

#include <cmath>
#include <map>

#include "histrecon/diffusion.hpp"
#include "histrecon/errors.hpp"
#include "histrecon/rng.hpp"
#include "support.hpp"

using namespace histrecon;
using namespace testing_support;

TEST_CASE("kernel values")
{
    CHECK(transition_prob({0.5, 0.1}, State::S, 2, State::S) == doctest::Approx(0.25));
    CHECK(transition_prob({0.3, 0.6}, State::R, 7, State::S) == 0.0);
    CHECK(transition_prob({0.3, 0.1}, State::I, 0, State::I) == doctest::Approx(0.9));
    CHECK(transition_prob({0.3, 0.1}, State::S, 0, State::I) == 0.0);
    CHECK(transition_prob({0.3, 0.1}, State::I, 3, State::S) == 0.0);
}

TEST_CASE("kernel rows sum to one and agree with the reference")
{
    Rng rng(1);
    for (int trial = 0; trial < 200; ++trial) {
        const DiffusionParams p{0.001 + 0.998 * rng.uniform(), 0.998 * rng.uniform()};
        for (std::size_t k = 0; k <= 20; ++k)
            for (State prev : {State::S, State::I, State::R}) {
                double total = 0.0;
                for (State next : {State::S, State::I, State::R}) {
                    const double q = transition_prob(p, prev, k, next);
                    total += q;
                    CHECK(q == doctest::Approx(ref_kernel(p, prev, k, next)).epsilon(1e-12));
                    const double lq = log_transition_prob(p, prev, k, next);
                    if (q > 0.0)
                        CHECK(lq == doctest::Approx(std::log(q)).epsilon(1e-10));
                    else
                        CHECK(lq == kNegInf);
                }
                CHECK(std::abs(total - 1.0) <= 1e-12);
            }
    }
}

TEST_CASE("initial snapshots have exactly n0 infected nodes")
{
    Graph g = path_graph(4);
    Rng rng(3);
    CHECK(count_state(sample_initial(g, 0, rng), State::I) == 0);
    CHECK(count_state(sample_initial(g, 4, rng), State::I) == 4);
    Rng rng2(4);
    Graph big(1000, std::vector<std::pair<NodeId, NodeId>>{});
    const Snapshot s = sample_initial(big, 50, rng2);
    CHECK(count_state(s, State::I) == 50);
    CHECK(count_state(s, State::R) == 0);
    CHECK_THROWS_AS(sample_initial(g, 5, rng), Error);
}

TEST_CASE("simulation special cases")
{
    Rng rng(9);
    Graph g = path_graph(5);
    const History quiet = simulate(g, {0.9, 0.5}, Snapshot(5, State::S), 6, rng);
    for (std::size_t t = 0; t <= 6; ++t) CHECK(row_string(quiet, t) == "SSSSS");

    Graph edge = path_graph(2);
    for (int rep = 0; rep < 20; ++rep) {
        const History h = simulate(edge, {1.0, 0.0}, snapshot_of("IS"), 1, rng);
        CHECK(row_string(h, 1) == "II");
    }
    Graph lone(1, std::vector<std::pair<NodeId, NodeId>>{});
    for (int rep = 0; rep < 20; ++rep) CHECK(row_string(simulate(lone, {0.5, 1.0}, snapshot_of("I"), 1, rng), 1) == "R");
}

TEST_CASE("simulated histories are feasible")
{
    for (std::uint64_t seed = 1; seed <= 30; ++seed) {
        Rng g_rng(seed);
        Graph g = generate_ba(80, 2, g_rng);
        Rng rng(seed, 1);
        const Snapshot y0 = sample_initial(g, 4, rng);
        const History h = simulate(g, {0.3, 0.2}, y0, 8, rng);
        CHECK(is_feasible(g, h));
        CHECK(std::isfinite(log_history_prob(g, {0.3, 0.2}, h, {4.0, 1.0})));
    }
}

TEST_CASE("log prior")
{
    CHECK(log_prior(snapshot_of("IIS"), {2.0, 1.0}) == 0.0);
    CHECK(log_prior(snapshot_of("IIIRRSS"), {5.0, 1.0}) == doctest::Approx(-4.0));
    CHECK(log_prior(snapshot_of("SSSS"), {0.0, 2.0}) == 0.0);
}

TEST_CASE("history log-probability examples")
{
    Graph g = path_graph(3);
    CHECK(log_history_prob(g, {0.3, 0.2}, history_of({"SSS", "SSS", "SSS"}), {0.0, 1.0}) == 0.0);
    Graph edge = path_graph(2);
    CHECK(log_history_prob(edge, {0.1, 0.0}, history_of({"IS", "IS"}), {1.0, 1.0}) ==
          doctest::Approx(std::log(0.9)));
    CHECK(log_history_prob(edge, {0.1, 0.2}, history_of({"RS", "SS"}), {1.0, 1.0}) == kNegInf);
}

TEST_CASE("history log-probability matches the reference product")
{
    Graph g = make_graph(3, {{0, 1}, {1, 2}});
    const DiffusionParams p{0.35, 0.25};
    const PriorSpec prior{1.0, 0.7};
    for_each_matrix(3, 2, snapshot_of("RIS"), [&](const History& h) {
        const double ref = ref_transition_prob(g, p, h);
        const double lp = log_history_prob(g, p, h, prior);
        if (ref == 0.0) {
            CHECK(lp == kNegInf);
        } else {
            CHECK(lp - log_prior(h.row(0), prior) == doctest::Approx(std::log(ref)).epsilon(1e-12));
        }
    });
}

TEST_CASE("feasibility examples and agreement with the reference")
{
    Graph lone(1, std::vector<std::pair<NodeId, NodeId>>{});
    CHECK_FALSE(is_feasible(lone, history_of({"S", "I"})));
    CHECK_FALSE(is_feasible(path_graph(2), history_of({"RS", "SS"})));
    CHECK(is_feasible(path_graph(2), history_of({"IS", "II"})));

    Graph tri = make_graph(3, {{0, 1}, {0, 2}});
    for (const Snapshot& y_T : all_snapshots(3))
        for_each_matrix(3, 2, y_T, [&](const History& h) { CHECK(is_feasible(tri, h) == ref_feasible(tri, h)); });
}

TEST_CASE("hitting times")
{
    CHECK(hitting_times(history_of({"S", "S", "S"})).h_I[0] == 3);
    CHECK(hitting_times(history_of({"S", "S", "S"})).h_R[0] == 3);
    const HittingTimes a = hitting_times(history_of({"I", "I", "I"}));
    CHECK(a.h_I[0] == 0);
    CHECK(a.h_R[0] == 3);
    const HittingTimes b = hitting_times(history_of({"S", "S", "R"}));
    CHECK(b.h_I[0] == 2);
    CHECK(b.h_R[0] == 2);

    auto column = [](std::uint32_t hi, std::uint32_t hr, std::size_t T) {
        const History h = history_from_hitting_times({{hi}, {hr}}, T);
        std::string s;
        for (std::size_t t = 0; t <= T; ++t) s += row_string(h, t);
        return s;
    };
    CHECK(column(3, 3, 2) == "SSS");
    CHECK(column(0, 0, 2) == "RRR");
    CHECK(column(1, 3, 3) == "SIIR");
    CHECK_THROWS_AS(history_from_hitting_times({{2}, {1}}, 3), Error);
}

TEST_CASE("hitting-time encoding round-trips")
{
    Rng rng(17);
    for (int trial = 0; trial < 500; ++trial) {
        const std::size_t T = 1 + rng.below(6);
        const std::size_t n = 1 + rng.below(8);
        HittingTimes hits;
        for (std::size_t u = 0; u < n; ++u) {
            const auto hi = static_cast<std::uint32_t>(rng.below(T + 2));
            const auto hr = static_cast<std::uint32_t>(hi + rng.below(T + 2 - hi));
            hits.h_I.push_back(hi);
            hits.h_R.push_back(hr);
        }
        CHECK(hitting_times(history_from_hitting_times(hits, T)) == hits);
    }
}

TEST_CASE("empirical history frequencies match the model probabilities")
{
    Graph g = make_graph(3, {{0, 1}, {1, 2}});
    const DiffusionParams p{0.4, 0.3};
    const Snapshot y0 = snapshot_of("ISS");
    const std::size_t T = 2;
    const int N = 10000;
    std::map<std::string, int> counts;
    Rng rng(2024);
    for (int i = 0; i < N; ++i) {
        const History h = simulate(g, p, y0, T, rng);
        std::string key;
        for (std::size_t t = 0; t <= T; ++t) key += row_string(h, t);
        ++counts[key];
    }
    double total_prob = 0.0;
    for (const auto& [key, count] : counts) {
        const History h = history_of({key.substr(0, 3), key.substr(3, 3), key.substr(6, 3)});
        const double prob = std::exp(log_transition_sum(g, p, h));
        total_prob += prob;
        const double se = std::sqrt(prob * (1.0 - prob) / N);
        CHECK(std::abs(static_cast<double>(count) / N - prob) <= 3.0 * se + 1e-12);
    }
    CHECK(total_prob <= 1.0 + 1e-12);
    CHECK(total_prob > 0.99);
}

TEST_CASE("relative likelihood derivative in the infection rate at small rates")
{
    // Two infections over the history: n_IR rises from 1 to 3.
    Graph g = path_graph(3);
    const History h = history_of({"ISS", "IIS", "RII"});
    const double beta = 1e-3;
    const double step = 1e-7;
    auto prob = [&](double bI) { return std::exp(log_transition_sum(g, {bI, 1e-3}, h)); };
    const double derivative = (prob(beta + step) - prob(beta - step)) / (2.0 * step);
    const double relative = derivative / prob(beta);
    const double predicted = (3.0 - 1.0) / beta;
    CHECK(std::abs(relative - predicted) / predicted < 0.10);
}
