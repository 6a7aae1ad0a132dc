#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "histrecon/diffusion.hpp"
#include "histrecon/graph.hpp"

namespace histrecon {

inline constexpr double kEnumerationGuard = 1e8;

/// Upper bound on candidates: product over nodes of the admissible
/// (h_I, h_R) pairs given y_T.
double enumeration_size(const Snapshot& y_T, std::size_t timespan);

/// Calls `visit` once for every feasible history consistent with y_T, in a
/// fixed lexicographic order of per-node hitting pairs. Throws
/// ErrorCode::guard when enumeration_size exceeds kEnumerationGuard.
void enumerate_histories(const Graph& graph, const Snapshot& y_T, std::size_t timespan,
                         const std::function<void(const HittingTimes&)>& visit);

struct OracleEntry {
    std::vector<std::uint8_t> h_I;
    std::vector<std::uint8_t> h_R;
    double log_weight = 0.0;
};

struct OracleResult {
    std::vector<OracleEntry> histories;
    double log_snapshot_prob = 0.0;  // log sum of unnormalised weights
    std::vector<double> expected_h_I;
    std::vector<double> expected_h_R;
};

OracleResult exact_posterior(const Graph& graph, const DiffusionParams& params, const Snapshot& y_T,
                             std::size_t timespan, const PriorSpec& prior, std::size_t threads = 1);

double macro_f1(const History& truth, const History& reconstruction);
double nrmse(const History& truth, const History& reconstruction);

enum class Direction { higher_better, lower_better };
double gap(double actual, double ideal, Direction direction);

struct MetricReport {
    double macro_f1 = 0.0;
    double nrmse = 0.0;
    std::optional<double> gap_f1;
    std::optional<double> gap_nrmse;
};

MetricReport evaluate(const History& truth, const History& reconstruction);

}  // namespace histrecon
