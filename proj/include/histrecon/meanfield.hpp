#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "histrecon/diffusion.hpp"
#include "histrecon/graph.hpp"

namespace histrecon {

/// Mean-field marginals of one time step: row[u] = (f^S, f^I, f^R).
using PseudoRow = std::vector<std::array<double, 3>>;

PseudoRow init_pseudo(std::size_t n, double n0_I);
PseudoRow step_pseudo(const Graph& graph, const DiffusionParams& params, const PseudoRow& row);

/// All rows t = 0..T.
std::vector<PseudoRow> pseudo_table(const Graph& graph, const DiffusionParams& params, std::size_t timespan,
                                    double n0_I);

struct MeanFieldCounters {
    std::uint64_t factor_evaluations = 0;
};

/// Sum over nodes of log f^{y_T,u}_{T,u}; kNegInf when any factor is zero.
double pseudo_loglik(const Graph& graph, const DiffusionParams& params, const Snapshot& y_T, std::size_t timespan,
                     double n0_I);

struct PseudoLoglikGrad {
    double value = 0.0;
    double d_beta_I = 0.0;
    double d_beta_R = 0.0;
};

/// Objective and its exact derivative by forward sensitivity propagation.
PseudoLoglikGrad pseudo_loglik_and_grad(const Graph& graph, const DiffusionParams& params, const Snapshot& y_T,
                                        std::size_t timespan, double n0_I, MeanFieldCounters* counters = nullptr);

/// Gradient only; throws ErrorCode::numeric if the objective is not finite.
std::array<double, 2> grad_pseudo_loglik(const Graph& graph, const DiffusionParams& params, const Snapshot& y_T,
                                         std::size_t timespan, double n0_I);

struct EstimatorConfig {
    std::size_t iterations = 500;
    double learning_rate = 0.003;
    double epsilon = 1e-4;
    DiffusionParams initial{0.05, 0.05};
    double gradient_tolerance = 1e-7;
    /// SI model: beta_R pinned to zero, only beta_I is optimised.
    bool si_model = false;
};

struct EstimationTrace {
    std::vector<double> objective;  // mean log-pseudolikelihood after each iteration
    std::size_t iterations_run = 0;
    bool converged = false;
    MeanFieldCounters counters;
};

DiffusionParams estimate_params(const Graph& graph, const Snapshot& y_T, std::size_t timespan, double n0_I,
                                const EstimatorConfig& config = {}, EstimationTrace* trace = nullptr);

}  // namespace histrecon
