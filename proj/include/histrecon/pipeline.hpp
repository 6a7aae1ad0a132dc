#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>

#include "histrecon/diffusion.hpp"
#include "histrecon/graph.hpp"
#include "histrecon/mcmc.hpp"
#include "histrecon/meanfield.hpp"
#include "histrecon/proposal.hpp"

namespace histrecon {

/// Full reconstruction settings. Stage defaults: I=500 estimator iterations,
/// J=500 training steps with K=10 histories each, S=10 steps over L=100 chains.
struct PipelineConfig {
    EstimatorConfig estimator;
    TrainConfig training;
    McmcConfig mcmc;
    std::size_t dim = 16;
    std::size_t hidden = 16;
    std::size_t layers = 3;
    double gamma = 1.0;
    bool si_model = false;
    /// Skip estimation / training when set.
    std::optional<DiffusionParams> params;
    std::optional<ProposalModel> model;
    std::size_t threads = 1;
};

struct PipelineTimings {
    double estimate_seconds = 0.0;
    double train_seconds = 0.0;
    double sample_seconds = 0.0;

    double total() const { return estimate_seconds + train_seconds + sample_seconds; }
};

struct PipelineResult {
    DiffusionParams params;
    ProposalModel model;
    ReconstructionRun run;
    History history;
    PipelineTimings timings;
};

/// estimate (unless params given) -> train (unless model given) -> MCMC ->
/// rounded posterior hitting times. Every stage draws from streams of `seed`.
PipelineResult run_pipeline(const Graph& graph, const Snapshot& y_T, std::size_t timespan, double n0_I,
                            const PipelineConfig& config, std::uint64_t seed);

/// Random-init proposal as used when no trained model is supplied to training.
ProposalModel initial_model(std::size_t timespan, const PipelineConfig& config, std::uint64_t seed);

/// A seeded synthetic instance: BA graph, uniform sources, simulated history.
struct Instance {
    Graph graph;
    History truth;
    DiffusionParams params;
    std::size_t num_sources = 0;
};

Instance make_ba_instance(std::size_t n, std::size_t attachment, const DiffusionParams& params,
                          std::size_t timespan, double source_fraction, std::uint64_t seed);

struct BenchPoint {
    std::size_t num_nodes = 0;
    std::size_t timespan = 0;
    double seconds = 0.0;
};

/// Settings used by the scalability sweep: full estimation, a short training
/// run, and the default sampler.
PipelineConfig bench_config();

/// Wall time of run_pipeline on make_ba_instance(n, 4, (0.1, 0.1), T, 0.05, seed).
BenchPoint bench_point(std::size_t n, std::size_t timespan, const PipelineConfig& config, std::uint64_t seed);

}  // namespace histrecon
