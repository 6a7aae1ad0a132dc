#include "histrecon/pipeline.hpp"

#include <chrono>
#include <cmath>

#include "histrecon/errors.hpp"

namespace histrecon {

namespace {

double seconds_since(std::chrono::steady_clock::time_point start)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

ProposalModel initial_model(std::size_t timespan, const PipelineConfig& config, std::uint64_t seed)
{
    ProposalShape shape;
    shape.timespan = timespan;
    shape.dim = config.dim;
    shape.hidden = config.hidden;
    shape.layers = config.layers;
    Rng rng(seed, stream_id(streams::model_init, 0));
    return init_proposal(shape, rng);
}

PipelineResult run_pipeline(const Graph& graph, const Snapshot& y_T, std::size_t timespan, double n0_I,
                            const PipelineConfig& config, std::uint64_t seed)
{
    require(y_T.size() == graph.num_nodes(), ErrorCode::shape_mismatch, "snapshot size does not match graph");
    require(timespan >= 1, ErrorCode::invalid_argument, "timespan must be at least 1");
    PipelineResult result;

    auto start = std::chrono::steady_clock::now();
    if (config.params) {
        result.params = *config.params;
    } else {
        EstimatorConfig est = config.estimator;
        est.si_model = config.si_model;
        result.params = estimate_params(graph, y_T, timespan, n0_I, est);
    }
    if (config.si_model) result.params.beta_R = 0.0;
    result.timings.estimate_seconds = seconds_since(start);

    const PriorSpec prior{n0_I, config.gamma};
    start = std::chrono::steady_clock::now();
    if (config.model) {
        require(config.model->timespan == timespan, ErrorCode::shape_mismatch,
                "model was trained for T=" + std::to_string(config.model->timespan) + ", instance has T=" +
                    std::to_string(timespan));
        result.model = *config.model;
    } else {
        result.model = initial_model(timespan, config, seed);
        TrainConfig train = config.training;
        train.threads = config.threads;
        train_proposal(result.model, graph, result.params, prior, train, seed);
    }
    result.timings.train_seconds = seconds_since(start);

    start = std::chrono::steady_clock::now();
    McmcConfig mcmc = config.mcmc;
    mcmc.threads = config.threads;
    result.run = run_reconstruction(graph, y_T, result.params, prior, result.model, mcmc, seed);
    result.history = reconstruct(result.run.estimate, timespan);
    result.timings.sample_seconds = seconds_since(start);
    return result;
}

Instance make_ba_instance(std::size_t n, std::size_t attachment, const DiffusionParams& params,
                          std::size_t timespan, double source_fraction, std::uint64_t seed)
{
    Rng graph_rng(seed, stream_id(streams::graph, 0));
    Rng initial_rng(seed, stream_id(streams::initial, 0));
    Rng sim_rng(seed, stream_id(streams::simulate, 0));
    Instance inst{generate_ba(n, attachment, graph_rng), History(timespan, n), params, 0};
    inst.num_sources = static_cast<std::size_t>(std::llround(source_fraction * static_cast<double>(n)));
    if (inst.num_sources == 0) inst.num_sources = 1;
    const Snapshot y0 = sample_initial(inst.graph, inst.num_sources, initial_rng);
    inst.truth = simulate(inst.graph, params, y0, timespan, sim_rng);
    return inst;
}

PipelineConfig bench_config()
{
    PipelineConfig config;
    config.training.steps = 10;
    config.training.batch_size = 2;
    return config;
}

BenchPoint bench_point(std::size_t n, std::size_t timespan, const PipelineConfig& config, std::uint64_t seed)
{
    const Instance inst = make_ba_instance(n, 4, DiffusionParams{0.1, 0.1}, timespan, 0.05, seed);
    const auto start = std::chrono::steady_clock::now();
    run_pipeline(inst.graph, inst.truth.final_snapshot(), timespan, static_cast<double>(inst.num_sources), config,
                 seed);
    return BenchPoint{n, timespan, seconds_since(start)};
}

}  // namespace histrecon
