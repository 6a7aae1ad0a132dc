#include "histrecon/histrecon.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <exception>
#include <filesystem>
#include <new>
#include <string>

#include "histrecon/diffusion.hpp"
#include "histrecon/errors.hpp"
#include "histrecon/evaluation.hpp"
#include "histrecon/graph.hpp"
#include "histrecon/io.hpp"
#include "histrecon/pipeline.hpp"

using namespace histrecon;

struct hr_graph {
    Graph graph;
};
struct hr_history {
    History history;
};
struct hr_model {
    ProposalModel model;
};
struct hr_reconstruction {
    PipelineResult result;
};
struct hr_oracle {
    OracleResult result;
};

namespace {

thread_local std::string last_error;

hr_status to_status(ErrorCode code)
{
    switch (code) {
    case ErrorCode::invalid_argument: return HR_ERR_INVALID_ARGUMENT;
    case ErrorCode::io: return HR_ERR_IO;
    case ErrorCode::parse: return HR_ERR_PARSE;
    case ErrorCode::guard: return HR_ERR_GUARD;
    case ErrorCode::estimation_impossible: return HR_ERR_ESTIMATION_IMPOSSIBLE;
    case ErrorCode::numeric: return HR_ERR_NUMERIC;
    case ErrorCode::shape_mismatch: return HR_ERR_SHAPE_MISMATCH;
    }
    return HR_ERR_INTERNAL;
}

template <class Fn>
hr_status guarded(Fn&& fn) noexcept
{
    try {
        fn();
        last_error.clear();
        return HR_OK;
    } catch (const Error& e) {
        last_error = e.what();
        return to_status(e.code());
    } catch (const std::bad_alloc&) {
        last_error = "out of memory";
        return HR_ERR_INTERNAL;
    } catch (const std::filesystem::filesystem_error& e) {
        last_error = e.what();
        return HR_ERR_IO;
    } catch (const std::exception& e) {
        last_error = e.what();
        return HR_ERR_INTERNAL;
    } catch (...) {
        last_error = "unknown error";
        return HR_ERR_INTERNAL;
    }
}

void need(const void* p, const char* what)
{
    require(p != nullptr, ErrorCode::invalid_argument, std::string(what) + " must not be null");
}

Snapshot snapshot_from(const char* states, std::size_t n)
{
    need(states, "states");
    Snapshot s(n);
    for (std::size_t u = 0; u < n; ++u) {
        const char c = states[u];
        require(c == 'S' || c == 'I' || c == 'R', ErrorCode::invalid_argument,
                "state of node " + std::to_string(u) + " must be S, I or R");
        s[u] = state_from_char(c);
    }
    return s;
}

void check_rate(double value, bool allow_zero, const char* name)
{
    const bool ok = std::isfinite(value) && value < 1.0 && (allow_zero ? value >= 0.0 : value > 0.0);
    require(ok, ErrorCode::invalid_argument,
            std::string(name) + (allow_zero ? " must lie in [0,1)" : " must lie in (0,1)"));
}

DiffusionParams params_from(hr_params p)
{
    check_rate(p.beta_I, false, "beta_I");
    check_rate(p.beta_R, true, "beta_R");
    return DiffusionParams{p.beta_I, p.beta_R};
}

void check_n0(double n0, std::size_t n)
{
    require(std::isfinite(n0) && n0 >= 0.0 && n0 <= static_cast<double>(n), ErrorCode::invalid_argument,
            "n0 must lie in [0, n]");
}

EstimatorConfig estimator_from(const hr_estimate_options* o)
{
    EstimatorConfig c;
    if (o) {
        require(o->learning_rate > 0.0, ErrorCode::invalid_argument, "estimator learning rate must be positive");
        c.iterations = o->iterations;
        c.learning_rate = o->learning_rate;
        c.si_model = o->si_model != 0;
    }
    return c;
}

TrainConfig train_from(const hr_train_options* o)
{
    TrainConfig c;
    if (o) {
        require(o->batch_size >= 1, ErrorCode::invalid_argument, "batch size must be at least 1");
        require(o->learning_rate > 0.0, ErrorCode::invalid_argument, "training learning rate must be positive");
        c.steps = o->steps;
        c.batch_size = o->batch_size;
        c.learning_rate = o->learning_rate;
        c.threads = o->threads ? o->threads : 1;
    }
    return c;
}

}  // namespace

extern "C" {

const char* hr_last_error(void) { return last_error.c_str(); }

const char* hr_status_name(hr_status status)
{
    switch (status) {
    case HR_OK: return "ok";
    case HR_ERR_INVALID_ARGUMENT: return "invalid_argument";
    case HR_ERR_IO: return "io";
    case HR_ERR_PARSE: return "parse";
    case HR_ERR_GUARD: return "guard";
    case HR_ERR_ESTIMATION_IMPOSSIBLE: return "estimation_impossible";
    case HR_ERR_NUMERIC: return "numeric";
    case HR_ERR_SHAPE_MISMATCH: return "shape_mismatch";
    case HR_ERR_INTERNAL: return "internal";
    }
    return "unknown";
}

hr_status hr_format_double(double value, char* buffer, size_t capacity)
{
    return guarded([&] {
        need(buffer, "buffer");
        const std::string s = format_double(value);
        require(s.size() < capacity, ErrorCode::invalid_argument, "buffer too small");
        std::memcpy(buffer, s.c_str(), s.size() + 1);
    });
}

// ---- graphs

hr_status hr_graph_generate_ba(size_t n, size_t attachment, uint64_t seed, hr_graph** out)
{
    return guarded([&] {
        need(out, "out");
        Rng rng(seed, stream_id(streams::graph, 0));
        *out = new hr_graph{generate_ba(n, attachment, rng)};
    });
}

hr_status hr_graph_generate_er(size_t n, double p, uint64_t seed, hr_graph** out)
{
    return guarded([&] {
        need(out, "out");
        Rng rng(seed, stream_id(streams::graph, 0));
        *out = new hr_graph{generate_er(n, p, rng)};
    });
}

hr_status hr_graph_load(const char* path, hr_graph** out)
{
    return guarded([&] {
        need(path, "path");
        need(out, "out");
        *out = new hr_graph{read_graph(path)};
    });
}

hr_status hr_graph_save(const hr_graph* graph, const char* path)
{
    return guarded([&] {
        need(graph, "graph");
        need(path, "path");
        write_graph(path, graph->graph);
    });
}

int hr_graph_has_id_map(const hr_graph* graph) { return graph && graph->graph.has_id_map() ? 1 : 0; }

hr_status hr_graph_save_id_map(const hr_graph* graph, const char* path)
{
    return guarded([&] {
        need(graph, "graph");
        need(path, "path");
        write_text_file(path, serialize_id_map(graph->graph));
    });
}

size_t hr_graph_num_nodes(const hr_graph* graph) { return graph ? graph->graph.num_nodes() : 0; }
size_t hr_graph_num_edges(const hr_graph* graph) { return graph ? graph->graph.num_edges() : 0; }
void hr_graph_free(hr_graph* graph) { delete graph; }

// ---- snapshots

hr_status hr_snapshot_load(const char* path, size_t n, char* states)
{
    return guarded([&] {
        need(path, "path");
        need(states, "states");
        const Snapshot s = parse_snapshot(read_text_file(path), n);
        for (std::size_t u = 0; u < n; ++u) states[u] = state_char(s[u]);
    });
}

hr_status hr_snapshot_save(const char* path, const char* states, size_t n)
{
    return guarded([&] {
        need(path, "path");
        write_text_file(path, serialize_snapshot(snapshot_from(states, n)));
    });
}

// ---- histories

hr_status hr_simulate(const hr_graph* graph, hr_params params, size_t timespan, size_t n0, uint64_t seed,
                      hr_history** out)
{
    return guarded([&] {
        need(graph, "graph");
        need(out, "out");
        require(timespan >= 1, ErrorCode::invalid_argument, "timespan must be at least 1");
        const DiffusionParams p = params_from(params);
        Rng initial_rng(seed, stream_id(streams::initial, 0));
        Rng sim_rng(seed, stream_id(streams::simulate, 0));
        const Snapshot y0 = sample_initial(graph->graph, n0, initial_rng);
        *out = new hr_history{simulate(graph->graph, p, y0, timespan, sim_rng)};
    });
}

hr_status hr_history_load(const char* path, hr_history** out)
{
    return guarded([&] {
        need(path, "path");
        need(out, "out");
        *out = new hr_history{parse_history(read_text_file(path))};
    });
}

hr_status hr_history_save(const hr_history* history, const char* path)
{
    return guarded([&] {
        need(history, "history");
        need(path, "path");
        write_text_file(path, serialize_history(history->history));
    });
}

hr_status hr_history_save_hitting_times(const hr_history* history, const char* path)
{
    return guarded([&] {
        need(history, "history");
        need(path, "path");
        write_text_file(path, serialize_hitting_times(hitting_times(history->history)));
    });
}

size_t hr_history_timespan(const hr_history* history) { return history ? history->history.timespan() : 0; }
size_t hr_history_num_nodes(const hr_history* history) { return history ? history->history.num_nodes() : 0; }

hr_status hr_history_row(const hr_history* history, size_t t, char* states)
{
    return guarded([&] {
        need(history, "history");
        need(states, "states");
        require(t <= history->history.timespan(), ErrorCode::invalid_argument, "row index out of range");
        const auto row = history->history.row(t);
        for (std::size_t u = 0; u < row.size(); ++u) states[u] = state_char(row[u]);
    });
}

void hr_history_free(hr_history* history) { delete history; }

// ---- parameters

hr_status hr_params_load(const char* path, hr_params* out)
{
    return guarded([&] {
        need(path, "path");
        need(out, "out");
        const DiffusionParams p = parse_params(read_text_file(path));
        *out = hr_params{p.beta_I, p.beta_R};
    });
}

hr_status hr_params_save(const char* path, hr_params params)
{
    return guarded([&] {
        need(path, "path");
        write_text_file(path, serialize_params(params_from(params)));
    });
}

void hr_estimate_options_default(hr_estimate_options* options)
{
    if (!options) return;
    const EstimatorConfig c;
    options->iterations = c.iterations;
    options->learning_rate = c.learning_rate;
    options->si_model = c.si_model ? 1 : 0;
}

hr_status hr_estimate(const hr_graph* graph, const char* states, size_t timespan, double n0,
                      const hr_estimate_options* options, hr_params* out)
{
    return guarded([&] {
        need(graph, "graph");
        need(out, "out");
        require(timespan >= 1, ErrorCode::invalid_argument, "timespan must be at least 1");
        check_n0(n0, graph->graph.num_nodes());
        const Snapshot y_T = snapshot_from(states, graph->graph.num_nodes());
        const EstimatorConfig config = estimator_from(options);
        if (config.si_model) require_si_compatible(y_T, "snapshot");
        const DiffusionParams p = estimate_params(graph->graph, y_T, timespan, n0, config);
        *out = hr_params{p.beta_I, p.beta_R};
    });
}

// ---- models

hr_status hr_model_init(size_t timespan, uint64_t seed, hr_model** out)
{
    return guarded([&] {
        need(out, "out");
        require(timespan >= 1, ErrorCode::invalid_argument, "timespan must be at least 1");
        *out = new hr_model{initial_model(timespan, PipelineConfig{}, seed)};
    });
}

hr_status hr_model_load(const char* path, hr_model** out)
{
    return guarded([&] {
        need(path, "path");
        need(out, "out");
        *out = new hr_model{parse_model(read_text_file(path))};
    });
}

hr_status hr_model_save(const hr_model* model, const char* path)
{
    return guarded([&] {
        need(model, "model");
        need(path, "path");
        write_text_file(path, serialize_model(model->model));
    });
}

size_t hr_model_timespan(const hr_model* model) { return model ? model->model.timespan : 0; }
void hr_model_free(hr_model* model) { delete model; }

void hr_train_options_default(hr_train_options* options)
{
    if (!options) return;
    const TrainConfig c;
    options->steps = c.steps;
    options->batch_size = c.batch_size;
    options->learning_rate = c.learning_rate;
    options->gamma = PipelineConfig{}.gamma;
    options->threads = c.threads;
}

hr_status hr_train(hr_model* model, const hr_graph* graph, hr_params params, double n0,
                   const hr_train_options* options, uint64_t seed)
{
    return guarded([&] {
        need(model, "model");
        need(graph, "graph");
        check_n0(n0, graph->graph.num_nodes());
        const double gamma = options ? options->gamma : PipelineConfig{}.gamma;
        require(gamma >= 0.0, ErrorCode::invalid_argument, "gamma must be non-negative");
        train_proposal(model->model, graph->graph, params_from(params), PriorSpec{n0, gamma}, train_from(options),
                       seed);
    });
}

// ---- reconstruction

void hr_reconstruct_options_default(hr_reconstruct_options* options)
{
    if (!options) return;
    hr_estimate_options_default(&options->estimate);
    hr_train_options_default(&options->train);
    const McmcConfig m;
    options->steps = m.steps;
    options->chains = m.chains;
    options->eta = m.eta;
    options->plain_average = m.plain_average ? 1 : 0;
    options->burn_in = m.burn_in;
    options->threads = 1;
}

hr_status hr_reconstruct(const hr_graph* graph, const char* states, size_t timespan, double n0,
                         const hr_reconstruct_options* options, const hr_params* params, const hr_model* model,
                         uint64_t seed, hr_reconstruction** out)
{
    return guarded([&] {
        need(graph, "graph");
        need(out, "out");
        require(timespan >= 1, ErrorCode::invalid_argument, "timespan must be at least 1");
        check_n0(n0, graph->graph.num_nodes());
        hr_reconstruct_options opts;
        if (options) {
            opts = *options;
        } else {
            hr_reconstruct_options_default(&opts);
        }
        require(opts.steps >= 1 && opts.chains >= 1, ErrorCode::invalid_argument,
                "steps and chains must be at least 1");
        require(opts.eta >= 0.0 && opts.eta < 1.0, ErrorCode::invalid_argument, "eta must lie in [0,1)");
        require(opts.train.gamma >= 0.0, ErrorCode::invalid_argument, "gamma must be non-negative");

        PipelineConfig config;
        config.estimator = estimator_from(&opts.estimate);
        config.training = train_from(&opts.train);
        config.mcmc.steps = opts.steps;
        config.mcmc.chains = opts.chains;
        config.mcmc.eta = opts.eta;
        config.mcmc.plain_average = opts.plain_average != 0;
        config.mcmc.burn_in = opts.burn_in;
        config.gamma = opts.train.gamma;
        config.si_model = opts.estimate.si_model != 0;
        config.threads = opts.threads ? opts.threads : 1;
        if (params) config.params = params_from(*params);
        if (model) config.model = model->model;

        const Snapshot y_T = snapshot_from(states, graph->graph.num_nodes());
        if (config.si_model) require_si_compatible(y_T, "snapshot");
        *out = new hr_reconstruction{run_pipeline(graph->graph, y_T, timespan, n0, config, seed)};
    });
}

hr_status hr_reconstruction_history(const hr_reconstruction* rec, hr_history** out)
{
    return guarded([&] {
        need(rec, "reconstruction");
        need(out, "out");
        *out = new hr_history{rec->result.history};
    });
}

hr_params hr_reconstruction_params(const hr_reconstruction* rec)
{
    if (!rec) return hr_params{0.0, 0.0};
    return hr_params{rec->result.params.beta_I, rec->result.params.beta_R};
}

double hr_reconstruction_acceptance(const hr_reconstruction* rec)
{
    return rec ? rec->result.run.diagnostics.overall_acceptance() : 0.0;
}

hr_status hr_reconstruction_hitting(const hr_reconstruction* rec, double* h_I, double* h_R)
{
    return guarded([&] {
        need(rec, "reconstruction");
        need(h_I, "h_I");
        need(h_R, "h_R");
        const auto& est = rec->result.run.estimate;
        std::copy(est.h_I.begin(), est.h_I.end(), h_I);
        std::copy(est.h_R.begin(), est.h_R.end(), h_R);
    });
}

hr_status hr_reconstruction_save(const hr_reconstruction* rec, const char* directory)
{
    return guarded([&] {
        need(rec, "reconstruction");
        need(directory, "directory");
        const std::filesystem::path dir(directory);
        std::filesystem::create_directories(dir);
        const auto& r = rec->result;
        write_text_file(dir / "params.txt", serialize_params(r.params));
        write_text_file(dir / "model.txt", serialize_model(r.model));
        write_text_file(dir / "history.txt", serialize_history(r.history));
        write_text_file(dir / "hitting_estimate.txt", serialize_hitting_estimate(r.run.estimate));
        write_text_file(dir / "diagnostics.txt", serialize_diagnostics(r.run.diagnostics));
    });
}

void hr_reconstruction_free(hr_reconstruction* rec) { delete rec; }

// ---- oracle

hr_status hr_oracle_run(const hr_graph* graph, hr_params params, const char* states, size_t timespan, double n0,
                        double gamma, size_t threads, hr_oracle** out)
{
    return guarded([&] {
        need(graph, "graph");
        need(out, "out");
        require(timespan >= 1, ErrorCode::invalid_argument, "timespan must be at least 1");
        check_n0(n0, graph->graph.num_nodes());
        require(gamma >= 0.0, ErrorCode::invalid_argument, "gamma must be non-negative");
        const Snapshot y_T = snapshot_from(states, graph->graph.num_nodes());
        *out = new hr_oracle{exact_posterior(graph->graph, params_from(params), y_T, timespan, PriorSpec{n0, gamma},
                                             threads ? threads : 1)};
    });
}

size_t hr_oracle_num_histories(const hr_oracle* oracle) { return oracle ? oracle->result.histories.size() : 0; }

double hr_oracle_log_snapshot_prob(const hr_oracle* oracle)
{
    return oracle ? oracle->result.log_snapshot_prob : 0.0;
}

hr_status hr_oracle_expected(const hr_oracle* oracle, double* h_I, double* h_R)
{
    return guarded([&] {
        need(oracle, "oracle");
        need(h_I, "h_I");
        need(h_R, "h_R");
        std::copy(oracle->result.expected_h_I.begin(), oracle->result.expected_h_I.end(), h_I);
        std::copy(oracle->result.expected_h_R.begin(), oracle->result.expected_h_R.end(), h_R);
    });
}

hr_status hr_oracle_save_report(const hr_oracle* oracle, const char* path)
{
    return guarded([&] {
        need(oracle, "oracle");
        need(path, "path");
        write_text_file(path, serialize_oracle_report(oracle->result));
    });
}

hr_status hr_oracle_save_csv(const hr_oracle* oracle, const char* path)
{
    return guarded([&] {
        need(oracle, "oracle");
        need(path, "path");
        require(oracle->result.expected_h_I.size() <= 4, ErrorCode::invalid_argument,
                "history CSV is only written for n <= 4");
        write_text_file(path, serialize_oracle_csv(oracle->result));
    });
}

void hr_oracle_free(hr_oracle* oracle) { delete oracle; }

// ---- evaluation

hr_status hr_evaluate(const hr_history* truth, const hr_history* reconstruction, hr_metrics* out)
{
    return guarded([&] {
        need(truth, "truth");
        need(reconstruction, "reconstruction");
        need(out, "out");
        const MetricReport r = evaluate(truth->history, reconstruction->history);
        *out = hr_metrics{r.macro_f1, r.nrmse, 0, 0.0, 0.0};
    });
}

hr_status hr_metrics_set_gap(hr_metrics* metrics, double ideal_f1, double ideal_nrmse)
{
    return guarded([&] {
        need(metrics, "metrics");
        metrics->gap_f1 = gap(metrics->macro_f1, ideal_f1, Direction::higher_better);
        metrics->gap_nrmse = gap(metrics->nrmse, ideal_nrmse, Direction::lower_better);
        metrics->has_gap = 1;
    });
}

hr_status hr_metrics_save(const hr_metrics* metrics, const char* path)
{
    return guarded([&] {
        need(metrics, "metrics");
        need(path, "path");
        MetricReport r;
        r.macro_f1 = metrics->macro_f1;
        r.nrmse = metrics->nrmse;
        if (metrics->has_gap) {
            r.gap_f1 = metrics->gap_f1;
            r.gap_nrmse = metrics->gap_nrmse;
        }
        write_text_file(path, serialize_metrics(r));
    });
}

// ---- bench

hr_status hr_bench_point(size_t n, size_t timespan, size_t threads, uint64_t seed, double* seconds)
{
    return guarded([&] {
        need(seconds, "seconds");
        PipelineConfig config = bench_config();
        config.threads = threads ? threads : 1;
        *seconds = bench_point(n, timespan, config, seed).seconds;
    });
}

}  // extern "C"
