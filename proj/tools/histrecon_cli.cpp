// histrecon: command-line front end over the C interface.
#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "histrecon/histrecon.h"

namespace fs = std::filesystem;

namespace {

constexpr int kExitUsage = 64;

const char* const kExitCodes =
    "Exit codes:\n"
    "  0   success\n"
    "  2   invalid argument value\n"
    "  3   file not found or not writable\n"
    "  4   parse error in an input file\n"
    "  5   guard violation (oracle instance too large)\n"
    "  6   parameter estimation impossible\n"
    "  7   numerical failure\n"
    "  8   shape mismatch between inputs\n"
    "  9   internal error\n"
    "  64  command-line usage error\n"
    "Errors are printed to stderr as one line:\n"
    "  error code=<name> exit=<n> message=<text>";

int exit_code(hr_status status) { return status == HR_OK ? 0 : static_cast<int>(status) + 1; }

struct Failure {
    hr_status status;
    std::string message;
};

void check(hr_status status)
{
    if (status != HR_OK) throw Failure{status, hr_last_error()};
}

[[noreturn]] void invalid(const std::string& message) { throw Failure{HR_ERR_INVALID_ARGUMENT, message}; }

template <class T, void (*Free)(T*)>
struct Deleter {
    void operator()(T* p) const { Free(p); }
};
using GraphPtr = std::unique_ptr<hr_graph, Deleter<hr_graph, hr_graph_free>>;
using HistoryPtr = std::unique_ptr<hr_history, Deleter<hr_history, hr_history_free>>;
using ModelPtr = std::unique_ptr<hr_model, Deleter<hr_model, hr_model_free>>;
using ReconstructionPtr = std::unique_ptr<hr_reconstruction, Deleter<hr_reconstruction, hr_reconstruction_free>>;
using OraclePtr = std::unique_ptr<hr_oracle, Deleter<hr_oracle, hr_oracle_free>>;

std::string fmt(double value)
{
    char buf[64];
    check(hr_format_double(value, buf, sizeof buf));
    return buf;
}

struct Options {
    std::string graph;
    std::string generator;
    std::string snapshot;
    std::string truth;
    std::string reconstruction;
    std::string params;
    std::string model;
    std::string diffusion = "sir";
    std::size_t timespan = 0;
    double n0 = -1.0;
    double gamma = 1.0;
    std::optional<double> beta_I;
    std::optional<double> beta_R;
    std::size_t iterations = 500;
    double estimate_lr = 0.003;
    std::size_t train_steps = 500;
    std::size_t batch = 10;
    double train_lr = 0.001;
    std::size_t steps = 10;
    std::size_t chains = 100;
    double eta = 0.5;
    bool plain_average = false;
    std::optional<std::size_t> burn_in;
    std::optional<double> ideal_f1;
    std::optional<double> ideal_nrmse;
    std::vector<std::size_t> sizes{1000, 2000, 4000, 8000, 16000};
    std::vector<std::size_t> timespans{2, 3, 4, 5, 6, 7, 8, 9, 10};
    std::size_t bench_timespan = 10;
    std::size_t bench_nodes = 1000;
    std::uint64_t seed = 0;
    std::size_t threads = 1;
    std::string out = ".";
};

bool si_model(const Options& o) { return o.diffusion == "si"; }

void write_file(const fs::path& path, const std::string& text)
{
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f || !(f << text)) throw Failure{HR_ERR_IO, "cannot write " + path.string()};
}

fs::path out_dir(const Options& o)
{
    std::error_code ec;
    fs::create_directories(o.out, ec);
    if (ec) throw Failure{HR_ERR_IO, "cannot create output directory " + o.out + ": " + ec.message()};
    return fs::path(o.out);
}

std::vector<std::string> split(const std::string& s, char sep)
{
    std::vector<std::string> parts;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep)) parts.push_back(item);
    return parts;
}

GraphPtr generate(const std::string& spec, std::uint64_t seed)
{
    const auto parts = split(spec, ':');
    hr_graph* g = nullptr;
    try {
        if (parts.size() == 3 && parts[0] == "ba") {
            check(hr_graph_generate_ba(std::stoull(parts[1]), std::stoull(parts[2]), seed, &g));
        } else if (parts.size() == 3 && parts[0] == "er") {
            check(hr_graph_generate_er(std::stoull(parts[1]), std::stod(parts[2]), seed, &g));
        } else {
            invalid("generator must be ba:n:attachment or er:n:p, got \"" + spec + "\"");
        }
    } catch (const std::logic_error&) {
        invalid("generator must be ba:n:attachment or er:n:p, got \"" + spec + "\"");
    }
    return GraphPtr(g);
}

GraphPtr load_graph(const Options& o, bool allow_generator)
{
    if (!o.graph.empty() && !o.generator.empty()) invalid("give either --graph or --generator, not both");
    if (allow_generator && !o.generator.empty()) {
        GraphPtr g = generate(o.generator, o.seed);
        check(hr_graph_save(g.get(), (out_dir(o) / "graph.txt").c_str()));
        return g;
    }
    if (o.graph.empty()) invalid(allow_generator ? "--graph or --generator is required" : "--graph is required");
    hr_graph* g = nullptr;
    check(hr_graph_load(o.graph.c_str(), &g));
    GraphPtr graph(g);
    if (hr_graph_has_id_map(g)) check(hr_graph_save_id_map(g, (out_dir(o) / "id_map.txt").c_str()));
    return graph;
}

std::string load_snapshot(const Options& o, const hr_graph* g)
{
    if (o.snapshot.empty()) invalid("--snapshot is required");
    std::string states(hr_graph_num_nodes(g), 'S');
    check(hr_snapshot_load(o.snapshot.c_str(), states.size(), states.data()));
    return states;
}

void require_timespan(const Options& o)
{
    if (o.timespan < 1) invalid("--timespan must be at least 1");
}

double require_n0(const Options& o)
{
    if (o.n0 < 0.0) invalid("--n0 is required");
    return o.n0;
}

hr_params load_params(const Options& o)
{
    hr_params p{};
    if (!o.params.empty()) {
        check(hr_params_load(o.params.c_str(), &p));
    } else if (o.beta_I) {
        p.beta_I = *o.beta_I;
        p.beta_R = o.beta_R.value_or(0.0);
    } else {
        invalid("--params or --beta-I is required");
    }
    if (si_model(o)) p.beta_R = 0.0;
    return p;
}

hr_train_options train_options(const Options& o)
{
    hr_train_options t;
    hr_train_options_default(&t);
    t.steps = o.train_steps;
    t.batch_size = o.batch;
    t.learning_rate = o.train_lr;
    t.gamma = o.gamma;
    t.threads = o.threads;
    return t;
}

void cmd_generate(const Options& o)
{
    if (o.generator.empty()) invalid("--generator is required");
    GraphPtr g = generate(o.generator, o.seed);
    check(hr_graph_save(g.get(), (out_dir(o) / "graph.txt").c_str()));
}

void cmd_simulate(const Options& o)
{
    GraphPtr g = load_graph(o, true);
    require_timespan(o);
    const double n0 = require_n0(o);
    if (n0 != static_cast<double>(static_cast<std::size_t>(n0))) invalid("--n0 must be an integer for simulate");
    const hr_params p = load_params(o);
    hr_history* h = nullptr;
    check(hr_simulate(g.get(), p, o.timespan, static_cast<std::size_t>(n0), o.seed, &h));
    HistoryPtr history(h);
    const fs::path dir = out_dir(o);
    check(hr_history_save(h, (dir / "history.txt").c_str()));
    check(hr_history_save_hitting_times(h, (dir / "hitting_times.txt").c_str()));
    std::string states(hr_history_num_nodes(h), 'S');
    check(hr_history_row(h, o.timespan, states.data()));
    check(hr_snapshot_save((dir / "snapshot.txt").c_str(), states.data(), states.size()));
}

void cmd_estimate(const Options& o)
{
    GraphPtr g = load_graph(o, false);
    require_timespan(o);
    const std::string states = load_snapshot(o, g.get());
    hr_estimate_options e;
    hr_estimate_options_default(&e);
    e.iterations = o.iterations;
    e.learning_rate = o.estimate_lr;
    e.si_model = si_model(o) ? 1 : 0;
    hr_params p{};
    check(hr_estimate(g.get(), states.data(), o.timespan, require_n0(o), &e, &p));
    check(hr_params_save((out_dir(o) / "params.txt").c_str(), p));
}

void cmd_train(const Options& o)
{
    GraphPtr g = load_graph(o, false);
    require_timespan(o);
    const hr_params p = load_params(o);
    hr_model* m = nullptr;
    if (!o.model.empty()) {
        check(hr_model_load(o.model.c_str(), &m));
    } else {
        check(hr_model_init(o.timespan, o.seed, &m));
    }
    ModelPtr model(m);
    if (hr_model_timespan(m) != o.timespan) throw Failure{HR_ERR_SHAPE_MISMATCH, "model timespan differs from --timespan"};
    const hr_train_options t = train_options(o);
    check(hr_train(m, g.get(), p, require_n0(o), &t, o.seed));
    check(hr_model_save(m, (out_dir(o) / "model.txt").c_str()));
}

void cmd_reconstruct(const Options& o)
{
    GraphPtr g = load_graph(o, false);
    require_timespan(o);
    const std::string states = load_snapshot(o, g.get());
    hr_reconstruct_options r;
    hr_reconstruct_options_default(&r);
    r.estimate.iterations = o.iterations;
    r.estimate.learning_rate = o.estimate_lr;
    r.estimate.si_model = si_model(o) ? 1 : 0;
    r.train = train_options(o);
    r.steps = o.steps;
    r.chains = o.chains;
    r.eta = o.eta;
    r.plain_average = o.plain_average ? 1 : 0;
    r.burn_in = o.burn_in.value_or(o.plain_average ? o.steps / 10 : 0);
    r.threads = o.threads;

    std::optional<hr_params> params;
    if (!o.params.empty() || o.beta_I) params = load_params(o);
    ModelPtr model;
    if (!o.model.empty()) {
        hr_model* m = nullptr;
        check(hr_model_load(o.model.c_str(), &m));
        model.reset(m);
    }
    hr_reconstruction* rec = nullptr;
    check(hr_reconstruct(g.get(), states.data(), o.timespan, require_n0(o), &r, params ? &*params : nullptr,
                         model.get(), o.seed, &rec));
    ReconstructionPtr result(rec);
    check(hr_reconstruction_save(rec, out_dir(o).c_str()));
}

void cmd_oracle(const Options& o)
{
    GraphPtr g = load_graph(o, false);
    require_timespan(o);
    const std::string states = load_snapshot(o, g.get());
    const hr_params p = load_params(o);
    hr_oracle* r = nullptr;
    check(hr_oracle_run(g.get(), p, states.data(), o.timespan, require_n0(o), o.gamma, o.threads, &r));
    OraclePtr oracle(r);
    const fs::path dir = out_dir(o);
    check(hr_oracle_save_report(r, (dir / "oracle.txt").c_str()));
    if (hr_graph_num_nodes(g.get()) <= 4) check(hr_oracle_save_csv(r, (dir / "oracle.csv").c_str()));
}

void cmd_evaluate(const Options& o, bool out_given)
{
    if (o.truth.empty() || o.reconstruction.empty()) invalid("--truth and --reconstruction are required");
    if (o.ideal_f1.has_value() != o.ideal_nrmse.has_value()) invalid("--ideal-f1 and --ideal-nrmse go together");
    hr_history* t = nullptr;
    hr_history* r = nullptr;
    check(hr_history_load(o.truth.c_str(), &t));
    HistoryPtr truth(t);
    check(hr_history_load(o.reconstruction.c_str(), &r));
    HistoryPtr rec(r);
    hr_metrics m{};
    check(hr_evaluate(t, r, &m));
    if (o.ideal_f1) check(hr_metrics_set_gap(&m, *o.ideal_f1, *o.ideal_nrmse));
    std::string line = "macro_f1=" + fmt(m.macro_f1) + " nrmse=" + fmt(m.nrmse);
    if (m.has_gap) line += " gap_f1=" + fmt(m.gap_f1) + " gap_nrmse=" + fmt(m.gap_nrmse);
    std::printf("%s\n", line.c_str());
    if (out_given) check(hr_metrics_save(&m, (out_dir(o) / "metrics.txt").c_str()));
}

void cmd_bench(const Options& o)
{
    std::string csv = "n,T,seconds\n";
    auto run = [&](std::size_t n, std::size_t T) {
        double seconds = 0.0;
        check(hr_bench_point(n, T, o.threads, o.seed, &seconds));
        csv += std::to_string(n) + ',' + std::to_string(T) + ',' + fmt(seconds) + '\n';
        std::fprintf(stderr, "bench n=%zu T=%zu seconds=%.3f\n", n, T, seconds);
    };
    for (std::size_t n : o.sizes) run(n, o.bench_timespan);
    for (std::size_t T : o.timespans) run(o.bench_nodes, T);
    write_file(out_dir(o) / "bench.csv", csv);
}

void add_graph_flags(CLI::App* c, Options& o, bool generator)
{
    c->add_option("--graph", o.graph, "edge-list file");
    if (generator) c->add_option("--generator", o.generator, "ba:n:attachment or er:n:p");
}

void add_instance_flags(CLI::App* c, Options& o)
{
    c->add_option("--timespan,-T", o.timespan, "number of diffusion steps T");
    c->add_option("--n0", o.n0, "expected number of initially infected nodes");
    c->add_option("--diffusion", o.diffusion, "si or sir")->check(CLI::IsMember({"si", "sir"}));
}

void add_param_flags(CLI::App* c, Options& o)
{
    c->add_option("--params", o.params, "params file (beta_I/beta_R)");
    c->add_option("--beta-I", o.beta_I, "infection rate, instead of --params");
    c->add_option("--beta-R", o.beta_R, "recovery rate, instead of --params");
}

void add_train_flags(CLI::App* c, Options& o)
{
    c->add_option("--gamma", o.gamma, "prior strength on the number of sources");
    c->add_option("--train-steps", o.train_steps, "proposal training steps J");
    c->add_option("--batch", o.batch, "histories per training step K");
    c->add_option("--train-lr", o.train_lr, "proposal learning rate");
}

void add_estimate_flags(CLI::App* c, Options& o)
{
    c->add_option("--iterations", o.iterations, "estimator iterations I");
    c->add_option("--lr", o.estimate_lr, "estimator learning rate");
}

}  // namespace

int main(int argc, char** argv)
{
    Options o;
    CLI::App app{"Reconstruct the history of an SI/SIR diffusion from its final snapshot."};
    app.footer(kExitCodes);
    app.require_subcommand(1);
    app.fallthrough();
    app.add_option("--seed", o.seed, "seed for every stochastic step")->capture_default_str();
    app.add_option("--threads", o.threads, "worker cap; results do not depend on it")->capture_default_str();
    auto* out_opt = app.add_option("--out", o.out, "output directory")->capture_default_str();

    auto* generate = app.add_subcommand("generate", "write a random graph to graph.txt");
    generate->add_option("--generator", o.generator, "ba:n:attachment or er:n:p");

    auto* simulate = app.add_subcommand("simulate", "write history.txt, hitting_times.txt and snapshot.txt");
    add_graph_flags(simulate, o, true);
    add_instance_flags(simulate, o);
    add_param_flags(simulate, o);

    auto* estimate = app.add_subcommand("estimate", "fit diffusion rates to a snapshot, write params.txt");
    add_graph_flags(estimate, o, false);
    add_instance_flags(estimate, o);
    estimate->add_option("--snapshot", o.snapshot, "snapshot file");
    add_estimate_flags(estimate, o);

    auto* train = app.add_subcommand("train", "train a proposal network, write model.txt");
    add_graph_flags(train, o, false);
    add_instance_flags(train, o);
    add_param_flags(train, o);
    add_train_flags(train, o);
    train->add_option("--model", o.model, "checkpoint to continue from");

    auto* reconstruct = app.add_subcommand(
        "reconstruct", "estimate, train and sample; write history.txt, hitting_estimate.txt, diagnostics.txt");
    add_graph_flags(reconstruct, o, false);
    add_instance_flags(reconstruct, o);
    reconstruct->add_option("--snapshot", o.snapshot, "snapshot file");
    add_param_flags(reconstruct, o);
    reconstruct->add_option("--model", o.model, "trained proposal checkpoint");
    add_estimate_flags(reconstruct, o);
    add_train_flags(reconstruct, o);
    reconstruct->add_option("--steps", o.steps, "M-H steps per chain S");
    reconstruct->add_option("--chains", o.chains, "number of chains L");
    reconstruct->add_option("--eta", o.eta, "moving-average weight");
    reconstruct->add_flag("--plain-average", o.plain_average, "average after burn-in instead");
    reconstruct->add_option("--burn-in", o.burn_in, "discarded steps with --plain-average (default S/10)");

    auto* oracle = app.add_subcommand("oracle", "exact posterior by enumeration, write oracle.txt");
    add_graph_flags(oracle, o, false);
    add_instance_flags(oracle, o);
    oracle->add_option("--snapshot", o.snapshot, "snapshot file");
    add_param_flags(oracle, o);
    oracle->add_option("--gamma", o.gamma, "prior strength on the number of sources");

    auto* evaluate = app.add_subcommand("evaluate", "print macro_f1 and nrmse of a reconstruction");
    evaluate->add_option("--truth", o.truth, "true history file");
    evaluate->add_option("--reconstruction", o.reconstruction, "reconstructed history file");
    evaluate->add_option("--ideal-f1", o.ideal_f1, "reference F1 for the gap");
    evaluate->add_option("--ideal-nrmse", o.ideal_nrmse, "reference NRMSE for the gap");

    auto* bench = app.add_subcommand("bench", "time reconstructions over n and T, write bench.csv");
    bench->add_option("--sizes", o.sizes, "node counts for the n sweep")->delimiter(',');
    bench->add_option("--timespans", o.timespans, "timespans for the T sweep")->delimiter(',');
    bench->add_option("--sweep-timespan", o.bench_timespan, "T used in the n sweep");
    bench->add_option("--sweep-nodes", o.bench_nodes, "n used in the T sweep");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::string msg = e.what();
        for (char& c : msg)
            if (c == '\n') c = ' ';
        std::fprintf(stderr, "error code=usage exit=%d message=%s\n", kExitUsage, msg.c_str());
        return kExitUsage;
    }

    try {
        if (*generate) cmd_generate(o);
        if (*simulate) cmd_simulate(o);
        if (*estimate) cmd_estimate(o);
        if (*train) cmd_train(o);
        if (*reconstruct) cmd_reconstruct(o);
        if (*oracle) cmd_oracle(o);
        if (*evaluate) cmd_evaluate(o, out_opt->count() > 0);
        if (*bench) cmd_bench(o);
    } catch (const Failure& f) {
        std::string msg = f.message;
        for (char& c : msg)
            if (c == '\n') c = ' ';
        std::fprintf(stderr, "error code=%s exit=%d message=%s\n", hr_status_name(f.status), exit_code(f.status),
                     msg.c_str());
        return exit_code(f.status);
    }
    return 0;
}
