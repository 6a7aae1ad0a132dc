#include "histrecon/proposal.hpp"

#include <cmath>
#include <limits>

#include "histrecon/errors.hpp"
#include "histrecon/parallel.hpp"

namespace histrecon {

namespace {

struct SampleResult {
    double log_q = 0.0;
    ProposalModel grads;
    std::vector<std::pair<Mat, Mat>> batch_stats;
};

SampleResult sample_loss_grad(const ProposalModel& model, const Graph& graph, const History& history, NormMode mode,
                              double weight, bool want_grad)
{
    SampleResult r;
    const Snapshot y_T = history.final_snapshot();
    const ProposalForward pass = forward_with_cache(model, graph, y_T, mode);
    if (mode == NormMode::batch) r.batch_stats = pass.batch_stats();
    std::vector<double> d_q_I, d_q_R;
    r.log_q = eval_log_q_grad(pass.probs(), graph, y_T, history, d_q_I, d_q_R);
    if (want_grad && std::isfinite(r.log_q)) {
        // Loss is -weight * log_q.
        for (auto& g : d_q_I) g *= -weight;
        for (auto& g : d_q_R) g *= -weight;
        r.grads = zeros_like(model);
        pass.backward(model, graph, d_q_I, d_q_R, r.grads);
    }
    return r;
}

void add_into(ProposalModel& acc, const ProposalModel& g)
{
    std::vector<const Mat*> src;
    g.for_each_parameter([&](const std::string&, const Mat& t) { src.push_back(&t); });
    std::size_t i = 0;
    acc.for_each_parameter([&](const std::string&, Mat& t) { t += *src[i++]; });
}

}  // namespace

double proposal_loss_and_grad(const ProposalModel& model, const Graph& graph, const std::vector<History>& batch,
                              NormMode mode, ProposalModel* grads)
{
    require(!batch.empty(), ErrorCode::invalid_argument, "empty training batch");
    const double weight = 1.0 / static_cast<double>(batch.size());
    if (grads) *grads = zeros_like(model);
    double loss = 0.0;
    for (const History& h : batch) {
        SampleResult r = sample_loss_grad(model, graph, h, mode, weight, grads != nullptr);
        if (!std::isfinite(r.log_q)) return std::numeric_limits<double>::infinity();
        loss -= weight * r.log_q;
        if (grads) add_into(*grads, r.grads);
    }
    return loss;
}

void train_proposal(ProposalModel& model, const Graph& graph, const DiffusionParams& params,
                    const PriorSpec& prior, const TrainConfig& config, std::uint64_t seed, TrainTrace* trace)
{
    require(config.batch_size >= 1, ErrorCode::invalid_argument, "batch size K must be >= 1");
    const std::size_t T = model.timespan;
    const std::size_t n = graph.num_nodes();
    const std::size_t sources = static_cast<std::size_t>(std::llround(prior.n0_I));
    require(sources <= n, ErrorCode::invalid_argument, "n0_I exceeds node count");
    const std::size_t K = config.batch_size;
    const double weight = 1.0 / static_cast<double>(K);

    // AdamW moments, one per parameter tensor.
    std::vector<Mat> m1, m2;
    model.for_each_parameter([&](const std::string&, const Mat& t) {
        m1.push_back(Mat::Zero(t.rows(), t.cols()));
        m2.push_back(Mat::Zero(t.rows(), t.cols()));
    });
    constexpr double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;

    std::vector<SampleResult> results(K);
    for (std::size_t step = 0; step < config.steps; ++step) {
        parallel_for(K, config.threads, [&](std::size_t i) {
            Rng rng(seed, stream_id(streams::training, step * K + i));
            const Snapshot y0 = sample_initial(graph, sources, rng);
            const History history = simulate(graph, params, y0, T, rng);
            results[i] = sample_loss_grad(model, graph, history, NormMode::batch, weight, true);
        });

        double loss = 0.0;
        ProposalModel grads = zeros_like(model);
        for (std::size_t i = 0; i < K; ++i) {
            if (!std::isfinite(results[i].log_q))
                fail(ErrorCode::numeric, "non-finite training loss at step " + std::to_string(step) + ", sample " +
                                             std::to_string(i) + ": sampled history outside proposal support");
            loss -= weight * results[i].log_q;
            add_into(grads, results[i].grads);
        }
        for (std::size_t i = 0; i < K; ++i)
            update_running_stats(model, results[i].batch_stats, n, graph.adjacency().size());
        if (trace) trace->loss.push_back(loss);

        std::vector<const Mat*> g;
        grads.for_each_parameter([&](const std::string&, const Mat& t) { g.push_back(&t); });
        const double t = static_cast<double>(step + 1);
        const double c1 = 1.0 - std::pow(beta1, t);
        const double c2 = 1.0 - std::pow(beta2, t);
        std::size_t k = 0;
        model.for_each_parameter([&](const std::string&, Mat& p) {
            p *= 1.0 - config.learning_rate * config.weight_decay;
            m1[k] = beta1 * m1[k] + (1.0 - beta1) * *g[k];
            m2[k] = beta2 * m2[k] + (1.0 - beta2) * g[k]->cwiseProduct(*g[k]);
            p.array() -= config.learning_rate * (m1[k].array() / c1) / ((m2[k].array() / c2).sqrt() + adam_eps);
            ++k;
        });
    }
}

}  // namespace histrecon
