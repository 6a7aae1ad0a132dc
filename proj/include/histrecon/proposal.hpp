#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "histrecon/diffusion.hpp"
#include "histrecon/graph.hpp"
#include "histrecon/rng.hpp"

namespace histrecon {

using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline constexpr double kProbabilityFloor = 1e-6;

struct NormLayer {
    Mat scale;  // 1 x d
    Mat shift;  // 1 x d
    Mat running_mean;
    Mat running_var;
};

struct GnnLayer {
    Mat w_self;      // W1: node self term
    Mat w_message;   // W2: neighbour message
    Mat w_edge;      // W3: edge self term
    Mat w_edge_src;  // W4: edge update from source node
    Mat w_edge_dst;  // W5: edge update from destination node
    NormLayer node_norm;
    NormLayer edge_norm;
};

/// Edge-gated anisotropic message-passing network mapping y_T to per-(t,u)
/// reverse-sampling probabilities. Layout: one-hot(3) -> d input map, `layers`
/// gated residual layers, then a two-layer MLP head d -> hidden -> 2T.
struct ProposalModel {
    std::size_t timespan = 0;
    std::size_t dim = 16;
    std::size_t hidden = 16;
    /// Replace batch normalisation with identity (used by gradient checks).
    bool identity_norm = false;

    Mat input_weight;  // d x 3
    Mat input_bias;    // 1 x d
    Mat edge_input;    // 1 x d, shared by every directed edge
    std::vector<GnnLayer> layers;
    Mat head_weight1;  // hidden x d
    Mat head_bias1;    // 1 x hidden
    Mat head_weight2;  // 2T x hidden
    Mat head_bias2;    // 1 x 2T

    std::size_t num_layers() const { return layers.size(); }
    std::size_t num_parameters() const;

    /// Visits every learnable tensor in a fixed order (running stats excluded).
    void for_each_parameter(const std::function<void(const std::string&, Mat&)>& fn);
    void for_each_parameter(const std::function<void(const std::string&, const Mat&)>& fn) const;
    /// Visits every stored tensor including normalisation running statistics.
    void for_each_tensor(const std::function<void(const std::string&, Mat&)>& fn);
    void for_each_tensor(const std::function<void(const std::string&, const Mat&)>& fn) const;

    friend bool operator==(const ProposalModel& a, const ProposalModel& b);
};

struct ProposalShape {
    std::size_t timespan = 0;
    std::size_t dim = 16;
    std::size_t hidden = 16;
    std::size_t layers = 3;
    bool identity_norm = false;
};

/// Framework-default uniform(+-1/sqrt(fan_in)) initialisation; edge input and
/// norm shift start at zero, norm scale at one.
ProposalModel init_proposal(const ProposalShape& shape, Rng& rng);
/// Every parameter zero except norm scales (one).
ProposalModel zero_proposal(const ProposalShape& shape);
/// Same structure with every tensor zero; used as a gradient accumulator.
ProposalModel zeros_like(const ProposalModel& model);

/// Row t (t = 0..T-1) governs generating y_t from y_{t+1}.
struct ProposalProbs {
    std::size_t timespan = 0;
    std::size_t num_nodes = 0;
    std::vector<double> q_I;  // T x n, row-major by t
    std::vector<double> q_R;

    double infect(std::size_t t, NodeId u) const { return q_I[t * num_nodes + u]; }
    double recover(std::size_t t, NodeId u) const { return q_R[t * num_nodes + u]; }
};

enum class NormMode { batch, running };

/// Intermediate values kept for back-propagation.
struct ForwardCache;

class ProposalForward {
public:
    ProposalForward();
    ~ProposalForward();
    ProposalForward(ProposalForward&&) noexcept;
    ProposalForward& operator=(ProposalForward&&) noexcept;

    const ProposalProbs& probs() const { return probs_; }

    /// Back-propagates dLoss/dq_I, dLoss/dq_R (T x n each) and accumulates
    /// parameter gradients into `grads`.
    void backward(const ProposalModel& model, const Graph& graph, const std::vector<double>& d_q_I,
                  const std::vector<double>& d_q_R, ProposalModel& grads) const;

    /// Batch statistics observed by each normalisation layer (for running-stat updates).
    const std::vector<std::pair<Mat, Mat>>& batch_stats() const;

private:
    friend ProposalForward forward_with_cache(const ProposalModel&, const Graph&, const Snapshot&, NormMode);
    ProposalProbs probs_;
    std::unique_ptr<ForwardCache> cache_;
};

ProposalForward forward_with_cache(const ProposalModel& model, const Graph& graph, const Snapshot& y_T,
                                   NormMode mode);

/// Inference-mode forward pass (running normalisation statistics).
ProposalProbs forward_probs(const ProposalModel& model, const Graph& graph, const Snapshot& y_T);

/// Updates running statistics from a training-mode pass (momentum 0.1, unbiased variance).
void update_running_stats(ProposalModel& model, const ProposalForward& pass, std::size_t num_nodes,
                          std::size_t num_directed_edges);
void update_running_stats(ProposalModel& model, const std::vector<std::pair<Mat, Mat>>& batch_stats,
                          std::size_t num_nodes, std::size_t num_directed_edges);

// ---- reverse-temporal sampler ------------------------------------------------

struct SampledHistory {
    History history;
    double log_q = 0.0;
};

struct SamplerCounters {
    std::uint64_t stochastic_choices = 0;
    std::uint64_t forced_choices = 0;
    std::uint64_t counter_updates = 0;
    std::uint64_t sort_comparisons = 0;

    std::uint64_t total() const { return stochastic_choices + forced_choices + counter_updates + sort_comparisons; }
};

SampledHistory sample_history(const ProposalProbs& probs, const Graph& graph, const Snapshot& y_T, Rng& rng,
                              SamplerCounters* counters = nullptr);

/// Replays the sampler against `history`; kNegInf if the sampler cannot produce it.
double eval_log_q(const ProposalProbs& probs, const Graph& graph, const Snapshot& y_T, const History& history);

/// eval_log_q plus d log_q / d q accumulated into d_q_I and d_q_R (T x n).
double eval_log_q_grad(const ProposalProbs& probs, const Graph& graph, const Snapshot& y_T, const History& history,
                       std::vector<double>& d_q_I, std::vector<double>& d_q_R);

// ---- training ------------------------------------------------------------------

struct TrainConfig {
    std::size_t batch_size = 10;  // K
    std::size_t steps = 500;      // J
    double learning_rate = 0.001;
    double weight_decay = 0.01;
    std::size_t threads = 1;
};

struct TrainTrace {
    std::vector<double> loss;  // mean -log Q per step
};

/// Minimises E_{Y ~ P_beta}[-log Q_theta(y_T)[Y]] on histories simulated from
/// round(prior.n0_I) uniform sources. Deterministic in `seed`.
void train_proposal(ProposalModel& model, const Graph& graph, const DiffusionParams& params,
                    const PriorSpec& prior, const TrainConfig& config, std::uint64_t seed,
                    TrainTrace* trace = nullptr);

/// Loss -(1/K) sum log Q(y_T^i)[Y^i] and its gradient over a fixed batch; the
/// batch-mode normalisation statistics are used. Exposed for gradient checks.
double proposal_loss_and_grad(const ProposalModel& model, const Graph& graph, const std::vector<History>& batch,
                              NormMode mode, ProposalModel* grads);

}  // namespace histrecon
