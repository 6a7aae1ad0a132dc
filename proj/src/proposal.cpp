#include "histrecon/proposal.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "histrecon/errors.hpp"

namespace histrecon {

namespace {

constexpr double kNormEps = 1e-5;
constexpr double kNormMomentum = 0.1;

template <class Model, class Fn>
void visit_tensors(Model& m, Fn&& fn, bool include_running)
{
    fn("input_weight", m.input_weight);
    fn("input_bias", m.input_bias);
    fn("edge_input", m.edge_input);
    for (std::size_t l = 0; l < m.layers.size(); ++l) {
        auto& layer = m.layers[l];
        const std::string p = "layer" + std::to_string(l) + ".";
        fn(p + "w_self", layer.w_self);
        fn(p + "w_message", layer.w_message);
        fn(p + "w_edge", layer.w_edge);
        fn(p + "w_edge_src", layer.w_edge_src);
        fn(p + "w_edge_dst", layer.w_edge_dst);
        fn(p + "node_norm.scale", layer.node_norm.scale);
        fn(p + "node_norm.shift", layer.node_norm.shift);
        fn(p + "edge_norm.scale", layer.edge_norm.scale);
        fn(p + "edge_norm.shift", layer.edge_norm.shift);
        if (include_running) {
            fn(p + "node_norm.running_mean", layer.node_norm.running_mean);
            fn(p + "node_norm.running_var", layer.node_norm.running_var);
            fn(p + "edge_norm.running_mean", layer.edge_norm.running_mean);
            fn(p + "edge_norm.running_var", layer.edge_norm.running_var);
        }
    }
    fn("head_weight1", m.head_weight1);
    fn("head_bias1", m.head_bias1);
    fn("head_weight2", m.head_weight2);
    fn("head_bias2", m.head_bias2);
}

// Element-wise activations through Eigen's packet exp.
Mat sigmoid_of(const Mat& x) { return (1.0 + (-x.array()).exp()).inverse().matrix(); }

Mat uniform_matrix(std::size_t rows, std::size_t cols, double bound, Rng& rng)
{
    Mat m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = (2.0 * rng.uniform() - 1.0) * bound;
    return m;
}

NormLayer fresh_norm(std::size_t d)
{
    return {Mat::Ones(1, d), Mat::Zero(1, d), Mat::Zero(1, d), Mat::Ones(1, d)};
}

ProposalModel shaped_zero(const ProposalShape& shape)
{
    require(shape.timespan >= 1, ErrorCode::invalid_argument, "proposal timespan must be >= 1");
    require(shape.dim >= 1 && shape.hidden >= 1, ErrorCode::invalid_argument, "proposal widths must be >= 1");
    const std::size_t d = shape.dim;
    ProposalModel m;
    m.timespan = shape.timespan;
    m.dim = d;
    m.hidden = shape.hidden;
    m.identity_norm = shape.identity_norm;
    m.input_weight = Mat::Zero(d, 3);
    m.input_bias = Mat::Zero(1, d);
    m.edge_input = Mat::Zero(1, d);
    m.layers.resize(shape.layers);
    for (auto& layer : m.layers) {
        layer.w_self = Mat::Zero(d, d);
        layer.w_message = Mat::Zero(d, d);
        layer.w_edge = Mat::Zero(d, d);
        layer.w_edge_src = Mat::Zero(d, d);
        layer.w_edge_dst = Mat::Zero(d, d);
        layer.node_norm = fresh_norm(d);
        layer.edge_norm = fresh_norm(d);
    }
    m.head_weight1 = Mat::Zero(shape.hidden, d);
    m.head_bias1 = Mat::Zero(1, shape.hidden);
    m.head_weight2 = Mat::Zero(2 * shape.timespan, shape.hidden);
    m.head_bias2 = Mat::Zero(1, 2 * shape.timespan);
    return m;
}

}  // namespace

std::size_t ProposalModel::num_parameters() const
{
    std::size_t total = 0;
    for_each_parameter([&](const std::string&, const Mat& t) { total += static_cast<std::size_t>(t.size()); });
    return total;
}

void ProposalModel::for_each_parameter(const std::function<void(const std::string&, Mat&)>& fn)
{
    visit_tensors(*this, fn, false);
}
void ProposalModel::for_each_parameter(const std::function<void(const std::string&, const Mat&)>& fn) const
{
    visit_tensors(*this, fn, false);
}
void ProposalModel::for_each_tensor(const std::function<void(const std::string&, Mat&)>& fn)
{
    visit_tensors(*this, fn, true);
}
void ProposalModel::for_each_tensor(const std::function<void(const std::string&, const Mat&)>& fn) const
{
    visit_tensors(*this, fn, true);
}

bool operator==(const ProposalModel& a, const ProposalModel& b)
{
    if (a.timespan != b.timespan || a.dim != b.dim || a.hidden != b.hidden || a.identity_norm != b.identity_norm ||
        a.layers.size() != b.layers.size())
        return false;
    std::vector<const Mat*> ta, tb;
    a.for_each_tensor([&](const std::string&, const Mat& t) { ta.push_back(&t); });
    b.for_each_tensor([&](const std::string&, const Mat& t) { tb.push_back(&t); });
    for (std::size_t i = 0; i < ta.size(); ++i) {
        if (ta[i]->rows() != tb[i]->rows() || ta[i]->cols() != tb[i]->cols()) return false;
        // Bitwise comparison: checkpoints must round-trip exactly.
        if (std::memcmp(ta[i]->data(), tb[i]->data(), sizeof(double) * ta[i]->size()) != 0) return false;
    }
    return true;
}

ProposalModel zero_proposal(const ProposalShape& shape) { return shaped_zero(shape); }

ProposalModel init_proposal(const ProposalShape& shape, Rng& rng)
{
    ProposalModel m = shaped_zero(shape);
    const std::size_t d = shape.dim;
    const double in_bound = 1.0 / std::sqrt(3.0);
    const double d_bound = 1.0 / std::sqrt(static_cast<double>(d));
    const double h_bound = 1.0 / std::sqrt(static_cast<double>(shape.hidden));
    m.input_weight = uniform_matrix(d, 3, in_bound, rng);
    m.input_bias = uniform_matrix(1, d, in_bound, rng);
    for (auto& layer : m.layers) {
        layer.w_self = uniform_matrix(d, d, d_bound, rng);
        layer.w_message = uniform_matrix(d, d, d_bound, rng);
        layer.w_edge = uniform_matrix(d, d, d_bound, rng);
        layer.w_edge_src = uniform_matrix(d, d, d_bound, rng);
        layer.w_edge_dst = uniform_matrix(d, d, d_bound, rng);
    }
    m.head_weight1 = uniform_matrix(shape.hidden, d, d_bound, rng);
    m.head_bias1 = uniform_matrix(1, shape.hidden, d_bound, rng);
    m.head_weight2 = uniform_matrix(2 * shape.timespan, shape.hidden, h_bound, rng);
    m.head_bias2 = uniform_matrix(1, 2 * shape.timespan, h_bound, rng);
    return m;
}

ProposalModel zeros_like(const ProposalModel& model)
{
    ProposalModel z = model;
    z.for_each_tensor([](const std::string&, Mat& t) { t.setZero(); });
    return z;
}

// ---- forward / backward ----------------------------------------------------------

namespace {

struct NormCache {
    bool identity = true;
    bool batch = false;
    Mat xhat;     // normalised input
    Mat inv_std;  // 1 x d
};

Mat norm_forward(const NormLayer& p, const Mat& x, NormMode mode, bool identity, NormCache& cache,
                 std::pair<Mat, Mat>* stats)
{
    cache.identity = identity;
    if (identity || x.rows() == 0) {
        cache.identity = true;
        return x;
    }
    Mat mean, var;
    if (mode == NormMode::batch) {
        cache.batch = true;
        mean = x.colwise().mean();
        var = (x.rowwise() - mean.row(0)).array().square().colwise().mean();
        if (stats) *stats = {mean, var};
    } else {
        mean = p.running_mean;
        var = p.running_var;
    }
    cache.inv_std = (var.array() + kNormEps).rsqrt();
    cache.xhat = (x.rowwise() - mean.row(0)).array().rowwise() * cache.inv_std.row(0).array();
    Mat y = cache.xhat.array().rowwise() * p.scale.row(0).array();
    y.rowwise() += p.shift.row(0);
    return y;
}

Mat norm_backward(const NormLayer& p, const Mat& dy, const NormCache& cache, NormLayer& grad)
{
    if (cache.identity) return dy;
    grad.scale += (dy.array() * cache.xhat.array()).colwise().sum().matrix();
    grad.shift += dy.colwise().sum();
    Mat dxhat = dy.array().rowwise() * p.scale.row(0).array();
    if (!cache.batch) return dxhat.array().rowwise() * cache.inv_std.row(0).array();
    const double rows = static_cast<double>(dy.rows());
    const Mat sum_dxhat = dxhat.colwise().sum();
    const Mat sum_dxhat_xhat = (dxhat.array() * cache.xhat.array()).colwise().sum();
    Mat dx = rows * dxhat.array();
    dx.rowwise() -= sum_dxhat.row(0);
    dx.array() -= cache.xhat.array().rowwise() * sum_dxhat_xhat.row(0).array();
    dx.array().rowwise() *= (cache.inv_std.array() / rows).row(0);
    return dx;
}

// SiLU keeping sigmoid(x) for the backward pass.
Mat apply_silu(const Mat& x, Mat& sig)
{
    sig = sigmoid_of(x);
    return (x.array() * sig.array()).matrix();
}

Mat silu_backward(const Mat& pre, const Mat& sig, const Mat& dy)
{
    return (dy.array() * sig.array() * (1.0 + pre.array() * (1.0 - sig.array()))).matrix();
}

}  // namespace

struct LayerCache {
    Mat H, E, G, P2;
    Mat A_hat, A_sig;
    NormCache node_norm;
    bool edge_updated = false;
    Mat B_hat, B_sig;
    NormCache edge_norm;
};

struct ForwardCache {
    Mat X;
    std::vector<LayerCache> layers;
    Mat H_final, Z, Z_sig, Z_act, Q_raw;
    std::vector<std::pair<Mat, Mat>> batch_stats;  // node0, edge0, node1, edge1, ...
};

ProposalForward::ProposalForward() = default;
ProposalForward::~ProposalForward() = default;
ProposalForward::ProposalForward(ProposalForward&&) noexcept = default;
ProposalForward& ProposalForward::operator=(ProposalForward&&) noexcept = default;

const std::vector<std::pair<Mat, Mat>>& ProposalForward::batch_stats() const { return cache_->batch_stats; }

ProposalForward forward_with_cache(const ProposalModel& model, const Graph& graph, const Snapshot& y_T,
                                   NormMode mode)
{
    const std::size_t n = graph.num_nodes();
    require(y_T.size() == n, ErrorCode::shape_mismatch, "snapshot length differs from node count");
    require(model.timespan >= 1, ErrorCode::shape_mismatch, "proposal model has no timespan");
    const std::size_t d = model.dim;
    const auto& offsets = graph.offsets();
    const auto& adjacency = graph.adjacency();
    const std::size_t M = adjacency.size();

    ProposalForward pass;
    pass.cache_ = std::make_unique<ForwardCache>();
    ForwardCache& c = *pass.cache_;
    c.X = Mat::Zero(n, 3);
    for (std::size_t u = 0; u < n; ++u) c.X(u, static_cast<int>(y_T[u])) = 1.0;

    Mat H = c.X * model.input_weight.transpose();
    H.rowwise() += model.input_bias.row(0);
    Mat E = model.edge_input.replicate(M, 1);

    c.layers.resize(model.layers.size());
    c.batch_stats.assign(2 * model.layers.size(), {});
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
        const GnnLayer& p = model.layers[l];
        LayerCache& lc = c.layers[l];
        lc.G = sigmoid_of(E);
        lc.P2 = H * p.w_message.transpose();
        Mat A = H * p.w_self.transpose();
        for (std::size_t u = 0; u < n; ++u) {
            const std::size_t deg = offsets[u + 1] - offsets[u];
            if (deg == 0) continue;
            const double inv = 1.0 / static_cast<double>(deg);
            double* a = A.data() + u * d;
            for (std::size_t slot = offsets[u]; slot < offsets[u + 1]; ++slot) {
                const double* g = lc.G.data() + slot * d;
                const double* m = lc.P2.data() + static_cast<std::size_t>(adjacency[slot]) * d;
                for (std::size_t k = 0; k < d; ++k) a[k] += inv * g[k] * m[k];
            }
        }
        lc.A_hat = norm_forward(p.node_norm, A, mode, model.identity_norm, lc.node_norm,
                                mode == NormMode::batch ? &c.batch_stats[2 * l] : nullptr);
        Mat H_next = H + apply_silu(lc.A_hat, lc.A_sig);

        lc.edge_updated = l + 1 < model.layers.size();
        Mat E_next;
        if (lc.edge_updated) {
            const Mat P4 = H * p.w_edge_src.transpose();
            const Mat P5 = H * p.w_edge_dst.transpose();
            Mat B = E * p.w_edge.transpose();
            for (std::size_t u = 0; u < n; ++u)
                for (std::size_t slot = offsets[u]; slot < offsets[u + 1]; ++slot) {
                    double* b = B.data() + slot * d;
                    const double* s = P4.data() + u * d;
                    const double* t = P5.data() + static_cast<std::size_t>(adjacency[slot]) * d;
                    for (std::size_t k = 0; k < d; ++k) b[k] += s[k] + t[k];
                }
            lc.B_hat = norm_forward(p.edge_norm, B, mode, model.identity_norm, lc.edge_norm,
                                    mode == NormMode::batch ? &c.batch_stats[2 * l + 1] : nullptr);
            E_next = E + apply_silu(lc.B_hat, lc.B_sig);
        }
        lc.H = std::move(H);
        lc.E = std::move(E);
        H = std::move(H_next);
        E = std::move(E_next);
    }

    c.H_final = H;
    c.Z = H * model.head_weight1.transpose();
    c.Z.rowwise() += model.head_bias1.row(0);
    c.Z_act = apply_silu(c.Z, c.Z_sig);
    Mat logits = c.Z_act * model.head_weight2.transpose();
    logits.rowwise() += model.head_bias2.row(0);
    c.Q_raw = sigmoid_of(logits);

    const std::size_t T = model.timespan;
    require(static_cast<std::size_t>(c.Q_raw.cols()) == 2 * T, ErrorCode::shape_mismatch,
            "proposal head width does not match 2T");
    ProposalProbs& probs = pass.probs_;
    probs.timespan = T;
    probs.num_nodes = n;
    probs.q_I.resize(T * n);
    probs.q_R.resize(T * n);
    for (std::size_t j = 0; j < T; ++j) {
        const std::size_t t = T - 1 - j;
        for (std::size_t u = 0; u < n; ++u) {
            probs.q_I[t * n + u] = std::clamp(c.Q_raw(u, 2 * j), kProbabilityFloor, 1.0 - kProbabilityFloor);
            probs.q_R[t * n + u] = std::clamp(c.Q_raw(u, 2 * j + 1), kProbabilityFloor, 1.0 - kProbabilityFloor);
        }
    }
    return pass;
}

void ProposalForward::backward(const ProposalModel& model, const Graph& graph, const std::vector<double>& d_q_I,
                               const std::vector<double>& d_q_R, ProposalModel& grads) const
{
    const ForwardCache& c = *cache_;
    const std::size_t n = graph.num_nodes();
    const std::size_t T = model.timespan;
    const std::size_t d = model.dim;
    require(d_q_I.size() == T * n && d_q_R.size() == T * n, ErrorCode::shape_mismatch,
            "probability gradient has the wrong shape");
    const auto& offsets = graph.offsets();
    const auto& adjacency = graph.adjacency();
    const std::size_t M = adjacency.size();

    auto dlogit = [&](double q, double dq) {
        // The probability floor clamps; no gradient flows through a clamped value.
        if (q < kProbabilityFloor || q > 1.0 - kProbabilityFloor) return 0.0;
        return dq * q * (1.0 - q);
    };
    Mat d_logits(n, 2 * T);
    for (std::size_t j = 0; j < T; ++j) {
        const std::size_t t = T - 1 - j;
        for (std::size_t u = 0; u < n; ++u) {
            d_logits(u, 2 * j) = dlogit(c.Q_raw(u, 2 * j), d_q_I[t * n + u]);
            d_logits(u, 2 * j + 1) = dlogit(c.Q_raw(u, 2 * j + 1), d_q_R[t * n + u]);
        }
    }

    grads.head_weight2 += d_logits.transpose() * c.Z_act;
    grads.head_bias2 += d_logits.colwise().sum();
    const Mat dZ = silu_backward(c.Z, c.Z_sig, d_logits * model.head_weight2);
    grads.head_weight1 += dZ.transpose() * c.H_final;
    grads.head_bias1 += dZ.colwise().sum();
    Mat dH = dZ * model.head_weight1;
    Mat dE = Mat::Zero(M, d);

    for (std::size_t l = model.layers.size(); l-- > 0;) {
        const GnnLayer& p = model.layers[l];
        GnnLayer& g = grads.layers[l];
        const LayerCache& lc = c.layers[l];
        Mat dH_in = dH;
        Mat dE_in = dE;

        if (lc.edge_updated) {
            const Mat dB = norm_backward(p.edge_norm, silu_backward(lc.B_hat, lc.B_sig, dE), lc.edge_norm, g.edge_norm);
            g.w_edge += dB.transpose() * lc.E;
            dE_in += dB * p.w_edge;
            Mat dP4 = Mat::Zero(n, d), dP5 = Mat::Zero(n, d);
            for (std::size_t u = 0; u < n; ++u)
                for (std::size_t slot = offsets[u]; slot < offsets[u + 1]; ++slot) {
                    const double* b = dB.data() + slot * d;
                    double* s = dP4.data() + u * d;
                    double* t = dP5.data() + static_cast<std::size_t>(adjacency[slot]) * d;
                    for (std::size_t k = 0; k < d; ++k) {
                        s[k] += b[k];
                        t[k] += b[k];
                    }
                }
            g.w_edge_src += dP4.transpose() * lc.H;
            g.w_edge_dst += dP5.transpose() * lc.H;
            dH_in += dP4 * p.w_edge_src + dP5 * p.w_edge_dst;
        }

        const Mat dA = norm_backward(p.node_norm, silu_backward(lc.A_hat, lc.A_sig, dH), lc.node_norm, g.node_norm);
        g.w_self += dA.transpose() * lc.H;
        dH_in += dA * p.w_self;

        Mat dP2 = Mat::Zero(n, d);
        for (std::size_t u = 0; u < n; ++u) {
            const std::size_t deg = offsets[u + 1] - offsets[u];
            if (deg == 0) continue;
            const double inv = 1.0 / static_cast<double>(deg);
            const double* da = dA.data() + u * d;
            for (std::size_t slot = offsets[u]; slot < offsets[u + 1]; ++slot) {
                const std::size_t v = adjacency[slot];
                const double* gate = lc.G.data() + slot * d;
                const double* msg = lc.P2.data() + v * d;
                double* dmsg = dP2.data() + v * d;
                double* de = dE_in.data() + slot * d;
                for (std::size_t k = 0; k < d; ++k) {
                    const double dm = inv * da[k];
                    dmsg[k] += dm * gate[k];
                    de[k] += dm * msg[k] * gate[k] * (1.0 - gate[k]);
                }
            }
        }
        g.w_message += dP2.transpose() * lc.H;
        dH_in += dP2 * p.w_message;

        dH = std::move(dH_in);
        dE = std::move(dE_in);
    }

    grads.input_weight += dH.transpose() * c.X;
    grads.input_bias += dH.colwise().sum();
    if (M > 0) grads.edge_input += dE.colwise().sum();
}

ProposalProbs forward_probs(const ProposalModel& model, const Graph& graph, const Snapshot& y_T)
{
    return forward_with_cache(model, graph, y_T, NormMode::running).probs();
}

void update_running_stats(ProposalModel& model, const ProposalForward& pass, std::size_t num_nodes,
                          std::size_t num_directed_edges)
{
    update_running_stats(model, pass.batch_stats(), num_nodes, num_directed_edges);
}

void update_running_stats(ProposalModel& model, const std::vector<std::pair<Mat, Mat>>& stats,
                          std::size_t num_nodes, std::size_t num_directed_edges)
{
    if (model.identity_norm) return;
    auto update = [](NormLayer& norm, const std::pair<Mat, Mat>& s, std::size_t rows) {
        if (s.first.size() == 0 || rows == 0) return;
        const double r = static_cast<double>(rows);
        const double correction = rows > 1 ? r / (r - 1.0) : 1.0;
        norm.running_mean = (1.0 - kNormMomentum) * norm.running_mean + kNormMomentum * s.first;
        norm.running_var = (1.0 - kNormMomentum) * norm.running_var + kNormMomentum * correction * s.second;
    };
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
        update(model.layers[l].node_norm, stats[2 * l], num_nodes);
        update(model.layers[l].edge_norm, stats[2 * l + 1], num_directed_edges);
    }
}

}  // namespace histrecon
