#include "histrecon/meanfield.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "histrecon/errors.hpp"

namespace histrecon {

PseudoRow init_pseudo(std::size_t n, double n0_I)
{
    require(n > 0, ErrorCode::invalid_argument, "mean-field initialisation needs n > 0");
    require(n0_I >= 0.0 && n0_I <= static_cast<double>(n), ErrorCode::invalid_argument, "n0_I must lie in [0, n]");
    const double p = n0_I / static_cast<double>(n);
    return PseudoRow(n, {1.0 - p, p, 0.0});
}

PseudoRow step_pseudo(const Graph& graph, const DiffusionParams& params, const PseudoRow& row)
{
    const std::size_t n = graph.num_nodes();
    require(row.size() == n, ErrorCode::shape_mismatch, "pseudo row length differs from node count");
    PseudoRow next(n);
    for (NodeId u = 0; u < n; ++u) {
        double escape = 1.0;
        for (NodeId v : graph.neighbors(u)) escape *= 1.0 - row[v][1] * params.beta_I;
        const auto [fS, fI, fR] = row[u];
        const double infected = fI + fS * (1.0 - escape);
        next[u] = {fS * escape, infected * (1.0 - params.beta_R), fR + infected * params.beta_R};
    }
    return next;
}

std::vector<PseudoRow> pseudo_table(const Graph& graph, const DiffusionParams& params, std::size_t timespan,
                                    double n0_I)
{
    std::vector<PseudoRow> rows;
    rows.reserve(timespan + 1);
    rows.push_back(init_pseudo(graph.num_nodes(), n0_I));
    for (std::size_t t = 0; t < timespan; ++t) rows.push_back(step_pseudo(graph, params, rows.back()));
    return rows;
}

double pseudo_loglik(const Graph& graph, const DiffusionParams& params, const Snapshot& y_T, std::size_t timespan,
                     double n0_I)
{
    require(y_T.size() == graph.num_nodes(), ErrorCode::shape_mismatch, "snapshot length differs from node count");
    PseudoRow row = init_pseudo(graph.num_nodes(), n0_I);
    for (std::size_t t = 0; t < timespan; ++t) row = step_pseudo(graph, params, row);
    double total = 0.0;
    for (std::size_t u = 0; u < y_T.size(); ++u) {
        const double f = row[u][static_cast<int>(y_T[u])];
        if (!(f > 0.0)) return kNegInf;
        total += std::log(f);
    }
    return total;
}

namespace {

// Value plus tangents along beta_I and beta_R.
struct Dual {
    double v = 0.0;
    double dI = 0.0;
    double dR = 0.0;
};

}  // namespace

PseudoLoglikGrad pseudo_loglik_and_grad(const Graph& graph, const DiffusionParams& params, const Snapshot& y_T,
                                        std::size_t timespan, double n0_I, MeanFieldCounters* counters)
{
    const std::size_t n = graph.num_nodes();
    require(y_T.size() == n, ErrorCode::shape_mismatch, "snapshot length differs from node count");
    const double bI = params.beta_I;
    const double bR = params.beta_R;

    const PseudoRow init = init_pseudo(n, n0_I);
    std::vector<std::array<Dual, 3>> row(n), next(n);
    for (std::size_t u = 0; u < n; ++u)
        for (int x = 0; x < 3; ++x) row[u][x].v = init[u][x];

    std::uint64_t evaluations = 0;
    for (std::size_t t = 0; t < timespan; ++t) {
        for (NodeId u = 0; u < n; ++u) {
            // P = prod_v (1 - fI_v * bI); dP = P * sum_v da_v / a_v.
            double product = 1.0, log_dI = 0.0, log_dR = 0.0;
            for (NodeId v : graph.neighbors(u)) {
                const Dual& fIv = row[v][1];
                const double a = 1.0 - fIv.v * bI;
                product *= a;
                log_dI += -(fIv.dI * bI + fIv.v) / a;
                log_dR += -(fIv.dR * bI) / a;
            }
            evaluations += graph.degree(u) + 1;
            const Dual P{product, product * log_dI, product * log_dR};
            const Dual& fS = row[u][0];
            const Dual& fI = row[u][1];
            const Dual& fR = row[u][2];
            const Dual infected{fI.v + fS.v * (1.0 - P.v), fI.dI + fS.dI * (1.0 - P.v) - fS.v * P.dI,
                                fI.dR + fS.dR * (1.0 - P.v) - fS.v * P.dR};
            next[u][0] = {fS.v * P.v, fS.dI * P.v + fS.v * P.dI, fS.dR * P.v + fS.v * P.dR};
            next[u][1] = {infected.v * (1.0 - bR), infected.dI * (1.0 - bR), infected.dR * (1.0 - bR) - infected.v};
            next[u][2] = {fR.v + infected.v * bR, fR.dI + infected.dI * bR, fR.dR + infected.dR * bR + infected.v};
        }
        row.swap(next);
    }
    if (counters) counters->factor_evaluations += evaluations;

    PseudoLoglikGrad out;
    for (std::size_t u = 0; u < n; ++u) {
        const Dual& f = row[u][static_cast<int>(y_T[u])];
        if (!(f.v > 0.0)) return {kNegInf, 0.0, 0.0};
        out.value += std::log(f.v);
        out.d_beta_I += f.dI / f.v;
        out.d_beta_R += f.dR / f.v;
    }
    return out;
}

std::array<double, 2> grad_pseudo_loglik(const Graph& graph, const DiffusionParams& params, const Snapshot& y_T,
                                         std::size_t timespan, double n0_I)
{
    const auto g = pseudo_loglik_and_grad(graph, params, y_T, timespan, n0_I);
    require(std::isfinite(g.value), ErrorCode::numeric, "pseudo-loglikelihood is not finite at the given rates");
    return {g.d_beta_I, g.d_beta_R};
}

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

struct RateMap {
    double eps;
    double to_rate(double z) const { return eps + (1.0 - 2.0 * eps) * sigmoid(z); }
    double to_logit(double rate) const
    {
        const double s = (rate - eps) / (1.0 - 2.0 * eps);
        return std::log(s / (1.0 - s));
    }
    double slope(double z) const
    {
        const double s = sigmoid(z);
        return (1.0 - 2.0 * eps) * s * (1.0 - s);
    }
};

}  // namespace

DiffusionParams estimate_params(const Graph& graph, const Snapshot& y_T, std::size_t timespan, double n0_I,
                                const EstimatorConfig& config, EstimationTrace* trace)
{
    require(timespan >= 1, ErrorCode::invalid_argument, "timespan must be >= 1");
    require(config.iterations >= 1, ErrorCode::invalid_argument, "iterations must be >= 1");
    require(config.epsilon > 0.0 && config.epsilon < 0.5, ErrorCode::invalid_argument, "epsilon must lie in (0, 0.5)");
    require(config.learning_rate > 0.0, ErrorCode::invalid_argument, "learning rate must be positive");
    const double n = static_cast<double>(graph.num_nodes());
    const RateMap map{config.epsilon};
    MeanFieldCounters counters;

    auto rates = [&](const std::array<double, 2>& z) {
        return DiffusionParams{map.to_rate(z[0]), config.si_model ? 0.0 : map.to_rate(z[1])};
    };
    auto evaluate = [&](const std::array<double, 2>& z) {
        return pseudo_loglik_and_grad(graph, rates(z), y_T, timespan, n0_I, &counters);
    };

    auto clamp_rate = [&](double r) { return std::clamp(r, 2.0 * config.epsilon, 1.0 - 2.0 * config.epsilon); };
    std::array<double, 2> z{map.to_logit(clamp_rate(config.initial.beta_I)),
                            map.to_logit(clamp_rate(config.si_model ? 0.5 : config.initial.beta_R))};
    PseudoLoglikGrad current = evaluate(z);
    if (!std::isfinite(current.value)) {
        // Probe a fixed interior grid for a finite starting point.
        double best = kNegInf;
        for (int i = 1; i <= 9; ++i)
            for (int j = 1; j <= (config.si_model ? 1 : 9); ++j) {
                std::array<double, 2> probe{map.to_logit(0.1 * i), map.to_logit(0.1 * j)};
                auto g = evaluate(probe);
                if (g.value > best) {
                    best = g.value;
                    z = probe;
                    current = g;
                }
            }
        require(std::isfinite(current.value), ErrorCode::estimation_impossible,
                "mean-field objective is -inf at every probed rate; snapshot unreachable from n0_I=" +
                    std::to_string(n0_I));
    }

    // AdamW on the mean negative log-pseudolikelihood in logit space.
    constexpr double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;
    std::array<double, 2> m{0.0, 0.0}, v{0.0, 0.0};
    const int dims = config.si_model ? 1 : 2;
    std::size_t iter = 0;
    bool converged = false;
    for (; iter < config.iterations; ++iter) {
        const std::array<double, 2> grad{-current.d_beta_I * map.slope(z[0]) / n,
                                         config.si_model ? 0.0 : -current.d_beta_R * map.slope(z[1]) / n};
        if (std::hypot(grad[0], grad[1]) < config.gradient_tolerance) {
            converged = true;
            break;
        }
        std::array<double, 2> step{0.0, 0.0};
        const double t = static_cast<double>(iter + 1);
        for (int k = 0; k < dims; ++k) {
            m[k] = beta1 * m[k] + (1.0 - beta1) * grad[k];
            v[k] = beta2 * v[k] + (1.0 - beta2) * grad[k] * grad[k];
            const double m_hat = m[k] / (1.0 - std::pow(beta1, t));
            const double v_hat = v[k] / (1.0 - std::pow(beta2, t));
            step[k] = -config.learning_rate * m_hat / (std::sqrt(v_hat) + adam_eps);
        }
        // Step-halving keeps the objective monotone.
        for (int halving = 0; halving < 30; ++halving) {
            std::array<double, 2> candidate{z[0] + step[0], z[1] + step[1]};
            auto g = evaluate(candidate);
            if (g.value >= current.value) {
                z = candidate;
                current = g;
                break;
            }
            step[0] *= 0.5;
            step[1] *= 0.5;
        }
        if (trace) trace->objective.push_back(current.value / n);
    }
    if (trace) {
        trace->iterations_run = iter;
        trace->converged = converged;
        trace->counters = counters;
    }
    return rates(z);
}

}  // namespace histrecon
