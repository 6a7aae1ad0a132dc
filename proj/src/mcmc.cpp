#include "histrecon/mcmc.hpp"

#include <algorithm>
#include <cmath>

#include "histrecon/errors.hpp"
#include "histrecon/parallel.hpp"

namespace histrecon {

ChainState make_chain(SampledHistory initial, const Graph& graph, const DiffusionParams& params,
                      const PriorSpec& prior)
{
    ChainState chain;
    chain.log_target = log_history_prob(graph, params, initial.history, prior);
    require(std::isfinite(chain.log_target) && std::isfinite(initial.log_q), ErrorCode::numeric,
            "initial chain history has zero probability under the target or the proposal");
    chain.hits = hitting_times(initial.history);
    chain.current = std::move(initial);
    return chain;
}

double mh_accept_probability(double log_target_proposed, double log_target_current, double log_q_proposed,
                             double log_q_current)
{
    if (log_target_proposed == kNegInf) return 0.0;
    const double log_ratio = (log_target_proposed - log_target_current) + (log_q_current - log_q_proposed);
    return log_ratio >= 0.0 ? 1.0 : std::exp(log_ratio);
}

StepOutcome mh_step(ChainState& chain, SampledHistory proposal, const DiffusionParams& params,
                    const PriorSpec& prior, const Graph& graph, double uniform)
{
    ++chain.steps;
    if (!std::isfinite(proposal.log_q)) return StepOutcome::rejected_invalid;
    const double log_target = log_history_prob(graph, params, proposal.history, prior);
    if (log_target == kNegInf) return StepOutcome::rejected;
    const double log_ratio = (log_target - chain.log_target) + (chain.current.log_q - proposal.log_q);
    // xi < ratio, compared in log space (log 0 = -inf never accepts).
    if (!(std::log(uniform) < log_ratio)) return StepOutcome::rejected;
    chain.hits = hitting_times(proposal.history);
    chain.current = std::move(proposal);
    chain.log_target = log_target;
    ++chain.accepted;
    return StepOutcome::accepted;
}

StepOutcome mh_step(ChainState& chain, SampledHistory proposal, const DiffusionParams& params,
                    const PriorSpec& prior, const Graph& graph, Rng& rng)
{
    return mh_step(chain, std::move(proposal), params, prior, graph, rng.uniform());
}

ReconstructionRun run_reconstruction(const Graph& graph, const Snapshot& y_T, const DiffusionParams& params,
                                     const PriorSpec& prior, const ProposalModel& model, const McmcConfig& config,
                                     std::uint64_t seed)
{
    require(model.timespan >= 1, ErrorCode::invalid_argument, "proposal model has no timespan");
    return run_reconstruction(graph, y_T, params, prior, forward_probs(model, graph, y_T), config, seed);
}

ReconstructionRun run_reconstruction(const Graph& graph, const Snapshot& y_T, const DiffusionParams& params,
                                     const PriorSpec& prior, const ProposalProbs& probs, const McmcConfig& config,
                                     std::uint64_t seed)
{
    require(config.steps >= 1, ErrorCode::invalid_argument, "MCMC steps S must be >= 1");
    require(config.chains >= 1, ErrorCode::invalid_argument, "MCMC chains L must be >= 1");
    require(config.eta >= 0.0 && config.eta < 1.0, ErrorCode::invalid_argument, "eta must lie in [0, 1)");
    const std::size_t n = graph.num_nodes();
    const std::size_t L = config.chains;

    std::vector<Rng> rngs;
    rngs.reserve(L);
    for (std::size_t i = 0; i < L; ++i) rngs.emplace_back(seed, stream_id(streams::mcmc, i));

    std::vector<ChainState> chains(L);
    parallel_for(L, config.threads, [&](std::size_t i) {
        chains[i] = make_chain(sample_history(probs, graph, y_T, rngs[i]), graph, params, prior);
    });

    // Reductions run in chain order so results do not depend on threading.
    auto batch_mean = [&](std::vector<double>& h_I, std::vector<double>& h_R) {
        h_I.assign(n, 0.0);
        h_R.assign(n, 0.0);
        for (const ChainState& c : chains)
            for (std::size_t u = 0; u < n; ++u) {
                h_I[u] += c.hits.h_I[u];
                h_R[u] += c.hits.h_R[u];
            }
        for (std::size_t u = 0; u < n; ++u) {
            h_I[u] /= static_cast<double>(L);
            h_R[u] /= static_cast<double>(L);
        }
    };

    ReconstructionRun run;
    run.estimate.eta = config.eta;
    batch_mean(run.estimate.h_I, run.estimate.h_R);

    std::vector<double> sum_I(n, 0.0), sum_R(n, 0.0), mean_I, mean_R;
    std::size_t averaged_steps = 0;
    std::vector<StepOutcome> outcomes(L);
    for (std::size_t s = 1; s <= config.steps; ++s) {
        parallel_for(L, config.threads, [&](std::size_t i) {
            SampledHistory proposal = sample_history(probs, graph, y_T, rngs[i]);
            outcomes[i] = mh_step(chains[i], std::move(proposal), params, prior, graph, rngs[i]);
        });
        std::size_t accepted = 0;
        for (StepOutcome o : outcomes) {
            accepted += o == StepOutcome::accepted;
            run.diagnostics.invalid_proposals += o == StepOutcome::rejected_invalid;
        }
        run.diagnostics.accepted += accepted;
        run.diagnostics.proposals += L;
        run.diagnostics.acceptance_rate.push_back(static_cast<double>(accepted) / static_cast<double>(L));

        batch_mean(mean_I, mean_R);
        if (config.plain_average) {
            if (s > config.burn_in) {
                for (std::size_t u = 0; u < n; ++u) {
                    sum_I[u] += mean_I[u];
                    sum_R[u] += mean_R[u];
                }
                ++averaged_steps;
            }
        } else {
            for (std::size_t u = 0; u < n; ++u) {
                run.estimate.h_I[u] = config.eta * run.estimate.h_I[u] + (1.0 - config.eta) * mean_I[u];
                run.estimate.h_R[u] = config.eta * run.estimate.h_R[u] + (1.0 - config.eta) * mean_R[u];
            }
        }
    }
    if (config.plain_average && averaged_steps > 0) {
        for (std::size_t u = 0; u < n; ++u) {
            run.estimate.h_I[u] = sum_I[u] / static_cast<double>(averaged_steps);
            run.estimate.h_R[u] = sum_R[u] / static_cast<double>(averaged_steps);
        }
    }
    return run;
}

HittingTimes round_hitting_times(const HittingEstimate& estimate, std::size_t timespan)
{
    require(estimate.h_I.size() == estimate.h_R.size(), ErrorCode::shape_mismatch, "h_I and h_R lengths differ");
    const double cap = static_cast<double>(timespan + 1);
    auto round_half_up = [&](double x) {
        return static_cast<std::uint32_t>(std::clamp(std::floor(x + 0.5), 0.0, cap));
    };
    HittingTimes hits;
    hits.h_I.resize(estimate.h_I.size());
    hits.h_R.resize(estimate.h_R.size());
    for (std::size_t u = 0; u < estimate.h_I.size(); ++u) {
        hits.h_I[u] = round_half_up(estimate.h_I[u]);
        hits.h_R[u] = std::max(hits.h_I[u], round_half_up(estimate.h_R[u]));
    }
    return hits;
}

History reconstruct(const HittingEstimate& estimate, std::size_t timespan)
{
    return history_from_hitting_times(round_hitting_times(estimate, timespan), timespan);
}

}  // namespace histrecon
