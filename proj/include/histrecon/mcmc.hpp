#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "histrecon/diffusion.hpp"
#include "histrecon/graph.hpp"
#include "histrecon/proposal.hpp"

namespace histrecon {

struct ChainState {
    SampledHistory current;
    HittingTimes hits;
    double log_target = 0.0;  // log P_beta[Y] with the unnormalised prior
    std::size_t accepted = 0;
    std::size_t steps = 0;
};

ChainState make_chain(SampledHistory initial, const Graph& graph, const DiffusionParams& params,
                      const PriorSpec& prior);

/// min{1, exp((log P~ - log P) + (log Q(cur) - log Q(prop)))}; zero when the
/// proposal has -inf target.
double mh_accept_probability(double log_target_proposed, double log_target_current, double log_q_proposed,
                             double log_q_current);

enum class StepOutcome { accepted, rejected, rejected_invalid };

/// Independence-sampler M-H update. `uniform` is the xi ~ U[0,1) draw.
StepOutcome mh_step(ChainState& chain, SampledHistory proposal, const DiffusionParams& params,
                    const PriorSpec& prior, const Graph& graph, double uniform);
/// Same, drawing xi from `rng`.
StepOutcome mh_step(ChainState& chain, SampledHistory proposal, const DiffusionParams& params,
                    const PriorSpec& prior, const Graph& graph, Rng& rng);

struct McmcConfig {
    std::size_t steps = 10;    // S
    std::size_t chains = 100;  // L
    double eta = 0.5;
    /// Plain averaging over steps s > burn_in instead of the moving average.
    bool plain_average = false;
    std::size_t burn_in = 0;
    std::size_t threads = 1;
};

struct HittingEstimate {
    std::vector<double> h_I;
    std::vector<double> h_R;
    double eta = 0.5;
};

struct McmcDiagnostics {
    std::vector<double> acceptance_rate;  // per step s = 1..S
    std::size_t accepted = 0;
    std::size_t proposals = 0;
    std::size_t invalid_proposals = 0;

    double overall_acceptance() const
    {
        return proposals ? static_cast<double>(accepted) / static_cast<double>(proposals) : 0.0;
    }
};

struct ReconstructionRun {
    HittingEstimate estimate;
    McmcDiagnostics diagnostics;
};

/// Runs L independence-sampler chains for S steps; chain i draws only from
/// Rng(seed, stream_id(streams::mcmc, i)).
ReconstructionRun run_reconstruction(const Graph& graph, const Snapshot& y_T, const DiffusionParams& params,
                                     const PriorSpec& prior, const ProposalModel& model, const McmcConfig& config,
                                     std::uint64_t seed);

/// Same with precomputed proposal probabilities.
ReconstructionRun run_reconstruction(const Graph& graph, const Snapshot& y_T, const DiffusionParams& params,
                                     const PriorSpec& prior, const ProposalProbs& probs, const McmcConfig& config,
                                     std::uint64_t seed);

/// Rounded hitting times (half-up, h_R raised to h_I on inversion).
HittingTimes round_hitting_times(const HittingEstimate& estimate, std::size_t timespan);
History reconstruct(const HittingEstimate& estimate, std::size_t timespan);

}  // namespace histrecon
