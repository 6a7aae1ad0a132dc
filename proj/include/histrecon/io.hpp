#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>

#include "histrecon/diffusion.hpp"
#include "histrecon/evaluation.hpp"
#include "histrecon/graph.hpp"
#include "histrecon/mcmc.hpp"
#include "histrecon/proposal.hpp"

namespace histrecon {

/// 17 significant digits; integral values keep a trailing ".0".
std::string format_double(double value);
double parse_double(std::string_view token, const std::string& where);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

Graph read_graph(const std::filesystem::path& path);
void write_graph(const std::filesystem::path& path, const Graph& graph);
std::string serialize_id_map(const Graph& graph);

/// "node_id state_char" lines; every node must appear exactly once.
Snapshot parse_snapshot(std::string_view text, std::size_t num_nodes);
std::string serialize_snapshot(const Snapshot& snapshot);

/// T+1 lines, each n characters from {S,I,R}.
History parse_history(std::string_view text);
std::string serialize_history(const History& history);

/// "node_id h_I h_R" lines.
HittingTimes parse_hitting_times(std::string_view text, std::size_t num_nodes);
std::string serialize_hitting_times(const HittingTimes& hits);

/// "beta_I <value>" and "beta_R <value>".
DiffusionParams parse_params(std::string_view text);
std::string serialize_params(const DiffusionParams& params);

/// "node h_I h_R" with real-valued means.
HittingEstimate parse_hitting_estimate(std::string_view text, std::size_t num_nodes);
std::string serialize_hitting_estimate(const HittingEstimate& estimate);

std::string serialize_diagnostics(const McmcDiagnostics& diagnostics);
std::string serialize_oracle_report(const OracleResult& result);
std::string serialize_oracle_csv(const OracleResult& result);
std::string serialize_metrics(const MetricReport& report);

/// Versioned text checkpoint; tensors written as hex floats (bit-exact).
std::string serialize_model(const ProposalModel& model);
ProposalModel parse_model(std::string_view text);

/// SI-model boundary check: rejects any R state.
void require_si_compatible(std::span<const State> states, const std::string& what);

}  // namespace histrecon
