#include "histrecon/io.hpp"

#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "histrecon/errors.hpp"

namespace histrecon {

namespace {

std::vector<std::string_view> lines_of(std::string_view text)
{
    std::vector<std::string_view> lines;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(pos, end - pos);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        lines.push_back(line);
        pos = end + 1;
    }
    return lines;
}

std::vector<std::string_view> tokens_of(std::string_view line)
{
    std::vector<std::string_view> tokens;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
        std::size_t j = i;
        while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
        if (j > i) tokens.push_back(line.substr(i, j - i));
        i = j;
    }
    return tokens;
}

bool skippable(std::string_view line)
{
    auto t = tokens_of(line);
    return t.empty() || t[0].front() == '#';
}

std::uint64_t parse_index(std::string_view token, const std::string& where)
{
    std::uint64_t value = 0;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    require(ec == std::errc() && ptr == token.data() + token.size(), ErrorCode::parse,
            where + ": expected a non-negative integer, got \"" + std::string(token) + "\"");
    return value;
}

std::string at_line(std::size_t i) { return "line " + std::to_string(i + 1); }

}  // namespace

std::string format_double(double value)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    std::string s(buf);
    if (std::isfinite(value) && s.find_first_of(".eE") == std::string::npos) s += ".0";
    return s;
}

double parse_double(std::string_view token, const std::string& where)
{
    std::string copy(token);
    char* end = nullptr;
    errno = 0;
    const double value = std::strtod(copy.c_str(), &end);
    require(!copy.empty() && end == copy.c_str() + copy.size() && errno != ERANGE, ErrorCode::parse,
            where + ": expected a number, got \"" + copy + "\"");
    return value;
}

std::string read_text_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    require(static_cast<bool>(in), ErrorCode::io, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text)
{
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    require(static_cast<bool>(out), ErrorCode::io, "cannot write " + path.string());
    out << text;
    require(static_cast<bool>(out), ErrorCode::io, "write failed for " + path.string());
}

Graph read_graph(const std::filesystem::path& path)
{
    return parse_edge_list(read_text_file(path));
}

void write_graph(const std::filesystem::path& path, const Graph& graph)
{
    write_text_file(path, serialize_edge_list(graph));
}

std::string serialize_id_map(const Graph& graph)
{
    std::ostringstream out;
    out << "# dense_id external_id\n";
    for (NodeId u = 0; u < graph.num_nodes(); ++u) out << u << ' ' << graph.external_id(u) << '\n';
    return out.str();
}

Snapshot parse_snapshot(std::string_view text, std::size_t num_nodes)
{
    Snapshot snapshot(num_nodes, State::S);
    std::vector<char> seen(num_nodes, 0);
    const auto lines = lines_of(text);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (skippable(lines[i])) continue;
        const auto t = tokens_of(lines[i]);
        require(t.size() == 2 && t[1].size() == 1, ErrorCode::parse, at_line(i) + ": expected \"node_id state\"");
        const auto u = parse_index(t[0], at_line(i));
        require(u < num_nodes, ErrorCode::parse, at_line(i) + ": node id out of range");
        require(!seen[u], ErrorCode::parse, at_line(i) + ": node " + std::to_string(u) + " listed twice");
        seen[u] = 1;
        snapshot[u] = state_from_char(t[1][0]);
    }
    for (std::size_t u = 0; u < num_nodes; ++u)
        require(seen[u], ErrorCode::parse, "snapshot is missing node " + std::to_string(u));
    return snapshot;
}

std::string serialize_snapshot(const Snapshot& snapshot)
{
    std::string out;
    for (std::size_t u = 0; u < snapshot.size(); ++u) {
        out += std::to_string(u);
        out += ' ';
        out += state_char(snapshot[u]);
        out += '\n';
    }
    return out;
}

History parse_history(std::string_view text)
{
    std::vector<std::string_view> rows;
    for (auto line : lines_of(text))
        if (!line.empty()) rows.push_back(line);
    require(rows.size() >= 2, ErrorCode::parse, "history needs at least two rows (T >= 1)");
    const std::size_t n = rows[0].size();
    History history(rows.size() - 1, n);
    for (std::size_t t = 0; t < rows.size(); ++t) {
        require(rows[t].size() == n, ErrorCode::parse, "history row " + std::to_string(t) + " has length " +
                                                           std::to_string(rows[t].size()) + ", expected " +
                                                           std::to_string(n));
        for (std::size_t u = 0; u < n; ++u) history.at(t, static_cast<NodeId>(u)) = state_from_char(rows[t][u]);
    }
    return history;
}

std::string serialize_history(const History& history)
{
    std::string out;
    out.reserve((history.timespan() + 1) * (history.num_nodes() + 1));
    for (std::size_t t = 0; t <= history.timespan(); ++t) {
        for (State s : history.row(t)) out += state_char(s);
        out += '\n';
    }
    return out;
}

HittingTimes parse_hitting_times(std::string_view text, std::size_t num_nodes)
{
    HittingTimes hits{std::vector<std::uint32_t>(num_nodes, 0), std::vector<std::uint32_t>(num_nodes, 0)};
    std::vector<char> seen(num_nodes, 0);
    const auto lines = lines_of(text);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (skippable(lines[i])) continue;
        const auto t = tokens_of(lines[i]);
        require(t.size() == 3, ErrorCode::parse, at_line(i) + ": expected \"node_id h_I h_R\"");
        const auto u = parse_index(t[0], at_line(i));
        require(u < num_nodes && !seen[u], ErrorCode::parse, at_line(i) + ": bad or repeated node id");
        seen[u] = 1;
        hits.h_I[u] = static_cast<std::uint32_t>(parse_index(t[1], at_line(i)));
        hits.h_R[u] = static_cast<std::uint32_t>(parse_index(t[2], at_line(i)));
    }
    for (std::size_t u = 0; u < num_nodes; ++u)
        require(seen[u], ErrorCode::parse, "hitting-times file is missing node " + std::to_string(u));
    return hits;
}

std::string serialize_hitting_times(const HittingTimes& hits)
{
    std::ostringstream out;
    for (std::size_t u = 0; u < hits.h_I.size(); ++u) out << u << ' ' << hits.h_I[u] << ' ' << hits.h_R[u] << '\n';
    return out.str();
}

DiffusionParams parse_params(std::string_view text)
{
    DiffusionParams params;
    bool have_I = false, have_R = false;
    const auto lines = lines_of(text);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (skippable(lines[i])) continue;
        const auto t = tokens_of(lines[i]);
        require(t.size() == 2, ErrorCode::parse, at_line(i) + ": expected \"key value\"");
        if (t[0] == "beta_I") {
            params.beta_I = parse_double(t[1], at_line(i));
            have_I = true;
        } else if (t[0] == "beta_R") {
            params.beta_R = parse_double(t[1], at_line(i));
            have_R = true;
        } else {
            fail(ErrorCode::parse, at_line(i) + ": unknown key \"" + std::string(t[0]) + "\"");
        }
    }
    require(have_I && have_R, ErrorCode::parse, "params file needs both beta_I and beta_R");
    require(params.beta_I > 0.0 && params.beta_I < 1.0, ErrorCode::parse, "beta_I must lie in (0,1)");
    require(params.beta_R >= 0.0 && params.beta_R < 1.0, ErrorCode::parse, "beta_R must lie in [0,1)");
    return params;
}

std::string serialize_params(const DiffusionParams& params)
{
    return "beta_I " + format_double(params.beta_I) + "\nbeta_R " + format_double(params.beta_R) + "\n";
}

HittingEstimate parse_hitting_estimate(std::string_view text, std::size_t num_nodes)
{
    HittingEstimate est;
    est.h_I.assign(num_nodes, 0.0);
    est.h_R.assign(num_nodes, 0.0);
    std::vector<char> seen(num_nodes, 0);
    const auto lines = lines_of(text);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (skippable(lines[i])) continue;
        const auto t = tokens_of(lines[i]);
        require(t.size() == 3, ErrorCode::parse, at_line(i) + ": expected \"node h_I h_R\"");
        const auto u = parse_index(t[0], at_line(i));
        require(u < num_nodes && !seen[u], ErrorCode::parse, at_line(i) + ": bad or repeated node id");
        seen[u] = 1;
        est.h_I[u] = parse_double(t[1], at_line(i));
        est.h_R[u] = parse_double(t[2], at_line(i));
    }
    for (std::size_t u = 0; u < num_nodes; ++u)
        require(seen[u], ErrorCode::parse, "hitting-estimate file is missing node " + std::to_string(u));
    return est;
}

std::string serialize_hitting_estimate(const HittingEstimate& estimate)
{
    std::string out;
    for (std::size_t u = 0; u < estimate.h_I.size(); ++u)
        out += std::to_string(u) + ' ' + format_double(estimate.h_I[u]) + ' ' + format_double(estimate.h_R[u]) + '\n';
    return out;
}

std::string serialize_diagnostics(const McmcDiagnostics& diagnostics)
{
    std::string out;
    out += "proposals=" + std::to_string(diagnostics.proposals) + '\n';
    out += "accepted=" + std::to_string(diagnostics.accepted) + '\n';
    out += "invalid_proposals=" + std::to_string(diagnostics.invalid_proposals) + '\n';
    out += "acceptance_rate=" + format_double(diagnostics.overall_acceptance()) + '\n';
    for (std::size_t s = 0; s < diagnostics.acceptance_rate.size(); ++s)
        out += "step " + std::to_string(s + 1) + " acceptance_rate=" + format_double(diagnostics.acceptance_rate[s]) +
               '\n';
    return out;
}

std::string serialize_oracle_report(const OracleResult& result)
{
    std::string out;
    out += "histories=" + std::to_string(result.histories.size()) + '\n';
    out += "log_snapshot_prob=" + format_double(result.log_snapshot_prob) + '\n';
    out += "# node expected_h_I expected_h_R\n";
    for (std::size_t u = 0; u < result.expected_h_I.size(); ++u)
        out += std::to_string(u) + ' ' + format_double(result.expected_h_I[u]) + ' ' +
               format_double(result.expected_h_R[u]) + '\n';
    return out;
}

std::string serialize_oracle_csv(const OracleResult& result)
{
    std::string out = "index,log_weight";
    const std::size_t n = result.expected_h_I.size();
    for (std::size_t u = 0; u < n; ++u) out += ",h_I_" + std::to_string(u) + ",h_R_" + std::to_string(u);
    out += '\n';
    for (std::size_t i = 0; i < result.histories.size(); ++i) {
        const auto& e = result.histories[i];
        out += std::to_string(i) + ',' + format_double(e.log_weight);
        for (std::size_t u = 0; u < n; ++u) out += ',' + std::to_string(e.h_I[u]) + ',' + std::to_string(e.h_R[u]);
        out += '\n';
    }
    return out;
}

std::string serialize_metrics(const MetricReport& report)
{
    std::string out = "macro_f1=" + format_double(report.macro_f1) + " nrmse=" + format_double(report.nrmse);
    if (report.gap_f1) out += " gap_f1=" + format_double(*report.gap_f1);
    if (report.gap_nrmse) out += " gap_nrmse=" + format_double(*report.gap_nrmse);
    return out + '\n';
}

namespace {
constexpr std::string_view kCheckpointMagic = "histrecon-proposal-checkpoint";
constexpr int kCheckpointVersion = 1;
}  // namespace

std::string serialize_model(const ProposalModel& model)
{
    std::string out;
    out += std::string(kCheckpointMagic) + ' ' + std::to_string(kCheckpointVersion) + '\n';
    out += "timespan " + std::to_string(model.timespan) + '\n';
    out += "dim " + std::to_string(model.dim) + '\n';
    out += "hidden " + std::to_string(model.hidden) + '\n';
    out += "layers " + std::to_string(model.num_layers()) + '\n';
    out += "identity_norm " + std::to_string(model.identity_norm ? 1 : 0) + '\n';
    char buf[64];
    model.for_each_tensor([&](const std::string& name, const Mat& t) {
        out += "tensor " + name + ' ' + std::to_string(t.rows()) + ' ' + std::to_string(t.cols()) + '\n';
        for (Eigen::Index r = 0; r < t.rows(); ++r) {
            for (Eigen::Index c = 0; c < t.cols(); ++c) {
                std::snprintf(buf, sizeof buf, "%a", t(r, c));
                if (c) out += ' ';
                out += buf;
            }
            out += '\n';
        }
    });
    out += "end\n";
    return out;
}

ProposalModel parse_model(std::string_view text)
{
    const auto lines = lines_of(text);
    std::size_t i = 0;
    auto next_tokens = [&](const char* what) {
        require(i < lines.size(), ErrorCode::parse, std::string("checkpoint truncated before ") + what);
        return tokens_of(lines[i++]);
    };
    auto header = next_tokens("header");
    require(header.size() == 2 && header[0] == kCheckpointMagic, ErrorCode::parse, "not a proposal checkpoint");
    require(parse_index(header[1], "header") == kCheckpointVersion, ErrorCode::parse,
            "unsupported checkpoint version " + std::string(header[1]));
    auto field = [&](std::string_view key) {
        auto t = next_tokens("header field");
        require(t.size() == 2 && t[0] == key, ErrorCode::parse,
                at_line(i - 1) + ": expected \"" + std::string(key) + " <value>\"");
        return parse_index(t[1], at_line(i - 1));
    };
    ProposalShape shape;
    shape.timespan = field("timespan");
    shape.dim = field("dim");
    shape.hidden = field("hidden");
    shape.layers = field("layers");
    shape.identity_norm = field("identity_norm") != 0;
    ProposalModel model = zero_proposal(shape);
    model.for_each_tensor([&](const std::string& name, Mat& t) {
        auto head = next_tokens("tensor");
        require(head.size() == 4 && head[0] == "tensor" && head[1] == name, ErrorCode::parse,
                at_line(i - 1) + ": expected tensor " + name);
        require(parse_index(head[2], at_line(i - 1)) == static_cast<std::uint64_t>(t.rows()) &&
                    parse_index(head[3], at_line(i - 1)) == static_cast<std::uint64_t>(t.cols()),
                ErrorCode::parse, at_line(i - 1) + ": tensor " + name + " has unexpected shape");
        for (Eigen::Index r = 0; r < t.rows(); ++r) {
            auto values = next_tokens("tensor row");
            require(values.size() == static_cast<std::size_t>(t.cols()), ErrorCode::parse,
                    at_line(i - 1) + ": wrong number of values in " + name);
            for (Eigen::Index c = 0; c < t.cols(); ++c) t(r, c) = parse_double(values[c], at_line(i - 1));
        }
    });
    auto tail = next_tokens("end marker");
    require(tail.size() == 1 && tail[0] == "end", ErrorCode::parse, "checkpoint missing end marker");
    return model;
}

void require_si_compatible(std::span<const State> states, const std::string& what)
{
    for (State s : states)
        require(s != State::R, ErrorCode::invalid_argument, what + " contains R states, not allowed under the SI model");
}

}  // namespace histrecon
