#pragma once

#include <istream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace bfmx {

// All electrical quantities are per-unit on the system MVA base.
// Voltage bounds are stored squared so they bound v = |V|^2 directly.

struct Bus {
    int id = 0;  // external label from the case file, not an index
    double demand_p = 0.0;
    double demand_q = 0.0;
    double v_min = 0.0;  // lower bound on |V|^2
    double v_max = 0.0;  // upper bound on |V|^2
    bool is_slack = false;
};

struct Branch {
    int from_bus = 0;  // external bus labels; orientation i -> j is fixed
    int to_bus = 0;
    double r = 0.0;
    double x = 0.0;
    std::optional<double> i_max;  // bound on squared current magnitude l
    bool in_service = true;
};

struct Generator {
    int bus = 0;
    double p_min = 0.0, p_max = 0.0;
    double q_min = 0.0, q_max = 0.0;
    bool in_service = true;
};

struct Network {
    double base_mva = 100.0;
    std::vector<Bus> buses;
    std::vector<Branch> branches;
    std::vector<Generator> generators;

    // Index of the bus with external label `id`, or -1.
    int bus_index(int id) const;
    // Index of the slack bus, or -1 if none is marked.
    int slack_index() const;
};

enum class Severity { Warning, Error };

struct Diagnostic {
    Severity severity = Severity::Warning;
    std::string code;     // stable machine tag, e.g. "negative_reactance"
    std::string message;  // human text
    int index = -1;       // 0-based element index when applicable
};

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ParseResult {
    Network network;
    std::vector<Diagnostic> warnings;  // dropped-field notices etc.
};

// Reads a MATPOWER case (bus/gen/branch matrices, % comments). Shunts,
// line charging, tap ratios and phase shifts are outside the model: they
// are dropped with a warning each. Structural problems throw ParseError.
ParseResult parse_matpower(std::istream& in);
ParseResult parse_matpower(const std::string& text);
ParseResult parse_matpower_file(const std::string& path);

// Structural and electrical sanity report. Errors: disconnected network,
// no/duplicate slack, zero-impedance or dangling branch, inverted bounds.
// Warnings: negative reactance, zero resistance.
std::vector<Diagnostic> validate(const Network& net);

bool has_errors(const std::vector<Diagnostic>& diags);

// Copy of `net` with branch `branch_index` (0-based) reactance negated.
Network negate_reactance(const Network& net, std::size_t branch_index);

nlohmann::json to_json(const Network& net);
Network network_from_json(const nlohmann::json& j);

}  // namespace bfmx
