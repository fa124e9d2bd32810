#include "bfmx/network.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <queue>
#include <set>
#include <sstream>

namespace bfmx {

int Network::bus_index(int id) const {
    for (std::size_t i = 0; i < buses.size(); ++i)
        if (buses[i].id == id) return static_cast<int>(i);
    return -1;
}

int Network::slack_index() const {
    for (std::size_t i = 0; i < buses.size(); ++i)
        if (buses[i].is_slack) return static_cast<int>(i);
    return -1;
}

bool has_errors(const std::vector<Diagnostic>& diags) {
    return std::any_of(diags.begin(), diags.end(), [](const Diagnostic& d) {
        return d.severity == Severity::Error;
    });
}

namespace {

std::string strip_comments(const std::string& text) {
    std::string out;
    out.reserve(text.size());
    bool in_comment = false;
    for (char c : text) {
        if (c == '%') in_comment = true;
        if (c == '\n') in_comment = false;
        out.push_back(in_comment ? ' ' : c);
    }
    return out;
}

bool is_ident_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.';
}

// Position just past "name =" for `name` or `mpc.name`, or npos.
std::size_t find_assignment(const std::string& text, const std::string& name) {
    for (std::size_t pos = 0; (pos = text.find(name, pos)) != std::string::npos; ++pos) {
        if (pos > 0) {
            char prev = text[pos - 1];
            bool dotted = prev == '.' && pos >= 4 && text.compare(pos - 4, 4, "mpc.") == 0;
            if (is_ident_char(prev) && !dotted) continue;
        }
        std::size_t after = pos + name.size();
        while (after < text.size() && std::isspace(static_cast<unsigned char>(text[after]))) ++after;
        if (after < text.size() && text[after] == '=') return after + 1;
    }
    return std::string::npos;
}

std::optional<double> find_scalar(const std::string& text, const std::string& name) {
    std::size_t pos = find_assignment(text, name);
    if (pos == std::string::npos) return std::nullopt;
    const char* begin = text.c_str() + pos;
    char* end = nullptr;
    double value = std::strtod(begin, &end);
    if (end == begin) return std::nullopt;
    return value;
}

std::vector<double> parse_row(const std::string& row, const std::string& where) {
    std::vector<double> vals;
    const char* p = row.c_str();
    while (*p) {
        while (*p && (std::isspace(static_cast<unsigned char>(*p)) || *p == ',')) ++p;
        if (!*p) break;
        char* end = nullptr;
        double v = std::strtod(p, &end);
        if (end == p)
            throw ParseError("non-numeric token in " + where + " row: '" + row + "'");
        if (!std::isfinite(v))
            throw ParseError("non-finite value in " + where + " row: '" + row + "'");
        vals.push_back(v);
        p = end;
    }
    return vals;
}

std::optional<std::vector<std::vector<double>>> find_matrix(const std::string& text,
                                                            const std::string& name) {
    std::size_t pos = find_assignment(text, name);
    if (pos == std::string::npos) return std::nullopt;
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
    if (pos >= text.size() || text[pos] != '[')
        throw ParseError("expected '[' after '" + name + " ='");
    std::size_t close = text.find(']', pos);
    if (close == std::string::npos)
        throw ParseError("unterminated matrix '" + name + "'");
    std::string body = text.substr(pos + 1, close - pos - 1);
    for (char& c : body)
        if (c == '\n' || c == '\r') c = ';';

    std::vector<std::vector<double>> rows;
    std::stringstream ss(body);
    std::string row;
    while (std::getline(ss, row, ';')) {
        std::vector<double> vals = parse_row(row, name);
        if (!vals.empty()) rows.push_back(std::move(vals));
    }
    return rows;
}

}  // namespace

ParseResult parse_matpower(std::istream& in) {
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_matpower(buf.str());
}

ParseResult parse_matpower_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open case file: " + path);
    return parse_matpower(in);
}

ParseResult parse_matpower(const std::string& raw) {
    ParseResult result;
    Network& net = result.network;
    const std::string text = strip_comments(raw);

    auto warn = [&result](const std::string& code, const std::string& msg, int index) {
        result.warnings.push_back({Severity::Warning, code, msg, index});
    };

    std::optional<double> base = find_scalar(text, "baseMVA");
    if (!base) throw ParseError("baseMVA not found");
    if (!(*base > 0)) throw ParseError("baseMVA must be positive");
    net.base_mva = *base;

    auto bus_rows = find_matrix(text, "bus");
    if (!bus_rows || bus_rows->empty()) throw ParseError("bus matrix not found or empty");
    auto gen_rows = find_matrix(text, "gen").value_or(std::vector<std::vector<double>>{});
    auto branch_rows = find_matrix(text, "branch").value_or(std::vector<std::vector<double>>{});

    std::set<int> seen_ids;
    for (std::size_t k = 0; k < bus_rows->size(); ++k) {
        const auto& row = (*bus_rows)[k];
        if (row.size() < 13)
            throw ParseError("bus row " + std::to_string(k + 1) + " has fewer than 13 columns");
        Bus bus;
        bus.id = static_cast<int>(row[0]);
        if (!seen_ids.insert(bus.id).second)
            throw ParseError("duplicate bus id " + std::to_string(bus.id));
        int type = static_cast<int>(row[1]);
        bus.is_slack = type == 3;
        bus.demand_p = row[2] / net.base_mva;
        bus.demand_q = row[3] / net.base_mva;
        if (row[4] != 0.0 || row[5] != 0.0)
            warn("shunt_dropped",
                 "bus " + std::to_string(bus.id) + ": shunt admittance (Gs/Bs) outside model, dropped",
                 static_cast<int>(k));
        bus.v_max = row[11] * row[11];
        bus.v_min = row[12] * row[12];
        net.buses.push_back(bus);
    }

    for (std::size_t k = 0; k < gen_rows.size(); ++k) {
        const auto& row = gen_rows[k];
        if (row.size() < 10)
            throw ParseError("gen row " + std::to_string(k + 1) + " has fewer than 10 columns");
        Generator g;
        g.bus = static_cast<int>(row[0]);
        if (net.bus_index(g.bus) < 0)
            throw ParseError("gen row " + std::to_string(k + 1) + " references unknown bus " +
                             std::to_string(g.bus));
        g.q_max = row[3] / net.base_mva;
        g.q_min = row[4] / net.base_mva;
        g.in_service = row[7] > 0;
        g.p_max = row[8] / net.base_mva;
        g.p_min = row[9] / net.base_mva;
        net.generators.push_back(g);
    }

    for (std::size_t k = 0; k < branch_rows.size(); ++k) {
        const auto& row = branch_rows[k];
        if (row.size() < 11)
            throw ParseError("branch row " + std::to_string(k + 1) + " has fewer than 11 columns");
        Branch br;
        br.from_bus = static_cast<int>(row[0]);
        br.to_bus = static_cast<int>(row[1]);
        if (net.bus_index(br.from_bus) < 0 || net.bus_index(br.to_bus) < 0)
            throw ParseError("branch row " + std::to_string(k + 1) + " references unknown bus");
        br.r = row[2];
        br.x = row[3];
        if (row[4] != 0.0)
            warn("charging_dropped",
                 "branch " + std::to_string(k + 1) + ": line charging susceptance outside model, dropped",
                 static_cast<int>(k));
        if (row[5] != 0.0)
            warn("rating_dropped",
                 "branch " + std::to_string(k + 1) + ": MVA rating is not a squared-current bound, dropped",
                 static_cast<int>(k));
        if (row[8] != 0.0 && row[8] != 1.0)
            warn("tap_dropped",
                 "branch " + std::to_string(k + 1) + ": off-nominal tap ratio outside model, dropped",
                 static_cast<int>(k));
        if (row[9] != 0.0)
            warn("shift_dropped",
                 "branch " + std::to_string(k + 1) + ": phase shift outside model, dropped",
                 static_cast<int>(k));
        br.in_service = row[10] > 0;
        net.branches.push_back(br);
    }

    return result;
}

std::vector<Diagnostic> validate(const Network& net) {
    std::vector<Diagnostic> diags;
    auto add = [&diags](Severity sev, const std::string& code, const std::string& msg, int idx) {
        diags.push_back({sev, code, msg, idx});
    };

    if (!(net.base_mva > 0))
        add(Severity::Error, "bad_base", "base_mva must be positive", -1);
    if (net.buses.empty()) {
        add(Severity::Error, "empty", "network has no buses", -1);
        return diags;
    }

    std::set<int> ids;
    for (std::size_t i = 0; i < net.buses.size(); ++i) {
        const Bus& b = net.buses[i];
        if (!ids.insert(b.id).second)
            add(Severity::Error, "duplicate_bus", "duplicate bus id " + std::to_string(b.id),
                static_cast<int>(i));
        if (b.v_min < 0 || b.v_max < b.v_min || b.v_max <= 0)
            add(Severity::Error, "bad_voltage_bounds",
                "bus " + std::to_string(b.id) + ": need 0 <= v_min <= v_max, v_max > 0",
                static_cast<int>(i));
    }

    int slack_count = 0;
    for (const Bus& b : net.buses) slack_count += b.is_slack ? 1 : 0;
    if (slack_count == 0)
        add(Severity::Error, "no_slack", "no slack bus marked", -1);
    else if (slack_count > 1)
        add(Severity::Error, "duplicate_slack",
            std::to_string(slack_count) + " slack buses marked, expected exactly one", -1);

    for (std::size_t k = 0; k < net.generators.size(); ++k) {
        const Generator& g = net.generators[k];
        if (net.bus_index(g.bus) < 0)
            add(Severity::Error, "dangling_reference",
                "generator " + std::to_string(k + 1) + " references unknown bus " +
                    std::to_string(g.bus),
                static_cast<int>(k));
        if (g.p_min > g.p_max || g.q_min > g.q_max)
            add(Severity::Error, "bad_generator_bounds",
                "generator " + std::to_string(k + 1) + ": inverted capability bounds",
                static_cast<int>(k));
    }

    for (std::size_t k = 0; k < net.branches.size(); ++k) {
        const Branch& br = net.branches[k];
        bool dangling = net.bus_index(br.from_bus) < 0 || net.bus_index(br.to_bus) < 0;
        if (dangling)
            add(Severity::Error, "dangling_reference",
                "branch " + std::to_string(k + 1) + " references unknown bus", static_cast<int>(k));
        if (!br.in_service) continue;
        if (br.r == 0.0 && br.x == 0.0)
            add(Severity::Error, "zero_impedance",
                "branch " + std::to_string(k + 1) + ": r = x = 0", static_cast<int>(k));
        if (br.i_max && *br.i_max < 0)
            add(Severity::Error, "bad_current_bound",
                "branch " + std::to_string(k + 1) + ": negative current bound", static_cast<int>(k));
        if (br.x < 0) {
            std::ostringstream msg;
            msg << "branch " << k + 1 << " (" << br.from_bus << "-" << br.to_bus
                << "): negative reactance x = " << br.x;
            add(Severity::Warning, "negative_reactance", msg.str(), static_cast<int>(k));
        }
        if (br.r < 0)
            add(Severity::Warning, "negative_resistance",
                "branch " + std::to_string(k + 1) + ": negative resistance", static_cast<int>(k));
        else if (br.r == 0.0)
            add(Severity::Warning, "zero_resistance",
                "branch " + std::to_string(k + 1) +
                    ": zero resistance, loss objective is not strictly increasing in its current",
                static_cast<int>(k));
    }

    // Connectivity over in-service branches, seeded at the slack when present.
    if (!has_errors(diags) || slack_count >= 1 || net.slack_index() >= 0) {
        int n = static_cast<int>(net.buses.size());
        int seed = net.slack_index() >= 0 ? net.slack_index() : 0;
        std::vector<char> seen(n, 0);
        std::vector<std::vector<int>> adj(n);
        for (const Branch& br : net.branches) {
            if (!br.in_service) continue;
            int i = net.bus_index(br.from_bus), j = net.bus_index(br.to_bus);
            if (i < 0 || j < 0) continue;
            adj[i].push_back(j);
            adj[j].push_back(i);
        }
        std::queue<int> q;
        q.push(seed);
        seen[seed] = 1;
        int reached = 0;
        while (!q.empty()) {
            int u = q.front();
            q.pop();
            ++reached;
            for (int w : adj[u])
                if (!seen[w]) {
                    seen[w] = 1;
                    q.push(w);
                }
        }
        if (reached != n)
            add(Severity::Error, "disconnected",
                std::to_string(n - reached) + " of " + std::to_string(n) +
                    " buses unreachable from bus " + std::to_string(net.buses[seed].id),
                -1);
    }

    return diags;
}

Network negate_reactance(const Network& net, std::size_t branch_index) {
    if (branch_index >= net.branches.size())
        throw std::out_of_range("negate_reactance: branch index " + std::to_string(branch_index) +
                                " out of range (" + std::to_string(net.branches.size()) +
                                " branches)");
    Network out = net;
    out.branches[branch_index].x = -out.branches[branch_index].x;
    return out;
}

nlohmann::json to_json(const Network& net) {
    nlohmann::json j;
    j["base_mva"] = net.base_mva;
    j["buses"] = nlohmann::json::array();
    for (const Bus& b : net.buses)
        j["buses"].push_back({{"id", b.id},
                              {"demand_p", b.demand_p},
                              {"demand_q", b.demand_q},
                              {"v_min", b.v_min},
                              {"v_max", b.v_max},
                              {"is_slack", b.is_slack}});
    j["branches"] = nlohmann::json::array();
    for (const Branch& br : net.branches) {
        nlohmann::json jb = {{"from_bus", br.from_bus}, {"to_bus", br.to_bus},
                             {"r", br.r},               {"x", br.x},
                             {"in_service", br.in_service}};
        jb["i_max"] = br.i_max ? nlohmann::json(*br.i_max) : nlohmann::json(nullptr);
        j["branches"].push_back(jb);
    }
    j["generators"] = nlohmann::json::array();
    for (const Generator& g : net.generators)
        j["generators"].push_back({{"bus", g.bus},
                                   {"p_min", g.p_min},
                                   {"p_max", g.p_max},
                                   {"q_min", g.q_min},
                                   {"q_max", g.q_max},
                                   {"in_service", g.in_service}});
    return j;
}

Network network_from_json(const nlohmann::json& j) {
    Network net;
    net.base_mva = j.at("base_mva").get<double>();
    for (const auto& jb : j.at("buses")) {
        Bus b;
        b.id = jb.at("id").get<int>();
        b.demand_p = jb.at("demand_p").get<double>();
        b.demand_q = jb.at("demand_q").get<double>();
        b.v_min = jb.at("v_min").get<double>();
        b.v_max = jb.at("v_max").get<double>();
        b.is_slack = jb.at("is_slack").get<bool>();
        net.buses.push_back(b);
    }
    for (const auto& jb : j.at("branches")) {
        Branch br;
        br.from_bus = jb.at("from_bus").get<int>();
        br.to_bus = jb.at("to_bus").get<int>();
        br.r = jb.at("r").get<double>();
        br.x = jb.at("x").get<double>();
        if (!jb.at("i_max").is_null()) br.i_max = jb.at("i_max").get<double>();
        br.in_service = jb.at("in_service").get<bool>();
        net.branches.push_back(br);
    }
    for (const auto& jg : j.at("generators")) {
        Generator g;
        g.bus = jg.at("bus").get<int>();
        g.p_min = jg.at("p_min").get<double>();
        g.p_max = jg.at("p_max").get<double>();
        g.q_min = jg.at("q_min").get<double>();
        g.q_max = jg.at("q_max").get<double>();
        g.in_service = jg.at("in_service").get<bool>();
        net.generators.push_back(g);
    }
    return net;
}

}  // namespace bfmx
