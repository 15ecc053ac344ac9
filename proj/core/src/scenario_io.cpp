#include "freqctl/scenario_io.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace freqctl {
namespace {

using json = nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw ScenarioError(path + ": " + what);
}

const json& require(const json& obj, const std::string& key, const std::string& path) {
    const auto it = obj.find(key);
    if (it == obj.end()) {
        fail(path, "missing required field '" + key + "'");
    }
    return *it;
}

double as_number(const json& v, const std::string& path) {
    if (!v.is_number()) {
        fail(path, "expected a number");
    }
    return v.get<double>();
}

std::size_t as_node_index(const json& v, const std::string& path) {
    if (!v.is_number_integer() || v.get<long long>() < 1) {
        fail(path, "expected a 1-based node index");
    }
    return static_cast<std::size_t>(v.get<long long>() - 1);
}

void reject_unknown(const json& obj, std::initializer_list<std::string_view> allowed,
                    const std::string& path) {
    for (const auto& [key, value] : obj.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
            fail(path, "unknown field '" + key + "'");
        }
    }
}

NodePair as_pair(const json& v, const std::string& path) {
    if (!v.is_array() || v.size() != 2) {
        fail(path, "expected a pair [i, j]");
    }
    return {as_node_index(v[0], path + "[0]"), as_node_index(v[1], path + "[1]")};
}

// Byte offset of a parse error translated to line:column.
std::string locate(std::string_view text, std::size_t byte) {
    std::size_t line = 1;
    std::size_t col = 1;
    for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

}  // namespace

Scenario parse_scenario(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        throw ScenarioError("malformed JSON at " + locate(text, e.byte) + ": " + e.what());
    }
    if (!doc.is_object()) {
        fail("$", "top level must be an object");
    }
    reject_unknown(doc,
                   {"nodes", "lines", "comm_links", "comm_failures", "message_interval",
                    "disturbances", "scheme", "horizon", "dt", "record_stride"},
                   "$");

    std::vector<NodeParams> nodes;
    const auto& jnodes = require(doc, "nodes", "$");
    if (!jnodes.is_array()) {
        fail("nodes", "expected an array");
    }
    for (std::size_t i = 0; i < jnodes.size(); ++i) {
        const auto path = "nodes[" + std::to_string(i) + "]";
        const auto& jn = jnodes[i];
        if (!jn.is_object()) {
            fail(path, "expected an object");
        }
        reject_unknown(jn, {"id", "inertia", "droop", "cost", "fixed_power"}, path);
        if (jn.contains("id") && as_node_index(jn["id"], path + ".id") != i) {
            fail(path + ".id", "ids must be consecutive starting at 1");
        }
        nodes.push_back({as_number(require(jn, "inertia", path), path + ".inertia"),
                         as_number(require(jn, "droop", path), path + ".droop"),
                         as_number(require(jn, "cost", path), path + ".cost"),
                         as_number(require(jn, "fixed_power", path), path + ".fixed_power")});
    }

    std::vector<Line> lines;
    const auto& jlines = require(doc, "lines", "$");
    if (!jlines.is_array()) {
        fail("lines", "expected an array");
    }
    for (std::size_t e = 0; e < jlines.size(); ++e) {
        const auto path = "lines[" + std::to_string(e) + "]";
        const auto& jl = jlines[e];
        if (!jl.is_object()) {
            fail(path, "expected an object");
        }
        reject_unknown(jl, {"from", "to", "b", "reactance"}, path);
        Line line;
        line.from = as_node_index(require(jl, "from", path), path + ".from");
        line.to = as_node_index(require(jl, "to", path), path + ".to");
        const bool has_b = jl.contains("b");
        const bool has_x = jl.contains("reactance");
        if (has_b == has_x) {
            fail(path, "exactly one of 'b' or 'reactance' is required");
        }
        if (has_b) {
            line.susceptance = as_number(jl["b"], path + ".b");
        } else {
            const double x = as_number(jl["reactance"], path + ".reactance");
            if (x <= 0.0) {
                fail(path + ".reactance", "must be > 0");
            }
            line.susceptance = 1.0 / x;
        }
        lines.push_back(line);
    }

    std::vector<NodePair> links;
    if (const auto it = doc.find("comm_links"); it != doc.end()) {
        if (!it->is_array()) {
            fail("comm_links", "expected an array");
        }
        for (std::size_t k = 0; k < it->size(); ++k) {
            links.push_back(as_pair((*it)[k], "comm_links[" + std::to_string(k) + "]"));
        }
    }
    std::vector<LinkFailure> failures;
    if (const auto it = doc.find("comm_failures"); it != doc.end()) {
        if (!it->is_array()) {
            fail("comm_failures", "expected an array");
        }
        for (std::size_t k = 0; k < it->size(); ++k) {
            const auto path = "comm_failures[" + std::to_string(k) + "]";
            const auto& jf = (*it)[k];
            if (!jf.is_object()) {
                fail(path, "expected an object");
            }
            reject_unknown(jf, {"link", "time"}, path);
            failures.push_back({as_pair(require(jf, "link", path), path + ".link"),
                                as_number(require(jf, "time", path), path + ".time")});
        }
    }
    std::optional<double> interval;
    if (const auto it = doc.find("message_interval"); it != doc.end() && !it->is_null()) {
        if (it->is_string()) {
            if (it->get<std::string>() != "continuous") {
                fail("message_interval", "expected a number, null, or \"continuous\"");
            }
        } else {
            interval = as_number(*it, "message_interval");
        }
    }

    Scenario sc;
    sc.grid = PowerGrid(std::move(nodes), std::move(lines));
    sc.comm = CommGraph(std::move(links), std::move(failures), interval);

    if (const auto it = doc.find("disturbances"); it != doc.end()) {
        if (!it->is_array()) {
            fail("disturbances", "expected an array");
        }
        for (std::size_t k = 0; k < it->size(); ++k) {
            const auto path = "disturbances[" + std::to_string(k) + "]";
            const auto& jd = (*it)[k];
            if (!jd.is_object()) {
                fail(path, "expected an object");
            }
            reject_unknown(jd, {"time", "node", "delta_p"}, path);
            sc.disturbances.push_back(
                {as_number(require(jd, "time", path), path + ".time"),
                 as_node_index(require(jd, "node", path), path + ".node"),
                 as_number(require(jd, "delta_p", path), path + ".delta_p")});
        }
    }
    if (const auto it = doc.find("scheme"); it != doc.end()) {
        if (!it->is_string()) {
            fail("scheme", "expected a string");
        }
        const auto scheme = parse_scheme(it->get<std::string>());
        if (!scheme) {
            fail("scheme", "unknown scheme '" + it->get<std::string>() + "'");
        }
        sc.scheme = *scheme;
    }
    if (const auto it = doc.find("horizon"); it != doc.end()) {
        sc.horizon = as_number(*it, "horizon");
    }
    if (const auto it = doc.find("dt"); it != doc.end()) {
        sc.dt = as_number(*it, "dt");
    }
    if (const auto it = doc.find("record_stride"); it != doc.end()) {
        if (!it->is_number_integer() || it->get<long long>() < 1) {
            fail("record_stride", "expected a positive integer");
        }
        sc.record_stride = static_cast<std::size_t>(it->get<long long>());
    }
    return sc;
}

Scenario load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ScenarioError(path.string() + ": cannot open file");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return parse_scenario(buf.str());
    } catch (const ScenarioError& e) {
        throw ScenarioError(path.string() + ": " + e.what());
    }
}

std::string dump_scenario(const Scenario& sc) {
    json doc;
    auto& jnodes = doc["nodes"] = json::array();
    for (std::size_t i = 0; i < sc.grid.node_count(); ++i) {
        const auto& p = sc.grid.nodes()[i];
        jnodes.push_back({{"id", i + 1},
                          {"inertia", p.inertia},
                          {"droop", p.droop},
                          {"cost", p.cost},
                          {"fixed_power", p.fixed_power}});
    }
    auto& jlines = doc["lines"] = json::array();
    for (const auto& l : sc.grid.lines()) {
        jlines.push_back({{"from", l.from + 1}, {"to", l.to + 1}, {"b", l.susceptance}});
    }
    auto& jlinks = doc["comm_links"] = json::array();
    for (const auto& [a, b] : sc.comm.links()) {
        jlinks.push_back({a + 1, b + 1});
    }
    auto& jfail = doc["comm_failures"] = json::array();
    for (const auto& f : sc.comm.failures()) {
        jfail.push_back({{"link", {f.link.first + 1, f.link.second + 1}}, {"time", f.time}});
    }
    if (sc.comm.message_interval()) {
        doc["message_interval"] = *sc.comm.message_interval();
    } else {
        doc["message_interval"] = "continuous";
    }
    auto& jdist = doc["disturbances"] = json::array();
    for (const auto& d : sc.disturbances) {
        jdist.push_back({{"time", d.time}, {"node", d.node + 1}, {"delta_p", d.delta_p}});
    }
    doc["scheme"] = std::string(to_string(sc.scheme));
    doc["horizon"] = sc.horizon;
    doc["dt"] = sc.dt;
    doc["record_stride"] = sc.record_stride;
    return doc.dump(2) + "\n";
}

void save_scenario(const Scenario& sc, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw ScenarioError(path.string() + ": cannot open for writing");
    }
    out << dump_scenario(sc);
}

}  // namespace freqctl
