#include "freqctl/grid_model.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

namespace freqctl {

PowerGrid::PowerGrid(std::vector<NodeParams> nodes, std::vector<Line> lines)
    : nodes_(std::move(nodes)), lines_(std::move(lines)) {}

std::optional<std::size_t> PowerGrid::find_line(std::size_t a, std::size_t b) const {
    for (std::size_t e = 0; e < lines_.size(); ++e) {
        const auto& l = lines_[e];
        if ((l.from == a && l.to == b) || (l.from == b && l.to == a)) {
            return e;
        }
    }
    return std::nullopt;
}

namespace {

template <typename Field>
Vector collect(const std::vector<NodeParams>& nodes, Field field) {
    Vector v(static_cast<Eigen::Index>(nodes.size()));
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        v[static_cast<Eigen::Index>(i)] = nodes[i].*field;
    }
    return v;
}

// Union-find over node indices; edges with out-of-range endpoints are ignored.
bool edges_connect(std::size_t n, const std::vector<NodePair>& edges) {
    if (n == 0) {
        return false;
    }
    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    auto find = [&](std::size_t x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    };
    std::size_t components = n;
    for (const auto& [a, b] : edges) {
        if (a >= n || b >= n) {
            continue;
        }
        const auto ra = find(a);
        const auto rb = find(b);
        if (ra != rb) {
            parent[ra] = rb;
            --components;
        }
    }
    return components == 1;
}

}  // namespace

Vector PowerGrid::inertia() const { return collect(nodes_, &NodeParams::inertia); }
Vector PowerGrid::droop() const { return collect(nodes_, &NodeParams::droop); }
Vector PowerGrid::cost() const { return collect(nodes_, &NodeParams::cost); }
Vector PowerGrid::fixed_power() const { return collect(nodes_, &NodeParams::fixed_power); }

Matrix PowerGrid::incidence() const {
    Matrix a = Matrix::Zero(static_cast<Eigen::Index>(node_count()),
                            static_cast<Eigen::Index>(line_count()));
    for (std::size_t e = 0; e < lines_.size(); ++e) {
        const auto col = static_cast<Eigen::Index>(e);
        a(static_cast<Eigen::Index>(lines_[e].from), col) += 1.0;
        a(static_cast<Eigen::Index>(lines_[e].to), col) -= 1.0;
    }
    return a;
}

Matrix PowerGrid::weighted_laplacian() const {
    const auto n = static_cast<Eigen::Index>(node_count());
    Matrix l = Matrix::Zero(n, n);
    for (const auto& line : lines_) {
        const auto i = static_cast<Eigen::Index>(line.from);
        const auto j = static_cast<Eigen::Index>(line.to);
        l(i, i) += line.susceptance;
        l(j, j) += line.susceptance;
        l(i, j) -= line.susceptance;
        l(j, i) -= line.susceptance;
    }
    return l;
}

bool PowerGrid::connected() const {
    std::vector<NodePair> edges;
    edges.reserve(lines_.size());
    for (const auto& l : lines_) {
        edges.emplace_back(l.from, l.to);
    }
    return edges_connect(nodes_.size(), edges);
}

CommGraph::CommGraph(std::vector<NodePair> links, std::vector<LinkFailure> failures,
                     std::optional<double> message_interval)
    : links_(std::move(links)),
      failures_(std::move(failures)),
      message_interval_(message_interval) {
    for (auto& l : links_) {
        l = make_pair_sorted(l.first, l.second);
    }
    for (auto& f : failures_) {
        f.link = make_pair_sorted(f.link.first, f.link.second);
    }
}

std::optional<std::size_t> CommGraph::find_link(std::size_t a, std::size_t b) const {
    const auto key = make_pair_sorted(a, b);
    const auto it = std::find(links_.begin(), links_.end(), key);
    if (it == links_.end()) {
        return std::nullopt;
    }
    return static_cast<std::size_t>(std::distance(links_.begin(), it));
}

Matrix CommGraph::laplacian(std::size_t node_count, const std::vector<bool>& live) const {
    const auto n = static_cast<Eigen::Index>(node_count);
    Matrix l = Matrix::Zero(n, n);
    for (std::size_t k = 0; k < links_.size(); ++k) {
        if (!live.empty() && !live[k]) {
            continue;
        }
        const auto i = static_cast<Eigen::Index>(links_[k].first);
        const auto j = static_cast<Eigen::Index>(links_[k].second);
        l(i, i) += 1.0;
        l(j, j) += 1.0;
        l(i, j) -= 1.0;
        l(j, i) -= 1.0;
    }
    return l;
}

namespace {

constexpr std::array<std::pair<Scheme, std::string_view>, 6> kSchemeNames{{
    {Scheme::Consensus, "CONSENSUS"},
    {Scheme::ConsensusSampled, "CONSENSUS_SAMPLED"},
    {Scheme::PairFlow, "PAIR_FLOW"},
    {Scheme::HybridSingle, "HYBRID_SINGLE"},
    {Scheme::MultiFailure, "MULTI_FAILURE"},
    {Scheme::Sequential, "SEQUENTIAL"},
}};

}  // namespace

std::string_view to_string(Scheme scheme) {
    for (const auto& [s, name] : kSchemeNames) {
        if (s == scheme) {
            return name;
        }
    }
    return "UNKNOWN";
}

std::optional<Scheme> parse_scheme(std::string_view name) {
    for (const auto& [s, n] : kSchemeNames) {
        if (n == name) {
            return s;
        }
    }
    return std::nullopt;
}

Vector Scenario::steady_injection() const {
    Vector p = grid.fixed_power();
    for (const auto& d : disturbances) {
        if (d.node < grid.node_count()) {
            p[static_cast<Eigen::Index>(d.node)] += d.delta_p;
        }
    }
    return p;
}

SystemState SystemState::zeros(const PowerGrid& grid, const CommGraph& comm) {
    const auto n = static_cast<Eigen::Index>(grid.node_count());
    SystemState s;
    s.omega = Vector::Zero(n);
    s.flow = Vector::Zero(static_cast<Eigen::Index>(grid.line_count()));
    s.u = Vector::Zero(n);
    s.q = Vector::Zero(n);
    s.last_rx.assign(2 * comm.link_count(), std::numeric_limits<double>::quiet_NaN());
    return s;
}

bool SystemState::all_finite() const {
    return std::isfinite(t) && omega.allFinite() && flow.allFinite() && u.allFinite() &&
           q.allFinite();
}

namespace {

// Node numbers in messages are 1-based to match scenario files.
std::string node_name(std::size_t i) { return "node " + std::to_string(i + 1); }

std::string pair_name(const NodePair& p) {
    return "(" + std::to_string(p.first + 1) + "," + std::to_string(p.second + 1) + ")";
}

bool is_positive(double x) { return std::isfinite(x) && x > 0.0; }

}  // namespace

std::vector<std::string> validate(const Scenario& sc) {
    std::vector<std::string> out;
    const auto& grid = sc.grid;
    const auto n = grid.node_count();

    if (n == 0) {
        out.emplace_back("grid has no nodes");
    }
    for (std::size_t i = 0; i < n; ++i) {
        const auto& p = grid.nodes()[i];
        if (!is_positive(p.inertia)) {
            out.push_back(node_name(i) + ": inertia must be > 0");
        }
        if (!std::isfinite(p.droop) || p.droop < 0.0) {
            out.push_back(node_name(i) + ": droop must be >= 0");
        }
        if (!is_positive(p.cost)) {
            out.push_back(node_name(i) + ": cost must be > 0");
        }
        if (!std::isfinite(p.fixed_power)) {
            out.push_back(node_name(i) + ": fixed power must be finite");
        }
    }

    std::set<NodePair> seen_lines;
    bool lines_in_range = true;
    for (std::size_t e = 0; e < grid.line_count(); ++e) {
        const auto& l = grid.lines()[e];
        const std::string tag = "line " + std::to_string(e + 1);
        if (l.from >= n || l.to >= n) {
            out.push_back(tag + ": endpoint out of range");
            lines_in_range = false;
            continue;
        }
        if (l.from == l.to) {
            out.push_back(tag + ": self-loop at " + node_name(l.from));
            continue;
        }
        if (l.from > l.to) {
            out.push_back(tag + ": orientation must satisfy from < to");
        }
        if (!seen_lines.insert(make_pair_sorted(l.from, l.to)).second) {
            out.push_back(tag + ": duplicate line " + pair_name(make_pair_sorted(l.from, l.to)));
        }
        if (!is_positive(l.susceptance)) {
            out.push_back(tag + ": susceptance must be > 0");
        }
    }
    if (n > 0 && lines_in_range && !grid.connected()) {
        out.emplace_back("power grid is not connected");
    }

    const auto& comm = sc.comm;
    std::set<NodePair> seen_links;
    for (const auto& link : comm.links()) {
        if (link.first >= n || link.second >= n) {
            out.push_back("comm link " + pair_name(link) + ": endpoint out of range");
        } else if (link.first == link.second) {
            out.push_back("comm link " + pair_name(link) + ": self-loop");
        } else if (!seen_links.insert(link).second) {
            out.push_back("comm link " + pair_name(link) + ": duplicate");
        }
    }
    std::set<NodePair> failed;
    for (const auto& f : comm.failures()) {
        if (!comm.find_link(f.link.first, f.link.second)) {
            out.push_back("comm failure " + pair_name(f.link) + ": not a communication link");
        }
        if (!std::isfinite(f.time) || f.time < 0.0) {
            out.push_back("comm failure " + pair_name(f.link) + ": time must be >= 0");
        }
        if (!failed.insert(f.link).second) {
            out.push_back("comm failure " + pair_name(f.link) + ": listed twice");
        }
    }
    if (comm.message_interval() && !is_positive(*comm.message_interval())) {
        out.emplace_back("message interval must be > 0");
    }

    for (std::size_t k = 0; k < sc.disturbances.size(); ++k) {
        const auto& d = sc.disturbances[k];
        const std::string tag = "disturbance " + std::to_string(k + 1);
        if (d.node >= n) {
            out.push_back(tag + ": node out of range");
        }
        if (!std::isfinite(d.time) || d.time < 0.0) {
            out.push_back(tag + ": time must be >= 0");
        }
        if (!std::isfinite(d.delta_p)) {
            out.push_back(tag + ": delta_p must be finite");
        }
    }

    if (!is_positive(sc.dt)) {
        out.emplace_back("dt must be > 0");
    } else {
        if (!std::isfinite(sc.horizon) || sc.horizon < sc.dt) {
            out.emplace_back("horizon must be >= dt");
        }
        if (comm.message_interval() && is_positive(*comm.message_interval())) {
            const double ratio = *comm.message_interval() / sc.dt;
            if (ratio < 1.0 - 1e-9 || std::abs(ratio - std::round(ratio)) > 1e-9 * ratio) {
                out.emplace_back("message interval must be an integer multiple of dt");
            }
        }
    }
    if (sc.record_stride == 0) {
        out.emplace_back("record_stride must be >= 1");
    }

    switch (sc.scheme) {
        case Scheme::ConsensusSampled:
        case Scheme::Sequential:
            if (comm.continuous()) {
                out.push_back(std::string(to_string(sc.scheme)) +
                              " requires a finite message interval");
            }
            break;
        case Scheme::PairFlow:
            if (n != 2 || grid.line_count() != 1) {
                out.emplace_back("PAIR_FLOW requires a two-node grid with one line");
            }
            break;
        case Scheme::HybridSingle:
            if (comm.failures().size() != 1) {
                out.emplace_back("HYBRID_SINGLE requires exactly one comm failure");
            }
            break;
        default:
            break;
    }
    if (sc.scheme == Scheme::Sequential && out.empty()) {
        bool any_shared = false;
        for (const auto& link : comm.links()) {
            any_shared = any_shared || grid.find_line(link.first, link.second).has_value();
        }
        if (!any_shared) {
            out.emplace_back("SEQUENTIAL requires at least one link shared by power and comm");
        }
    }
    return out;
}

}  // namespace freqctl
