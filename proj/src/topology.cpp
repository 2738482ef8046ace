#include "flash/topology.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <queue>
#include <set>
#include <sstream>

#include "flash/rng.hpp"

namespace flash {

namespace {

const std::vector<NodeId> kNoNeighbors{};

}  // namespace

Ratio parse_decimal_ratio(const std::string& text) {
    if (text.empty()) throw InvalidParameter("empty ratio");
    std::size_t dot = text.find('.');
    std::string digits = text;
    std::int64_t den = 1;
    if (dot != std::string::npos) {
        std::string frac = text.substr(dot + 1);
        if (frac.empty() || frac.size() > 12)
            throw InvalidParameter("unsupported decimal precision: " + text);
        digits = text.substr(0, dot) + frac;
        for (std::size_t i = 0; i < frac.size(); ++i) den *= 10;
    }
    std::size_t pos = 0;
    std::int64_t num = 0;
    try {
        num = std::stoll(digits, &pos);
    } catch (const std::exception&) {
        throw InvalidParameter("not a decimal number: " + text);
    }
    if (pos != digits.size()) throw InvalidParameter("not a decimal number: " + text);
    if (num <= 0) throw InvalidParameter("ratio must be positive: " + text);
    return Ratio{num, den};
}

void ConnectivityGraph::add_edge(NodeId u, NodeId v) {
    if (!adjacency_.count(u)) nodes_.push_back(u);
    if (!adjacency_.count(v)) nodes_.push_back(v);
    adjacency_[u].push_back(v);
    adjacency_[v];
}

const std::vector<NodeId>& ConnectivityGraph::neighbors(NodeId u) const {
    auto it = adjacency_.find(u);
    return it == adjacency_.end() ? kNoNeighbors : it->second;
}

bool ConnectivityGraph::has_edge(NodeId u, NodeId v) const {
    const auto& ns = neighbors(u);
    return std::binary_search(ns.begin(), ns.end(), v);
}

bool ConnectivityGraph::reachable(NodeId u, NodeId v) const {
    if (u == v) return true;
    std::set<NodeId> seen{u};
    std::queue<NodeId> frontier;
    frontier.push(u);
    while (!frontier.empty()) {
        NodeId x = frontier.front();
        frontier.pop();
        for (NodeId y : neighbors(x)) {
            if (y == v) return true;
            if (seen.insert(y).second) frontier.push(y);
        }
    }
    return false;
}

void ConnectivityGraph::finalize() {
    std::sort(nodes_.begin(), nodes_.end());
    for (auto& [node, ns] : adjacency_) {
        std::sort(ns.begin(), ns.end());
        ns.erase(std::unique(ns.begin(), ns.end()), ns.end());
    }
}

void Topology::add_node(NodeId id) {
    if (adjacency_.count(id)) return;
    adjacency_[id];
    node_list_.push_back(id);
    std::sort(node_list_.begin(), node_list_.end());
}

void Topology::open_channel(NodeId u, NodeId v) {
    if (u == v) throw InvalidParameter("self channel " + std::to_string(u));
    if (channels_.count({u, v})) throw InvalidParameter("duplicate channel");
    add_node(u);
    add_node(v);
    channels_[{u, v}] = ChannelDirState{};
    channels_[{v, u}] = ChannelDirState{};
    auto insert_sorted = [](std::vector<NodeId>& ns, NodeId x) {
        ns.insert(std::lower_bound(ns.begin(), ns.end(), x), x);
    };
    insert_sorted(adjacency_[u], v);
    insert_sorted(adjacency_[v], u);
}

ChannelDirState& Topology::dir(NodeId u, NodeId v) {
    auto it = channels_.find({u, v});
    if (it == channels_.end())
        throw InvalidParameter("no channel " + std::to_string(u) + "->" + std::to_string(v));
    return it->second;
}

const ChannelDirState& Topology::dir(NodeId u, NodeId v) const {
    auto it = channels_.find({u, v});
    if (it == channels_.end())
        throw InvalidParameter("no channel " + std::to_string(u) + "->" + std::to_string(v));
    return it->second;
}

Amount Topology::balance(NodeId u, NodeId v) const { return dir(u, v).balance; }

void Topology::set_balance(NodeId u, NodeId v, Amount amount) {
    if (amount < 0) throw InvalidParameter("negative balance");
    dir(u, v).balance = amount;
}

const FeeSchedule& Topology::fee(NodeId u, NodeId v) const { return dir(u, v).fee; }

void Topology::set_fee(NodeId u, NodeId v, const FeeSchedule& fee) {
    if (fee.base < 0 || fee.rate_ppm >= kPpmScale)
        throw InvalidParameter("fee out of range");
    dir(u, v).fee = fee;
}

bool Topology::withdraw(NodeId u, NodeId v, Amount amount) {
    if (amount < 0) throw InvalidParameter("negative amount");
    ChannelDirState& state = dir(u, v);
    if (state.balance < amount) return false;
    state.balance -= amount;
    return true;
}

void Topology::deposit(NodeId u, NodeId v, Amount amount) {
    if (amount < 0) throw InvalidParameter("negative amount");
    dir(u, v).balance += amount;
}

bool Topology::apply_payment_delta(NodeId u, NodeId v, Amount amount) {
    if (!withdraw(u, v, amount)) return false;
    deposit(v, u, amount);
    return true;
}

const std::vector<NodeId>& Topology::neighbors(NodeId u) const {
    auto it = adjacency_.find(u);
    return it == adjacency_.end() ? kNoNeighbors : it->second;
}

ConnectivityGraph Topology::connectivity() const {
    ConnectivityGraph g;
    for (const auto& [key, state] : channels_) g.add_edge(key.first, key.second);
    g.finalize();
    return g;
}

std::map<std::pair<NodeId, NodeId>, Amount> Topology::channel_totals() const {
    std::map<std::pair<NodeId, NodeId>, Amount> totals;
    for (const auto& [key, state] : channels_) {
        auto canon = std::minmax(key.first, key.second);
        totals[{canon.first, canon.second}] += state.balance;
    }
    return totals;
}

namespace {

bool is_connected(const std::set<std::pair<NodeId, NodeId>>& edges, std::size_t n) {
    if (n == 0) return false;
    std::map<NodeId, std::vector<NodeId>> adj;
    for (const auto& [u, v] : edges) {
        adj[u].push_back(v);
        adj[v].push_back(u);
    }
    if (adj.size() != n) return false;
    std::set<NodeId> seen{adj.begin()->first};
    std::queue<NodeId> frontier;
    frontier.push(adj.begin()->first);
    while (!frontier.empty()) {
        NodeId x = frontier.front();
        frontier.pop();
        for (NodeId y : adj[x])
            if (seen.insert(y).second) frontier.push(y);
    }
    return seen.size() == n;
}

std::set<std::pair<NodeId, NodeId>> ws_edges(std::size_t n, std::size_t ring_degree,
                                             double beta, std::uint64_t seed) {
    auto canon = [](NodeId a, NodeId b) {
        return a < b ? std::make_pair(a, b) : std::make_pair(b, a);
    };
    std::set<std::pair<NodeId, NodeId>> edges;
    for (std::size_t u = 0; u < n; ++u)
        for (std::size_t j = 1; j <= ring_degree / 2; ++j)
            edges.insert(canon(static_cast<NodeId>(u), static_cast<NodeId>((u + j) % n)));

    Rng rng(seed);
    for (std::size_t u = 0; u < n; ++u) {
        for (std::size_t j = 1; j <= ring_degree / 2; ++j) {
            NodeId a = static_cast<NodeId>(u);
            NodeId b = static_cast<NodeId>((u + j) % n);
            if (!rng.chance(beta)) continue;
            // Rewire the far endpoint to a uniform non-neighbor.
            NodeId c = static_cast<NodeId>(rng.below(n));
            if (c == a || edges.count(canon(a, c))) continue;
            edges.erase(canon(a, b));
            edges.insert(canon(a, c));
        }
    }
    return edges;
}

}  // namespace

Topology watts_strogatz(std::size_t n, std::size_t ring_degree, double beta,
                        std::uint64_t seed) {
    if (n < 3) throw InvalidParameter("watts_strogatz: n must be >= 3");
    if (ring_degree < 2 || ring_degree >= n)
        throw InvalidParameter("watts_strogatz: need 2 <= ring_degree < n");
    if (ring_degree % 2 != 0)
        throw InvalidParameter("watts_strogatz: ring_degree must be even");
    if (beta < 0.0 || beta > 1.0)
        throw InvalidParameter("watts_strogatz: beta must be in [0,1]");

    constexpr int kMaxAttempts = 64;
    for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
        auto edges = ws_edges(n, ring_degree, beta, seed + static_cast<std::uint64_t>(attempt));
        if (!is_connected(edges, n)) continue;
        Topology topo;
        for (std::size_t u = 0; u < n; ++u) topo.add_node(static_cast<NodeId>(u));
        for (const auto& [u, v] : edges) topo.open_channel(u, v);
        return topo;
    }
    throw InvalidParameter("watts_strogatz: rewiring kept disconnecting the graph");
}

void fund_uniform(Topology& topology, Amount low, Amount high, std::uint64_t seed) {
    if (low < 0 || low >= high) throw InvalidParameter("fund_uniform: need 0 <= low < high");
    Rng rng(seed);
    std::set<std::pair<NodeId, NodeId>> funded;
    for (const auto& [key, state] : topology.channels()) {
        auto canon = std::minmax(key.first, key.second);
        if (!funded.insert({canon.first, canon.second}).second) continue;
        Amount total = rng.range(low, high);
        // Even split; the odd unit goes to the low->high direction.
        topology.set_balance(canon.first, canon.second, (total + 1) / 2);
        topology.set_balance(canon.second, canon.first, total / 2);
    }
}

void scale_capacities(Topology& topology, const Ratio& factor) {
    if (factor.num <= 0 || factor.den <= 0)
        throw InvalidParameter("scale_capacities: factor must be positive");
    std::vector<std::pair<std::pair<NodeId, NodeId>, Amount>> updates;
    for (const auto& [key, state] : topology.channels()) {
        __int128 scaled = static_cast<__int128>(state.balance) * factor.num / factor.den;
        updates.push_back({key, static_cast<Amount>(scaled)});
    }
    for (const auto& [key, amount] : updates)
        topology.set_balance(key.first, key.second, amount);
}

void assign_fees(Topology& topology, const FeeDistribution& dist, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<std::pair<NodeId, NodeId>> dirs;
    for (const auto& [key, state] : topology.channels()) dirs.push_back(key);
    for (const auto& [u, v] : dirs) {
        bool high = rng.chance(dist.high_fraction);
        std::uint64_t lo = high ? dist.high_ppm_min : dist.low_ppm_min;
        std::uint64_t hi = high ? dist.high_ppm_max : dist.low_ppm_max;
        FeeSchedule fee;
        fee.base = dist.base;
        fee.rate_ppm = lo + rng.below(hi - lo);
        topology.set_fee(u, v, fee);
    }
}

namespace {

std::uint64_t parse_rate_ppm(const std::string& token, std::size_t line) {
    try {
        std::size_t pos = 0;
        double rate = std::stod(token, &pos);
        if (pos != token.size()) throw std::invalid_argument("rate");
        if (rate < 0.0 || rate >= 1.0) throw std::out_of_range("rate");
        return static_cast<std::uint64_t>(std::llround(rate * static_cast<double>(kPpmScale)));
    } catch (const std::exception&) {
        throw ParseError("bad fee rate '" + token + "'", line);
    }
}

std::string format_rate(std::uint64_t ppm) {
    std::string frac = std::to_string(ppm);
    frac.insert(frac.begin(), 6 - frac.size(), '0');
    return "0." + frac;
}

bool blank_line(const std::string& line) {
    return line.find_first_not_of(" \t\r\n") == std::string::npos;
}

}  // namespace

Topology load_topology(const std::string& path, bool iterative_prune) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open topology file: " + path);
    Topology topo;
    std::string raw;
    std::size_t lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        std::string line = raw.substr(0, raw.find('#'));
        if (blank_line(line)) continue;
        std::istringstream ss(line);
        std::uint64_t u, v;
        Amount bal_uv, bal_vu, base_uv, base_vu;
        std::string rate_uv, rate_vu;
        if (!(ss >> u >> v >> bal_uv >> bal_vu >> rate_uv >> rate_vu >> base_uv >> base_vu))
            throw ParseError("expected 'u v bal_uv bal_vu rate_uv rate_vu base_uv base_vu'",
                             lineno);
        std::string extra;
        if (ss >> extra) throw ParseError("trailing fields", lineno);
        if (u == v) throw ParseError("self channel", lineno);
        if (u > 0xffffffffULL || v > 0xffffffffULL) throw ParseError("node id overflow", lineno);
        if (bal_uv < 0 || bal_vu < 0) throw ParseError("negative balance", lineno);
        if (base_uv < 0 || base_vu < 0) throw ParseError("negative base fee", lineno);
        NodeId a = static_cast<NodeId>(u);
        NodeId b = static_cast<NodeId>(v);
        if (topo.has_channel(a, b)) throw ParseError("duplicate channel", lineno);
        topo.open_channel(a, b);
        topo.set_balance(a, b, bal_uv);
        topo.set_balance(b, a, bal_vu);
        topo.set_fee(a, b, FeeSchedule{base_uv, parse_rate_ppm(rate_uv, lineno)});
        topo.set_fee(b, a, FeeSchedule{base_vu, parse_rate_ppm(rate_vu, lineno)});
    }
    return prune_topology(topo, iterative_prune);
}

void save_topology(const Topology& topology, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write topology file: " + path);
    out << "# u v balance_uv balance_vu rate_uv rate_vu base_uv base_vu\n";
    for (const auto& [key, state] : topology.channels()) {
        const auto& [u, v] = key;
        if (u > v) continue;
        const auto& rev = topology.channels().at({v, u});
        out << u << ' ' << v << ' ' << state.balance << ' ' << rev.balance << ' '
            << format_rate(state.fee.rate_ppm) << ' ' << format_rate(rev.fee.rate_ppm) << ' '
            << state.fee.base << ' ' << rev.fee.base << '\n';
    }
}

Topology prune_topology(const Topology& topology, bool iterative) {
    // Copy into a mutable edge map keyed (min,max).
    struct Chan {
        ChannelDirState fwd, rev;  // fwd = low->high
    };
    std::map<std::pair<NodeId, NodeId>, Chan> chans;
    for (const auto& [key, state] : topology.channels()) {
        const auto& [u, v] = key;
        if (u > v) continue;
        chans[{u, v}] = Chan{state, topology.channels().at({v, u})};
    }

    bool changed = true;
    bool first_pass = true;
    while (changed && (first_pass || iterative)) {
        first_pass = false;
        changed = false;
        for (auto it = chans.begin(); it != chans.end();) {
            if (it->second.fwd.balance + it->second.rev.balance == 0) {
                it = chans.erase(it);
                changed = true;
            } else {
                ++it;
            }
        }
        std::map<NodeId, int> degree;
        for (const auto& [key, c] : chans) {
            degree[key.first]++;
            degree[key.second]++;
        }
        for (auto it = chans.begin(); it != chans.end();) {
            if (degree[it->first.first] < 2 || degree[it->first.second] < 2) {
                it = chans.erase(it);
                changed = true;
            } else {
                ++it;
            }
        }
    }

    Topology out;
    for (const auto& [key, c] : chans) {
        out.open_channel(key.first, key.second);
        out.set_balance(key.first, key.second, c.fwd.balance);
        out.set_balance(key.second, key.first, c.rev.balance);
        out.set_fee(key.first, key.second, c.fwd.fee);
        out.set_fee(key.second, key.first, c.rev.fee);
    }
    return out;
}

}  // namespace flash
