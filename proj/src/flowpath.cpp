#include "flash/flowpath.hpp"

#include <algorithm>

namespace flash {

std::optional<std::vector<ProbeEntry>> TopologyProber::probe(const Path& path) {
    ++probes_;
    std::vector<ProbeEntry> entries;
    entries.reserve(path.size() - 1);
    for (std::size_t i = 0; i + 1 < path.size(); ++i) {
        NodeId u = path[i];
        NodeId v = path[i + 1];
        if (!topology_.has_channel(u, v)) return std::nullopt;
        entries.push_back(ProbeEntry{topology_.balance(u, v), topology_.balance(v, u),
                                     topology_.fee(u, v).rate_ppm,
                                     topology_.fee(v, u).rate_ppm});
    }
    return entries;
}

std::optional<Path> bfs_feasible_shortest(const ConnectivityGraph& graph,
                                          const CapacityMatrix& residual, NodeId s,
                                          NodeId t) {
    if (s == t || !graph.has_node(s)) return std::nullopt;
    std::map<NodeId, NodeId> parent;
    parent[s] = s;
    std::vector<NodeId> frontier{s};
    bool found = false;
    while (!frontier.empty() && !found) {
        std::vector<NodeId> next;
        for (NodeId u : frontier) {
            for (NodeId v : graph.neighbors(u)) {
                if (parent.count(v)) continue;
                if (!residual.passable(u, v)) continue;
                parent[v] = u;
                next.push_back(v);
                if (v == t) found = true;
            }
        }
        std::sort(next.begin(), next.end());
        frontier = std::move(next);
    }
    if (!found) return std::nullopt;
    Path path;
    for (NodeId v = t; v != s; v = parent[v]) path.push_back(v);
    path.push_back(s);
    std::reverse(path.begin(), path.end());
    return path;
}

std::optional<Path> lexmin_shortest_path(
    const ConnectivityGraph& graph, NodeId s, NodeId t,
    const std::set<NodeId>& banned_nodes,
    const std::set<std::pair<NodeId, NodeId>>& banned_edges) {
    if (s == t || banned_nodes.count(s) || banned_nodes.count(t)) return std::nullopt;
    if (!graph.has_node(s) || !graph.has_node(t)) return std::nullopt;

    auto allowed = [&](NodeId u, NodeId v) {
        return !banned_nodes.count(v) && !banned_edges.count({u, v});
    };

    // Distance-to-t over the masked graph, via reverse adjacency.
    std::map<NodeId, std::vector<NodeId>> incoming;
    for (NodeId u : graph.nodes())
        for (NodeId v : graph.neighbors(u)) incoming[v].push_back(u);

    std::map<NodeId, std::size_t> dist;
    dist[t] = 0;
    std::vector<NodeId> frontier{t};
    while (!frontier.empty()) {
        std::vector<NodeId> next;
        for (NodeId v : frontier) {
            for (NodeId u : incoming[v]) {
                if (dist.count(u) || banned_nodes.count(u)) continue;
                if (!allowed(u, v)) continue;
                dist[u] = dist[v] + 1;
                next.push_back(u);
            }
        }
        frontier = std::move(next);
    }
    auto it = dist.find(s);
    if (it == dist.end()) return std::nullopt;

    // Greedy descent: the smallest next hop that still lies on a shortest
    // path gives the lexicographically smallest one overall.
    Path path{s};
    NodeId cur = s;
    std::size_t remaining = it->second;
    while (cur != t) {
        bool stepped = false;
        for (NodeId v : graph.neighbors(cur)) {
            auto dv = dist.find(v);
            if (dv == dist.end() || dv->second != remaining - 1) continue;
            if (!allowed(cur, v)) continue;
            path.push_back(v);
            cur = v;
            --remaining;
            stepped = true;
            break;
        }
        if (!stepped) return std::nullopt;  // cannot happen on a consistent dist map
    }
    return path;
}

namespace {

struct PathOrder {
    bool operator()(const Path& a, const Path& b) const {
        if (a.size() != b.size()) return a.size() < b.size();
        return a < b;
    }
};

}  // namespace

std::vector<Path> yen_k_shortest(const ConnectivityGraph& graph, NodeId s, NodeId t,
                                 std::size_t m) {
    std::vector<Path> found;
    if (m == 0) return found;
    auto first = lexmin_shortest_path(graph, s, t, {}, {});
    if (!first) return found;
    found.push_back(*first);

    std::set<Path, PathOrder> candidates;
    while (found.size() < m) {
        const Path& prev = found.back();
        for (std::size_t i = 0; i + 1 < prev.size(); ++i) {
            NodeId spur = prev[i];
            std::set<std::pair<NodeId, NodeId>> banned_edges;
            for (const Path& p : found) {
                if (p.size() > i + 1 &&
                    std::equal(prev.begin(), prev.begin() + i + 1, p.begin()))
                    banned_edges.insert({p[i], p[i + 1]});
            }
            std::set<NodeId> banned_nodes(prev.begin(), prev.begin() + i);
            auto spur_path = lexmin_shortest_path(graph, spur, t, banned_nodes, banned_edges);
            if (!spur_path) continue;
            Path total(prev.begin(), prev.begin() + i);
            total.insert(total.end(), spur_path->begin(), spur_path->end());
            candidates.insert(std::move(total));
        }
        bool appended = false;
        while (!candidates.empty()) {
            Path best = *candidates.begin();
            candidates.erase(candidates.begin());
            if (std::find(found.begin(), found.end(), best) == found.end()) {
                found.push_back(std::move(best));
                appended = true;
                break;
            }
        }
        if (!appended) break;
    }
    return found;
}

std::vector<Path> edge_disjoint_shortest_paths(const ConnectivityGraph& graph, NodeId s,
                                               NodeId t, std::size_t count) {
    std::vector<Path> out;
    CapacityMatrix deleted;  // zero entries mark removed channels
    while (out.size() < count) {
        auto p = bfs_feasible_shortest(graph, deleted, s, t);
        if (!p) break;
        for (std::size_t i = 0; i + 1 < p->size(); ++i) {
            deleted.set((*p)[i], (*p)[i + 1], 0);
            deleted.set((*p)[i + 1], (*p)[i], 0);
        }
        out.push_back(std::move(*p));
    }
    return out;
}

EkPathfinder::EkPathfinder(const ConnectivityGraph& graph, NodeId s, NodeId t,
                           Amount demand, std::size_t k)
    : graph_(graph), s_(s), t_(t), demand_(demand), k_(k) {
    if (s == t) throw InvalidParameter("sender equals receiver");
    if (demand <= 0) throw InvalidParameter("demand must be positive");
    if (k < 1) throw InvalidParameter("path budget must be at least 1");
}

std::variant<ProbeRequest, EkResult> EkPathfinder::next(
    std::optional<std::vector<ProbeEntry>> reply) {
    if (done_) throw InvalidParameter("pathfinder already finished");
    if (!pending_.empty()) {
        if (!reply) throw InvalidParameter("probe reply expected");
        if (reply->size() + 1 != pending_.size())
            throw InvalidParameter("probe reply hop count mismatch");
        record_and_augment(*reply);
        pending_.clear();
        if (flow_ >= demand_) {
            done_ = true;
            EkResult r;
            r.success = true;
            r.paths = paths_;
            r.probed = probed_;
            r.flow = flow_;
            r.probes = probes_;
            r.iterations = iterations_;
            return r;
        }
    } else if (reply) {
        throw InvalidParameter("no probe outstanding");
    }
    return advance();
}

std::variant<ProbeRequest, EkResult> EkPathfinder::advance() {
    if (iterations_ < k_) {
        auto p = bfs_feasible_shortest(graph_, residual_, s_, t_);
        if (p) {
            ++iterations_;
            ++probes_;
            pending_ = std::move(*p);
            return ProbeRequest{pending_};
        }
    }
    done_ = true;
    EkResult r;
    r.success = flow_ >= demand_;
    r.paths = paths_;
    r.probed = probed_;
    r.flow = flow_;
    r.probes = probes_;
    r.iterations = iterations_;
    return r;
}

void EkPathfinder::record_and_augment(const std::vector<ProbeEntry>& entries) {
    for (std::size_t i = 0; i + 1 < pending_.size(); ++i) {
        NodeId u = pending_[i];
        NodeId v = pending_[i + 1];
        if (!probed_.known(u, v)) {
            // First sight of this channel: record both directions and seed
            // the residuals from what the probe saw.
            probed_.set(u, v, entries[i].forward);
            probed_.set(v, u, entries[i].reverse);
            residual_.set(u, v, entries[i].forward);
            residual_.set(v, u, entries[i].reverse);
        }
    }
    Amount bottleneck = kUnboundedDemand;
    for (std::size_t i = 0; i + 1 < pending_.size(); ++i) {
        Amount r = *residual_.get(pending_[i], pending_[i + 1]);
        bottleneck = std::min(bottleneck, r);
    }
    if (bottleneck <= 0) return;  // burns the iteration, no flow
    paths_.add(pending_, bottleneck);
    for (std::size_t i = 0; i + 1 < pending_.size(); ++i) {
        residual_.add(pending_[i], pending_[i + 1], -bottleneck);
        residual_.add(pending_[i + 1], pending_[i], bottleneck);
    }
    flow_ += bottleneck;
}

EkResult modified_edmonds_karp(const ConnectivityGraph& graph, NodeId s, NodeId t,
                               Amount demand, std::size_t k, Prober& prober) {
    EkPathfinder finder(graph, s, t, demand, k);
    std::variant<ProbeRequest, EkResult> step = finder.next(std::nullopt);
    while (std::holds_alternative<ProbeRequest>(step)) {
        auto reply = prober.probe(std::get<ProbeRequest>(step).path);
        if (!reply) throw InvalidParameter("probe failed on a known channel path");
        step = finder.next(std::move(reply));
    }
    return std::get<EkResult>(step);
}

}  // namespace flash
