#include "flash/oracle.hpp"

#include <gmpxx.h>

#include <algorithm>
#include <deque>
#include <set>

namespace flash::oracle {

Amount max_flow(const CapacityMap& capacities, NodeId s, NodeId t) {
    if (s == t) return 0;
    // Residual map seeded with the capacities; reverse entries appear on push.
    CapacityMap residual = capacities;
    std::map<NodeId, std::set<NodeId>> adj;
    for (const auto& [key, cap] : capacities) {
        adj[key.first].insert(key.second);
        adj[key.second].insert(key.first);  // room for the undo edge
    }

    Amount total = 0;
    while (true) {
        std::map<NodeId, NodeId> parent;
        std::deque<NodeId> queue{s};
        parent[s] = s;
        while (!queue.empty() && !parent.count(t)) {
            NodeId u = queue.front();
            queue.pop_front();
            for (NodeId v : adj[u]) {
                if (parent.count(v)) continue;
                auto it = residual.find({u, v});
                if (it == residual.end() || it->second <= 0) continue;
                parent[v] = u;
                queue.push_back(v);
            }
        }
        if (!parent.count(t)) break;

        Amount bottleneck = 0;
        for (NodeId v = t; v != s; v = parent[v]) {
            Amount r = residual[{parent[v], v}];
            if (bottleneck == 0 || r < bottleneck) bottleneck = r;
        }
        for (NodeId v = t; v != s; v = parent[v]) {
            residual[{parent[v], v}] -= bottleneck;
            residual[{v, parent[v]}] += bottleneck;
        }
        total += bottleneck;
    }
    return total;
}

namespace {

void dfs_paths(const ConnectivityGraph& graph, NodeId t, Path& current,
               std::set<NodeId>& visited, std::vector<Path>& out) {
    NodeId u = current.back();
    if (u == t) {
        out.push_back(current);
        return;
    }
    for (NodeId v : graph.neighbors(u)) {
        if (visited.count(v)) continue;
        visited.insert(v);
        current.push_back(v);
        dfs_paths(graph, t, current, visited, out);
        current.pop_back();
        visited.erase(v);
    }
}

}  // namespace

std::vector<Path> all_simple_paths(const ConnectivityGraph& graph, NodeId s, NodeId t) {
    std::vector<Path> out;
    if (s == t || !graph.has_node(s)) return out;
    Path current{s};
    std::set<NodeId> visited{s};
    dfs_paths(graph, t, current, visited, out);
    std::sort(out.begin(), out.end(), [](const Path& a, const Path& b) {
        if (a.size() != b.size()) return a.size() < b.size();
        return a < b;
    });
    return out;
}

namespace {

// Net-flow constraint system: one row per known ordered pair, coefficient
// +1 for a path crossing it forward, -1 for a path crossing it backward.
struct ConstraintSystem {
    std::vector<std::vector<long>> rows;
    std::vector<Amount> rhs;
    std::vector<mpq_class> weights;  // rate sum per path, exact
};

ConstraintSystem build_constraints(const SplitProblem& problem) {
    ConstraintSystem sys;
    const auto& paths = problem.paths.paths;
    std::map<std::pair<NodeId, NodeId>, std::size_t> index;
    for (const auto& entry : problem.capacities.entries()) {
        index[entry.first] = sys.rows.size();
        sys.rows.emplace_back(paths.size(), 0);
        sys.rhs.push_back(entry.second);
    }
    for (std::size_t p = 0; p < paths.size(); ++p) {
        mpq_class rate_sum = 0;
        for (std::size_t i = 0; i + 1 < paths[p].size(); ++i) {
            NodeId u = paths[p][i], v = paths[p][i + 1];
            auto fwd = index.find({u, v});
            if (fwd == index.end())
                throw InvalidParameter("oracle: hop without capacity entry");
            sys.rows[fwd->second][p] += 1;
            auto rev = index.find({v, u});
            if (rev != index.end()) sys.rows[rev->second][p] -= 1;
            auto fee = problem.fees.find({u, v});
            if (fee == problem.fees.end())
                throw InvalidParameter("oracle: hop without fee entry");
            rate_sum += mpq_class(static_cast<unsigned long>(fee->second.rate_ppm),
                                  static_cast<unsigned long>(kPpmScale));
        }
        sys.weights.push_back(rate_sum);
    }
    return sys;
}

bool satisfies(const ConstraintSystem& sys, const std::vector<mpq_class>& r) {
    for (const auto& v : r)
        if (v < 0) return false;
    for (std::size_t i = 0; i < sys.rows.size(); ++i) {
        mpq_class net = 0;
        for (std::size_t p = 0; p < r.size(); ++p) net += sys.rows[i][p] * r[p];
        if (net > sys.rhs[i]) return false;
    }
    return true;
}

// Solves square system M r = c by Gaussian elimination with partial
// pivoting on nonzero entries; nullopt when singular.
std::optional<std::vector<mpq_class>> solve_square(std::vector<std::vector<mpq_class>> m,
                                                   std::vector<mpq_class> c) {
    std::size_t n = c.size();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        while (pivot < n && m[pivot][col] == 0) ++pivot;
        if (pivot == n) return std::nullopt;
        std::swap(m[col], m[pivot]);
        std::swap(c[col], c[pivot]);
        for (std::size_t row = 0; row < n; ++row) {
            if (row == col || m[row][col] == 0) continue;
            mpq_class factor = m[row][col] / m[col][col];
            for (std::size_t j = col; j < n; ++j) m[row][j] -= factor * m[col][j];
            c[row] -= factor * c[col];
        }
    }
    std::vector<mpq_class> r(n);
    for (std::size_t i = 0; i < n; ++i) r[i] = c[i] / m[i][i];
    return r;
}

}  // namespace

std::optional<std::string> lp_vertex_optimum(const SplitProblem& problem) {
    std::size_t paths = problem.paths.size();
    if (paths == 0 || problem.demand <= 0) return std::nullopt;
    ConstraintSystem sys = build_constraints(problem);

    // Candidate tight constraints beyond the always-tight demand equality.
    std::vector<std::vector<mpq_class>> cand_lhs;
    std::vector<mpq_class> cand_rhs;
    for (std::size_t i = 0; i < sys.rows.size(); ++i) {
        std::vector<mpq_class> row(paths);
        for (std::size_t p = 0; p < paths; ++p) row[p] = sys.rows[i][p];
        cand_lhs.push_back(std::move(row));
        cand_rhs.push_back(sys.rhs[i]);
    }
    for (std::size_t p = 0; p < paths; ++p) {
        std::vector<mpq_class> row(paths, 0);
        row[p] = 1;
        cand_lhs.push_back(std::move(row));
        cand_rhs.push_back(0);
    }

    std::optional<mpq_class> best;
    // Enumerate all (paths-1)-subsets of the candidates.
    auto visit = [&](const std::vector<std::size_t>& subset) {
        std::vector<std::vector<mpq_class>> m;
        std::vector<mpq_class> c;
        m.emplace_back(paths, 1);  // demand equality
        c.emplace_back(problem.demand);
        for (std::size_t idx : subset) {
            m.push_back(cand_lhs[idx]);
            c.push_back(cand_rhs[idx]);
        }
        auto r = solve_square(std::move(m), std::move(c));
        if (!r || !satisfies(sys, *r)) return;
        mpq_class obj = 0;
        for (std::size_t p = 0; p < paths; ++p) obj += sys.weights[p] * (*r)[p];
        if (!best || obj < *best) best = obj;
    };

    std::size_t need = paths - 1;
    std::size_t total = cand_lhs.size();
    if (need == 0) {
        visit({});
    } else if (total >= need) {
        std::vector<std::size_t> subset(need);
        for (std::size_t i = 0; i < need; ++i) subset[i] = i;
        while (true) {
            visit(subset);
            std::size_t i = need;
            while (i > 0 && subset[i - 1] == total - need + i - 1) --i;
            if (i == 0) break;
            ++subset[i - 1];
            for (std::size_t j = i; j < need; ++j) subset[j] = subset[j - 1] + 1;
        }
    }

    if (!best) return std::nullopt;
    best->canonicalize();
    return best->get_str();
}

std::optional<Amount> integer_grid_optimum(const SplitProblem& problem) {
    std::size_t paths = problem.paths.size();
    if (paths == 0 || problem.demand <= 0) return std::nullopt;
    ConstraintSystem sys = build_constraints(problem);

    std::vector<Amount> amounts(paths, 0);
    std::optional<Amount> best;

    auto cost_of = [&](const std::vector<Amount>& a) {
        Amount bases = 0;
        mpz_class rate_num = 0;
        for (std::size_t p = 0; p < paths; ++p) {
            if (a[p] == 0) continue;
            const Path& path = problem.paths.paths[p];
            mpz_class ppm_sum = 0;
            for (std::size_t i = 0; i + 1 < path.size(); ++i) {
                const FeeSchedule& fee = problem.fees.at({path[i], path[i + 1]});
                bases += fee.base;
                ppm_sum += static_cast<unsigned long>(fee.rate_ppm);
            }
            rate_num += ppm_sum * static_cast<long>(a[p]);
        }
        mpz_class q, rem;
        mpz_cdiv_qr(q.get_mpz_t(), rem.get_mpz_t(), rate_num.get_mpz_t(),
                    mpz_class(kPpmScale).get_mpz_t());
        return bases + static_cast<Amount>(q.get_si());
    };

    auto feasible = [&]() {
        for (std::size_t i = 0; i < sys.rows.size(); ++i) {
            Amount net = 0;
            for (std::size_t p = 0; p < paths; ++p)
                net += static_cast<Amount>(sys.rows[i][p]) * amounts[p];
            if (net > sys.rhs[i]) return false;
        }
        return true;
    };

    // Enumerate compositions of the demand across paths.
    auto recurse = [&](auto&& self, std::size_t p, Amount remaining) -> void {
        if (p + 1 == paths) {
            amounts[p] = remaining;
            if (feasible()) {
                Amount c = cost_of(amounts);
                if (!best || c < *best) best = c;
            }
            amounts[p] = 0;
            return;
        }
        for (Amount give = 0; give <= remaining; ++give) {
            amounts[p] = give;
            self(self, p + 1, remaining - give);
        }
        amounts[p] = 0;
    };
    recurse(recurse, 0, problem.demand);
    return best;
}

}  // namespace flash::oracle
