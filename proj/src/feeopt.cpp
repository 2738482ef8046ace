#include "flash/feeopt.hpp"

#include <gmpxx.h>

#include <algorithm>
#include <optional>

namespace flash {

namespace {

struct Program {
    // Constraint rows: coefficient per path, right-hand side capacity.
    std::vector<std::vector<int>> rows;
    std::vector<Amount> rhs;
    std::vector<mpq_class> costs;  // rate sum per path
};

// Ordered channel pairs used forward by at least one path get a row; pairs
// used only in reverse are slack by C >= 0.
Program build_program(const SplitProblem& problem) {
    const auto& paths = problem.paths.paths;
    Program prog;
    std::map<std::pair<NodeId, NodeId>, std::size_t> row_of;
    for (std::size_t p = 0; p < paths.size(); ++p) {
        mpq_class rate_sum = 0;
        for (std::size_t i = 0; i + 1 < paths[p].size(); ++i) {
            auto uv = std::make_pair(paths[p][i], paths[p][i + 1]);
            auto cap = problem.capacities.get(uv.first, uv.second);
            if (!cap) throw InvalidParameter("path hop without probed capacity");
            auto fee = problem.fees.find(uv);
            if (fee == problem.fees.end())
                throw InvalidParameter("path hop without fee entry");
            rate_sum += mpq_class(static_cast<unsigned long>(fee->second.rate_ppm),
                                  static_cast<unsigned long>(kPpmScale));
            if (!row_of.count(uv)) {
                row_of[uv] = prog.rows.size();
                prog.rows.emplace_back(paths.size(), 0);
                prog.rhs.push_back(*cap);
            }
        }
        prog.costs.push_back(rate_sum);
    }
    for (std::size_t p = 0; p < paths.size(); ++p) {
        for (std::size_t i = 0; i + 1 < paths[p].size(); ++i) {
            auto uv = std::make_pair(paths[p][i], paths[p][i + 1]);
            auto vu = std::make_pair(paths[p][i + 1], paths[p][i]);
            prog.rows[row_of.at(uv)][p] += 1;
            auto rev = row_of.find(vu);
            if (rev != row_of.end()) prog.rows[rev->second][p] -= 1;
        }
    }
    return prog;
}

// Dense two-phase simplex, Bland's rule, exact rationals. Rows are the
// <= constraints (rhs >= 0 by construction) plus one equality for the
// demand, which gets the only artificial variable.
struct SimplexResult {
    bool feasible = false;
    std::vector<mpq_class> x;
    mpq_class objective;
};

class Simplex {
  public:
    Simplex(const Program& prog, Amount demand) {
        n_ = prog.costs.size();
        m_ = prog.rows.size() + 1;
        cols_ = n_ + (m_ - 1) + 1;  // structurals, slacks, one artificial
        art_col_ = cols_ - 1;
        tab_.assign(m_, std::vector<mpq_class>(cols_ + 1, 0));
        basis_.assign(m_, 0);
        for (std::size_t i = 0; i + 1 < m_; ++i) {
            for (std::size_t j = 0; j < n_; ++j) tab_[i][j] = prog.rows[i][j];
            tab_[i][n_ + i] = 1;
            tab_[i][cols_] = prog.rhs[i];
            basis_[i] = n_ + i;
        }
        std::size_t eq = m_ - 1;
        for (std::size_t j = 0; j < n_; ++j) tab_[eq][j] = 1;
        tab_[eq][art_col_] = 1;
        tab_[eq][cols_] = demand;
        basis_[eq] = art_col_;
        costs_ = prog.costs;
    }

    SimplexResult run() {
        // Phase 1: minimize the artificial variable.
        std::vector<mpq_class> phase1(cols_, 0);
        phase1[art_col_] = 1;
        optimize(phase1, false);
        if (value(phase1) != 0) return SimplexResult{};
        pivot_artificial_out();

        optimize(costs_padded(), true);
        SimplexResult result;
        result.feasible = true;
        result.x.assign(n_, 0);
        for (std::size_t i = 0; i < m_; ++i)
            if (basis_[i] < n_) result.x[basis_[i]] = tab_[i][cols_];
        result.objective = 0;
        for (std::size_t j = 0; j < n_; ++j) result.objective += costs_[j] * result.x[j];
        return result;
    }

  private:
    std::vector<mpq_class> costs_padded() const {
        std::vector<mpq_class> c(cols_, 0);
        for (std::size_t j = 0; j < n_; ++j) c[j] = costs_[j];
        return c;
    }

    mpq_class value(const std::vector<mpq_class>& c) const {
        mpq_class v = 0;
        for (std::size_t i = 0; i < m_; ++i) v += c[basis_[i]] * tab_[i][cols_];
        return v;
    }

    // Reduced cost of column j under cost vector c.
    mpq_class reduced(const std::vector<mpq_class>& c, std::size_t j) const {
        mpq_class r = c[j];
        for (std::size_t i = 0; i < m_; ++i) r -= c[basis_[i]] * tab_[i][j];
        return r;
    }

    void optimize(const std::vector<mpq_class>& c, bool ban_artificial) {
        while (true) {
            std::size_t enter = cols_;
            for (std::size_t j = 0; j < cols_; ++j) {  // Bland: first improving column
                if (ban_artificial && j == art_col_) continue;
                if (is_basic(j)) continue;
                if (reduced(c, j) < 0) {
                    enter = j;
                    break;
                }
            }
            if (enter == cols_) return;

            std::size_t leave = m_;
            mpq_class best_ratio;
            for (std::size_t i = 0; i < m_; ++i) {
                if (tab_[i][enter] <= 0) continue;
                mpq_class ratio = tab_[i][cols_] / tab_[i][enter];
                if (leave == m_ || ratio < best_ratio ||
                    (ratio == best_ratio && basis_[i] < basis_[leave])) {
                    leave = i;
                    best_ratio = ratio;
                }
            }
            if (leave == m_) throw InvalidParameter("unbounded split program");
            pivot(leave, enter);
        }
    }

    bool is_basic(std::size_t j) const {
        return std::find(basis_.begin(), basis_.end(), j) != basis_.end();
    }

    void pivot(std::size_t row, std::size_t col) {
        mpq_class inv = tab_[row][col];
        for (auto& v : tab_[row]) v /= inv;
        for (std::size_t i = 0; i < m_; ++i) {
            if (i == row || tab_[i][col] == 0) continue;
            mpq_class factor = tab_[i][col];
            for (std::size_t j = 0; j <= cols_; ++j) tab_[i][j] -= factor * tab_[row][j];
        }
        basis_[row] = col;
    }

    // A zero-valued artificial may linger in the basis after phase 1;
    // replace it with any nonzero non-artificial column in its row.
    void pivot_artificial_out() {
        for (std::size_t i = 0; i < m_; ++i) {
            if (basis_[i] != art_col_) continue;
            for (std::size_t j = 0; j < art_col_; ++j) {
                if (tab_[i][j] != 0) {
                    pivot(i, j);
                    break;
                }
            }
        }
    }

    std::size_t n_ = 0, m_ = 0, cols_ = 0, art_col_ = 0;
    std::vector<std::vector<mpq_class>> tab_;
    std::vector<std::size_t> basis_;
    std::vector<mpq_class> costs_;
};

std::vector<Amount> net_flows(const Program& prog, const std::vector<Amount>& amounts) {
    std::vector<Amount> net(prog.rows.size(), 0);
    for (std::size_t i = 0; i < prog.rows.size(); ++i)
        for (std::size_t p = 0; p < amounts.size(); ++p)
            net[i] += static_cast<Amount>(prog.rows[i][p]) * amounts[p];
    return net;
}

bool fits(const Program& prog, const std::vector<Amount>& amounts) {
    auto net = net_flows(prog, amounts);
    for (std::size_t i = 0; i < net.size(); ++i)
        if (net[i] > prog.rhs[i]) return false;
    return true;
}

// Floor the rational point, repair any constraint broken by the flooring
// of reverse-offset paths, then hand out the leftover units one at a time
// to the cheapest path that still fits.
std::optional<std::vector<Amount>> integerize(const Program& prog, Amount demand,
                                              const std::vector<mpq_class>& x) {
    std::size_t n = x.size();
    std::vector<Amount> y(n, 0);
    Amount assigned = 0;
    for (std::size_t p = 0; p < n; ++p) {
        mpz_class f = x[p].get_num() / x[p].get_den();
        y[p] = static_cast<Amount>(f.get_si());
        assigned += y[p];
    }

    while (!fits(prog, y)) {
        auto net = net_flows(prog, y);
        std::size_t bad = 0;
        while (net[bad] <= prog.rhs[bad]) ++bad;
        // Shrink the most expensive path crossing the row forward.
        std::size_t victim = n;
        for (std::size_t p = 0; p < n; ++p) {
            if (prog.rows[bad][p] <= 0 || y[p] == 0) continue;
            if (victim == n || prog.costs[p] > prog.costs[victim]) victim = p;
        }
        if (victim == n) return std::nullopt;
        --y[victim];
        --assigned;
    }

    while (assigned < demand) {
        std::size_t pick = n;
        for (std::size_t p = 0; p < n; ++p) {
            ++y[p];
            bool ok = fits(prog, y);
            --y[p];
            if (!ok) continue;
            if (pick == n || prog.costs[p] < prog.costs[pick]) pick = p;
        }
        if (pick == n) return std::nullopt;
        ++y[pick];
        ++assigned;
    }
    return y;
}

}  // namespace

bool allocation_feasible(const SplitProblem& problem, const std::vector<Amount>& amounts) {
    if (amounts.size() != problem.paths.size()) return false;
    Amount total = 0;
    for (Amount a : amounts) {
        if (a < 0) return false;
        total += a;
    }
    if (total != problem.demand) return false;
    Program prog = build_program(problem);
    return fits(prog, amounts);
}

Amount allocation_cost(const SplitProblem& problem, const std::vector<Amount>& amounts) {
    if (!allocation_feasible(problem, amounts))
        throw InvalidParameter("allocation violates split constraints");
    Amount bases = 0;
    __int128 rate_num = 0;
    for (std::size_t p = 0; p < amounts.size(); ++p) {
        if (amounts[p] == 0) continue;
        const Path& path = problem.paths.paths[p];
        for (std::size_t i = 0; i + 1 < path.size(); ++i) {
            const FeeSchedule& fee = problem.fees.at({path[i], path[i + 1]});
            bases += fee.base;
            rate_num += static_cast<__int128>(amounts[p]) *
                        static_cast<__int128>(fee.rate_ppm);
        }
    }
    __int128 scale = kPpmScale;
    Amount rate_part = static_cast<Amount>((rate_num + scale - 1) / scale);
    return bases + rate_part;
}

SplitSolution solve_min_fee_split(const SplitProblem& problem) {
    if (problem.demand <= 0) throw InvalidParameter("demand must be positive");
    if (problem.paths.size() == 0) return SplitSolution{};
    Program prog = build_program(problem);

    Simplex simplex(prog, problem.demand);
    SimplexResult lp = simplex.run();
    if (!lp.feasible) return SplitSolution{};

    auto ints = integerize(prog, problem.demand, lp.x);
    if (!ints) return SplitSolution{};

    SplitSolution out;
    out.feasible = true;
    out.allocation.amounts = std::move(*ints);
    mpq_class optimum = lp.objective;
    optimum.canonicalize();
    out.optimum = optimum.get_str();
    out.cost = allocation_cost(problem, out.allocation.amounts);
    return out;
}

SplitSolution sequential_fill_split(const SplitProblem& problem) {
    if (problem.demand <= 0) throw InvalidParameter("demand must be positive");
    SplitSolution out;
    std::vector<Amount> amounts(problem.paths.size(), 0);
    Amount remaining = problem.demand;
    for (std::size_t p = 0; p < problem.paths.size() && remaining > 0; ++p) {
        Amount take = std::min(remaining, problem.paths.bottlenecks[p]);
        amounts[p] = take;
        remaining -= take;
    }
    if (remaining > 0) return out;
    out.feasible = true;
    out.allocation.amounts = std::move(amounts);
    out.cost = allocation_cost(problem, out.allocation.amounts);
    return out;
}

}  // namespace flash
