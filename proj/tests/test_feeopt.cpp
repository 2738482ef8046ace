#include <gmpxx.h>

#include <set>

#include "doctest.h"
#include "flash/feeopt.hpp"
#include "flash/flowpath.hpp"
#include "flash/oracle.hpp"
#include "flash/rng.hpp"
#include "flash/topology.hpp"

using namespace flash;

namespace {

void add_hop(SplitProblem& prob, NodeId u, NodeId v, Amount cap, std::uint64_t rate_ppm,
             Amount base = 0) {
    prob.capacities.set(u, v, cap);
    prob.fees[{u, v}] = FeeSchedule{base, rate_ppm};
}

mpq_class as_rational(const std::string& text) {
    mpq_class q(text);
    q.canonicalize();
    return q;
}

// Random problem over s=0, t=1, intermediates 2..5. Keeps the distinct
// unordered channel count at or below eight.
SplitProblem random_split(Rng& rng) {
    while (true) {
        std::size_t want = 2 + rng.below(3);
        std::set<Path> uniq;
        for (int tries = 0; tries < 64 && uniq.size() < want; ++tries) {
            std::vector<NodeId> mids{2, 3, 4, 5};
            rng.shuffle(mids);
            Path p{0};
            for (std::size_t i = 0; i < rng.below(3); ++i) p.push_back(mids[i]);
            p.push_back(1);
            uniq.insert(p);
        }

        SplitProblem prob;
        std::set<std::pair<NodeId, NodeId>> ordered;
        std::set<std::pair<NodeId, NodeId>> channels;
        for (const Path& p : uniq) {
            for (std::size_t i = 0; i + 1 < p.size(); ++i) {
                ordered.insert({p[i], p[i + 1]});
                channels.insert({std::min(p[i], p[i + 1]), std::max(p[i], p[i + 1])});
            }
        }
        if (channels.size() > 8) continue;
        for (auto [u, v] : ordered) {
            add_hop(prob, u, v, static_cast<Amount>(rng.below(51)), rng.below(60001));
            if (!ordered.count({v, u}) && rng.chance(0.5))
                add_hop(prob, v, u, static_cast<Amount>(rng.below(51)), rng.below(60001));
        }
        for (const Path& p : uniq) {
            Amount bottleneck = std::numeric_limits<Amount>::max();
            for (std::size_t i = 0; i + 1 < p.size(); ++i)
                bottleneck = std::min(bottleneck, *prob.capacities.get(p[i], p[i + 1]));
            prob.paths.add(p, bottleneck);
        }
        prob.demand = 1 + static_cast<Amount>(rng.below(40));
        return prob;
    }
}

}  // namespace

TEST_CASE("single path allocation is forced") {
    SplitProblem prob;
    prob.paths.add({0, 2, 1}, 100);
    add_hop(prob, 0, 2, 100, 10'000);
    add_hop(prob, 2, 1, 100, 0);
    prob.demand = 60;

    SplitSolution sol = solve_min_fee_split(prob);
    REQUIRE(sol.feasible);
    CHECK(sol.allocation.amounts == std::vector<Amount>{60});
    CHECK(sol.optimum == "3/5");  // 60 * 1%
    CHECK(sol.cost == 1);

    prob.fees[{0, 2}].rate_ppm = 0;
    SplitSolution free_sol = solve_min_fee_split(prob);
    REQUIRE(free_sol.feasible);
    CHECK(free_sol.optimum == "0");
    CHECK(free_sol.cost == 0);
}

TEST_CASE("two disjoint paths saturate the cheaper one") {
    SplitProblem prob;
    prob.paths.add({0, 2, 1}, 50);
    prob.paths.add({0, 3, 1}, 50);
    add_hop(prob, 0, 2, 50, 10'000);  // 1% path
    add_hop(prob, 2, 1, 50, 0);
    add_hop(prob, 0, 3, 50, 20'000);  // 2% path
    add_hop(prob, 3, 1, 50, 0);
    prob.demand = 60;

    SplitSolution sol = solve_min_fee_split(prob);
    REQUIRE(sol.feasible);
    CHECK(sol.allocation.amounts == std::vector<Amount>{50, 10});
    CHECK(sol.optimum == "7/10");  // 0.5 + 0.2
    CHECK(sol.cost == 1);

    auto vertex = oracle::lp_vertex_optimum(prob);
    REQUIRE(vertex.has_value());
    CHECK(*vertex == sol.optimum);
    auto grid = oracle::integer_grid_optimum(prob);
    REQUIRE(grid.has_value());
    CHECK(*grid == 1);
}

TEST_CASE("shared channel blocks same-direction paths and cancels opposed ones") {
    // Both paths cross (2,3) forward: combined flow is capped at 40 < 60.
    SplitProblem same;
    same.paths.add({0, 2, 3, 1}, 40);
    same.paths.add({0, 4, 2, 3, 5, 1}, 40);
    add_hop(same, 0, 2, 100, 1'000);
    add_hop(same, 2, 3, 40, 1'000);
    add_hop(same, 3, 1, 100, 1'000);
    add_hop(same, 0, 4, 100, 1'000);
    add_hop(same, 4, 2, 100, 1'000);
    add_hop(same, 3, 5, 100, 1'000);
    add_hop(same, 5, 1, 100, 1'000);
    same.demand = 60;

    SplitSolution blocked = solve_min_fee_split(same);
    CHECK_FALSE(blocked.feasible);
    CHECK(blocked.optimum.empty());
    CHECK_FALSE(oracle::lp_vertex_optimum(same).has_value());
    CHECK_FALSE(oracle::integer_grid_optimum(same).has_value());

    // Second path crosses (3,2), so the net flow over (2,3) cancels out.
    SplitProblem opposed;
    opposed.paths.add({0, 2, 3, 1}, 40);
    opposed.paths.add({0, 3, 2, 1}, 40);
    add_hop(opposed, 0, 2, 100, 1'000);
    add_hop(opposed, 2, 3, 40, 1'000);
    add_hop(opposed, 3, 1, 100, 1'000);
    add_hop(opposed, 0, 3, 100, 1'000);
    add_hop(opposed, 3, 2, 40, 1'000);
    add_hop(opposed, 2, 1, 100, 1'000);
    opposed.demand = 60;

    SplitSolution open = solve_min_fee_split(opposed);
    REQUIRE(open.feasible);
    Amount total = 0;
    for (Amount a : open.allocation.amounts) total += a;
    CHECK(total == 60);
    CHECK(allocation_feasible(opposed, open.allocation.amounts));
    auto vertex = oracle::lp_vertex_optimum(opposed);
    REQUIRE(vertex.has_value());
    CHECK(*vertex == open.optimum);
}

TEST_CASE("allocation cost sums hop fees with exact ceiling") {
    SplitProblem prob;
    prob.paths.add({0, 2, 1}, 200);
    add_hop(prob, 0, 2, 200, 10'000);  // 1%
    add_hop(prob, 2, 1, 200, 20'000);  // 2%
    prob.demand = 100;
    CHECK(allocation_cost(prob, {100}) == 3);

    prob.fees[{0, 2}].rate_ppm = 0;
    prob.fees[{2, 1}].rate_ppm = 0;
    CHECK(allocation_cost(prob, {100}) == 0);

    // Base fees count once per used path hop; unused paths contribute nothing.
    SplitProblem based;
    based.paths.add({0, 2, 1}, 50);
    based.paths.add({0, 3, 1}, 50);
    add_hop(based, 0, 2, 50, 0, 2);
    add_hop(based, 2, 1, 50, 0, 3);
    add_hop(based, 0, 3, 50, 0, 100);
    add_hop(based, 3, 1, 50, 0, 100);
    based.demand = 40;
    CHECK(allocation_cost(based, {40, 0}) == 5);
    CHECK(allocation_cost(based, {0, 40}) == 200);

    // Fractional rate part rounds up.
    SplitProblem frac;
    frac.paths.add({0, 2, 1}, 50);
    add_hop(frac, 0, 2, 50, 1);  // one part per million
    add_hop(frac, 2, 1, 50, 0);
    frac.demand = 3;
    CHECK(allocation_cost(frac, {3}) == 1);
}

TEST_CASE("allocation cost rejects invalid allocations") {
    SplitProblem prob;
    prob.paths.add({0, 2, 1}, 50);
    add_hop(prob, 0, 2, 50, 1'000);
    add_hop(prob, 2, 1, 50, 1'000);
    prob.demand = 20;

    CHECK_THROWS_AS(allocation_cost(prob, {}), InvalidParameter);            // wrong arity
    CHECK_THROWS_AS(allocation_cost(prob, {19}), InvalidParameter);          // demand miss
    CHECK_THROWS_AS(allocation_cost(prob, {-5}), InvalidParameter);          // negative
    prob.demand = 60;
    CHECK_THROWS_AS(allocation_cost(prob, {60}), InvalidParameter);          // over capacity
    CHECK_FALSE(allocation_feasible(prob, {60}));
}

TEST_CASE("allocation feasibility nets opposed directions") {
    SplitProblem prob;
    prob.paths.add({0, 2, 3, 1}, 10);
    prob.paths.add({0, 3, 2, 1}, 10);
    add_hop(prob, 0, 2, 100, 0);
    add_hop(prob, 2, 3, 100, 0);
    add_hop(prob, 3, 1, 100, 0);
    add_hop(prob, 0, 3, 100, 0);
    add_hop(prob, 3, 2, 0, 0);  // empty reverse direction
    add_hop(prob, 2, 1, 100, 0);
    prob.demand = 40;

    // Alone, the second path would need capacity on (3,2); netted against
    // the first it may carry at most as much as the first sends forward.
    CHECK(allocation_feasible(prob, {20, 20}));
    CHECK(allocation_feasible(prob, {30, 10}));
    CHECK_FALSE(allocation_feasible(prob, {10, 30}));
}

TEST_CASE("sequential fill walks paths in discovery order") {
    SplitProblem prob;
    prob.paths.add({0, 2, 1}, 30);
    prob.paths.add({0, 3, 1}, 40);
    add_hop(prob, 0, 2, 30, 50'000);
    add_hop(prob, 2, 1, 30, 0);
    add_hop(prob, 0, 3, 40, 1'000);
    add_hop(prob, 3, 1, 40, 0);
    prob.demand = 50;

    SplitSolution seq = sequential_fill_split(prob);
    REQUIRE(seq.feasible);
    CHECK(seq.allocation.amounts == std::vector<Amount>{30, 20});
    // 30 * 5% + 20 * 0.1% = 1.5 + 0.02, ceil = 2
    CHECK(seq.cost == 2);

    // The LP puts everything it can on the cheap second path instead.
    SplitSolution opt = solve_min_fee_split(prob);
    REQUIRE(opt.feasible);
    CHECK(opt.allocation.amounts == std::vector<Amount>{10, 40});
    CHECK(opt.cost <= seq.cost);

    prob.demand = 80;
    CHECK_FALSE(sequential_fill_split(prob).feasible);
}

TEST_CASE("solver edge cases") {
    SplitProblem empty;
    empty.demand = 10;
    CHECK_FALSE(solve_min_fee_split(empty).feasible);

    SplitProblem prob;
    prob.paths.add({0, 2, 1}, 50);
    add_hop(prob, 0, 2, 50, 1'000);
    add_hop(prob, 2, 1, 50, 1'000);
    prob.demand = 0;
    CHECK_THROWS_AS(solve_min_fee_split(prob), InvalidParameter);

    prob.demand = 10;
    prob.capacities = CapacityMatrix{};  // missing hop entries
    CHECK_THROWS_AS(solve_min_fee_split(prob), InvalidParameter);
}

TEST_CASE("random instances agree with the vertex and grid references") {
    Rng rng(0x5eedf0e1);
    int feasible_seen = 0, infeasible_seen = 0;
    for (int trial = 0; trial < 120; ++trial) {
        SplitProblem prob = random_split(rng);
        SplitSolution sol = solve_min_fee_split(prob);
        auto vertex = oracle::lp_vertex_optimum(prob);
        auto grid = oracle::integer_grid_optimum(prob);

        if (sol.feasible) {
            ++feasible_seen;
            REQUIRE(vertex.has_value());
            CHECK(sol.optimum == *vertex);
            CHECK(allocation_feasible(prob, sol.allocation.amounts));
            REQUIRE(grid.has_value());
            CHECK(sol.cost >= *grid);
            CHECK(sol.cost <= *grid + 1);
            mpq_class opt = as_rational(*vertex);
            CHECK(mpq_class(sol.cost) - opt <= 1);
            CHECK(opt <= mpq_class(sol.cost));
        } else {
            ++infeasible_seen;
            // Continuous infeasibility, or a genuine integer-granularity gap.
            CHECK((!vertex.has_value() || !grid.has_value()));
        }
    }
    CHECK(feasible_seen > 20);
    CHECK(infeasible_seen > 5);
}

TEST_CASE("raising a capacity never raises the optimum") {
    Rng rng(0xcafe0002);
    int compared = 0;
    for (int trial = 0; trial < 40; ++trial) {
        SplitProblem prob = random_split(rng);
        SplitSolution before = solve_min_fee_split(prob);
        if (!before.feasible) continue;

        auto entries = prob.capacities.entries();
        std::size_t idx = rng.below(entries.size());
        auto it = entries.begin();
        std::advance(it, idx);
        SplitProblem wider = prob;
        wider.capacities.set(it->first.first, it->first.second, it->second + 10);

        SplitSolution after = solve_min_fee_split(wider);
        REQUIRE(after.feasible);
        CHECK(as_rational(after.optimum) <= as_rational(before.optimum));
        ++compared;
    }
    CHECK(compared > 10);
}

TEST_CASE("optimum scales linearly with demand and capacities") {
    Rng rng(0xbeef0003);
    int compared = 0;
    for (int trial = 0; trial < 40; ++trial) {
        SplitProblem prob = random_split(rng);
        SplitSolution base = solve_min_fee_split(prob);
        if (!base.feasible) continue;

        SplitProblem scaled = prob;
        for (const auto& [key, cap] : prob.capacities.entries())
            scaled.capacities.set(key.first, key.second, cap * 7);
        scaled.demand = prob.demand * 7;

        SplitSolution big = solve_min_fee_split(scaled);
        REQUIRE(big.feasible);
        CHECK(as_rational(big.optimum) == 7 * as_rational(base.optimum));
        ++compared;
    }
    CHECK(compared > 10);
}

TEST_CASE("cost on experiment-style fees matches direct recomputation") {
    Topology topo = watts_strogatz(30, 4, 0.3, 77);
    fund_uniform(topo, 2000, 3000, 78);
    assign_fees(topo, FeeDistribution{}, 79);

    auto paths = yen_k_shortest(topo.connectivity(), 0, 15, 2);
    REQUIRE(paths.size() == 2);

    SplitProblem prob;
    for (const Path& p : paths) {
        Amount bottleneck = std::numeric_limits<Amount>::max();
        for (std::size_t i = 0; i + 1 < p.size(); ++i) {
            NodeId u = p[i], v = p[i + 1];
            prob.capacities.set(u, v, topo.balance(u, v));
            prob.capacities.set(v, u, topo.balance(v, u));
            prob.fees[{u, v}] = topo.fee(u, v);
            prob.fees[{v, u}] = topo.fee(v, u);
            bottleneck = std::min(bottleneck, topo.balance(u, v));
        }
        prob.paths.add(p, bottleneck);
    }
    prob.demand = 40;

    SplitSolution sol = solve_min_fee_split(prob);
    REQUIRE(sol.feasible);

    // Recompute the fee straight from the topology's schedules.
    mpz_class rate_num = 0;
    Amount bases = 0;
    for (std::size_t p = 0; p < prob.paths.size(); ++p) {
        Amount r = sol.allocation.amounts[p];
        if (r == 0) continue;
        const Path& path = prob.paths.paths[p];
        for (std::size_t i = 0; i + 1 < path.size(); ++i) {
            const FeeSchedule& fee = topo.fee(path[i], path[i + 1]);
            bases += fee.base;
            rate_num += mpz_class(static_cast<unsigned long>(fee.rate_ppm)) *
                        static_cast<long>(r);
        }
    }
    mpz_class units = (rate_num + kPpmScale - 1) / kPpmScale;
    CHECK(sol.cost == bases + static_cast<Amount>(units.get_si()));
    CHECK(sol.cost == allocation_cost(prob, sol.allocation.amounts));
}
