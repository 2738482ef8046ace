#include "doctest.h"

#include <cstdio>
#include <filesystem>
#include <set>

#include "flash/rng.hpp"
#include "flash/topology.hpp"

using namespace flash;

namespace {

struct TempFile {
    std::string path;
    explicit TempFile(const std::string& name) {
        path = (std::filesystem::temp_directory_path() / name).string();
    }
    ~TempFile() { std::remove(path.c_str()); }
};

Topology triangle() {
    Topology t;
    t.open_channel(0, 1);
    t.open_channel(1, 2);
    t.open_channel(0, 2);
    return t;
}

}  // namespace

TEST_CASE("channel opening is bidirectional and validated") {
    Topology t = triangle();
    CHECK(t.node_count() == 3);
    CHECK(t.channel_count() == 3);
    CHECK(t.channels().size() == 6);
    CHECK(t.has_channel(0, 1));
    CHECK(t.has_channel(1, 0));
    CHECK(t.balance(0, 1) == 0);
    CHECK_THROWS_AS(t.open_channel(1, 1), InvalidParameter);
    CHECK_THROWS_AS(t.open_channel(0, 1), InvalidParameter);
    CHECK_THROWS_AS(t.open_channel(1, 0), InvalidParameter);
    CHECK_THROWS_AS(t.balance(0, 3), InvalidParameter);
}

TEST_CASE("payment delta moves funds and conserves channel totals") {
    Topology t = triangle();
    t.set_balance(0, 1, 4);
    t.set_balance(1, 0, 2);

    CHECK(t.apply_payment_delta(0, 1, 1));
    CHECK(t.balance(0, 1) == 3);
    CHECK(t.balance(1, 0) == 3);

    CHECK(t.apply_payment_delta(0, 1, 0));
    CHECK(t.balance(0, 1) == 3);

    CHECK_FALSE(t.apply_payment_delta(0, 1, 5));
    CHECK(t.balance(0, 1) == 3);
    CHECK(t.balance(1, 0) == 3);

    auto totals = t.channel_totals();
    CHECK(totals.at({0, 1}) == 6);
}

TEST_CASE("withdraw and deposit are the hold primitives") {
    Topology t = triangle();
    t.set_balance(0, 1, 10);
    CHECK(t.withdraw(0, 1, 7));
    CHECK(t.balance(0, 1) == 3);
    CHECK_FALSE(t.withdraw(0, 1, 4));
    CHECK(t.balance(0, 1) == 3);
    t.deposit(0, 1, 7);
    CHECK(t.balance(0, 1) == 10);
    CHECK_THROWS_AS(t.withdraw(0, 1, -1), InvalidParameter);
    CHECK_THROWS_AS(t.set_balance(0, 1, -1), InvalidParameter);
}

TEST_CASE("fee schedules validate and round trip") {
    Topology t = triangle();
    FeeSchedule f{2, 5000};
    t.set_fee(0, 1, f);
    CHECK(t.fee(0, 1) == f);
    CHECK(t.fee(1, 0) == FeeSchedule{});
    CHECK_THROWS_AS(t.set_fee(0, 1, FeeSchedule{-1, 0}), InvalidParameter);
    CHECK_THROWS_AS(t.set_fee(0, 1, FeeSchedule{0, kPpmScale}), InvalidParameter);
}

TEST_CASE("watts_strogatz keeps the ring edge count") {
    Topology t = watts_strogatz(50, 4, 0.3, 1);
    CHECK(t.node_count() == 50);
    CHECK(t.channel_count() == 100);
    CHECK(t.channels().size() == 200);

    Topology big = watts_strogatz(100, 4, 0.3, 7);
    CHECK(big.node_count() == 100);
    CHECK(big.channel_count() == 200);
}

TEST_CASE("watts_strogatz with beta 0 is the pure ring") {
    Topology t = watts_strogatz(3, 2, 0.0, 5);
    CHECK(t.node_count() == 3);
    CHECK(t.channels().size() == 6);
    CHECK(t.has_channel(0, 1));
    CHECK(t.has_channel(1, 2));
    CHECK(t.has_channel(2, 0));

    Topology ring = watts_strogatz(8, 2, 0.0, 5);
    for (NodeId u = 0; u < 8; ++u) CHECK(ring.has_channel(u, (u + 1) % 8));
    CHECK(ring.channel_count() == 8);
}

TEST_CASE("watts_strogatz output is connected and deterministic") {
    for (std::uint64_t seed : {1ULL, 2ULL, 3ULL, 99ULL}) {
        Topology t = watts_strogatz(50, 4, 0.9, seed);
        auto g = t.connectivity();
        for (NodeId v : g.nodes()) CHECK(g.reachable(0, v));
    }
    Topology a = watts_strogatz(50, 4, 0.3, 42);
    Topology b = watts_strogatz(50, 4, 0.3, 42);
    CHECK(a.channels().size() == b.channels().size());
    auto ita = a.channels().begin();
    for (const auto& [key, state] : b.channels()) {
        CHECK(ita->first == key);
        ++ita;
    }
}

TEST_CASE("watts_strogatz rejects bad parameters") {
    CHECK_THROWS_AS(watts_strogatz(2, 2, 0.3, 1), InvalidParameter);
    CHECK_THROWS_AS(watts_strogatz(10, 3, 0.3, 1), InvalidParameter);
    CHECK_THROWS_AS(watts_strogatz(10, 10, 0.3, 1), InvalidParameter);
    CHECK_THROWS_AS(watts_strogatz(10, 4, 1.5, 1), InvalidParameter);
}

TEST_CASE("fund_uniform splits totals evenly") {
    Topology t = watts_strogatz(50, 4, 0.3, 1);
    fund_uniform(t, 100000, 150000, 9);
    for (const auto& [key, state] : t.channels()) {
        // An odd total puts the extra unit on one side, so the upper
        // bound is inclusive at high/2.
        CHECK(state.balance >= 50000);
        CHECK(state.balance <= 75000);
    }
    for (const auto& [key, total] : t.channel_totals()) {
        CHECK(total >= 100000);
        CHECK(total < 150000);
    }

    SUBCASE("degenerate interval [2,3) gives 1/1") {
        Topology tri = triangle();
        fund_uniform(tri, 2, 3, 1);
        for (const auto& [key, state] : tri.channels()) CHECK(state.balance == 1);
    }
    SUBCASE("interval [1000,1001) gives 500/500") {
        Topology tri = triangle();
        fund_uniform(tri, 1000, 1001, 1);
        for (const auto& [key, state] : tri.channels()) CHECK(state.balance == 500);
    }
    SUBCASE("odd totals put the extra unit on the low-to-high direction") {
        Topology tri = triangle();
        fund_uniform(tri, 7, 8, 1);
        CHECK(tri.balance(0, 1) == 4);
        CHECK(tri.balance(1, 0) == 3);
    }
    SUBCASE("same seed funds identically") {
        Topology x = watts_strogatz(20, 4, 0.3, 3);
        Topology y = watts_strogatz(20, 4, 0.3, 3);
        fund_uniform(x, 1000, 1500, 11);
        fund_uniform(y, 1000, 1500, 11);
        for (const auto& [key, state] : x.channels())
            CHECK(state.balance == y.balance(key.first, key.second));
    }
    CHECK_THROWS_AS(fund_uniform(t, 10, 10, 1), InvalidParameter);
    CHECK_THROWS_AS(fund_uniform(t, -1, 10, 1), InvalidParameter);
}

TEST_CASE("scale_capacities multiplies and floors") {
    Topology t = triangle();
    t.set_balance(0, 1, 250);
    t.set_balance(1, 0, 3);
    t.set_balance(1, 2, 7);

    SUBCASE("identity") {
        scale_capacities(t, Ratio{1, 1});
        CHECK(t.balance(0, 1) == 250);
        CHECK(t.balance(1, 2) == 7);
    }
    SUBCASE("factor 10") {
        scale_capacities(t, parse_decimal_ratio("10"));
        CHECK(t.balance(0, 1) == 2500);
        CHECK(t.balance(1, 0) == 30);
    }
    SUBCASE("factor 0.5 floors") {
        scale_capacities(t, parse_decimal_ratio("0.5"));
        CHECK(t.balance(0, 1) == 125);
        CHECK(t.balance(1, 0) == 1);
        CHECK(t.balance(1, 2) == 3);
    }
    CHECK_THROWS_AS(scale_capacities(t, Ratio{0, 1}), InvalidParameter);
}

TEST_CASE("parse_decimal_ratio handles integers and decimals") {
    auto r = parse_decimal_ratio("1.25");
    CHECK(r.num == 125);
    CHECK(r.den == 100);
    r = parse_decimal_ratio("60");
    CHECK(r.num == 60);
    CHECK(r.den == 1);
    CHECK_THROWS_AS(parse_decimal_ratio(""), InvalidParameter);
    CHECK_THROWS_AS(parse_decimal_ratio("abc"), InvalidParameter);
    CHECK_THROWS_AS(parse_decimal_ratio("-2"), InvalidParameter);
    CHECK_THROWS_AS(parse_decimal_ratio("0"), InvalidParameter);
}

TEST_CASE("assign_fees draws rates from the two bands") {
    Topology t = watts_strogatz(50, 4, 0.3, 1);
    assign_fees(t, FeeDistribution{}, 5);
    std::size_t high = 0;
    for (const auto& [key, state] : t.channels()) {
        CHECK(state.fee.base == 0);
        CHECK(state.fee.rate_ppm >= 1000);
        CHECK(state.fee.rate_ppm < 100000);
        if (state.fee.rate_ppm >= 10000) ++high;
    }
    // 10% of 200 directions in expectation; allow generous slack.
    CHECK(high >= 5);
    CHECK(high <= 50);
}

TEST_CASE("connectivity graph reachability") {
    Topology t;
    t.open_channel(0, 1);
    t.open_channel(1, 2);
    t.open_channel(3, 4);
    auto g = t.connectivity();
    CHECK(g.reachable(0, 2));
    CHECK(g.reachable(2, 0));
    CHECK_FALSE(g.reachable(0, 3));
    CHECK(g.has_edge(0, 1));
    CHECK_FALSE(g.has_edge(0, 2));
    CHECK(g.neighbors(1) == std::vector<NodeId>{0, 2});
    CHECK(g.neighbors(99).empty());
}

TEST_CASE("topology file io round trips") {
    Topology t = watts_strogatz(20, 4, 0.3, 3);
    fund_uniform(t, 1000, 1500, 4);
    assign_fees(t, FeeDistribution{}, 5);

    TempFile f("flash_topo_roundtrip.txt");
    save_topology(t, f.path);
    Topology back = load_topology(f.path);

    CHECK(back.channels().size() == t.channels().size());
    for (const auto& [key, state] : t.channels()) {
        CHECK(back.balance(key.first, key.second) == state.balance);
        CHECK(back.fee(key.first, key.second) == state.fee);
    }
}

TEST_CASE("topology loader rejects malformed lines") {
    TempFile f("flash_topo_bad.txt");
    auto write_and_load = [&](const std::string& body) {
        std::FILE* fp = std::fopen(f.path.c_str(), "w");
        std::fputs(body.c_str(), fp);
        std::fclose(fp);
        return load_topology(f.path);
    };

    CHECK_NOTHROW(write_and_load("# comment only\n\n0 1 5 5 0.001 0.001 0 0\n"
                                 "1 2 5 5 0.001 0.001 0 0\n"
                                 "2 0 5 5 0.001 0.001 0 0\n"));
    CHECK_THROWS_AS(write_and_load("0 1 5\n"), ParseError);
    CHECK_THROWS_AS(write_and_load("0 0 5 5 0.001 0.001 0 0\n"), ParseError);
    CHECK_THROWS_AS(write_and_load("0 1 5 5 1.5 0.001 0 0\n"), ParseError);
    CHECK_THROWS_AS(write_and_load("0 1 5 5 0.001 0.001 0 0 junk\n"), ParseError);
    CHECK_THROWS_AS(write_and_load("0 1 5 5 0.001 0.001 0 0\n0 1 5 5 0.001 0.001 0 0\n"),
                    ParseError);
    CHECK_THROWS_AS(load_topology("/nonexistent/topo.txt"), IoError);

    try {
        write_and_load("0 1 5 5 0.001 0.001 0 0\nbogus line\n");
        CHECK(false);
    } catch (const ParseError& e) {
        CHECK(e.line() == 2);
    }
}

TEST_CASE("prune removes dead channels and stub nodes") {
    // 0-1-2 triangle plus a pendant 3 and a zero-fund channel 4-5.
    Topology t = triangle();
    t.open_channel(2, 3);
    t.open_channel(4, 5);
    for (NodeId u : {0u, 1u}) {
        t.set_balance(u, u + 1, 10);
        t.set_balance(u + 1, u, 10);
    }
    t.set_balance(0, 2, 10);
    t.set_balance(2, 0, 10);
    t.set_balance(2, 3, 10);
    t.set_balance(3, 2, 10);

    Topology once = prune_topology(t, false);
    CHECK(once.channel_count() == 3);
    CHECK_FALSE(once.has_channel(2, 3));
    CHECK_FALSE(once.has_channel(4, 5));
    CHECK(once.node_count() == 3);

    // A chain hanging off the triangle needs iteration to fully unravel.
    Topology chain = triangle();
    chain.open_channel(2, 3);
    chain.open_channel(3, 4);
    for (const auto& [key, state] : chain.channels())
        chain.set_balance(key.first, key.second, 5);

    Topology single = prune_topology(chain, false);
    CHECK(single.has_channel(2, 3));   // 3 still had degree 2 during the pass
    CHECK_FALSE(single.has_channel(3, 4));

    Topology fixed = prune_topology(chain, true);
    CHECK(fixed.channel_count() == 3);
    CHECK_FALSE(fixed.has_channel(2, 3));
}

TEST_CASE("rng determinism and bounds") {
    Rng a(7);
    Rng b(7);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

    Rng c(7);
    for (int i = 0; i < 1000; ++i) {
        auto v = c.below(10);
        CHECK(v < 10);
        auto r = c.range(5, 8);
        CHECK(r >= 5);
        CHECK(r < 8);
        auto u = c.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
    }

    Rng d1 = Rng::derive(1, 2, 3);
    Rng d2 = Rng::derive(1, 2, 4);
    CHECK(d1.next_u64() != d2.next_u64());
}
