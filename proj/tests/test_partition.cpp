#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "hfp/partition.hpp"

#include <algorithm>
#include <map>
#include <set>

using namespace hfp;

TEST_CASE("partition of K=8 leaves") {
    HPartition p = build_partition(1024, 128);
    CHECK(p.leaf_count == 8);
    CHECK(p.tile_count() == 7);
    std::multiset<std::size_t> spans;
    for (const auto& t : p.tiles) spans.insert(t.span);
    CHECK(spans == std::multiset<std::size_t>{4, 2, 2, 1, 1, 1, 1});
    // Breadth-first: spans never increase along the enumeration.
    for (std::size_t m = 1; m < p.tiles.size(); ++m)
        CHECK(p.tiles[m].span <= p.tiles[m - 1].span);
}

TEST_CASE("smallest tree K=2") {
    HPartition p = build_partition(256, 128);
    REQUIRE(p.tile_count() == 1);
    CHECK(p.tiles[0].span == 1);
    CHECK(p.tiles[0].row_begin == 0);
    CHECK(p.tiles[0].col_begin == 1);
}

TEST_CASE("K=16 recursion oracle") {
    HPartition p = build_partition(2048, 128);
    REQUIRE(p.tile_count() == 15);
    // Independent recursion oracle.
    std::vector<TileSpec> expect;
    std::function<void(std::size_t, std::size_t, std::size_t)> rec;
    std::map<std::size_t, std::vector<std::pair<std::size_t, std::size_t>>> by_depth;
    rec = [&](std::size_t lo, std::size_t hi, std::size_t depth) {
        if (hi - lo < 2) return;
        const std::size_t half = (hi - lo) / 2;
        by_depth[depth].push_back({lo, lo + half});
        rec(lo, lo + half, depth + 1);
        rec(lo + half, hi, depth + 1);
    };
    rec(0, 16, 0);
    std::size_t count = 0;
    for (auto& [depth, nodes] : by_depth) count += nodes.size();
    CHECK(count == 15);
    for (const auto& t : p.tiles) {
        bool found = false;
        for (auto& [lo, mid] : by_depth[t.depth])
            if (t.row_begin == lo && t.col_begin == mid) found = true;
        CHECK(found);
    }
}

TEST_CASE("tile count is K-1 across all supported K") {
    for (std::size_t k : {2u, 4u, 8u, 16u, 32u, 64u, 128u, 256u}) {
        HPartition p = build_partition(k * 4, 4);
        CHECK(p.tile_count() == k - 1);
    }
}

TEST_CASE("coverage: leaves plus mirrored tiles cover every leaf pair once") {
    HPartition p = build_partition(64 * 16, 16);
    const std::size_t k = p.leaf_count;
    std::vector<int> covered(k * k, 0);
    for (std::size_t i = 0; i < k; ++i) covered[i * k + i]++;
    for (const auto& t : p.tiles)
        for (std::size_t a = 0; a < t.span; ++a)
            for (std::size_t b = 0; b < t.span; ++b) {
                covered[(t.row_begin + a) * k + (t.col_begin + b)]++;
                covered[(t.col_begin + b) * k + (t.row_begin + a)]++;
            }
    CHECK(std::all_of(covered.begin(), covered.end(), [](int c) { return c == 1; }));

    // Area identity: 2 sum(span^2) + K = K^2 (in units of L^2).
    std::size_t area = k;
    for (const auto& t : p.tiles) area += 2 * t.span * t.span;
    CHECK(area == k * k);
}

TEST_CASE("membership lists follow the bisection tree") {
    HPartition p = build_partition(1024, 128);
    // Leaf 0 is a row member at every level, never a column member.
    std::multiset<std::size_t> row_spans;
    for (std::size_t m : p.row_tiles_of_leaf[0]) row_spans.insert(p.tiles[m].span);
    CHECK(row_spans == std::multiset<std::size_t>{4, 2, 1});
    CHECK(p.col_tiles_of_leaf[0].empty());
    // Leaf 7 mirrors it on the column side.
    std::multiset<std::size_t> col_spans;
    for (std::size_t m : p.col_tiles_of_leaf[7]) col_spans.insert(p.tiles[m].span);
    CHECK(col_spans == std::multiset<std::size_t>{4, 2, 1});
    CHECK(p.row_tiles_of_leaf[7].empty());
    // Every leaf: log2(K) = 3 memberships total.
    for (std::size_t leaf = 0; leaf < 8; ++leaf)
        CHECK(p.row_tiles_of_leaf[leaf].size() + p.col_tiles_of_leaf[leaf].size() == 3);
}

TEST_CASE("packed width matches the factor-tensor breakdown") {
    CHECK(packed_width(build_partition(1024, 128), 32) == 204800);
    CHECK(packed_width(build_partition(2048, 128), 32) == 410624);
    CHECK(packed_width(build_partition(8192, 128), 32) == 1645568);
    CHECK(packed_width(build_partition(16384, 128), 32) == 3292160);
}

TEST_CASE("provided rank fraction halves as the span doubles") {
    HPartition p = build_partition(2048, 128);
    const double ls = 32.0;
    std::map<std::size_t, double> frac;
    for (const auto& t : p.tiles)
        frac[t.span] = ls / (static_cast<double>(t.span) * 128.0);
    std::size_t prev_span = 0;
    double prev_frac = 0.0;
    for (auto& [span, f] : frac) {
        if (prev_span != 0 && span == 2 * prev_span)
            CHECK(f == doctest::Approx(prev_frac / 2.0));
        prev_span = span;
        prev_frac = f;
    }
}

TEST_CASE("invalid configurations are rejected") {
    CHECK_THROWS_AS(build_partition(1000, 128), std::invalid_argument);  // not divisible
    CHECK_THROWS_AS(build_partition(128 * 3, 128), std::invalid_argument); // K=3
    CHECK_THROWS_AS(build_partition(128, 128), std::invalid_argument);     // K=1
    HPartition p = build_partition(1024, 128);
    CHECK_THROWS_AS(packed_width(p, 33), std::invalid_argument); // L_s must divide L
}

TEST_CASE("partition json dump carries the layout sections") {
    HPartition p = build_partition(512, 128);
    const std::string j = p.to_json(32);
    CHECK(j.find("\"packed_width\"") != std::string::npos);
    CHECK(j.find("\"tiles\"") != std::string::npos);
}
