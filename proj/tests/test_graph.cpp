#include <catch2/catch_amalgamated.hpp>

#include "stspan/graph.hpp"
#include "oracles.hpp"

using namespace stspan;

namespace {

GeoGraph unit_square() {
    GeoGraph g;
    g.add_segment({0, 0}, {1, 0});
    g.add_segment({1, 0}, {1, 1});
    g.add_segment({1, 1}, {0, 1});
    g.add_segment({0, 1}, {0, 0});
    return g;
}

}  // namespace

TEST_CASE("graph_weight basics") {
    GeoGraph empty;
    CHECK(graph_weight(empty) == 0.0);
    CHECK(graph_weight(unit_square()) == Catch::Approx(4.0));
    GeoGraph path;
    path.add_segment({0, 0}, {1, 0});
    path.add_segment({1, 0}, {1, 1});
    CHECK(graph_weight(path) == Catch::Approx(2.0));
}

TEST_CASE("graph_union identity and dedup") {
    GeoGraph g;
    g.add_segment({0, 0}, {3, 4});
    GeoGraph empty;
    auto u = graph_union({&g, &empty});
    CHECK(u.edge_count() == 1);
    CHECK(graph_weight(u) == Catch::Approx(5.0));

    auto twice = graph_union({&g, &g});
    CHECK(twice.edge_count() == 1);
    CHECK(graph_weight(twice) == Catch::Approx(5.0));
}

TEST_CASE("graph_union merges coincident vertices") {
    GeoGraph a, b;
    a.add_segment({0, 0}, {0.5, 0.5});
    b.add_segment({0.5, 0.5}, {1, 0});
    auto u = graph_union({&a, &b});
    CHECK(u.vertex_count() == 3);
    auto id = u.find_vertex({0.5, 0.5});
    REQUIRE(id != GeoGraph::npos);
    int degree = 0;
    for (const auto& e : u.edges()) degree += (e.u == id) + (e.v == id);
    CHECK(degree == 2);
}

TEST_CASE("union weight never exceeds the sum of parts") {
    oracle::Rng rng(11);
    GeoGraph a, b;
    for (int i = 0; i < 30; ++i) {
        a.add_segment({rng.uniform(), rng.uniform()}, {rng.uniform(), rng.uniform()});
        b.add_segment({rng.uniform(), rng.uniform()}, {rng.uniform(), rng.uniform()});
    }
    auto u = graph_union({&a, &b});
    CHECK(graph_weight(u) <= graph_weight(a) + graph_weight(b) + 1e-9);
}

TEST_CASE("shortest_path") {
    SECTION("u == v") {
        GeoGraph g;
        auto v = g.add_vertex({1, 1});
        auto r = shortest_path(g, v, v);
        CHECK(r.distance == 0.0);
    }
    SECTION("single edge") {
        GeoGraph g;
        auto u = g.add_vertex({0, 0});
        auto v = g.add_vertex({3, 4});
        g.add_edge(u, v);
        CHECK(shortest_path(g, u, v).distance == Catch::Approx(5.0));
    }
    SECTION("square opposite corners need two sides") {
        auto g = unit_square();
        auto u = g.find_vertex({0, 0});
        auto v = g.find_vertex({1, 1});
        auto r = shortest_path(g, u, v);
        CHECK(r.distance == Catch::Approx(2.0));
        CHECK(r.path.size() == 3);
    }
    SECTION("unknown vertex throws") {
        GeoGraph g;
        g.add_vertex({0, 0});
        CHECK_THROWS_AS(shortest_path(g, 0, 5), UnknownVertex);
    }
    SECTION("disconnected pair is infinite") {
        GeoGraph g;
        auto u = g.add_vertex({0, 0});
        auto v = g.add_vertex({9, 9});
        CHECK(std::isinf(shortest_path(g, u, v).distance));
    }
}

TEST_CASE("triangle property of graph distances") {
    oracle::Rng rng(13);
    GeoGraph g;
    auto pts = oracle::random_points(rng, 25);
    std::vector<std::uint32_t> ids;
    for (auto p : pts) ids.push_back(g.add_vertex(p));
    for (int e = 0; e < 60; ++e)
        g.add_edge(ids[rng.uniform_int(0, 24)], ids[rng.uniform_int(0, 24)]);
    auto adj = g.adjacency();
    for (int s = 0; s < 5; ++s) {
        auto d = dijkstra(adj, ids[s]);
        for (std::size_t j = 0; j < ids.size(); ++j)
            if (std::isfinite(d[ids[j]]))
                CHECK(d[ids[j]] >= dist(pts[s], pts[j]) - 1e-9);
    }
}

TEST_CASE("max_stretch basics") {
    SECTION("complete graph has stretch 1") {
        oracle::Rng rng(3);
        auto sites = oracle::random_points(rng, 8);
        GeoGraph g;
        std::vector<std::uint32_t> ids;
        for (auto p : sites) ids.push_back(g.add_vertex(p, VertexKind::Site));
        for (std::size_t i = 0; i < ids.size(); ++i)
            for (std::size_t j = i + 1; j < ids.size(); ++j) g.add_edge(ids[i], ids[j]);
        auto rep = max_stretch(g, sites);
        CHECK(rep.max_stretch == Catch::Approx(1.0));
    }
    SECTION("collinear chain has stretch 1") {
        std::vector<Point> sites{{0, 0}, {1, 0}, {2, 0}};
        GeoGraph g;
        g.add_segment({0, 0}, {1, 0}, VertexKind::Site, VertexKind::Site);
        g.add_segment({1, 0}, {2, 0}, VertexKind::Site, VertexKind::Site);
        CHECK(max_stretch(g, sites).max_stretch == Catch::Approx(1.0));
    }
    SECTION("detour through a Steiner point") {
        std::vector<Point> sites{{0, 0}, {1, 0}};
        GeoGraph g;
        g.add_segment({0, 0}, {0.5, 0.5}, VertexKind::Site, VertexKind::Steiner);
        g.add_segment({0.5, 0.5}, {1, 0}, VertexKind::Steiner, VertexKind::Site);
        CHECK(max_stretch(g, sites).max_stretch == Catch::Approx(std::sqrt(2.0)));
    }
    SECTION("missing site throws") {
        GeoGraph g;
        g.add_vertex({0, 0});
        CHECK_THROWS_AS(max_stretch(g, {{5, 5}}), SiteNotInGraph);
    }
    SECTION("disconnected pair reports infinity") {
        std::vector<Point> sites{{0, 0}, {1, 0}};
        GeoGraph g;
        g.add_vertex({0, 0}, VertexKind::Site);
        g.add_vertex({1, 0}, VertexKind::Site);
        CHECK(std::isinf(max_stretch(g, sites).max_stretch));
    }
}

TEST_CASE("max_stretch equals Floyd-Warshall oracle") {
    oracle::Rng rng(17);
    for (int trial = 0; trial < 5; ++trial) {
        auto sites = oracle::random_points(rng, 12);
        GeoGraph g;
        std::vector<std::uint32_t> ids;
        for (auto p : sites) ids.push_back(g.add_vertex(p, VertexKind::Site));
        // random connected-ish graph plus some Steiner detours
        for (std::size_t i = 1; i < ids.size(); ++i)
            g.add_edge(ids[i - 1], ids[i]);
        for (int e = 0; e < 10; ++e) {
            auto s = g.add_vertex({rng.uniform(), rng.uniform()});
            g.add_edge(ids[rng.uniform_int(0, 11)], s);
            g.add_edge(s, ids[rng.uniform_int(0, 11)]);
        }
        auto rep = max_stretch(g, sites);
        auto fw = oracle::floyd_warshall(g);
        double expect = 1.0;
        for (std::size_t i = 0; i < sites.size(); ++i)
            for (std::size_t j = i + 1; j < sites.size(); ++j)
                expect = std::max(expect, fw[ids[i]][ids[j]] / dist(sites[i], sites[j]));
        CHECK(rep.max_stretch == Catch::Approx(expect).epsilon(1e-12));
    }
}

TEST_CASE("max_stretch is independent of thread count") {
    oracle::Rng rng(23);
    auto sites = oracle::random_points(rng, 20);
    GeoGraph g;
    std::vector<std::uint32_t> ids;
    for (auto p : sites) ids.push_back(g.add_vertex(p, VertexKind::Site));
    for (std::size_t i = 1; i < ids.size(); ++i) g.add_edge(ids[i - 1], ids[i]);
    auto a = max_stretch(g, sites, nullptr, false, 1);
    auto b = max_stretch(g, sites, nullptr, false, 4);
    CHECK(a.max_stretch == b.max_stretch);
}
