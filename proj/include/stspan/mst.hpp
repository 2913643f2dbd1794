#pragma once

// Euclidean MST over the complete graph (Prim, quadratic — desk scale) and
// its rectilinear realization: each tree edge bent into a horizontal-then-
// vertical L-path, overlaps merged by the graph's eta-snapping.

#include <algorithm>
#include <vector>

#include "stspan/geom.hpp"
#include "stspan/graph.hpp"

namespace stspan {

struct EmptyInput : Error {
    EmptyInput() : Error("empty point set") {}
};

struct MstResult {
    GeoGraph tree{kEtaRel};
    double weight = 0.0;
    std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;  // site index pairs
    std::vector<Point> sites;
};

inline MstResult euclidean_mst(const std::vector<Point>& sites_in, double eta = kEtaRel) {
    if (sites_in.empty()) throw EmptyInput{};
    MstResult res;
    res.sites = sites_in;
    const std::size_t n = res.sites.size();
    res.tree = GeoGraph(eta);
    for (Point p : res.sites) res.tree.add_vertex(p, VertexKind::Site);
    if (n == 1) return res;

    // Prim with lexicographic-index tie break for determinism.
    std::vector<double> best(n, std::numeric_limits<double>::infinity());
    std::vector<std::uint32_t> from(n, 0);
    std::vector<bool> done(n, false);
    best[0] = 0.0;
    for (std::size_t it = 0; it < n; ++it) {
        std::size_t u = n;
        for (std::size_t i = 0; i < n; ++i)
            if (!done[i] && (u == n || best[i] < best[u])) u = i;
        done[u] = true;
        if (u != 0) {
            std::uint32_t a = from[u], b = static_cast<std::uint32_t>(u);
            if (a > b) std::swap(a, b);
            res.edges.push_back({a, b});
            res.weight += best[u];
            res.tree.add_edge(a, b);
        }
        for (std::size_t v = 0; v < n; ++v) {
            if (done[v]) continue;
            double d = dist(res.sites[u], res.sites[v]);
            if (d < best[v]) { best[v] = d; from[v] = static_cast<std::uint32_t>(u); }
        }
    }
    std::sort(res.edges.begin(), res.edges.end());
    return res;
}

// Replaces each tree edge (a,b) by the L-path a -> (b.x, a.y) -> b.
// Output edges are axis-parallel; weight is within [w, sqrt(2) w].
inline GeoGraph rectilinear_realization(const MstResult& t, double eta = kEtaRel) {
    GeoGraph g(eta);
    for (Point p : t.sites) g.add_vertex(p, VertexKind::Site);
    for (auto [ia, ib] : t.edges) {
        Point a = t.sites[ia], b = t.sites[ib];
        Point bend{b.x, a.y};
        bool h = dist(a, bend) > eta;
        bool v = dist(bend, b) > eta;
        if (h && v) {
            g.add_segment(a, bend, VertexKind::Site, VertexKind::Steiner);
            g.add_segment(bend, b, VertexKind::Steiner, VertexKind::Site);
        } else {
            g.add_segment(a, b, VertexKind::Site, VertexKind::Site);  // already axis-parallel
        }
    }
    return g;
}

}  // namespace stspan
