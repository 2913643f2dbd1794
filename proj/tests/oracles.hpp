#pragma once

// Independent test oracles: exhaustive spanning-tree minimization, all-pairs
// Floyd-Warshall distances, shoelace areas, and a small deterministic RNG.

#include <algorithm>
#include <cstdint>
#include <vector>

#include "stspan/geom.hpp"
#include "stspan/graph.hpp"

namespace oracle {

// xorshift-based generator so sequences are identical across platforms.
struct Rng {
    std::uint64_t state;
    explicit Rng(std::uint64_t seed) : state(seed * 2685821657736338717ull + 1) {}
    std::uint64_t next() {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        return state;
    }
    double uniform() { return (next() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    int uniform_int(int lo, int hi) {  // inclusive
        return lo + static_cast<int>(next() % static_cast<std::uint64_t>(hi - lo + 1));
    }
};

inline std::vector<stspan::Point> random_points(Rng& rng, int n,
                                                double lo = 0.0, double hi = 1.0) {
    std::vector<stspan::Point> pts;
    pts.reserve(n);
    for (int i = 0; i < n; ++i) pts.push_back({rng.uniform(lo, hi), rng.uniform(lo, hi)});
    return pts;
}

// Exhaustive minimum spanning tree weight via Pruefer sequences (n <= 8).
inline double brute_force_mst_weight(const std::vector<stspan::Point>& pts) {
    const int n = static_cast<int>(pts.size());
    if (n <= 1) return 0.0;
    if (n == 2) return stspan::dist(pts[0], pts[1]);
    double best = std::numeric_limits<double>::infinity();
    std::vector<int> pruefer(n - 2, 0);
    std::vector<int> degree(n);
    while (true) {
        // decode the Pruefer sequence into tree edges
        for (int i = 0; i < n; ++i) degree[i] = 1;
        for (int v : pruefer) ++degree[v];
        double w = 0.0;
        std::vector<int> deg = degree;
        std::uint64_t used = 0;
        for (int v : pruefer) {
            for (int leaf = 0; leaf < n; ++leaf) {
                if (deg[leaf] == 1 && !(used >> leaf & 1)) {
                    w += stspan::dist(pts[leaf], pts[v]);
                    used |= 1ull << leaf;
                    --deg[v];
                    break;
                }
            }
        }
        int last1 = -1, last2 = -1;
        for (int i = 0; i < n; ++i)
            if (!(used >> i & 1)) (last1 < 0 ? last1 : last2) = i;
        w += stspan::dist(pts[last1], pts[last2]);
        best = std::min(best, w);
        // next sequence
        int pos = n - 3;
        while (pos >= 0 && pruefer[pos] == n - 1) pruefer[pos--] = 0;
        if (pos < 0) break;
        ++pruefer[pos];
    }
    return best;
}

// All-pairs distances by Floyd-Warshall on the graph's vertices.
inline std::vector<std::vector<double>> floyd_warshall(const stspan::GeoGraph& g) {
    const std::size_t n = g.vertex_count();
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<std::vector<double>> d(n, std::vector<double>(n, inf));
    for (std::size_t i = 0; i < n; ++i) d[i][i] = 0.0;
    for (const auto& e : g.edges()) {
        d[e.u][e.v] = std::min(d[e.u][e.v], e.w);
        d[e.v][e.u] = std::min(d[e.v][e.u], e.w);
    }
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t i = 0; i < n; ++i) {
            if (d[i][k] == inf) continue;
            for (std::size_t j = 0; j < n; ++j)
                if (d[i][k] + d[k][j] < d[i][j]) d[i][j] = d[i][k] + d[k][j];
        }
    return d;
}

inline double shoelace_area(const std::vector<stspan::Point>& poly) {
    double a = 0.0;
    for (std::size_t i = 0; i < poly.size(); ++i) {
        const auto& p = poly[i];
        const auto& q = poly[(i + 1) % poly.size()];
        a += p.x * q.y - q.x * p.y;
    }
    return 0.5 * a;
}

}  // namespace oracle
