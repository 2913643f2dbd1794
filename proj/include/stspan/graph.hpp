#pragma once

// Weighted geometric graph over sites and Steiner points. Vertices are merged
// by eta-snapping through a spatial hash; edge weights are always the
// Euclidean distance between endpoint coordinates.

#include <algorithm>
#include <cstdint>
#include <queue>
#include <thread>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "stspan/geom.hpp"

namespace stspan {

enum class VertexKind : std::uint8_t { Site, Steiner };

struct UnknownVertex : Error {
    UnknownVertex() : Error("vertex not in graph") {}
};
struct SiteNotInGraph : Error {
    SiteNotInGraph() : Error("site does not coincide with any graph vertex") {}
};

class GeoGraph {
public:
    struct Vertex {
        Point p;
        VertexKind kind = VertexKind::Steiner;
    };
    struct Edge {
        std::uint32_t u, v;
        double w;
    };

    explicit GeoGraph(double eta = kEtaRel) : eta_(eta), inv_cell_(1.0 / std::max(eta, 1e-300)) {}

    double eta() const { return eta_; }
    std::size_t vertex_count() const { return verts_.size(); }
    std::size_t edge_count() const { return edges_.size(); }
    const std::vector<Vertex>& vertices() const { return verts_; }
    const std::vector<Edge>& edges() const { return edges_; }

    // Snap-inserting accessor: returns the index of an existing vertex within
    // eta of p, or appends a new one.
    std::uint32_t add_vertex(Point p, VertexKind kind = VertexKind::Steiner) {
        if (!finite(p)) throw DegenerateInput("non-finite vertex coordinate");
        std::int64_t cx = cell(p.x), cy = cell(p.y);
        for (std::int64_t ix = cx - 1; ix <= cx + 1; ++ix)
            for (std::int64_t iy = cy - 1; iy <= cy + 1; ++iy) {
                auto it = grid_.find(key(ix, iy));
                if (it == grid_.end()) continue;
                for (std::uint32_t id : it->second)
                    if (near(verts_[id].p, p, eta_)) {
                        if (kind == VertexKind::Site) verts_[id].kind = VertexKind::Site;
                        return id;
                    }
            }
        std::uint32_t id = static_cast<std::uint32_t>(verts_.size());
        verts_.push_back({p, kind});
        grid_[key(cx, cy)].push_back(id);
        return id;
    }

    // Looks up without inserting; returns npos when absent.
    static constexpr std::uint32_t npos = 0xffffffffu;
    std::uint32_t find_vertex(Point p) const {
        std::int64_t cx = cell(p.x), cy = cell(p.y);
        for (std::int64_t ix = cx - 1; ix <= cx + 1; ++ix)
            for (std::int64_t iy = cy - 1; iy <= cy + 1; ++iy) {
                auto it = grid_.find(key(ix, iy));
                if (it == grid_.end()) continue;
                for (std::uint32_t id : it->second)
                    if (near(verts_[id].p, p, eta_)) return id;
            }
        return npos;
    }

    void add_edge(std::uint32_t u, std::uint32_t v) {
        if (u >= verts_.size() || v >= verts_.size()) throw UnknownVertex{};
        if (u == v) return;  // no self-loops
        std::uint64_t k = edge_key(u, v);
        if (edge_set_.insert(k).second)
            edges_.push_back({u, v, dist(verts_[u].p, verts_[v].p)});
    }

    void add_segment(Point a, Point b,
                     VertexKind ka = VertexKind::Steiner,
                     VertexKind kb = VertexKind::Steiner) {
        std::uint32_t u = add_vertex(a, ka);
        std::uint32_t v = add_vertex(b, kb);
        add_edge(u, v);
    }

    double weight() const {
        double w = 0.0;
        for (const Edge& e : edges_) w += e.w;
        return w;
    }

    void merge_from(const GeoGraph& other) {
        std::vector<std::uint32_t> remap(other.verts_.size());
        for (std::size_t i = 0; i < other.verts_.size(); ++i)
            remap[i] = add_vertex(other.verts_[i].p, other.verts_[i].kind);
        for (const Edge& e : other.edges_) add_edge(remap[e.u], remap[e.v]);
    }

    std::vector<std::vector<std::pair<std::uint32_t, double>>> adjacency() const {
        std::vector<std::vector<std::pair<std::uint32_t, double>>> adj(verts_.size());
        for (const Edge& e : edges_) {
            adj[e.u].push_back({e.v, e.w});
            adj[e.v].push_back({e.u, e.w});
        }
        return adj;
    }

private:
    std::int64_t cell(double c) const {
        return static_cast<std::int64_t>(std::floor(c * inv_cell_));
    }
    static std::uint64_t key(std::int64_t x, std::int64_t y) {
        return (static_cast<std::uint64_t>(x) << 32) ^ (static_cast<std::uint64_t>(y) & 0xffffffffull);
    }
    static std::uint64_t edge_key(std::uint32_t u, std::uint32_t v) {
        if (u > v) std::swap(u, v);
        return (static_cast<std::uint64_t>(u) << 32) | v;
    }

    double eta_;
    double inv_cell_;
    std::vector<Vertex> verts_;
    std::vector<Edge> edges_;
    std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> grid_;
    std::unordered_set<std::uint64_t> edge_set_;
};

inline GeoGraph graph_union(const std::vector<const GeoGraph*>& gs, double eta = kEtaRel) {
    GeoGraph out(eta);
    for (const GeoGraph* g : gs) out.merge_from(*g);
    return out;
}

inline double graph_weight(const GeoGraph& g) { return g.weight(); }

struct ShortestPathResult {
    double distance = std::numeric_limits<double>::infinity();
    std::vector<std::uint32_t> path;  // empty when disconnected
};

// Dijkstra distances from a single source; dist is infinity for unreachable
// vertices. `parent` is optional.
inline std::vector<double> dijkstra(
    const std::vector<std::vector<std::pair<std::uint32_t, double>>>& adj,
    std::uint32_t src, std::vector<std::uint32_t>* parent = nullptr) {
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> d(adj.size(), inf);
    if (parent) parent->assign(adj.size(), GeoGraph::npos);
    using QE = std::pair<double, std::uint32_t>;
    std::priority_queue<QE, std::vector<QE>, std::greater<QE>> pq;
    d[src] = 0.0;
    pq.push({0.0, src});
    while (!pq.empty()) {
        auto [du, u] = pq.top();
        pq.pop();
        if (du > d[u]) continue;
        for (auto [v, w] : adj[u]) {
            double nd = du + w;
            if (nd < d[v]) {
                d[v] = nd;
                if (parent) (*parent)[v] = u;
                pq.push({nd, v});
            }
        }
    }
    return d;
}

inline ShortestPathResult shortest_path(const GeoGraph& g, std::uint32_t u, std::uint32_t v) {
    if (u >= g.vertex_count() || v >= g.vertex_count()) throw UnknownVertex{};
    ShortestPathResult r;
    if (u == v) {
        r.distance = 0.0;
        r.path = {u};
        return r;
    }
    std::vector<std::uint32_t> parent;
    auto d = dijkstra(g.adjacency(), u, &parent);
    r.distance = d[v];
    if (std::isfinite(r.distance)) {
        for (std::uint32_t cur = v; cur != GeoGraph::npos; cur = parent[cur])
            r.path.push_back(cur);
        std::reverse(r.path.begin(), r.path.end());
    }
    return r;
}

struct StretchReport {
    double max_stretch = 1.0;
    std::pair<std::uint32_t, std::uint32_t> argmax_pair{0, 0};
    std::vector<std::pair<std::pair<std::uint32_t, std::uint32_t>, double>> per_pair;
    bool sampled = false;  // true when pair sampling was used (> 500 sites)
};

// Max over site pairs of d_G(u,v) / ||uv||. Sites must eta-coincide with
// graph vertices. Disconnected pairs report infinite stretch.
StretchReport max_stretch(const GeoGraph& g, const std::vector<Point>& sites,
                          const std::vector<std::pair<std::uint32_t, std::uint32_t>>* pair_filter = nullptr,
                          bool keep_per_pair = false, int threads = 1);

inline StretchReport max_stretch(const GeoGraph& g, const std::vector<Point>& sites,
                                 const std::vector<std::pair<std::uint32_t, std::uint32_t>>* pair_filter,
                                 bool keep_per_pair, int threads) {
    StretchReport rep;
    std::vector<std::uint32_t> ids(sites.size());
    for (std::size_t i = 0; i < sites.size(); ++i) {
        ids[i] = g.find_vertex(sites[i]);
        if (ids[i] == GeoGraph::npos) throw SiteNotInGraph{};
    }
    auto adj = g.adjacency();

    std::vector<std::vector<std::uint32_t>> targets(sites.size());
    if (pair_filter) {
        for (auto [i, j] : *pair_filter) targets[i].push_back(static_cast<std::uint32_t>(j));
    } else {
        for (std::size_t i = 0; i < sites.size(); ++i)
            for (std::size_t j = i + 1; j < sites.size(); ++j)
                targets[i].push_back(static_cast<std::uint32_t>(j));
    }

    std::vector<StretchReport> partial(std::max(threads, 1));
    auto run = [&](int tid, int nthreads) {
        StretchReport& pr = partial[tid];
        for (std::size_t i = tid; i < sites.size(); i += nthreads) {
            if (targets[i].empty()) continue;
            auto d = dijkstra(adj, ids[i]);
            for (std::uint32_t j : targets[i]) {
                double eu = dist(sites[i], sites[j]);
                double st = eu > 0 ? d[ids[j]] / eu : 1.0;
                if (keep_per_pair)
                    pr.per_pair.push_back({{static_cast<std::uint32_t>(i), j}, st});
                if (st > pr.max_stretch) {
                    pr.max_stretch = st;
                    pr.argmax_pair = {static_cast<std::uint32_t>(i), j};
                }
            }
        }
    };
    if (threads <= 1) {
        run(0, 1);
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t) pool.emplace_back(run, t, threads);
        for (auto& th : pool) th.join();
    }
    for (auto& pr : partial) {
        if (pr.max_stretch > rep.max_stretch) {
            rep.max_stretch = pr.max_stretch;
            rep.argmax_pair = pr.argmax_pair;
        }
        rep.per_pair.insert(rep.per_pair.end(), pr.per_pair.begin(), pr.per_pair.end());
    }
    if (keep_per_pair) std::sort(rep.per_pair.begin(), rep.per_pair.end(),
                                 [](const auto& a, const auto& b) { return a.first < b.first; });
    return rep;
}

}  // namespace stspan
