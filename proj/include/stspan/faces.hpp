#pragma once

// Planar arrangement of the initial graph (bounding square boundary plus the
// rectilinear MST) and extraction of its bounded faces as boundary walks.
// Faces come out of a half-edge traversal, so a tree edge hanging into a
// face (a slit) appears on the face walk twice, once per side.

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "stspan/geom.hpp"
#include "stspan/region.hpp"

namespace stspan {

class Arrangement {
public:
    Arrangement(const std::vector<Segment>& segments, double eta) : eta_(eta) {
        split_segments(segments);
        build_half_edges();
        extract_faces();
    }

    const std::vector<Point>& vertices() const { return verts_; }
    const std::vector<std::pair<int, int>>& edges() const { return edges_; }
    const std::vector<Walk>& faces() const { return faces_; }

    int find_vertex(Point p) const {
        for (std::size_t i = 0; i < verts_.size(); ++i)
            if (near(verts_[i], p, eta_)) return static_cast<int>(i);
        return -1;
    }

private:
    int add_vertex(Point p) {
        auto k = key(p);
        for (int dx = -1; dx <= 1; ++dx)
            for (int dy = -1; dy <= 1; ++dy) {
                auto it = vmap_.find({k.first + dx, k.second + dy});
                if (it == vmap_.end()) continue;
                for (int id : it->second)
                    if (near(verts_[id], p, eta_)) return id;
            }
        int id = static_cast<int>(verts_.size());
        verts_.push_back(p);
        vmap_[k].push_back(id);
        return id;
    }
    std::pair<long long, long long> key(Point p) const {
        return {static_cast<long long>(std::floor(p.x / eta_)),
                static_cast<long long>(std::floor(p.y / eta_))};
    }

    void split_segments(const std::vector<Segment>& segments) {
        const std::size_t n = segments.size();
        std::vector<std::vector<Point>> cuts(n);
        Point out[2];
        for (std::size_t i = 0; i < n; ++i) {
            cuts[i].push_back(segments[i].a);
            cuts[i].push_back(segments[i].b);
        }
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) {
                int m = segment_intersections(segments[i], segments[j], eta_, out);
                for (int t = 0; t < m; ++t) {
                    cuts[i].push_back(out[t]);
                    cuts[j].push_back(out[t]);
                }
            }
        std::map<std::pair<int, int>, bool> seen;
        for (std::size_t i = 0; i < n; ++i) {
            Point a = segments[i].a, b = segments[i].b;
            Point d = b - a;
            double len = norm(d);
            if (len <= eta_) continue;
            std::sort(cuts[i].begin(), cuts[i].end(), [&](Point p, Point q) {
                return dot(p - a, d) < dot(q - a, d);
            });
            for (std::size_t t = 0; t + 1 < cuts[i].size(); ++t) {
                Point p = cuts[i][t], q = cuts[i][t + 1];
                if (dist(p, q) <= eta_) continue;
                int u = add_vertex(p), v = add_vertex(q);
                if (u == v) continue;
                auto ekey = std::minmax(u, v);
                if (seen.emplace(std::pair<int, int>(ekey.first, ekey.second), true).second)
                    edges_.push_back({ekey.first, ekey.second});
            }
        }
    }

    struct Half {
        int from, to;
        int twin = -1;
        int next = -1;
        bool used = false;
    };

    void build_half_edges() {
        halves_.clear();
        for (auto [u, v] : edges_) {
            halves_.push_back({u, v});
            halves_.push_back({v, u});
            halves_[halves_.size() - 2].twin = static_cast<int>(halves_.size() - 1);
            halves_[halves_.size() - 1].twin = static_cast<int>(halves_.size() - 2);
        }
        // outgoing half-edges per vertex, sorted by angle
        std::vector<std::vector<int>> out(verts_.size());
        for (std::size_t h = 0; h < halves_.size(); ++h)
            out[halves_[h].from].push_back(static_cast<int>(h));
        auto angle_of = [&](int h) {
            Point d = verts_[halves_[h].to] - verts_[halves_[h].from];
            return std::atan2(d.y, d.x);
        };
        for (auto& lst : out)
            std::sort(lst.begin(), lst.end(),
                      [&](int a, int b) { return angle_of(a) < angle_of(b); });
        // next(h): at head of h, the outgoing edge clockwise-next from twin(h)
        for (std::size_t h = 0; h < halves_.size(); ++h) {
            int v = halves_[h].to;
            const auto& lst = out[v];
            int tw = halves_[h].twin;
            auto it = std::find(lst.begin(), lst.end(), tw);
            std::size_t idx = static_cast<std::size_t>(it - lst.begin());
            int prev = lst[(idx + lst.size() - 1) % lst.size()];
            halves_[h].next = prev;
        }
    }

    void extract_faces() {
        for (std::size_t h0 = 0; h0 < halves_.size(); ++h0) {
            if (halves_[h0].used) continue;
            Walk w;
            int h = static_cast<int>(h0);
            std::size_t guard = 0;
            do {
                halves_[h].used = true;
                w.edges.push_back({verts_[halves_[h].from], verts_[halves_[h].to],
                                   ETag::Boundary});
                h = halves_[h].next;
            } while (h != static_cast<int>(h0) && ++guard <= halves_.size());
            if (w.signed_area() > eta_ * eta_) faces_.push_back(std::move(w));
        }
        std::sort(faces_.begin(), faces_.end(), [](const Walk& a, const Walk& b) {
            return a.signed_area() > b.signed_area();
        });
    }

    double eta_;
    std::vector<Point> verts_;
    std::map<std::pair<long long, long long>, std::vector<int>> vmap_;
    std::vector<std::pair<int, int>> edges_;
    std::vector<Half> halves_;
    std::vector<Walk> faces_;
};

}  // namespace stspan
