#pragma once

// Slab decomposition engine for the polygon partitioning stages.
//
// A region is bounded by one or more closed walks (interior on the left).
// Walks may be weakly simple: slit edges appear twice, once per side, and
// pinch vertices are allowed; interior membership is by the nonzero winding
// rule, so coincident opposite edges cancel.
//
// The engine splits the plane into vertical slabs at edge endpoints and
// pairwise crossings, stabs each slab at its midline to obtain interior
// cells (trapezoids bounded by soup edges), and supports:
//   - visibility regions: cells whose floor/ceiling carries a base tag
//     (vertical visibility; shears and transposes reduce the slope-sigma
//     and horizontal visibility queries to this case),
//   - connected components across slab borders, with input vertical edges
//     blocking adjacency (slits stay walls),
//   - tracing a cell set back into boundary walks with tags preserved.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <vector>

#include "stspan/geom.hpp"

namespace stspan {

struct InvalidPolygon : Error {
    explicit InvalidPolygon(const std::string& w) : Error("invalid polygon: " + w) {}
};

// Edge provenance tags, preserved through decompositions.
enum class ETag : std::uint8_t {
    Boundary,   // input polygon boundary
    Base,       // current instance's base curve (gamma)
    Window,     // synthesized axis-parallel subdivision edge
    SlopePos,   // synthesized edge of slope +Lambda eps^{-1/2}
    SlopeNeg,   // synthesized edge of slope -Lambda eps^{-1/2}
};

struct WalkEdge {
    Point a, b;
    ETag tag = ETag::Boundary;
    bool base = false;  // marks the current instance's base curve (gamma)
};

struct Walk {
    std::vector<WalkEdge> edges;

    double signed_area() const {
        double s = 0.0;
        for (const auto& e : edges) s += cross(e.a, e.b);
        return 0.5 * s;
    }
    double perimeter() const {
        double s = 0.0;
        for (const auto& e : edges) s += dist(e.a, e.b);
        return s;
    }
    std::vector<Point> vertex_loop() const {
        std::vector<Point> v;
        v.reserve(edges.size());
        for (const auto& e : edges) v.push_back(e.a);
        return v;
    }
    // Winding number of p (nonzero => interior).
    int winding(Point p) const {
        int w = 0;
        for (const auto& e : edges) {
            if (e.a.y <= p.y) {
                if (e.b.y > p.y && cross(e.b - e.a, p - e.a) > 0) ++w;
            } else if (e.b.y <= p.y && cross(e.b - e.a, p - e.a) < 0) {
                --w;
            }
        }
        return w;
    }
    bool contains(Point p) const { return winding(p) != 0; }
};

inline Walk transpose(const Walk& w) {
    Walk out;
    out.edges.reserve(w.edges.size());
    for (auto it = w.edges.rbegin(); it != w.edges.rend(); ++it)
        out.edges.push_back({{it->b.y, it->b.x}, {it->a.y, it->a.x}, it->tag, it->base});
    return out;
}

inline Walk flip_x(const Walk& w, double axis = 0.0) {
    Walk out;
    out.edges.reserve(w.edges.size());
    for (auto it = w.edges.rbegin(); it != w.edges.rend(); ++it) {
        ETag t = it->tag;
        if (t == ETag::SlopePos) t = ETag::SlopeNeg;
        else if (t == ETag::SlopeNeg) t = ETag::SlopePos;
        out.edges.push_back({{2 * axis - it->b.x, it->b.y}, {2 * axis - it->a.x, it->a.y}, t, it->base});
    }
    return out;
}

inline Walk flip_y(const Walk& w, double axis = 0.0) {
    Walk out;
    out.edges.reserve(w.edges.size());
    for (auto it = w.edges.rbegin(); it != w.edges.rend(); ++it) {
        ETag t = it->tag;
        if (t == ETag::SlopePos) t = ETag::SlopeNeg;
        else if (t == ETag::SlopeNeg) t = ETag::SlopePos;
        out.edges.push_back({{it->b.x, 2 * axis - it->b.y}, {it->a.x, 2 * axis - it->a.y}, t, it->base});
    }
    return out;
}

// Shear mapping lines of slope `sigma` to vertical lines: u = x - y/sigma.
// Orientation preserving, so walks keep their interior side.
inline Walk shear(const Walk& w, double sigma) {
    Walk out;
    out.edges.reserve(w.edges.size());
    for (const auto& e : w.edges)
        out.edges.push_back({{e.a.x - e.a.y / sigma, e.a.y}, {e.b.x - e.b.y / sigma, e.b.y}, e.tag, e.base});
    return out;
}

// Inverse shear; edges that are vertical in the sheared frame come back with
// exactly slope sigma (x recomputed from the edge's own anchor).
inline Walk unshear(const Walk& w, double sigma, ETag vertical_tag) {
    Walk out;
    out.edges.reserve(w.edges.size());
    for (const auto& e : w.edges) {
        Point a{e.a.x + e.a.y / sigma, e.a.y};
        Point b{e.b.x + e.b.y / sigma, e.b.y};
        ETag t = e.tag;
        if (std::fabs(e.a.x - e.b.x) < 1e-13 * (1.0 + std::fabs(e.a.x))) {
            b.x = a.x + (b.y - a.y) / sigma;  // exact slope restoration
            if (t == ETag::Window) t = vertical_tag;
        }
        out.edges.push_back({a, b, t, e.base});
    }
    return out;
}

class SlabMap {
public:
    struct SoupEdge {
        Point a, b;
        ETag tag;
        bool base;
        int cycle;  // which walk this edge belongs to
    };
    struct Cell {
        int slab = -1;
        double y_lo_l = 0, y_lo_r = 0, y_hi_l = 0, y_hi_r = 0;
        int floor_e = -1, ceil_e = -1;
        std::uint32_t inside = 0;  // bit c: winding of cycle c nonzero
        int comp = -1;

        double y_lo_at(double t) const { return y_lo_l + t * (y_lo_r - y_lo_l); }
        double y_hi_at(double t) const { return y_hi_l + t * (y_hi_r - y_hi_l); }
    };

    SlabMap(std::vector<const Walk*> cycles, double eta) : eta_(eta) {
        for (std::size_t c = 0; c < cycles.size(); ++c)
            for (const auto& e : cycles[c]->edges) {
                if (dist(e.a, e.b) <= eta_) continue;
                soup_.push_back({e.a, e.b, e.tag, e.base, static_cast<int>(c)});
            }
        ncycles_ = static_cast<int>(cycles.size());
        build();
    }

    const std::vector<SoupEdge>& soup() const { return soup_; }
    const std::vector<double>& dividers() const { return xs_; }
    std::size_t slab_count() const { return xs_.size() > 1 ? xs_.size() - 1 : 0; }
    const std::vector<Cell>& cells(std::size_t slab) const { return cells_[slab]; }

    double slab_lo(std::size_t s) const { return xs_[s]; }
    double slab_hi(std::size_t s) const { return xs_[s + 1]; }

    struct CellRef {
        int slab = -1, idx = -1;
        bool valid() const { return slab >= 0; }
        bool operator<(const CellRef& o) const {
            return slab != o.slab ? slab < o.slab : idx < o.idx;
        }
        bool operator==(const CellRef& o) const { return slab == o.slab && idx == o.idx; }
    };

    const Cell& cell(CellRef r) const { return cells_[r.slab][r.idx]; }

    template <typename F>
    void for_each_cell(F&& f) const {
        for (std::size_t s = 0; s < cells_.size(); ++s)
            for (std::size_t i = 0; i < cells_[s].size(); ++i)
                f(CellRef{static_cast<int>(s), static_cast<int>(i)}, cells_[s][i]);
    }

    Point cell_center(CellRef r) const {
        const Cell& c = cell(r);
        double x = 0.5 * (xs_[c.slab] + xs_[c.slab + 1]);
        return {x, 0.25 * (c.y_lo_l + c.y_lo_r + c.y_hi_l + c.y_hi_r)};
    }

    double cell_area(CellRef r) const {
        const Cell& c = cell(r);
        double w = xs_[c.slab + 1] - xs_[c.slab];
        return 0.5 * w * ((c.y_hi_l - c.y_lo_l) + (c.y_hi_r - c.y_lo_r));
    }

    CellRef locate(Point p) const {
        auto it = std::upper_bound(xs_.begin(), xs_.end(), p.x);
        if (it == xs_.begin() || it == xs_.end()) return {};
        int s = static_cast<int>(it - xs_.begin()) - 1;
        double t = (p.x - xs_[s]) / (xs_[s + 1] - xs_[s]);
        for (std::size_t i = 0; i < cells_[s].size(); ++i) {
            const Cell& c = cells_[s][i];
            if (p.y >= c.y_lo_at(t) - eta_ && p.y <= c.y_hi_at(t) + eta_)
                return {s, static_cast<int>(i)};
        }
        return {};
    }

    // Cells directly adjacent (floor or ceiling) to edges satisfying `pred`.
    template <typename Pred>
    std::vector<CellRef> cells_touching(Pred&& pred) const {
        std::vector<CellRef> out;
        for_each_cell([&](CellRef r, const Cell& c) {
            if ((c.floor_e >= 0 && pred(soup_[c.floor_e])) ||
                (c.ceil_e >= 0 && pred(soup_[c.ceil_e])))
                out.push_back(r);
        });
        return out;
    }

    // Connected components of the selected cells; adjacency across slab
    // borders, blocked where an input vertical edge covers the shared span.
    std::vector<std::vector<CellRef>> components(const std::vector<CellRef>& sel) const;

    // Boundary walks of a selected cell set (interior-left). Border pieces
    // covered by input vertical edges inherit the edge tag; uncovered
    // synthesized borders are tagged Window.
    std::vector<Walk> trace(const std::vector<CellRef>& sel) const;

    double area(const std::vector<CellRef>& sel) const {
        double a = 0.0;
        for (CellRef r : sel) a += cell_area(r);
        return a;
    }

private:
    struct VSpan {
        double lo, hi;
        int edge;
    };

    void build();
    std::vector<VSpan> verticals_at(double x) const {
        std::vector<VSpan> out;
        for (std::size_t i = 0; i < soup_.size(); ++i) {
            const SoupEdge& e = soup_[i];
            if (std::fabs(e.a.x - x) <= eta_ && std::fabs(e.b.x - x) <= eta_)
                out.push_back({std::min(e.a.y, e.b.y), std::max(e.a.y, e.b.y),
                               static_cast<int>(i)});
        }
        return out;
    }

    double eta_;
    int ncycles_ = 0;
    std::vector<SoupEdge> soup_;
    std::vector<double> xs_;
    std::vector<std::vector<Cell>> cells_;
};

inline void SlabMap::build() {
    std::vector<double> xs;
    for (const auto& e : soup_) {
        xs.push_back(e.a.x);
        xs.push_back(e.b.x);
    }
    // pairwise crossings introduce dividers so no two edges cross inside a slab
    Point out[2];
    for (std::size_t i = 0; i < soup_.size(); ++i)
        for (std::size_t j = i + 1; j < soup_.size(); ++j) {
            int n = segment_intersections({soup_[i].a, soup_[i].b},
                                          {soup_[j].a, soup_[j].b}, eta_, out);
            for (int t = 0; t < n; ++t) xs.push_back(out[t].x);
        }
    std::sort(xs.begin(), xs.end());
    double span = xs.empty() ? 0.0 : xs.back() - xs.front();
    double tol = std::max(span * 1e-12, 1e-300);
    for (double x : xs)
        if (xs_.empty() || x - xs_.back() > tol) xs_.push_back(x);

    cells_.assign(slab_count(), {});
    struct Hit {
        double y_l, y_m, y_r;
        int edge;
        int sign;  // +1 when directed left-to-right
    };
    for (std::size_t s = 0; s < slab_count(); ++s) {
        double xl = xs_[s], xr = xs_[s + 1];
        double xm = 0.5 * (xl + xr);
        std::vector<Hit> hits;
        for (std::size_t i = 0; i < soup_.size(); ++i) {
            const SoupEdge& e = soup_[i];
            double exl = std::min(e.a.x, e.b.x), exr = std::max(e.a.x, e.b.x);
            if (exl > xm || exr < xm) continue;
            double dx = e.b.x - e.a.x;
            if (std::fabs(dx) <= eta_) continue;  // vertical: lives on dividers
            auto y_at = [&](double x) {
                double t = (x - e.a.x) / dx;
                t = std::min(1.0, std::max(0.0, t));
                return e.a.y + t * (e.b.y - e.a.y);
            };
            hits.push_back({y_at(xl), y_at(xm), y_at(xr), static_cast<int>(i),
                            dx > 0 ? 1 : -1});
        }
        std::sort(hits.begin(), hits.end(),
                  [](const Hit& a, const Hit& b) { return a.y_m < b.y_m; });
        // prefix winding per cycle, scanning upward
        std::vector<int> wind(ncycles_, 0);
        for (std::size_t h = 0; h + 1 < hits.size(); ++h) {
            wind[soup_[hits[h].edge].cycle] += hits[h].sign;
            std::uint32_t mask = 0;
            for (int c = 0; c < ncycles_; ++c)
                if (wind[c] != 0) mask |= (1u << c);
            if (mask == 0) continue;
            if (hits[h + 1].y_m - hits[h].y_m <= tol) continue;  // degenerate gap
            Cell cell;
            cell.slab = static_cast<int>(s);
            cell.y_lo_l = hits[h].y_l;
            cell.y_lo_r = hits[h].y_r;
            cell.y_hi_l = hits[h + 1].y_l;
            cell.y_hi_r = hits[h + 1].y_r;
            cell.floor_e = hits[h].edge;
            cell.ceil_e = hits[h + 1].edge;
            cell.inside = mask;
            cells_[s].push_back(cell);
        }
    }
}

inline std::vector<std::vector<SlabMap::CellRef>> SlabMap::components(
    const std::vector<CellRef>& sel) const {
    std::map<CellRef, int> index;
    for (std::size_t i = 0; i < sel.size(); ++i) index[sel[i]] = static_cast<int>(i);
    std::vector<int> comp(sel.size(), -1);
    std::vector<std::vector<CellRef>> out;
    for (std::size_t start = 0; start < sel.size(); ++start) {
        if (comp[start] >= 0) continue;
        int cid = static_cast<int>(out.size());
        out.emplace_back();
        std::vector<std::size_t> stack{start};
        comp[start] = cid;
        while (!stack.empty()) {
            std::size_t cur = stack.back();
            stack.pop_back();
            out[cid].push_back(sel[cur]);
            const Cell& c = cell(sel[cur]);
            for (int dir = -1; dir <= 1; dir += 2) {
                int ns = sel[cur].slab + dir;
                if (ns < 0 || ns >= static_cast<int>(slab_count())) continue;
                double x = dir < 0 ? xs_[sel[cur].slab] : xs_[sel[cur].slab + 1];
                double my_lo = dir < 0 ? c.y_lo_l : c.y_lo_r;
                double my_hi = dir < 0 ? c.y_hi_l : c.y_hi_r;
                auto blocks = verticals_at(x);
                for (std::size_t i = 0; i < cells_[ns].size(); ++i) {
                    CellRef nref{ns, static_cast<int>(i)};
                    auto it = index.find(nref);
                    if (it == index.end() || comp[it->second] >= 0) continue;
                    const Cell& n = cells_[ns][i];
                    double n_lo = dir < 0 ? n.y_lo_r : n.y_lo_l;
                    double n_hi = dir < 0 ? n.y_hi_r : n.y_hi_l;
                    double lo = std::max(my_lo, n_lo), hi = std::min(my_hi, n_hi);
                    if (hi - lo <= eta_) continue;
                    // subtract covered spans
                    double open = hi - lo;
                    for (const auto& v : blocks)
                        open -= std::max(0.0, std::min(hi, v.hi) - std::max(lo, v.lo));
                    if (open <= eta_) continue;
                    comp[it->second] = cid;
                    stack.push_back(it->second);
                }
            }
        }
    }
    return out;
}

inline std::vector<Walk> SlabMap::trace(const std::vector<CellRef>& sel) const {
    struct Piece {
        Point a, b;
        ETag tag;
        bool base;
    };
    std::vector<Piece> pieces;
    std::map<CellRef, bool> in_set;
    for (CellRef r : sel) in_set[r] = true;
    auto selected = [&](int slab, int idx) { return in_set.count({slab, idx}) > 0; };

    auto emit = [&](Point a, Point b, ETag t, bool base) {
        if (dist(a, b) > eta_) pieces.push_back({a, b, t, base});
    };

    for (CellRef r : sel) {
        const Cell& c = cell(r);
        double xl = xs_[c.slab], xr = xs_[c.slab + 1];
        // floor/ceiling pieces: skipped when the same soup edge also bounds a
        // selected cell on its other side (the edge is interior to the set);
        // slit copies have distinct soup indices and survive as two walls
        bool floor_interior = r.idx > 0 &&
                              cells_[r.slab][r.idx - 1].ceil_e == c.floor_e &&
                              selected(r.slab, r.idx - 1);
        bool ceil_interior = r.idx + 1 < static_cast<int>(cells_[r.slab].size()) &&
                             cells_[r.slab][r.idx + 1].floor_e == c.ceil_e &&
                             selected(r.slab, r.idx + 1);
        if (!floor_interior)
            emit({xl, c.y_lo_l}, {xr, c.y_lo_r}, soup_[c.floor_e].tag, soup_[c.floor_e].base);
        if (!ceil_interior)
            emit({xr, c.y_hi_r}, {xl, c.y_hi_l}, soup_[c.ceil_e].tag, soup_[c.ceil_e].base);
        // vertical borders: left walked down, right walked up
        for (int dir = -1; dir <= 1; dir += 2) {
            double x = dir < 0 ? xl : xr;
            double my_lo = dir < 0 ? c.y_lo_l : c.y_lo_r;
            double my_hi = dir < 0 ? c.y_hi_l : c.y_hi_r;
            auto verts = verticals_at(x);
            // sub-intervals shared with in-set neighbors; across a single
            // soup edge they are interior, across two coincident copies
            // (slits) they stay walls
            struct Span { double lo, hi; bool neighbor; };
            std::vector<Span> spans{{my_lo, my_hi, false}};
            int ns = r.slab + dir;
            if (ns >= 0 && ns < static_cast<int>(slab_count())) {
                for (std::size_t i = 0; i < cells_[ns].size(); ++i) {
                    if (!selected(ns, static_cast<int>(i))) continue;
                    const Cell& n = cells_[ns][i];
                    double n_lo = dir < 0 ? n.y_lo_r : n.y_lo_l;
                    double n_hi = dir < 0 ? n.y_hi_r : n.y_hi_l;
                    std::vector<Span> next;
                    for (const Span& sp : spans) {
                        if (sp.neighbor) { next.push_back(sp); continue; }
                        double a = std::max(sp.lo, n_lo), b = std::min(sp.hi, n_hi);
                        if (b - a <= eta_) { next.push_back(sp); continue; }
                        if (a - sp.lo > eta_) next.push_back({sp.lo, a, false});
                        next.push_back({a, b, true});
                        if (sp.hi - b > eta_) next.push_back({b, sp.hi, false});
                    }
                    spans.swap(next);
                }
            }
            for (const Span& sp : spans) {
                std::vector<double> cuts{sp.lo, sp.hi};
                for (const auto& v : verts) {
                    if (v.lo > sp.lo && v.lo < sp.hi) cuts.push_back(v.lo);
                    if (v.hi > sp.lo && v.hi < sp.hi) cuts.push_back(v.hi);
                }
                std::sort(cuts.begin(), cuts.end());
                for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
                    double a = cuts[i], b = cuts[i + 1];
                    if (b - a <= eta_) continue;
                    double mid = 0.5 * (a + b);
                    int cover = 0;
                    ETag tag = ETag::Window;
                    bool base = false;
                    for (const auto& v : verts)
                        if (v.lo <= mid && mid <= v.hi) {
                            if (cover == 0) { tag = soup_[v.edge].tag; base = soup_[v.edge].base; }
                            ++cover;
                        }
                    if (sp.neighbor && cover < 2) continue;       // interior border
                    if (dir < 0) emit({x, b}, {x, a}, tag, base);  // left border: down
                    else emit({x, a}, {x, b}, tag, base);          // right border: up
                }
            }
        }
    }

    // stitch pieces into closed walks, taking the sharpest left turn at
    // shared vertices so pinched regions stay weakly simple
    auto key = [&](Point p) {
        double q = std::max(eta_, 1e-300);
        return std::pair<long long, long long>(std::llround(p.x / q), std::llround(p.y / q));
    };
    std::vector<Piece> survivors = std::move(pieces);
    std::multimap<std::pair<long long, long long>, std::size_t> starts;
    for (std::size_t i = 0; i < survivors.size(); ++i)
        starts.insert({key(survivors[i].a), i});
    std::vector<Walk> walks;
    std::vector<bool> used(survivors.size(), false);
    for (std::size_t s0 = 0; s0 < survivors.size(); ++s0) {
        if (used[s0]) continue;
        Walk w;
        std::size_t cur = s0;
        Point start = survivors[s0].a;
        for (std::size_t guard = 0; guard <= survivors.size() + 1; ++guard) {
            used[cur] = true;
            const Piece& pc = survivors[cur];
            w.edges.push_back({pc.a, pc.b, pc.tag, pc.base});
            if (dist(pc.b, start) <= 2 * eta_ && w.edges.size() >= 2) break;
            // next piece: sharpest left turn
            auto range = starts.equal_range(key(pc.b));
            double best = -10.0;
            std::size_t next = survivors.size();
            Point din = pc.b - pc.a;
            double lin = norm(din);
            for (auto it = range.first; it != range.second; ++it) {
                std::size_t j = it->second;
                if (used[j]) continue;
                Point dout = survivors[j].b - survivors[j].a;
                double lo = norm(dout);
                if (lo <= 0 || lin <= 0) continue;
                double cosv = dot(din, dout) / (lin * lo);
                double sinv = cross(din, dout) / (lin * lo);
                double score = std::atan2(sinv, cosv);  // (-pi, pi]; most ccw first
                if (score > best) { best = score; next = j; }
            }
            if (next == survivors.size()) break;  // open chain: numerical leak
            cur = next;
        }
        if (w.edges.size() >= 3) {
            // merge consecutive collinear pieces with equal tags
            Walk merged;
            for (const auto& e : w.edges) {
                if (!merged.edges.empty()) {
                    auto& last = merged.edges.back();
                    Point d1 = last.b - last.a, d2 = e.b - e.a;
                    if (last.tag == e.tag && last.base == e.base &&
                        dist(last.b, e.a) <= 2 * eta_ &&
                        std::fabs(cross(d1, d2)) <= 1e-12 * norm(d1) * norm(d2) &&
                        dot(d1, d2) > 0) {
                        last.b = e.b;
                        continue;
                    }
                }
                merged.edges.push_back(e);
            }
            walks.push_back(std::move(merged));
        }
    }
    return walks;
}

}  // namespace stspan
