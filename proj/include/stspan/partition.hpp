#pragma once

// Decomposition of rectilinear faces into fuzzy staircases and tame
// histograms:
//   - window_partition: recursion alternating vertical-visibility histogram
//     instances (windows expanded into Lambda-paths by double-slope
//     visibility) and horizontal-visibility fuzzy-histogram instances;
//   - fuzzy_to_staircases: chord through the leftmost gamma vertex, initial
//     staircases by vertical visibility, pocket expansion by double-slope
//     visibility, recursion on leftover fuzzy histograms;
//   - lambda_to_tame: top-down sweep cutting a tame histogram whenever a
//     horizontal chord ab reaches ||L_ab|| = 2||ab||;
//   - tile: the composition.

#include <algorithm>
#include <cmath>
#include <deque>
#include <set>
#include <vector>

#include "stspan/geom.hpp"
#include "stspan/region.hpp"

namespace stspan {

struct TypeMismatch : Error {
    explicit TypeMismatch(const std::string& w) : Error("face type mismatch: " + w) {}
};
struct ChordViolation : Error {
    ChordViolation() : Error("chord between same-orientation Lambda paths") {}
};

enum class FaceTag : std::uint8_t {
    XMonotoneLambdaHistogram,
    YMonotoneFuzzyHistogram,
    FuzzyStaircase,
    TameHistogram,
};

inline const char* face_tag_name(FaceTag t) {
    switch (t) {
        case FaceTag::XMonotoneLambdaHistogram: return "lambda_histogram";
        case FaceTag::YMonotoneFuzzyHistogram: return "fuzzy_histogram";
        case FaceTag::FuzzyStaircase: return "fuzzy_staircase";
        case FaceTag::TameHistogram: return "tame_histogram";
    }
    return "?";
}

namespace part_detail {
inline bool is_horizontal(const WalkEdge& e, double eta) {
    return std::fabs(e.b.y - e.a.y) <= eta;
}
inline bool is_vertical(const WalkEdge& e, double eta) {
    return std::fabs(e.b.x - e.a.x) <= eta;
}
}  // namespace part_detail

struct Face {
    FaceTag tag;
    Walk boundary;  // interior-left; base edges carry base=true

    double per() const { return boundary.perimeter(); }
    double hper() const {
        double s = 0;
        for (const auto& e : boundary.edges)
            if (part_detail::is_horizontal(e, 1e-12 * scale())) s += dist(e.a, e.b);
        return s;
    }
    double vper() const { return per() - hper(); }
    double area() const { return boundary.signed_area(); }
    double scale() const {
        double m = 0;
        for (const auto& e : boundary.edges)
            m = std::max({m, std::fabs(e.a.x), std::fabs(e.a.y)});
        return std::max(m, 1.0);
    }
    std::vector<WalkEdge> base_edges() const {
        std::vector<WalkEdge> out;
        for (const auto& e : boundary.edges)
            if (e.base) out.push_back(e);
        return out;
    }
    std::vector<WalkEdge> side_edges() const {
        std::vector<WalkEdge> out;
        for (const auto& e : boundary.edges)
            if (!e.base) out.push_back(e);
        return out;
    }
};

struct Tiling {
    std::vector<Face> faces;
    std::vector<WalkEdge> subdivision_edges;
    double input_per = 0.0;

    double total_per() const {
        double s = 0;
        for (const auto& f : faces) s += f.per();
        return s;
    }
    double total_hper() const {
        double s = 0;
        for (const auto& f : faces) s += f.hper();
        return s;
    }
    double total_area() const {
        double s = 0;
        for (const auto& f : faces) s += f.area();
        return s;
    }
    double subdivision_weight() const {
        double s = 0;
        for (const auto& e : subdivision_edges) s += dist(e.a, e.b);
        return s;
    }
};

// Validating constructor for simple rectilinear polygons given as a ccw
// vertex loop.
inline Walk make_rectilinear_polygon(const std::vector<Point>& ccw, double eta = kEtaRel) {
    if (ccw.size() < 4) throw InvalidPolygon("fewer than 4 vertices");
    Walk w;
    for (std::size_t i = 0; i < ccw.size(); ++i) {
        Point a = ccw[i], b = ccw[(i + 1) % ccw.size()];
        if (dist(a, b) <= eta) continue;
        WalkEdge e{a, b, ETag::Boundary, false};
        if (!part_detail::is_horizontal(e, eta) && !part_detail::is_vertical(e, eta))
            throw InvalidPolygon("edge is not axis-parallel");
        w.edges.push_back(e);
    }
    if (w.signed_area() <= 0) throw InvalidPolygon("vertex loop must be counterclockwise");
    // simplicity: no transversal crossings between non-adjacent edges
    Point out[2];
    for (std::size_t i = 0; i < w.edges.size(); ++i)
        for (std::size_t j = i + 2; j < w.edges.size(); ++j) {
            if (i == 0 && j + 1 == w.edges.size()) continue;
            int n = segment_intersections({w.edges[i].a, w.edges[i].b},
                                          {w.edges[j].a, w.edges[j].b}, eta, out);
            if (n > 0) throw InvalidPolygon("self-intersecting boundary");
        }
    return w;
}

namespace part_detail {

using CellRef = SlabMap::CellRef;

inline std::vector<CellRef> inside_cells(const SlabMap& m, std::uint32_t cycle_bit = 1u) {
    std::vector<CellRef> out;
    m.for_each_cell([&](CellRef r, const SlabMap::Cell& c) {
        if (c.inside & cycle_bit) out.push_back(r);
    });
    return out;
}

inline std::vector<CellRef> subtract(const std::vector<CellRef>& all,
                                     const std::vector<CellRef>& sub) {
    std::vector<CellRef> out;
    std::set<std::pair<int, int>> s;
    for (auto r : sub) s.insert({r.slab, r.idx});
    for (auto r : all)
        if (!s.count({r.slab, r.idx})) out.push_back(r);
    return out;
}

inline void clear_base(Walk& w) {
    for (auto& e : w.edges) e.base = false;
}

// Largest-area walk (guards against stray slivers from tracing).
inline Walk biggest(std::vector<Walk> walks) {
    if (walks.empty()) return {};
    std::size_t best = 0;
    for (std::size_t i = 1; i < walks.size(); ++i)
        if (walks[i].signed_area() > walks[best].signed_area()) best = i;
    return walks[best];
}

// Double-slope visibility expansion of a window: the window pieces of
// `pocket` are marked base=true; returns the region reachable from the
// window by segments of both slopes +sigma and -sigma, bounded by
// slope-tagged closing edges. Empty when degenerate.
inline std::vector<Walk> expand_window(const Walk& pocket, double sigma, double eta) {
    std::vector<Walk> sides[2];
    for (int s = 0; s < 2; ++s) {
        double sg = s == 0 ? sigma : -sigma;
        Walk sh = shear(pocket, sg);
        SlabMap m({&sh}, eta);
        auto vis = m.cells_touching([](const SlabMap::SoupEdge& e) { return e.base; });
        if (vis.empty()) return {};
        for (Walk& w : m.trace(vis)) {
            Walk back = unshear(w, sg, s == 0 ? ETag::SlopePos : ETag::SlopeNeg);
            if (back.signed_area() > eta * eta) sides[s].push_back(std::move(back));
        }
        if (sides[s].empty()) return {};
    }
    std::vector<const Walk*> cycles;
    for (const Walk& w : sides[0]) cycles.push_back(&w);
    for (const Walk& w : sides[1]) cycles.push_back(&w);
    std::uint32_t mask_pos = (1u << sides[0].size()) - 1u;
    std::uint32_t mask_neg = ((1u << cycles.size()) - 1u) & ~mask_pos;
    SlabMap m(cycles, eta);
    std::vector<CellRef> both;
    m.for_each_cell([&](CellRef r, const SlabMap::Cell& c) {
        if ((c.inside & mask_pos) && (c.inside & mask_neg)) both.push_back(r);
    });
    std::vector<Walk> out;
    for (Walk& w : m.trace(both)) {
        clear_base(w);
        if (w.signed_area() > eta * eta) out.push_back(std::move(w));
    }
    return out;
}

}  // namespace part_detail

// ---------------------------------------------------------------------------
// Modified window partition: x-monotone Lambda-histograms and y-monotone
// fuzzy histograms.

inline Tiling window_partition(const Walk& polygon, double lambda, double eps,
                               double eta_rel = kEtaRel) {
    using namespace part_detail;
    if (!(lambda >= 8.0)) throw OutOfRange("lambda must be >= 8");
    if (!(eps > 0 && eps < 1)) throw OutOfRange("eps must be in (0,1)");
    double sigma = lambda / std::sqrt(eps);

    Tiling tiling;
    tiling.input_per = polygon.perimeter();
    double frame = 0;
    for (const auto& e : polygon.edges)
        frame = std::max({frame, std::fabs(e.a.x), std::fabs(e.a.y)});
    double eta = eta_rel * std::max(frame, 1.0);

    struct Instance {
        Walk walk;        // base-marked gamma
        bool horizontal;  // gamma is a horizontal edge (histogram step)
    };
    std::deque<Instance> queue;

    // initial gamma: bottommost horizontal edge, leftmost on ties
    {
        Walk start = polygon;
        clear_base(start);
        int pick = -1;
        for (std::size_t i = 0; i < start.edges.size(); ++i) {
            if (!is_horizontal(start.edges[i], eta)) continue;
            if (pick < 0) { pick = static_cast<int>(i); continue; }
            const auto& e = start.edges[i];
            const auto& b = start.edges[pick];
            double ey = 0.5 * (e.a.y + e.b.y), by = 0.5 * (b.a.y + b.b.y);
            double ex = std::min(e.a.x, e.b.x), bx = std::min(b.a.x, b.b.x);
            if (ey < by - eta || (std::fabs(ey - by) <= eta && ex < bx)) pick = static_cast<int>(i);
        }
        if (pick < 0) throw InvalidPolygon("no horizontal edge");
        start.edges[pick].base = true;
        queue.push_back({std::move(start), true});
    }

    auto record_subdivision = [&](const Walk& w) {
        for (const auto& e : w.edges)
            if (e.tag == ETag::Window || e.tag == ETag::SlopePos || e.tag == ETag::SlopeNeg)
                tiling.subdivision_edges.push_back(e);
    };

    std::size_t guard = 0;
    while (!queue.empty()) {
        if (++guard > 20000) throw Error("window partition did not terminate");
        Instance inst = std::move(queue.front());
        queue.pop_front();
        if (inst.walk.signed_area() <= eta * eta) continue;

        if (inst.horizontal) {
            // histogram step: vertical visibility + window expansion
            SlabMap m0({&inst.walk}, eta);
            auto in_r = inside_cells(m0);
            auto h0 = m0.cells_touching([](const SlabMap::SoupEdge& e) { return e.base; });
            auto rest = subtract(in_r, h0);
            std::vector<Walk> expansions;
            for (auto& comp : m0.components(rest)) {
                auto walks = m0.trace(comp);
                for (Walk& cw : walks) {
                    if (cw.signed_area() <= eta * eta) continue;
                    // the window: synthesized vertical border pieces
                    bool any = false;
                    for (auto& e : cw.edges) {
                        e.base = (e.tag == ETag::Window && is_vertical(e, eta));
                        any = any || e.base;
                    }
                    if (!any) continue;
                    for (Walk& ex : expand_window(cw, sigma, eta))
                        expansions.push_back(std::move(ex));
                }
            }
            std::vector<const Walk*> cycles{&inst.walk};
            for (const Walk& w : expansions) cycles.push_back(&w);
            SlabMap m1(cycles, eta);
            auto all1 = inside_cells(m1, 1u);
            std::uint32_t exp_mask = 0xfffffffeu;
            std::vector<CellRef> hcells;
            {
                auto base_adj = m1.cells_touching([](const SlabMap::SoupEdge& e) { return e.base; });
                std::set<std::pair<int, int>> hs;
                for (auto r : base_adj) hs.insert({r.slab, r.idx});
                for (auto r : all1) {
                    if (hs.count({r.slab, r.idx})) { hcells.push_back(r); continue; }
                    if (m1.cell(r).inside & exp_mask) hcells.push_back(r);
                }
            }
            for (Walk& fw : m1.trace(hcells)) {
                if (fw.signed_area() <= eta * eta) continue;
                record_subdivision(fw);
                tiling.faces.push_back({FaceTag::XMonotoneLambdaHistogram, fw});
            }
            auto rest1 = subtract(all1, hcells);
            for (auto& comp : m1.components(rest1)) {
                for (Walk& cw : m1.trace(comp)) {
                    if (cw.signed_area() <= eta * eta) continue;
                    bool has_slope = false;
                    for (auto& e : cw.edges) {
                        e.base = (e.tag == ETag::SlopePos || e.tag == ETag::SlopeNeg);
                        has_slope = has_slope || e.base;
                    }
                    if (has_slope) {
                        queue.push_back({std::move(cw), false});
                    } else {
                        // no slope wall: restart from a bottommost horizontal edge
                        int pick = -1;
                        for (std::size_t i = 0; i < cw.edges.size(); ++i)
                            if (is_horizontal(cw.edges[i], eta) &&
                                (pick < 0 || cw.edges[i].a.y < cw.edges[pick].a.y))
                                pick = static_cast<int>(i);
                        if (pick >= 0) {
                            cw.edges[pick].base = true;
                            queue.push_back({std::move(cw), true});
                        }
                    }
                }
            }
        } else {
            // fuzzy step: horizontal visibility from the slope path gamma
            Walk t = transpose(inst.walk);
            SlabMap m({&t}, eta);
            auto vis = m.cells_touching([](const SlabMap::SoupEdge& e) { return e.base; });
            auto in_r = inside_cells(m);
            for (Walk& fwt : m.trace(vis)) {
                Walk fw = transpose(fwt);
                if (fw.signed_area() <= eta * eta) continue;
                record_subdivision(fw);
                tiling.faces.push_back({FaceTag::YMonotoneFuzzyHistogram, fw});
            }
            auto rest = subtract(in_r, vis);
            for (auto& comp : m.components(rest)) {
                for (Walk& cwt : m.trace(comp)) {
                    Walk cw = transpose(cwt);
                    if (cw.signed_area() <= eta * eta) continue;
                    // window e(C): synthesized horizontal border
                    bool any = false;
                    for (auto& e : cw.edges) {
                        e.base = (e.tag == ETag::Window && is_horizontal(e, eta));
                        any = any || e.base;
                    }
                    if (any) queue.push_back({std::move(cw), true});
                }
            }
        }
    }
    return tiling;
}

// ---------------------------------------------------------------------------
// Fuzzy histogram -> fuzzy staircases.

inline Tiling fuzzy_to_staircases(const Face& input, double lambda, double eps,
                                  double eta_rel = kEtaRel) {
    using namespace part_detail;
    if (input.tag != FaceTag::YMonotoneFuzzyHistogram)
        throw TypeMismatch("fuzzy_to_staircases needs a fuzzy histogram");
    double sigma = lambda / std::sqrt(eps);
    double eta = eta_rel * input.scale();

    Tiling out;
    out.input_per = input.per();

    std::deque<Walk> queue{input.boundary};
    std::size_t guard = 0;
    while (!queue.empty()) {
        if (++guard > 20000) throw Error("fuzzy subdivision did not terminate");
        Walk h = std::move(queue.front());
        queue.pop_front();
        if (h.signed_area() <= eta * eta) continue;

        // d: leftmost vertex of gamma (the base-marked slope path)
        bool has_gamma = false;
        Point d{0, 0};
        for (const auto& e : h.edges) {
            if (!e.base) continue;
            for (Point p : {e.a, e.b})
                if (!has_gamma || p.x < d.x - eta ||
                    (std::fabs(p.x - d.x) <= eta && p.y < d.y)) {
                    d = p;
                    has_gamma = true;
                }
        }
        if (!has_gamma) {
            // no gamma left: emit as a (degenerate) fuzzy staircase
            out.faces.push_back({FaceTag::FuzzyStaircase, h});
            continue;
        }

        // doubled chord line through y(d) splits cells at the chord height
        double xmin = 1e300, xmax = -1e300;
        for (const auto& e : h.edges) {
            xmin = std::min({xmin, e.a.x, e.b.x});
            xmax = std::max({xmax, e.a.x, e.b.x});
        }
        Walk chord;
        chord.edges.push_back({{xmin - 1, d.y}, {xmax + 1, d.y}, ETag::Window, false});
        chord.edges.push_back({{xmax + 1, d.y}, {xmin - 1, d.y}, ETag::Window, false});

        SlabMap m0({&h, &chord}, eta);
        auto in_h = inside_cells(m0, 1u);
        // A0: cells below the chord seeing cd or gamma_2 by a vertical line;
        // B0: cells above seeing cd or gamma_1 (the chord cycle splits every
        // cell at y(d), so cells lie strictly on one side)
        auto classify0 = [&](const SlabMap& m, const SlabMap::Cell& c, Point ctr) -> int {
            auto gamma_side_ok = [&](int ei, bool below) {
                if (ei < 0) return false;
                const auto& e = m.soup()[ei];
                if (!e.base) return false;
                return below ? std::max(e.a.y, e.b.y) <= d.y + eta
                             : std::min(e.a.y, e.b.y) >= d.y - eta;
            };
            auto chord_piece = [&](int ei) {
                return ei >= 0 && m.soup()[ei].cycle == 1;
            };
            if (ctr.y < d.y) {
                if (chord_piece(c.ceil_e) || gamma_side_ok(c.ceil_e, true) ||
                    gamma_side_ok(c.floor_e, true))
                    return 0;  // A0
            } else {
                if (chord_piece(c.floor_e) || gamma_side_ok(c.floor_e, false) ||
                    gamma_side_ok(c.ceil_e, false))
                    return 1;  // B0
            }
            return -1;
        };
        std::vector<CellRef> a0, b0;
        for (auto r : in_h) {
            int side = classify0(m0, m0.cell(r), m0.cell_center(r));
            if (side == 0) a0.push_back(r);
            else if (side == 1) b0.push_back(r);
        }

        std::set<std::pair<int, int>> a_set, b_set;
        for (auto r : a0) a_set.insert({r.slab, r.idx});
        for (auto r : b0) b_set.insert({r.slab, r.idx});

        auto pockets_cells = subtract(subtract(in_h, a0), b0);
        std::vector<Walk> exp_a, exp_b;
        for (auto& comp : m0.components(pockets_cells)) {
            // which side does the pocket's window face?
            bool to_a = false, to_b = false;
            for (auto r : comp) {
                for (int dir = -1; dir <= 1; dir += 2) {
                    int ns = r.slab + dir;
                    if (ns < 0 || ns >= static_cast<int>(m0.slab_count())) continue;
                    for (std::size_t i = 0; i < m0.cells(ns).size(); ++i) {
                        if (a_set.count({ns, static_cast<int>(i)})) to_a = true;
                        if (b_set.count({ns, static_cast<int>(i)})) to_b = true;
                    }
                }
            }
            for (Walk& pw : m0.trace(comp)) {
                if (pw.signed_area() <= eta * eta) continue;
                bool any = false;
                for (auto& e : pw.edges) {
                    e.base = (e.tag == ETag::Window && is_vertical(e, eta));
                    any = any || e.base;
                }
                if (!any) continue;
                for (Walk& ex : expand_window(pw, sigma, eta)) {
                    if (to_a && !to_b) exp_a.push_back(std::move(ex));
                    else exp_b.push_back(std::move(ex));
                }
            }
        }

        std::vector<const Walk*> cycles{&h, &chord};
        for (const Walk& w : exp_a) cycles.push_back(&w);
        for (const Walk& w : exp_b) cycles.push_back(&w);
        if (cycles.size() > 30) throw Error("too many expansion cycles");
        std::uint32_t mask_a = 0, mask_b = 0;
        for (std::size_t i = 0; i < exp_a.size(); ++i) mask_a |= 1u << (2 + i);
        for (std::size_t i = 0; i < exp_b.size(); ++i) mask_b |= 1u << (2 + exp_a.size() + i);
        SlabMap m1(cycles, eta);
        auto all1 = inside_cells(m1, 1u);

        // re-evaluate A0/B0 on the refined map and fold in the expansions
        std::vector<CellRef> acells, bcells, rest1;
        for (auto r : all1) {
            const auto& c = m1.cell(r);
            if (c.inside & mask_a) { acells.push_back(r); continue; }
            if (c.inside & mask_b) { bcells.push_back(r); continue; }
            int side = classify0(m1, c, m1.cell_center(r));
            if (side == 0) acells.push_back(r);
            else if (side == 1) bcells.push_back(r);
            else rest1.push_back(r);
        }

        auto emit_stair = [&](std::vector<CellRef>& cells) {
            for (auto& comp : m1.components(cells))
                for (Walk& fw : m1.trace(comp)) {
                    if (fw.signed_area() <= eta * eta) continue;
                    for (auto& e : fw.edges)
                        e.base = (e.tag == ETag::Window && is_horizontal(e, eta) &&
                                  std::fabs(e.a.y - d.y) <= eta);
                    for (const auto& e : fw.edges)
                        if (e.tag == ETag::Window || e.tag == ETag::SlopePos ||
                            e.tag == ETag::SlopeNeg)
                            out.subdivision_edges.push_back(e);
                    out.faces.push_back({FaceTag::FuzzyStaircase, fw});
                }
        };
        emit_stair(acells);
        emit_stair(bcells);

        for (auto& comp : m1.components(rest1)) {
            for (Walk& cw : m1.trace(comp)) {
                if (cw.signed_area() <= eta * eta) continue;
                bool any = false;
                for (auto& e : cw.edges) {
                    e.base = (e.tag == ETag::SlopePos || e.tag == ETag::SlopeNeg);
                    any = any || e.base;
                }
                if (!any) {
                    out.faces.push_back({FaceTag::FuzzyStaircase, cw});
                    continue;
                }
                queue.push_back(std::move(cw));
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Lambda histogram -> tame histograms (top-down sweepline).

inline Tiling lambda_to_tame(const Face& input, double eta_rel = kEtaRel) {
    using namespace part_detail;
    if (input.tag != FaceTag::XMonotoneLambdaHistogram)
        throw TypeMismatch("lambda_to_tame needs a Lambda histogram");
    double eta = eta_rel * input.scale();

    // canonical orientation: base at the bottom
    bool flipped = false;
    Walk w = input.boundary;
    {
        double bx = 0;
        for (const auto& e : w.edges)
            if (e.base) bx += (e.b.x - e.a.x);
        if (bx < 0) {  // base walked right-to-left: interior below
            double axis = 0;
            w = flip_y(w, axis);
            flipped = true;
        }
    }

    // rotate the walk so the base comes first, then read off L = q -> ... -> p
    std::size_t b0 = 0;
    while (b0 < w.edges.size() && !w.edges[b0].base) ++b0;
    if (b0 == w.edges.size()) throw TypeMismatch("histogram face has no base edge");
    std::vector<WalkEdge> rot(w.edges.begin() + b0, w.edges.end());
    rot.insert(rot.end(), w.edges.begin(), w.edges.begin() + b0);
    std::size_t nbase = 0;
    while (nbase < rot.size() && rot[nbase].base) ++nbase;
    double base_y = rot[0].a.y;
    std::vector<Point> L;  // from q over the top to p
    L.push_back(rot[nbase].a);
    for (std::size_t i = nbase; i < rot.size(); ++i) L.push_back(rot[i].b);

    Tiling out;
    out.input_per = input.per();

    auto arc = [&](std::size_t ea, double ta, std::size_t eb, double tb) {
        // path length along L between two params, either order
        if (eb < ea || (ea == eb && tb < ta)) {
            std::swap(ea, eb);
            std::swap(ta, tb);
        }
        double s = 0;
        if (ea == eb) return dist(Segment{L[ea], L[ea + 1]}.at(ta),
                                  Segment{L[eb], L[eb + 1]}.at(tb));
        s += dist(Segment{L[ea], L[ea + 1]}.at(ta), L[ea + 1]);
        for (std::size_t e = ea + 1; e < eb; ++e) s += dist(L[e], L[e + 1]);
        s += dist(L[eb], Segment{L[eb], L[eb + 1]}.at(tb));
        return s;
    };

    struct Crossing {
        std::size_t edge;
        double t;
        double x;
    };
    auto crossings_at = [&](double y) {
        std::vector<Crossing> cs;
        for (std::size_t e = 0; e + 1 < L.size(); ++e) {
            double y0 = L[e].y, y1 = L[e + 1].y;
            if ((y0 < y && y1 < y) || (y0 > y && y1 > y)) continue;
            if (std::fabs(y1 - y0) <= eta) continue;  // horizontal at the line
            double t = (y - y0) / (y1 - y0);
            if (t < -1e-12 || t > 1 + 1e-12) continue;
            t = std::min(1.0, std::max(0.0, t));
            cs.push_back({e, t, L[e].x + t * (L[e + 1].x - L[e].x)});
        }
        std::sort(cs.begin(), cs.end(), [](const Crossing& a, const Crossing& b) {
            return a.x < b.x;
        });
        return cs;
    };

    std::size_t guard = 0;
    while (true) {
        if (++guard > 5000) throw Error("tame sweep did not terminate");
        // event heights, descending
        std::vector<double> ys;
        for (const Point& p : L) ys.push_back(p.y);
        std::sort(ys.begin(), ys.end(), std::greater<double>());
        ys.erase(std::unique(ys.begin(), ys.end(),
                             [&](double a, double b) { return std::fabs(a - b) <= eta; }),
                 ys.end());
        while (!ys.empty() && ys.back() < base_y + eta) ys.pop_back();
        ys.push_back(base_y);

        bool cut_done = false;
        for (std::size_t band = 0; band + 1 < ys.size() && !cut_done; ++band) {
            double yh = ys[band], yl = ys[band + 1];
            if (yh - yl <= eta) continue;
            double y_top = yh - (yh - yl) * 1e-9;
            double y_bot = yl + (yh - yl) * 1e-9;
            auto top_cs = crossings_at(y_top);
            auto bot_cs = crossings_at(y_bot);
            if (top_cs.size() != bot_cs.size() || top_cs.size() % 2) continue;
            double best_y = -1e300;
            std::size_t best_i = 0;
            for (std::size_t i = 0; i + 1 < top_cs.size(); i += 2) {
                double f_top = arc(top_cs[i].edge, top_cs[i].t, top_cs[i + 1].edge,
                                   top_cs[i + 1].t) -
                               2 * (top_cs[i + 1].x - top_cs[i].x);
                double f_bot = arc(bot_cs[i].edge, bot_cs[i].t, bot_cs[i + 1].edge,
                                   bot_cs[i + 1].t) -
                               2 * (bot_cs[i + 1].x - bot_cs[i].x);
                if (f_top < -eta && f_bot >= -eta) {
                    // crosses zero from below while sweeping down
                    double u = f_top / (f_top - f_bot);  // in [0,1]
                    double y_cut = y_top + u * (y_bot - y_top);
                    if (y_cut > best_y) { best_y = y_cut; best_i = i; }
                }
            }
            if (best_y > -1e299) {
                best_y = std::min(std::max(best_y, yl), yh);
                auto cs = crossings_at(best_y);
                if (cs.size() % 2) continue;
                std::size_t i = std::min(best_i, cs.size() - 2);
                auto ca = cs[i], cb = cs[i + 1];  // left and right by x
                // subchain between the two crossings in L's parameter order
                auto first = ca, second = cb;
                if (second.edge < first.edge ||
                    (second.edge == first.edge && second.t < first.t))
                    std::swap(first, second);
                Point pf{first.x, best_y}, ps{second.x, best_y};
                // walk: chord, then the L subchain from `second` back to `first`
                Walk piece;
                piece.edges.push_back({pf, ps, ETag::Window, true});
                std::vector<Point> sub{pf};
                for (std::size_t e = first.edge + 1; e <= second.edge; ++e)
                    sub.push_back(L[e]);
                sub.push_back(ps);
                for (std::size_t v = sub.size(); v-- > 1;)
                    piece.edges.push_back({sub[v], sub[v - 1], ETag::Boundary, false});
                if (piece.signed_area() < 0) {
                    // orientation came out clockwise: reverse the walk
                    Walk rev;
                    for (auto it = piece.edges.rbegin(); it != piece.edges.rend(); ++it)
                        rev.edges.push_back({it->b, it->a, it->tag, it->base});
                    piece = std::move(rev);
                }
                if (piece.signed_area() > eta * eta) {
                    Walk emitted = flipped ? flip_y(piece) : piece;
                    for (const auto& e : emitted.edges)
                        if (e.tag == ETag::Window) out.subdivision_edges.push_back(e);
                    out.faces.push_back({FaceTag::TameHistogram, std::move(emitted)});
                }
                // splice the subchain out of L
                std::vector<Point> nl(L.begin(), L.begin() + first.edge + 1);
                nl.push_back(pf);
                nl.push_back(ps);
                nl.insert(nl.end(), L.begin() + second.edge + 1, L.end());
                L = std::move(nl);
                cut_done = true;
            }
        }
        if (!cut_done) break;
    }

    // remainder: base + current L
    Walk rem;
    rem.edges.push_back({L.back(), L.front(), ETag::Boundary, true});
    for (std::size_t i = 0; i + 1 < L.size(); ++i)
        rem.edges.push_back({L[i], L[i + 1], ETag::Boundary, false});
    // restore base tags from the original
    rem.edges[0].base = true;
    if (rem.signed_area() > eta * eta)
        out.faces.push_back({FaceTag::TameHistogram, flipped ? flip_y(rem) : rem});
    return out;
}

// ---------------------------------------------------------------------------
// The composition: window partition, then per-face splitting.

inline Tiling tile(const Walk& polygon, double lambda, double eps,
                   double eta_rel = kEtaRel) {
    Tiling first = window_partition(polygon, lambda, eps, eta_rel);
    Tiling out;
    out.input_per = first.input_per;
    out.subdivision_edges = first.subdivision_edges;
    for (const Face& f : first.faces) {
        Tiling sub;
        if (f.tag == FaceTag::YMonotoneFuzzyHistogram) {
            sub = fuzzy_to_staircases(f, lambda, eps, eta_rel);
        } else if (f.tag == FaceTag::XMonotoneLambdaHistogram) {
            sub = lambda_to_tame(f, eta_rel);
        } else {
            out.faces.push_back(f);
            continue;
        }
        for (auto& sf : sub.faces) out.faces.push_back(std::move(sf));
        for (auto& se : sub.subdivision_edges) out.subdivision_edges.push_back(se);
    }
    return out;
}

}  // namespace stspan
