#pragma once

// Per-face directional (1+eps)-spanners.
//
// The constructions serve chords of slope at least min_slope (eps^{-1/2} by
// default) below a path L:
//   - staircase_spanner: shadow-polygon recursion U -> V -> W with an SLT
//     ladder per V region (dyadic height strips above the bottom vertex);
//   - tame_path_spanner: the same recursion with ascending/descending
//     Lambda-path roles and hper-based contraction;
//   - tame_base_spanner: geometric strip squares over the base with a
//     combined SLT gadget per occupied square;
//   - fuzzy_staircase_spanner: the three cases between base, slope side and
//     staircase side;
//   - face_spanner: the dispatcher.
//
// All constructions attach to the face boundary through a ChainStore so that
// boundary edges end up subdivided at every take-off vertex.

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "stspan/config.hpp"
#include "stspan/geom.hpp"
#include "stspan/graph.hpp"
#include "stspan/partition.hpp"
#include "stspan/slt.hpp"

namespace stspan {

struct TamenessViolation : Error {
    TamenessViolation() : Error("path is not tame") {}
};
struct NotBottomMost : Error {
    NotBottomMost() : Error("b is not the bottom-most point of L_ab") {}
};

// ---------------------------------------------------------------------------
// Boundary chain store: face boundary (and gadget chords) with registered
// attachment points; emits every segment subdivided at its attachments.

class ChainStore {
public:
    explicit ChainStore(double eta) : eta_(eta) {}

    void add_segment(Point a, Point b) {
        if (dist(a, b) > eta_) entries_.push_back({a, b, {}});
    }
    void add_walk(const Walk& w) {
        for (const auto& e : w.edges) add_segment(e.a, e.b);
    }
    void add_path(const PolyPath& p) {
        for (std::size_t i = 0; i + 1 < p.vertices.size(); ++i)
            add_segment(p.vertices[i], p.vertices[i + 1]);
    }

    // Snap p onto the nearest stored segment within tol and register the cut.
    Point attach(Point p, double tol) {
        double best = tol;
        std::size_t bi = entries_.size();
        double bt = 0;
        for (std::size_t i = 0; i < entries_.size(); ++i) {
            const auto& e = entries_[i];
            Point d = e.b - e.a;
            double len2 = dot(d, d);
            if (len2 <= 0) continue;
            double t = std::clamp(dot(p - e.a, d) / len2, 0.0, 1.0);
            Point q{e.a.x + t * d.x, e.a.y + t * d.y};
            double dd = dist(p, q);
            if (dd <= best) { best = dd; bi = i; bt = t; }
        }
        if (bi == entries_.size()) return p;  // nothing nearby: keep as-is
        entries_[bi].ts.push_back(bt);
        Point d = entries_[bi].b - entries_[bi].a;
        return {entries_[bi].a.x + bt * d.x, entries_[bi].a.y + bt * d.y};
    }

    void emit(GeoGraph& g) const {
        for (const auto& e : entries_) {
            std::vector<double> ts = e.ts;
            ts.push_back(0.0);
            ts.push_back(1.0);
            std::sort(ts.begin(), ts.end());
            Point d = e.b - e.a;
            for (std::size_t i = 0; i + 1 < ts.size(); ++i) {
                if (ts[i + 1] - ts[i] < 1e-12) continue;
                Point a{e.a.x + ts[i] * d.x, e.a.y + ts[i] * d.y};
                Point b{e.a.x + ts[i + 1] * d.x, e.a.y + ts[i + 1] * d.y};
                if (dist(a, b) > eta_) g.add_segment(a, b);
            }
        }
    }

private:
    struct Entry {
        Point a, b;
        std::vector<double> ts;
    };
    double eta_;
    std::vector<Entry> entries_;
};

// ---------------------------------------------------------------------------
// Demands located on a polyline.

struct PathPos {
    std::size_t edge = 0;
    double t = 0;
    Point p;

    bool operator<(const PathPos& o) const {
        return edge != o.edge ? edge < o.edge : t < o.t;
    }
};

inline std::optional<PathPos> locate_on_path(const PolyPath& L, Point p, double tol) {
    double best = tol;
    std::optional<PathPos> out;
    for (std::size_t i = 0; i + 1 < L.vertices.size(); ++i) {
        Point a = L.vertices[i], b = L.vertices[i + 1];
        Point d = b - a;
        double len2 = dot(d, d);
        if (len2 <= 0) continue;
        double t = std::clamp(dot(p - a, d) / len2, 0.0, 1.0);
        Point q{a.x + t * d.x, a.y + t * d.y};
        double dd = dist(p, q);
        if (dd <= best) {
            best = dd;
            out = PathPos{i, t, q};
        }
    }
    return out;
}

inline Point path_point(const PolyPath& L, std::size_t edge, double t) {
    Point a = L.vertices[edge], b = L.vertices[edge + 1];
    return {a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)};
}

inline double path_arc(const PolyPath& L, PathPos a, PathPos b) {
    if (b < a) std::swap(a, b);
    if (a.edge == b.edge)
        return dist(path_point(L, a.edge, a.t), path_point(L, b.edge, b.t));
    double s = dist(path_point(L, a.edge, a.t), L.vertices[a.edge + 1]);
    for (std::size_t e = a.edge + 1; e < b.edge; ++e)
        s += dist(L.vertices[e], L.vertices[e + 1]);
    s += dist(L.vertices[b.edge], path_point(L, b.edge, b.t));
    return s;
}

// ---------------------------------------------------------------------------
// Edge classification along a tame path.

enum class TameEdgeKind { Horizontal, Ascending, Descending };

inline TameEdgeKind classify_tame_edge(Point a, Point b, double eta) {
    double dx = b.x - a.x, dy = b.y - a.y;
    if (std::fabs(dy) <= std::max(eta, 1e-12 * std::fabs(dx)))
        return TameEdgeKind::Horizontal;
    return dy > 0 ? TameEdgeKind::Ascending : TameEdgeKind::Descending;
}

// ---------------------------------------------------------------------------
// Lemma-fat bound: ||L_ab|| when b is the bottom-most point of the subpath.

struct TamePathBound {
    double arc = 0;        // ||L_ab||
    double bound = 0;      // 2|dx| + (1+2 sqrt(eps)) |dy|
    bool holds = false;
};

inline TamePathBound tame_path_bound(const PolyPath& L, PathPos a, PathPos b,
                                     double eps, double eta = 1e-12) {
    Point pa = path_point(L, a.edge, a.t), pb = path_point(L, b.edge, b.t);
    PathPos lo = a, hi = b;
    if (hi < lo) std::swap(lo, hi);
    for (std::size_t e = lo.edge; e <= hi.edge && e + 1 < L.vertices.size(); ++e) {
        double ylim = std::min(pa.y, pb.y);
        double y0 = (e == lo.edge) ? path_point(L, lo.edge, lo.t).y : L.vertices[e].y;
        double y1 = (e == hi.edge) ? path_point(L, hi.edge, hi.t).y : L.vertices[e + 1].y;
        if (std::min(y0, y1) < ylim - std::max(eta, 1e-9 * std::fabs(ylim)))
            throw NotBottomMost{};
    }
    TamePathBound r;
    r.arc = path_arc(L, a, b);
    r.bound = 2 * std::fabs(pa.x - pb.x) +
              (1 + 2 * std::sqrt(eps)) * std::fabs(pa.y - pb.y);
    r.holds = r.arc <= r.bound + 1e-9 * (1 + r.bound);
    return r;
}

// Lemma-width ratio (vper/hper) / slope(pq), asserted within [3/4, 4/3].
inline double width_ratio(const PolyPath& L, double eps, double eta = 1e-12) {
    if (L.vertices.size() < 2) throw InvalidStaircase{};
    Point p = L.vertices.front(), q = L.vertices.back();
    double dx = std::fabs(q.x - p.x), dy = std::fabs(q.y - p.y);
    if (dx <= eta) throw OutOfRange("pq is vertical");
    double slope = dy / dx;
    double lo = 0.5 / std::sqrt(eps), hi = 1.0 / std::sqrt(eps);
    if (slope < lo * (1 - 1e-9) || slope > hi * (1 + 1e-9))
        throw OutOfRange("slope(pq) outside [eps^{-1/2}/2, eps^{-1/2}]");
    double hper = 0, vper = 0;
    for (std::size_t i = 0; i + 1 < L.vertices.size(); ++i) {
        Point a = L.vertices[i], b = L.vertices[i + 1];
        double w = dist(a, b);
        if (classify_tame_edge(a, b, eta) == TameEdgeKind::Horizontal) hper += w;
        else vper += w;
    }
    if (hper <= eta) throw DegenerateInput("hper is zero: ratio undefined");
    return (vper / hper) / slope;
}

// ---------------------------------------------------------------------------
// Shadow components along a path.

struct ShadowComponent {
    PathPos lo;           // start of the component's path range
    PathPos anchor;       // the run vertex the closing line passes through
    PathPos close;        // where the path pinches back onto the line
    bool clipped = false; // closed at the path end instead of a pinch
    double seg_width = 0; // x-extent of the closing segment (exact aspect)
    double seg_height = 0;
    double width = 0;     // x-extent of the component's subpath
    double hper = 0;      // horizontal weight of the subpath
    double vper = 0;
};

// Components of the up-right shadow at slope `sigma` of the edges selected
// by `material`. Components pinch closed wherever the path returns to the
// active closing line (a new component re-anchors immediately when the
// crossing edge is itself material), so consecutive components tile the
// path between pinch points. Each closing segment has slope exactly sigma.
template <typename MaterialPred>
std::vector<ShadowComponent> shadow_components(const PolyPath& L, double sigma,
                                               MaterialPred&& material, double eta) {
    std::vector<ShadowComponent> out;
    bool active = false;
    ShadowComponent cur;
    double c_active = 0;  // line intercept: y - sigma * x
    auto intercept = [&](Point p) { return p.y - sigma * p.x; };

    auto finish = [&](PathPos close, bool clipped) {
        cur.close = close;
        cur.clipped = clipped;
        out.push_back(cur);
        active = false;
    };

    for (std::size_t e = 0; e + 1 < L.vertices.size(); ++e) {
        Point a = L.vertices[e], b = L.vertices[e + 1];
        bool is_mat = material(classify_tame_edge(a, b, eta), a, b);
        if (active) {
            double fa = intercept(a) - c_active, fb = intercept(b) - c_active;
            if (fb < -eta && fa >= -eta) {
                double t = std::clamp(fa / (fa - fb), 0.0, 1.0);
                PathPos pinch{e, t, path_point(L, e, t)};
                finish(pinch, false);
                if (is_mat) {
                    // re-anchor on the same edge's low end
                    Point v = (intercept(a) <= intercept(b)) ? a : b;
                    cur = ShadowComponent{};
                    cur.lo = pinch;
                    cur.anchor = {e, v == a ? 0.0 : 1.0, v};
                    c_active = intercept(v);
                    active = true;
                }
                continue;
            }
        }
        if (!active && is_mat) {
            Point v = (intercept(a) <= intercept(b)) ? a : b;
            cur = ShadowComponent{};
            cur.anchor = {e, v == a ? 0.0 : 1.0, v};
            c_active = intercept(v);
            // backward extension: walk back while the path stays on or above
            // the line, bounded by the previous component's close
            PathPos lo{0, 0.0, L.vertices.front()};
            PathPos floor_pos = out.empty() ? lo : out.back().close;
            lo = cur.anchor;
            for (std::size_t eb = cur.anchor.edge + 1; eb-- > 0;) {
                Point pa = L.vertices[eb], pb = L.vertices[eb + 1];
                double fa2 = intercept(pa) - c_active;
                double fb2 = intercept(pb) - c_active;
                PathPos edge_start{eb, 0.0, pa};
                if (fa2 < -eta) {
                    double t = fb2 > fa2 ? std::clamp(fb2 / (fb2 - fa2), 0.0, 1.0) : 0.0;
                    lo = {eb, 1.0 - t, path_point(L, eb, 1.0 - t)};
                    break;
                }
                lo = edge_start;
                if (edge_start < floor_pos || eb == 0) break;
            }
            if (lo < floor_pos) lo = floor_pos;
            cur.lo = lo;
            active = true;
        }
    }
    if (active) {
        std::size_t last = L.vertices.size() - 2;
        finish({last, 1.0, L.vertices.back()}, true);
    }
    // metrics; the closing segment runs from the anchor along the sigma line
    for (auto& c : out) {
        c.seg_width = std::fabs(c.close.p.x - c.anchor.p.x);
        c.seg_height = std::fabs(c.close.p.y - c.anchor.p.y);
        PathPos lo = c.lo, hi = c.close;
        if (hi < lo) std::swap(lo, hi);
        double xmin = 1e300, xmax = -1e300;
        for (std::size_t e = lo.edge; e <= hi.edge; ++e) {
            Point p0 = e == lo.edge ? path_point(L, lo.edge, lo.t) : L.vertices[e];
            Point p1 = e == hi.edge ? path_point(L, hi.edge, hi.t) : L.vertices[e + 1];
            xmin = std::min({xmin, p0.x, p1.x});
            xmax = std::max({xmax, p0.x, p1.x});
            double w = dist(p0, p1);
            if (classify_tame_edge(p0, p1, eta) == TameEdgeKind::Horizontal)
                c.hper += w;
            else
                c.vper += w;
        }
        c.width = std::max(0.0, xmax - xmin);
    }
    return out;
}

// Down-left shadow: run the up-right walker on the 180-degree rotation of
// the path and map positions back (edge kinds are preserved by the
// rotation-plus-reversal).
template <typename MaterialPred>
std::vector<ShadowComponent> shadow_components_downleft(const PolyPath& L, double sigma,
                                                        MaterialPred&& material,
                                                        double eta) {
    PolyPath R;
    R.vertices.reserve(L.vertices.size());
    for (auto it = L.vertices.rbegin(); it != L.vertices.rend(); ++it)
        R.vertices.push_back({-it->x, -it->y});
    auto comps = shadow_components(R, sigma, material, eta);
    std::size_t m = L.vertices.size() - 2;
    auto back = [&](PathPos pos) {
        PathPos o;
        o.edge = m - pos.edge;
        o.t = 1.0 - pos.t;
        o.p = {-pos.p.x, -pos.p.y};
        return o;
    };
    for (auto& c : comps) {
        PathPos nlo = back(c.close), nanchor = back(c.anchor), nclose = back(c.lo);
        c.lo = nlo;
        c.anchor = nanchor;
        c.close = nclose;
    }
    std::reverse(comps.begin(), comps.end());
    return comps;
}

// ---------------------------------------------------------------------------
// Chord-shortcut form of a tame path (the Lambda-staircase L'): bumps below
// the running maximum are replaced by horizontal chords.

struct ShortcutPath {
    PolyPath path;                                  // L' vertices
    // for each L' edge: when it is a chord, the original subpath param range
    struct ChordRef {
        bool is_chord = false;
        PathPos from, to;  // on the original path
    };
    std::vector<ChordRef> chords;
};

inline ShortcutPath shortcut_tame_path(const PolyPath& L, double eta) {
    // Stack of the ascending profile; a descending edge pops the profile to
    // the descent's level and replaces the popped bump with a horizontal
    // chord, merging chords when a later descent goes lower.
    ShortcutPath out;
    const auto& v = L.vertices;
    if (v.size() < 2) { out.path = L; return out; }

    struct PV {
        Point p;
        PathPos pos;       // position on the original path
        bool chord_left;   // the edge arriving at p is a chord
        PathPos chord_from;
    };
    std::vector<PV> stack{{v[0], {0, 0.0, v[0]}, false, {}}};

    for (std::size_t e = 0; e + 1 < v.size(); ++e) {
        Point b = v[e + 1];
        PathPos bpos{e, 1.0, b};
        if (b.y >= stack.back().p.y - eta) {
            stack.push_back({b, bpos, false, {}});
            continue;
        }
        // descending below the profile: pop down to height b.y
        PathPos chord_from = stack.back().pos;
        while (stack.size() > 1 && stack[stack.size() - 2].p.y >= b.y - eta) {
            if (stack.back().chord_left) chord_from = stack.back().chord_from;
            stack.pop_back();
        }
        // interpolate the crossing on the profile edge that spans b.y
        PV& top = stack.back();
        if (top.p.y > b.y + eta) {
            // top is above b.y: the edge below it crosses (top is profile
            // bottom only when the path started higher; clamp there)
            if (stack.size() >= 2) {
                PV& lo = stack[stack.size() - 2];
                double dy = top.p.y - lo.p.y;
                double t = dy > eta ? (b.y - lo.p.y) / dy : 0.0;
                t = std::clamp(t, 0.0, 1.0);
                Point cp{lo.p.x + t * (top.p.x - lo.p.x), b.y};
                // original position interpolated on the profile piece
                PathPos cpos = top.pos;
                if (!top.chord_left && top.pos.edge < v.size() - 1) {
                    Point pa = v[top.pos.edge], pb = v[top.pos.edge + 1];
                    double ddy = pb.y - pa.y;
                    double tt = std::fabs(ddy) > eta ? (b.y - pa.y) / ddy : top.pos.t;
                    cpos = {top.pos.edge, std::clamp(tt, 0.0, 1.0), cp};
                } else {
                    cpos.p = cp;
                }
                chord_from = cpos;
                top = PV{cp, cpos, false, {}};
            }
        } else if (top.chord_left) {
            chord_from = top.chord_from;
        }
        // append the chord vertex at the descent's current end
        stack.push_back({{b.x, stack.back().p.y}, bpos, true, chord_from});
        // exact horizontal chord: keep the profile height
        stack.back().p.y = stack[stack.size() - 2].p.y;
    }
    for (std::size_t i = 0; i < stack.size(); ++i) {
        out.path.vertices.push_back(stack[i].p);
        if (i > 0) {
            ShortcutPath::ChordRef ref;
            if (stack[i].chord_left) {
                ref.is_chord = true;
                ref.from = stack[i].chord_from;
                ref.to = stack[i].pos;
            }
            out.chords.push_back(ref);
        }
    }
    // merge consecutive duplicate vertices
    ShortcutPath clean;
    for (std::size_t i = 0; i < out.path.vertices.size(); ++i) {
        if (!clean.path.vertices.empty() &&
            dist(clean.path.vertices.back(), out.path.vertices[i]) <= eta) {
            if (i > 0 && out.chords[i - 1].is_chord && !clean.chords.empty())
                clean.chords.back() = out.chords[i - 1];
            continue;
        }
        clean.path.vertices.push_back(out.path.vertices[i]);
        if (clean.path.vertices.size() > 1) clean.chords.push_back(out.chords[i - 1]);
    }
    return clean;
}

// ---------------------------------------------------------------------------
// Construction parameters and instrumentation.

struct DirOptions {
    double eps = 0.25;       // stretch slack of this construction
    double min_slope = 0;    // serving threshold; 0 -> eps^{-1/2}
    double lambda = 8.0;
    double eta = 1e-9;       // absolute coincidence tolerance
    int slt_max_level = -1;  // forwarded to the SLT builders

    double sigma_t() const { return min_slope > 0 ? min_slope : 1.0 / std::sqrt(eps); }
};

struct DemandPair {
    Point a, b;  // a is the lower endpoint
};

struct LevelAudit {
    double width_U = 0, width_W = 0;  // closing-segment x-extents
    double hper_U = 0, hper_W = 0;    // subpath horizontal weights
};

struct DirStats {
    std::vector<LevelAudit> levels;
    int fallback_pairs = 0;   // pairs no region would take (should stay 0)
    int served_pairs = 0;
    int ladder_slts = 0;
    double gadget_weight = 0; // SLT extras, walls and drops, beyond L
};

namespace dir_detail {

inline bool material_ascending(TameEdgeKind k, Point, Point) {
    return k == TameEdgeKind::Ascending;
}

struct MaterialB {
    bool tame;
    bool operator()(TameEdgeKind k, Point, Point) const {
        return k == TameEdgeKind::Horizontal || (tame && k == TameEdgeKind::Descending);
    }
};

// Subpath of L over [lo, hi] as its own polyline.
inline PolyPath subpath(const PolyPath& L, PathPos lo, PathPos hi) {
    if (hi < lo) std::swap(lo, hi);
    PolyPath out;
    out.vertices.push_back(path_point(L, lo.edge, lo.t));
    for (std::size_t e = lo.edge + 1; e <= hi.edge; ++e)
        out.vertices.push_back(L.vertices[e]);
    Point last = path_point(L, hi.edge, hi.t);
    out.vertices.push_back(last);
    PolyPath clean;
    for (Point p : out.vertices)
        if (clean.vertices.empty() || dist(clean.vertices.back(), p) > 1e-15)
            clean.vertices.push_back(p);
    return clean;
}

// Sink into the shared graph and chain store; when mirrored, construction
// coordinates are x-negated world coordinates and get mapped back on every
// insertion, so the negative-slope side reuses the whole positive machinery.
struct BuildSink {
    GeoGraph& g;
    ChainStore& store;
    bool mirrored = false;

    Point map(Point p) const { return mirrored ? Point{-p.x, p.y} : p; }
    Point attach(Point p, double tol) {
        Point w = store.attach(map(p), tol);
        return map(w);
    }
    void add_store_segment(Point a, Point b) { store.add_segment(map(a), map(b)); }
    void add_edge(Point a, Point b) { g.add_segment(map(a), map(b)); }
    void merge(const GeoGraph& tmp) {
        if (!mirrored) {
            g.merge_from(tmp);
            return;
        }
        for (const auto& e : tmp.edges())
            g.add_segment(map(tmp.vertices()[e.u].p), map(tmp.vertices()[e.v].p));
        for (const auto& v : tmp.vertices()) g.add_vertex(map(v.p), v.kind);
    }
};

struct RecursionCtx {
    BuildSink sink;
    const DirOptions& opt;
    DirStats* stats;
    bool tame;
};

inline double build_portion_slt_canonical(RecursionCtx& ctx, Point source,
                                           const PolyPath& portion,
                                           const std::vector<Point>& demands);

// SLT from a point source to a portion of a (possibly tame) path. Fuzz
// bumps are served by per-demand vertical drops onto the chord shortcuts.
// The portion is canonicalized to ascend left-to-right; right-to-left
// ascents are mirrored through a sink with the mirror flag toggled, so world
// coordinates come out unchanged.
inline double build_portion_slt(RecursionCtx& ctx, Point source, const PolyPath& portion,
                                const std::vector<Point>& demands) {
    if (portion.vertices.size() < 2) return 0.0;
    const DirOptions& opt = ctx.opt;
    PolyPath P = portion;
    if (P.vertices.back().y < P.vertices.front().y - opt.eta)
        std::reverse(P.vertices.begin(), P.vertices.end());
    if (P.vertices.back().x < P.vertices.front().x - opt.eta) {
        for (auto& v : P.vertices) v.x = -v.x;
        std::reverse(P.vertices.begin(), P.vertices.end());
        Point src{-source.x, source.y};
        std::vector<Point> dem = demands;
        for (auto& d : dem) d.x = -d.x;
        RecursionCtx ctx2{BuildSink{ctx.sink.g, ctx.sink.store, !ctx.sink.mirrored},
                          ctx.opt, ctx.stats, ctx.tame};
        return build_portion_slt_canonical(ctx2, src, P, dem);
    }
    return build_portion_slt_canonical(ctx, source, P, demands);
}

inline double build_portion_slt_canonical(RecursionCtx& ctx, Point source,
                                          const PolyPath& portion,
                                          const std::vector<Point>& demands) {
    const DirOptions& opt = ctx.opt;
    double added = 0;
    PolyPath chain = portion;
    ShortcutPath sc;
    std::vector<Point> feet = demands;
    if (ctx.tame) {
        sc = shortcut_tame_path(portion, opt.eta);
        chain = sc.path;
        for (std::size_t e = 0; e + 1 < chain.vertices.size(); ++e)
            if (e < sc.chords.size() && sc.chords[e].is_chord) {
                ctx.sink.add_store_segment(chain.vertices[e], chain.vertices[e + 1]);
                added += dist(chain.vertices[e], chain.vertices[e + 1]);
            }
        feet.clear();
        for (Point d : demands) {
            auto on_chain = locate_on_path(chain, d, 4 * opt.eta);
            if (on_chain) { feet.push_back(on_chain->p); continue; }
            auto on_l = locate_on_path(portion, d, 1e9);
            Point t = on_l ? on_l->p : d;
            double chord_y = t.y;
            for (std::size_t e = 0; e + 1 < chain.vertices.size(); ++e) {
                if (e >= sc.chords.size() || !sc.chords[e].is_chord) continue;
                Point ca = chain.vertices[e], cb = chain.vertices[e + 1];
                double xlo = std::min(ca.x, cb.x), xhi = std::max(ca.x, cb.x);
                if (t.x >= xlo - opt.eta && t.x <= xhi + opt.eta &&
                    ca.y <= t.y + opt.eta) {
                    chord_y = ca.y;
                    break;
                }
            }
            if (t.y - chord_y > opt.eta) {
                Point top = ctx.sink.attach(t, 4 * opt.eta);
                Point bot = ctx.sink.attach({t.x, chord_y}, 4 * opt.eta);
                ctx.sink.add_edge(top, bot);
                added += dist(top, bot);
                feet.push_back(bot);
            } else {
                feet.push_back(t);
            }
        }
    }

    PolyPath lr = chain;
    if (lr.vertices.front().x > lr.vertices.back().x)
        std::reverse(lr.vertices.begin(), lr.vertices.end());
    double span = lr.vertices.back().x - lr.vertices.front().x;
    double ymin = 1e300, ymax = -1e300;
    for (Point p : lr.vertices) { ymin = std::min(ymin, p.y); ymax = std::max(ymax, p.y); }
    if (span <= std::max(4 * opt.eta, 0.02 * (ymax - ymin))) {
        // degenerate near-vertical portion: a steep chain through the demands
        std::vector<Point> ds = feet;
        std::sort(ds.begin(), ds.end(), [](Point a, Point b) { return a.y < b.y; });
        Point prev = source;
        for (Point d : ds) {
            Point dd = ctx.sink.attach(d, 4 * opt.eta);
            if (dist(prev, dd) > opt.eta) {
                ctx.sink.add_edge(prev, dd);
                added += dist(prev, dd);
            }
            prev = dd;
        }
        return added;
    }

    bool below = source.y <= ymin + opt.eta;
    Point mid{0.5 * (lr.vertices.front().x + lr.vertices.back().x), 0.0};
    SltFrame frame = SltFrame::make(mid, below ? kPi : 0.0, span);
    PolyPath build_path = lr;
    if (below) std::reverse(build_path.vertices.begin(), build_path.vertices.end());

    SltOptions sopt;
    sopt.max_level = opt.slt_max_level;
    sopt.include_base = false;
    sopt.include_stem = true;
    for (Point d : feet) sopt.demand_x.push_back(frame.to_local(d).x);
    GeoGraph tmp(ctx.sink.g.eta());
    SltBuilder builder(frame, source, build_path, opt.eps, std::move(sopt));
    SltStats st = builder.build(tmp);
    tmp.add_vertex(source);
    for (Point p : st.base_touch) ctx.sink.attach(p, 4 * opt.eta);
    ctx.sink.merge(tmp);
    if (ctx.stats) ++ctx.stats->ladder_slts;
    return added + st.extra_weight + st.stem_weight;
}

// One recursion node: the given range plays the role of U. Builds the V
// walls and SLT ladders, then recurses into the W components with the pairs
// whose climb endpoint lies above theV source.
inline void process_region(RecursionCtx& ctx, const PolyPath& U,
                           std::vector<DemandPair> pairs, int level) {
    if (pairs.empty() || U.vertices.size() < 2) return;
    if (level > 60) {
        if (ctx.stats) ctx.stats->fallback_pairs += static_cast<int>(pairs.size());
        return;
    }
    const double sigma = ctx.opt.sigma_t();
    const double eta = ctx.opt.eta;
    if (ctx.stats) {
        if (ctx.stats->levels.size() <= static_cast<std::size_t>(level))
            ctx.stats->levels.resize(level + 1);
        double xmin = 1e300, xmax = -1e300, hp = 0;
        for (std::size_t e = 0; e + 1 < U.vertices.size(); ++e) {
            Point a = U.vertices[e], b = U.vertices[e + 1];
            xmin = std::min({xmin, a.x, b.x});
            xmax = std::max({xmax, a.x, b.x});
            if (classify_tame_edge(a, b, eta) == TameEdgeKind::Horizontal)
                hp += dist(a, b);
        }
        ctx.stats->levels[level].width_U += std::max(0.0, xmax - xmin);
        ctx.stats->levels[level].hper_U += hp;
    }

    auto vs = shadow_components_downleft(U, 0.5 * sigma, MaterialB{ctx.tame}, eta);
    if (vs.empty()) {
        if (ctx.stats) ctx.stats->fallback_pairs += static_cast<int>(pairs.size());
        return;
    }

    // walls: the V closing segments chain between pinch points and carry the
    // climb from below up to each ladder source
    for (const auto& v : vs) {
        Point a = ctx.sink.attach(v.anchor.p, 4 * eta);
        Point b = ctx.sink.attach(v.close.p, 4 * eta);
        if (dist(a, b) > eta) {
            ctx.sink.add_edge(a, b);
            if (ctx.stats) ctx.stats->gadget_weight += dist(a, b);
        }
    }

    auto range_contains = [&](const ShadowComponent& c, const PathPos& pos) {
        PathPos lo = c.lo, hi = c.close;
        if (hi < lo) std::swap(lo, hi);
        return !(pos < lo) && !(hi < pos);
    };

    std::vector<std::vector<DemandPair>> by_v(vs.size());
    for (const auto& pr : pairs) {
        auto pos = locate_on_path(U, pr.b, 1e9);
        if (!pos) { if (ctx.stats) ++ctx.stats->fallback_pairs; continue; }
        bool placed = false;
        for (std::size_t i = 0; i < vs.size(); ++i)
            if (range_contains(vs[i], *pos)) {
                by_v[i].push_back(pr);
                placed = true;
                break;
            }
        if (!placed) {
            std::size_t best = 0;
            double bd = 1e300;
            for (std::size_t i = 0; i < vs.size(); ++i) {
                double d = std::min(dist(pr.b, vs[i].lo.p), dist(pr.b, vs[i].close.p));
                if (d < bd) { bd = d; best = i; }
            }
            by_v[best].push_back(pr);
        }
    }

    for (std::size_t vi = 0; vi < vs.size(); ++vi) {
        if (by_v[vi].empty()) continue;
        const auto& v = vs[vi];
        Point s_v = v.anchor.p.y <= v.close.p.y ? v.anchor.p : v.close.p;
        s_v = ctx.sink.attach(s_v, 4 * eta);
        PolyPath lv = subpath(U, v.lo, v.close);
        double hv = eta;
        for (Point p : lv.vertices) hv = std::max(hv, p.y - s_v.y);

        std::vector<DemandPair> residual;
        std::map<int, std::vector<Point>> strips;
        for (const auto& pr : by_v[vi]) {
            if (pr.a.y > s_v.y + eta) { residual.push_back(pr); continue; }
            double gap = std::max(pr.b.y - s_v.y, eta);
            int i = std::max(0, static_cast<int>(std::floor(std::log2(hv / gap))));
            strips[std::min(i, 60)].push_back(pr.b);
            if (ctx.stats) ++ctx.stats->served_pairs;
        }
        for (auto& [strip, dems] : strips) {
            double y_hi = s_v.y + hv / std::exp2(strip);
            double y_lo = s_v.y + hv / std::exp2(strip + 1);
            auto in_band = [&](Point p) { return p.y >= y_lo - eta && p.y <= y_hi + eta; };
            PathPos dmin, dmax;
            bool got = false;
            for (Point d : dems) {
                auto pos = locate_on_path(lv, d, 1e9);
                if (!pos) continue;
                if (!got) { dmin = dmax = *pos; got = true; }
                else {
                    if (*pos < dmin) dmin = *pos;
                    if (dmax < *pos) dmax = *pos;
                }
            }
            if (!got) continue;
            while (dmin.edge > 0 && in_band(lv.vertices[dmin.edge - 1]))
                dmin = {dmin.edge - 1, 0.0, lv.vertices[dmin.edge - 1]};
            dmin = {dmin.edge, 0.0, lv.vertices[dmin.edge]};
            while (dmax.edge + 2 < lv.vertices.size() && in_band(lv.vertices[dmax.edge + 2]))
                dmax = {dmax.edge + 1, 1.0, lv.vertices[dmax.edge + 2]};
            dmax = {dmax.edge, 1.0, lv.vertices[dmax.edge + 1]};
            PolyPath portion = subpath(lv, dmin, dmax);
            double w = build_portion_slt(ctx, s_v, portion, dems);
            if (ctx.stats) ctx.stats->gadget_weight += w;
        }

        if (residual.empty()) continue;
        auto ws = shadow_components(lv, sigma, material_ascending, eta);
        if (ctx.stats && static_cast<std::size_t>(level) < ctx.stats->levels.size())
            for (const auto& w : ws) {
                ctx.stats->levels[level].width_W += w.seg_width;
                ctx.stats->levels[level].hper_W += w.hper;
            }
        std::vector<std::vector<DemandPair>> by_w(ws.size());
        for (const auto& pr : residual) {
            auto pos = locate_on_path(lv, pr.b, 1e9);
            bool placed = false;
            if (pos)
                for (std::size_t i = 0; i < ws.size(); ++i)
                    if (range_contains(ws[i], *pos)) {
                        by_w[i].push_back(pr);
                        placed = true;
                        break;
                    }
            if (!placed && ctx.stats) ++ctx.stats->fallback_pairs;
        }
        for (std::size_t wi = 0; wi < ws.size(); ++wi) {
            if (by_w[wi].empty()) continue;
            PolyPath lw = subpath(lv, ws[wi].lo, ws[wi].close);
            process_region(ctx, lw, std::move(by_w[wi]), level + 1);
        }
    }
}

// Pairs of the requested slope sign with |slope| >= sigma; both endpoints
// normalized so that a is the lower one.
inline std::vector<DemandPair> qualifying_pairs(const std::vector<DemandPair>& pairs,
                                                double sigma, bool negative) {
    std::vector<DemandPair> out;
    for (DemandPair pr : pairs) {
        if (pr.a.y > pr.b.y) std::swap(pr.a, pr.b);
        double dx = pr.b.x - pr.a.x, dy = pr.b.y - pr.a.y;
        if (dy <= 0) continue;
        if (std::fabs(dx) > 0 && dy / std::fabs(dx) < sigma * (1 - 1e-12)) continue;
        bool is_neg = dx < 0;
        if (is_neg == negative) out.push_back(pr);
    }
    return out;
}

inline PolyPath mirror_path_x(const PolyPath& L) {
    PolyPath out;
    out.vertices.reserve(L.vertices.size());
    for (auto it = L.vertices.rbegin(); it != L.vertices.rend(); ++it)
        out.vertices.push_back({-it->x, it->y});
    return out;
}

inline void run_path_side(BuildSink sink, const PolyPath& L,
                          std::vector<DemandPair> side_pairs, bool tame,
                          const DirOptions& opt, DirStats* st) {
    if (side_pairs.empty()) return;
    PolyPath work = L;
    if (sink.mirrored) {
        work = mirror_path_x(L);
        for (auto& pr : side_pairs) {
            pr.a.x = -pr.a.x;
            pr.b.x = -pr.b.x;
        }
    }
    // canonical traversal: left to right, so ascending material rises with x
    if (work.vertices.front().x > work.vertices.back().x)
        std::reverse(work.vertices.begin(), work.vertices.end());
    RecursionCtx ctx{sink, opt, st, tame};
    for (auto& pr : side_pairs) {
        pr.a = ctx.sink.attach(pr.a, 4 * opt.eta);
        pr.b = ctx.sink.attach(pr.b, 4 * opt.eta);
    }
    auto us = shadow_components(work, opt.sigma_t(), material_ascending, opt.eta);
    std::vector<std::vector<DemandPair>> by_u(us.size());
    for (const auto& pr : side_pairs) {
        auto pos = locate_on_path(work, pr.b, 1e9);
        bool placed = false;
        if (pos)
            for (std::size_t i = 0; i < us.size(); ++i) {
                PathPos lo = us[i].lo, hi = us[i].close;
                if (hi < lo) std::swap(lo, hi);
                if (!(*pos < lo) && !(hi < *pos)) {
                    by_u[i].push_back(pr);
                    placed = true;
                    break;
                }
            }
        if (!placed && st) ++st->fallback_pairs;
    }
    for (std::size_t i = 0; i < us.size(); ++i) {
        if (by_u[i].empty()) continue;
        PolyPath lu = subpath(work, us[i].lo, us[i].close);
        process_region(ctx, lu, std::move(by_u[i]), 0);
    }
}

}  // namespace dir_detail

// ---------------------------------------------------------------------------
// Directional spanner along a staircase path (positive-slope chords below L).

inline GeoGraph staircase_spanner(const PolyPath& L, const std::vector<DemandPair>& demands,
                                  double eps, DirStats* stats = nullptr,
                                  DirOptions opt_in = {}, double graph_eta = kEtaRel) {
    for (std::size_t i = 0; i + 1 < L.vertices.size(); ++i) {
        Point a = L.vertices[i], b = L.vertices[i + 1];
        double s = frame_diameter(L.vertices);
        if (b.x < a.x - 1e-12 * s || b.y < a.y - 1e-12 * s) throw InvalidStaircase{};
    }
    DirOptions opt = opt_in;
    opt.eps = eps;
    opt.eta = kEtaRel * std::max(frame_diameter(L.vertices), 1e-12);
    GeoGraph g(graph_eta);
    ChainStore store(opt.eta);
    store.add_path(L);
    DirStats local;
    DirStats* st = stats ? stats : &local;
    auto pos_pairs = dir_detail::qualifying_pairs(demands, opt.sigma_t(), false);
    dir_detail::run_path_side({g, store, false}, L, std::move(pos_pairs), false, opt, st);
    store.emit(g);
    return g;
}

// Directional spanner along a tame path: both slope signs, the negative side
// mirrored through the shared sink.
inline GeoGraph tame_path_spanner(const PolyPath& L, const std::vector<DemandPair>& demands,
                                  double eps, DirStats* stats = nullptr,
                                  DirOptions opt_in = {}, double graph_eta = kEtaRel) {
    DirOptions opt = opt_in;
    opt.eps = eps;
    opt.eta = kEtaRel * std::max(frame_diameter(L.vertices), 1e-12);
    GeoGraph g(graph_eta);
    ChainStore store(opt.eta);
    store.add_path(L);
    DirStats local;
    DirStats* st = stats ? stats : &local;
    dir_detail::run_path_side({g, store, false}, L,
                              dir_detail::qualifying_pairs(demands, opt.sigma_t(), false),
                              true, opt, st);
    dir_detail::run_path_side({g, store, true}, L,
                              dir_detail::qualifying_pairs(demands, opt.sigma_t(), true),
                              true, opt, st);
    store.emit(g);
    return g;
}

// ---------------------------------------------------------------------------
// SLT combination gadgets (the canonical-frame operations).

// Two staircase SLTs from the center of rectangle R to paths below and above
// it; serves every a in L1, b in L2.
inline GeoGraph combine_slt_pair(const Segment& r_diag, const PolyPath& L1,
                                 const PolyPath& L2, double eps,
                                 SltOptions opt = {}, double eta = kEtaRel) {
    Point lo{std::min(r_diag.a.x, r_diag.b.x), std::min(r_diag.a.y, r_diag.b.y)};
    Point hi{std::max(r_diag.a.x, r_diag.b.x), std::max(r_diag.a.y, r_diag.b.y)};
    Point s{0.5 * (lo.x + hi.x), 0.5 * (lo.y + hi.y)};
    if (hi.y - lo.y < 2.0 / std::sqrt(eps) * (hi.x - lo.x) * (1 - 1e-9))
        throw FrameError("rectangle aspect below 2 eps^{-1/2}");
    GeoGraph g(eta);
    {
        // source above the lower path: standard frame
        double span = std::fabs(L1.vertices.back().x - L1.vertices.front().x);
        Point mid{0.5 * (L1.vertices.front().x + L1.vertices.back().x), 0.0};
        SltFrame f = SltFrame::make(mid, 0.0, std::max(span, 1e-12));
        PolyPath lr = L1;
        if (lr.vertices.front().x > lr.vertices.back().x)
            std::reverse(lr.vertices.begin(), lr.vertices.end());
        SltBuilder b(f, s, lr, eps, opt);
        b.build(g);
    }
    {
        // source below the upper path: rotate the frame by pi
        double span = std::fabs(L2.vertices.back().x - L2.vertices.front().x);
        Point mid{0.5 * (L2.vertices.front().x + L2.vertices.back().x), 0.0};
        SltFrame f = SltFrame::make(mid, kPi, std::max(span, 1e-12));
        PolyPath rev = L2;
        if (rev.vertices.front().x < rev.vertices.back().x)
            std::reverse(rev.vertices.begin(), rev.vertices.end());
        SltBuilder b(f, s, rev, eps, opt);
        b.build(g);
    }
    g.add_vertex(s);
    return g;
}

// Square-over-rectangle gadget: aspect-ratio grid in Q, vertical drops from
// the bottom-most path point per occupied cell, and SLTs from the center of
// R to its top and bottom sides.
struct CombineSquareStats {
    double grid_weight = 0;
    double drop_weight = 0;
    std::vector<Point> base_feet;  // demand feet on the bottom side of R
};

inline GeoGraph combine_slt_square(const Segment& r_diag, const Segment& q_diag,
                                   const PolyPath& L, double eps,
                                   const std::vector<Point>& base_demands = {},
                                   CombineSquareStats* stats = nullptr,
                                   SltOptions slt_opt = {}, double eta = kEtaRel) {
    Point rlo{std::min(r_diag.a.x, r_diag.b.x), std::min(r_diag.a.y, r_diag.b.y)};
    Point rhi{std::max(r_diag.a.x, r_diag.b.x), std::max(r_diag.a.y, r_diag.b.y)};
    Point qlo{std::min(q_diag.a.x, q_diag.b.x), std::min(q_diag.a.y, q_diag.b.y)};
    Point qhi{std::max(q_diag.a.x, q_diag.b.x), std::max(q_diag.a.y, q_diag.b.y)};
    double side = qhi.x - qlo.x;
    if (std::fabs(qlo.y - rhi.y) > 1e-9 * side)
        throw FrameError("square must sit on the rectangle's top side");
    GeoGraph g(eta);
    CombineSquareStats local;
    CombineSquareStats& st = stats ? *stats : local;

    // grid: two rows, columns of width sqrt(eps) * side
    int cols = std::max(1, static_cast<int>(std::ceil(1.0 / std::sqrt(eps))));
    double cw = side / cols;
    std::vector<double> col_x;
    for (int c = 0; c <= cols; ++c) col_x.push_back(qlo.x + c * cw);
    for (double x : col_x) {
        g.add_segment({x, qlo.y}, {x, qhi.y});
        st.grid_weight += qhi.y - qlo.y;
    }
    for (double y : {qlo.y, 0.5 * (qlo.y + qhi.y), qhi.y}) {
        for (int c = 0; c < cols; ++c) g.add_segment({col_x[c], y}, {col_x[c + 1], y});
        st.grid_weight += side;
    }
    // drops: per cell that meets L, from the bottom-most point of L in the
    // cell to the cell's bottom side
    std::vector<Point> top_feet;
    for (int row = 0; row < 2; ++row) {
        double ylo = qlo.y + row * 0.5 * side, yhi_cell = ylo + 0.5 * side;
        for (int c = 0; c < cols; ++c) {
            double xlo = col_x[c], xhi = col_x[c + 1];
            Point best{0, 0};
            bool got = false;
            auto consider = [&](Point p) {
                if (p.x < xlo - 1e-12 || p.x > xhi + 1e-12) return;
                if (p.y < ylo - 1e-12 || p.y > yhi_cell + 1e-12) return;
                if (!got || p.y < best.y) { best = p; got = true; }
            };
            for (std::size_t e = 0; e + 1 < L.vertices.size(); ++e) {
                Point a = L.vertices[e], b = L.vertices[e + 1];
                consider(a);
                consider(b);
                // boundary crossings of the cell
                for (double x : {xlo, xhi})
                    if ((a.x - x) * (b.x - x) < 0) {
                        double t = (x - a.x) / (b.x - a.x);
                        consider({x, a.y + t * (b.y - a.y)});
                    }
                for (double y : {ylo, yhi_cell})
                    if ((a.y - y) * (b.y - y) < 0) {
                        double t = (y - a.y) / (b.y - a.y);
                        consider({a.x + t * (b.x - a.x), y});
                    }
            }
            if (got) {
                g.add_segment(best, {best.x, ylo});
                st.drop_weight += best.y - ylo;
                if (row == 0) top_feet.push_back({best.x, ylo});
            }
        }
    }
    // path edges inside Q
    for (std::size_t e = 0; e + 1 < L.vertices.size(); ++e)
        g.add_segment(L.vertices[e], L.vertices[e + 1]);

    Point s{0.5 * (rlo.x + rhi.x), 0.5 * (rlo.y + rhi.y)};
    double mid_x = 0.5 * (rlo.x + rhi.x), span = rhi.x - rlo.x;
    {
        SltOptions top_opt = slt_opt;
        for (Point f : top_feet) top_opt.demand_x.push_back((f.x - mid_x) / span);
        GeoGraph t = slt_segment(s, {{rlo.x, rhi.y}, {rhi.x, rhi.y}}, eps, top_opt,
                                 nullptr, eta);
        g.merge_from(t);
    }
    {
        SltOptions bo = slt_opt;
        for (Point b : base_demands) {
            bo.demand_x.push_back((b.x - mid_x) / span);
            st.base_feet.push_back({b.x, rlo.y});
        }
        GeoGraph t = slt_segment(s, {{rlo.x, rlo.y}, {rhi.x, rlo.y}}, eps, bo, nullptr, eta);
        g.merge_from(t);
    }
    return g;
}

// Tame combination: SLT from a source to the chord-shortcut staircase of a
// tame path, with per-demand drops for targets inside the fuzz bumps.
inline GeoGraph combine_slt_tame(Point source, const PolyPath& tame_path, double eps,
                                 const std::vector<Point>& demands = {},
                                 DirStats* stats = nullptr, double eta = kEtaRel,
                                 int slt_max_level = -1) {
    GeoGraph g(eta);
    ChainStore store(kEtaRel * std::max(frame_diameter(tame_path.vertices), 1e-12));
    store.add_path(tame_path);
    DirOptions opt;
    opt.eps = eps;
    opt.eta = kEtaRel * std::max(frame_diameter(tame_path.vertices), 1e-12);
    opt.slt_max_level = slt_max_level;
    DirStats local;
    dir_detail::RecursionCtx ctx{{g, store, false}, opt, stats ? stats : &local, true};
    std::vector<Point> feet = demands;
    for (auto& d : feet) d = ctx.sink.attach(d, 4 * opt.eta);
    double w = dir_detail::build_portion_slt(ctx, source, tame_path, feet);
    if (stats) stats->gadget_weight += w;
    store.emit(g);
    g.add_vertex(source);
    return g;
}

// ---------------------------------------------------------------------------
// Base-to-path towers: serve near-vertical pairs between a horizontal base
// segment and a path portion above it. One gadget per occupied
// (dyadic strip x tower window): a shared source with SLTs up to the path
// and down to the base.

namespace dir_detail {

inline void serve_base_to_path(RecursionCtx& ctx, const Segment& base,
                               const PolyPath& portion_src, double face_height,
                               std::vector<DemandPair> pairs) {
    if (pairs.empty()) return;
    const DirOptions& opt = ctx.opt;
    double base_y = base.a.y;
    double sq = std::sqrt(opt.eps);
    struct Bucket {
        std::vector<Point> ups, downs;
        std::vector<DemandPair> prs;
    };
    std::map<std::pair<int, long long>, Bucket> buckets;
    for (const auto& pr : pairs) {
        // pr.a on the base, pr.b above on the path
        Point pa = ctx.sink.attach(pr.a, 4 * opt.eta);
        Point pb = ctx.sink.attach(pr.b, 4 * opt.eta);
        if (pa.y > pb.y) std::swap(pa, pb);
        double ya = pb.y - base_y;
        if (ya <= 4 * opt.eta) {
            Point u = ctx.sink.attach(pa, 4 * opt.eta);
            Point v = ctx.sink.attach(pb, 4 * opt.eta);
            ctx.sink.add_edge(u, v);  // degenerate height: direct short edge
            continue;
        }
        int i = std::max(0, static_cast<int>(std::floor(std::log2(face_height / ya))));
        i = std::min(i, 60);
        double g_i = face_height / std::exp2(i + 1);
        double w_t = std::max(0.5 * sq * g_i, 16 * opt.eta);
        long long k = static_cast<long long>(std::floor(pb.x / w_t));
        Bucket& bk = buckets[{i, k}];
        bk.ups.push_back(pb);
        bk.downs.push_back(pa);
        bk.prs.push_back({pa, pb});
    }
    for (auto& [key, bk] : buckets) {
        auto [i, k] = key;
        double g_i = face_height / std::exp2(i + 1);
        double w_t = std::max(0.5 * std::sqrt(opt.eps) * g_i, 16 * opt.eta);
        double x_c = (static_cast<double>(k) + 0.5) * w_t;
        Point s{x_c, base_y + 0.75 * g_i};
        // up-SLT: portion of the path spanning the strip demands
        double xmin = 1e300, xmax = -1e300;
        for (Point u : bk.ups) { xmin = std::min(xmin, u.x); xmax = std::max(xmax, u.x); }
        PathPos dmin, dmax;
        bool got = false;
        for (Point u : bk.ups) {
            auto pos = locate_on_path(portion_src, u, 1e9);
            if (!pos) continue;
            if (!got) { dmin = dmax = *pos; got = true; }
            else {
                if (*pos < dmin) dmin = *pos;
                if (dmax < *pos) dmax = *pos;
            }
        }
        if (got) {
            double band_lo = base_y + g_i, band_hi = base_y + 2 * g_i;
            auto in_band = [&](Point p) {
                return p.y >= band_lo - opt.eta && p.y <= band_hi + opt.eta;
            };
            while (dmin.edge > 0 && in_band(portion_src.vertices[dmin.edge - 1]))
                dmin = {dmin.edge - 1, 0.0, portion_src.vertices[dmin.edge - 1]};
            dmin = {dmin.edge, 0.0, portion_src.vertices[dmin.edge]};
            while (dmax.edge + 2 < portion_src.vertices.size() &&
                   in_band(portion_src.vertices[dmax.edge + 2]))
                dmax = {dmax.edge + 1, 1.0, portion_src.vertices[dmax.edge + 2]};
            dmax = {dmax.edge, 1.0, portion_src.vertices[dmax.edge + 1]};
            PolyPath up_portion = subpath(portion_src, dmin, dmax);
            double w = build_portion_slt(ctx, s, up_portion, bk.ups);
            if (ctx.stats) ctx.stats->gadget_weight += w;
        } else {
            for (Point u : bk.ups) {
                Point uu = ctx.sink.attach(u, 4 * opt.eta);
                ctx.sink.add_edge(s, uu);
            }
        }
        // down-SLT to the base demands
        double bxmin = 1e300, bxmax = -1e300;
        for (Point d : bk.downs) { bxmin = std::min(bxmin, d.x); bxmax = std::max(bxmax, d.x); }
        bxmin = std::min(bxmin, x_c) - 0.25 * w_t;
        bxmax = std::max(bxmax, x_c) + 0.25 * w_t;
        bxmin = std::max(bxmin, std::min(base.a.x, base.b.x));
        bxmax = std::min(bxmax, std::max(base.a.x, base.b.x));
        PolyPath down_portion({{bxmin, base_y}, {bxmax, base_y}});
        if (bxmax - bxmin > 4 * opt.eta) {
            double w = build_portion_slt(ctx, s, down_portion, bk.downs);
            if (ctx.stats) ctx.stats->gadget_weight += w;
        } else {
            for (Point d : bk.downs) {
                Point dd = ctx.sink.attach(d, 4 * opt.eta);
                ctx.sink.add_edge(s, dd);
            }
        }
        if (ctx.stats) ctx.stats->served_pairs += static_cast<int>(bk.prs.size());
    }
}

}  // namespace dir_detail


// ---------------------------------------------------------------------------
// Case-2 machinery: pairs between a steep segment and a horizontal base.
// Sources sit on the steep segment at dyadic heights; each occupied height
// gets an SLT down to the base demands within reach.

namespace dir_detail {

inline void serve_steep_to_base(RecursionCtx& ctx, const Segment& steep,
                                const Segment& base, std::vector<DemandPair> pairs) {
    if (pairs.empty()) return;
    const DirOptions& opt = ctx.opt;
    double base_y = base.a.y;
    Point q_end = std::fabs(steep.a.y - base_y) <= std::fabs(steep.b.y - base_y)
                      ? steep.a
                      : steep.b;
    Point r_end = q_end == steep.a ? steep.b : steep.a;
    double h = std::fabs(r_end.y - base_y);
    if (h <= 4 * opt.eta) return;
    std::map<int, std::vector<DemandPair>> groups;
    for (auto pr : pairs) {
        pr.a = ctx.sink.attach(pr.a, 4 * opt.eta);
        pr.b = ctx.sink.attach(pr.b, 4 * opt.eta);
        if (std::fabs(pr.a.y - base_y) > std::fabs(pr.b.y - base_y)) std::swap(pr.a, pr.b);
        // pr.a on the base, pr.b on the steep segment
        double ya = std::fabs(pr.b.y - base_y);
        if (ya <= 4 * opt.eta) {
            Point u = ctx.sink.attach(pr.a, 4 * opt.eta);
            Point v = ctx.sink.attach(pr.b, 4 * opt.eta);
            ctx.sink.add_edge(u, v);
            continue;
        }
        int i = std::max(0, static_cast<int>(std::ceil(std::log2(h / ya))));
        groups[std::min(i, 60)].push_back(pr);
    }
    double dir_y = r_end.y > base_y ? 1.0 : -1.0;
    for (auto& [i, prs] : groups) {
        double sy = base_y + dir_y * h / std::exp2(i);
        double t = (sy - steep.a.y) / (steep.b.y - steep.a.y);
        Point s{steep.a.x + t * (steep.b.x - steep.a.x), sy};
        s = ctx.sink.attach(s, 4 * opt.eta);
        std::vector<Point> downs;
        double xmin = 1e300, xmax = -1e300;
        for (auto& pr : prs) {
            downs.push_back(pr.a);
            xmin = std::min(xmin, pr.a.x);
            xmax = std::max(xmax, pr.a.x);
            Point bb = ctx.sink.attach(pr.b, 4 * opt.eta);
            (void)bb;  // route along the steep edge itself
            if (ctx.stats) ++ctx.stats->served_pairs;
        }
        xmin = std::min(xmin, s.x) - 4 * opt.eta;
        xmax = std::max(xmax, s.x) + 4 * opt.eta;
        xmin = std::max(xmin, std::min(base.a.x, base.b.x));
        xmax = std::min(xmax, std::max(base.a.x, base.b.x));
        if (xmax - xmin > 4 * opt.eta) {
            PolyPath portion({{xmin, base_y}, {xmax, base_y}});
            double w = build_portion_slt(ctx, s, portion, downs);
            if (ctx.stats) ctx.stats->gadget_weight += w;
        } else {
            for (Point d : downs) {
                Point dd = ctx.sink.attach(d, 4 * opt.eta);
                ctx.sink.add_edge(s, dd);
            }
        }
    }
}

inline GeoGraph transform_graph(const GeoGraph& g, Point (*f)(Point)) {
    GeoGraph out(g.eta());
    for (const auto& v : g.vertices()) out.add_vertex(f(v.p), v.kind);
    for (const auto& e : g.edges())
        out.add_segment(f(g.vertices()[e.u].p), f(g.vertices()[e.v].p));
    return out;
}

// Classify a face-boundary point: 0 = base, 1 = gamma (slope edges),
// 2 = the path L.
inline int classify_face_point(const Face& face, Point p, double tol) {
    double dbase = 1e300, dgamma = 1e300, dl = 1e300;
    for (const auto& e : face.boundary.edges) {
        Segment seg{e.a, e.b};
        double len2 = dot(seg.b - seg.a, seg.b - seg.a);
        double t = len2 > 0 ? std::clamp(dot(p - seg.a, seg.b - seg.a) / len2, 0.0, 1.0) : 0.0;
        double d = dist(p, seg.at(t));
        if (e.base) dbase = std::min(dbase, d);
        else if (e.tag == ETag::SlopePos || e.tag == ETag::SlopeNeg)
            dgamma = std::min(dgamma, d);
        else dl = std::min(dl, d);
    }
    (void)tol;
    if (dbase <= dgamma && dbase <= dl) return 0;
    if (dgamma <= dl) return 1;
    return 2;
}

// The non-base boundary chain, walked from the base's end, as a polyline.
inline PolyPath face_side_chain(const Face& face) {
    const auto& edges = face.boundary.edges;
    std::size_t n = edges.size();
    std::size_t b0 = 0;
    while (b0 < n && !edges[b0].base) ++b0;
    if (b0 == n) throw TypeMismatch("face has no base edge");
    // rotate so base edges come first
    std::vector<WalkEdge> rot;
    for (std::size_t i = 0; i < n; ++i) rot.push_back(edges[(b0 + i) % n]);
    std::size_t nb = 0;
    while (nb < n && rot[nb].base) ++nb;
    PolyPath L;
    if (nb >= n) return L;
    L.vertices.push_back(rot[nb].a);
    for (std::size_t i = nb; i < n; ++i) L.vertices.push_back(rot[i].b);
    return L;
}

inline Segment face_base_segment(const Face& face) {
    Point lo{1e300, 0}, hi{-1e300, 0};
    bool got = false;
    for (const auto& e : face.boundary.edges) {
        if (!e.base) continue;
        for (Point p : {e.a, e.b}) {
            if (!got || p.x < lo.x) lo = p;
            if (!got || p.x > hi.x) hi = p;
            got = true;
        }
    }
    if (!got) throw TypeMismatch("face has no base edge");
    return {lo, hi};
}

}  // namespace dir_detail

// ---------------------------------------------------------------------------
// Directional spanner for a tame histogram: base towers for base-path pairs
// plus the tame-path recursion for path-path pairs. The face is canonicalized
// with the base at the bottom.

inline GeoGraph tame_base_spanner(const Face& face_in, const std::vector<DemandPair>& pairs,
                                  double eps, DirStats* stats = nullptr,
                                  DirOptions opt_in = {}, double graph_eta = kEtaRel);

inline GeoGraph tame_histogram_spanner(const Face& face_in,
                                       const std::vector<DemandPair>& pairs_in,
                                       double eps, DirStats* stats = nullptr,
                                       DirOptions opt_in = {}, double graph_eta = kEtaRel) {
    if (face_in.tag != FaceTag::TameHistogram)
        throw TypeMismatch("tame_histogram_spanner needs a tame histogram");
    // canonical orientation: base at the bottom (base edges walked +x)
    Face face = face_in;
    double bx = 0;
    for (const auto& e : face.boundary.edges)
        if (e.base) bx += e.b.x - e.a.x;
    bool flipped = bx < 0;
    if (flipped) face.boundary = flip_y(face.boundary);
    std::vector<DemandPair> pairs = pairs_in;
    if (flipped)
        for (auto& pr : pairs) {
            pr.a.y = -pr.a.y;
            pr.b.y = -pr.b.y;
        }

    DirOptions opt = opt_in;
    opt.eps = eps;
    double scale = 1e-12;
    for (const auto& e : face.boundary.edges)
        scale = std::max({scale, std::fabs(e.a.x), std::fabs(e.a.y), 1e-12});
    opt.eta = kEtaRel * scale;

    GeoGraph g(graph_eta);
    ChainStore store(opt.eta);
    store.add_walk(face.boundary);
    DirStats local;
    DirStats* st = stats ? stats : &local;

    Segment base = dir_detail::face_base_segment(face);
    PolyPath L = dir_detail::face_side_chain(face);
    double face_h = 0;
    for (Point p : L.vertices) face_h = std::max(face_h, p.y - base.a.y);

    std::vector<DemandPair> path_pairs, base_pairs;
    for (const auto& pr : pairs) {
        int ca = dir_detail::classify_face_point(face, pr.a, opt.eta);
        int cb = dir_detail::classify_face_point(face, pr.b, opt.eta);
        if (ca == 0 && cb == 0) continue;  // both on the base: exact
        if (ca == 0 || cb == 0) base_pairs.push_back(pr);
        else path_pairs.push_back(pr);
    }
    dir_detail::BuildSink sink{g, store, false};
    dir_detail::run_path_side(sink, L,
                              dir_detail::qualifying_pairs(path_pairs, opt.sigma_t(), false),
                              true, opt, st);
    dir_detail::run_path_side({g, store, true}, L,
                              dir_detail::qualifying_pairs(path_pairs, opt.sigma_t(), true),
                              true, opt, st);
    if (!base_pairs.empty()) {
        dir_detail::RecursionCtx ctx{sink, opt, st, true};
        // orient pairs base-first and serve through the strip towers
        std::vector<DemandPair> oriented;
        for (auto pr : base_pairs) {
            if (dir_detail::classify_face_point(face, pr.b, opt.eta) == 0)
                std::swap(pr.a, pr.b);
            oriented.push_back(pr);
        }
        dir_detail::serve_base_to_path(ctx, base, L, std::max(face_h, opt.eta), oriented);
    }
    store.emit(g);
    if (flipped)
        g = dir_detail::transform_graph(g, [](Point p) { return Point{p.x, -p.y}; });
    return g;
}

inline GeoGraph tame_base_spanner(const Face& face_in, const std::vector<DemandPair>& pairs,
                                  double eps, DirStats* stats, DirOptions opt_in,
                                  double graph_eta) {
    if (face_in.tag != FaceTag::TameHistogram)
        throw TypeMismatch("tame_base_spanner needs a tame histogram");
    // the base-to-path tower construction is the base-pair part of the
    // histogram spanner; path-path pairs are filtered out here
    std::vector<DemandPair> base_pairs;
    for (const auto& pr : pairs) base_pairs.push_back(pr);
    return tame_histogram_spanner(face_in, base_pairs, eps, stats, opt_in, graph_eta);
}

// ---------------------------------------------------------------------------
// Directional spanner for a fuzzy staircase: the staircase side is a tame
// path; base-side and slope-side pairs go through the tower and dyadic
// source constructions (cases 1-3).

inline GeoGraph fuzzy_staircase_spanner(const Face& face_in,
                                        const std::vector<DemandPair>& pairs_in,
                                        double eps, DirStats* stats = nullptr,
                                        DirOptions opt_in = {}, double graph_eta = kEtaRel) {
    if (face_in.tag != FaceTag::FuzzyStaircase)
        throw TypeMismatch("fuzzy_staircase_spanner needs a fuzzy staircase");
    Face face = face_in;
    std::vector<DemandPair> pairs = pairs_in;

    // canonicalize: base at the bottom, gamma on the right
    double bx = 0;
    bool has_base = false;
    for (const auto& e : face.boundary.edges)
        if (e.base) { bx += e.b.x - e.a.x; has_base = true; }
    bool flip_vert = has_base && bx < 0;
    if (flip_vert) {
        face.boundary = flip_y(face.boundary);
        for (auto& pr : pairs) { pr.a.y = -pr.a.y; pr.b.y = -pr.b.y; }
    }
    double gx = 0, cx = 0;
    int gn = 0, cn = 0;
    for (const auto& e : face.boundary.edges) {
        cx += e.a.x;
        ++cn;
        if (e.tag == ETag::SlopePos || e.tag == ETag::SlopeNeg) {
            gx += 0.5 * (e.a.x + e.b.x);
            ++gn;
        }
    }
    bool flip_horiz = gn > 0 && cn > 0 && gx / gn < cx / cn;
    if (flip_horiz) {
        face.boundary = flip_x(face.boundary);
        for (auto& pr : pairs) { pr.a.x = -pr.a.x; pr.b.x = -pr.b.x; }
    }

    DirOptions opt = opt_in;
    opt.eps = eps;
    double scale = 1e-12;
    for (const auto& e : face.boundary.edges)
        scale = std::max({scale, std::fabs(e.a.x), std::fabs(e.a.y), 1e-12});
    opt.eta = kEtaRel * scale;

    GeoGraph g(graph_eta);
    ChainStore store(opt.eta);
    store.add_walk(face.boundary);
    DirStats local;
    DirStats* st = stats ? stats : &local;
    dir_detail::BuildSink sink{g, store, false};

    // structure: gamma chain (slope edges), base segment, L = the rest
    Segment qr{{0, 0}, {0, 0}};
    bool has_gamma = false;
    for (const auto& e : face.boundary.edges)
        if (e.tag == ETag::SlopePos || e.tag == ETag::SlopeNeg) {
            if (!has_gamma) qr = {e.a, e.b};
            else {
                // extend to the chain's extreme points
                for (Point p : {e.a, e.b}) {
                    if (p.y < std::min(qr.a.y, qr.b.y)) (qr.a.y < qr.b.y ? qr.a : qr.b) = p;
                    if (p.y > std::max(qr.a.y, qr.b.y)) (qr.a.y < qr.b.y ? qr.b : qr.a) = p;
                }
            }
            has_gamma = true;
        }
    std::optional<Segment> base;
    if (has_base) base = dir_detail::face_base_segment(face);
    PolyPath L;
    {
        // L: boundary chain that is neither base nor gamma, ordered
        std::vector<WalkEdge> lw;
        for (const auto& e : face.boundary.edges)
            if (!e.base && e.tag != ETag::SlopePos && e.tag != ETag::SlopeNeg)
                lw.push_back(e);
        if (!lw.empty()) {
            L.vertices.push_back(lw[0].a);
            for (const auto& e : lw) L.vertices.push_back(e.b);
        }
    }
    double face_h = 0, base_y = base ? base->a.y : 0.0;
    for (const auto& e : face.boundary.edges)
        face_h = std::max({face_h, e.a.y - base_y, e.b.y - base_y});

    std::vector<DemandPair> ll, case1, case2, case3;
    for (const auto& pr : pairs) {
        int ca = dir_detail::classify_face_point(face, pr.a, opt.eta);
        int cb = dir_detail::classify_face_point(face, pr.b, opt.eta);
        if (ca > cb) std::swap(ca, cb);
        if (ca == 2 && cb == 2) ll.push_back(pr);
        else if (ca == 0 && cb == 2) case1.push_back(pr);
        else if (ca == 0 && cb == 1) case2.push_back(pr);
        else if (ca == 1 && cb == 2) case3.push_back(pr);
        // base-base and gamma-gamma ride the boundary itself
        else {
            store.attach(pr.a, 4 * opt.eta);
            store.attach(pr.b, 4 * opt.eta);
        }
    }

    if (!ll.empty() && L.vertices.size() >= 2) {
        dir_detail::run_path_side(sink, L,
                                  dir_detail::qualifying_pairs(ll, opt.sigma_t(), false),
                                  true, opt, st);
        dir_detail::run_path_side({g, store, true}, L,
                                  dir_detail::qualifying_pairs(ll, opt.sigma_t(), true),
                                  true, opt, st);
    }
    dir_detail::RecursionCtx ctx{sink, opt, st, true};
    if (!case1.empty() && base && L.vertices.size() >= 2) {
        std::vector<DemandPair> oriented;
        for (auto pr : case1) {
            if (dir_detail::classify_face_point(face, pr.b, opt.eta) == 0)
                std::swap(pr.a, pr.b);
            oriented.push_back(pr);
        }
        dir_detail::serve_base_to_path(ctx, *base, L, std::max(face_h, opt.eta), oriented);
    }
    if (!case2.empty() && base && has_gamma) {
        std::vector<DemandPair> oriented;
        for (auto pr : case2) {
            if (dir_detail::classify_face_point(face, pr.b, opt.eta) == 0)
                std::swap(pr.a, pr.b);
            oriented.push_back({pr.a, pr.b});  // a on base, b on gamma
        }
        dir_detail::serve_steep_to_base(ctx, qr, *base, oriented);
    }
    if (!case3.empty() && has_gamma && L.vertices.size() >= 2) {
        // chain a_i / b_i: rails from qr to L at slope -sigma_t
        double sigma = opt.sigma_t();
        Point q = qr.a.y <= qr.b.y ? qr.a : qr.b;
        Point r = qr.a.y <= qr.b.y ? qr.b : qr.a;
        struct Rail {
            Point b_i, a_i1;  // left (on L) and right (on qr) rail ends
            Point a_i;        // lower qr end of the interval
        };
        std::vector<Rail> rails;
        Point a_i = q;
        for (int guard = 0; guard < 200 && a_i.y < r.y - 4 * opt.eta; ++guard) {
            // ray up-left at slope -sigma from a_i; first hit on L
            Point hit{0, 0};
            bool got = false;
            double best_t = 1e300;
            Point far{a_i.x - 4 * (face_h + 1) / sigma * sigma, 0};
            Point ray_end{a_i.x - 2 * (face_h / sigma + (r.y - a_i.y)), 0};
            ray_end.y = a_i.y + sigma * (a_i.x - ray_end.x);
            (void)far;
            Point out2[2];
            for (std::size_t e = 0; e + 1 < L.vertices.size(); ++e) {
                int n = segment_intersections({a_i, ray_end},
                                              {L.vertices[e], L.vertices[e + 1]},
                                              opt.eta, out2);
                for (int t = 0; t < n; ++t) {
                    double d = dist(a_i, out2[t]);
                    if (d > 4 * opt.eta && d < best_t) { best_t = d; hit = out2[t]; got = true; }
                }
            }
            if (!got) break;
            // a_{i+1} on qr at the hit's height (clamped at r)
            if (hit.y >= r.y - 4 * opt.eta) {
                Point hit_cl = hit;
                if (hit.y > r.y) {
                    double tt = (r.y - a_i.y) / (hit.y - a_i.y);
                    hit_cl = {a_i.x + tt * (hit.x - a_i.x), r.y};
                }
                rails.push_back({hit_cl, r, a_i});
                break;
            }
            double t = (hit.y - qr.a.y) / (qr.b.y - qr.a.y);
            Point a_next{qr.a.x + t * (qr.b.x - qr.a.x), hit.y};
            rails.push_back({hit, a_next, a_i});
            a_i = a_next;
        }
        for (const auto& rail : rails) {
            Point bl = ctx.sink.attach(rail.b_i, 4 * opt.eta);
            Point br = ctx.sink.attach(rail.a_i1, 4 * opt.eta);
            store.add_segment(bl, br);
            if (ctx.stats) ctx.stats->gadget_weight += dist(bl, br);
        }
        for (auto pr : case3) {
            if (dir_detail::classify_face_point(face, pr.b, opt.eta) == 1)
                std::swap(pr.a, pr.b);
            // pr.a on gamma, pr.b on L; s = chord crossing with the rail of
            // b's interval
            const Rail* rail = nullptr;
            for (const auto& rl : rails)
                if (pr.b.y >= rl.b_i.y - 4 * opt.eta) rail = &rl;
            if (!rail) {
                // below the first rail: corner-scale chord, served exactly
                Point u = ctx.sink.attach(pr.a, 4 * opt.eta);
                Point v = ctx.sink.attach(pr.b, 4 * opt.eta);
                ctx.sink.add_edge(u, v);
                if (ctx.stats) {
                    ctx.stats->gadget_weight += dist(u, v);
                    ++ctx.stats->served_pairs;
                }
                continue;
            }
            Point out2[2];
            Segment rail_seg{rail->b_i, rail->a_i1};
            int n = segment_intersections({pr.a, pr.b}, rail_seg, opt.eta, out2);
            Point s = n > 0 ? out2[0]
                            : Point{std::clamp(pr.b.x, std::min(rail_seg.a.x, rail_seg.b.x),
                                               std::max(rail_seg.a.x, rail_seg.b.x)),
                                    rail_seg.a.y};
            s = ctx.sink.attach(s, 4 * opt.eta);
            // triangle: (a on qr) to (s on rail); clamp a into the interval
            Point a_cl = pr.a;
            if (a_cl.y < rail->a_i.y) a_cl = rail->a_i;
            a_cl = ctx.sink.attach(a_cl, 4 * opt.eta);
            ctx.sink.attach(pr.a, 4 * opt.eta);
            Segment steep{rail->a_i, rail->a_i1};
            dir_detail::serve_steep_to_base(ctx, steep, {rail->b_i, rail->a_i1},
                                            {{s, a_cl}});
            // rail to L towers
            double rail_h = 0;
            for (Point p : L.vertices) rail_h = std::max(rail_h, p.y - rail_seg.a.y);
            dir_detail::serve_base_to_path(ctx, {rail->b_i, rail->a_i1}, L,
                                           std::max(rail_h, opt.eta), {{s, pr.b}});
        }
    }
    store.emit(g);
    if (flip_horiz)
        g = dir_detail::transform_graph(g, [](Point p) { return Point{-p.x, p.y}; });
    if (flip_vert)
        g = dir_detail::transform_graph(g, [](Point p) { return Point{p.x, -p.y}; });
    return g;
}

// Dispatcher over the tiling's face types.
inline GeoGraph face_spanner(const Face& face, const std::vector<DemandPair>& pairs,
                             double eps, DirStats* stats = nullptr,
                             DirOptions opt = {}, double graph_eta = kEtaRel) {
    switch (face.tag) {
        case FaceTag::TameHistogram:
            return tame_histogram_spanner(face, pairs, eps, stats, opt, graph_eta);
        case FaceTag::FuzzyStaircase:
            return fuzzy_staircase_spanner(face, pairs, eps, stats, opt, graph_eta);
        default:
            throw TypeMismatch("face_spanner serves tame histograms and fuzzy staircases");
    }
}

}  // namespace stspan
