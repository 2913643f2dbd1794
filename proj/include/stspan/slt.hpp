#pragma once

// Shallow-light trees between a source and a horizontal segment or a
// staircase path, built from a binary interval hierarchy of anchor points:
// the level-j anchor segment leaves its anchor at direction
// pi/2 +/- 2^((j-k)/2) and spans its interval, so the segments of nested
// intervals cross and every anchor reaches the source along a y-monotone
// path. Steep edges of generalized staircases are ridden upward by the
// climbing anchor paths.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <vector>
#include <set>
#include <vector>

#include "stspan/geom.hpp"
#include "stspan/graph.hpp"

namespace stspan {

struct InvalidStaircase : Error {
    InvalidStaircase() : Error("path is not an x,y-monotone staircase") {}
};
struct AngleBoundViolation : Error {
    AngleBoundViolation() : Error("replacement path exceeds the sqrt(eps)/2 angle bound") {}
};
struct FrameError : Error {
    explicit FrameError(const std::string& w) : Error("frame precondition: " + w) {}
};

// Similarity map (translation + rotation + uniform scale) between the
// construction frame and the world frame.
struct SltFrame {
    Point origin{0.0, 0.0};
    double c = 1.0, s = 0.0;  // rotation cos/sin
    double scale = 1.0;

    static SltFrame make(Point origin, double phi, double scale) {
        if (!(scale > 0.0) || !std::isfinite(scale)) throw FrameError("scale must be positive");
        return {origin, std::cos(phi), std::sin(phi), scale};
    }
    Point to_world(Point l) const {
        return {origin.x + scale * (c * l.x - s * l.y),
                origin.y + scale * (s * l.x + c * l.y)};
    }
    Point to_local(Point w) const {
        double dx = (w.x - origin.x) / scale, dy = (w.y - origin.y) / scale;
        return {c * dx + s * dy, -s * dx + c * dy};
    }
};

struct SltOptions {
    // Cap on the binary-tree depth; <0 builds the full k levels. The pipeline
    // caps near k/2, which keeps the anchor hop below sqrt(eps) frame units
    // and the hop error inside the eps budget.
    int max_level = -1;
    // Local x coordinates of demanded targets. Empty: all anchors active
    // (the full construction). Otherwise only the demanded anchors plus their
    // ancestor closure are materialized.
    std::vector<double> demand_x;
    bool include_base = true;
    bool include_stem = true;
};

struct SltStats {
    int k = 0;
    std::int64_t anchor_count = 0;   // active anchors
    double base_weight = 0.0;        // ||L||, world units
    double stem_weight = 0.0;
    double extra_weight = 0.0;       // anchor segments beyond base and stem
    std::vector<Point> base_touch;   // world points where the tree meets L
};

namespace slt_detail {

// Anchor indices are 1..M with M = 2^(k+1). Level-j blocks have size
// 2^(k+1-j); an index is a level-j endpoint if it starts or ends a block.
inline std::int64_t block_size(int k, int j) { return std::int64_t{1} << (k + 1 - j); }

inline bool is_endpoint_at(std::int64_t q, int k, int j, bool& left) {
    std::int64_t b = block_size(k, j);
    if ((q - 1) % b == 0) { left = true; return true; }
    if (q % b == 0) { left = false; return true; }
    return false;
}

inline int level_of(std::int64_t q, int k, int j_max, bool& left) {
    for (int j = 0; j <= j_max; ++j)
        if (is_endpoint_at(q, k, j, left)) return j;
    return -1;
}

struct IntervalRef {
    std::int64_t lo, hi;
};

inline IntervalRef interval_at(std::int64_t q, int k, int j) {
    std::int64_t b = block_size(k, j);
    std::int64_t lo = ((q - 1) / b) * b + 1;
    return {lo, lo + b - 1};
}

}  // namespace slt_detail

// In-frame SLT builder. The local frame has the base path spanning
// x in [-1/2, 1/2] and the source above it; callers map general geometry
// through an SltFrame. Steep path edges (|dy| > |dx|) are treated as
// replaced vertical edges and are ridden upward by climbing anchor paths.
class SltBuilder {
public:
    SltBuilder(const SltFrame& frame, Point source_world,
               const PolyPath& path_world, double eps, SltOptions opt)
        : frame_(frame), opt_(std::move(opt)) {
        if (!(eps > 0.0 && eps < 1.0)) throw OutOfRange("eps must be in (0,1)");
        k_ = 0;
        while (std::ldexp(1.0, -k_) > eps && k_ < 40) ++k_;  // eps rounded down to 2^-k
        j_max_ = (opt_.max_level >= 0) ? std::min(opt_.max_level, k_) : k_;
        s_local_ = frame_.to_local(source_world);
        local_.vertices.reserve(path_world.vertices.size());
        for (Point p : path_world.vertices) local_.vertices.push_back(frame_.to_local(p));
        if (local_.vertices.size() < 2) throw InvalidStaircase{};
        x_lo_ = local_.vertices.front().x;
        x_hi_ = local_.vertices.back().x;
        if (!(x_hi_ > x_lo_)) throw InvalidStaircase{};
    }

    SltStats build(GeoGraph& g) {
        collect_active_anchors();
        build_anchor_paths();
        add_crossings();
        SltStats st;
        st.k = k_;
        st.anchor_count = static_cast<std::int64_t>(active_.size());
        emit(g, st);
        return st;
    }

    int k() const { return k_; }

private:
    struct PathCut {  // position along the base path
        std::size_t edge;
        double t;
        bool operator<(const PathCut& o) const {
            return edge != o.edge ? edge < o.edge : t < o.t;
        }
    };
    struct AnchorPath {
        std::int64_t q = 0;
        std::vector<Point> pts;          // local polyline from t_q upward
        std::vector<bool> ride;          // edge i lies along the base path
        std::vector<double> cut_params;  // edge index + t, from crossings
    };

    double anchor_x(std::int64_t q) const {
        std::int64_t M = std::int64_t{1} << (k_ + 1);
        double spacing = (x_hi_ - x_lo_) / static_cast<double>(M - 1);
        return x_lo_ + spacing * static_cast<double>(q - 1);
    }

    // Point on the base path at horizontal position x. The source sits above
    // the path in the build frame, so among stacked candidates (steep
    // pieces) the highest one is picked: the final hop along the path then
    // continues away from the source instead of backtracking.
    PathCut locate(double x) const {
        const auto& v = local_.vertices;
        if (x <= v.front().x) return {0, 0.0};
        PathCut best{v.size() - 2, 1.0};
        double best_y = -std::numeric_limits<double>::infinity();
        bool got = false;
        for (std::size_t i = 0; i + 1 < v.size(); ++i) {
            double x0 = v[i].x, x1 = v[i + 1].x;
            double lo = std::min(x0, x1), hi = std::max(x0, x1);
            if (x < lo || x > hi) continue;
            PathCut c;
            if (std::fabs(x1 - x0) < 1e-15) {
                c = {i, v[i].y >= v[i + 1].y ? 0.0 : 1.0};
            } else {
                c = {i, std::min(1.0, std::max(0.0, (x - x0) / (x1 - x0)))};
            }
            Point p = base_point(c);
            double y_top = std::max(v[i].y, v[i + 1].y);
            double cand = std::fabs(x1 - x0) < 1e-15 ? y_top : p.y;
            if (!got || cand > best_y) {
                best = c;
                best_y = cand;
                got = true;
            }
        }
        return best;
    }
    Point base_point(PathCut c) const {
        Point a = local_.vertices[c.edge], b = local_.vertices[c.edge + 1];
        return {a.x + c.t * (b.x - a.x), a.y + c.t * (b.y - a.y)};
    }

    void collect_active_anchors() {
        using namespace slt_detail;
        std::int64_t M = std::int64_t{1} << (k_ + 1);
        if (opt_.demand_x.empty()) {
            for (std::int64_t q = 1; q <= M; ++q) {
                bool left;
                if (level_of(q, k_, j_max_, left) >= 0) active_.insert(q);
            }
            return;
        }
        std::int64_t B = block_size(k_, j_max_);
        double spacing = (x_hi_ - x_lo_) / static_cast<double>(M - 1);
        for (double dx : opt_.demand_x) {
            double xq = std::min(std::max(dx, x_lo_), x_hi_);
            std::int64_t qi = static_cast<std::int64_t>(std::llround((xq - x_lo_) / spacing)) + 1;
            qi = std::min(std::max<std::int64_t>(qi, 1), M);
            // nearest block endpoint at the deepest level
            std::int64_t base = ((qi - 1) / B) * B;
            std::int64_t pick = 1;
            double best = std::numeric_limits<double>::infinity();
            for (std::int64_t c : {base, base + 1, base + B, base + B + 1}) {
                if (c < 1 || c > M) continue;
                double d = std::fabs(anchor_x(c) - xq);
                if (d < best) { best = d; pick = c; }
            }
            bool left;
            int lv = level_of(pick, k_, j_max_, left);
            active_.insert(pick);
            for (int j = 0; j <= std::max(lv, 0); ++j) {
                auto iv = interval_at(pick, k_, j);
                active_.insert(iv.lo);
                active_.insert(iv.hi);
            }
        }
        active_.insert(1);
        active_.insert(M);
    }

    // Climbing path for a left endpoint: leave t_q at ray slope m; whenever
    // an ascending steep edge blocks the ray, ride it to its upper endpoint
    // and continue, until the interval's x-span is covered.
    void climb(AnchorPath& ap, PathCut start, double m, double x_end) {
        const auto& v = local_.vertices;
        Point cur = base_point(start);
        ap.pts.push_back(cur);
        for (std::size_t i = start.edge; i + 1 < v.size() && cur.x < x_end - 1e-15; ++i) {
            Point a = v[i], b = v[i + 1];
            if (std::max(a.x, b.x) <= cur.x + 1e-15) continue;
            double ey = b.y - a.y;
            bool steep = std::fabs(b.x - a.x) < std::fabs(ey);
            if (!steep || ey <= 0) continue;
            // exact ray/edge intersection
            Point ray_end{x_end, cur.y + m * (x_end - cur.x)};
            Point out[2];
            int n = segment_intersections({cur, ray_end}, {a, b}, 1e-14, out);
            if (n >= 1 && out[0].x > cur.x + 1e-15) {
                Point hit = out[0];
                Point top = (a.y > b.y) ? a : b;
                if (top.y <= hit.y + 1e-15) continue;  // ray passes over
                ap.pts.push_back(hit);
                ap.ride.push_back(false);
                double el = dist(a, b);
                double t = el > 0 ? std::min(1.0, std::max(0.0, dot(hit - a, b - a) / (el * el))) : 0.0;
                base_cuts_.push_back({i, t});
                ap.pts.push_back(top);
                ap.ride.push_back(true);  // along the base path, no new weight
                cur = top;
            }
        }
        if (cur.x < x_end - 1e-15) {
            ap.pts.push_back({x_end, cur.y + m * (x_end - cur.x)});
            ap.ride.push_back(false);
        }
    }

    void build_anchor_paths() {
        using namespace slt_detail;
        for (std::int64_t q : active_) {
            bool left = false;
            int j = level_of(q, k_, j_max_, left);
            if (j < 0) continue;
            auto iv = interval_at(q, k_, j);
            double alpha = std::exp2(0.5 * (j - k_));
            double m = 1.0 / std::tan(alpha);
            AnchorPath ap;
            ap.q = q;
            PathCut tq = locate(anchor_x(q));
            base_cuts_.push_back(tq);
            if (left) {
                climb(ap, tq, m, anchor_x(iv.hi));
            } else {
                double x_end = anchor_x(iv.lo);
                Point t = base_point(tq);
                ap.pts.push_back(t);
                ap.pts.push_back({x_end, t.y + m * (t.x - x_end)});
                ap.ride.push_back(false);
            }
            if (ap.pts.size() >= 2) paths_.push_back(std::move(ap));
        }
        for (std::size_t i = 0; i < paths_.size(); ++i) path_index_[paths_[i].q] = i;
    }

    void add_crossings() {
        using namespace slt_detail;
        std::set<std::pair<std::int64_t, std::int64_t>> seen;
        for (const AnchorPath& ap : paths_) {
            bool left;
            int lv = level_of(ap.q, k_, j_max_, left);
            for (int j = 0; j < lv; ++j) {
                auto iv = interval_at(ap.q, k_, j);
                for (std::int64_t anc : {iv.lo, iv.hi}) {
                    if (anc == ap.q) continue;
                    auto key = std::minmax(ap.q, anc);
                    if (!seen.insert(key).second) continue;
                    auto it = path_index_.find(anc);
                    if (it != path_index_.end())
                        cross_pair(path_index_.at(ap.q), it->second);
                }
            }
        }
        if (opt_.include_stem) {
            double sx = std::min(std::max(s_local_.x, x_lo_), x_hi_);
            Point bot{s_local_.x, base_point(locate(sx)).y};
            stem_ = Segment{s_local_, bot};
            for (std::size_t i = 0; i < paths_.size(); ++i) cross_with_stem(i);
        }
    }

    void cross_pair(std::size_t ia, std::size_t ib) {
        AnchorPath& A = paths_[ia];
        AnchorPath& B = paths_[ib];
        Point out[2];
        for (std::size_t i = 0; i + 1 < A.pts.size(); ++i) {
            if (A.ride[i]) continue;
            for (std::size_t j = 0; j + 1 < B.pts.size(); ++j) {
                if (B.ride[j]) continue;
                int n = segment_intersections({A.pts[i], A.pts[i + 1]},
                                              {B.pts[j], B.pts[j + 1]}, 1e-14, out);
                if (n == 1) {
                    record_cut(A, i, out[0]);
                    record_cut(B, j, out[0]);
                }
            }
        }
    }

    void cross_with_stem(std::size_t ia) {
        AnchorPath& A = paths_[ia];
        Point out[2];
        for (std::size_t i = 0; i + 1 < A.pts.size(); ++i) {
            if (A.ride[i]) continue;
            int n = segment_intersections({A.pts[i], A.pts[i + 1]}, *stem_, 1e-14, out);
            if (n == 1) {
                record_cut(A, i, out[0]);
                stem_cuts_.push_back(out[0]);
            }
        }
    }

    static void record_cut(AnchorPath& ap, std::size_t edge, Point p) {
        Segment e{ap.pts[edge], ap.pts[edge + 1]};
        double len2 = dot(e.b - e.a, e.b - e.a);
        double t = len2 > 0 ? dot(p - e.a, e.b - e.a) / len2 : 0.0;
        ap.cut_params.push_back(static_cast<double>(edge) + std::min(std::max(t, 0.0), 1.0));
    }

    void emit(GeoGraph& g, SltStats& st) {
        for (AnchorPath& ap : paths_) {
            std::vector<double> ps = ap.cut_params;
            for (std::size_t i = 0; i < ap.pts.size(); ++i) ps.push_back(static_cast<double>(i));
            std::sort(ps.begin(), ps.end());
            for (std::size_t i = 0; i + 1 < ps.size(); ++i) {
                if (ps[i + 1] - ps[i] < 1e-12) continue;
                std::size_t edge = static_cast<std::size_t>(ps[i]);
                if (edge >= ap.ride.size() || ap.ride[edge]) continue;  // rides go through L
                Point a = eval(ap, ps[i]), b = eval(ap, ps[i + 1]);
                if (dist(a, b) < 1e-14) continue;
                st.extra_weight += dist(a, b);
                g.add_segment(frame_.to_world(a), frame_.to_world(b));
            }
        }
        if (opt_.include_stem && stem_ && dist(stem_->a, stem_->b) > 1e-14) {
            std::vector<Point> pts{stem_->a, stem_->b};
            pts.insert(pts.end(), stem_cuts_.begin(), stem_cuts_.end());
            std::sort(pts.begin(), pts.end(), [](Point a, Point b) { return a.y > b.y; });
            for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
                if (dist(pts[i], pts[i + 1]) < 1e-14) continue;
                st.stem_weight += dist(pts[i], pts[i + 1]);
                g.add_segment(frame_.to_world(pts[i]), frame_.to_world(pts[i + 1]));
            }
        }
        for (double dx : opt_.demand_x) base_cuts_.push_back(locate(dx));
        for (const PathCut& c : base_cuts_)
            st.base_touch.push_back(frame_.to_world(base_point(c)));
        if (opt_.include_stem && stem_)
            st.base_touch.push_back(frame_.to_world(stem_->b));
        if (opt_.include_base) {
            std::sort(base_cuts_.begin(), base_cuts_.end());
            const auto& v = local_.vertices;
            std::vector<Point> chain;
            std::size_t ci = 0;
            for (std::size_t i = 0; i + 1 < v.size(); ++i) {
                chain.push_back(v[i]);
                while (ci < base_cuts_.size() && base_cuts_[ci].edge == i) {
                    if (base_cuts_[ci].t > 1e-12 && base_cuts_[ci].t < 1.0 - 1e-12)
                        chain.push_back(base_point(base_cuts_[ci]));
                    ++ci;
                }
            }
            chain.push_back(v.back());
            for (std::size_t i = 0; i + 1 < chain.size(); ++i) {
                if (dist(chain[i], chain[i + 1]) < 1e-14) continue;
                st.base_weight += dist(chain[i], chain[i + 1]);
                g.add_segment(frame_.to_world(chain[i]), frame_.to_world(chain[i + 1]));
            }
        }
        st.base_weight *= frame_.scale;
        st.stem_weight *= frame_.scale;
        st.extra_weight *= frame_.scale;
    }

    static Point eval(const AnchorPath& ap, double param) {
        std::size_t e = std::min(static_cast<std::size_t>(param), ap.pts.size() - 2);
        double t = param - static_cast<double>(e);
        Point a = ap.pts[e], b = ap.pts[e + 1];
        return {a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)};
    }

    SltFrame frame_;
    SltOptions opt_;
    int k_ = 0, j_max_ = 0;
    Point s_local_;
    PolyPath local_;
    double x_lo_ = 0, x_hi_ = 0;
    std::set<std::int64_t> active_;
    std::vector<AnchorPath> paths_;
    std::map<std::int64_t, std::size_t> path_index_;
    std::optional<Segment> stem_;
    std::vector<Point> stem_cuts_;
    std::vector<PathCut> base_cuts_;
};

// ---------------------------------------------------------------------------
// Public operations in the construction lemmas' canonical frames.

inline SltFrame frame_over_span(Point left, Point right, bool flip = false) {
    double w = dist(left, right);
    if (w <= 0) throw FrameError("zero-width span");
    double phi = std::atan2(right.y - left.y, right.x - left.x);
    if (flip) phi += kPi;
    Point mid{0.5 * (left.x + right.x), 0.5 * (left.y + right.y)};
    return SltFrame::make(mid, phi, w);
}

// SLT between a source and a horizontal segment; eps is rounded down to a
// power of two, anchors are 2^(k+1) uniformly spaced points on L.
inline GeoGraph slt_segment(Point s, Segment L, double eps, SltOptions opt = {},
                            SltStats* stats = nullptr, double eta = kEtaRel) {
    if (!(eps > 0.0 && eps < 1.0)) throw OutOfRange("eps must be in (0,1)");
    if (L.length() <= 0) throw DegenerateSegment{};
    Point a = L.a, b = L.b;
    if (a.x > b.x || (a.x == b.x && a.y > b.y)) std::swap(a, b);
    SltFrame f = frame_over_span(a, b);
    if (f.to_local(s).y < 0) {  // keep the source above in the build frame
        f = frame_over_span(b, a);
        std::swap(a, b);
    }
    GeoGraph g(eta);
    SltBuilder builder(f, s, PolyPath({a, b}), eps, std::move(opt));
    SltStats st = builder.build(g);
    if (stats) *stats = st;
    g.add_vertex(s);
    return g;
}

// SLT between a source and an x,y-monotone increasing staircase; with
// allow_angle_paths the vertical edges may be replaced by y-monotone
// (pi/2 +/- sqrt(eps)/2)-angle-bounded paths.
inline GeoGraph slt_staircase(Point s, const PolyPath& L, double eps, SltOptions opt = {},
                              SltStats* stats = nullptr, double eta = kEtaRel,
                              bool allow_angle_paths = false) {
    if (!(eps > 0.0 && eps < 1.0)) throw OutOfRange("eps must be in (0,1)");
    if (L.vertices.size() < 2) throw InvalidStaircase{};
    PolyPath path = L;
    if (path.vertices.front().x > path.vertices.back().x)
        std::reverse(path.vertices.begin(), path.vertices.end());
    double span = path.vertices.back().x - path.vertices.front().x;
    if (span <= 0) throw InvalidStaircase{};
    double bound = std::sqrt(eps) / 2.0 + 1e-12;
    for (std::size_t i = 0; i + 1 < path.vertices.size(); ++i) {
        Point pa = path.vertices[i], pb = path.vertices[i + 1];
        double dx = pb.x - pa.x, dy = pb.y - pa.y;
        if (std::fabs(dx) >= std::fabs(dy)) {
            if (dx < -1e-12 * span) throw InvalidStaircase{};
            if (std::fabs(dy) > 1e-12 * span) throw InvalidStaircase{};  // runs stay level
        } else {
            if (dy <= 0) throw InvalidStaircase{};  // steep edges ascend
            if (std::fabs(dx) > 1e-15) {
                double off = std::atan2(std::fabs(dx), dy);
                if (!allow_angle_paths && off > 1e-9) throw InvalidStaircase{};
                if (allow_angle_paths && off > bound) throw AngleBoundViolation{};
            }
        }
    }
    Point mid{0.5 * (path.vertices.front().x + path.vertices.back().x), 0.0};
    SltFrame f = SltFrame::make(mid, 0.0, span);
    GeoGraph g(eta);
    SltBuilder builder(f, s, path, eps, std::move(opt));
    SltStats st = builder.build(g);
    if (stats) *stats = st;
    g.add_vertex(s);
    return g;
}

inline GeoGraph slt_angle_staircase(Point s, const PolyPath& L, double eps,
                                    SltOptions opt = {}, SltStats* stats = nullptr,
                                    double eta = kEtaRel) {
    return slt_staircase(s, L, eps, std::move(opt), stats, eta, /*allow_angle_paths=*/true);
}

}  // namespace stspan
