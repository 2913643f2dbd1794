#pragma once

// Planar kernel: points, segments, polygonal paths, directions in [0, pi),
// slope predicates and angle-bounded path checks.

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace stspan {

inline constexpr double kPi = 3.14159265358979323846;

// Relative coincidence tolerance; callers scale by the current frame diameter.
inline constexpr double kEtaRel = 1e-9;

struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};
struct DegenerateSegment : Error {
    DegenerateSegment() : Error("degenerate segment: endpoints coincide") {}
};
struct OutOfRange : Error {
    explicit OutOfRange(const std::string& what) : Error("out of range: " + what) {}
};
struct DegenerateInput : Error {
    explicit DegenerateInput(const std::string& what) : Error("degenerate input: " + what) {}
};

struct Point {
    double x = 0.0;
    double y = 0.0;

    friend Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
    friend Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
    friend Point operator*(double s, Point p) { return {s * p.x, s * p.y}; }
    friend bool operator==(Point a, Point b) { return a.x == b.x && a.y == b.y; }
};

inline double dot(Point a, Point b) { return a.x * b.x + a.y * b.y; }
inline double cross(Point a, Point b) { return a.x * b.y - a.y * b.x; }
inline double norm(Point p) { return std::hypot(p.x, p.y); }
inline double dist(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

inline bool finite(Point p) { return std::isfinite(p.x) && std::isfinite(p.y); }

inline bool near(Point a, Point b, double eta) { return dist(a, b) <= eta; }

struct Segment {
    Point a, b;

    double length() const { return dist(a, b); }
    Point at(double t) const { return {a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)}; }
};

// Direction of a line in [0, pi): the minimum ccw angle rotating the x-axis
// parallel to it. dir(ab) == dir(ba).
struct Direction {
    double angle = 0.0;  // radians in [0, pi)

    static Direction of(double raw) {
        double a = std::fmod(raw, kPi);
        if (a < 0) a += kPi;
        if (a >= kPi) a -= kPi;  // fmod rounding guard
        return Direction{a};
    }
};

// Wrap-aware distance on the direction circle (period pi).
inline double dir_distance(Direction a, Direction b) {
    double d = std::fabs(a.angle - b.angle);
    return std::min(d, kPi - d);
}

inline Direction dir_of(const Segment& s, double eta = 0.0) {
    if (dist(s.a, s.b) <= eta || s.a == s.b) throw DegenerateSegment{};
    double a = std::atan2(s.b.y - s.a.y, s.b.x - s.a.x);
    return Direction::of(a);
}

// Slope dy/dx, +inf for vertical segments.
inline double slope_of(const Segment& s, double eta = 0.0) {
    if (dist(s.a, s.b) <= eta || s.a == s.b) throw DegenerateSegment{};
    double dx = s.b.x - s.a.x;
    double dy = s.b.y - s.a.y;
    if (dx == 0.0) return std::numeric_limits<double>::infinity();
    return dy / dx;
}

// Counterclockwise arc [lo, hi] on the direction circle; arc length <= pi.
struct DirectionInterval {
    Direction lo, hi;

    double length() const {
        double d = hi.angle - lo.angle;
        if (d < 0) d += kPi;
        return d;
    }
    bool contains(Direction d) const {
        double rel = d.angle - lo.angle;
        if (rel < 0) rel += kPi;
        return rel < length() || d.angle == hi.angle;
    }
    // Half-open membership [lo, hi): used by the bucketing so every direction
    // lands in exactly one bucket.
    bool contains_half_open(Direction d) const {
        double rel = d.angle - lo.angle;
        if (rel < 0) rel += kPi;
        return rel < length();
    }
    Direction midpoint() const {
        return Direction::of(lo.angle + 0.5 * length());
    }
};

struct PolyPath {
    std::vector<Point> vertices;

    PolyPath() = default;
    explicit PolyPath(std::vector<Point> vs) : vertices(std::move(vs)) {}

    std::size_t edge_count() const {
        return vertices.size() < 2 ? 0 : vertices.size() - 1;
    }
    Segment edge(std::size_t i) const { return {vertices[i], vertices[i + 1]}; }
};

inline double path_weight(const PolyPath& p) {
    double w = 0.0;
    for (std::size_t i = 0; i + 1 < p.vertices.size(); ++i)
        w += dist(p.vertices[i], p.vertices[i + 1]);
    return w;
}

struct AngleBoundReport {
    bool bounded = false;      // all edges within delta of theta and monotone
    double weight = 0.0;       // ||P||
    double endpoint_dist = 0.0;
    double bound = 0.0;        // (1 + delta^2) * ||ab||
};

// Checks that every edge direction is within delta of theta (mod pi) and the
// path is monotone in direction theta. When true, ||P|| <= (1+delta^2)||ab||.
inline AngleBoundReport check_angle_bounded(const PolyPath& p, Direction theta,
                                            double delta, double eta = 0.0) {
    if (delta > kPi / 4.0) throw OutOfRange("angle bound delta > pi/4");
    AngleBoundReport r;
    r.weight = path_weight(p);
    if (p.vertices.size() < 2) return r;
    r.endpoint_dist = dist(p.vertices.front(), p.vertices.back());
    r.bound = (1.0 + delta * delta) * r.endpoint_dist;
    Point u{std::cos(theta.angle), std::sin(theta.angle)};
    bool ok = true;
    double sign = 0.0;
    for (std::size_t i = 0; i + 1 < p.vertices.size(); ++i) {
        Segment e{p.vertices[i], p.vertices[i + 1]};
        if (e.length() <= eta) continue;
        if (dir_distance(dir_of(e), theta) > delta + 1e-15) { ok = false; break; }
        double proj = dot(e.b - e.a, u);
        if (proj != 0.0) {
            double s = proj > 0 ? 1.0 : -1.0;
            if (sign == 0.0) sign = s;
            else if (s != sign) { ok = false; break; }  // not monotone in theta
        }
    }
    r.bounded = ok;
    return r;
}

inline Point rotate_point(Point p, double phi) {
    double c = std::cos(phi), s = std::sin(phi);
    return {c * p.x - s * p.y, s * p.x + c * p.y};
}

inline std::vector<Point> rotate(const std::vector<Point>& pts, double phi) {
    std::vector<Point> out;
    out.reserve(pts.size());
    for (Point p : pts) out.push_back(rotate_point(p, phi));
    return out;
}

// Deduplicate points under tolerance eta, keeping first occurrences in order.
inline std::vector<Point> dedup_points(const std::vector<Point>& pts, double eta) {
    std::vector<Point> out;
    for (Point p : pts) {
        bool dup = false;
        for (Point q : out)
            if (near(p, q, eta)) { dup = true; break; }
        if (!dup) out.push_back(p);
    }
    return out;
}

// Diameter of the axis-parallel bounding box (frame scale for tolerances).
inline double frame_diameter(const std::vector<Point>& pts) {
    if (pts.empty()) return 0.0;
    double xmin = pts[0].x, xmax = pts[0].x, ymin = pts[0].y, ymax = pts[0].y;
    for (Point p : pts) {
        xmin = std::min(xmin, p.x); xmax = std::max(xmax, p.x);
        ymin = std::min(ymin, p.y); ymax = std::max(ymax, p.y);
    }
    return std::hypot(xmax - xmin, ymax - ymin);
}

// Proper + touching intersection of two segments. Returns number of
// intersection points written to out (0, 1, or 2 for collinear overlap ends).
int segment_intersections(const Segment& s1, const Segment& s2, double eta,
                          Point out[2]);

inline int segment_intersections(const Segment& s1, const Segment& s2, double eta,
                                 Point out[2]) {
    Point d1 = s1.b - s1.a, d2 = s2.b - s2.a;
    double denom = cross(d1, d2);
    double len1 = norm(d1), len2 = norm(d2);
    if (len1 <= eta || len2 <= eta) return 0;
    if (std::fabs(denom) > 1e-12 * len1 * len2) {
        double t = cross(s2.a - s1.a, d2) / denom;
        double u = cross(s2.a - s1.a, d1) / denom;
        double tol1 = eta / len1, tol2 = eta / len2;
        if (t < -tol1 || t > 1 + tol1 || u < -tol2 || u > 1 + tol2) return 0;
        t = std::min(1.0, std::max(0.0, t));
        out[0] = s1.at(t);
        return 1;
    }
    // Near-parallel: check collinear overlap.
    double off = std::fabs(cross(s2.a - s1.a, d1)) / len1;
    if (off > eta) return 0;
    auto t_of = [&](Point p) { return dot(p - s1.a, d1) / (len1 * len1); };
    double t0 = t_of(s2.a), t1 = t_of(s2.b);
    if (t0 > t1) std::swap(t0, t1);
    double lo = std::max(0.0, t0), hi = std::min(1.0, t1);
    if (lo > hi + eta / len1) return 0;
    int n = 0;
    out[n++] = s1.at(std::min(1.0, std::max(0.0, lo)));
    if (hi - lo > eta / len1) out[n++] = s1.at(std::min(1.0, std::max(0.0, hi)));
    return n;
}

}  // namespace stspan
