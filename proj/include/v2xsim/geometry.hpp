#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <vector>

namespace v2xsim {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

struct Pose {
    double x = 0.0, y = 0.0, yaw = 0.0;
};

inline double wrap_angle(double a) {
    while (a > M_PI) a -= 2.0 * M_PI;
    while (a < -M_PI) a += 2.0 * M_PI;
    return a;
}

// Oriented rectangle: center, heading, full length along heading, full width
// across it.
struct OrientedBox {
    double cx = 0.0, cy = 0.0;
    double yaw = 0.0;
    double length = 1.0, width = 1.0;

    std::array<Vec2, 4> corners() const {
        double c = std::cos(yaw), s = std::sin(yaw);
        double hl = 0.5 * length, hw = 0.5 * width;
        std::array<Vec2, 4> out;
        const double lx[4] = {hl, hl, -hl, -hl};
        const double ly[4] = {hw, -hw, -hw, hw};
        for (int i = 0; i < 4; ++i)
            out[i] = {cx + c * lx[i] - s * ly[i], cy + s * lx[i] + c * ly[i]};
        return out;
    }

    bool contains(double px, double py) const {
        double c = std::cos(yaw), s = std::sin(yaw);
        double dx = px - cx, dy = py - cy;
        double u = c * dx + s * dy;
        double v = -s * dx + c * dy;
        return std::abs(u) <= 0.5 * length && std::abs(v) <= 0.5 * width;
    }
};

// Segment-box intersection via the slab test in the box frame.
inline bool segment_intersects_box(const Vec2& p0, const Vec2& p1,
                                   const OrientedBox& box) {
    double c = std::cos(box.yaw), s = std::sin(box.yaw);
    auto to_local = [&](const Vec2& p) -> Vec2 {
        double dx = p.x - box.cx, dy = p.y - box.cy;
        return {c * dx + s * dy, -s * dx + c * dy};
    };
    Vec2 a = to_local(p0), b = to_local(p1);
    double hx = 0.5 * box.length, hy = 0.5 * box.width;
    double t0 = 0.0, t1 = 1.0;
    double d[2] = {b.x - a.x, b.y - a.y};
    double o[2] = {a.x, a.y};
    double h[2] = {hx, hy};
    for (int i = 0; i < 2; ++i) {
        if (std::abs(d[i]) < 1e-12) {
            if (o[i] < -h[i] || o[i] > h[i]) return false;
        } else {
            double ta = (-h[i] - o[i]) / d[i];
            double tb = (h[i] - o[i]) / d[i];
            if (ta > tb) std::swap(ta, tb);
            t0 = std::max(t0, ta);
            t1 = std::min(t1, tb);
            if (t0 > t1) return false;
        }
    }
    return true;
}

// Convex polygon area by the shoelace formula.
inline double polygon_area(const std::vector<Vec2>& poly) {
    double a = 0.0;
    for (size_t i = 0; i < poly.size(); ++i) {
        const Vec2& p = poly[i];
        const Vec2& q = poly[(i + 1) % poly.size()];
        a += p.x * q.y - q.x * p.y;
    }
    return 0.5 * std::abs(a);
}

// Sutherland-Hodgman clip of a convex subject polygon against a convex clip
// polygon (counter-clockwise).
inline std::vector<Vec2> clip_polygon(std::vector<Vec2> subject,
                                      const std::vector<Vec2>& clip) {
    for (size_t i = 0; i < clip.size() && !subject.empty(); ++i) {
        const Vec2& a = clip[i];
        const Vec2& b = clip[(i + 1) % clip.size()];
        auto inside = [&](const Vec2& p) {
            return (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x) >= 0.0;
        };
        auto intersect = [&](const Vec2& p, const Vec2& q) -> Vec2 {
            double a1 = b.y - a.y, b1 = a.x - b.x;
            double c1 = a1 * a.x + b1 * a.y;
            double a2 = q.y - p.y, b2 = p.x - q.x;
            double c2 = a2 * p.x + b2 * p.y;
            double det = a1 * b2 - a2 * b1;
            if (std::abs(det) < 1e-15) return p;
            return {(b2 * c1 - b1 * c2) / det, (a1 * c2 - a2 * c1) / det};
        };
        std::vector<Vec2> out;
        for (size_t j = 0; j < subject.size(); ++j) {
            const Vec2& cur = subject[j];
            const Vec2& prev = subject[(j + subject.size() - 1) % subject.size()];
            bool cur_in = inside(cur), prev_in = inside(prev);
            if (cur_in) {
                if (!prev_in) out.push_back(intersect(prev, cur));
                out.push_back(cur);
            } else if (prev_in) {
                out.push_back(intersect(prev, cur));
            }
        }
        subject = std::move(out);
    }
    return subject;
}

inline double box_intersection_area(const OrientedBox& a, const OrientedBox& b) {
    auto ca = a.corners();
    auto cb = b.corners();
    // corners() walks clockwise in a standard frame; reverse for CCW clipping
    std::vector<Vec2> pa(ca.rbegin(), ca.rend());
    std::vector<Vec2> pb(cb.rbegin(), cb.rend());
    auto inter = clip_polygon(pa, pb);
    if (inter.size() < 3) return 0.0;
    return polygon_area(inter);
}

inline double box_iou(const OrientedBox& a, const OrientedBox& b) {
    double inter = box_intersection_area(a, b);
    if (inter <= 0.0) return 0.0;
    double uni = a.length * a.width + b.length * b.width - inter;
    return uni > 0.0 ? inter / uni : 0.0;
}

inline bool boxes_overlap(const OrientedBox& a, const OrientedBox& b) {
    return box_intersection_area(a, b) > 1e-12;
}

// Arc-length projection of a point onto a polyline; returns (arc length of
// the closest point, distance to it).
struct PolylineProjection {
    double arc_length = 0.0;
    double distance = 0.0;
};

inline PolylineProjection project_onto_polyline(const std::vector<Vec2>& line,
                                                double px, double py) {
    PolylineProjection best{0.0, std::numeric_limits<double>::infinity()};
    double s_acc = 0.0;
    for (size_t i = 0; i + 1 < line.size(); ++i) {
        double ax = line[i].x, ay = line[i].y;
        double bx = line[i + 1].x, by = line[i + 1].y;
        double dx = bx - ax, dy = by - ay;
        double len2 = dx * dx + dy * dy;
        double seg_len = std::sqrt(len2);
        double t = 0.0;
        if (len2 > 0.0)
            t = std::clamp(((px - ax) * dx + (py - ay) * dy) / len2, 0.0, 1.0);
        double qx = ax + t * dx, qy = ay + t * dy;
        double d = std::hypot(px - qx, py - qy);
        if (d < best.distance) {
            best.distance = d;
            best.arc_length = s_acc + t * seg_len;
        }
        s_acc += seg_len;
    }
    return best;
}

inline double polyline_length(const std::vector<Vec2>& line) {
    double s = 0.0;
    for (size_t i = 0; i + 1 < line.size(); ++i)
        s += std::hypot(line[i + 1].x - line[i].x, line[i + 1].y - line[i].y);
    return s;
}

// Point at arc length s along the polyline, clamped to its ends.
inline Vec2 point_at_arc_length(const std::vector<Vec2>& line, double s) {
    if (line.empty()) return {};
    if (s <= 0.0) return line.front();
    for (size_t i = 0; i + 1 < line.size(); ++i) {
        double seg = std::hypot(line[i + 1].x - line[i].x, line[i + 1].y - line[i].y);
        if (s <= seg && seg > 0.0) {
            double t = s / seg;
            return {line[i].x + t * (line[i + 1].x - line[i].x),
                    line[i].y + t * (line[i + 1].y - line[i].y)};
        }
        s -= seg;
    }
    return line.back();
}

} // namespace v2xsim
