#include "v2xsim/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace v2xsim {

Grid fuse(const Grid& ego_features, const Grid& ego_conf,
          const std::vector<Message>& messages, const FuseConfig& cfg) {
    const int H = ego_features.height(), W = ego_features.width();
    const int D = ego_features.channels();
    if (!ego_features.same_spatial(ego_conf.height(), ego_conf.width()))
        throw std::invalid_argument("fuse: ego confidence shape mismatch");
    for (const auto& m : messages)
        if (!ego_features.same_shape(m.payload))
            throw std::invalid_argument("fuse: message payload shape mismatch");
    if (cfg.heads < 1 || D % cfg.heads != 0)
        throw std::invalid_argument("fuse: head count must divide feature channels");
    const int head_dim = D / cfg.heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(head_dim));

    Grid out = ego_features;
    std::vector<const Message*> active;
    std::vector<double> logits, weights;
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            active.clear();
            for (const auto& m : messages)
                if (m.mask.at(x, y)) active.push_back(&m);
            if (active.empty()) continue; // ego passthrough

            const size_t n_src = active.size() + 1; // ego first
            for (int h = 0; h < cfg.heads; ++h) {
                const int c0 = h * head_dim;
                logits.assign(n_src, 0.0);
                // a_j = F_i . M_j / sqrt(d); ego attends to itself too
                for (size_t j = 0; j < n_src; ++j) {
                    double dot = 0.0;
                    for (int c = c0; c < c0 + head_dim; ++c) {
                        double mj = j == 0 ? ego_features.at(x, y, c)
                                           : active[j - 1]->payload.at(x, y, c);
                        dot += ego_features.at(x, y, c) * mj;
                    }
                    logits[j] = dot * scale;
                }
                double max_logit = *std::max_element(logits.begin(), logits.end());
                weights.assign(n_src, 0.0);
                double sum_exp = 0.0;
                for (size_t j = 0; j < n_src; ++j) {
                    weights[j] = std::exp(logits[j] - max_logit);
                    sum_exp += weights[j];
                }
                double wsum = 0.0;
                for (size_t j = 0; j < n_src; ++j) {
                    double conf = j == 0 ? ego_conf.at(x, y)
                                         : active[j - 1]->confidence.at(x, y);
                    weights[j] = weights[j] / sum_exp * conf;
                    wsum += weights[j];
                }
                if (wsum <= 0.0) continue; // all confidences zero: keep ego
                for (int c = c0; c < c0 + head_dim; ++c) {
                    double acc = 0.0;
                    for (size_t j = 0; j < n_src; ++j) {
                        double mj = j == 0 ? ego_features.at(x, y, c)
                                           : active[j - 1]->payload.at(x, y, c);
                        acc += weights[j] * mj;
                    }
                    out.at(x, y, c) = static_cast<float>(acc / wsum);
                }
            }
        }
    return out;
}

std::vector<Detection> decode(const Grid& features, const GridSpec& spec,
                              const DecodeConfig& cfg) {
    const int H = features.height(), W = features.width();
    if (features.channels() < (1 + kRegressionPerClass) * kNumClasses)
        throw std::invalid_argument("decode: feature layout too narrow");

    std::vector<Detection> dets;
    for (int cls = 0; cls < kNumClasses; ++cls) {
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x) {
                float v = features.at(x, y, cls);
                if (v < cfg.peak_threshold) continue;
                bool is_peak = true;
                for (int dy = -1; dy <= 1 && is_peak; ++dy)
                    for (int dx = -1; dx <= 1 && is_peak; ++dx) {
                        if (dx == 0 && dy == 0) continue;
                        int nx = x + dx, ny = y + dy;
                        if (nx < 0 || nx >= W || ny < 0 || ny >= H) continue;
                        float nv = features.at(nx, ny, cls);
                        bool earlier = ny < y || (ny == y && nx < x);
                        if (nv > v || (nv == v && earlier)) is_peak = false;
                    }
                if (!is_peak) continue;

                const int base = kNumClasses + cls * kRegressionPerClass;
                Detection d;
                d.cls = static_cast<ObjectClass>(cls);
                d.cx = spec.cell_center_x(x) + features.at(x, y, base + 0);
                d.cy = spec.cell_center_y(y) + features.at(x, y, base + 1);
                d.length = std::exp(features.at(x, y, base + 2));
                d.width = std::exp(features.at(x, y, base + 3));
                d.yaw = std::atan2(features.at(x, y, base + 5),
                                   features.at(x, y, base + 4));
                d.vx = features.at(x, y, base + 6);
                d.vy = features.at(x, y, base + 7);
                d.score = v;
                dets.push_back(d);
            }
    }
    return dets;
}

std::vector<Detection> nms(const std::vector<Detection>& dets, double iou_thresh) {
    if (!(iou_thresh > 0.0 && iou_thresh <= 1.0))
        throw std::invalid_argument("nms: iou_thresh must be in (0,1]");
    std::vector<size_t> order(dets.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        return dets[a].score > dets[b].score; // stable: ties keep input order
    });
    std::vector<Detection> kept;
    for (size_t idx : order) {
        const Detection& d = dets[idx];
        bool suppressed = false;
        for (const Detection& k : kept) {
            if (k.cls != d.cls) continue;
            if (box_iou(k.box(), d.box()) >= iou_thresh) {
                suppressed = true;
                break;
            }
        }
        if (!suppressed) kept.push_back(d);
    }
    return kept;
}

OccupancyMap rasterize_occupancy_horizon(const std::vector<Detection>& dets,
                                         const GridSpec& spec, double horizon_s,
                                         int substeps) {
    std::vector<Detection> all = dets;
    if (horizon_s > 0.0 && substeps > 0)
        for (const auto& d : dets) {
            if (std::hypot(d.vx, d.vy) < 1e-6) continue;
            for (int k = 1; k <= substeps; ++k) {
                double t = horizon_s * k / substeps;
                Detection moved = d;
                moved.cx += d.vx * t;
                moved.cy += d.vy * t;
                all.push_back(moved);
            }
        }
    return rasterize_occupancy(all, spec);
}

OccupancyMap rasterize_occupancy(const std::vector<Detection>& dets,
                                 const GridSpec& spec) {
    OccupancyMap out;
    out.cells = Grid(spec.h, spec.w, 1, spec.resolution);
    for (const auto& d : dets) {
        OrientedBox box = d.box();
        // only scan the box's bounding rectangle
        double r = 0.5 * std::hypot(d.length, d.width);
        int x0 = std::max(0, spec.cell_x(d.cx - r));
        int x1 = std::min(spec.w - 1, spec.cell_x(d.cx + r));
        int y0 = std::max(0, spec.cell_y(d.cy - r));
        int y1 = std::min(spec.h - 1, spec.cell_y(d.cy + r));
        for (int iy = y0; iy <= y1; ++iy)
            for (int ix = x0; ix <= x1; ++ix)
                if (box.contains(spec.cell_center_x(ix), spec.cell_center_y(iy)))
                    out.cells.at(ix, iy) = 1.0f;
    }
    return out;
}

} // namespace v2xsim
