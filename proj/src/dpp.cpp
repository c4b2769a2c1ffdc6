#include "v2xsim/dpp.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "v2xsim/channel.hpp"
#include "v2xsim/pragcomm.hpp"

namespace v2xsim {

HeatmapHistory::HeatmapHistory(size_t capacity) : capacity_(capacity) {
    if (capacity < 2)
        throw std::invalid_argument("HeatmapHistory: capacity must be >= 2");
}

void HeatmapHistory::push(double t_ms, Grid frame) {
    if (!frames_.empty() && t_ms <= frames_.back().first)
        throw std::invalid_argument("HeatmapHistory: timestamps must be strictly increasing");
    frames_.emplace_back(t_ms, std::move(frame));
    while (frames_.size() > capacity_) frames_.pop_front();
}

const Grid& HeatmapHistory::latest() const {
    if (frames_.empty()) throw std::logic_error("HeatmapHistory: empty");
    return frames_.back().second;
}

const Grid& HeatmapHistory::previous() const {
    if (frames_.size() < 2) throw std::logic_error("HeatmapHistory: needs two frames");
    return frames_[frames_.size() - 2].second;
}

double HeatmapHistory::latest_time_ms() const {
    if (frames_.empty()) throw std::logic_error("HeatmapHistory: empty");
    return frames_.back().first;
}

Grid StaticPredictor::predict(const Grid&, const Grid& frame_curr) {
    return frame_curr;
}

FlowField advance_motion(const FlowField& motion) {
    FlowField next(motion.height(), motion.width());
    for (int y = 0; y < motion.height(); ++y)
        for (int x = 0; x < motion.width(); ++x) {
            float dx = motion.dx(x, y), dy = motion.dy(x, y);
            if (dx == 0.0f && dy == 0.0f) continue;
            int nx = x + static_cast<int>(std::lround(dx));
            int ny = y + static_cast<int>(std::lround(dy));
            if (nx < 0 || nx >= motion.width() || ny < 0 || ny >= motion.height())
                continue;
            next.dx(nx, ny) = dx;
            next.dy(nx, ny) = dy;
        }
    return next;
}

Grid ConstantVelocityPredictor::predict(const Grid& frame_prev, const Grid& frame_curr) {
    if (!frame_prev.same_shape(frame_curr))
        throw std::invalid_argument("cv_predict: frame shapes must match");
    FlowField motion = estimate_flow(frame_prev, frame_curr, cfg_);
    // motion maps prev -> curr; the same per-frame displacement carries
    // curr -> next once re-anchored onto the current support
    return warp_forward(frame_curr, advance_motion(motion));
}

Grid OracleFlowPredictor::predict(const Grid&, const Grid& frame_curr) {
    Grid out = warp_forward(frame_curr, motion_);
    motion_ = advance_motion(motion_); // follow the mass for the next step
    return out;
}

std::unique_ptr<Predictor> make_predictor(const std::string& name,
                                          const BlobMatchConfig& cfg) {
    if (name == "static") return std::make_unique<StaticPredictor>();
    if (name == "cv") return std::make_unique<ConstantVelocityPredictor>(cfg);
    throw std::invalid_argument("unknown predictor '" + name +
                                "' (valid here: cv, static; oracle is wired up by "
                                "the simulation, which owns the labels)");
}

Grid predict_iterative(const HeatmapHistory& history, int n_steps,
                       Predictor& predictor) {
    if (history.size() < 2)
        throw std::invalid_argument("predict_iterative: history needs >= 2 frames");
    if (n_steps < 0)
        throw std::invalid_argument("predict_iterative: n_steps must be >= 0");
    if (n_steps == 0) return history.latest();
    Grid prev = history.previous();
    Grid curr = history.latest();
    for (int i = 0; i < n_steps; ++i) {
        Grid next = predictor.predict(prev, curr);
        prev = std::move(curr);
        curr = std::move(next);
    }
    return curr;
}

FlowField extract_flow_oracle(const std::vector<int32_t>& labels_t,
                              const std::vector<int32_t>& labels_tr,
                              int height, int width, FlowReport* report) {
    const size_t n = static_cast<size_t>(height) * width;
    if (labels_t.size() != n || labels_tr.size() != n)
        throw std::invalid_argument("extract_flow_oracle: label grids must be H*W");

    struct Accum {
        double sx = 0.0, sy = 0.0;
        size_t count = 0;
    };
    std::map<int32_t, Accum> at_t, at_tr;
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) {
            size_t i = static_cast<size_t>(y) * width + x;
            if (labels_t[i] >= 0) {
                auto& a = at_t[labels_t[i]];
                a.sx += x;
                a.sy += y;
                a.count++;
            }
            if (labels_tr[i] >= 0) {
                auto& a = at_tr[labels_tr[i]];
                a.sx += x;
                a.sy += y;
                a.count++;
            }
        }

    FlowField flow(height, width);
    std::map<int32_t, std::pair<double, double>> displacement;
    for (const auto& [id, acc] : at_t) {
        auto it = at_tr.find(id);
        if (it == at_tr.end()) {
            if (report) report->unmatched_instances.push_back(id);
            continue; // disappeared: zero flow at its cells
        }
        double cx_t = acc.sx / acc.count, cy_t = acc.sy / acc.count;
        double cx_r = it->second.sx / it->second.count;
        double cy_r = it->second.sy / it->second.count;
        displacement[id] = {cx_r - cx_t, cy_r - cy_t};
    }
    if (report)
        for (const auto& [id, acc] : at_tr)
            if (!at_t.count(id)) report->unmatched_instances.push_back(id);

    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) {
            int32_t id = labels_t[static_cast<size_t>(y) * width + x];
            if (id < 0) continue;
            auto it = displacement.find(id);
            if (it == displacement.end()) continue;
            flow.dx(x, y) = static_cast<float>(it->second.first);
            flow.dy(x, y) = static_cast<float>(it->second.second);
        }
    return flow;
}

namespace {

struct Peak {
    int x = 0, y = 0;
    float value = 0.0f;
};

// 8-neighborhood local maxima; ties resolved toward the lower row-major
// index so plateaus yield one peak.
std::vector<Peak> find_peaks(const Grid& g, double threshold) {
    std::vector<Peak> peaks;
    for (int y = 0; y < g.height(); ++y)
        for (int x = 0; x < g.width(); ++x) {
            float v = g.at(x, y);
            if (v < threshold) continue;
            bool is_peak = true;
            for (int dy = -1; dy <= 1 && is_peak; ++dy)
                for (int dx = -1; dx <= 1 && is_peak; ++dx) {
                    if (dx == 0 && dy == 0) continue;
                    int nx = x + dx, ny = y + dy;
                    if (!g.in_bounds(nx, ny)) continue;
                    float nv = g.at(nx, ny);
                    bool earlier = ny < y || (ny == y && nx < x);
                    if (nv > v || (nv == v && earlier)) is_peak = false;
                }
            if (is_peak) peaks.push_back({x, y, v});
        }
    return peaks;
}

} // namespace

std::vector<std::pair<int, int>> find_heatmap_peaks(const Grid& g, double threshold) {
    std::vector<std::pair<int, int>> out;
    for (const Peak& p : find_peaks(g, threshold)) out.emplace_back(p.x, p.y);
    return out;
}

FlowField estimate_flow(const Grid& h_t, const Grid& h_pred,
                        const BlobMatchConfig& cfg) {
    if (!h_t.same_shape(h_pred))
        throw std::invalid_argument("estimate_flow: shapes must match");

    auto peaks_t = find_peaks(h_t, cfg.peak_threshold);
    auto peaks_r = find_peaks(h_pred, cfg.peak_threshold);

    FlowField flow(h_t.height(), h_t.width());
    if (peaks_t.empty()) return flow;

    // greedy nearest-centroid matching: repeatedly take the globally closest
    // unmatched pair within the search radius; ties broken by lowest indices
    const double r2_max = cfg.search_radius_cells * cfg.search_radius_cells;
    std::vector<int> match(peaks_t.size(), -1);
    std::vector<bool> taken(peaks_r.size(), false);
    for (size_t round = 0; round < peaks_t.size(); ++round) {
        double best_d2 = r2_max + 1.0;
        int best_i = -1, best_j = -1;
        for (size_t i = 0; i < peaks_t.size(); ++i) {
            if (match[i] >= 0) continue;
            for (size_t j = 0; j < peaks_r.size(); ++j) {
                if (taken[j]) continue;
                double dx = peaks_r[j].x - peaks_t[i].x;
                double dy = peaks_r[j].y - peaks_t[i].y;
                double d2 = dx * dx + dy * dy;
                if (d2 < best_d2) {
                    best_d2 = d2;
                    best_i = static_cast<int>(i);
                    best_j = static_cast<int>(j);
                }
            }
        }
        if (best_i < 0 || best_d2 > r2_max) break;
        match[best_i] = best_j;
        taken[best_j] = true;
    }

    // assign every support cell of the earlier frame to its nearest peak
    for (int y = 0; y < h_t.height(); ++y)
        for (int x = 0; x < h_t.width(); ++x) {
            if (h_t.at(x, y) <= cfg.support_threshold) continue;
            double best_d2 = std::numeric_limits<double>::infinity();
            int best = -1;
            for (size_t i = 0; i < peaks_t.size(); ++i) {
                double dx = peaks_t[i].x - x, dy = peaks_t[i].y - y;
                double d2 = dx * dx + dy * dy;
                if (d2 < best_d2) {
                    best_d2 = d2;
                    best = static_cast<int>(i);
                }
            }
            if (best < 0 || match[best] < 0) continue; // unmatched blob: zero flow
            const Peak& a = peaks_t[best];
            const Peak& b = peaks_r[match[best]];
            flow.dx(x, y) = static_cast<float>(b.x - a.x);
            flow.dy(x, y) = static_cast<float>(b.y - a.y);
        }
    return flow;
}

FlowField motion_to_gather_field(const FlowField& motion) {
    const int H = motion.height(), W = motion.width();
    FlowField gather(H, W);
    std::vector<uint8_t> receives(static_cast<size_t>(H) * W, 0);
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            float dx = motion.dx(x, y), dy = motion.dy(x, y);
            if (dx == 0.0f && dy == 0.0f) continue;
            int tx = x + static_cast<int>(std::lround(dx));
            int ty = y + static_cast<int>(std::lround(dy));
            if (tx < 0 || tx >= W || ty < 0 || ty >= H)
                continue; // moved out of the field of view
            gather.dx(tx, ty) = -dx;
            gather.dy(tx, ty) = -dy;
            receives[static_cast<size_t>(ty) * W + tx] = 1;
        }
    // vacated source cells read out of bounds (zero) instead of themselves,
    // otherwise moved mass would leave a stale copy behind
    const float oob = static_cast<float>(2 * std::max(H, W));
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            if (motion.dx(x, y) == 0.0f && motion.dy(x, y) == 0.0f) continue;
            if (!receives[static_cast<size_t>(y) * W + x]) {
                gather.dx(x, y) = oob;
                gather.dy(x, y) = oob;
            }
        }
    return gather;
}

Grid warp_forward(const Grid& g, const FlowField& motion) {
    return affine_warp(g, motion_to_gather_field(motion));
}

DppResult dpp_pipeline(const Grid& features, const HeatmapHistory& history,
                       double tau_est_ms, double delta_t_ms, Predictor& predictor,
                       const DppConfig& cfg) {
    DppResult out;
    out.n_steps = discretize_latency(tau_est_ms, delta_t_ms);
    if (out.n_steps == 0) {
        out.warped_features = features;
        out.predicted_heatmap = history.latest();
        out.predicted_conf = confidence_map(out.predicted_heatmap, cfg.conf_sigma_cells);
        return out;
    }
    BlobMatchConfig match = cfg.match;
    // the cumulative displacement grows with n; widen the final matching
    match.search_radius_cells = cfg.match.search_radius_cells * out.n_steps;

    out.predicted_heatmap = predict_iterative(history, out.n_steps, predictor);
    FlowField motion = estimate_flow(history.latest(), out.predicted_heatmap, match);
    out.warped_features = warp_forward(features, motion);
    out.predicted_conf = confidence_map(out.predicted_heatmap, cfg.conf_sigma_cells);
    return out;
}

} // namespace v2xsim
