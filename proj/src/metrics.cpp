#include "v2xsim/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace v2xsim {

namespace {

struct ScoredMatch {
    double score = 0.0;
    bool tp = false;
};

// Greedy matching for one frame: detections by descending score, each takes
// the highest-IoU unmatched ground truth at or above the threshold.
void match_frame(const std::vector<Detection>& dets,
                 const std::vector<OrientedBox>& gts, double iou_thresh,
                 std::vector<ScoredMatch>& out) {
    std::vector<size_t> order(dets.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](size_t a, size_t b) { return dets[a].score > dets[b].score; });
    std::vector<bool> taken(gts.size(), false);
    for (size_t idx : order) {
        double best_iou = 0.0;
        int best = -1;
        for (size_t g = 0; g < gts.size(); ++g) {
            if (taken[g]) continue;
            double iou = box_iou(dets[idx].box(), gts[g]);
            if (iou >= iou_thresh && iou > best_iou) {
                best_iou = iou;
                best = static_cast<int>(g);
            }
        }
        if (best >= 0) taken[best] = true;
        out.push_back({dets[idx].score, best >= 0});
    }
}

double ap_from_matches(std::vector<ScoredMatch>& matches, size_t n_gt,
                       std::vector<PrCurvePoint>* curve) {
    if (n_gt == 0) return matches.empty() ? 1.0 : 0.0;
    if (matches.empty()) return 0.0;
    std::stable_sort(matches.begin(), matches.end(),
                     [](const ScoredMatch& a, const ScoredMatch& b) {
                         return a.score > b.score;
                     });
    size_t tp = 0, fp = 0;
    std::vector<double> precision, recall;
    for (const auto& m : matches) {
        m.tp ? ++tp : ++fp;
        precision.push_back(static_cast<double>(tp) / (tp + fp));
        recall.push_back(static_cast<double>(tp) / n_gt);
    }
    if (curve)
        for (size_t i = 0; i < matches.size(); ++i)
            curve->push_back({matches[i].score, precision[i], recall[i]});

    // all-point interpolation: running max of precision from the right
    for (size_t i = precision.size() - 1; i-- > 0;)
        precision[i] = std::max(precision[i], precision[i + 1]);
    double ap = 0.0, prev_recall = 0.0;
    for (size_t i = 0; i < precision.size(); ++i) {
        ap += (recall[i] - prev_recall) * precision[i];
        prev_recall = recall[i];
    }
    return ap;
}

} // namespace

double average_precision(const std::vector<Detection>& dets,
                         const std::vector<OrientedBox>& gts, double iou_thresh,
                         std::vector<PrCurvePoint>* curve) {
    std::vector<ScoredMatch> matches;
    match_frame(dets, gts, iou_thresh, matches);
    return ap_from_matches(matches, gts.size(), curve);
}

double composited_ap(double ap30, double ap50, double ap70) {
    return 0.3 * ap30 + 0.3 * ap50 + 0.4 * ap70;
}

double class_merged_ap(const std::array<double, 3>& per_class_ap,
                       MergeProfile profile) {
    if (profile == MergeProfile::Latency)
        return 0.4 * per_class_ap[0] + 0.4 * per_class_ap[1] + 0.2 * per_class_ap[2];
    return 0.8 * per_class_ap[0] + 0.1 * per_class_ap[1] + 0.1 * per_class_ap[2];
}

void ApAccumulator::add_frame(const std::vector<Detection>& dets,
                              const std::vector<GroundTruthBox>& gts) {
    frames_.push_back({dets, gts});
}

double ApAccumulator::ap(ObjectClass cls, double iou_thresh) const {
    std::vector<ScoredMatch> matches;
    size_t n_gt = 0;
    for (const auto& f : frames_) {
        std::vector<Detection> dets;
        std::vector<OrientedBox> gts;
        for (const auto& d : f.dets)
            if (d.cls == cls) dets.push_back(d);
        for (const auto& g : f.gts)
            if (g.cls == cls) gts.push_back(g.box);
        n_gt += gts.size();
        match_frame(dets, gts, iou_thresh, matches);
    }
    return ap_from_matches(matches, n_gt, nullptr);
}

std::array<double, 3> ApAccumulator::per_class_ap(double iou_thresh) const {
    return {ap(ObjectClass::Vehicle, iou_thresh), ap(ObjectClass::Bicycle, iou_thresh),
            ap(ObjectClass::Pedestrian, iou_thresh)};
}

DrivingResult driving_result(const std::vector<TrajectorySample>& trajectory,
                             const std::vector<Vec2>& route,
                             const InfractionCounts& infractions,
                             const DrivingEvalConfig& cfg) {
    DrivingResult out;
    out.infractions = infractions;
    out.infraction_penalty = std::pow(cfg.coefficients.pedestrian,
                                      infractions.pedestrian_collisions) *
                             std::pow(cfg.coefficients.vehicle,
                                      infractions.vehicle_collisions) *
                             std::pow(cfg.coefficients.layout,
                                      infractions.layout_collisions);

    double route_len = polyline_length(route);
    double covered = 0.0;
    double speed_sum = 0.0;
    size_t off_road = 0;
    for (const auto& s : trajectory) {
        auto proj = project_onto_polyline(route, s.x, s.y);
        if (proj.distance <= cfg.on_route_tolerance)
            covered = std::max(covered, proj.arc_length);
        else
            ++off_road;
        speed_sum += s.speed;
    }
    if (!trajectory.empty()) {
        out.mean_speed = speed_sum / trajectory.size();
        out.off_road_fraction = static_cast<double>(off_road) / trajectory.size();
    }
    out.route_completion = route_len > 0.0 ? covered / route_len * 100.0 : 0.0;
    out.route_completion *= 1.0 - out.off_road_fraction;
    out.driving_score = out.route_completion * out.infraction_penalty;
    return out;
}

} // namespace v2xsim
