#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include "v2xsim/drive.hpp"
#include "v2xsim/fusion.hpp"
#include "v2xsim/geometry.hpp"

namespace v2xsim {

struct PrCurvePoint {
    double score = 0.0;
    double precision = 0.0;
    double recall = 0.0;
};

struct GroundTruthBox {
    ObjectClass cls = ObjectClass::Vehicle;
    OrientedBox box;
};

// All-point average precision with greedy best-IoU matching by descending
// score; each ground truth is matched at most once. Empty GT yields 1 with
// no detections and 0 otherwise. Inputs are a single class.
double average_precision(const std::vector<Detection>& dets,
                         const std::vector<OrientedBox>& gts, double iou_thresh,
                         std::vector<PrCurvePoint>* curve = nullptr);

// 0.3*AP30 + 0.3*AP50 + 0.4*AP70.
double composited_ap(double ap30, double ap50, double ap70);

enum class MergeProfile { Latency, Noise };

// vehicle/bicycle/pedestrian APs merged with (0.4, 0.4, 0.2) for latency
// sweeps and (0.8, 0.1, 0.1) for positioning-noise sweeps.
double class_merged_ap(const std::array<double, 3>& per_class_ap,
                       MergeProfile profile);

// Accumulates (detections, ground truth) pairs frame by frame, then scores
// AP at several IoU thresholds per class. Frames are independent: a
// detection can only match a ground truth of its own frame.
class ApAccumulator {
public:
    void add_frame(const std::vector<Detection>& dets,
                   const std::vector<GroundTruthBox>& gts);

    double ap(ObjectClass cls, double iou_thresh) const;
    std::array<double, 3> per_class_ap(double iou_thresh) const;

private:
    struct FrameRecord {
        std::vector<Detection> dets;
        std::vector<GroundTruthBox> gts;
    };
    std::vector<FrameRecord> frames_;
};

struct InfractionCounts {
    int pedestrian_collisions = 0;
    int vehicle_collisions = 0;
    int layout_collisions = 0;
};

struct PenaltyCoefficients {
    double pedestrian = 0.50;
    double vehicle = 0.60;
    double layout = 0.65;
};

struct TrajectorySample {
    double t_s = 0.0;
    double x = 0.0, y = 0.0, yaw = 0.0;
    double speed = 0.0;
    Action action;
};

struct DrivingResult {
    double route_completion = 0.0; // percent
    InfractionCounts infractions;
    double infraction_penalty = 1.0;
    double driving_score = 0.0;
    double mean_speed = 0.0;       // m/s
    double off_road_fraction = 0.0;
};

struct DrivingEvalConfig {
    PenaltyCoefficients coefficients;
    double on_route_tolerance = 6.0; // beyond this the sample counts as off-road
};

// route_completion = covered arc length / route length * 100 (monotone,
// scaled down by the off-road fraction); penalty = product of
// coefficient^count over infraction types; score = completion * penalty.
DrivingResult driving_result(const std::vector<TrajectorySample>& trajectory,
                             const std::vector<Vec2>& route,
                             const InfractionCounts& infractions,
                             const DrivingEvalConfig& cfg = {});

} // namespace v2xsim
