#pragma once

#include <vector>

#include "v2xsim/geometry.hpp"
#include "v2xsim/grid.hpp"
#include "v2xsim/pragcomm.hpp"
#include "v2xsim/world.hpp"

namespace v2xsim {

struct Detection {
    ObjectClass cls = ObjectClass::Vehicle;
    double cx = 0.0, cy = 0.0; // meters
    double length = 1.0, width = 1.0;
    double yaw = 0.0;
    double score = 0.0;
    double vx = 0.0, vy = 0.0;

    OrientedBox box() const { return {cx, cy, yaw, length, width}; }
};

struct OccupancyMap {
    Grid cells; // single channel, values in {0,1}
};

struct FuseConfig {
    int heads = 1; // per-location attention heads; D must be divisible
};

// Per-location scaled-dot-product attention over ego + received features.
// Weights are softmax(F_ego . M_j / sqrt(D)) scaled by each sender's
// confidence and renormalized; cells no message covers reduce to the ego
// feature exactly, as do cells where every confidence is zero.
Grid fuse(const Grid& ego_features, const Grid& ego_conf,
          const std::vector<Message>& messages, const FuseConfig& cfg = {});

struct DecodeConfig {
    double peak_threshold = 0.3;
};

// Reads detections back out of the oracle feature layout: per-class local
// maxima above threshold, with center/extent/yaw/velocity reconstructed from
// the 8 regression channels at each peak. The grid spec anchors cell centers
// in world coordinates.
std::vector<Detection> decode(const Grid& features, const GridSpec& spec,
                              const DecodeConfig& cfg = {});

// Greedy same-class suppression: keep by descending score (ties by input
// order) unless IoU with a kept detection reaches the threshold.
std::vector<Detection> nms(const std::vector<Detection>& dets, double iou_thresh);

// Cells whose centers fall inside any detection's oriented rectangle.
OccupancyMap rasterize_occupancy(const std::vector<Detection>& dets,
                                 const GridSpec& spec);

// Union of the detections rasterized at their current poses and at positions
// extrapolated along their decoded velocities up to horizon_s (substeps
// intermediate points). Lets the planner react to objects about to enter the
// driving corridor rather than only those already inside it.
OccupancyMap rasterize_occupancy_horizon(const std::vector<Detection>& dets,
                                         const GridSpec& spec, double horizon_s,
                                         int substeps = 4);

} // namespace v2xsim
