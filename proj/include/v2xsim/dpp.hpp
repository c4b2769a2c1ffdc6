#pragma once

#include <cstdint>
#include <deque>
#include <memory>
#include <string>
#include <vector>

#include "v2xsim/grid.hpp"

namespace v2xsim {

// Ring buffer of timestamped single-channel heatmaps, newest last.
class HeatmapHistory {
public:
    explicit HeatmapHistory(size_t capacity = 4);

    void push(double t_ms, Grid frame);
    size_t size() const { return frames_.size(); }
    size_t capacity() const { return capacity_; }

    const Grid& latest() const;
    const Grid& previous() const; // one before latest
    double latest_time_ms() const;

private:
    size_t capacity_;
    std::deque<std::pair<double, Grid>> frames_;
};

// Two frames in, one frame out; iterated by predict_iterative. Implementations
// must be deterministic.
class Predictor {
public:
    virtual ~Predictor() = default;
    virtual std::string name() const = 0;
    virtual Grid predict(const Grid& frame_prev, const Grid& frame_curr) = 0;
};

// Returns the current frame unchanged (no-motion assumption).
class StaticPredictor : public Predictor {
public:
    std::string name() const override { return "static"; }
    Grid predict(const Grid& frame_prev, const Grid& frame_curr) override;
};

struct BlobMatchConfig {
    double peak_threshold = 0.3;    // minimum blob peak value
    double support_threshold = 0.0; // cells above this belong to some blob
    double search_radius_cells = 8.0;
};

// Constant-velocity stand-in for the learned frame predictor: estimates
// per-blob displacement between the two frames and extrapolates the current
// frame forward by it.
class ConstantVelocityPredictor : public Predictor {
public:
    explicit ConstantVelocityPredictor(BlobMatchConfig cfg = {}) : cfg_(cfg) {}
    std::string name() const override { return "cv"; }
    Grid predict(const Grid& frame_prev, const Grid& frame_curr) override;

private:
    BlobMatchConfig cfg_;
};

// Warps the current frame by an externally supplied per-frame motion flow
// (ground truth from instance labels). The motion field rides along with the
// mass it moves, so iterating extrapolates multiple steps.
class OracleFlowPredictor : public Predictor {
public:
    explicit OracleFlowPredictor(FlowField per_frame_motion)
        : motion_(std::move(per_frame_motion)) {}
    std::string name() const override { return "oracle"; }
    Grid predict(const Grid& frame_prev, const Grid& frame_curr) override;

private:
    FlowField motion_;
};

// Shifts each cell's displacement to the cell it points at, dropping
// displacements that leave the grid. Re-anchors a per-frame motion field
// onto the support it will occupy after one step.
FlowField advance_motion(const FlowField& motion);

std::unique_ptr<Predictor> make_predictor(const std::string& name,
                                          const BlobMatchConfig& cfg = {});

// Applies the predictor n_steps times, feeding each output back as the
// newest frame. n_steps = 0 returns the latest history frame unchanged.
Grid predict_iterative(const HeatmapHistory& history, int n_steps,
                       Predictor& predictor);

// Report of instances that could not be tracked between the two frames.
struct FlowReport {
    std::vector<int32_t> unmatched_instances;
};

// Ground-truth motion flow: for every instance present in both label grids,
// its centroid displacement (in cells) is written at every support cell of
// the earlier frame. Cells without an instance, and instances that appear
// or disappear, get zero flow (the latter are flagged in the report).
FlowField extract_flow_oracle(const std::vector<int32_t>& labels_t,
                              const std::vector<int32_t>& labels_tr,
                              int height, int width, FlowReport* report = nullptr);

// Label-free motion flow: local maxima of both frames are matched greedily
// by nearest centroid within the search radius; each matched blob's
// displacement is written over its support cells (every above-threshold cell
// claimed by its nearest peak). Unmatched blobs get zero flow.
FlowField estimate_flow(const Grid& h_t, const Grid& h_pred,
                        const BlobMatchConfig& cfg = {});

// Converts a motion flow (displacement stored at source cells) into the
// gather field consumed by affine_warp: each source cell's displacement d is
// scattered to its destination cell as -d, so affine_warp pulls the feature
// vector forward onto the predicted position. Vacated source cells read out
// of bounds so moved mass leaves no stale copy.
FlowField motion_to_gather_field(const FlowField& motion);

// 8-neighborhood local maxima at or above the threshold, row-major order.
std::vector<std::pair<int, int>> find_heatmap_peaks(const Grid& g, double threshold);

// Convenience: warp a grid forward by a motion flow.
Grid warp_forward(const Grid& g, const FlowField& motion);

struct DppResult {
    Grid warped_features;   // F^t moved to its predicted positions
    Grid predicted_conf;    // confidence of the predicted heatmap
    Grid predicted_heatmap; // single channel
    int n_steps = 0;
};

struct DppConfig {
    double conf_sigma_cells = 2.0;
    BlobMatchConfig match;
};

// Sender-side pipeline: discretize the latency estimate, forecast the
// heatmap, extract motion flow against the forecast, and warp the feature
// grid forward. n = 0 passes features and confidence through untouched.
DppResult dpp_pipeline(const Grid& features, const HeatmapHistory& history,
                       double tau_est_ms, double delta_t_ms, Predictor& predictor,
                       const DppConfig& cfg = {});

} // namespace v2xsim
