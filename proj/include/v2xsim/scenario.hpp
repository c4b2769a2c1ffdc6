#pragma once

#include <string>
#include <vector>

#include "v2xsim/channel.hpp"
#include "v2xsim/drive.hpp"
#include "v2xsim/dpp.hpp"
#include "v2xsim/fusion.hpp"
#include "v2xsim/world.hpp"

namespace v2xsim {

struct ChannelConfig {
    LinkConfig link;
    LatencyRanges ranges;
    SlotSchedule slots;
    double loss_prob = 0.05;
    double extra_jitter_ms = 0.0;
};

struct PerceptionConfig {
    SenseConfig sense;
    double conf_sigma_cells = 2.0;
    double peak_threshold = 0.3;
    double nms_iou = 0.5;
    int fusion_heads = 1;
};

struct PragcommConfig {
    double p_thre = 0.05;
    double sigma_f_m = 15.0;
    bool normalize_request = true;
    bool volume_bytes_mode = false;
};

// Everything needed to reconstruct one deterministic closed-loop run.
struct Scenario {
    std::string name = "scenario";
    GridSpec grid;
    double duration_s = 10.0;
    double dt_ms = 100.0;
    std::vector<Vec2> route;
    double target_speed = 5.0;
    std::vector<AgentState> agents;
    std::vector<WorldObject> objects;
    std::vector<EventTrigger> triggers;
    ChannelConfig channel;
    PoseNoise pose_noise;
    PerceptionConfig perception;
    PragcommConfig pragcomm;
    std::string predictor = "cv";
    BlobMatchConfig match;
    PlannerConfig planner;
    ControllerConfig controller;
    KinematicLimits limits;
    int eval_warmup_frames = 3;

    int frame_count() const {
        return static_cast<int>(std::lround(duration_s * 1000.0 / dt_ms));
    }
    int ego_id() const; // throws unless exactly one ego agent exists
};

Scenario load_scenario(const std::string& path);
Scenario scenario_from_json(const nlohmann::json& j);
nlohmann::json scenario_to_json(const Scenario& s);

// Table III-style defaults overridable from the environment
// (V2XSIM_P_THRE, V2XSIM_SIGMA_F, V2XSIM_LOSS_PROB, V2XSIM_BANDWIDTH_MHZ,
//  V2XSIM_TX_POWER_DBM); applied after the file is parsed.
void apply_env_overrides(Scenario& s);

} // namespace v2xsim
