#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "v2xsim/geometry.hpp"
#include "v2xsim/grid.hpp"
#include "v2xsim/rng.hpp"

namespace v2xsim {

inline constexpr int kNumClasses = 3; // vehicle, bicycle, pedestrian
inline constexpr int kRegressionPerClass = 8;

enum class ObjectClass { Vehicle = 0, Bicycle = 1, Pedestrian = 2 };

const char* object_class_name(ObjectClass c);
ObjectClass object_class_from_name(const std::string& name);

enum class AgentRole { Ego, Vehicle, RSU };

struct AgentState {
    int id = 0;
    AgentRole role = AgentRole::Vehicle;
    Pose pose;
    double speed = 0.0;        // m/s along yaw
    double sensing_range = 50.0;
    double fov_rad = 2.0 * M_PI;
    double length = 4.5, width = 2.0; // footprint, used for collision checks
};

struct WorldObject {
    int id = 0;
    ObjectClass cls = ObjectClass::Vehicle;
    Pose pose;
    double length = 4.5, width = 2.0;
    double vx = 0.0, vy = 0.0;

    OrientedBox box() const { return {pose.x, pose.y, pose.yaw, length, width}; }
};

struct PoseNoise {
    double sigma_p_m = 0.0;   // positional, per axis
    double sigma_r_deg = 0.0; // angular; applied as N(0, (pi*sigma_r/180)^2) rad
};

// One-shot velocity change, e.g. a pedestrian stepping onto the road.
struct EventTrigger {
    int object_id = 0;
    double t_s = 0.0;
    double vx = 0.0, vy = 0.0;
    bool fired = false;
};

// Global BEV frame shared by every agent. Cell (ix, iy) spans
// [origin + ix*res, origin + (ix+1)*res) with its center at +res/2.
struct GridSpec {
    int h = 192, w = 576;
    float resolution = 0.25f;
    double origin_x = 0.0, origin_y = 0.0;

    double cell_center_x(int ix) const { return origin_x + (ix + 0.5) * resolution; }
    double cell_center_y(int iy) const { return origin_y + (iy + 0.5) * resolution; }
    int cell_x(double x) const {
        return static_cast<int>(std::floor((x - origin_x) / resolution));
    }
    int cell_y(double y) const {
        return static_cast<int>(std::floor((y - origin_y) / resolution));
    }
    bool in_bounds(int ix, int iy) const {
        return ix >= 0 && ix < w && iy >= 0 && iy < h;
    }
};

struct SenseConfig {
    int feature_channels = 64;      // D
    double blob_sigma_scale = 0.5;  // sigma = scale * mean extent, in cells
    double min_sigma_cells = 1.0;
    double blob_cutoff = 0.01;      // contributions below this are not written
};

// Oracle sensing output. Labels carry the instance id owning each cell
// (-1 where none); they let flow extraction see ground-truth identity.
struct SenseResult {
    Grid heatmap;    // C channels, peak 1.0 per visible object
    Grid regression; // 8C channels at blob-support cells
    Grid features;   // D channels: [heatmap | regression | zero padding]
    std::vector<int32_t> labels;

    int32_t label_at(int x, int y) const {
        return labels[static_cast<size_t>(y) * heatmap.width() + x];
    }
};

struct KinematicLimits {
    double max_steer_rad = 0.5;
    double max_accel = 3.0;  // m/s^2
    double max_brake = 6.0;  // m/s^2
    double wheelbase = 2.7;  // m
};

struct AgentControl {
    double steer = 0.0;    // [-1, 1]
    double throttle = 0.0; // [0, 1]
    double brake = 0.0;    // {0, 1}
};

class World {
public:
    World() = default;
    World(GridSpec grid, std::vector<AgentState> agents,
          std::vector<WorldObject> objects, std::vector<EventTrigger> triggers = {});

    const GridSpec& grid() const { return grid_; }
    double time_s() const { return time_s_; }

    const std::vector<AgentState>& agents() const { return agents_; }
    const std::vector<WorldObject>& objects() const { return objects_; }
    AgentState& agent(int id);
    const AgentState& agent(int id) const;
    const WorldObject* object(int id) const;

    void set_control(int agent_id, const AgentControl& control);
    const KinematicLimits& limits() const { return limits_; }
    void set_limits(const KinematicLimits& l) { limits_ = l; }

    // Advances objects by constant velocity, fires due triggers, and moves
    // controllable agents with bicycle kinematics. RSUs never move.
    void step(double dt_s);

    // Rasterizes visible objects into heatmap + regression + pseudo-feature
    // grids for one agent. Visibility: range, FOV, and a center-ray occlusion
    // test against all other objects' footprints. Pose noise perturbs the
    // agent's believed pose before projecting into the global grid.
    SenseResult sense(int agent_id, const PoseNoise& noise, uint64_t seed,
                      const SenseConfig& cfg = {}) const;

    // True if `target` is visible from `agent` (used by tests and the oracle).
    bool visible(const AgentState& agent, const WorldObject& target) const;

private:
    GridSpec grid_;
    std::vector<AgentState> agents_;
    std::vector<WorldObject> objects_;
    std::vector<EventTrigger> triggers_;
    std::vector<AgentControl> controls_;
    KinematicLimits limits_;
    double time_s_ = 0.0;
};

} // namespace v2xsim
