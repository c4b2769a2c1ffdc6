#pragma once

#include <stdexcept>
#include <vector>

#include "v2xsim/fusion.hpp"
#include "v2xsim/geometry.hpp"
#include "v2xsim/world.hpp"

namespace v2xsim {

struct RouteLostError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Plan {
    std::vector<Vec2> waypoints; // exactly T_f points
    double target_speed = 0.0;   // 0 on a braking plan
    bool braking = false;
};

struct PlannerConfig {
    int num_waypoints = 10;        // T_f
    int occupancy_frames = 5;      // T_d frames the caller buffers
    double waypoint_dt_s = 0.1;    // spacing = target_speed * dt
    double corridor_halfwidth = 1.4; // m around the plan, pre-dilation
    double lookahead_m = 15.0;
    double route_lost_tolerance = 6.0;
    double anticipation_horizon_s = 1.2; // detections extrapolated into occupancy
    double goal_stop_distance = 2.0;     // braking plan near the route end
};

// Occupancy-gated waypoint planner: T_f waypoints spaced by
// target_speed*dt along the route ahead of the ego; any occupied cell
// (dilated by half the ego width) inside the lookahead corridor collapses
// the plan onto the current position with target speed 0.
Plan plan_waypoints(const OccupancyMap& occupancy, const GridSpec& spec,
                    const std::vector<Vec2>& route, const Pose& ego_pose,
                    double ego_width, double target_speed,
                    const PlannerConfig& cfg = {});

struct Action {
    double steer = 0.0;    // [-1, 1]
    double throttle = 0.0; // [0, 1]
    int brake = 0;         // {0, 1}; brake=1 forces throttle 0
};

struct PidGains {
    double kp = 0.0, ki = 0.0, kd = 0.0;
};

struct PidState {
    PidGains gains;
    double integral = 0.0;
    double prev_error = 0.0;
    bool has_prev = false;
    double integral_limit = 2.0; // anti-windup clamp

    double step(double error, double dt) {
        integral = std::clamp(integral + error * dt, -integral_limit, integral_limit);
        double deriv = has_prev ? (error - prev_error) / dt : 0.0;
        prev_error = error;
        has_prev = true;
        return gains.kp * error + gains.ki * integral + gains.kd * deriv;
    }

    void reset() {
        integral = 0.0;
        prev_error = 0.0;
        has_prev = false;
    }
};

struct ControllerConfig {
    PidGains lateral{1.0, 0.0, 0.2};
    PidGains longitudinal{0.5, 0.05, 0.0};
    int lookahead_index = 2;        // waypoint used for the heading error
    double brake_speed_margin = 0.5; // m/s of demanded slowdown before braking
};

class Controller {
public:
    explicit Controller(ControllerConfig cfg = {});

    // Lateral PID on the heading error to a lookahead waypoint; longitudinal
    // PID on the plan-implied speed error. Deterministic given (state, plan).
    Action control(const Plan& plan, const Pose& ego_pose, double ego_speed,
                   double dt_s);

    void reset();
    const ControllerConfig& config() const { return cfg_; }
    PidState& lateral_state() { return lateral_; }
    PidState& longitudinal_state() { return longitudinal_; }

private:
    ControllerConfig cfg_;
    PidState lateral_;
    PidState longitudinal_;
};

} // namespace v2xsim
