#include "v2xsim/drive.hpp"

#include <algorithm>
#include <cmath>

namespace v2xsim {

Plan plan_waypoints(const OccupancyMap& occupancy, const GridSpec& spec,
                    const std::vector<Vec2>& route, const Pose& ego_pose,
                    double ego_width, double target_speed,
                    const PlannerConfig& cfg) {
    if (route.size() < 2)
        throw std::invalid_argument("plan_waypoints: route needs >= 2 points");
    auto proj = project_onto_polyline(route, ego_pose.x, ego_pose.y);
    if (proj.distance > cfg.route_lost_tolerance)
        throw RouteLostError("plan_waypoints: ego off route by " +
                             std::to_string(proj.distance) + " m");

    // nominal plan along the route
    Plan plan;
    plan.target_speed = target_speed;
    double remaining = polyline_length(route) - proj.arc_length;
    if (remaining <= cfg.goal_stop_distance) {
        plan.braking = true;
        plan.target_speed = 0.0;
        Vec2 here = point_at_arc_length(route, proj.arc_length);
        plan.waypoints.assign(cfg.num_waypoints, here);
        return plan;
    }
    double spacing = target_speed * cfg.waypoint_dt_s;
    for (int k = 1; k <= cfg.num_waypoints; ++k)
        plan.waypoints.push_back(point_at_arc_length(route, proj.arc_length + k * spacing));

    // corridor check against the latest occupancy, dilated by half ego width
    double clearance = cfg.corridor_halfwidth + 0.5 * ego_width;
    std::vector<Vec2> corridor{{ego_pose.x, ego_pose.y}};
    double reach = cfg.lookahead_m;
    int n_samples = std::max(2, static_cast<int>(std::ceil(reach / spec.resolution)));
    for (int i = 1; i <= n_samples; ++i)
        corridor.push_back(
            point_at_arc_length(route, proj.arc_length + reach * i / n_samples));

    bool blocked = false;
    const Grid& occ = occupancy.cells;
    for (int iy = 0; iy < spec.h && !blocked; ++iy)
        for (int ix = 0; ix < spec.w && !blocked; ++ix) {
            if (occ.at(ix, iy) < 0.5f) continue;
            double cx = spec.cell_center_x(ix), cy = spec.cell_center_y(iy);
            auto p = project_onto_polyline(corridor, cx, cy);
            if (p.distance <= clearance) {
                // ignore cells behind the ego's route position
                double along = project_onto_polyline(route, cx, cy).arc_length;
                if (along >= proj.arc_length) blocked = true;
            }
        }

    if (blocked) {
        plan.braking = true;
        plan.target_speed = 0.0;
        Vec2 here = point_at_arc_length(route, proj.arc_length);
        for (auto& wp : plan.waypoints) wp = here;
    }
    return plan;
}

Controller::Controller(ControllerConfig cfg) : cfg_(cfg) {
    lateral_.gains = cfg_.lateral;
    longitudinal_.gains = cfg_.longitudinal;
}

void Controller::reset() {
    lateral_.reset();
    longitudinal_.reset();
}

Action Controller::control(const Plan& plan, const Pose& ego_pose, double ego_speed,
                           double dt_s) {
    if (!(dt_s > 0.0)) throw std::invalid_argument("control: dt must be positive");
    Action act;
    if (plan.waypoints.empty()) return act;

    // lateral: heading error to the lookahead waypoint
    size_t idx = std::min(static_cast<size_t>(std::max(cfg_.lookahead_index, 0)),
                          plan.waypoints.size() - 1);
    const Vec2& wp = plan.waypoints[idx];
    double dx = wp.x - ego_pose.x, dy = wp.y - ego_pose.y;
    double heading_err = 0.0;
    if (std::hypot(dx, dy) > 0.25) // collapsed plan: hold the wheel
        heading_err = wrap_angle(std::atan2(dy, dx) - ego_pose.yaw);
    act.steer = std::clamp(lateral_.step(heading_err, dt_s), -1.0, 1.0);

    // longitudinal: plan-implied speed from waypoint spacing; a stop demand
    // brakes all the way down instead of coasting below the margin
    double v_target = plan.target_speed;
    double speed_err = v_target - ego_speed;
    bool stop_demanded = v_target <= 1e-9 && ego_speed > 0.05;
    if (stop_demanded || speed_err < -cfg_.brake_speed_margin) {
        act.brake = 1;
        act.throttle = 0.0;
        longitudinal_.reset(); // dump integral so release is clean
    } else {
        act.brake = 0;
        act.throttle = std::clamp(longitudinal_.step(speed_err, dt_s), 0.0, 1.0);
    }
    return act;
}

} // namespace v2xsim
