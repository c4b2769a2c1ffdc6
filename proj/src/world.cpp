#include "v2xsim/world.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace v2xsim {

const char* object_class_name(ObjectClass c) {
    switch (c) {
        case ObjectClass::Vehicle: return "vehicle";
        case ObjectClass::Bicycle: return "bicycle";
        case ObjectClass::Pedestrian: return "pedestrian";
    }
    return "unknown";
}

ObjectClass object_class_from_name(const std::string& name) {
    if (name == "vehicle") return ObjectClass::Vehicle;
    if (name == "bicycle") return ObjectClass::Bicycle;
    if (name == "pedestrian") return ObjectClass::Pedestrian;
    throw std::invalid_argument("unknown object class: " + name);
}

World::World(GridSpec grid, std::vector<AgentState> agents,
             std::vector<WorldObject> objects, std::vector<EventTrigger> triggers)
    : grid_(grid), agents_(std::move(agents)), objects_(std::move(objects)),
      triggers_(std::move(triggers)) {
    for (auto& a : agents_)
        if (a.role == AgentRole::RSU) a.speed = 0.0;
    controls_.assign(agents_.size(), AgentControl{});
}

AgentState& World::agent(int id) {
    for (auto& a : agents_)
        if (a.id == id) return a;
    throw std::invalid_argument("World::agent: no agent with id " + std::to_string(id));
}

const AgentState& World::agent(int id) const {
    return const_cast<World*>(this)->agent(id);
}

const WorldObject* World::object(int id) const {
    for (const auto& o : objects_)
        if (o.id == id) return &o;
    return nullptr;
}

void World::set_control(int agent_id, const AgentControl& control) {
    for (size_t i = 0; i < agents_.size(); ++i)
        if (agents_[i].id == agent_id) {
            controls_[i] = control;
            return;
        }
    throw std::invalid_argument("World::set_control: unknown agent id");
}

void World::step(double dt_s) {
    if (!(dt_s > 0.0)) throw std::invalid_argument("World::step: dt must be positive");

    for (auto& trig : triggers_)
        if (!trig.fired && time_s_ + 1e-9 >= trig.t_s) {
            for (auto& o : objects_)
                if (o.id == trig.object_id) {
                    o.vx = trig.vx;
                    o.vy = trig.vy;
                    if (std::hypot(o.vx, o.vy) > 1e-9) o.pose.yaw = std::atan2(o.vy, o.vx);
                }
            trig.fired = true;
        }

    for (auto& o : objects_) {
        o.pose.x += o.vx * dt_s;
        o.pose.y += o.vy * dt_s;
    }

    for (size_t i = 0; i < agents_.size(); ++i) {
        AgentState& a = agents_[i];
        if (a.role == AgentRole::RSU) continue;
        const AgentControl& u = controls_[i];
        double accel = u.brake > 0.5 ? -limits_.max_brake
                                     : std::clamp(u.throttle, 0.0, 1.0) * limits_.max_accel;
        double steer = std::clamp(u.steer, -1.0, 1.0) * limits_.max_steer_rad;
        a.pose.x += a.speed * std::cos(a.pose.yaw) * dt_s;
        a.pose.y += a.speed * std::sin(a.pose.yaw) * dt_s;
        if (a.speed > 1e-6)
            a.pose.yaw = wrap_angle(a.pose.yaw +
                                    a.speed / limits_.wheelbase * std::tan(steer) * dt_s);
        a.speed = std::max(0.0, a.speed + accel * dt_s);
    }

    time_s_ += dt_s;
}

bool World::visible(const AgentState& agent, const WorldObject& target) const {
    double dx = target.pose.x - agent.pose.x;
    double dy = target.pose.y - agent.pose.y;
    double dist = std::hypot(dx, dy);
    if (dist > agent.sensing_range) return false;
    if (agent.fov_rad < 2.0 * M_PI - 1e-9) {
        double bearing = wrap_angle(std::atan2(dy, dx) - agent.pose.yaw);
        if (std::abs(bearing) > 0.5 * agent.fov_rad) return false;
    }
    Vec2 p0{agent.pose.x, agent.pose.y};
    Vec2 p1{target.pose.x, target.pose.y};
    for (const auto& other : objects_) {
        if (other.id == target.id) continue;
        if (segment_intersects_box(p0, p1, other.box())) return false;
    }
    return true;
}

SenseResult World::sense(int agent_id, const PoseNoise& noise, uint64_t seed,
                         const SenseConfig& cfg) const {
    const AgentState& a = agent(agent_id);
    if (cfg.feature_channels < (1 + kRegressionPerClass) * kNumClasses)
        throw std::invalid_argument("sense: feature_channels below heatmap+regression layout");

    // sensor-frame measurements are exact; the noisy self-pose corrupts the
    // re-projection into the shared global grid
    Pose believed = a.pose;
    if (noise.sigma_p_m > 0.0 || noise.sigma_r_deg > 0.0) {
        Rng rng(seed);
        believed.x += rng.normal(0.0, noise.sigma_p_m);
        believed.y += rng.normal(0.0, noise.sigma_p_m);
        believed.yaw = wrap_angle(believed.yaw +
                                  rng.normal(0.0, M_PI * noise.sigma_r_deg / 180.0));
    }
    double yaw_err = believed.yaw - a.pose.yaw;
    double ce = std::cos(yaw_err), se = std::sin(yaw_err);

    SenseResult out;
    out.heatmap = Grid(grid_.h, grid_.w, kNumClasses, grid_.resolution);
    out.regression = Grid(grid_.h, grid_.w, kRegressionPerClass * kNumClasses,
                          grid_.resolution);
    out.features = Grid(grid_.h, grid_.w, cfg.feature_channels, grid_.resolution);
    out.labels.assign(static_cast<size_t>(grid_.h) * grid_.w, -1);
    int bx0 = grid_.w, bx1 = -1, by0 = grid_.h, by1 = -1;

    for (const auto& obj : objects_) {
        if (!visible(a, obj)) continue;

        // place via the believed pose: rotate the true offset by the yaw
        // error and translate by the position error
        double rx = obj.pose.x - a.pose.x, ry = obj.pose.y - a.pose.y;
        double px = believed.x + ce * rx - se * ry;
        double py = believed.y + se * rx + ce * ry;
        double pyaw = wrap_angle(obj.pose.yaw + yaw_err);
        double pvx = ce * obj.vx - se * obj.vy;
        double pvy = se * obj.vx + ce * obj.vy;

        double mean_extent_cells = 0.5 * (obj.length + obj.width) / grid_.resolution;
        double sigma = std::max(cfg.blob_sigma_scale * mean_extent_cells,
                                cfg.min_sigma_cells);
        int cx = grid_.cell_x(px), cy = grid_.cell_y(py);
        int radius = static_cast<int>(std::ceil(3.0 * sigma));
        int ch = static_cast<int>(obj.cls);
        bx0 = std::min(bx0, std::max(0, cx - radius));
        bx1 = std::max(bx1, std::min(grid_.w - 1, cx + radius));
        by0 = std::min(by0, std::max(0, cy - radius));
        by1 = std::max(by1, std::min(grid_.h - 1, cy + radius));

        for (int iy = cy - radius; iy <= cy + radius; ++iy)
            for (int ix = cx - radius; ix <= cx + radius; ++ix) {
                if (!grid_.in_bounds(ix, iy)) continue;
                double ddx = ix - cx, ddy = iy - cy;
                double v = std::exp(-0.5 * (ddx * ddx + ddy * ddy) / (sigma * sigma));
                if (v < cfg.blob_cutoff) continue;
                float fv = static_cast<float>(v);
                if (fv <= out.heatmap.at(ix, iy, ch)) continue; // max semantics
                out.heatmap.at(ix, iy, ch) = fv;
                // regression ownership follows the per-class heatmap winner
                bool owns = true;
                for (int c = 0; c < kNumClasses; ++c)
                    if (c != ch && out.heatmap.at(ix, iy, c) >= fv) owns = false;
                if (!owns) continue;
                out.labels[static_cast<size_t>(iy) * grid_.w + ix] = obj.id;
                int base = ch * kRegressionPerClass;
                out.regression.at(ix, iy, base + 0) =
                    static_cast<float>(px - grid_.cell_center_x(ix));
                out.regression.at(ix, iy, base + 1) =
                    static_cast<float>(py - grid_.cell_center_y(iy));
                out.regression.at(ix, iy, base + 2) = static_cast<float>(std::log(obj.length));
                out.regression.at(ix, iy, base + 3) = static_cast<float>(std::log(obj.width));
                out.regression.at(ix, iy, base + 4) = static_cast<float>(std::cos(pyaw));
                out.regression.at(ix, iy, base + 5) = static_cast<float>(std::sin(pyaw));
                out.regression.at(ix, iy, base + 6) = static_cast<float>(pvx);
                out.regression.at(ix, iy, base + 7) = static_cast<float>(pvy);
            }
    }

    // feature layout: [0,C) heatmap, [C,9C) regression, rest zero; only the
    // rasterized bounding box can hold nonzero values
    for (int y = by0; y <= by1; ++y)
        for (int x = bx0; x <= bx1; ++x) {
            for (int c = 0; c < kNumClasses; ++c)
                out.features.at(x, y, c) = out.heatmap.at(x, y, c);
            for (int c = 0; c < kRegressionPerClass * kNumClasses; ++c)
                out.features.at(x, y, kNumClasses + c) = out.regression.at(x, y, c);
        }
    return out;
}

} // namespace v2xsim
