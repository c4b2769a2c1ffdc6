#include "v2xsim/scenario.hpp"

#include <cstdlib>
#include <fstream>
#include <stdexcept>

namespace v2xsim {

int Scenario::ego_id() const {
    int id = -1;
    int count = 0;
    for (const auto& a : agents)
        if (a.role == AgentRole::Ego) {
            id = a.id;
            ++count;
        }
    if (count != 1)
        throw std::invalid_argument("scenario must define exactly one ego agent");
    return id;
}

namespace {

using nlohmann::json;

Range range_from_json(const json& j) {
    if (j.is_number()) return {j.get<double>(), j.get<double>()};
    return {j.at(0).get<double>(), j.at(1).get<double>()};
}

json range_to_json(const Range& r) { return json::array({r.lo, r.hi}); }

AgentRole role_from_name(const std::string& s) {
    if (s == "ego") return AgentRole::Ego;
    if (s == "vehicle") return AgentRole::Vehicle;
    if (s == "rsu") return AgentRole::RSU;
    throw std::invalid_argument("unknown agent role: " + s);
}

const char* role_name(AgentRole r) {
    switch (r) {
        case AgentRole::Ego: return "ego";
        case AgentRole::Vehicle: return "vehicle";
        case AgentRole::RSU: return "rsu";
    }
    return "vehicle";
}

} // namespace

Scenario scenario_from_json(const nlohmann::json& j) {
    Scenario s;
    s.name = j.value("name", s.name);
    if (j.contains("grid")) {
        const auto& g = j.at("grid");
        s.grid.h = g.value("h", s.grid.h);
        s.grid.w = g.value("w", s.grid.w);
        s.grid.resolution = g.value("resolution", s.grid.resolution);
        s.grid.origin_x = g.value("origin_x", s.grid.origin_x);
        s.grid.origin_y = g.value("origin_y", s.grid.origin_y);
    }
    s.duration_s = j.value("duration_s", s.duration_s);
    s.dt_ms = j.value("dt_ms", s.dt_ms);
    s.target_speed = j.value("target_speed", s.target_speed);
    if (j.contains("route"))
        for (const auto& p : j.at("route"))
            s.route.push_back({p.at(0).get<double>(), p.at(1).get<double>()});

    for (const auto& a : j.value("agents", json::array())) {
        AgentState ag;
        ag.id = a.at("id").get<int>();
        ag.role = role_from_name(a.value("role", "vehicle"));
        ag.pose.x = a.value("x", 0.0);
        ag.pose.y = a.value("y", 0.0);
        ag.pose.yaw = a.value("yaw", 0.0);
        ag.speed = a.value("speed", 0.0);
        ag.sensing_range = a.value("sensing_range", 50.0);
        ag.fov_rad = a.value("fov_deg", 360.0) * M_PI / 180.0;
        ag.length = a.value("length", 4.5);
        ag.width = a.value("width", 2.0);
        s.agents.push_back(ag);
    }
    for (const auto& o : j.value("objects", json::array())) {
        WorldObject ob;
        ob.id = o.at("id").get<int>();
        ob.cls = object_class_from_name(o.value("class", "vehicle"));
        ob.pose.x = o.value("x", 0.0);
        ob.pose.y = o.value("y", 0.0);
        ob.pose.yaw = o.value("yaw", 0.0);
        ob.length = o.value("length", 4.5);
        ob.width = o.value("width", 2.0);
        ob.vx = o.value("vx", 0.0);
        ob.vy = o.value("vy", 0.0);
        s.objects.push_back(ob);
    }
    for (const auto& t : j.value("triggers", json::array())) {
        EventTrigger tr;
        tr.object_id = t.at("object").get<int>();
        tr.t_s = t.at("t_s").get<double>();
        tr.vx = t.value("vx", 0.0);
        tr.vy = t.value("vy", 0.0);
        s.triggers.push_back(tr);
    }

    if (j.contains("channel")) {
        const auto& c = j.at("channel");
        std::string mode = c.value("mode", "dsrc");
        s.channel.link.mode = mode == "cv2x" ? RadioMode::CV2X : RadioMode::DSRC;
        s.channel.link.bandwidth_hz = c.value("bandwidth_mhz", 10.0) * 1e6;
        s.channel.link.tx_power_dbm = c.value("tx_power_dbm", 23.0);
        if (c.contains("noise_dbm")) s.channel.link.noise_dbm = range_from_json(c.at("noise_dbm"));
        s.channel.link.carrier_ghz = c.value("carrier_ghz", 5.9);
        if (c.contains("cv2x_tx_ms")) s.channel.link.cv2x_tx_ms = range_from_json(c.at("cv2x_tx_ms"));
        s.channel.loss_prob = c.value("loss_prob", s.channel.loss_prob);
        s.channel.extra_jitter_ms = c.value("extra_jitter_ms", 0.0);
        s.channel.slots.half_interval_ms = c.value("half_interval_ms", 50.0);
        if (c.contains("ext_ms")) s.channel.ranges.ext = range_from_json(c.at("ext_ms"));
        if (c.contains("asyn_ms")) s.channel.ranges.asyn = range_from_json(c.at("asyn_ms"));
        if (c.contains("dm_ms")) s.channel.ranges.dm = range_from_json(c.at("dm_ms"));
        if (c.contains("queue_ms")) s.channel.ranges.queue = range_from_json(c.at("queue_ms"));
    }
    if (j.contains("pose_noise")) {
        s.pose_noise.sigma_p_m = j.at("pose_noise").value("sigma_p", 0.0);
        s.pose_noise.sigma_r_deg = j.at("pose_noise").value("sigma_r", 0.0);
    }
    if (j.contains("perception")) {
        const auto& p = j.at("perception");
        s.perception.sense.feature_channels = p.value("feature_channels", 64);
        s.perception.sense.blob_sigma_scale = p.value("blob_sigma_scale", 0.5);
        s.perception.sense.min_sigma_cells = p.value("min_sigma_cells", 1.0);
        s.perception.conf_sigma_cells = p.value("conf_sigma_cells", 2.0);
        s.perception.peak_threshold = p.value("peak_threshold", 0.3);
        s.perception.nms_iou = p.value("nms_iou", 0.5);
        s.perception.fusion_heads = p.value("fusion_heads", 1);
    }
    if (j.contains("pragcomm")) {
        const auto& p = j.at("pragcomm");
        s.pragcomm.p_thre = p.value("p_thre", 0.05);
        s.pragcomm.sigma_f_m = p.value("sigma_f", 15.0);
        s.pragcomm.normalize_request = p.value("normalize_request", true);
        s.pragcomm.volume_bytes_mode = p.value("volume_bytes_mode", false);
    }
    s.predictor = j.value("predictor", s.predictor);
    if (j.contains("match")) {
        const auto& m = j.at("match");
        s.match.peak_threshold = m.value("peak_threshold", s.match.peak_threshold);
        s.match.support_threshold = m.value("support_threshold", s.match.support_threshold);
        s.match.search_radius_cells = m.value("search_radius_cells", s.match.search_radius_cells);
    }
    if (j.contains("planner")) {
        const auto& p = j.at("planner");
        s.planner.num_waypoints = p.value("num_waypoints", s.planner.num_waypoints);
        s.planner.occupancy_frames = p.value("occupancy_frames", s.planner.occupancy_frames);
        s.planner.waypoint_dt_s = p.value("waypoint_dt_s", s.planner.waypoint_dt_s);
        s.planner.corridor_halfwidth = p.value("corridor_halfwidth", s.planner.corridor_halfwidth);
        s.planner.lookahead_m = p.value("lookahead_m", s.planner.lookahead_m);
        s.planner.route_lost_tolerance =
            p.value("route_lost_tolerance", s.planner.route_lost_tolerance);
        s.planner.anticipation_horizon_s =
            p.value("anticipation_horizon_s", s.planner.anticipation_horizon_s);
    }
    if (j.contains("eval"))
        s.eval_warmup_frames = j.at("eval").value("warmup_frames", s.eval_warmup_frames);
    return s;
}

nlohmann::json scenario_to_json(const Scenario& s) {
    json j;
    j["name"] = s.name;
    j["grid"] = {{"h", s.grid.h}, {"w", s.grid.w}, {"resolution", s.grid.resolution},
                 {"origin_x", s.grid.origin_x}, {"origin_y", s.grid.origin_y}};
    j["duration_s"] = s.duration_s;
    j["dt_ms"] = s.dt_ms;
    j["target_speed"] = s.target_speed;
    j["route"] = json::array();
    for (const auto& p : s.route) j["route"].push_back({p.x, p.y});
    j["agents"] = json::array();
    for (const auto& a : s.agents)
        j["agents"].push_back({{"id", a.id}, {"role", role_name(a.role)},
                               {"x", a.pose.x}, {"y", a.pose.y}, {"yaw", a.pose.yaw},
                               {"speed", a.speed}, {"sensing_range", a.sensing_range},
                               {"fov_deg", a.fov_rad * 180.0 / M_PI},
                               {"length", a.length}, {"width", a.width}});
    j["objects"] = json::array();
    for (const auto& o : s.objects)
        j["objects"].push_back({{"id", o.id}, {"class", object_class_name(o.cls)},
                                {"x", o.pose.x}, {"y", o.pose.y}, {"yaw", o.pose.yaw},
                                {"length", o.length}, {"width", o.width},
                                {"vx", o.vx}, {"vy", o.vy}});
    j["triggers"] = json::array();
    for (const auto& t : s.triggers)
        j["triggers"].push_back(
            {{"object", t.object_id}, {"t_s", t.t_s}, {"vx", t.vx}, {"vy", t.vy}});
    j["channel"] = {{"mode", s.channel.link.mode == RadioMode::CV2X ? "cv2x" : "dsrc"},
                    {"bandwidth_mhz", s.channel.link.bandwidth_hz / 1e6},
                    {"tx_power_dbm", s.channel.link.tx_power_dbm},
                    {"noise_dbm", range_to_json(s.channel.link.noise_dbm)},
                    {"carrier_ghz", s.channel.link.carrier_ghz},
                    {"cv2x_tx_ms", range_to_json(s.channel.link.cv2x_tx_ms)},
                    {"loss_prob", s.channel.loss_prob},
                    {"extra_jitter_ms", s.channel.extra_jitter_ms},
                    {"half_interval_ms", s.channel.slots.half_interval_ms},
                    {"ext_ms", range_to_json(s.channel.ranges.ext)},
                    {"asyn_ms", range_to_json(s.channel.ranges.asyn)},
                    {"dm_ms", range_to_json(s.channel.ranges.dm)},
                    {"queue_ms", range_to_json(s.channel.ranges.queue)}};
    j["pose_noise"] = {{"sigma_p", s.pose_noise.sigma_p_m},
                       {"sigma_r", s.pose_noise.sigma_r_deg}};
    j["perception"] = {{"feature_channels", s.perception.sense.feature_channels},
                       {"blob_sigma_scale", s.perception.sense.blob_sigma_scale},
                       {"min_sigma_cells", s.perception.sense.min_sigma_cells},
                       {"conf_sigma_cells", s.perception.conf_sigma_cells},
                       {"peak_threshold", s.perception.peak_threshold},
                       {"nms_iou", s.perception.nms_iou},
                       {"fusion_heads", s.perception.fusion_heads}};
    j["pragcomm"] = {{"p_thre", s.pragcomm.p_thre}, {"sigma_f", s.pragcomm.sigma_f_m},
                     {"normalize_request", s.pragcomm.normalize_request},
                     {"volume_bytes_mode", s.pragcomm.volume_bytes_mode}};
    j["predictor"] = s.predictor;
    return j;
}

Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open scenario file: " + path);
    json j;
    in >> j;
    Scenario s = scenario_from_json(j);
    apply_env_overrides(s);
    return s;
}

void apply_env_overrides(Scenario& s) {
    auto env_double = [](const char* name, double& target) {
        if (const char* v = std::getenv(name)) target = std::atof(v);
    };
    env_double("V2XSIM_P_THRE", s.pragcomm.p_thre);
    env_double("V2XSIM_SIGMA_F", s.pragcomm.sigma_f_m);
    env_double("V2XSIM_LOSS_PROB", s.channel.loss_prob);
    if (const char* v = std::getenv("V2XSIM_BANDWIDTH_MHZ"))
        s.channel.link.bandwidth_hz = std::atof(v) * 1e6;
    env_double("V2XSIM_TX_POWER_DBM", s.channel.link.tx_power_dbm);
}

} // namespace v2xsim
