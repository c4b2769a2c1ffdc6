#include "v2xsim/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <map>
#include <thread>

#include "v2xsim/pragcomm.hpp"
#include "v2xsim/rng.hpp"

namespace v2xsim {

Method method_from_name(const std::string& name) {
    if (name == "no-fusion") return Method::NoFusion;
    if (name == "baseline") return Method::Baseline;
    if (name == "dpp") return Method::Dpp;
    if (name == "dpp-apc") return Method::DppApc;
    throw ConfigError("unknown method '" + name +
                      "' (valid: no-fusion, baseline, dpp, dpp-apc)");
}

const char* method_name(Method m) {
    switch (m) {
        case Method::NoFusion: return "no-fusion";
        case Method::Baseline: return "baseline";
        case Method::Dpp: return "dpp";
        case Method::DppApc: return "dpp-apc";
    }
    return "?";
}

SweepAxis sweep_axis_from_name(const std::string& name) {
    if (name == "none") return SweepAxis::None;
    if (name == "bandwidth") return SweepAxis::Bandwidth;
    if (name == "uniform_latency") return SweepAxis::UniformLatency;
    if (name == "sigma_p") return SweepAxis::SigmaP;
    if (name == "sigma_r") return SweepAxis::SigmaR;
    if (name == "packet_loss") return SweepAxis::PacketLoss;
    if (name == "jitter") return SweepAxis::Jitter;
    if (name == "p_thre") return SweepAxis::PThre;
    if (name == "sigma_F" || name == "sigma_f") return SweepAxis::SigmaF;
    throw ConfigError("unknown sweep axis '" + name +
                      "' (valid: none, bandwidth, uniform_latency, sigma_p, sigma_r, "
                      "packet_loss, jitter, p_thre, sigma_F)");
}

const char* sweep_axis_name(SweepAxis a) {
    switch (a) {
        case SweepAxis::None: return "none";
        case SweepAxis::Bandwidth: return "bandwidth";
        case SweepAxis::UniformLatency: return "uniform_latency";
        case SweepAxis::SigmaP: return "sigma_p";
        case SweepAxis::SigmaR: return "sigma_r";
        case SweepAxis::PacketLoss: return "packet_loss";
        case SweepAxis::Jitter: return "jitter";
        case SweepAxis::PThre: return "p_thre";
        case SweepAxis::SigmaF: return "sigma_F";
    }
    return "?";
}

void apply_sweep_value(Scenario& s, SweepAxis axis, double value) {
    switch (axis) {
        case SweepAxis::None:
            break;
        case SweepAxis::Bandwidth:
            if (!(value > 0.0)) throw ConfigError("bandwidth sweep value must be > 0 MHz");
            s.channel.link.mode = RadioMode::DSRC;
            s.channel.link.bandwidth_hz = value * 1e6;
            break;
        case SweepAxis::UniformLatency:
            if (value < 0.0) throw ConfigError("uniform_latency must be >= 0 ms");
            s.channel.link.mode = RadioMode::CV2X;
            s.channel.link.cv2x_tx_ms = {value, value};
            break;
        case SweepAxis::SigmaP:
            if (value < 0.0) throw ConfigError("sigma_p must be >= 0 m");
            s.pose_noise.sigma_p_m = value;
            break;
        case SweepAxis::SigmaR:
            if (value < 0.0) throw ConfigError("sigma_r must be >= 0 deg");
            s.pose_noise.sigma_r_deg = value;
            break;
        case SweepAxis::PacketLoss:
            if (value < 0.0 || value > 1.0)
                throw ConfigError("packet_loss must lie in [0,1]");
            s.channel.loss_prob = value;
            break;
        case SweepAxis::Jitter:
            if (value < 0.0) throw ConfigError("jitter half-range must be >= 0 ms");
            s.channel.ranges.asyn = {-value, value};
            break;
        case SweepAxis::PThre:
            s.pragcomm.p_thre = value;
            break;
        case SweepAxis::SigmaF:
            if (!(value > 0.0)) throw ConfigError("sigma_F must be > 0 m");
            s.pragcomm.sigma_f_m = value;
            break;
    }
}

namespace {

constexpr double kComfortDecel = 3.5;     // m/s^2
constexpr double kPedestrianBuffer = 3.0; // m, ego front + pedestrian radius

uint64_t pair_stream(int sender, int receiver) {
    return (static_cast<uint64_t>(static_cast<uint32_t>(sender)) << 32) |
           static_cast<uint32_t>(receiver);
}

std::vector<GroundTruthBox> ground_truth(const World& world) {
    std::vector<GroundTruthBox> gts;
    const GridSpec& spec = world.grid();
    for (const auto& o : world.objects()) {
        int cx = spec.cell_x(o.pose.x), cy = spec.cell_y(o.pose.y);
        if (!spec.in_bounds(cx, cy)) continue;
        gts.push_back({o.cls, o.box()});
    }
    return gts;
}

} // namespace

RunMetrics run_single(const Scenario& scenario, Method method, uint64_t seed,
                      RunLogs* logs) {
    const GridSpec& spec = scenario.grid;
    const int frames = scenario.frame_count();
    const double dt_s = scenario.dt_ms / 1000.0;
    const int ego_id = scenario.ego_id();

    World world(spec, scenario.agents, scenario.objects, scenario.triggers);
    world.set_limits(scenario.limits);

    const bool oracle_predictor = scenario.predictor == "oracle";
    std::map<int, HeatmapHistory> history;
    std::map<int, std::unique_ptr<Predictor>> predictors;
    std::map<int, std::vector<int32_t>> prev_labels;
    std::map<int, uint64_t> last_size_bits;
    for (const auto& a : scenario.agents) {
        history.emplace(a.id, HeatmapHistory(4));
        if (a.id != ego_id && !oracle_predictor)
            predictors.emplace(a.id, make_predictor(scenario.predictor, scenario.match));
    }

    Controller controller(scenario.controller);
    struct PendingMessage {
        Message msg;
        int n_steps = 0;
    };
    std::vector<PendingMessage> in_flight;
    std::map<int, Message> latest_delivered; // freshest per sender
    std::vector<Vec2> prev_plan;
    struct PendingPrediction {
        int eval_frame = 0;
        int sender = 0;
        int sent_frame = 0;
        int n_steps = 0;
        std::vector<std::pair<int, int>> peaks;
    };
    std::vector<PendingPrediction> pending_predictions;

    ApAccumulator ap_acc;
    std::vector<TrajectorySample> trajectory;
    InfractionCounts infractions;
    std::map<int, bool> in_contact; // per-object collision episode flag
    bool was_braking = false;

    RunMetrics metrics;
    double sum_mask_cells = 0.0, sum_volume = 0.0, sum_latency = 0.0, sum_tx = 0.0;
    double sum_steps = 0.0;

    DppConfig dpp_cfg;
    dpp_cfg.conf_sigma_cells = scenario.perception.conf_sigma_cells;
    dpp_cfg.match = scenario.match;
    DecodeConfig decode_cfg{scenario.perception.peak_threshold};

    // size prior for the latency estimate before this frame's mask exists:
    // the sender's previous packed size, or a tenth of the grid on the
    // first message
    const uint64_t nominal_bits =
        static_cast<uint64_t>(spec.h) * spec.w / 10 *
        scenario.perception.sense.feature_channels * 32ull;

    for (int frame = 0; frame < frames; ++frame) {
        const double t_ms = frame * scenario.dt_ms;

        // --- sense ------------------------------------------------------
        std::map<int, SenseResult> sensed;
        for (const auto& a : world.agents()) {
            uint64_t s = derive_seed(seed, static_cast<uint64_t>(a.id), "pose", frame);
            sensed[a.id] =
                world.sense(a.id, scenario.pose_noise, s, scenario.perception.sense);
            history.at(a.id).push(t_ms, channel_max(sensed[a.id].heatmap));
        }

        const SenseResult& ego_sense = sensed.at(ego_id);
        Grid ego_conf =
            confidence_map(ego_sense.heatmap, scenario.perception.conf_sigma_cells);

        // score predictions that matured this frame against the true cells
        if (logs) {
            for (auto it = pending_predictions.begin();
                 it != pending_predictions.end();) {
                if (it->eval_frame != frame) {
                    ++it;
                    continue;
                }
                double err_sum = 0.0;
                int count = 0;
                for (const auto& o : world.objects()) {
                    int gx = spec.cell_x(o.pose.x), gy = spec.cell_y(o.pose.y);
                    if (!spec.in_bounds(gx, gy)) continue;
                    double best = 1e9;
                    for (auto [px, py] : it->peaks)
                        best = std::min(best, std::hypot(double(px - gx),
                                                         double(py - gy)));
                    if (best < 1e9) {
                        err_sum += best;
                        ++count;
                    }
                }
                char line[128];
                std::snprintf(line, sizeof(line), "%d,%d,%d,%.3f\n", it->sent_frame,
                              it->sender, it->n_steps,
                              count > 0 ? err_sum / count : -1.0);
                logs->prediction_csv += line;
                it = pending_predictions.erase(it);
            }
        }

        // --- pack and send (supporters -> ego) ---------------------------
        size_t sent_cells_this_frame = 0;
        if (method != Method::NoFusion && frame >= 1) {
            // the ego's BSM goes out in the SCHI half; feature payloads
            // answer it during the following CCHI
            BSM bsm;
            bsm.sender = ego_id;
            bsm.pose = world.agent(ego_id).pose;
            bsm.t_ms = t_ms;
            bsm.confidence = ego_conf;
            bool aoim = method == Method::DppApc && !prev_plan.empty();
            if (aoim) {
                bsm.request = aoim_request_map(prev_plan, {bsm.pose.x, bsm.pose.y},
                                               spec.h, spec.w, spec.resolution,
                                               spec.origin_x, spec.origin_y,
                                               scenario.pragcomm.sigma_f_m,
                                               scenario.pragcomm.normalize_request);
            } else {
                bsm.request = baseline_request_map(ego_conf);
            }
            const Grid& request = bsm.request;

            for (const auto& sender : world.agents()) {
                if (sender.id == ego_id) continue;
                const auto& ego = world.agent(ego_id);
                double distance = std::max(
                    1.0, std::hypot(sender.pose.x - ego.pose.x,
                                    sender.pose.y - ego.pose.y));

                uint64_t size_prior = last_size_bits.count(sender.id)
                                          ? last_size_bits[sender.id]
                                          : nominal_bits;
                // deterministic expectation of the breakdown; the realized
                // delivery additionally walks the slot schedule
                double tau_est =
                    expected_overall_latency(scenario.channel.link,
                                             scenario.channel.ranges, size_prior,
                                             distance)
                        .total_ms();

                const SenseResult& sr = sensed.at(sender.id);
                Grid sender_conf =
                    confidence_map(sr.heatmap, scenario.perception.conf_sigma_cells);

                Message msg;
                int n_steps = 0;
                if (method == Method::Baseline) {
                    msg = pack_baseline(sr.features, sender_conf, request,
                                        scenario.pragcomm.p_thre);
                } else {
                    DppResult dpp;
                    if (oracle_predictor) {
                        // true per-frame motion: backward oracle flow negated
                        // so the displacement sits on the current support
                        FlowField back = extract_flow_oracle(
                            sr.labels, prev_labels.at(sender.id), spec.h, spec.w);
                        FlowField motion(spec.h, spec.w);
                        for (int y = 0; y < spec.h; ++y)
                            for (int x = 0; x < spec.w; ++x) {
                                motion.dx(x, y) = -back.dx(x, y);
                                motion.dy(x, y) = -back.dy(x, y);
                            }
                        OracleFlowPredictor pred(std::move(motion));
                        dpp = dpp_pipeline(sr.features, history.at(sender.id),
                                           tau_est, scenario.dt_ms, pred, dpp_cfg);
                    } else {
                        dpp = dpp_pipeline(sr.features, history.at(sender.id),
                                           tau_est, scenario.dt_ms,
                                           *predictors.at(sender.id), dpp_cfg);
                    }
                    n_steps = dpp.n_steps;
                    if (logs && n_steps > 0)
                        pending_predictions.push_back(
                            {frame + n_steps, sender.id, frame, n_steps,
                             find_heatmap_peaks(dpp.predicted_heatmap, 0.3)});
                    if (method == Method::Dpp)
                        msg = pack_baseline(dpp.warped_features, dpp.predicted_conf,
                                            request, scenario.pragcomm.p_thre);
                    else
                        msg = pack_apc(dpp.warped_features, dpp.predicted_conf,
                                       sender_conf, request, n_steps,
                                       scenario.pragcomm.p_thre);
                }
                msg.sender = sender.id;
                msg.receiver = ego_id;
                msg.t_send_ms = t_ms;
                last_size_bits[sender.id] = msg.size_bits;

                Rng lat_rng(derive_seed(seed, pair_stream(sender.id, ego_id),
                                        "latency", frame));
                LatencyBreakdown realized = sample_overall_latency(
                    scenario.channel.link, scenario.channel.ranges, msg.size_bits,
                    distance, lat_rng);
                double t_r = delivery_time_ms(t_ms, scenario.channel.slots, realized);

                Rng del_rng(derive_seed(seed, pair_stream(sender.id, ego_id),
                                        "delivery", frame));
                DeliveryOutcome outcome = inject_loss_and_jitter(
                    msg.payload, t_r, scenario.channel.loss_prob,
                    scenario.channel.extra_jitter_ms, del_rng);
                msg.t_r_ms = outcome.t_r_ms;

                metrics.messages++;
                sent_cells_this_frame += msg.mask.cardinality();
                sum_mask_cells += static_cast<double>(msg.mask.cardinality());
                double vol = comm_volume_db(msg.mask, spec.h, spec.w,
                                            sr.features.channels(),
                                            scenario.pragcomm.volume_bytes_mode);
                sum_volume += vol;
                sum_latency += realized.total_ms();
                sum_tx += realized.tx_pr_ms + realized.tx_net_ms;
                sum_steps += n_steps;
                if (logs) {
                    char line[256];
                    std::snprintf(line, sizeof(line),
                                  "%.3f,%.3f,%.3f,%.3f,%.3f,%.3f,%.3f,%.3f\n",
                                  t_ms, msg.t_r_ms, realized.ext_ms, realized.asyn_ms,
                                  realized.tx_pr_ms, realized.tx_net_ms,
                                  realized.dm_ms, realized.queue_ms);
                    logs->latency_csv += line;
                    std::snprintf(line, sizeof(line), "%d,%d,%d,%zu,%llu,%.6f\n",
                                  frame, sender.id, ego_id, msg.mask.cardinality(),
                                  static_cast<unsigned long long>(msg.size_bits), vol);
                    logs->volume_csv += line;
                }
                in_flight.push_back({std::move(msg), n_steps});
            }
        }
        if (oracle_predictor || logs)
            for (const auto& [id, sr] : sensed) prev_labels[id] = sr.labels;

        // --- deliver ------------------------------------------------------
        for (auto it = in_flight.begin(); it != in_flight.end();) {
            if (it->msg.t_r_ms <= t_ms) {
                auto cur = latest_delivered.find(it->msg.sender);
                if (cur == latest_delivered.end() ||
                    cur->second.t_send_ms < it->msg.t_send_ms)
                    latest_delivered[it->msg.sender] = std::move(it->msg);
                it = in_flight.erase(it);
            } else {
                ++it;
            }
        }

        // --- fuse + decode --------------------------------------------------
        std::vector<Message> inbox;
        for (const auto& [sender_id, m] : latest_delivered) inbox.push_back(m);

        FuseConfig fuse_cfg{scenario.perception.fusion_heads};
        Grid fused = (method == Method::NoFusion || inbox.empty())
                         ? ego_sense.features
                         : fuse(ego_sense.features, ego_conf, inbox, fuse_cfg);
        std::vector<Detection> dets =
            nms(decode(fused, spec, decode_cfg), scenario.perception.nms_iou);

        metrics.mask_cells_per_frame.push_back(sent_cells_this_frame);
        auto gts = ground_truth(world);
        if (frame >= scenario.eval_warmup_frames) ap_acc.add_frame(dets, gts);
        if (logs) {
            nlohmann::json rec;
            rec["frame"] = frame;
            rec["t_ms"] = t_ms;
            rec["detections"] = nlohmann::json::array();
            for (const auto& d : dets)
                rec["detections"].push_back({{"class", object_class_name(d.cls)},
                                             {"x", d.cx}, {"y", d.cy},
                                             {"length", d.length}, {"width", d.width},
                                             {"yaw", d.yaw}, {"score", d.score}});
            rec["ground_truth"] = nlohmann::json::array();
            for (const auto& g : gts)
                rec["ground_truth"].push_back({{"class", object_class_name(g.cls)},
                                               {"x", g.box.cx}, {"y", g.box.cy},
                                               {"length", g.box.length},
                                               {"width", g.box.width},
                                               {"yaw", g.box.yaw}});
            logs->detections_jsonl += rec.dump() + "\n";
        }

        // --- plan + act ------------------------------------------------------
        {
            const AgentState& ego = world.agent(ego_id);
            OccupancyMap occupancy = rasterize_occupancy_horizon(
                dets, spec, scenario.planner.anticipation_horizon_s);
            Plan plan = plan_waypoints(occupancy, spec, scenario.route, ego.pose,
                                       ego.width, scenario.target_speed,
                                       scenario.planner);
            Action act = controller.control(plan, ego.pose, ego.speed, dt_s);
            world.set_control(ego_id, {act.steer, act.throttle,
                                       static_cast<double>(act.brake)});
            prev_plan = plan.waypoints;

            if (act.brake == 1 && !was_braking) {
                // brake onset: flag it as emergency if stopping short of the
                // nearest pedestrian demands more than comfortable deceleration
                for (const auto& o : world.objects()) {
                    if (o.cls != ObjectClass::Pedestrian) continue;
                    double gap = std::hypot(o.pose.x - ego.pose.x,
                                            o.pose.y - ego.pose.y) -
                                 kPedestrianBuffer;
                    double required =
                        ego.speed * ego.speed / (2.0 * std::max(gap, 0.05));
                    if (required > kComfortDecel) metrics.emergency_brake = true;
                }
            }
            was_braking = act.brake == 1;

            trajectory.push_back({world.time_s(), ego.pose.x, ego.pose.y,
                                  ego.pose.yaw, ego.speed, act});
            if (logs) {
                char line[192];
                std::snprintf(line, sizeof(line),
                              "%.3f,%.3f,%.3f,%.4f,%.3f,%.3f,%.3f,%d\n",
                              world.time_s(), ego.pose.x, ego.pose.y, ego.pose.yaw,
                              ego.speed, act.steer, act.throttle, act.brake);
                logs->trajectory_csv += line;
            }
        }

        // --- step + infractions ---------------------------------------------
        world.step(dt_s);
        const AgentState& ego_after = world.agent(ego_id);
        OrientedBox ego_box{ego_after.pose.x, ego_after.pose.y, ego_after.pose.yaw,
                            ego_after.length, ego_after.width};
        for (const auto& o : world.objects()) {
            bool now = boxes_overlap(ego_box, o.box());
            bool before = in_contact.count(o.id) ? in_contact[o.id] : false;
            if (now && !before) {
                if (o.cls == ObjectClass::Pedestrian)
                    infractions.pedestrian_collisions++;
                else
                    infractions.vehicle_collisions++;
            }
            in_contact[o.id] = now;
            if (o.cls == ObjectClass::Pedestrian)
                metrics.min_pedestrian_gap = std::min(
                    metrics.min_pedestrian_gap,
                    std::hypot(o.pose.x - ego_after.pose.x,
                               o.pose.y - ego_after.pose.y));
        }
    }

    metrics.driving = driving_result(trajectory, scenario.route, infractions);
    auto c30 = ap_acc.per_class_ap(0.3);
    auto c50 = ap_acc.per_class_ap(0.5);
    auto c70 = ap_acc.per_class_ap(0.7);
    metrics.ap30 = c30;
    metrics.ap50 = c50;
    metrics.ap70 = c70;
    metrics.merged_ap50 = class_merged_ap(c50, MergeProfile::Latency);
    metrics.merged_ap50_noise = class_merged_ap(c50, MergeProfile::Noise);
    metrics.composited = composited_ap(class_merged_ap(c30, MergeProfile::Latency),
                                       metrics.merged_ap50,
                                       class_merged_ap(c70, MergeProfile::Latency));
    if (metrics.messages > 0) {
        metrics.mean_mask_cells = sum_mask_cells / metrics.messages;
        metrics.mean_volume_db = sum_volume / metrics.messages;
        metrics.mean_latency_ms = sum_latency / metrics.messages;
        metrics.mean_tx_ms = sum_tx / metrics.messages;
        metrics.mean_steps = sum_steps / metrics.messages;
    }
    return metrics;
}

const std::vector<std::string>& metric_names() {
    static const std::vector<std::string> names = {
        "merged_ap30", "merged_ap50", "merged_ap70", "composited_ap",
        "merged_ap50_noise", "route_completion", "infraction_penalty",
        "driving_score", "mean_speed", "ped_collisions", "veh_collisions",
        "messages", "mean_mask_cells", "mean_volume_db", "mean_latency_ms",
        "mean_tx_ms", "mean_steps", "min_ped_gap", "emergency_brake"};
    return names;
}

std::vector<double> metric_values(const RunMetrics& m) {
    return {class_merged_ap(m.ap30, MergeProfile::Latency),
            m.merged_ap50,
            class_merged_ap(m.ap70, MergeProfile::Latency),
            m.composited,
            m.merged_ap50_noise,
            m.driving.route_completion,
            m.driving.infraction_penalty,
            m.driving.driving_score,
            m.driving.mean_speed,
            static_cast<double>(m.driving.infractions.pedestrian_collisions),
            static_cast<double>(m.driving.infractions.vehicle_collisions),
            static_cast<double>(m.messages),
            m.mean_mask_cells,
            m.mean_volume_db,
            m.mean_latency_ms,
            m.mean_tx_ms,
            m.mean_steps,
            m.min_pedestrian_gap,
            m.emergency_brake ? 1.0 : 0.0};
}

std::string ResultTable::to_csv() const {
    std::string out = "method,axis,value,kind,seed";
    for (const auto& n : metric_names()) {
        out += ",";
        out += n;
    }
    out += "\n";
    char buf[64];
    for (const auto& r : rows) {
        out += r.method;
        out += ",";
        out += r.axis;
        std::snprintf(buf, sizeof(buf), ",%.6f,", r.value);
        out += buf;
        out += r.kind;
        std::snprintf(buf, sizeof(buf), ",%llu",
                      static_cast<unsigned long long>(r.seed));
        out += buf;
        for (double v : r.metrics) {
            std::snprintf(buf, sizeof(buf), ",%.6f", v);
            out += buf;
        }
        out += "\n";
    }
    return out;
}

nlohmann::json ResultTable::to_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : rows) {
        nlohmann::json row{{"method", r.method}, {"axis", r.axis},
                           {"value", r.value}, {"kind", r.kind}, {"seed", r.seed}};
        for (size_t i = 0; i < r.metrics.size(); ++i)
            row[metric_names()[i]] = r.metrics[i];
        arr.push_back(row);
    }
    return arr;
}

const ResultRow& ResultTable::find(const std::string& method, const std::string& kind,
                                   double value, uint64_t seed) const {
    for (const auto& r : rows)
        if (r.method == method && r.kind == kind &&
            std::abs(r.value - value) < 1e-9 && (kind != "seed" || r.seed == seed))
            return r;
    throw std::runtime_error("ResultTable::find: no row for " + method + "/" + kind);
}

double ResultTable::metric(const ResultRow& row, const std::string& name) const {
    const auto& names = metric_names();
    for (size_t i = 0; i < names.size(); ++i)
        if (names[i] == name) return row.metrics.at(i);
    throw std::invalid_argument("unknown metric: " + name);
}

namespace {

void append_summary(ResultTable& table, const std::string& method,
                    const std::string& axis, double value,
                    const std::vector<std::vector<double>>& seed_metrics) {
    if (seed_metrics.empty()) return;
    const size_t n = seed_metrics[0].size();
    std::vector<double> mean(n, 0.0), ci(n, 0.0);
    for (const auto& vals : seed_metrics)
        for (size_t i = 0; i < n; ++i) mean[i] += vals[i];
    for (double& m : mean) m /= static_cast<double>(seed_metrics.size());
    if (seed_metrics.size() > 1) {
        for (const auto& vals : seed_metrics)
            for (size_t i = 0; i < n; ++i) {
                double d = vals[i] - mean[i];
                ci[i] += d * d;
            }
        for (size_t i = 0; i < n; ++i) {
            double se = std::sqrt(ci[i] / (seed_metrics.size() - 1)) /
                        std::sqrt(static_cast<double>(seed_metrics.size()));
            ci[i] = 1.96 * se;
        }
    }
    table.rows.push_back({method, axis, value, "mean", 0, mean});
    table.rows.push_back({method, axis, value, "ci95", 0, ci});
}

} // namespace

ResultTable run_experiment(const ExperimentConfig& cfg) {
    if (cfg.seeds.empty()) throw ConfigError("seeds list must be nonempty");
    std::vector<double> values = cfg.values;
    if (values.empty()) {
        if (cfg.axis != SweepAxis::None)
            throw ConfigError("sweep axis given without values");
        values.push_back(0.0);
    }
    for (double v : values) { // validate before spending compute
        Scenario probe = cfg.scenario;
        apply_sweep_value(probe, cfg.axis, v);
    }

    struct Slot {
        double value;
        uint64_t seed;
        RunMetrics metrics;
    };
    std::vector<Slot> slots;
    for (double v : values)
        for (uint64_t s : cfg.seeds) slots.push_back({v, s, {}});

    const int jobs = std::max(1, cfg.jobs);
    std::atomic<size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            size_t i = next.fetch_add(1);
            if (i >= slots.size()) break;
            Scenario sc = cfg.scenario; // fresh world per sweep point
            if (cfg.axis != SweepAxis::None)
                apply_sweep_value(sc, cfg.axis, slots[i].value);
            slots[i].metrics = run_single(sc, cfg.method, slots[i].seed);
        }
    };
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    ResultTable table;
    size_t k = 0;
    for (double v : values) {
        std::vector<std::vector<double>> seed_metrics;
        for (uint64_t s : cfg.seeds) {
            ResultRow row{method_name(cfg.method), sweep_axis_name(cfg.axis), v,
                          "seed", s, metric_values(slots[k++].metrics)};
            seed_metrics.push_back(row.metrics);
            table.rows.push_back(std::move(row));
        }
        append_summary(table, method_name(cfg.method), sweep_axis_name(cfg.axis), v,
                       seed_metrics);
    }
    return table;
}

ResultTable compare_methods(const ExperimentConfig& cfg,
                            const std::vector<Method>& methods) {
    if (methods.size() < 2)
        throw ConfigError("compare_methods needs at least two methods");
    std::vector<ResultTable> tables;
    for (Method m : methods) {
        ExperimentConfig c = cfg;
        c.method = m; // identical seeds: paired design
        tables.push_back(run_experiment(c));
    }
    ResultTable out;
    for (const auto& t : tables)
        for (const auto& r : t.rows) out.rows.push_back(r);
    for (size_t mi = 1; mi < methods.size(); ++mi)
        for (size_t i = 0; i < tables[0].rows.size(); ++i) {
            const ResultRow& base = tables[0].rows[i];
            const ResultRow& other = tables[mi].rows[i];
            if (base.kind != "seed") continue;
            ResultRow delta = other;
            delta.method = std::string(method_name(methods[mi])) + "-minus-" +
                           method_name(methods[0]);
            delta.kind = "delta";
            for (size_t j = 0; j < delta.metrics.size(); ++j)
                delta.metrics[j] = other.metrics[j] - base.metrics[j];
            out.rows.push_back(std::move(delta));
        }
    return out;
}

} // namespace v2xsim
