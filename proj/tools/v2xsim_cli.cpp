#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "v2xsim/experiment.hpp"

namespace {

using namespace v2xsim;

std::vector<double> parse_doubles(const std::string& csv) {
    std::vector<double> out;
    std::stringstream ss(csv);
    std::string tok;
    while (std::getline(ss, tok, ','))
        if (!tok.empty()) out.push_back(std::stod(tok));
    return out;
}

std::vector<uint64_t> parse_seeds(const std::string& csv) {
    std::vector<uint64_t> out;
    std::stringstream ss(csv);
    std::string tok;
    while (std::getline(ss, tok, ','))
        if (!tok.empty()) out.push_back(std::stoull(tok));
    return out;
}

void emit(const ResultTable& table, const std::string& out_path,
          const std::string& format) {
    std::string body =
        format == "json" ? table.to_json().dump(2) + "\n" : table.to_csv();
    if (out_path.empty() || out_path == "-") {
        std::cout << body;
    } else {
        std::ofstream f(out_path, std::ios::binary);
        if (!f) throw std::runtime_error("cannot open output file: " + out_path);
        f << body;
    }
}

void write_logs(const RunLogs& logs, const std::string& dir, Method method,
                uint64_t seed) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    std::string stem = std::string(method_name(method)) + "_seed" + std::to_string(seed);
    {
        std::ofstream f(dir + "/" + stem + "_detections.jsonl", std::ios::binary);
        f << logs.detections_jsonl;
    }
    {
        std::ofstream f(dir + "/" + stem + "_trajectory.csv", std::ios::binary);
        f << "t_s,x,y,yaw,speed,steer,throttle,brake\n" << logs.trajectory_csv;
    }
    {
        std::ofstream f(dir + "/" + stem + "_latency.csv", std::ios::binary);
        f << "t_send_ms,t_r_ms,ext_ms,asyn_ms,tx_pr_ms,tx_net_ms,dm_ms,queue_ms\n"
          << logs.latency_csv;
    }
    {
        std::ofstream f(dir + "/" + stem + "_volume.csv", std::ios::binary);
        f << "frame,sender,receiver,mask_cells,size_bits,volume_db\n"
          << logs.volume_csv;
    }
    {
        std::ofstream f(dir + "/" + stem + "_prediction.csv", std::ios::binary);
        f << "sent_frame,sender,n_steps,mean_argmax_error_cells\n"
          << logs.prediction_csv;
    }
}

// offline scoring of a detections JSONL dump
std::string score_detections(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open detections file: " + path);
    ApAccumulator acc;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto rec = nlohmann::json::parse(line);
        std::vector<Detection> dets;
        for (const auto& d : rec.value("detections", nlohmann::json::array())) {
            Detection det;
            det.cls = object_class_from_name(d.at("class").get<std::string>());
            det.cx = d.at("x").get<double>();
            det.cy = d.at("y").get<double>();
            det.length = d.at("length").get<double>();
            det.width = d.at("width").get<double>();
            det.yaw = d.value("yaw", 0.0);
            det.score = d.value("score", 1.0);
            dets.push_back(det);
        }
        std::vector<GroundTruthBox> gts;
        for (const auto& g : rec.value("ground_truth", nlohmann::json::array())) {
            GroundTruthBox gt;
            gt.cls = object_class_from_name(g.at("class").get<std::string>());
            gt.box = {g.at("x").get<double>(), g.at("y").get<double>(),
                      g.value("yaw", 0.0), g.at("length").get<double>(),
                      g.at("width").get<double>()};
            gts.push_back(gt);
        }
        acc.add_frame(dets, gts);
    }

    std::string out = "metric,value\n";
    char buf[96];
    const char* cls_names[3] = {"vehicle", "bicycle", "pedestrian"};
    std::array<double, 3> per50{};
    double merged[3];
    const double threshes[3] = {0.3, 0.5, 0.7};
    for (int ti = 0; ti < 3; ++ti) {
        auto per = acc.per_class_ap(threshes[ti]);
        if (ti == 1) per50 = per;
        for (int c = 0; c < 3; ++c) {
            std::snprintf(buf, sizeof(buf), "ap%d_%s,%.6f\n",
                          static_cast<int>(threshes[ti] * 100), cls_names[c], per[c]);
            out += buf;
        }
        merged[ti] = class_merged_ap(per, MergeProfile::Latency);
    }
    std::snprintf(buf, sizeof(buf), "composited_ap,%.6f\n",
                  composited_ap(merged[0], merged[1], merged[2]));
    out += buf;
    std::snprintf(buf, sizeof(buf), "merged_ap50_latency,%.6f\n", merged[1]);
    out += buf;
    std::snprintf(buf, sizeof(buf), "merged_ap50_noise,%.6f\n",
                  class_merged_ap(per50, MergeProfile::Noise));
    out += buf;
    return out;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Deterministic multi-agent V2X collaborative perception and "
                 "closed-loop driving simulator"};
    app.require_subcommand(1);

    std::string scenario_path, method_str = "baseline", methods_str;
    std::string sweep_str = "none", values_str, seeds_str = "1";
    std::string out_path, format = "csv", log_dir;
    int jobs = 1;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--scenario", scenario_path, "Scenario JSON file")->required();
        cmd->add_option("--sweep", sweep_str,
                        "Sweep axis: none, bandwidth, uniform_latency, sigma_p, "
                        "sigma_r, packet_loss, jitter, p_thre, sigma_F");
        cmd->add_option("--values", values_str, "Comma-separated sweep values");
        cmd->add_option("--seeds", seeds_str, "Comma-separated seeds");
        cmd->add_option("--out", out_path, "Output path ('-' for stdout)");
        cmd->add_option("--format", format, "csv or json")
            ->check(CLI::IsMember({"csv", "json"}));
        cmd->add_option("--jobs", jobs, "Parallel worker count");
    };

    CLI::App* run = app.add_subcommand("run", "Run one method over a sweep");
    add_common(run);
    run->add_option("--method", method_str,
                    "no-fusion, baseline, dpp or dpp-apc");
    run->add_option("--log-dir", log_dir,
                    "Directory for per-run trace logs (single-point runs)");

    CLI::App* compare =
        app.add_subcommand("compare", "Run several methods on paired seeds");
    add_common(compare);
    compare->add_option("--methods", methods_str, "Comma-separated method list")
        ->required();

    std::string detections_path;
    CLI::App* score =
        app.add_subcommand("score", "Score an offline detections JSONL dump");
    score->add_option("--detections", detections_path, "Detections JSONL file")
        ->required();
    score->add_option("--out", out_path, "Output path ('-' for stdout)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (score->parsed()) {
            std::string body = score_detections(detections_path);
            if (out_path.empty() || out_path == "-") {
                std::cout << body;
            } else {
                std::ofstream f(out_path, std::ios::binary);
                f << body;
            }
            return 0;
        }
        ExperimentConfig cfg;
        cfg.scenario = load_scenario(scenario_path);
        cfg.axis = sweep_axis_from_name(sweep_str);
        cfg.values = parse_doubles(values_str);
        cfg.seeds = parse_seeds(seeds_str);
        cfg.jobs = jobs;

        if (run->parsed()) {
            cfg.method = method_from_name(method_str);
            ResultTable table = run_experiment(cfg);
            emit(table, out_path, format);
            if (!log_dir.empty()) {
                // trace logs are recorded per seed at the scenario's own config
                for (uint64_t seed : cfg.seeds) {
                    RunLogs logs;
                    Scenario sc = cfg.scenario;
                    if (cfg.axis != SweepAxis::None && !cfg.values.empty())
                        apply_sweep_value(sc, cfg.axis, cfg.values.front());
                    run_single(sc, cfg.method, seed, &logs);
                    write_logs(logs, log_dir, cfg.method, seed);
                }
            }
        } else {
            std::vector<Method> methods;
            std::stringstream ss(methods_str);
            std::string tok;
            while (std::getline(ss, tok, ','))
                if (!tok.empty()) methods.push_back(method_from_name(tok));
            ResultTable table = compare_methods(cfg, methods);
            emit(table, out_path, format);
        }
    } catch (const ConfigError& e) {
        std::cerr << nlohmann::json{{"error", e.what()}, {"kind", "config"}}.dump()
                  << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << nlohmann::json{{"error", e.what()}, {"kind", "runtime"}}.dump()
                  << "\n";
        return 1;
    }
    return 0;
}
