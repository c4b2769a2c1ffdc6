#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "v2xsim/metrics.hpp"
#include "v2xsim/scenario.hpp"

namespace v2xsim {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Method { NoFusion, Baseline, Dpp, DppApc };

Method method_from_name(const std::string& name);
const char* method_name(Method m);

enum class SweepAxis {
    None,
    Bandwidth,      // MHz
    UniformLatency, // ms, collapses the link to fixed-latency C-V2X
    SigmaP,         // m
    SigmaR,         // deg
    PacketLoss,     // probability
    Jitter,         // ms half-range for the asyn component
    PThre,
    SigmaF,         // m
};

SweepAxis sweep_axis_from_name(const std::string& name);
const char* sweep_axis_name(SweepAxis a);

void apply_sweep_value(Scenario& s, SweepAxis axis, double value);

struct RunMetrics {
    std::array<double, 3> ap30{}, ap50{}, ap70{}; // per class
    double composited = 0.0;       // class-merged (latency profile) composited AP
    double merged_ap50 = 0.0;      // class-merged (latency profile) AP50
    double merged_ap50_noise = 0.0;
    DrivingResult driving;
    size_t messages = 0;
    double mean_mask_cells = 0.0;
    double mean_volume_db = 0.0;
    double mean_latency_ms = 0.0;
    double mean_tx_ms = 0.0;
    double mean_steps = 0.0;
    double min_pedestrian_gap = 1e9; // center distance, m
    bool emergency_brake = false;   // a brake onset demanded more than comfort decel
    std::vector<size_t> mask_cells_per_frame; // sent cells per frame, all senders
};

struct RunLogs {
    std::string detections_jsonl; // per-frame detections + ground truth
    std::string trajectory_csv;
    std::string latency_csv;
    std::string volume_csv;
    std::string prediction_csv;   // per-step argmax error vs ground truth
};

// One deterministic closed-loop run of a scenario with the given method.
RunMetrics run_single(const Scenario& scenario, Method method, uint64_t seed,
                      RunLogs* logs = nullptr);

// Column names of the flattened metric vector used in result tables.
const std::vector<std::string>& metric_names();
std::vector<double> metric_values(const RunMetrics& m);

struct ExperimentConfig {
    Scenario scenario;
    Method method = Method::Baseline;
    SweepAxis axis = SweepAxis::None;
    std::vector<double> values; // empty with axis None: single point
    std::vector<uint64_t> seeds{1};
    int jobs = 1;
};

struct ResultRow {
    std::string method;
    std::string axis;
    double value = 0.0;
    std::string kind; // "seed", "mean", "ci95" or "delta"
    uint64_t seed = 0;
    std::vector<double> metrics; // aligned with metric_names()
};

struct ResultTable {
    std::vector<ResultRow> rows;

    std::string to_csv() const;
    nlohmann::json to_json() const;

    // first matching row, or throws
    const ResultRow& find(const std::string& method, const std::string& kind,
                          double value, uint64_t seed = 0) const;
    double metric(const ResultRow& row, const std::string& name) const;
};

// Runs every (sweep value, seed) pair from a fresh world; per-seed rows are
// followed by mean and ci95 rows for each sweep point. Byte-identical output
// for identical config and seeds.
ResultTable run_experiment(const ExperimentConfig& cfg);

// Paired comparison: same seeds across methods, emitting the per-method
// tables plus per-seed delta rows of every later method against the first.
ResultTable compare_methods(const ExperimentConfig& cfg,
                            const std::vector<Method>& methods);

} // namespace v2xsim
