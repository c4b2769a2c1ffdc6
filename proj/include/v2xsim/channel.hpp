#pragma once

#include <cstdint>
#include <stdexcept>

#include "v2xsim/grid.hpp"
#include "v2xsim/rng.hpp"

namespace v2xsim {

struct UnreachableLinkError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct UnstableQueueError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class RadioMode { DSRC, CV2X };

struct Range {
    double lo = 0.0;
    double hi = 0.0;
    double mid() const { return 0.5 * (lo + hi); }
    double sample(Rng& rng) const { return lo == hi ? lo : rng.uniform(lo, hi); }
};

// Per-link radio configuration. Noise power is a range because it is
// resampled per message; collapse it to a point for deterministic links.
struct LinkConfig {
    double bandwidth_hz = 10e6;
    double tx_power_dbm = 23.0;
    Range noise_dbm{-110.0, -95.0};
    double carrier_ghz = 5.9;
    RadioMode mode = RadioMode::DSRC;
    Range cv2x_tx_ms{0.0, 600.0};
};

// Uniform draws for the non-transmission latency components, in ms.
struct LatencyRanges {
    Range ext{40.0, 50.0};
    Range asyn{-100.0, 100.0};
    Range dm{20.0, 30.0};
    Range queue{0.0, 50.0};
};

struct LatencyBreakdown {
    double ext_ms = 0.0;
    double asyn_ms = 0.0; // signed
    double tx_pr_ms = 0.0;
    double tx_net_ms = 0.0;
    double dm_ms = 0.0;
    double queue_ms = 0.0;

    double total_ms() const {
        return ext_ms + asyn_ms + tx_pr_ms + tx_net_ms + dm_ms + queue_ms;
    }
    double total_non_asyn_ms() const {
        return ext_ms + tx_pr_ms + tx_net_ms + dm_ms + queue_ms;
    }
};

// Synchronization interval split into an SCHI half (BSM broadcast) followed
// by a CCHI half (feature payload).
struct SlotSchedule {
    double half_interval_ms = 50.0; // per-half duration
    double sync_interval_ms() const { return 2.0 * half_interval_ms; }
};

// 28 + 22 log10(d) + 20 log10(f_c), d in meters, f_c in GHz. Result in dB.
double path_loss_db(double distance_m, double carrier_ghz);

// size / (b * log2(1 + 10^{0.1 (p_tx - p_loss - p_noise)})), in ms.
// Uses the midpoint of the link noise range unless an override is given.
double propagation_latency_ms(uint64_t size_bits, const LinkConfig& link,
                              double distance_m, double noise_dbm_override);
double propagation_latency_ms(uint64_t size_bits, const LinkConfig& link,
                              double distance_m);

// Draws every stochastic component; DSRC computes tx_pr from the link budget
// with per-message noise, C-V2X draws the whole tx from its fixed range.
LatencyBreakdown sample_overall_latency(const LinkConfig& link,
                                        const LatencyRanges& ranges,
                                        uint64_t size_bits, double distance_m,
                                        Rng& rng);

// Deterministic expectation of the breakdown: midpoints of the uniform
// ranges, noise at its midpoint, zero-mean jitter.
LatencyBreakdown expected_overall_latency(const LinkConfig& link,
                                          const LatencyRanges& ranges,
                                          uint64_t size_bits, double distance_m);

// n = floor(tau / delta_t).
int discretize_latency(double tau_est_ms, double delta_t_ms);

// The payload starts at the first CCHI boundary at or after the request and
// arrives breakdown.total later. Jitter may shift the receive timestamp but
// never below request time plus the non-asyn components.
double delivery_time_ms(double send_request_ms, const SlotSchedule& schedule,
                        const LatencyBreakdown& breakdown);

struct DeliveryOutcome {
    bool lost = false;        // payload replaced by noise
    double t_r_ms = 0.0;      // jitter-adjusted receive timestamp
};

// With probability loss_prob the payload grid is replaced in place by
// N(0,1) noise of identical shape (mask and metadata untouched); jitter
// drawn from U(-jitter_range, +jitter_range) perturbs t_r.
DeliveryOutcome inject_loss_and_jitter(Grid& payload, double t_r_ms,
                                       double loss_prob, double jitter_range_ms,
                                       Rng& rng);

// Analytic M/M/1 mean sojourn time 1/(mu - lambda), in ms.
double mm1_mean_wait_ms(double arrival_rate_hz, double service_rate_hz);

// Discrete-event companion sampler: mean sojourn over n_customers customers
// of an M/M/1 queue, in ms.
double mm1_simulate_mean_wait_ms(double arrival_rate_hz, double service_rate_hz,
                                 size_t n_customers, Rng& rng);

} // namespace v2xsim
