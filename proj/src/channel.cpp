#include "v2xsim/channel.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

namespace v2xsim {

double path_loss_db(double distance_m, double carrier_ghz) {
    if (!(distance_m > 0.0))
        throw std::domain_error("path_loss_db: distance must be positive");
    if (!(carrier_ghz > 0.0))
        throw std::domain_error("path_loss_db: carrier frequency must be positive");
    return 28.0 + 22.0 * std::log10(distance_m) + 20.0 * std::log10(carrier_ghz);
}

double propagation_latency_ms(uint64_t size_bits, const LinkConfig& link,
                              double distance_m, double noise_dbm_override) {
    if (size_bits == 0) return 0.0;
    double snr_db = link.tx_power_dbm - path_loss_db(distance_m, link.carrier_ghz) -
                    noise_dbm_override;
    double capacity_bps =
        link.bandwidth_hz * std::log2(1.0 + std::pow(10.0, 0.1 * snr_db));
    if (!(capacity_bps > 0.0) || !std::isfinite(capacity_bps))
        throw UnreachableLinkError("propagation_latency: nonpositive channel capacity");
    return static_cast<double>(size_bits) / capacity_bps * 1000.0;
}

double propagation_latency_ms(uint64_t size_bits, const LinkConfig& link,
                              double distance_m) {
    return propagation_latency_ms(size_bits, link, distance_m, link.noise_dbm.mid());
}

LatencyBreakdown sample_overall_latency(const LinkConfig& link,
                                        const LatencyRanges& ranges,
                                        uint64_t size_bits, double distance_m,
                                        Rng& rng) {
    LatencyBreakdown b;
    b.ext_ms = ranges.ext.sample(rng);
    b.asyn_ms = ranges.asyn.sample(rng);
    b.dm_ms = ranges.dm.sample(rng);
    b.queue_ms = ranges.queue.sample(rng);
    if (link.mode == RadioMode::DSRC) {
        double noise = link.noise_dbm.sample(rng); // per-message noise draw
        b.tx_pr_ms = propagation_latency_ms(size_bits, link, distance_m, noise);
        b.tx_net_ms = 0.0;
    } else {
        b.tx_pr_ms = 0.0;
        b.tx_net_ms = link.cv2x_tx_ms.sample(rng);
    }
    return b;
}

LatencyBreakdown expected_overall_latency(const LinkConfig& link,
                                          const LatencyRanges& ranges,
                                          uint64_t size_bits, double distance_m) {
    LatencyBreakdown b;
    b.ext_ms = ranges.ext.mid();
    b.asyn_ms = 0.0;
    b.dm_ms = ranges.dm.mid();
    b.queue_ms = ranges.queue.mid();
    if (link.mode == RadioMode::DSRC) {
        b.tx_pr_ms = propagation_latency_ms(size_bits, link, distance_m);
        b.tx_net_ms = 0.0;
    } else {
        b.tx_pr_ms = 0.0;
        b.tx_net_ms = link.cv2x_tx_ms.mid();
    }
    return b;
}

int discretize_latency(double tau_est_ms, double delta_t_ms) {
    if (!(delta_t_ms > 0.0))
        throw std::domain_error("discretize_latency: delta_t must be positive");
    if (tau_est_ms < 0.0)
        throw std::domain_error("discretize_latency: tau must be nonnegative");
    return static_cast<int>(std::floor(tau_est_ms / delta_t_ms));
}

double delivery_time_ms(double send_request_ms, const SlotSchedule& schedule,
                        const LatencyBreakdown& breakdown) {
    const double half = schedule.half_interval_ms;
    const double si = schedule.sync_interval_ms();
    // first CCHI boundary (k*si + half) at or after the request
    double k = std::ceil((send_request_ms - half) / si);
    double start = k * si + half;
    if (start < send_request_ms) start += si;
    double t_r = start + breakdown.total_ms();
    // jitter shifts the timestamp but cannot beat the physical path
    double floor_t = send_request_ms + breakdown.total_non_asyn_ms();
    return std::max(t_r, floor_t);
}

DeliveryOutcome inject_loss_and_jitter(Grid& payload, double t_r_ms,
                                       double loss_prob, double jitter_range_ms,
                                       Rng& rng) {
    if (loss_prob < 0.0 || loss_prob > 1.0)
        throw std::invalid_argument("inject_loss_and_jitter: loss_prob outside [0,1]");
    DeliveryOutcome out;
    out.lost = loss_prob > 0.0 && rng.bernoulli(loss_prob);
    if (out.lost)
        for (float& v : payload.values())
            v = static_cast<float>(rng.normal(0.0, 1.0));
    out.t_r_ms = t_r_ms;
    if (jitter_range_ms > 0.0)
        out.t_r_ms += rng.uniform(-jitter_range_ms, jitter_range_ms);
    return out;
}

double mm1_mean_wait_ms(double arrival_rate_hz, double service_rate_hz) {
    if (!(arrival_rate_hz > 0.0))
        throw std::domain_error("mm1_mean_wait: arrival rate must be positive");
    if (!(service_rate_hz > arrival_rate_hz))
        throw UnstableQueueError("mm1_mean_wait: service rate must exceed arrival rate");
    return 1000.0 / (service_rate_hz - arrival_rate_hz);
}

double mm1_simulate_mean_wait_ms(double arrival_rate_hz, double service_rate_hz,
                                 size_t n_customers, Rng& rng) {
    if (!(service_rate_hz > arrival_rate_hz) || !(arrival_rate_hz > 0.0))
        throw UnstableQueueError("mm1_simulate: unstable queue");
    // single-server FIFO: next service start is max(arrival, previous departure)
    double clock = 0.0;
    double server_free_at = 0.0;
    double total_sojourn_s = 0.0;
    for (size_t i = 0; i < n_customers; ++i) {
        clock += rng.exponential(arrival_rate_hz);
        double start = std::max(clock, server_free_at);
        double departure = start + rng.exponential(service_rate_hz);
        server_free_at = departure;
        total_sojourn_s += departure - clock;
    }
    return total_sojourn_s / static_cast<double>(n_customers) * 1000.0;
}

} // namespace v2xsim
