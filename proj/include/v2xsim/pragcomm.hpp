#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "v2xsim/geometry.hpp"
#include "v2xsim/grid.hpp"

namespace v2xsim {

// Masked feature payload exchanged during the CCHI.
struct Message {
    int sender = 0;
    int receiver = 0;
    Grid payload;    // D channels, zero outside mask
    Mask mask;
    Grid confidence; // sender confidence, 1 channel
    double t_send_ms = 0.0;
    double t_r_ms = 0.0;
    uint64_t size_bits = 0;

    // header {sender, receiver, t_send, t_r, size_bits} + payload grid +
    // confidence grid + bit-packed mask
    void write_binary(std::ostream& os) const;
    static Message read_binary(std::istream& is);
};

// Low-rate broadcast sent during the SCHI half of each sync interval.
struct BSM {
    int sender = 0;
    Grid confidence; // [0,1]
    Grid request;    // [0,1]
    Pose pose;
    double t_ms = 0.0;
};

// channel-max + Gaussian filter, clipped to [0,1].
Grid confidence_map(const Grid& heatmap, double sigma_cells);

// R = 1 - C, pointwise.
Grid baseline_request_map(const Grid& confidence);

// Gaussian focus region centered on the waypoint of the previous plan
// nearest to the ego, evaluated at cell centers in meters. Falls back to a
// flat zero grid only if prev_plan is empty (callers are expected to use
// baseline_request_map instead on cold start). normalize rescales the peak
// to 1; otherwise the amplitude is 1/(sigma_F*sqrt(2*pi)).
Grid aoim_request_map(const std::vector<Vec2>& prev_plan, Vec2 ego_position,
                      int height, int width, float resolution_m,
                      double origin_x, double origin_y, double sigma_f_m,
                      bool normalize);

// mask = 1{req .* conf >= p_thre}; payload = features masked.
Message pack_baseline(const Grid& features, const Grid& conf_sender,
                      const Grid& req_receiver, double p_thre);

// mask = 1{max(req .* predicted_conf, |predicted_conf - current_conf| / max(n,1))
//          >= p_thre}; payload = warped features masked.
Message pack_apc(const Grid& warped_features, const Grid& predicted_conf,
                 const Grid& current_conf, const Grid& req_receiver,
                 int n_steps, double p_thre);

// log2(H*W*D*card*32/8); empty mask reports 0 by convention. bytes_mode
// reports log2(card*D*4) instead.
double comm_volume_db(const Mask& mask, int height, int width, int feature_channels,
                      bool bytes_mode = false);

} // namespace v2xsim
