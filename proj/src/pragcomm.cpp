#include "v2xsim/pragcomm.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <istream>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace v2xsim {

namespace {

void write_u32(std::ostream& os, uint32_t v) {
    uint8_t b[4] = {static_cast<uint8_t>(v), static_cast<uint8_t>(v >> 8),
                    static_cast<uint8_t>(v >> 16), static_cast<uint8_t>(v >> 24)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

uint32_t read_u32(std::istream& is) {
    uint8_t b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
           (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

void write_u64(std::ostream& os, uint64_t v) {
    write_u32(os, static_cast<uint32_t>(v));
    write_u32(os, static_cast<uint32_t>(v >> 32));
}

uint64_t read_u64(std::istream& is) {
    uint64_t lo = read_u32(is);
    uint64_t hi = read_u32(is);
    return lo | (hi << 32);
}

void write_f64(std::ostream& os, double v) {
    uint64_t u;
    std::memcpy(&u, &v, 8);
    write_u64(os, u);
}

double read_f64(std::istream& is) {
    uint64_t u = read_u64(is);
    double v;
    std::memcpy(&v, &u, 8);
    return v;
}

uint64_t message_size_bits(const Mask& mask, int feature_channels) {
    return static_cast<uint64_t>(mask.cardinality()) *
           static_cast<uint64_t>(feature_channels) * 32ull;
}

} // namespace

void Message::write_binary(std::ostream& os) const {
    write_u32(os, static_cast<uint32_t>(sender));
    write_u32(os, static_cast<uint32_t>(receiver));
    write_f64(os, t_send_ms);
    write_f64(os, t_r_ms);
    write_u64(os, size_bits);
    payload.write_binary(os);
    confidence.write_binary(os);
    auto packed = mask.pack_bits();
    write_u64(os, packed.size());
    os.write(reinterpret_cast<const char*>(packed.data()),
             static_cast<std::streamsize>(packed.size()));
}

Message Message::read_binary(std::istream& is) {
    Message m;
    m.sender = static_cast<int>(read_u32(is));
    m.receiver = static_cast<int>(read_u32(is));
    m.t_send_ms = read_f64(is);
    m.t_r_ms = read_f64(is);
    m.size_bits = read_u64(is);
    m.payload = Grid::read_binary(is);
    m.confidence = Grid::read_binary(is);
    uint64_t nbytes = read_u64(is);
    std::vector<uint8_t> packed(nbytes);
    is.read(reinterpret_cast<char*>(packed.data()), static_cast<std::streamsize>(nbytes));
    if (!is) throw std::runtime_error("Message::read_binary: truncated mask");
    m.mask = Mask::unpack_bits(packed, m.payload.height(), m.payload.width());
    return m;
}

Grid confidence_map(const Grid& heatmap, double sigma_cells) {
    return clip01(gaussian_filter(channel_max(heatmap), sigma_cells));
}

Grid baseline_request_map(const Grid& confidence) {
    Grid out = confidence;
    for (float& v : out.values()) v = 1.0f - v;
    return out;
}

Grid aoim_request_map(const std::vector<Vec2>& prev_plan, Vec2 ego_position,
                      int height, int width, float resolution_m,
                      double origin_x, double origin_y, double sigma_f_m,
                      bool normalize) {
    Grid out(height, width, 1, resolution_m);
    if (prev_plan.empty()) return out;
    if (!(sigma_f_m > 0.0))
        throw std::invalid_argument("aoim_request_map: sigma_F must be positive");

    Vec2 focus = prev_plan.front();
    double best = std::numeric_limits<double>::infinity();
    for (const auto& wp : prev_plan) {
        double d = std::hypot(wp.x - ego_position.x, wp.y - ego_position.y);
        if (d < best) {
            best = d;
            focus = wp;
        }
    }

    double amplitude = normalize ? 1.0 : 1.0 / (sigma_f_m * std::sqrt(2.0 * M_PI));
    double inv = 1.0 / (2.0 * sigma_f_m * sigma_f_m);
    for (int iy = 0; iy < height; ++iy) {
        double ym = origin_y + (iy + 0.5) * resolution_m;
        for (int ix = 0; ix < width; ++ix) {
            double xm = origin_x + (ix + 0.5) * resolution_m;
            double d2 = (xm - focus.x) * (xm - focus.x) + (ym - focus.y) * (ym - focus.y);
            out.at(ix, iy) = static_cast<float>(amplitude * std::exp(-d2 * inv));
        }
    }
    return out;
}

Message pack_baseline(const Grid& features, const Grid& conf_sender,
                      const Grid& req_receiver, double p_thre) {
    if (!features.same_spatial(conf_sender.height(), conf_sender.width()) ||
        !features.same_spatial(req_receiver.height(), req_receiver.width()))
        throw std::invalid_argument("pack_baseline: spatial dimensions must match");
    Mask mask(features.height(), features.width());
    for (int y = 0; y < features.height(); ++y)
        for (int x = 0; x < features.width(); ++x)
            mask.at(x, y) =
                req_receiver.at(x, y) * conf_sender.at(x, y) >= p_thre ? 1 : 0;
    Message m;
    m.payload = apply_mask(features, mask);
    m.mask = std::move(mask);
    m.confidence = conf_sender;
    m.size_bits = message_size_bits(m.mask, features.channels());
    return m;
}

Message pack_apc(const Grid& warped_features, const Grid& predicted_conf,
                 const Grid& current_conf, const Grid& req_receiver,
                 int n_steps, double p_thre) {
    if (!warped_features.same_spatial(predicted_conf.height(), predicted_conf.width()) ||
        !warped_features.same_spatial(current_conf.height(), current_conf.width()) ||
        !warped_features.same_spatial(req_receiver.height(), req_receiver.width()))
        throw std::invalid_argument("pack_apc: spatial dimensions must match");
    if (n_steps < 0) throw std::invalid_argument("pack_apc: n_steps must be >= 0");
    const double inv_n = 1.0 / std::max(n_steps, 1); // clamp: n=0 means sub-interval latency
    Mask mask(warped_features.height(), warped_features.width());
    for (int y = 0; y < warped_features.height(); ++y)
        for (int x = 0; x < warped_features.width(); ++x) {
            double focus = req_receiver.at(x, y) * predicted_conf.at(x, y);
            double alert =
                std::abs(predicted_conf.at(x, y) - current_conf.at(x, y)) * inv_n;
            mask.at(x, y) = std::max(focus, alert) >= p_thre ? 1 : 0;
        }
    Message m;
    m.payload = apply_mask(warped_features, mask);
    m.mask = std::move(mask);
    m.confidence = predicted_conf;
    m.size_bits = message_size_bits(m.mask, warped_features.channels());
    return m;
}

double comm_volume_db(const Mask& mask, int height, int width, int feature_channels,
                      bool bytes_mode) {
    double card = static_cast<double>(mask.cardinality());
    if (card < 1.0) return 0.0;
    double d = static_cast<double>(feature_channels);
    if (bytes_mode) return std::log2(card * d * 4.0);
    return std::log2(static_cast<double>(height) * width * d * card * 32.0 / 8.0);
}

} // namespace v2xsim
