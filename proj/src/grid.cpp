#include "v2xsim/grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace v2xsim {

Grid::Grid(int height, int width, int channels, float resolution_m, float fill)
    : h_(height), w_(width), c_(channels), res_(resolution_m) {
    if (height < 1 || width < 1 || channels < 1)
        throw std::invalid_argument("Grid: H, W, C must all be >= 1");
    if (!(resolution_m > 0.0f))
        throw std::invalid_argument("Grid: resolution must be positive");
    values_.assign(static_cast<size_t>(h_) * w_ * c_, fill);
}

float Grid::min_value() const {
    return *std::min_element(values_.begin(), values_.end());
}

float Grid::max_value() const {
    return *std::max_element(values_.begin(), values_.end());
}

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

void write_f32(std::ostream& os, float v) {
    uint32_t u;
    std::memcpy(&u, &v, 4);
    write_u32(os, u);
}

float read_f32(std::istream& is) {
    uint32_t u = read_u32(is);
    float v;
    std::memcpy(&v, &u, 4);
    return v;
}

} // namespace

void Grid::write_binary(std::ostream& os) const {
    write_u32(os, static_cast<uint32_t>(h_));
    write_u32(os, static_cast<uint32_t>(w_));
    write_u32(os, static_cast<uint32_t>(c_));
    write_f32(os, res_);
    for (float v : values_) write_f32(os, v);
}

Grid Grid::read_binary(std::istream& is) {
    uint32_t h = read_u32(is), w = read_u32(is), c = read_u32(is);
    float res = read_f32(is);
    if (!is) throw std::runtime_error("Grid::read_binary: truncated header");
    Grid g(static_cast<int>(h), static_cast<int>(w), static_cast<int>(c), res);
    for (float& v : g.values_) v = read_f32(is);
    if (!is) throw std::runtime_error("Grid::read_binary: truncated payload");
    return g;
}

nlohmann::json Grid::to_json() const {
    return nlohmann::json{{"h", h_}, {"w", w_}, {"c", c_},
                          {"resolution", res_}, {"values", values_}};
}

Grid Grid::from_json(const nlohmann::json& j) {
    Grid g(j.at("h").get<int>(), j.at("w").get<int>(), j.at("c").get<int>(),
           j.at("resolution").get<float>());
    auto vals = j.at("values").get<std::vector<float>>();
    if (vals.size() != g.values_.size())
        throw std::invalid_argument("Grid::from_json: values length mismatch");
    g.values_ = std::move(vals);
    return g;
}

FlowField::FlowField(int height, int width) : h_(height), w_(width) {
    if (height < 1 || width < 1)
        throw std::invalid_argument("FlowField: H, W must be >= 1");
    dx_.assign(static_cast<size_t>(h_) * w_, 0.0f);
    dy_.assign(static_cast<size_t>(h_) * w_, 0.0f);
}

bool FlowField::zero() const {
    auto all0 = [](const std::vector<float>& v) {
        return std::all_of(v.begin(), v.end(), [](float x) { return x == 0.0f; });
    };
    return all0(dx_) && all0(dy_);
}

Mask::Mask(int height, int width, uint8_t fill) : h_(height), w_(width) {
    if (height < 1 || width < 1)
        throw std::invalid_argument("Mask: H, W must be >= 1");
    bits_.assign(static_cast<size_t>(h_) * w_, fill ? 1 : 0);
}

size_t Mask::cardinality() const {
    size_t n = 0;
    for (uint8_t b : bits_) n += b ? 1 : 0;
    return n;
}

std::vector<uint8_t> Mask::pack_bits() const {
    std::vector<uint8_t> out((bits_.size() + 7) / 8, 0);
    for (size_t i = 0; i < bits_.size(); ++i)
        if (bits_[i]) out[i >> 3] |= static_cast<uint8_t>(1u << (i & 7));
    return out;
}

Mask Mask::unpack_bits(const std::vector<uint8_t>& bytes, int height, int width) {
    Mask m(height, width);
    size_t n = static_cast<size_t>(height) * width;
    if (bytes.size() < (n + 7) / 8)
        throw std::invalid_argument("Mask::unpack_bits: byte buffer too short");
    for (size_t i = 0; i < n; ++i)
        m.bits_[i] = (bytes[i >> 3] >> (i & 7)) & 1u;
    return m;
}

namespace {

// reflect-with-edge-repeat: ... c b a | a b c ... | c b a
int reflect_index(int i, int n) {
    if (n == 1) return 0;
    while (i < 0 || i >= n) {
        if (i < 0) i = -i - 1;
        if (i >= n) i = 2 * n - i - 1;
    }
    return i;
}

std::vector<double> gaussian_kernel(double sigma, int radius) {
    std::vector<double> k(2 * radius + 1);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        double v = std::exp(-0.5 * (i * i) / (sigma * sigma));
        k[i + radius] = v;
        sum += v;
    }
    for (double& v : k) v /= sum;
    return k;
}

} // namespace

Grid gaussian_filter(const Grid& g, double sigma_cells, int radius) {
    if (sigma_cells < 0.0)
        throw std::invalid_argument("gaussian_filter: sigma must be >= 0");
    if (sigma_cells == 0.0) return g;
    if (radius < 0) radius = static_cast<int>(std::ceil(3.0 * sigma_cells));
    if (radius == 0) return g;
    const auto kernel = gaussian_kernel(sigma_cells, radius);

    const int H = g.height(), W = g.width(), C = g.channels();

    // the support of the result is the support of the input grown by the
    // kernel radius; restrict both passes to that box
    int x0 = W, x1 = -1, y0 = H, y1 = -1;
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x)
            for (int c = 0; c < C; ++c)
                if (g.at(x, y, c) != 0.0f) {
                    x0 = std::min(x0, x);
                    x1 = std::max(x1, x);
                    y0 = std::min(y0, y);
                    y1 = std::max(y1, y);
                    break;
                }
    Grid out(H, W, C, g.resolution());
    if (x1 < 0) return out; // all zero
    x0 = std::max(0, x0 - radius);
    x1 = std::min(W - 1, x1 + radius);
    y0 = std::max(0, y0 - radius);
    y1 = std::min(H - 1, y1 + radius);

    Grid tmp(H, W, C, g.resolution());
    for (int y = std::max(0, y0 - radius); y <= std::min(H - 1, y1 + radius); ++y)
        for (int x = x0; x <= x1; ++x)
            for (int c = 0; c < C; ++c) {
                double acc = 0.0;
                for (int k = -radius; k <= radius; ++k)
                    acc += kernel[k + radius] * g.at(reflect_index(x + k, W), y, c);
                tmp.at(x, y, c) = static_cast<float>(acc);
            }
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x)
            for (int c = 0; c < C; ++c) {
                double acc = 0.0;
                for (int k = -radius; k <= radius; ++k)
                    acc += kernel[k + radius] * tmp.at(x, reflect_index(y + k, H), c);
                out.at(x, y, c) = static_cast<float>(acc);
            }
    return out;
}

Grid channel_max(const Grid& g) {
    Grid out(g.height(), g.width(), 1, g.resolution());
    for (int y = 0; y < g.height(); ++y)
        for (int x = 0; x < g.width(); ++x) {
            float m = g.at(x, y, 0);
            for (int c = 1; c < g.channels(); ++c) m = std::max(m, g.at(x, y, c));
            out.at(x, y) = m;
        }
    return out;
}

Grid apply_mask(const Grid& g, const Mask& m) {
    if (!g.same_spatial(m.height(), m.width()))
        throw std::invalid_argument("apply_mask: spatial dimensions must match");
    Grid out = g;
    for (int y = 0; y < g.height(); ++y)
        for (int x = 0; x < g.width(); ++x)
            if (!m.at(x, y))
                for (int c = 0; c < g.channels(); ++c) out.at(x, y, c) = 0.0f;
    return out;
}

Grid affine_warp(const Grid& f, const FlowField& flow, bool bilinear) {
    if (!f.same_spatial(flow.height(), flow.width()))
        throw std::invalid_argument("affine_warp: flow dimensions must match grid");
    const int H = f.height(), W = f.width(), C = f.channels();
    Grid out(H, W, C, f.resolution());
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            float fx = flow.dx(x, y), fy = flow.dy(x, y);
            if (!bilinear) {
                int sx = x + static_cast<int>(std::lround(fx));
                int sy = y + static_cast<int>(std::lround(fy));
                if (f.in_bounds(sx, sy))
                    for (int c = 0; c < C; ++c) out.at(x, y, c) = f.at(sx, sy, c);
            } else {
                double sx = x + fx, sy = y + fy;
                int x0 = static_cast<int>(std::floor(sx));
                int y0 = static_cast<int>(std::floor(sy));
                double ax = sx - x0, ay = sy - y0;
                for (int c = 0; c < C; ++c) {
                    auto sample = [&](int xx, int yy) -> double {
                        return f.in_bounds(xx, yy) ? f.at(xx, yy, c) : 0.0;
                    };
                    double v = (1 - ax) * (1 - ay) * sample(x0, y0) +
                               ax * (1 - ay) * sample(x0 + 1, y0) +
                               (1 - ax) * ay * sample(x0, y0 + 1) +
                               ax * ay * sample(x0 + 1, y0 + 1);
                    out.at(x, y, c) = static_cast<float>(v);
                }
            }
        }
    return out;
}

Grid clip01(const Grid& g) {
    Grid out = g;
    for (float& v : out.values()) v = std::clamp(v, 0.0f, 1.0f);
    return out;
}

} // namespace v2xsim
