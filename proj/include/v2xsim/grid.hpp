#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

namespace v2xsim {

// Dense BEV scalar field, row-major, (x, y, c) with x indexing columns
// [0, W) and y indexing rows [0, H). Values are float32 to match the wire
// format; all grid operators are pure.
class Grid {
public:
    Grid() = default;
    Grid(int height, int width, int channels, float resolution_m = 0.25f,
         float fill = 0.0f);

    int height() const { return h_; }
    int width() const { return w_; }
    int channels() const { return c_; }
    float resolution() const { return res_; }

    float& at(int x, int y, int c = 0) { return values_[idx(x, y, c)]; }
    float at(int x, int y, int c = 0) const { return values_[idx(x, y, c)]; }
    bool in_bounds(int x, int y) const {
        return x >= 0 && x < w_ && y >= 0 && y < h_;
    }

    const std::vector<float>& values() const { return values_; }
    std::vector<float>& values() { return values_; }

    bool same_shape(const Grid& o) const {
        return h_ == o.h_ && w_ == o.w_ && c_ == o.c_;
    }
    bool same_spatial(int height, int width) const {
        return h_ == height && w_ == width;
    }

    float min_value() const;
    float max_value() const;

    // Flat binary layout: uint32 H, W, C + float32 resolution, then
    // H*W*C little-endian float32 row-major.
    void write_binary(std::ostream& os) const;
    static Grid read_binary(std::istream& is);

    nlohmann::json to_json() const;
    static Grid from_json(const nlohmann::json& j);

private:
    size_t idx(int x, int y, int c) const {
        return (static_cast<size_t>(y) * w_ + x) * c_ + c;
    }

    int h_ = 0, w_ = 0, c_ = 0;
    float res_ = 0.25f;
    std::vector<float> values_;
};

// Per-cell (dx, dy) displacement in grid cells, signed.
class FlowField {
public:
    FlowField() = default;
    FlowField(int height, int width);

    int height() const { return h_; }
    int width() const { return w_; }

    float& dx(int x, int y) { return dx_[static_cast<size_t>(y) * w_ + x]; }
    float dx(int x, int y) const { return dx_[static_cast<size_t>(y) * w_ + x]; }
    float& dy(int x, int y) { return dy_[static_cast<size_t>(y) * w_ + x]; }
    float dy(int x, int y) const { return dy_[static_cast<size_t>(y) * w_ + x]; }

    bool zero() const;

private:
    int h_ = 0, w_ = 0;
    std::vector<float> dx_, dy_;
};

// Binary spatial selection, one byte per cell.
class Mask {
public:
    Mask() = default;
    Mask(int height, int width, uint8_t fill = 0);

    int height() const { return h_; }
    int width() const { return w_; }

    uint8_t& at(int x, int y) { return bits_[static_cast<size_t>(y) * w_ + x]; }
    uint8_t at(int x, int y) const { return bits_[static_cast<size_t>(y) * w_ + x]; }

    size_t cardinality() const;
    const std::vector<uint8_t>& bits() const { return bits_; }

    // Bit packing for the message wire format, row-major, LSB first.
    std::vector<uint8_t> pack_bits() const;
    static Mask unpack_bits(const std::vector<uint8_t>& bytes, int height, int width);

private:
    int h_ = 0, w_ = 0;
    std::vector<uint8_t> bits_;
};

// Separable Gaussian convolution with reflect padding; the truncated kernel
// is renormalized to unit sum so constants are preserved exactly.
// radius < 0 selects ceil(3*sigma). sigma 0 is the identity.
Grid gaussian_filter(const Grid& g, double sigma_cells, int radius = -1);

// Per-cell maximum across channels.
Grid channel_max(const Grid& g);

// out(x,y,c) = g(x,y,c) * m(x,y). Throws on spatial mismatch.
Grid apply_mask(const Grid& g, const Mask& m);

// Gather warp: out(x,y,c) = f[x + flow.dx(x,y), y + flow.dy(x,y), c], with
// displacements rounded to the nearest cell and out-of-bounds sources read
// as zero. bilinear = true samples with bilinear weights instead.
Grid affine_warp(const Grid& f, const FlowField& flow, bool bilinear = false);

Grid clip01(const Grid& g);

} // namespace v2xsim
