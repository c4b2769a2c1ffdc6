#include <doctest.h>

#include <cmath>
#include <set>

#include "v2xsim/dpp.hpp"
#include "v2xsim/rng.hpp"

using namespace v2xsim;

namespace {

// blob with a strict peak and the same 0.05 support cutoff the world
// rasterizer applies, so heatmap support matches label support exactly
void stamp_blob(Grid& g, int cx, int cy, int radius = 2) {
    for (int dy = -radius; dy <= radius; ++dy)
        for (int dx = -radius; dx <= radius; ++dx) {
            int x = cx + dx, y = cy + dy;
            if (!g.in_bounds(x, y)) continue;
            float v = static_cast<float>(
                std::exp(-0.5 * (dx * dx + dy * dy) / 1.2));
            if (v < 0.05f) continue;
            if (v > g.at(x, y)) g.at(x, y) = v;
        }
}

void stamp_labels(std::vector<int32_t>& labels, int w, int cx, int cy, int id,
                  int h, int radius = 2) {
    for (int dy = -radius; dy <= radius; ++dy)
        for (int dx = -radius; dx <= radius; ++dx) {
            int x = cx + dx, y = cy + dy;
            if (x < 0 || x >= w || y < 0 || y >= h) continue;
            if (std::exp(-0.5 * (dx * dx + dy * dy) / 1.2) < 0.05) continue;
            labels[static_cast<size_t>(y) * w + x] = id;
        }
}

int argmax_x(const Grid& g, int* out_y = nullptr) {
    int bx = -1, by = -1;
    float best = -1.0f;
    for (int y = 0; y < g.height(); ++y)
        for (int x = 0; x < g.width(); ++x)
            if (g.at(x, y) > best) {
                best = g.at(x, y);
                bx = x;
                by = y;
            }
    if (out_y) *out_y = by;
    return bx;
}

} // namespace

TEST_CASE("history enforces ordering and capacity") {
    HeatmapHistory h(2);
    CHECK_THROWS(HeatmapHistory(1));
    h.push(0.0, Grid(4, 4, 1));
    CHECK_THROWS(h.push(0.0, Grid(4, 4, 1)));
    h.push(100.0, Grid(4, 4, 1));
    h.push(200.0, Grid(4, 4, 1));
    CHECK(h.size() == 2);
    CHECK(h.latest_time_ms() == 200.0);
}

TEST_CASE("predict_iterative: n=0 returns the latest frame bit-identically") {
    HeatmapHistory h(3);
    Grid a(8, 8, 1);
    stamp_blob(a, 3, 3);
    Grid b(8, 8, 1);
    stamp_blob(b, 4, 3);
    h.push(0.0, a);
    h.push(100.0, b);
    StaticPredictor pred;
    Grid out = predict_iterative(h, 0, pred);
    CHECK(out.values() == b.values());
}

TEST_CASE("predict_iterative: requires two frames") {
    HeatmapHistory h(3);
    h.push(0.0, Grid(4, 4, 1));
    StaticPredictor pred;
    CHECK_THROWS(predict_iterative(h, 1, pred));
}

TEST_CASE("cv predictor: identical frames stay put") {
    Grid f(16, 16, 1);
    stamp_blob(f, 8, 8);
    ConstantVelocityPredictor pred;
    Grid out = pred.predict(f, f);
    CHECK(out.values() == f.values());
}

TEST_CASE("cv predictor: single blob extrapolates by its displacement") {
    Grid prev(20, 20, 1), curr(20, 20, 1);
    stamp_blob(prev, 6, 10);
    stamp_blob(curr, 7, 10); // moved (1, 0)
    ConstantVelocityPredictor pred;
    Grid next = pred.predict(prev, curr);
    int y = 0;
    CHECK(argmax_x(next, &y) == 8);
    CHECK(y == 10);
}

TEST_CASE("cv predictor: two blobs extrapolate independently") {
    // brute-force expectation on a small grid: nearest-centroid matching is
    // unambiguous, each blob carries its own velocity
    Grid prev(24, 24, 1), curr(24, 24, 1);
    stamp_blob(prev, 5, 5);
    stamp_blob(curr, 6, 5); // blob A: (+1, 0)
    stamp_blob(prev, 16, 16);
    stamp_blob(curr, 16, 15); // blob B: (0, -1)
    ConstantVelocityPredictor pred;
    Grid next = pred.predict(prev, curr);
    CHECK(next.at(7, 5) == doctest::Approx(1.0f));
    CHECK(next.at(16, 14) == doctest::Approx(1.0f));
    CHECK(next.at(6, 5) < 1.0f);
}

TEST_CASE("predict_iterative with cv predictor tracks constant motion") {
    HeatmapHistory h(3);
    Grid a(32, 16, 1), b(32, 16, 1);
    stamp_blob(a, 5, 8);
    stamp_blob(b, 7, 8); // two cells per frame
    h.push(0.0, a);
    h.push(100.0, b);
    ConstantVelocityPredictor pred;
    Grid out = predict_iterative(h, 2, pred);
    int y = 0;
    CHECK(argmax_x(out, &y) == 11);
    CHECK(y == 8);

    // static scene stays unchanged for any n
    HeatmapHistory hs(3);
    hs.push(0.0, a);
    Grid a2 = a;
    hs.push(100.0, a2);
    Grid still = predict_iterative(hs, 3, pred);
    CHECK(still.values() == a.values());
}

TEST_CASE("extract_flow_oracle: constructed two-cell instance") {
    const int H = 8, W = 8;
    std::vector<int32_t> t(H * W, -1), tr(H * W, -1);
    // instance 5 occupies {(2,2),(2,3)} then {(4,2),(4,3)}
    t[2 * W + 2] = 5;
    t[3 * W + 2] = 5;
    tr[2 * W + 4] = 5;
    tr[3 * W + 4] = 5;
    FlowField flow = extract_flow_oracle(t, tr, H, W);
    CHECK(flow.dx(2, 2) == 2.0f);
    CHECK(flow.dy(2, 2) == 0.0f);
    CHECK(flow.dx(2, 3) == 2.0f);
    CHECK(flow.dx(0, 0) == 0.0f);
}

TEST_CASE("extract_flow_oracle: static scene yields zero flow") {
    const int H = 6, W = 6;
    std::vector<int32_t> t(H * W, -1);
    t[2 * W + 3] = 1;
    FlowField flow = extract_flow_oracle(t, t, H, W);
    CHECK(flow.zero());
}

TEST_CASE("extract_flow_oracle: two instances carry their own displacement") {
    const int H = 12, W = 12;
    std::vector<int32_t> t(H * W, -1), tr(H * W, -1);
    auto set = [&](std::vector<int32_t>& l, int x, int y, int id) {
        l[static_cast<size_t>(y) * W + x] = id;
    };
    set(t, 2, 2, 1);
    set(tr, 3, 2, 1); // (+1, 0)
    set(t, 8, 8, 2);
    set(tr, 8, 7, 2); // (0, -1)
    FlowField flow = extract_flow_oracle(t, tr, H, W);
    CHECK(flow.dx(2, 2) == 1.0f);
    CHECK(flow.dy(2, 2) == 0.0f);
    CHECK(flow.dx(8, 8) == 0.0f);
    CHECK(flow.dy(8, 8) == -1.0f);
    CHECK(flow.dx(5, 5) == 0.0f);
}

TEST_CASE("extract_flow_oracle: unmatched instances are flagged with zero flow") {
    const int H = 6, W = 6;
    std::vector<int32_t> t(H * W, -1), tr(H * W, -1);
    t[2 * W + 2] = 7; // disappears
    tr[4 * W + 4] = 9; // appears
    FlowReport report;
    FlowField flow = extract_flow_oracle(t, tr, H, W, &report);
    CHECK(flow.zero());
    CHECK(report.unmatched_instances.size() == 2);
}

TEST_CASE("estimate_flow: single shifted blob") {
    Grid a(24, 24, 1), b(24, 24, 1);
    stamp_blob(a, 10, 10);
    stamp_blob(b, 13, 11); // (+3, +1)
    FlowField flow = estimate_flow(a, b);
    CHECK(flow.dx(10, 10) == 3.0f);
    CHECK(flow.dy(10, 10) == 1.0f);
    // support cells carry the displacement too
    CHECK(flow.dx(9, 10) == 3.0f);
    // empty frames give zero flow
    Grid e1(8, 8, 1), e2(8, 8, 1);
    CHECK(estimate_flow(e1, e2).zero());
}

TEST_CASE("estimate_flow never invents motion on zero-difference frames") {
    Rng rng(5);
    for (int rep = 0; rep < 10; ++rep) {
        Grid g(20, 20, 1);
        int n = 1 + static_cast<int>(rng.next_below(3));
        for (int i = 0; i < n; ++i)
            stamp_blob(g, 3 + static_cast<int>(rng.next_below(14)),
                       3 + static_cast<int>(rng.next_below(14)));
        CHECK(estimate_flow(g, g).zero());
    }
}

TEST_CASE("estimate_flow equals the oracle on separated random scenes") {
    // blobs placed with pairwise separation > 2 * (blob radius + max shift),
    // shifts integer in [-3, 3]
    Rng rng(71);
    const int H = 48, W = 48, radius = 2, max_shift = 3;
    const int min_sep = 2 * (radius + max_shift) + 3;
    int checked_scenes = 0;
    for (int rep = 0; rep < 60; ++rep) {
        std::vector<std::pair<int, int>> centers;
        int attempts = 0;
        while (centers.size() < 3 && attempts++ < 200) {
            int x = radius + max_shift + 1 +
                    static_cast<int>(rng.next_below(W - 2 * (radius + max_shift) - 2));
            int y = radius + max_shift + 1 +
                    static_cast<int>(rng.next_below(H - 2 * (radius + max_shift) - 2));
            bool ok = true;
            for (auto [px, py] : centers)
                if (std::hypot(px - x, py - y) < min_sep) ok = false;
            if (ok) centers.emplace_back(x, y);
        }
        if (centers.size() < 2) continue;
        Grid a(H, W, 1), b(H, W, 1);
        std::vector<int32_t> la(H * W, -1), lb(H * W, -1);
        for (size_t i = 0; i < centers.size(); ++i) {
            int dx = static_cast<int>(rng.next_below(2 * max_shift + 1)) - max_shift;
            int dy = static_cast<int>(rng.next_below(2 * max_shift + 1)) - max_shift;
            stamp_blob(a, centers[i].first, centers[i].second, radius);
            stamp_blob(b, centers[i].first + dx, centers[i].second + dy, radius);
            stamp_labels(la, W, centers[i].first, centers[i].second,
                         static_cast<int>(i), H, radius);
            stamp_labels(lb, W, centers[i].first + dx, centers[i].second + dy,
                         static_cast<int>(i), H, radius);
        }
        FlowField oracle = extract_flow_oracle(la, lb, H, W);
        BlobMatchConfig cfg;
        cfg.search_radius_cells = max_shift * std::sqrt(2.0) + 0.5; // diagonal shifts
        FlowField est = estimate_flow(a, b, cfg);
        size_t mismatched = 0;
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x)
                if (est.dx(x, y) != oracle.dx(x, y) || est.dy(x, y) != oracle.dy(x, y))
                    ++mismatched;
        CHECK(mismatched == 0);
        ++checked_scenes;
    }
    CHECK(checked_scenes >= 40);
}

TEST_CASE("motion_to_gather_field and warp_forward move mass forward") {
    Grid g(10, 10, 2);
    g.at(4, 4, 0) = 1.0f;
    g.at(4, 4, 1) = 0.5f;
    FlowField motion(10, 10);
    motion.dx(4, 4) = 2.0f;
    motion.dy(4, 4) = 1.0f;
    Grid out = warp_forward(g, motion);
    CHECK(out.at(6, 5, 0) == 1.0f);
    CHECK(out.at(6, 5, 1) == 0.5f);
    CHECK(out.at(4, 4, 0) == 0.0f);
}

TEST_CASE("dpp_pipeline: sub-interval latency is the identity path") {
    HeatmapHistory h(3);
    Grid a(16, 16, 1), b(16, 16, 1);
    stamp_blob(a, 5, 8);
    stamp_blob(b, 6, 8);
    h.push(0.0, a);
    h.push(100.0, b);
    Grid features(16, 16, 4);
    features.at(6, 8, 2) = 2.5f;
    ConstantVelocityPredictor pred;
    DppResult r = dpp_pipeline(features, h, 80.0, 100.0, pred);
    CHECK(r.n_steps == 0);
    CHECK(r.warped_features.values() == features.values());
}

TEST_CASE("dpp_pipeline: one step moves features with the heatmap") {
    HeatmapHistory h(3);
    Grid a(24, 24, 1), b(24, 24, 1);
    stamp_blob(a, 5, 12);
    stamp_blob(b, 7, 12); // two cells per frame
    h.push(0.0, a);
    h.push(100.0, b);
    Grid features(24, 24, 2);
    features.at(7, 12, 0) = 1.0f;
    features.at(7, 12, 1) = 4.0f;
    ConstantVelocityPredictor pred;
    DppResult r = dpp_pipeline(features, h, 150.0, 100.0, pred);
    CHECK(r.n_steps == 1);
    CHECK(r.warped_features.at(9, 12, 1) == 4.0f);
    CHECK(r.warped_features.at(7, 12, 1) == 0.0f);
    int y = 0;
    CHECK(argmax_x(r.predicted_heatmap, &y) == 9);
    CHECK(y == 12);

    // static scene: features pass through for any n
    HeatmapHistory hs(3);
    hs.push(0.0, a);
    Grid a2 = a;
    hs.push(100.0, a2);
    Grid static_features(24, 24, 2);
    static_features.at(5, 12, 0) = 1.0f;
    DppResult rs = dpp_pipeline(static_features, hs, 350.0, 100.0, pred);
    CHECK(rs.n_steps == 3);
    CHECK(rs.warped_features.values() == static_features.values());
}
