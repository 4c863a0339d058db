#include "synth.hpp"

#include <adaptrack/error.hpp>
#include <adaptrack/mosaic.hpp>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <fstream>
#include <sstream>

using namespace adaptrack;

namespace {

std::vector<LabeledSample> pool(Domain d, Rng& rng, std::size_t n) {
    std::vector<LabeledSample> out;
    for (std::size_t i = 0; i < n; ++i) {
        LabeledSample s;
        s.image_ref = std::string(to_string(d)) + std::to_string(i);
        s.width = 4 + static_cast<int>(rng.below(60));
        s.height = 4 + static_cast<int>(rng.below(60));
        s.domain = d;
        for (int k = 0; k < 3; ++k) {
            const double x = rng.uniform() * (s.width - 1);
            const double y = rng.uniform() * (s.height - 1);
            s.boxes.push_back({{x, y, 1 + rng.uniform() * (s.width - x - 1), 1 + rng.uniform() * (s.height - y - 1)}, 1});
        }
        out.push_back(s);
    }
    return out;
}

Image patterned(int w, int h, int salt) {
    Image img(w, h, 3);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            auto* p = img.at(x, y);
            p[0] = static_cast<std::uint8_t>(x * 16 + salt);
            p[1] = static_cast<std::uint8_t>(y * 16);
            p[2] = static_cast<std::uint8_t>(salt * 40);
        }
    }
    return img;
}

}  // namespace

TEST(Mosaic, RemapExample) {
    const auto b = remap_bbox({10, 10, 20, 20}, 0.5, 320, 0, {0, 0, 1e6, 1e6}, 2.0);
    ASSERT_TRUE(b);
    EXPECT_EQ(*b, (BBox{325, 5, 10, 10}));
}

TEST(Mosaic, RemapIdentityAndOutside) {
    const BBox b{1.25, 2.5, 7.75, 3.0};
    const double inf = std::numeric_limits<double>::infinity();
    EXPECT_EQ(*remap_bbox(b, 1.0, 0, 0, {-1e300, -1e300, inf, inf}, 0.0), b);
    EXPECT_FALSE(remap_bbox(b, 1.0, 100, 100, {0, 0, 50, 50}, 0.0));
}

TEST(Mosaic, RemapClipsAndDropsSlivers) {
    const auto b = remap_bbox({0, 0, 10, 10}, 1.0, 0, 0, {5, 0, 100, 100}, 2.0);
    ASSERT_TRUE(b);
    EXPECT_EQ(*b, (BBox{5, 0, 5, 10}));
    EXPECT_FALSE(remap_bbox({0, 0, 10, 10}, 1.0, 0, 0, {9, 0, 100, 100}, 2.0));
}

TEST(Mosaic, UnclippedRemapInverts) {
    Rng rng(3);
    for (int i = 0; i < 500; ++i) {
        const BBox b{rng.uniform() * 100, rng.uniform() * 100, 1 + rng.uniform() * 50, 1 + rng.uniform() * 50};
        const double s = 0.1 + rng.uniform() * 4;
        const double dx = rng.uniform() * 500 - 250;
        const double dy = rng.uniform() * 500 - 250;
        const auto m = remap_bbox(b, s, dx, dy, {-1e9, -1e9, 2e9, 2e9}, 0.0);
        ASSERT_TRUE(m);
        EXPECT_NEAR((m->x - dx) / s, b.x, 1e-9);
        EXPECT_NEAR((m->y - dy) / s, b.y, 1e-9);
        EXPECT_NEAR(m->w / s, b.w, 1e-9);
        EXPECT_NEAR(m->h / s, b.h, 1e-9);
    }
}

TEST(Mosaic, PlanTilesCanvasAndHonoursMix) {
    Rng rng(1);
    const auto src = pool(Domain::source, rng, 5);
    const auto tgt = pool(Domain::target, rng, 5);
    MosaicConfig cfg;
    cfg.canvas_w = 97;
    cfg.canvas_h = 61;
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        const auto spec = plan_mosaic(src, tgt, cfg, seed);
        long area = 0;
        int n_src = 0;
        for (const auto& t : spec.tiles) {
            area += static_cast<long>(t.placement.w) * t.placement.h;
            n_src += t.domain == Domain::source;
            EXPECT_GE(t.image_w * t.scale, t.placement.w - 1e-9);
            EXPECT_GE(t.image_h * t.scale, t.placement.h - 1e-9);
        }
        EXPECT_EQ(area, 97L * 61L);
        EXPECT_EQ(n_src, 2);
        EXPECT_GE(spec.center_x, static_cast<int>(0.25 * 97) - 1);
        EXPECT_LE(spec.center_x, static_cast<int>(0.75 * 97) + 1);
        EXPECT_EQ(spec, plan_mosaic(src, tgt, cfg, seed));
    }
}

TEST(Mosaic, FixedCenterAndPureMix) {
    Rng rng(2);
    const auto src = pool(Domain::source, rng, 3);
    MosaicConfig cfg;
    cfg.n_source = 4;
    cfg.n_target = 0;
    cfg.jitter_lo = cfg.jitter_hi = 0.5;
    const auto spec = plan_mosaic(src, {}, cfg, 9);
    EXPECT_EQ(spec.center_x, 640);
    EXPECT_EQ(spec.center_y, 640);
    for (const auto& t : spec.tiles) {
        EXPECT_EQ(t.domain, Domain::source);
    }
    cfg.n_source = 2;
    cfg.n_target = 2;
    EXPECT_THROW(plan_mosaic(src, {}, cfg, 9), ValidationError);
}

TEST(Mosaic, SpecJsonRoundTrip) {
    Rng rng(6);
    const auto src = pool(Domain::source, rng, 3);
    const auto tgt = pool(Domain::target, rng, 3);
    const auto spec = plan_mosaic(src, tgt, {}, 42);
    const nlohmann::json j = spec;
    EXPECT_EQ(j.get<MosaicSpec>(), spec);
}

TEST(Mosaic, ComposeBoxesStayInsideTiles) {
    Rng rng(10);
    const auto src = pool(Domain::source, rng, 4);
    const auto tgt = pool(Domain::target, rng, 4);
    MosaicConfig cfg;
    cfg.canvas_w = 64;
    cfg.canvas_h = 48;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const auto spec = plan_mosaic(src, tgt, cfg, seed);
        std::array<const LabeledSample*, 4> samples{};
        std::array<Image, 4> images;
        std::array<const Image*, 4> image_ptrs{};
        std::size_t in_boxes = 0;
        for (std::size_t t = 0; t < 4; ++t) {
            const auto& p = spec.tiles[t].domain == Domain::source ? src : tgt;
            samples[t] = &p[spec.tiles[t].pool_index];
            images[t] = Image(samples[t]->width, samples[t]->height);
            image_ptrs[t] = &images[t];
            in_boxes += samples[t]->boxes.size();
        }
        const auto r = compose(spec, samples, image_ptrs, cfg);
        EXPECT_LE(r.boxes.size(), in_boxes);
        for (const auto& b : r.boxes) {
            EXPECT_TRUE(contains({0, 0, 64, 48}, b.bbox));
            EXPECT_TRUE(contains(spec.tiles[b.tile].placement.box(), b.bbox));
            EXPECT_EQ(b.domain, spec.tiles[b.tile].domain);
        }
    }
}

TEST(Mosaic, NearestPixelsFollowIndexArithmetic) {
    std::vector<LabeledSample> src, tgt;
    std::vector<Image> imgs;
    for (int i = 0; i < 4; ++i) {
        (i < 2 ? src : tgt).push_back({"img" + std::to_string(i), 4, 4, {}, i < 2 ? Domain::source : Domain::target});
    }
    MosaicConfig cfg;
    cfg.canvas_w = 16;
    cfg.canvas_h = 12;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const auto spec = plan_mosaic(src, tgt, cfg, seed);
        std::array<const LabeledSample*, 4> samples{};
        std::array<Image, 4> images;
        std::array<const Image*, 4> ptrs{};
        for (std::size_t t = 0; t < 4; ++t) {
            const auto& p = spec.tiles[t].domain == Domain::source ? src : tgt;
            samples[t] = &p[spec.tiles[t].pool_index];
            images[t] = patterned(4, 4, static_cast<int>(t));
            ptrs[t] = &images[t];
        }
        const auto r = compose(spec, samples, ptrs, cfg);
        for (std::size_t t = 0; t < 4; ++t) {
            const auto& tile = spec.tiles[t];
            for (int v = 0; v < tile.placement.h; ++v) {
                for (int u = 0; u < tile.placement.w; ++u) {
                    const int sx = std::min(3, static_cast<int>((tile.crop.x + u) / tile.scale));
                    const int sy = std::min(3, static_cast<int>((tile.crop.y + v) / tile.scale));
                    const auto* want = images[t].at(sx, sy);
                    const auto* got = r.canvas.at(tile.placement.x + u, tile.placement.y + v);
                    ASSERT_TRUE(std::equal(want, want + 3, got)) << "seed " << seed << " tile " << t;
                }
            }
        }
    }
}

TEST(Mosaic, DimensionMismatchIsReported) {
    std::vector<LabeledSample> src{{"a", 8, 8, {}, Domain::source}};
    MosaicConfig cfg;
    cfg.n_source = 4;
    cfg.n_target = 0;
    cfg.canvas_w = cfg.canvas_h = 16;
    const auto spec = plan_mosaic(src, {}, cfg, 1);
    Image wrong(7, 8);
    EXPECT_THROW(compose(spec, {&src[0], &src[0], &src[0], &src[0]}, {&wrong, &wrong, &wrong, &wrong}, cfg),
                 ValidationError);
}

TEST(Mosaic, BatchIsReproducible) {
    const auto root = synth::temp_dir("mosaic");
    synth::write_sequence(root / "src", "A", 3, 40, 30, synth::linear_sequence(1, 3, 1.0), {}, 30);
    synth::write_sequence(root / "tgt", "B", 2, 50, 20, {{1, 1, {5, 5, 10, 10}, 1, 1, 1}}, {}, 90);
    const auto src = load_pool(root / "src", Domain::source);
    const auto tgt = load_pool(root / "tgt", Domain::target);
    ASSERT_EQ(src.size(), 3u);
    ASSERT_EQ(tgt.size(), 2u);
    MosaicConfig cfg;
    cfg.canvas_w = 64;
    cfg.canvas_h = 64;
    sample_batch(src, tgt, cfg, 10, 5, root / "a");
    sample_batch(src, tgt, cfg, 10, 5, root / "b");
    auto slurp = [](const std::filesystem::path& p) {
        std::ifstream in(p, std::ios::binary);
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };
    EXPECT_EQ(slurp(root / "a" / "manifest.json"), slurp(root / "b" / "manifest.json"));
    EXPECT_EQ(slurp(root / "a" / "mosaic_000003.txt"), slurp(root / "b" / "mosaic_000003.txt"));
    const auto manifest = nlohmann::json::parse(slurp(root / "a" / "manifest.json"));
    ASSERT_EQ(manifest.size(), 10u);
    int sources = 0, targets = 0;
    for (const auto& item : manifest) {
        for (const auto& t : item["tiles"]) {
            (t["domain"] == "source" ? sources : targets)++;
        }
    }
    EXPECT_EQ(sources, 20);
    EXPECT_EQ(targets, 20);
    const auto img = read_image(root / "a" / "mosaic_000000.png");
    EXPECT_EQ(img.width, 64);
    sample_batch(src, tgt, cfg, 0, 5, root / "empty");
    EXPECT_EQ(nlohmann::json::parse(slurp(root / "empty" / "manifest.json")).size(), 0u);
    std::filesystem::remove_all(root);
}
