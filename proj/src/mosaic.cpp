#include <adaptrack/error.hpp>
#include <adaptrack/mosaic.hpp>
#include <adaptrack/mot_format.hpp>
#include <adaptrack/rng.hpp>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <map>

namespace adaptrack {

const char* to_string(Domain d) noexcept {
    return d == Domain::source ? "source" : "target";
}

namespace {

Domain parse_domain(const std::string& s) {
    if (s == "source") {
        return Domain::source;
    }
    if (s == "target") {
        return Domain::target;
    }
    throw ValidationError("unknown domain '" + s + "'");
}

std::string item_stem(std::size_t index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "mosaic_%06zu", index);
    return buf;
}

void check_tiling(const MosaicSpec& spec) {
    const int cx = spec.center_x;
    const int cy = spec.center_y;
    const int w = spec.canvas_w;
    const int h = spec.canvas_h;
    const std::array<PixelRect, 4> expected{
        PixelRect{0, 0, cx, cy}, PixelRect{cx, 0, w - cx, cy}, PixelRect{0, cy, cx, h - cy},
        PixelRect{cx, cy, w - cx, h - cy}};
    for (std::size_t i = 0; i < 4; ++i) {
        const auto& t = spec.tiles[i];
        if (!(t.placement == expected[i])) {
            throw ValidationError("mosaic spec: tile " + std::to_string(i) + " does not tile the canvas");
        }
        if (t.crop.w != t.placement.w || t.crop.h != t.placement.h || t.crop.x < 0 || t.crop.y < 0 ||
            !(t.scale > 0.0)) {
            throw ValidationError("mosaic spec: tile " + std::to_string(i) + " has an inconsistent crop");
        }
    }
}

}  // namespace

void MosaicConfig::validate() const {
    if (canvas_w < 2 || canvas_h < 2) {
        throw ValidationError("mosaic: canvas must be at least 2x2");
    }
    if (n_source < 0 || n_target < 0 || n_source + n_target != 4) {
        throw ValidationError("mosaic: mix must be two non-negative counts summing to 4");
    }
    if (!(jitter_lo > 0.0 && jitter_lo <= jitter_hi && jitter_hi < 1.0)) {
        throw ValidationError("mosaic: jitter needs 0 < lo <= hi < 1");
    }
    if (!(min_size >= 0.0)) {
        throw ValidationError("mosaic: min_size must be non-negative");
    }
}

void to_json(nlohmann::json& j, const MosaicSpec& s) {
    auto rect = [](const PixelRect& r) { return nlohmann::json::array({r.x, r.y, r.w, r.h}); };
    nlohmann::json tiles = nlohmann::json::array();
    for (const auto& t : s.tiles) {
        tiles.push_back({{"image_ref", t.image_ref},
                         {"domain", to_string(t.domain)},
                         {"pool_index", t.pool_index},
                         {"image_size", {t.image_w, t.image_h}},
                         {"scale", t.scale},
                         {"placement", rect(t.placement)},
                         {"crop", rect(t.crop)}});
    }
    j = {{"canvas", {s.canvas_w, s.canvas_h}},
         {"center", {s.center_x, s.center_y}},
         {"seed", s.seed},
         {"tiles", std::move(tiles)}};
}

void from_json(const nlohmann::json& j, MosaicSpec& s) {
    auto rect = [](const nlohmann::json& r) {
        return PixelRect{r.at(0).get<int>(), r.at(1).get<int>(), r.at(2).get<int>(), r.at(3).get<int>()};
    };
    s.canvas_w = j.at("canvas").at(0).get<int>();
    s.canvas_h = j.at("canvas").at(1).get<int>();
    s.center_x = j.at("center").at(0).get<int>();
    s.center_y = j.at("center").at(1).get<int>();
    s.seed = j.at("seed").get<std::uint64_t>();
    const auto& tiles = j.at("tiles");
    if (tiles.size() != 4) {
        throw ValidationError("mosaic spec: expected 4 tiles");
    }
    for (std::size_t i = 0; i < 4; ++i) {
        const auto& t = tiles[i];
        auto& out = s.tiles[i];
        out.image_ref = t.at("image_ref").get<std::string>();
        out.domain = parse_domain(t.at("domain").get<std::string>());
        out.pool_index = t.at("pool_index").get<std::size_t>();
        out.image_w = t.at("image_size").at(0).get<int>();
        out.image_h = t.at("image_size").at(1).get<int>();
        out.scale = t.at("scale").get<double>();
        out.placement = rect(t.at("placement"));
        out.crop = rect(t.at("crop"));
    }
}

MosaicSpec plan_mosaic(const std::vector<LabeledSample>& source_pool, const std::vector<LabeledSample>& target_pool,
                       const MosaicConfig& config, std::uint64_t seed) {
    config.validate();
    if (config.n_source > 0 && source_pool.empty()) {
        throw ValidationError("mosaic: source pool is empty");
    }
    if (config.n_target > 0 && target_pool.empty()) {
        throw ValidationError("mosaic: target pool is empty");
    }

    Rng rng(seed);
    MosaicSpec spec;
    spec.seed = seed;
    spec.canvas_w = config.canvas_w;
    spec.canvas_h = config.canvas_h;
    auto jittered = [&](int extent) {
        const double u = config.jitter_lo + (config.jitter_hi - config.jitter_lo) * rng.uniform();
        return std::clamp(static_cast<int>(std::floor(u * extent)), 1, extent - 1);
    };
    spec.center_x = jittered(config.canvas_w);
    spec.center_y = jittered(config.canvas_h);

    std::array<Domain, 4> domains{};
    for (int i = 0; i < 4; ++i) {
        domains[static_cast<std::size_t>(i)] = i < config.n_source ? Domain::source : Domain::target;
    }
    for (std::size_t i = 3; i > 0; --i) {
        std::swap(domains[i], domains[rng.below(i + 1)]);
    }

    const int cx = spec.center_x;
    const int cy = spec.center_y;
    const int w = spec.canvas_w;
    const int h = spec.canvas_h;
    const std::array<PixelRect, 4> quadrants{
        PixelRect{0, 0, cx, cy}, PixelRect{cx, 0, w - cx, cy}, PixelRect{0, cy, cx, h - cy},
        PixelRect{cx, cy, w - cx, h - cy}};

    for (std::size_t q = 0; q < 4; ++q) {
        const auto& pool = domains[q] == Domain::source ? source_pool : target_pool;
        const std::size_t pick = rng.below(pool.size());
        const auto& sample = pool[pick];
        if (sample.width < 1 || sample.height < 1) {
            throw ValidationError("mosaic: sample " + sample.image_ref + " has no size");
        }
        MosaicTile& tile = spec.tiles[q];
        tile.image_ref = sample.image_ref;
        tile.domain = domains[q];
        tile.pool_index = pick;
        tile.image_w = sample.width;
        tile.image_h = sample.height;
        tile.placement = quadrants[q];

        const int qw = quadrants[q].w;
        const int qh = quadrants[q].h;
        tile.scale = std::max(static_cast<double>(qw) / sample.width, static_cast<double>(qh) / sample.height);
        const int sw = std::max(qw, static_cast<int>(std::ceil(sample.width * tile.scale - 1e-9)));
        const int sh = std::max(qh, static_cast<int>(std::ceil(sample.height * tile.scale - 1e-9)));
        // Each image keeps the corner that touches the mosaic center.
        const bool left = q == 0 || q == 2;
        const bool top = q == 0 || q == 1;
        tile.crop = {left ? sw - qw : 0, top ? sh - qh : 0, qw, qh};
    }
    return spec;
}

std::optional<BBox> remap_bbox(const BBox& b, double scale, double dx, double dy, const BBox& clip,
                               double min_size) {
    const BBox mapped{b.x * scale + dx, b.y * scale + dy, b.w * scale, b.h * scale};
    BBox clipped = intersect(mapped, clip);
    // x + w must not overshoot the clip edge by an ulp.
    while (clipped.w > 0.0 && clipped.right() > std::min(mapped.right(), clip.right())) {
        clipped.w = std::nextafter(clipped.w, 0.0);
    }
    while (clipped.h > 0.0 && clipped.bottom() > std::min(mapped.bottom(), clip.bottom())) {
        clipped.h = std::nextafter(clipped.h, 0.0);
    }
    if (!(clipped.w > 0.0) || !(clipped.h > 0.0) || clipped.w < min_size || clipped.h < min_size) {
        return std::nullopt;
    }
    return clipped;
}

MosaicResult compose(const MosaicSpec& spec, const std::array<const LabeledSample*, 4>& samples,
                     const std::array<const Image*, 4>& images, const MosaicConfig& config) {
    check_tiling(spec);
    MosaicResult result;
    const int channels = images[0] ? images[0]->channels : 3;
    result.canvas = Image(spec.canvas_w, spec.canvas_h, channels);

    for (std::size_t t = 0; t < 4; ++t) {
        const auto& tile = spec.tiles[t];
        const Image& img = *images[t];
        if (img.width != tile.image_w || img.height != tile.image_h) {
            throw ValidationError("mosaic: " + tile.image_ref + " is " + std::to_string(img.width) + "x" +
                                  std::to_string(img.height) + ", spec expects " + std::to_string(tile.image_w) +
                                  "x" + std::to_string(tile.image_h));
        }
        if (img.channels != channels) {
            throw ValidationError("mosaic: " + tile.image_ref + " has a different channel count");
        }

        const auto& pr = tile.placement;
        for (int v = 0; v < pr.h; ++v) {
            const double sy = tile.crop.y + v;
            for (int u = 0; u < pr.w; ++u) {
                const double sx = tile.crop.x + u;
                std::uint8_t* dst = result.canvas.at(pr.x + u, pr.y + v);
                if (config.interpolation == Interpolation::nearest) {
                    const int ix = std::min(img.width - 1, static_cast<int>(std::floor(sx / tile.scale)));
                    const int iy = std::min(img.height - 1, static_cast<int>(std::floor(sy / tile.scale)));
                    std::copy_n(img.at(ix, iy), channels, dst);
                } else {
                    const double fx = std::clamp((sx + 0.5) / tile.scale - 0.5, 0.0, img.width - 1.0);
                    const double fy = std::clamp((sy + 0.5) / tile.scale - 0.5, 0.0, img.height - 1.0);
                    const int x0 = static_cast<int>(fx);
                    const int y0 = static_cast<int>(fy);
                    const int x1 = std::min(x0 + 1, img.width - 1);
                    const int y1 = std::min(y0 + 1, img.height - 1);
                    const double ax = fx - x0;
                    const double ay = fy - y0;
                    for (int c = 0; c < channels; ++c) {
                        const double top = (1 - ax) * img.at(x0, y0)[c] + ax * img.at(x1, y0)[c];
                        const double bottom = (1 - ax) * img.at(x0, y1)[c] + ax * img.at(x1, y1)[c];
                        dst[c] = static_cast<std::uint8_t>(std::lround((1 - ay) * top + ay * bottom));
                    }
                }
            }
        }

        const double dx = pr.x - tile.crop.x;
        const double dy = pr.y - tile.crop.y;
        for (const auto& lb : samples[t]->boxes) {
            if (auto box = remap_bbox(lb.bbox, tile.scale, dx, dy, pr.box(), config.min_size)) {
                result.boxes.push_back({*box, lb.class_id, tile.domain, t});
            }
        }
    }
    return result;
}

std::vector<LabeledSample> load_pool(const std::filesystem::path& root, Domain domain) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(root)) {
        throw DataError(root.string() + ": not a directory");
    }
    std::vector<fs::path> sequences;
    for (const auto& entry : fs::directory_iterator(root)) {
        if (entry.is_directory() && fs::exists(entry.path() / "seqinfo.ini")) {
            sequences.push_back(entry.path());
        }
    }
    std::sort(sequences.begin(), sequences.end());

    std::vector<LabeledSample> pool;
    for (const auto& seq : sequences) {
        const auto info = load_seqinfo(seq / "seqinfo.ini");
        std::map<int, std::vector<LabeledBox>> boxes;
        if (fs::exists(seq / "gt" / "gt.txt")) {
            const BBox frame_rect{0.0, 0.0, double(info.width), double(info.height)};
            for (const auto& r : load_ground_truth(seq / "gt" / "gt.txt")) {
                const BBox inside = intersect(r.bbox, frame_rect);
                if (inside.valid()) {
                    boxes[r.frame].push_back({inside, r.class_id});
                }
            }
        }
        for (int f = 1; f <= info.frame_count; ++f) {
            LabeledSample s;
            s.image_ref = info.frame_path(seq, f).string();
            s.width = info.width;
            s.height = info.height;
            s.domain = domain;
            if (auto it = boxes.find(f); it != boxes.end()) {
                s.boxes = std::move(it->second);
            }
            pool.push_back(std::move(s));
        }
    }
    return pool;
}

std::vector<BatchItem> sample_batch(const std::vector<LabeledSample>& source_pool,
                                    const std::vector<LabeledSample>& target_pool, const MosaicConfig& config,
                                    std::size_t count, std::uint64_t seed, const std::filesystem::path& out_dir) {
    namespace fs = std::filesystem;
    config.validate();
    fs::create_directories(out_dir);

    std::vector<nlohmann::json> entries(count);
    std::vector<BatchItem> items(count);
    std::vector<std::exception_ptr> errors(count);
    const auto n = static_cast<std::int64_t>(count);
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t i = 0; i < n; ++i) {
        const auto k = static_cast<std::size_t>(i);
        try {
            const auto spec = plan_mosaic(source_pool, target_pool, config, seed ^ static_cast<std::uint64_t>(k));
            std::array<const LabeledSample*, 4> samples{};
            std::array<Image, 4> images;
            std::array<const Image*, 4> image_ptrs{};
            for (std::size_t t = 0; t < 4; ++t) {
                const auto& tile = spec.tiles[t];
                const auto& pool = tile.domain == Domain::source ? source_pool : target_pool;
                samples[t] = &pool[tile.pool_index];
                images[t] = read_image(tile.image_ref);
                image_ptrs[t] = &images[t];
            }
            const auto result = compose(spec, samples, image_ptrs, config);

            const auto stem = item_stem(k);
            items[k].image = out_dir / (stem + ".png");
            items[k].annotations = out_dir / (stem + ".txt");
            write_png(result.canvas, items[k].image);

            std::vector<TrackRecord> records;
            nlohmann::json boxes = nlohmann::json::array();
            int id = 0;
            for (const auto& b : result.boxes) {
                TrackRecord r;
                r.frame = 1;
                r.track_id = ++id;
                r.bbox = b.bbox;
                r.class_id = b.class_id;
                records.push_back(r);
                boxes.push_back({{"id", id},
                                 {"box", {b.bbox.x, b.bbox.y, b.bbox.w, b.bbox.h}},
                                 {"class", b.class_id},
                                 {"domain", to_string(b.domain)},
                                 {"tile", b.tile}});
            }
            write_annotations(records, items[k].annotations);

            nlohmann::json entry = spec;
            entry["index"] = k;
            entry["image"] = stem + ".png";
            entry["annotations"] = stem + ".txt";
            entry["boxes"] = std::move(boxes);
            entries[k] = std::move(entry);
        } catch (...) {
            errors[k] = std::current_exception();
        }
    }
    for (std::size_t k = 0; k < count; ++k) {
        if (errors[k]) {
            std::rethrow_exception(errors[k]);
        }
    }

    nlohmann::json manifest = nlohmann::json::array();
    for (auto& e : entries) {
        manifest.push_back(std::move(e));
    }
    std::ofstream out(out_dir / "manifest.json", std::ios::binary);
    out << manifest.dump(2) << '\n';
    if (!out) {
        throw DataError((out_dir / "manifest.json").string() + ": write failed");
    }
    spdlog::info("mosaic: wrote {} mosaics to {}", count, out_dir.string());
    return items;
}

}  // namespace adaptrack
