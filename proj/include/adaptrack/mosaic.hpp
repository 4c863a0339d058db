#pragma once

#include <adaptrack/geometry.hpp>
#include <adaptrack/image.hpp>

#include <nlohmann/json_fwd.hpp>

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace adaptrack {

enum class Domain { source, target };

const char* to_string(Domain d) noexcept;

/// Integer pixel rectangle.
struct PixelRect {
    int x = 0;
    int y = 0;
    int w = 0;
    int h = 0;

    BBox box() const noexcept { return {double(x), double(y), double(w), double(h)}; }
    bool operator==(const PixelRect&) const = default;
};

struct LabeledBox {
    BBox bbox;
    int class_id = 1;
};

/// One image of D^S or pseudo-labelled D^T; boxes lie inside the image.
struct LabeledSample {
    std::string image_ref;
    int width = 0;
    int height = 0;
    std::vector<LabeledBox> boxes;
    Domain domain = Domain::source;
};

struct MosaicTile {
    std::string image_ref;
    Domain domain = Domain::source;
    std::size_t pool_index = 0;
    int image_w = 0;
    int image_h = 0;
    double scale = 1.0;
    PixelRect placement;  // on the canvas
    PixelRect crop;       // inside the scaled image, same size as placement

    bool operator==(const MosaicTile&) const = default;
};

/// Tiles are ordered top-left, top-right, bottom-left, bottom-right and meet at the center.
struct MosaicSpec {
    int canvas_w = 0;
    int canvas_h = 0;
    int center_x = 0;
    int center_y = 0;
    std::array<MosaicTile, 4> tiles;
    std::uint64_t seed = 0;

    bool operator==(const MosaicSpec&) const = default;
};

enum class Interpolation { nearest, bilinear };

struct MosaicConfig {
    int canvas_w = 1280;
    int canvas_h = 1280;
    int n_source = 2;
    int n_target = 2;
    double jitter_lo = 0.25;
    double jitter_hi = 0.75;
    double min_size = 2.0;
    Interpolation interpolation = Interpolation::nearest;

    void validate() const;
};

void to_json(nlohmann::json& j, const MosaicSpec& s);
void from_json(const nlohmann::json& j, MosaicSpec& s);

/// Deterministic in (pools, config, seed). Throws ValidationError naming the
/// domain when a pool with a positive tile count is empty.
MosaicSpec plan_mosaic(const std::vector<LabeledSample>& source_pool, const std::vector<LabeledSample>& target_pool,
                       const MosaicConfig& config, std::uint64_t seed);

/// Affine map (x, y, w, h) -> (x s + dx, y s + dy, w s, h s) clipped to `clip`.
/// Empty when the clipped width or height is below min_size or not positive.
std::optional<BBox> remap_bbox(const BBox& b, double scale, double dx, double dy, const BBox& clip,
                               double min_size);

struct MosaicBox {
    BBox bbox;
    int class_id = 1;
    Domain domain = Domain::source;
    std::size_t tile = 0;
};

struct MosaicResult {
    Image canvas;
    std::vector<MosaicBox> boxes;
};

/// Renders the canvas from the four tile samples (in tile order) and remaps their boxes.
MosaicResult compose(const MosaicSpec& spec, const std::array<const LabeledSample*, 4>& samples,
                     const std::array<const Image*, 4>& images, const MosaicConfig& config);

/// Loads every frame of every MOT-style sequence under `root`
/// (`<SEQ>/seqinfo.ini`, `<SEQ>/gt/gt.txt`) as a labelled sample.
std::vector<LabeledSample> load_pool(const std::filesystem::path& root, Domain domain);

struct BatchItem {
    std::filesystem::path image;
    std::filesystem::path annotations;
};

/// Writes `count` mosaics as `mosaic_NNNNNN.png` / `.txt` plus `manifest.json`
/// (a JSON list, one entry per mosaic). Item i uses seed ^ i.
std::vector<BatchItem> sample_batch(const std::vector<LabeledSample>& source_pool,
                                    const std::vector<LabeledSample>& target_pool, const MosaicConfig& config,
                                    std::size_t count, std::uint64_t seed, const std::filesystem::path& out_dir);

}  // namespace adaptrack
