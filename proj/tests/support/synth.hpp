#pragma once

// Synthetic fixtures: sequences, archives and small on-disk datasets.

#include <adaptrack/image.hpp>
#include <adaptrack/mot_format.hpp>
#include <adaptrack/rng.hpp>
#include <adaptrack/tensor_archive.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <tuple>
#include <vector>

namespace synth {

namespace fs = std::filesystem;
using namespace adaptrack;

// Objects in separate horizontal lanes moving at constant velocity.
inline std::vector<TrackRecord> linear_sequence(int objects, int frames, double speed = 3.0) {
    std::vector<TrackRecord> out;
    for (int f = 1; f <= frames; ++f) {
        for (int k = 0; k < objects; ++k) {
            TrackRecord r;
            r.frame = f;
            r.track_id = k + 1;
            const double vx = speed * (1.0 + 0.25 * k) * (k % 2 ? -1.0 : 1.0);
            const double x0 = k % 2 ? 900.0 : 100.0;
            r.bbox = {x0 + vx * (f - 1), 60.0 + 150.0 * k, 40.0 + 4.0 * k, 100.0};
            out.push_back(r);
        }
    }
    return out;
}

inline std::vector<Detection> to_detections(const std::vector<TrackRecord>& records, double confidence = 0.9) {
    std::vector<Detection> out;
    for (const auto& r : records) {
        out.push_back({r.frame, r.bbox, confidence});
    }
    return out;
}

// Small dyadic boxes so IoU arithmetic stays exact enough for equality checks.
inline BBox random_box(Rng& rng, double extent = 32.0) {
    const double x = static_cast<double>(rng.below(static_cast<std::uint64_t>(extent)));
    const double y = static_cast<double>(rng.below(static_cast<std::uint64_t>(extent)));
    return {x, y, 1.0 + static_cast<double>(rng.below(12)), 1.0 + static_cast<double>(rng.below(12))};
}

// Random ground truth plus a noisy prediction of it.
inline std::pair<std::vector<TrackRecord>, std::vector<TrackRecord>> random_tracks(Rng& rng, int max_objects,
                                                                                  int frames) {
    std::vector<TrackRecord> gt, pred;
    const int ng = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_objects)));
    const int np = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_objects)));
    std::vector<BBox> gpos(ng), ppos(np);
    for (auto& b : gpos) {
        b = random_box(rng, 16.0);
    }
    for (auto& b : ppos) {
        b = random_box(rng, 16.0);
    }
    for (int f = 1; f <= frames; ++f) {
        for (int k = 0; k < ng; ++k) {
            gpos[k].x += static_cast<double>(rng.below(3)) - 1.0;
            if (rng.uniform() < 0.85) {
                gt.push_back({f, k + 1, gpos[k], 1.0, 1, 1.0});
            }
        }
        for (int k = 0; k < np; ++k) {
            // Predictions mostly shadow a GT box, with jitter and id churn.
            BBox b = ppos[k];
            if (k < ng && rng.uniform() < 0.7) {
                b = gpos[k];
                b.x += static_cast<double>(rng.below(3)) - 1.0;
                b.w += static_cast<double>(rng.below(2));
            }
            if (rng.uniform() < 0.8) {
                const int id = rng.uniform() < 0.15 ? 10 + k : k + 1;
                pred.push_back({f, id, b, 0.9, 1, 1.0});
            }
        }
    }
    // An id can appear at most once per frame.
    std::sort(pred.begin(), pred.end(), [](const auto& a, const auto& b) {
        return std::tie(a.frame, a.track_id) < std::tie(b.frame, b.track_id);
    });
    pred.erase(std::unique(pred.begin(), pred.end(),
                           [](const auto& a, const auto& b) { return a.frame == b.frame && a.track_id == b.track_id; }),
               pred.end());
    return {gt, pred};
}

inline TensorArchive random_archive(Rng& rng, std::size_t max_entries = 5) {
    TensorArchive a;
    const std::size_t n = rng.below(max_entries + 1);
    for (std::size_t i = 0; i < n; ++i) {
        Tensor t;
        const std::size_t rank = rng.below(4);
        for (std::size_t d = 0; d < rank; ++d) {
            t.shape.push_back(1 + rng.below(5));
        }
        t.data.resize(t.element_count());
        for (auto& v : t.data) {
            v = static_cast<float>(rng.uniform() * 8.0 - 4.0);
        }
        a.entries.emplace("layer" + std::to_string(i) + (rng.below(2) ? ".weight" : ".bias"), std::move(t));
    }
    if (rng.below(2)) {
        a.metadata["note"] = "seed" + std::to_string(rng.below(1000));
    }
    return a;
}

// Same names and shapes as `layout`, fresh values.
inline TensorArchive like(const TensorArchive& layout, Rng& rng) {
    TensorArchive a;
    for (const auto& [name, t] : layout.entries) {
        Tensor c = t;
        for (auto& v : c.data) {
            v = static_cast<float>(rng.uniform() * 2.0 - 1.0);
        }
        a.entries.emplace(name, std::move(c));
    }
    return a;
}

inline fs::path temp_dir(const std::string& tag) {
    std::string pattern = (fs::temp_directory_path() / ("adaptrack_" + tag + "_XXXXXX")).string();
    if (!mkdtemp(pattern.data())) {
        throw std::runtime_error("mkdtemp failed");
    }
    return pattern;
}

inline void write_text(const fs::path& p, const std::string& text) {
    fs::create_directories(p.parent_path());
    std::ofstream(p) << text;
}

// One MOT-style sequence with solid-colour PNG frames, gt/gt.txt and det/det.txt.
inline void write_sequence(const fs::path& root, const std::string& name, int frames, int width, int height,
                           const std::vector<TrackRecord>& gt, const std::vector<Detection>& dets,
                           std::uint8_t shade = 64) {
    const fs::path seq = root / name;
    SequenceInfo info;
    info.name = name;
    info.frame_count = frames;
    info.width = width;
    info.height = height;
    info.frame_rate = 30;
    info.image_ext = ".png";
    fs::create_directories(seq / "img1");
    std::ofstream ini(seq / "seqinfo.ini");
    write_seqinfo(info, ini);
    ini.close();
    for (int f = 1; f <= frames; ++f) {
        Image img(width, height, 3, static_cast<std::uint8_t>(shade + f));
        write_png(img, info.frame_path(seq, f));
    }
    if (!gt.empty()) {
        write_annotations(gt, seq / "gt" / "gt.txt");
    }
    std::ofstream det((fs::create_directories(seq / "det"), seq / "det" / "det.txt"));
    for (const auto& d : dets) {
        det << d.frame << ",-1," << d.bbox.x << "," << d.bbox.y << "," << d.bbox.w << "," << d.bbox.h << ","
            << d.confidence << ",-1,-1,-1\n";
    }
}

}  // namespace synth
