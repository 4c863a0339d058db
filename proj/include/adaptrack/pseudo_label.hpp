#pragma once

#include <adaptrack/mot_format.hpp>
#include <adaptrack/tracker.hpp>

#include <filesystem>
#include <optional>
#include <vector>

namespace adaptrack {

struct PseudoLabelConfig {
    /// Detections strictly below this confidence are removed.
    double confidence_threshold = 0.7;
    /// Take ids (and smoothed boxes) from the tracker instead of numbering per frame.
    bool assign_ids = false;
    double min_box_area = 0.0;
    TrackerConfig tracker;

    void validate() const;
};

/// Keeps detections with confidence >= threshold, order preserved.
std::vector<Detection> filter_by_confidence(const std::vector<Detection>& detections, double threshold);

/// Pseudo ground truth for one sequence: flag = 1, class = 1, visibility = 1.
/// Without assign_ids the ids restart at 1 in every frame, following file order.
/// With assign_ids the tracker runs over all detections and its records are
/// filtered by the detection confidence they carry.
std::vector<TrackRecord> generate_pseudo_labels(const std::vector<Detection>& detections,
                                                const PseudoLabelConfig& config, int frame_count = 0);

struct PseudoLabelSummary {
    std::size_t sequences = 0;
    std::size_t input_detections = 0;
    std::size_t labels = 0;
};

/// For every `<det_dir>/<SEQ>.txt` writes `<out_dir>/<SEQ>/gt/gt.txt`. When
/// `dataset_dir/<SEQ>/seqinfo.ini` exists it is copied alongside with imDir
/// pointing at the original images, so the output is a usable dataset.
PseudoLabelSummary generate_pseudo_dataset(const std::filesystem::path& det_dir,
                                           const std::filesystem::path& out_dir, const PseudoLabelConfig& config,
                                           const std::optional<std::filesystem::path>& dataset_dir = std::nullopt);

}  // namespace adaptrack
