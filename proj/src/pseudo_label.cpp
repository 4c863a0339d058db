#include <adaptrack/error.hpp>
#include <adaptrack/pseudo_label.hpp>

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>
#include <map>

namespace adaptrack {

void PseudoLabelConfig::validate() const {
    if (!(confidence_threshold >= 0.0 && confidence_threshold <= 1.0)) {
        throw ValidationError("pseudo labels: confidence threshold must lie in [0, 1]");
    }
    if (!(min_box_area >= 0.0) || !std::isfinite(min_box_area)) {
        throw ValidationError("pseudo labels: min_box_area must be a non-negative number");
    }
    tracker.validate();
}

std::vector<Detection> filter_by_confidence(const std::vector<Detection>& detections, double threshold) {
    std::vector<Detection> kept;
    std::copy_if(detections.begin(), detections.end(), std::back_inserter(kept),
                 [threshold](const Detection& d) { return d.confidence >= threshold; });
    return kept;
}

std::vector<TrackRecord> generate_pseudo_labels(const std::vector<Detection>& detections,
                                                const PseudoLabelConfig& config, int frame_count) {
    config.validate();
    std::vector<TrackRecord> labels;

    if (config.assign_ids) {
        std::map<int, std::vector<Detection>> frames;
        for (const auto& d : detections) {
            frames[d.frame].push_back(d);
        }
        for (auto r : run_sequence(config.tracker, frames, frame_count)) {
            if (r.confidence < config.confidence_threshold || r.bbox.area() < config.min_box_area ||
                !r.bbox.valid()) {
                continue;
            }
            r.confidence = 1.0;
            r.class_id = 1;
            r.visibility = 1.0;
            labels.push_back(r);
        }
        return labels;
    }

    std::map<int, int> next_id;
    for (const auto& d : filter_by_confidence(detections, config.confidence_threshold)) {
        if (d.bbox.area() < config.min_box_area) {
            continue;
        }
        TrackRecord r;
        r.frame = d.frame;
        r.track_id = ++next_id[d.frame];
        r.bbox = d.bbox;
        labels.push_back(r);
    }
    return labels;
}

PseudoLabelSummary generate_pseudo_dataset(const std::filesystem::path& det_dir,
                                           const std::filesystem::path& out_dir, const PseudoLabelConfig& config,
                                           const std::optional<std::filesystem::path>& dataset_dir) {
    namespace fs = std::filesystem;
    config.validate();
    if (!fs::is_directory(det_dir)) {
        throw DataError(det_dir.string() + ": not a directory");
    }
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(det_dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".txt") {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end());

    std::vector<std::size_t> inputs(files.size()), outputs(files.size());
    std::vector<std::exception_ptr> errors(files.size());
    const auto n = static_cast<std::int64_t>(files.size());
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t i = 0; i < n; ++i) {
        const auto k = static_cast<std::size_t>(i);
        try {
            const auto name = files[k].stem().string();
            const auto dets = load_detections(files[k]);
            std::optional<SequenceInfo> info;
            if (dataset_dir && fs::exists(*dataset_dir / name / "seqinfo.ini")) {
                info = load_seqinfo(*dataset_dir / name / "seqinfo.ini");
            }
            const auto labels = generate_pseudo_labels(dets.detections, config, info ? info->frame_count : 0);
            write_annotations(labels, out_dir / name / "gt" / "gt.txt");
            if (info) {
                info->image_dir = fs::absolute(*dataset_dir / name / info->image_dir).lexically_normal().string();
                std::ofstream ini(out_dir / name / "seqinfo.ini", std::ios::binary);
                write_seqinfo(*info, ini);
                if (!ini) {
                    throw DataError((out_dir / name / "seqinfo.ini").string() + ": write failed");
                }
            }
            inputs[k] = dets.detections.size();
            outputs[k] = labels.size();
        } catch (...) {
            errors[k] = std::current_exception();
        }
    }
    PseudoLabelSummary summary;
    for (std::size_t k = 0; k < files.size(); ++k) {
        if (errors[k]) {
            std::rethrow_exception(errors[k]);
        }
        ++summary.sequences;
        summary.input_detections += inputs[k];
        summary.labels += outputs[k];
    }
    spdlog::info("pseudo labels: {} sequences, kept {} of {} detections at threshold {}", summary.sequences,
                 summary.labels, summary.input_detections, config.confidence_threshold);
    return summary;
}

}  // namespace adaptrack
