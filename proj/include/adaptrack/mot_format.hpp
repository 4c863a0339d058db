#pragma once

#include <adaptrack/geometry.hpp>

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace adaptrack {

struct Detection {
    int frame = 1;
    BBox bbox;
    double confidence = 0.0;

    bool operator==(const Detection&) const = default;
};

/// Identity-bearing record used for ground truth, tracker output and pseudo labels.
/// For ground truth `confidence` carries the MOT "consider" flag.
struct TrackRecord {
    int frame = 1;
    int track_id = 1;
    BBox bbox;
    double confidence = 1.0;
    int class_id = 1;
    double visibility = 1.0;

    bool operator==(const TrackRecord&) const = default;
};

struct SequenceInfo {
    std::string name;
    int frame_count = 0;
    int width = 0;
    int height = 0;
    double frame_rate = 0.0;
    std::string image_dir = "img1";
    std::string image_ext = ".jpg";

    std::filesystem::path frame_path(const std::filesystem::path& sequence_dir, int frame) const;
};

struct DetectionParse {
    std::vector<Detection> detections;
    std::size_t rejected = 0;  // non-positive width or height
    std::size_t clamped = 0;   // confidence outside [0, 1]

    /// Detections of one frame, file order preserved.
    std::vector<Detection> frame(int index) const;
    /// All detections bucketed by frame.
    std::map<int, std::vector<Detection>> by_frame() const;
};

DetectionParse parse_detections(std::istream& in);

struct GroundTruthFilter {
    std::set<int> keep_classes{1};
    bool drop_zero_flag = true;
};

/// Parses a 9-column GT file, drops records per `filter` and enforces unique (frame, id).
std::vector<TrackRecord> parse_ground_truth(std::istream& in, const GroundTruthFilter& filter = {});

/// Parses a tracker result file: 7 or more columns, no class or flag filtering.
/// Missing class/visibility columns default to -1 and 1; confidence is clamped to [0, 1].
std::vector<TrackRecord> parse_results(std::istream& in);

/// Writes records sorted by (frame, track_id) as
/// `frame,id,x,y,w,h,conf,class,visibility` and returns the byte count.
std::size_t write_annotations(std::vector<TrackRecord> records, std::ostream& out);
std::size_t write_annotations(const std::vector<TrackRecord>& records, const std::filesystem::path& path);

SequenceInfo parse_seqinfo(std::istream& in);
void write_seqinfo(const SequenceInfo& info, std::ostream& out);

// Path-based conveniences; errors are rethrown with the path prepended.
DetectionParse load_detections(const std::filesystem::path& path);
std::vector<TrackRecord> load_ground_truth(const std::filesystem::path& path,
                                           const GroundTruthFilter& filter = {});
std::vector<TrackRecord> load_results(const std::filesystem::path& path);
SequenceInfo load_seqinfo(const std::filesystem::path& path);

/// Formats a value with the shortest text that parses back to the same double.
std::string format_number(double value);

}  // namespace adaptrack
