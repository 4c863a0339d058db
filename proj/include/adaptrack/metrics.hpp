#pragma once

#include <adaptrack/assignment.hpp>
#include <adaptrack/mot_format.hpp>

#include <nlohmann/json_fwd.hpp>

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace adaptrack {

struct FramePair {
    std::size_t gt = 0;    // index into the frame's GT boxes
    std::size_t pred = 0;  // index into the frame's predicted boxes
    double iou = 0.0;
};

struct FrameMatching {
    int frame = 0;
    std::vector<FramePair> pairs;
    std::vector<std::size_t> unmatched_gt;
    std::vector<std::size_t> unmatched_pred;
};

/// Slack applied when comparing an IoU against a threshold, so that grid
/// values like 0.15 are not missed by one ulp.
inline constexpr double kIouSlack = 1e-10;

/// Maximum-score matching where every pair has IoU >= min_iou. The score of a
/// pair is its IoU plus `bonus(gt, pred)` when a bonus matrix is given.
FrameMatching match_frame(std::span<const BBox> gt, std::span<const BBox> pred, double min_iou,
                          const Matrix* bonus = nullptr);

/// Raw CLEAR counts; these pool across sequences by addition.
struct ClearCounts {
    std::int64_t num_gt = 0;
    std::int64_t num_pred = 0;
    std::int64_t tp = 0;
    std::int64_t fp = 0;
    std::int64_t fn = 0;
    std::int64_t idsw = 0;

    ClearCounts& operator+=(const ClearCounts& o);
    /// 1 - (fp + fn + idsw) / num_gt; throws on empty ground truth.
    double mota() const;
};

struct IdentityCounts {
    std::int64_t idtp = 0;
    std::int64_t idfp = 0;
    std::int64_t idfn = 0;

    IdentityCounts& operator+=(const IdentityCounts& o);
    double idf1() const;
};

inline constexpr std::size_t kAlphaCount = 19;
/// 0.05, 0.10, ..., 0.95
const std::array<double, kAlphaCount>& alpha_grid();

struct HotaCounts {
    std::array<std::int64_t, kAlphaCount> tp{};
    std::array<std::int64_t, kAlphaCount> fn{};
    std::array<std::int64_t, kAlphaCount> fp{};
    /// Sum over true positives of their association score A(c).
    std::array<double, kAlphaCount> assa_sum{};

    HotaCounts& operator+=(const HotaCounts& o);
};

struct AlphaRow {
    double alpha = 0.0;
    double hota = 0.0;
    double deta = 0.0;
    double assa = 0.0;
};

struct HotaResult {
    double hota = 0.0;
    double deta = 0.0;
    double assa = 0.0;
    std::vector<AlphaRow> per_alpha;
};

HotaResult summarize(const HotaCounts& counts);

struct ClearResult {
    double mota = 0.0;
    std::int64_t fp = 0;
    std::int64_t fn = 0;
    std::int64_t idsw = 0;
};

ClearCounts clear_mot_counts(const std::vector<TrackRecord>& gt, const std::vector<TrackRecord>& pred,
                             double min_iou = 0.5);
IdentityCounts identity_counts(const std::vector<TrackRecord>& gt, const std::vector<TrackRecord>& pred,
                               double min_iou = 0.5);
HotaCounts hota_counts(const std::vector<TrackRecord>& gt, const std::vector<TrackRecord>& pred);

// Each of these throws ValidationError("empty ground truth") when gt is empty.
ClearResult clear_mot(const std::vector<TrackRecord>& gt, const std::vector<TrackRecord>& pred,
                      double min_iou = 0.5);
double idf1(const std::vector<TrackRecord>& gt, const std::vector<TrackRecord>& pred, double min_iou = 0.5);
HotaResult hota(const std::vector<TrackRecord>& gt, const std::vector<TrackRecord>& pred);

struct SequenceMetrics {
    double hota = 0.0;
    double deta = 0.0;
    double assa = 0.0;
    double mota = 0.0;
    double idf1 = 0.0;
    std::int64_t fp = 0;
    std::int64_t fn = 0;
    std::int64_t idsw = 0;
    std::int64_t num_gt = 0;
    std::int64_t num_pred = 0;
    IdentityCounts identity;
    std::vector<AlphaRow> per_alpha;
};

struct MetricsReport : SequenceMetrics {
    std::map<std::string, SequenceMetrics> per_sequence;
};

void to_json(nlohmann::json& j, const AlphaRow& r);
void to_json(nlohmann::json& j, const SequenceMetrics& m);
void to_json(nlohmann::json& j, const MetricsReport& r);

struct SequenceInput {
    std::string name;
    std::vector<TrackRecord> gt;
    std::vector<TrackRecord> pred;
};

/// Per-sequence metrics plus an aggregate built from pooled counts.
/// Sequences are evaluated in parallel; the reduction order is fixed.
MetricsReport evaluate(const std::vector<SequenceInput>& sequences);

struct SequenceFiles {
    std::string name;
    std::filesystem::path gt;
    std::filesystem::path result;
    std::optional<std::filesystem::path> seqinfo;
};

/// Loads and evaluates; any failure is rethrown with the sequence name.
MetricsReport evaluate(const std::vector<SequenceFiles>& sequences);

/// Discovers `<gt_root>/<SEQ>/gt/gt.txt` (or the names listed in a
/// MOTChallenge seqmap) paired with `<results_root>/<SEQ>.txt`.
std::vector<SequenceFiles> discover_sequences(const std::filesystem::path& gt_root,
                                              const std::filesystem::path& results_root,
                                              const std::optional<std::filesystem::path>& seqmap = std::nullopt);

}  // namespace adaptrack
