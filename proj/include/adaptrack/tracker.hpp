#pragma once

#include <adaptrack/kalman_filter.hpp>
#include <adaptrack/mot_format.hpp>

#include <nlohmann/json_fwd.hpp>

#include <map>
#include <vector>

namespace adaptrack {

enum class TrackStatus { tentative, active, lost };

struct Track {
    int track_id = 0;
    KalmanState state;
    TrackStatus status = TrackStatus::tentative;
    double last_confidence = 0.0;
    int frames_since_update = 0;
    int age = 0;
};

struct TrackerConfig {
    double high_thresh = 0.6;
    double low_thresh = 0.1;
    /// Cost limits on 1 - IoU for the high- and low-score association stages.
    double match_thresh_high = 0.8;
    double match_thresh_low = 0.5;
    double new_track_thresh = 0.7;
    int max_lost_frames = 30;
    KalmanNoise noise;

    /// Throws ValidationError when the thresholds are inconsistent.
    void validate() const;
};

void to_json(nlohmann::json& j, const TrackerConfig& c);
void from_json(const nlohmann::json& j, TrackerConfig& c);

/// Two-stage online tracker. High-score detections associate first with every
/// live track, leftover low-score detections then recover tracked (non-lost)
/// tracks, and unmatched confident detections start new tracks.
///
/// Tracks are emitted from the frame they are born. A tentative track that
/// misses its second frame is discarded; an active track that misses becomes
/// lost and is dropped after max_lost_frames consecutive misses.
class ByteTracker {
public:
    explicit ByteTracker(TrackerConfig config = {});

    /// Advances to `frame`; every detection must carry that frame index and
    /// the index must exceed the previous one. Returns the records emitted for
    /// this frame, sorted by track id.
    std::vector<TrackRecord> step(int frame, const std::vector<Detection>& detections);

    const std::vector<Track>& tracks() const noexcept { return tracks_; }
    const TrackerConfig& config() const noexcept { return config_; }
    int last_frame() const noexcept { return last_frame_; }

private:
    TrackerConfig config_;
    KalmanFilter filter_;
    std::vector<Track> tracks_;
    int next_id_ = 1;
    int last_frame_ = 0;
};

/// Runs a fresh tracker over frames 1..frame_count (or the largest detection
/// frame when frame_count is 0); frames with no detections still advance.
std::vector<TrackRecord> run_sequence(const TrackerConfig& config,
                                      const std::map<int, std::vector<Detection>>& frames,
                                      int frame_count = 0);

}  // namespace adaptrack
