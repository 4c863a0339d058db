#include <adaptrack/assignment.hpp>
#include <adaptrack/error.hpp>
#include <adaptrack/kernels.hpp>
#include <adaptrack/tracker.hpp>

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <string>

namespace adaptrack {

void TrackerConfig::validate() const {
    auto unit = [](double v) { return std::isfinite(v) && v >= 0.0 && v <= 1.0; };
    if (!unit(low_thresh) || !unit(high_thresh) || !(low_thresh < high_thresh)) {
        throw ValidationError("tracker config: need 0 <= low_thresh < high_thresh <= 1");
    }
    if (!unit(new_track_thresh) || !unit(match_thresh_high) || !unit(match_thresh_low)) {
        throw ValidationError("tracker config: thresholds must lie in [0, 1]");
    }
    if (max_lost_frames < 1) {
        throw ValidationError("tracker config: max_lost_frames must be >= 1");
    }
    if (!(noise.std_weight_position > 0.0) || !(noise.std_weight_velocity > 0.0)) {
        throw ValidationError("tracker config: noise weights must be positive");
    }
}

void to_json(nlohmann::json& j, const TrackerConfig& c) {
    j = {{"high_thresh", c.high_thresh},
         {"low_thresh", c.low_thresh},
         {"match_thresh_high", c.match_thresh_high},
         {"match_thresh_low", c.match_thresh_low},
         {"new_track_thresh", c.new_track_thresh},
         {"max_lost_frames", c.max_lost_frames},
         {"std_weight_position", c.noise.std_weight_position},
         {"std_weight_velocity", c.noise.std_weight_velocity}};
}

void from_json(const nlohmann::json& j, TrackerConfig& c) {
    TrackerConfig d;
    c.high_thresh = j.value("high_thresh", d.high_thresh);
    c.low_thresh = j.value("low_thresh", d.low_thresh);
    c.match_thresh_high = j.value("match_thresh_high", d.match_thresh_high);
    c.match_thresh_low = j.value("match_thresh_low", d.match_thresh_low);
    c.new_track_thresh = j.value("new_track_thresh", d.new_track_thresh);
    c.max_lost_frames = j.value("max_lost_frames", d.max_lost_frames);
    c.noise.std_weight_position = j.value("std_weight_position", d.noise.std_weight_position);
    c.noise.std_weight_velocity = j.value("std_weight_velocity", d.noise.std_weight_velocity);
}

ByteTracker::ByteTracker(TrackerConfig config) : config_(config), filter_(config.noise) {
    config_.validate();
}

namespace {

// Associates tracks[track_idx] with dets[det_idx] on cost 1 - IoU.
Assignment associate(const std::vector<Track>& tracks, const std::vector<std::size_t>& track_idx,
                     const std::vector<Detection>& dets, const std::vector<std::size_t>& det_idx,
                     double cost_limit) {
    std::vector<BBox> track_boxes, det_boxes;
    track_boxes.reserve(track_idx.size());
    det_boxes.reserve(det_idx.size());
    for (auto i : track_idx) {
        track_boxes.push_back(tracks[i].state.box());
    }
    for (auto i : det_idx) {
        det_boxes.push_back(dets[i].bbox);
    }
    Matrix cost;
    kernels::serial::iou_matrix(track_boxes, det_boxes, cost);
    for (std::size_t i = 0; i < cost.rows() * cost.cols(); ++i) {
        cost.data()[i] = 1.0 - cost.data()[i];
    }
    return solve_assignment(cost, cost_limit);
}

}  // namespace

std::vector<TrackRecord> ByteTracker::step(int frame, const std::vector<Detection>& detections) {
    if (frame <= last_frame_) {
        throw ValidationError("tracker: frame " + std::to_string(frame) + " is not after frame " +
                              std::to_string(last_frame_));
    }
    for (const auto& d : detections) {
        if (d.frame != frame) {
            throw ValidationError("tracker: detection for frame " + std::to_string(d.frame) +
                                  " passed while stepping frame " + std::to_string(frame));
        }
        if (!d.bbox.valid() || !(d.confidence >= 0.0 && d.confidence <= 1.0)) {
            throw ValidationError("tracker: invalid detection in frame " + std::to_string(frame));
        }
    }
    const int gap = frame - last_frame_;
    last_frame_ = frame;

    for (auto& t : tracks_) {
        if (t.status != TrackStatus::active && t.status != TrackStatus::tentative) {
            t.state.mean(7) = 0.0;  // freeze height velocity while lost
        }
        for (int k = 0; k < gap; ++k) {
            t.state = filter_.predict(t.state);
        }
        ++t.age;
    }

    std::vector<std::size_t> high, low;
    for (std::size_t i = 0; i < detections.size(); ++i) {
        const double conf = detections[i].confidence;
        if (conf >= config_.high_thresh) {
            high.push_back(i);
        } else if (conf >= config_.low_thresh) {
            low.push_back(i);
        }
    }

    std::vector<char> matched(tracks_.size(), 0);
    std::vector<TrackRecord> out;
    auto apply_match = [&](std::size_t ti, const Detection& det) {
        Track& t = tracks_[ti];
        t.state = filter_.update(t.state, det.bbox);
        t.status = TrackStatus::active;
        t.frames_since_update = 0;
        t.last_confidence = det.confidence;
        matched[ti] = 1;
    };

    // Stage 1: confident detections against every live track.
    std::vector<std::size_t> pool(tracks_.size());
    for (std::size_t i = 0; i < pool.size(); ++i) {
        pool[i] = i;
    }
    const auto first = associate(tracks_, pool, detections, high, config_.match_thresh_high);
    for (const auto& [r, c] : first.matches) {
        apply_match(pool[r], detections[high[c]]);
    }
    std::vector<std::size_t> high_left;
    for (auto c : first.unmatched_cols) {
        high_left.push_back(high[c]);
    }

    // Stage 2: low-score detections recover tracked tracks that are still free.
    std::vector<std::size_t> tracked_left;
    for (auto r : first.unmatched_rows) {
        if (tracks_[pool[r]].status != TrackStatus::lost) {
            tracked_left.push_back(pool[r]);
        }
    }
    const auto second = associate(tracks_, tracked_left, detections, low, config_.match_thresh_low);
    for (const auto& [r, c] : second.matches) {
        apply_match(tracked_left[r], detections[low[c]]);
    }

    // Lifecycle of unmatched tracks.
    std::vector<Track> kept;
    kept.reserve(tracks_.size() + high_left.size());
    for (std::size_t i = 0; i < tracks_.size(); ++i) {
        Track& t = tracks_[i];
        if (!matched[i]) {
            if (t.status == TrackStatus::tentative) {
                continue;
            }
            t.status = TrackStatus::lost;
            t.frames_since_update += gap;
            if (t.frames_since_update > config_.max_lost_frames) {
                continue;
            }
        }
        kept.push_back(std::move(t));
    }
    tracks_ = std::move(kept);

    // Births.
    for (auto i : high_left) {
        const auto& det = detections[i];
        if (det.confidence < config_.new_track_thresh) {
            continue;
        }
        Track t;
        t.track_id = next_id_++;
        t.state = filter_.initiate(det.bbox);
        t.status = TrackStatus::tentative;
        t.last_confidence = det.confidence;
        tracks_.push_back(std::move(t));
    }

    for (const auto& t : tracks_) {
        if (t.status == TrackStatus::lost) {
            continue;
        }
        TrackRecord r;
        r.frame = frame;
        r.track_id = t.track_id;
        r.bbox = t.state.box();
        r.confidence = t.last_confidence;
        r.class_id = 1;
        r.visibility = 1.0;
        out.push_back(r);
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.track_id < b.track_id; });
    return out;
}

std::vector<TrackRecord> run_sequence(const TrackerConfig& config,
                                      const std::map<int, std::vector<Detection>>& frames, int frame_count) {
    ByteTracker tracker(config);
    int last = frame_count;
    if (last <= 0 && !frames.empty()) {
        last = frames.rbegin()->first;
    }
    if (!frames.empty() && frames.begin()->first < 1) {
        throw ValidationError("tracker: frame indices start at 1");
    }
    if (!frames.empty() && frames.rbegin()->first > last) {
        throw ValidationError("tracker: detection frame " + std::to_string(frames.rbegin()->first) +
                              " beyond sequence length " + std::to_string(last));
    }
    static const std::vector<Detection> none;
    std::vector<TrackRecord> out;
    for (int f = 1; f <= last; ++f) {
        const auto it = frames.find(f);
        auto records = tracker.step(f, it == frames.end() ? none : it->second);
        out.insert(out.end(), records.begin(), records.end());
    }
    return out;
}

}  // namespace adaptrack
