#include <adaptrack/error.hpp>
#include <adaptrack/kernels.hpp>
#include <adaptrack/metrics.hpp>

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <unordered_map>

namespace adaptrack {
namespace {

struct FrameView {
    int frame = 0;
    std::vector<std::size_t> gt_ids;  // dense
    std::vector<BBox> gt_boxes;
    std::vector<std::size_t> pred_ids;  // dense
    std::vector<BBox> pred_boxes;
};

struct IndexedSequence {
    std::vector<FrameView> frames;
    std::size_t gt_id_count = 0;
    std::size_t pred_id_count = 0;
    std::int64_t gt_dets = 0;
    std::int64_t pred_dets = 0;
};

std::unordered_map<int, std::size_t> dense_ids(const std::vector<TrackRecord>& records) {
    std::vector<int> ids;
    ids.reserve(records.size());
    for (const auto& r : records) {
        ids.push_back(r.track_id);
    }
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    std::unordered_map<int, std::size_t> map;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        map.emplace(ids[i], i);
    }
    return map;
}

IndexedSequence index_sequence(const std::vector<TrackRecord>& gt, const std::vector<TrackRecord>& pred) {
    IndexedSequence seq;
    const auto gt_map = dense_ids(gt);
    const auto pred_map = dense_ids(pred);
    seq.gt_id_count = gt_map.size();
    seq.pred_id_count = pred_map.size();
    seq.gt_dets = static_cast<std::int64_t>(gt.size());
    seq.pred_dets = static_cast<std::int64_t>(pred.size());

    std::map<int, FrameView> frames;
    auto by_key = [](const TrackRecord* a, const TrackRecord* b) {
        return std::tie(a->frame, a->track_id) < std::tie(b->frame, b->track_id);
    };
    std::vector<const TrackRecord*> sorted;
    for (const auto& r : gt) {
        sorted.push_back(&r);
    }
    std::sort(sorted.begin(), sorted.end(), by_key);
    for (const auto* r : sorted) {
        auto& f = frames[r->frame];
        f.frame = r->frame;
        f.gt_ids.push_back(gt_map.at(r->track_id));
        f.gt_boxes.push_back(r->bbox);
    }
    sorted.clear();
    for (const auto& r : pred) {
        sorted.push_back(&r);
    }
    std::sort(sorted.begin(), sorted.end(), by_key);
    for (const auto* r : sorted) {
        auto& f = frames[r->frame];
        f.frame = r->frame;
        f.pred_ids.push_back(pred_map.at(r->track_id));
        f.pred_boxes.push_back(r->bbox);
    }
    seq.frames.reserve(frames.size());
    for (auto& [_, f] : frames) {
        seq.frames.push_back(std::move(f));
    }
    return seq;
}

void require_gt(const std::vector<TrackRecord>& gt) {
    if (gt.empty()) {
        throw ValidationError("empty ground truth");
    }
}

double safe_ratio(double num, double den) {
    return den > 0.0 ? num / den : 0.0;
}

}  // namespace

FrameMatching match_frame(std::span<const BBox> gt, std::span<const BBox> pred, double min_iou,
                          const Matrix* bonus) {
    Matrix ious;
    kernels::serial::iou_matrix(gt, pred, ious);
    Matrix cost(gt.size(), pred.size(), std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < gt.size(); ++i) {
        for (std::size_t j = 0; j < pred.size(); ++j) {
            const double v = ious(i, j);
            if (v > 0.0 && v + kIouSlack >= min_iou) {
                cost(i, j) = -(v + (bonus ? (*bonus)(i, j) : 0.0));
            }
        }
    }
    const auto a = solve_assignment(cost, 0.0);
    FrameMatching m;
    for (const auto& [r, c] : a.matches) {
        m.pairs.push_back({r, c, ious(r, c)});
    }
    m.unmatched_gt = a.unmatched_rows;
    m.unmatched_pred = a.unmatched_cols;
    return m;
}

ClearCounts& ClearCounts::operator+=(const ClearCounts& o) {
    num_gt += o.num_gt;
    num_pred += o.num_pred;
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    idsw += o.idsw;
    return *this;
}

double ClearCounts::mota() const {
    if (num_gt == 0) {
        throw ValidationError("empty ground truth");
    }
    return 1.0 - static_cast<double>(fp + fn + idsw) / static_cast<double>(num_gt);
}

IdentityCounts& IdentityCounts::operator+=(const IdentityCounts& o) {
    idtp += o.idtp;
    idfp += o.idfp;
    idfn += o.idfn;
    return *this;
}

double IdentityCounts::idf1() const {
    return safe_ratio(2.0 * static_cast<double>(idtp), static_cast<double>(2 * idtp + idfp + idfn));
}

const std::array<double, kAlphaCount>& alpha_grid() {
    static const std::array<double, kAlphaCount> grid = [] {
        std::array<double, kAlphaCount> g{};
        for (std::size_t k = 0; k < kAlphaCount; ++k) {
            g[k] = static_cast<double>(k + 1) / 20.0;
        }
        return g;
    }();
    return grid;
}

HotaCounts& HotaCounts::operator+=(const HotaCounts& o) {
    for (std::size_t a = 0; a < kAlphaCount; ++a) {
        tp[a] += o.tp[a];
        fn[a] += o.fn[a];
        fp[a] += o.fp[a];
        assa_sum[a] += o.assa_sum[a];
    }
    return *this;
}

HotaResult summarize(const HotaCounts& c) {
    HotaResult r;
    const auto& grid = alpha_grid();
    for (std::size_t a = 0; a < kAlphaCount; ++a) {
        AlphaRow row;
        row.alpha = grid[a];
        row.deta = safe_ratio(static_cast<double>(c.tp[a]), static_cast<double>(c.tp[a] + c.fn[a] + c.fp[a]));
        row.assa = safe_ratio(c.assa_sum[a], static_cast<double>(c.tp[a]));
        row.hota = std::sqrt(row.deta * row.assa);
        r.hota += row.hota;
        r.deta += row.deta;
        r.assa += row.assa;
        r.per_alpha.push_back(row);
    }
    r.hota /= kAlphaCount;
    r.deta /= kAlphaCount;
    r.assa /= kAlphaCount;
    return r;
}

ClearCounts clear_mot_counts(const std::vector<TrackRecord>& gt, const std::vector<TrackRecord>& pred,
                             double min_iou) {
    const auto seq = index_sequence(gt, pred);
    constexpr std::size_t none = std::numeric_limits<std::size_t>::max();
    std::vector<std::size_t> last_match(seq.gt_id_count, none);  // ever
    std::vector<std::size_t> prev_frame(seq.gt_id_count, none);  // previous frame only

    ClearCounts counts;
    counts.num_gt = seq.gt_dets;
    counts.num_pred = seq.pred_dets;
    for (const auto& f : seq.frames) {
        const std::size_t ng = f.gt_boxes.size();
        const std::size_t np = f.pred_boxes.size();
        std::vector<std::size_t> gt_to_pred(ng, none);
        std::vector<char> pred_taken(np, 0);

        // Continuity: keep last frame's pairs that still overlap enough.
        for (std::size_t i = 0; i < ng; ++i) {
            const std::size_t want = prev_frame[f.gt_ids[i]];
            if (want == none) {
                continue;
            }
            for (std::size_t j = 0; j < np; ++j) {
                if (f.pred_ids[j] == want && !pred_taken[j] &&
                    iou(f.gt_boxes[i], f.pred_boxes[j]) + kIouSlack >= min_iou) {
                    gt_to_pred[i] = j;
                    pred_taken[j] = 1;
                    break;
                }
            }
        }

        std::vector<std::size_t> free_gt, free_pred;
        std::vector<BBox> free_gt_boxes, free_pred_boxes;
        for (std::size_t i = 0; i < ng; ++i) {
            if (gt_to_pred[i] == none) {
                free_gt.push_back(i);
                free_gt_boxes.push_back(f.gt_boxes[i]);
            }
        }
        for (std::size_t j = 0; j < np; ++j) {
            if (!pred_taken[j]) {
                free_pred.push_back(j);
                free_pred_boxes.push_back(f.pred_boxes[j]);
            }
        }
        const auto rest = match_frame(free_gt_boxes, free_pred_boxes, min_iou);
        for (const auto& p : rest.pairs) {
            gt_to_pred[free_gt[p.gt]] = free_pred[p.pred];
        }

        std::fill(prev_frame.begin(), prev_frame.end(), none);
        std::int64_t tp = 0;
        for (std::size_t i = 0; i < ng; ++i) {
            if (gt_to_pred[i] == none) {
                continue;
            }
            ++tp;
            const std::size_t g = f.gt_ids[i];
            const std::size_t p = f.pred_ids[gt_to_pred[i]];
            if (last_match[g] != none && last_match[g] != p) {
                ++counts.idsw;
            }
            last_match[g] = p;
            prev_frame[g] = p;
        }
        counts.tp += tp;
        counts.fn += static_cast<std::int64_t>(ng) - tp;
        counts.fp += static_cast<std::int64_t>(np) - tp;
    }
    return counts;
}

IdentityCounts identity_counts(const std::vector<TrackRecord>& gt, const std::vector<TrackRecord>& pred,
                               double min_iou) {
    const auto seq = index_sequence(gt, pred);
    Matrix overlap(seq.gt_id_count, seq.pred_id_count, 0.0);
    for (const auto& f : seq.frames) {
        for (std::size_t i = 0; i < f.gt_boxes.size(); ++i) {
            for (std::size_t j = 0; j < f.pred_boxes.size(); ++j) {
                if (iou(f.gt_boxes[i], f.pred_boxes[j]) + kIouSlack >= min_iou) {
                    overlap(f.gt_ids[i], f.pred_ids[j]) += 1.0;
                }
            }
        }
    }
    // Maximizing total overlap minimizes IDFP + IDFN.
    Matrix cost(overlap.rows(), overlap.cols());
    for (std::size_t i = 0; i < overlap.rows() * overlap.cols(); ++i) {
        cost.data()[i] = -overlap.data()[i];
    }
    const auto a = solve_assignment(cost, 0.0);
    IdentityCounts c;
    for (const auto& [g, p] : a.matches) {
        c.idtp += static_cast<std::int64_t>(overlap(g, p));
    }
    c.idfn = seq.gt_dets - c.idtp;
    c.idfp = seq.pred_dets - c.idtp;
    return c;
}

HotaCounts hota_counts(const std::vector<TrackRecord>& gt, const std::vector<TrackRecord>& pred) {
    const auto seq = index_sequence(gt, pred);
    const std::size_t ng = seq.gt_id_count;
    const std::size_t np = seq.pred_id_count;

    // Soft global alignment between identities.
    Matrix potential(ng, np, 0.0);
    std::vector<double> gt_frames(ng, 0.0), pred_frames(np, 0.0);
    std::vector<Matrix> similarity(seq.frames.size());
    for (std::size_t t = 0; t < seq.frames.size(); ++t) {
        const auto& f = seq.frames[t];
        kernels::serial::iou_matrix(f.gt_boxes, f.pred_boxes, similarity[t]);
        const Matrix& sim = similarity[t];
        std::vector<double> row_sum(sim.rows(), 0.0), col_sum(sim.cols(), 0.0);
        for (std::size_t i = 0; i < sim.rows(); ++i) {
            for (std::size_t j = 0; j < sim.cols(); ++j) {
                row_sum[i] += sim(i, j);
                col_sum[j] += sim(i, j);
            }
        }
        for (std::size_t i = 0; i < sim.rows(); ++i) {
            for (std::size_t j = 0; j < sim.cols(); ++j) {
                const double denom = row_sum[i] + col_sum[j] - sim(i, j);
                if (denom > 0.0) {
                    potential(f.gt_ids[i], f.pred_ids[j]) += sim(i, j) / denom;
                }
            }
        }
        for (auto g : f.gt_ids) {
            gt_frames[g] += 1.0;
        }
        for (auto p : f.pred_ids) {
            pred_frames[p] += 1.0;
        }
    }
    Matrix alignment(ng, np, 0.0);
    for (std::size_t g = 0; g < ng; ++g) {
        for (std::size_t p = 0; p < np; ++p) {
            alignment(g, p) = safe_ratio(potential(g, p), gt_frames[g] + pred_frames[p] - potential(g, p));
        }
    }

    HotaCounts counts;
    const auto& grid = alpha_grid();
    for (std::size_t a = 0; a < kAlphaCount; ++a) {
        Matrix matches(ng, np, 0.0);
        std::int64_t tp = 0;
        for (std::size_t t = 0; t < seq.frames.size(); ++t) {
            const auto& f = seq.frames[t];
            Matrix bonus(f.gt_boxes.size(), f.pred_boxes.size());
            for (std::size_t i = 0; i < bonus.rows(); ++i) {
                for (std::size_t j = 0; j < bonus.cols(); ++j) {
                    bonus(i, j) = alignment(f.gt_ids[i], f.pred_ids[j]);
                }
            }
            const auto m = match_frame(f.gt_boxes, f.pred_boxes, grid[a], &bonus);
            for (const auto& p : m.pairs) {
                matches(f.gt_ids[p.gt], f.pred_ids[p.pred]) += 1.0;
            }
            tp += static_cast<std::int64_t>(m.pairs.size());
        }
        double assa_sum = 0.0;
        for (std::size_t g = 0; g < ng; ++g) {
            for (std::size_t p = 0; p < np; ++p) {
                const double mc = matches(g, p);
                if (mc > 0.0) {
                    assa_sum += mc * mc / (gt_frames[g] + pred_frames[p] - mc);
                }
            }
        }
        counts.tp[a] = tp;
        counts.fn[a] = seq.gt_dets - tp;
        counts.fp[a] = seq.pred_dets - tp;
        counts.assa_sum[a] = assa_sum;
    }
    return counts;
}

ClearResult clear_mot(const std::vector<TrackRecord>& gt, const std::vector<TrackRecord>& pred, double min_iou) {
    require_gt(gt);
    const auto c = clear_mot_counts(gt, pred, min_iou);
    return {c.mota(), c.fp, c.fn, c.idsw};
}

double idf1(const std::vector<TrackRecord>& gt, const std::vector<TrackRecord>& pred, double min_iou) {
    require_gt(gt);
    return identity_counts(gt, pred, min_iou).idf1();
}

HotaResult hota(const std::vector<TrackRecord>& gt, const std::vector<TrackRecord>& pred) {
    require_gt(gt);
    return summarize(hota_counts(gt, pred));
}

namespace {

struct SequenceCounts {
    ClearCounts clear;
    IdentityCounts identity;
    HotaCounts hota;
};

SequenceMetrics finish(const SequenceCounts& c) {
    SequenceMetrics m;
    const auto h = summarize(c.hota);
    m.hota = h.hota;
    m.deta = h.deta;
    m.assa = h.assa;
    m.per_alpha = h.per_alpha;
    m.mota = c.clear.mota();
    m.idf1 = c.identity.idf1();
    m.fp = c.clear.fp;
    m.fn = c.clear.fn;
    m.idsw = c.clear.idsw;
    m.num_gt = c.clear.num_gt;
    m.num_pred = c.clear.num_pred;
    m.identity = c.identity;
    return m;
}

}  // namespace

void to_json(nlohmann::json& j, const AlphaRow& r) {
    j = {{"alpha", r.alpha}, {"hota", r.hota}, {"deta", r.deta}, {"assa", r.assa}};
}

void to_json(nlohmann::json& j, const SequenceMetrics& m) {
    j = {{"hota", m.hota},
         {"deta", m.deta},
         {"assa", m.assa},
         {"mota", m.mota},
         {"idf1", m.idf1},
         {"fp", m.fp},
         {"fn", m.fn},
         {"idsw", m.idsw},
         {"num_gt", m.num_gt},
         {"num_pred", m.num_pred},
         {"idtp", m.identity.idtp},
         {"idfp", m.identity.idfp},
         {"idfn", m.identity.idfn},
         {"per_alpha", m.per_alpha}};
}

void to_json(nlohmann::json& j, const MetricsReport& r) {
    to_json(j, static_cast<const SequenceMetrics&>(r));
    j["per_sequence"] = nlohmann::json::object();
    for (const auto& [name, m] : r.per_sequence) {
        j["per_sequence"][name] = m;
    }
}

MetricsReport evaluate(const std::vector<SequenceInput>& sequences) {
    if (sequences.empty()) {
        throw ValidationError("evaluate: no sequences");
    }
    std::vector<SequenceCounts> counts(sequences.size());
    std::vector<std::exception_ptr> errors(sequences.size());
    const auto n = static_cast<std::int64_t>(sequences.size());
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t i = 0; i < n; ++i) {
        const auto& s = sequences[static_cast<std::size_t>(i)];
        try {
            require_gt(s.gt);
            auto& c = counts[static_cast<std::size_t>(i)];
            c.clear = clear_mot_counts(s.gt, s.pred);
            c.identity = identity_counts(s.gt, s.pred);
            c.hota = hota_counts(s.gt, s.pred);
        } catch (...) {
            errors[static_cast<std::size_t>(i)] = std::current_exception();
        }
    }
    for (std::size_t i = 0; i < sequences.size(); ++i) {
        if (errors[i]) {
            try {
                std::rethrow_exception(errors[i]);
            } catch (const std::exception& e) {
                throw ValidationError("sequence " + sequences[i].name + ": " + e.what());
            }
        }
    }

    MetricsReport report;
    SequenceCounts total;
    for (std::size_t i = 0; i < sequences.size(); ++i) {
        total.clear += counts[i].clear;
        total.identity += counts[i].identity;
        total.hota += counts[i].hota;
        report.per_sequence[sequences[i].name] = finish(counts[i]);
    }
    static_cast<SequenceMetrics&>(report) = finish(total);
    return report;
}

MetricsReport evaluate(const std::vector<SequenceFiles>& files) {
    std::vector<SequenceInput> inputs(files.size());
    std::vector<std::exception_ptr> errors(files.size());
    const auto n = static_cast<std::int64_t>(files.size());
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t i = 0; i < n; ++i) {
        const auto& f = files[static_cast<std::size_t>(i)];
        auto& in = inputs[static_cast<std::size_t>(i)];
        try {
            in.name = f.name;
            in.gt = load_ground_truth(f.gt);
            in.pred = load_results(f.result);
            if (f.seqinfo) {
                const auto info = load_seqinfo(*f.seqinfo);
                auto beyond = [&](const TrackRecord& r) { return r.frame > info.frame_count; };
                if (std::any_of(in.gt.begin(), in.gt.end(), beyond) ||
                    std::any_of(in.pred.begin(), in.pred.end(), beyond)) {
                    throw ValidationError("records beyond seqLength " + std::to_string(info.frame_count));
                }
            }
        } catch (...) {
            errors[static_cast<std::size_t>(i)] = std::current_exception();
        }
    }
    for (std::size_t i = 0; i < files.size(); ++i) {
        if (errors[i]) {
            try {
                std::rethrow_exception(errors[i]);
            } catch (const std::exception& e) {
                throw ValidationError("sequence " + files[i].name + ": " + e.what());
            }
        }
    }
    return evaluate(inputs);
}

std::vector<SequenceFiles> discover_sequences(const std::filesystem::path& gt_root,
                                              const std::filesystem::path& results_root,
                                              const std::optional<std::filesystem::path>& seqmap) {
    namespace fs = std::filesystem;
    std::vector<std::string> names;
    if (seqmap) {
        std::ifstream in(*seqmap);
        if (!in) {
            throw DataError(seqmap->string() + ": cannot open seqmap");
        }
        std::string line;
        bool first = true;
        while (std::getline(in, line)) {
            while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) {
                line.pop_back();
            }
            if (line.empty()) {
                continue;
            }
            if (first && line == "name") {
                first = false;
                continue;
            }
            first = false;
            names.push_back(line);
        }
    } else {
        if (!fs::is_directory(gt_root)) {
            throw DataError(gt_root.string() + ": not a directory");
        }
        for (const auto& entry : fs::directory_iterator(gt_root)) {
            if (entry.is_directory() && fs::exists(entry.path() / "gt" / "gt.txt")) {
                names.push_back(entry.path().filename().string());
            }
        }
        std::sort(names.begin(), names.end());
    }
    std::vector<SequenceFiles> out;
    for (const auto& name : names) {
        SequenceFiles f;
        f.name = name;
        f.gt = gt_root / name / "gt" / "gt.txt";
        f.result = results_root / (name + ".txt");
        const auto info = gt_root / name / "seqinfo.ini";
        if (fs::exists(info)) {
            f.seqinfo = info;
        }
        if (!fs::exists(f.result)) {
            throw DataError("sequence " + name + ": missing result file " + f.result.string());
        }
        out.push_back(std::move(f));
    }
    return out;
}

}  // namespace adaptrack
