#include <adaptrack/error.hpp>
#include <adaptrack/mot_format.hpp>

#include <spdlog/spdlog.h>

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string_view>
#include <tuple>
#include <unordered_map>

namespace adaptrack {
namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        fields.push_back(trim(line.substr(start, comma - start)));
        if (comma == std::string_view::npos) {
            break;
        }
        start = comma + 1;
    }
    return fields;
}

double to_double(std::string_view field, std::size_t column, std::size_t line_no) {
    double value = 0.0;
    // from_chars rejects a leading '+', which some writers emit.
    if (!field.empty() && field.front() == '+') {
        field.remove_prefix(1);
    }
    const auto* end = field.data() + field.size();
    const auto [ptr, ec] = std::from_chars(field.data(), end, value);
    if (field.empty() || ec != std::errc() || ptr != end || !std::isfinite(value)) {
        throw ParseError("column " + std::to_string(column + 1) + ": not a finite number: '" +
                             std::string(field) + "'",
                         line_no);
    }
    return value;
}

int to_int(std::string_view field, std::size_t column, std::size_t line_no) {
    const double value = to_double(field, column, line_no);
    if (value != std::floor(value) || std::abs(value) > 2e9) {
        throw ParseError("column " + std::to_string(column + 1) + ": not an integer: '" +
                             std::string(field) + "'",
                         line_no);
    }
    return static_cast<int>(value);
}

// Iterates non-empty lines, handing each to `fn(fields, line_no)`.
template <typename Fn>
void for_each_csv_line(std::istream& in, std::size_t min_fields, Fn&& fn) {
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto body = trim(line);
        if (body.empty()) {
            continue;
        }
        const auto fields = split_fields(body);
        if (fields.size() < min_fields) {
            throw ParseError("expected at least " + std::to_string(min_fields) + " fields, got " +
                                 std::to_string(fields.size()),
                             line_no);
        }
        fn(fields, line_no);
    }
}

BBox read_box(const std::vector<std::string_view>& f, std::size_t line_no) {
    return {to_double(f[2], 2, line_no), to_double(f[3], 3, line_no), to_double(f[4], 4, line_no),
            to_double(f[5], 5, line_no)};
}

int read_frame(std::string_view field, std::size_t line_no) {
    const int frame = to_int(field, 0, line_no);
    if (frame < 1) {
        throw ParseError("frame index must be >= 1", line_no);
    }
    return frame;
}

void check_unique(const std::vector<TrackRecord>& records) {
    std::vector<std::pair<int, int>> keys;
    keys.reserve(records.size());
    for (const auto& r : records) {
        keys.emplace_back(r.frame, r.track_id);
    }
    std::sort(keys.begin(), keys.end());
    const auto dup = std::adjacent_find(keys.begin(), keys.end());
    if (dup != keys.end()) {
        throw ValidationError("duplicate (frame, id) = (" + std::to_string(dup->first) + ", " +
                              std::to_string(dup->second) + ")");
    }
}

template <typename Fn>
auto with_file(const std::filesystem::path& path, Fn&& fn) {
    std::ifstream in(path);
    if (!in) {
        throw DataError(path.string() + ": cannot open for reading");
    }
    try {
        return fn(in);
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what(), e.line());
    } catch (const ValidationError& e) {
        throw ValidationError(path.string() + ": " + e.what());
    } catch (const DataError& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

}  // namespace

std::filesystem::path SequenceInfo::frame_path(const std::filesystem::path& sequence_dir, int frame) const {
    std::ostringstream name;
    name << std::setw(6) << std::setfill('0') << frame << image_ext;
    return sequence_dir / image_dir / name.str();
}

std::vector<Detection> DetectionParse::frame(int index) const {
    std::vector<Detection> out;
    for (const auto& d : detections) {
        if (d.frame == index) {
            out.push_back(d);
        }
    }
    return out;
}

std::map<int, std::vector<Detection>> DetectionParse::by_frame() const {
    std::map<int, std::vector<Detection>> out;
    for (const auto& d : detections) {
        out[d.frame].push_back(d);
    }
    return out;
}

DetectionParse parse_detections(std::istream& in) {
    DetectionParse result;
    for_each_csv_line(in, 7, [&](const auto& f, std::size_t line_no) {
        Detection det;
        det.frame = read_frame(f[0], line_no);
        det.bbox = read_box(f, line_no);
        det.confidence = to_double(f[6], 6, line_no);
        if (!(det.bbox.w > 0.0 && det.bbox.h > 0.0)) {
            ++result.rejected;
            return;
        }
        if (det.confidence < 0.0 || det.confidence > 1.0) {
            ++result.clamped;
            det.confidence = std::clamp(det.confidence, 0.0, 1.0);
        }
        result.detections.push_back(det);
    });
    if (result.rejected > 0 || result.clamped > 0) {
        spdlog::debug("detections: {} rejected (non-positive size), {} confidences clamped", result.rejected,
                      result.clamped);
    }
    return result;
}

std::vector<TrackRecord> parse_ground_truth(std::istream& in, const GroundTruthFilter& filter) {
    std::vector<TrackRecord> records;
    for_each_csv_line(in, 9, [&](const auto& f, std::size_t line_no) {
        TrackRecord r;
        r.frame = read_frame(f[0], line_no);
        r.track_id = to_int(f[1], 1, line_no);
        r.bbox = read_box(f, line_no);
        r.confidence = to_double(f[6], 6, line_no);
        r.class_id = to_int(f[7], 7, line_no);
        r.visibility = std::clamp(to_double(f[8], 8, line_no), 0.0, 1.0);
        if (filter.drop_zero_flag && r.confidence == 0.0) {
            return;
        }
        if (!filter.keep_classes.empty() && !filter.keep_classes.contains(r.class_id)) {
            return;
        }
        if (r.track_id < 1) {
            throw ParseError("track id must be >= 1", line_no);
        }
        if (!r.bbox.valid()) {
            throw ParseError("box width and height must be positive", line_no);
        }
        r.confidence = std::clamp(r.confidence, 0.0, 1.0);
        records.push_back(r);
    });
    check_unique(records);
    return records;
}

std::vector<TrackRecord> parse_results(std::istream& in) {
    std::vector<TrackRecord> records;
    for_each_csv_line(in, 7, [&](const auto& f, std::size_t line_no) {
        TrackRecord r;
        r.frame = read_frame(f[0], line_no);
        r.track_id = to_int(f[1], 1, line_no);
        r.bbox = read_box(f, line_no);
        r.confidence = std::clamp(to_double(f[6], 6, line_no), 0.0, 1.0);
        r.class_id = f.size() > 7 ? to_int(f[7], 7, line_no) : -1;
        r.visibility = f.size() > 8 ? std::clamp(to_double(f[8], 8, line_no), 0.0, 1.0) : 1.0;
        if (r.track_id < 1) {
            throw ParseError("track id must be >= 1", line_no);
        }
        if (!r.bbox.valid()) {
            throw ParseError("box width and height must be positive", line_no);
        }
        records.push_back(r);
    });
    check_unique(records);
    return records;
}

std::string format_number(double value) {
    std::array<char, 64> buf{};
    const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    return std::string(buf.data(), ptr);
}

std::size_t write_annotations(std::vector<TrackRecord> records, std::ostream& out) {
    std::sort(records.begin(), records.end(), [](const TrackRecord& a, const TrackRecord& b) {
        return std::tie(a.frame, a.track_id) < std::tie(b.frame, b.track_id);
    });
    std::size_t bytes = 0;
    std::string line;
    for (const auto& r : records) {
        line = std::to_string(r.frame) + ',' + std::to_string(r.track_id) + ',' + format_number(r.bbox.x) + ',' +
               format_number(r.bbox.y) + ',' + format_number(r.bbox.w) + ',' + format_number(r.bbox.h) + ',' +
               format_number(r.confidence) + ',' + std::to_string(r.class_id) + ',' +
               format_number(r.visibility) + '\n';
        out << line;
        bytes += line.size();
    }
    if (!out) {
        throw DataError("write failed");
    }
    return bytes;
}

std::size_t write_annotations(const std::vector<TrackRecord>& records, const std::filesystem::path& path) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DataError(path.string() + ": cannot open for writing");
    }
    try {
        const auto bytes = write_annotations(records, out);
        out.flush();
        if (!out) {
            throw DataError("write failed");
        }
        return bytes;
    } catch (const DataError& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

SequenceInfo parse_seqinfo(std::istream& in) {
    std::unordered_map<std::string, std::string> values;
    std::string line;
    bool in_sequence = false;
    while (std::getline(in, line)) {
        const auto body = trim(line);
        if (body.empty() || body.front() == ';' || body.front() == '#') {
            continue;
        }
        if (body.front() == '[') {
            in_sequence = body == "[Sequence]";
            continue;
        }
        const auto eq = body.find('=');
        if (!in_sequence || eq == std::string_view::npos) {
            continue;
        }
        values[std::string(trim(body.substr(0, eq)))] = std::string(trim(body.substr(eq + 1)));
    }

    auto require = [&](const std::string& key) -> const std::string& {
        const auto it = values.find(key);
        if (it == values.end()) {
            throw ValidationError("seqinfo: missing required key " + key);
        }
        return it->second;
    };
    auto number = [&](const std::string& key) {
        const auto& text = require(key);
        double value = 0.0;
        const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
        if (text.empty() || ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(value)) {
            throw ValidationError("seqinfo: key " + key + " is not a number: '" + text + "'");
        }
        return value;
    };
    auto integer = [&](const std::string& key, int minimum) {
        const double value = number(key);
        if (value != std::floor(value)) {
            throw ValidationError("seqinfo: key " + key + " is not an integer");
        }
        if (value < minimum) {
            throw ValidationError("seqinfo: key " + key + " must be >= " + std::to_string(minimum));
        }
        return static_cast<int>(value);
    };

    SequenceInfo info;
    info.name = require("name");
    info.frame_count = integer("seqLength", 1);
    info.width = integer("imWidth", 1);
    info.height = integer("imHeight", 1);
    info.frame_rate = number("frameRate");
    info.image_dir = require("imDir");
    info.image_ext = require("imExt");
    return info;
}

void write_seqinfo(const SequenceInfo& info, std::ostream& out) {
    out << "[Sequence]\n"
        << "name=" << info.name << '\n'
        << "imDir=" << info.image_dir << '\n'
        << "frameRate=" << format_number(info.frame_rate) << '\n'
        << "seqLength=" << info.frame_count << '\n'
        << "imWidth=" << info.width << '\n'
        << "imHeight=" << info.height << '\n'
        << "imExt=" << info.image_ext << '\n';
}

DetectionParse load_detections(const std::filesystem::path& path) {
    return with_file(path, [](std::istream& in) { return parse_detections(in); });
}

std::vector<TrackRecord> load_ground_truth(const std::filesystem::path& path, const GroundTruthFilter& filter) {
    return with_file(path, [&](std::istream& in) { return parse_ground_truth(in, filter); });
}

std::vector<TrackRecord> load_results(const std::filesystem::path& path) {
    return with_file(path, [](std::istream& in) { return parse_results(in); });
}

SequenceInfo load_seqinfo(const std::filesystem::path& path) {
    return with_file(path, [](std::istream& in) { return parse_seqinfo(in); });
}

}  // namespace adaptrack
