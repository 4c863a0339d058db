#include <adaptrack/error.hpp>
#include <adaptrack/hashing.hpp>
#include <adaptrack/metrics.hpp>
#include <adaptrack/pipeline.hpp>
#include <adaptrack/process.hpp>
#include <adaptrack/tracker.hpp>

#include <spdlog/spdlog.h>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <unordered_map>

namespace adaptrack {
namespace fs = std::filesystem;

namespace {

std::string utc_now() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string padded(const char* prefix, int value, int width = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s%0*d", prefix, width, value);
    return buf;
}

// Writes next to the target and renames, so readers never see half a file.
void write_atomically(const fs::path& path, const std::string& text) {
    fs::create_directories(path.parent_path());
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        out << text;
        if (!out) {
            throw DataError(tmp.string() + ": write failed");
        }
    }
    fs::rename(tmp, path);
}

fs::path resolve(const fs::path& base, const std::string& p) {
    if (p.empty()) {
        return {};
    }
    fs::path path(p);
    return (path.is_absolute() ? path : base / path).lexically_normal();
}

std::vector<fs::path> sequence_dirs(const fs::path& root) {
    std::vector<fs::path> out;
    if (!fs::is_directory(root)) {
        throw DataError(root.string() + ": dataset directory does not exist");
    }
    for (const auto& e : fs::directory_iterator(root)) {
        if (e.is_directory() && fs::exists(e.path() / "seqinfo.ini")) {
            out.push_back(e.path());
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

RoundStatus parse_status(const std::string& s) {
    if (s == "complete") {
        return RoundStatus::complete;
    }
    if (s == "failed") {
        return RoundStatus::failed;
    }
    if (s == "running") {
        return RoundStatus::running;
    }
    throw ValidationError("unknown round status '" + s + "'");
}

}  // namespace

const char* to_string(RoundStatus s) noexcept {
    switch (s) {
        case RoundStatus::complete:
            return "complete";
        case RoundStatus::failed:
            return "failed";
        case RoundStatus::running:
            break;
    }
    return "running";
}

// ---------------------------------------------------------------------------
// Config

PipelineConfig PipelineConfig::from_json(const nlohmann::json& j, const fs::path& base_dir) {
    PipelineConfig c;
    c.rounds = j.value("rounds", c.rounds);
    c.source_dataset = resolve(base_dir, j.value("source_dataset", std::string{}));
    c.target_dataset = resolve(base_dir, j.value("target_dataset", std::string{}));
    c.warmup_checkpoint = resolve(base_dir, j.value("warmup_checkpoint", std::string{}));
    if (j.contains("validation_dataset") && !j["validation_dataset"].is_null()) {
        c.validation_dataset = resolve(base_dir, j["validation_dataset"].get<std::string>());
    }
    c.inference_cmd = j.value("inference_cmd", std::string{});
    c.train_cmd = j.value("train_cmd", std::string{});
    c.eval_cmd = j.value("eval_cmd", std::string{});

    if (j.contains("pseudo")) {
        const auto& p = j["pseudo"];
        c.pseudo.confidence_threshold = p.value("threshold", c.pseudo.confidence_threshold);
        c.pseudo.assign_ids = p.value("track", c.pseudo.assign_ids);
        c.pseudo.min_box_area = p.value("min_box_area", c.pseudo.min_box_area);
        if (p.contains("tracker")) {
            c.pseudo.tracker = p["tracker"].get<TrackerConfig>();
        }
    }
    if (j.contains("mosaic")) {
        const auto& m = j["mosaic"];
        c.mosaic_count = m.value("count", c.mosaic_count);
        c.mosaic_seed = m.value("seed", c.mosaic_seed);
        if (m.contains("mix")) {
            c.mosaic.n_source = m["mix"].at(0).get<int>();
            c.mosaic.n_target = m["mix"].at(1).get<int>();
        }
        if (m.contains("size")) {
            c.mosaic.canvas_w = m["size"].at(0).get<int>();
            c.mosaic.canvas_h = m["size"].at(1).get<int>();
        }
        if (m.contains("jitter")) {
            c.mosaic.jitter_lo = m["jitter"].at(0).get<double>();
            c.mosaic.jitter_hi = m["jitter"].at(1).get<double>();
        }
        c.mosaic.min_size = m.value("min_size", c.mosaic.min_size);
        const auto interp = m.value("interpolation", std::string("nearest"));
        if (interp != "nearest" && interp != "bilinear") {
            throw ValidationError("pipeline config: unknown interpolation '" + interp + "'");
        }
        c.mosaic.interpolation = interp == "bilinear" ? Interpolation::bilinear : Interpolation::nearest;
    }
    if (j.contains("soup")) {
        c.soup.strict = j["soup"].value("strict", false);
    }
    c.step3_include_source = j.value("step3_include_source", c.step3_include_source);
    if (j.contains("round_overrides")) {
        for (const auto& [key, value] : j["round_overrides"].items()) {
            RoundOverride o;
            if (value.contains("threshold")) {
                o.threshold = value["threshold"].get<double>();
            }
            if (value.contains("include_source")) {
                o.include_source = value["include_source"].get<bool>();
            }
            c.overrides[std::stoi(key)] = o;
        }
    }
    return c;
}

nlohmann::json PipelineConfig::to_json() const {
    nlohmann::json overrides_json = nlohmann::json::object();
    for (const auto& [round, o] : overrides) {
        nlohmann::json e = nlohmann::json::object();
        if (o.threshold) {
            e["threshold"] = *o.threshold;
        }
        if (o.include_source) {
            e["include_source"] = *o.include_source;
        }
        overrides_json[std::to_string(round)] = e;
    }
    return {{"rounds", rounds},
            {"source_dataset", source_dataset.string()},
            {"target_dataset", target_dataset.string()},
            {"warmup_checkpoint", warmup_checkpoint.string()},
            {"validation_dataset",
             validation_dataset ? nlohmann::json(validation_dataset->string()) : nlohmann::json(nullptr)},
            {"inference_cmd", inference_cmd},
            {"train_cmd", train_cmd},
            {"eval_cmd", eval_cmd},
            {"pseudo",
             {{"threshold", pseudo.confidence_threshold},
              {"track", pseudo.assign_ids},
              {"min_box_area", pseudo.min_box_area},
              {"tracker", pseudo.tracker}}},
            {"mosaic",
             {{"count", mosaic_count},
              {"seed", mosaic_seed},
              {"mix", {mosaic.n_source, mosaic.n_target}},
              {"size", {mosaic.canvas_w, mosaic.canvas_h}},
              {"jitter", {mosaic.jitter_lo, mosaic.jitter_hi}},
              {"min_size", mosaic.min_size},
              {"interpolation", mosaic.interpolation == Interpolation::bilinear ? "bilinear" : "nearest"}}},
            {"soup", {{"strict", soup.strict}}},
            {"step3_include_source", step3_include_source},
            {"round_overrides", overrides_json}};
}

void PipelineConfig::validate() const {
    if (rounds < 1) {
        throw ValidationError("pipeline config: rounds must be >= 1");
    }
    if (target_dataset.empty() || warmup_checkpoint.empty()) {
        throw ValidationError("pipeline config: target_dataset and warmup_checkpoint are required");
    }
    if (inference_cmd.empty() || train_cmd.empty() || eval_cmd.empty()) {
        throw ValidationError("pipeline config: inference_cmd, train_cmd and eval_cmd are required");
    }
    if (mosaic.n_source > 0 && source_dataset.empty()) {
        throw ValidationError("pipeline config: source_dataset is required when mosaics use source tiles");
    }
    pseudo.validate();
    mosaic.validate();
}

// ---------------------------------------------------------------------------
// Manifest

nlohmann::json RoundManifest::to_json() const {
    return {{"round", round},
            {"status", adaptrack::to_string(status)},
            {"attempt", attempt},
            {"failed_stage", failed_stage},
            {"error", error},
            {"source_dataset", source_dataset},
            {"target_dataset", target_dataset},
            {"pseudo_labels", pseudo_labels},
            {"mosaic_dir", mosaic_dir},
            {"checkpoint_in", checkpoint_in},
            {"checkpoint_out", checkpoint_out},
            {"threshold", threshold},
            {"include_source", include_source},
            {"mosaic_seed", mosaic_seed},
            {"artifacts", artifacts},
            {"soup", soup_log},
            {"metrics", metrics ? *metrics : nlohmann::json(nullptr)},
            {"started_at", started_at},
            {"finished_at", finished_at}};
}

RoundManifest RoundManifest::from_json(const nlohmann::json& j) {
    RoundManifest m;
    m.round = j.at("round").get<int>();
    m.status = parse_status(j.at("status").get<std::string>());
    m.attempt = j.value("attempt", 1);
    m.failed_stage = j.value("failed_stage", std::string{});
    m.error = j.value("error", std::string{});
    m.source_dataset = j.value("source_dataset", std::string{});
    m.target_dataset = j.value("target_dataset", std::string{});
    m.pseudo_labels = j.value("pseudo_labels", std::string{});
    m.mosaic_dir = j.value("mosaic_dir", std::string{});
    m.checkpoint_in = j.value("checkpoint_in", std::string{});
    m.checkpoint_out = j.value("checkpoint_out", std::string{});
    m.threshold = j.value("threshold", 0.0);
    m.include_source = j.value("include_source", false);
    m.mosaic_seed = j.value("mosaic_seed", std::uint64_t{0});
    m.artifacts = j.value("artifacts", std::map<std::string, std::string>{});
    m.soup_log = j.value("soup", nlohmann::json(nullptr));
    if (j.contains("metrics") && !j["metrics"].is_null()) {
        m.metrics = j["metrics"];
    }
    m.started_at = j.value("started_at", std::string{});
    m.finished_at = j.value("finished_at", std::string{});
    if (m.round < 0) {
        throw ValidationError("manifest round must be >= 0");
    }
    return m;
}

// ---------------------------------------------------------------------------
// Workdir

Workdir::Workdir(fs::path root) : root_(fs::absolute(std::move(root)).lexically_normal()) {}

fs::path Workdir::manifest_path(int round) const {
    return root_ / "manifests" / (padded("round_", round) + ".json");
}

fs::path Workdir::round_dir(int round, int attempt) const {
    return root_ / "rounds" / padded("round_", round) / padded("attempt_", attempt, 1);
}

fs::path Workdir::checkpoint_path(const std::string& id) const {
    return root_ / "store" / (id + ".tarc");
}

std::string Workdir::store_checkpoint(const fs::path& file) const {
    return store_checkpoint(load_archive(file));
}

std::string Workdir::store_checkpoint(const TensorArchive& archive) const {
    const auto bytes = encode_archive(archive);
    const auto id = sha256_hex(bytes);
    const auto path = checkpoint_path(id);
    if (!fs::exists(path)) {
        write_atomically(path, std::string(bytes.begin(), bytes.end()));
    }
    return id;
}

fs::path Workdir::verified_checkpoint(const std::string& id) const {
    const auto path = checkpoint_path(id);
    if (!fs::exists(path)) {
        throw DataError("checkpoint " + id + " is missing from the store");
    }
    if (sha256_file(path) != id) {
        throw DataError("checkpoint " + id + " does not match its content hash");
    }
    return path;
}

std::map<int, RoundManifest> Workdir::manifests() const {
    std::map<int, RoundManifest> out;
    const auto dir = root_ / "manifests";
    if (!fs::is_directory(dir)) {
        return out;
    }
    for (const auto& e : fs::directory_iterator(dir)) {
        if (e.path().extension() != ".json") {
            continue;
        }
        try {
            std::ifstream in(e.path());
            auto m = RoundManifest::from_json(nlohmann::json::parse(in));
            if (e.path().filename() != manifest_path(m.round).filename()) {
                throw ValidationError("round field does not match the file name");
            }
            out.emplace(m.round, std::move(m));
        } catch (const std::exception& ex) {
            throw DataError(e.path().string() + ": corrupt manifest: " + ex.what());
        }
    }
    return out;
}

void Workdir::write_manifest(const RoundManifest& m) const {
    write_atomically(manifest_path(m.round), m.to_json().dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Rounds

RoundManifest bootstrap(const PipelineConfig& config, const Workdir& workdir) {
    RoundManifest m;
    m.round = 0;
    m.started_at = utc_now();
    m.source_dataset = config.source_dataset.string();
    m.target_dataset = config.target_dataset.string();
    try {
        m.checkpoint_out = workdir.store_checkpoint(config.warmup_checkpoint);
    } catch (const std::exception& e) {
        throw DataError("warm-up checkpoint " + config.warmup_checkpoint.string() + ": " + e.what());
    }
    m.status = RoundStatus::complete;
    m.finished_at = utc_now();
    workdir.write_manifest(m);
    spdlog::info("round 0: registered warm-up checkpoint {}", m.checkpoint_out);
    return m;
}

RoundManifest run_round(const RoundManifest& previous, const PipelineConfig& config, const Workdir& workdir) {
    config.validate();
    if (previous.status != RoundStatus::complete) {
        throw ValidationError("round " + std::to_string(previous.round) + " is not complete");
    }
    const int t = previous.round + 1;

    RoundManifest m;
    m.round = t;
    if (const auto existing = workdir.manifests(); existing.contains(t)) {
        if (existing.at(t).status == RoundStatus::complete) {
            throw ValidationError("round " + std::to_string(t) + " is already complete");
        }
        m.attempt = existing.at(t).attempt + 1;
    }
    const auto dir = workdir.round_dir(t, m.attempt);
    if (fs::exists(dir)) {
        throw DataError(dir.string() + ": attempt directory already exists");
    }
    fs::create_directories(dir);

    const auto override_it = config.overrides.find(t);
    const RoundOverride over = override_it != config.overrides.end() ? override_it->second : RoundOverride{};
    m.started_at = utc_now();
    m.source_dataset = config.source_dataset.string();
    m.target_dataset = config.target_dataset.string();
    m.checkpoint_in = previous.checkpoint_out;
    m.threshold = over.threshold.value_or(config.pseudo.confidence_threshold);
    m.include_source = over.include_source.value_or(t == 1 ? true : config.step3_include_source);
    m.mosaic_seed = config.mosaic_seed + static_cast<std::uint64_t>(t);
    m.pseudo_labels = (dir / "pseudo").string();
    m.mosaic_dir = (dir / "mosaic").string();
    workdir.write_manifest(m);

    auto record = [&](const fs::path& file) {
        m.artifacts[fs::relative(file, workdir.root()).generic_string()] = sha256_file(file);
    };
    auto stage = [&](const char* name, auto&& body) {
        spdlog::info("round {}: {}", t, name);
        try {
            body();
        } catch (const std::exception& e) {
            m.status = RoundStatus::failed;
            m.failed_stage = name;
            m.error = e.what();
            m.finished_at = utc_now();
            workdir.write_manifest(m);
            spdlog::error("round {} failed in stage {}: {}", t, name, e.what());
            throw;
        }
    };

    fs::path checkpoint_in;
    stage("lineage", [&] { checkpoint_in = workdir.verified_checkpoint(m.checkpoint_in); });

    const auto det_dir = dir / "detections";
    stage("inference", [&] {
        fs::create_directories(det_dir);
        for (const auto& seq : sequence_dirs(config.target_dataset)) {
            const auto out = det_dir / (seq.filename().string() + ".txt");
            run_command_checked(config.inference_cmd, {checkpoint_in.string(), seq.string(), out.string()});
            if (!fs::exists(out)) {
                throw ExternalCommandError("inference produced no detection file for " + seq.filename().string(), 0);
            }
            record(out);
        }
    });

    stage("pseudo_label", [&] {
        PseudoLabelConfig pc = config.pseudo;
        pc.confidence_threshold = m.threshold;
        generate_pseudo_dataset(det_dir, m.pseudo_labels, pc, config.target_dataset);
        for (const auto& e : fs::recursive_directory_iterator(m.pseudo_labels)) {
            if (e.is_regular_file()) {
                record(e.path());
            }
        }
    });

    stage("mosaic", [&] {
        MosaicConfig mc = config.mosaic;
        std::vector<LabeledSample> source_pool;
        if (m.include_source) {
            source_pool = load_pool(config.source_dataset, Domain::source);
        } else {
            mc.n_source = 0;
            mc.n_target = 4;
        }
        const auto target_pool = load_pool(m.pseudo_labels, Domain::target);
        sample_batch(source_pool, target_pool, mc, config.mosaic_count, m.mosaic_seed, m.mosaic_dir);
        record(fs::path(m.mosaic_dir) / "manifest.json");
    });

    const auto candidates_dir = dir / "candidates";
    std::vector<fs::path> candidate_files;
    stage("train", [&] {
        fs::create_directories(candidates_dir);
        run_command_checked(config.train_cmd,
                            {checkpoint_in.string(), m.mosaic_dir, m.pseudo_labels, candidates_dir.string()});
        for (const auto& e : fs::directory_iterator(candidates_dir)) {
            if (e.is_regular_file() && e.path().extension() == ".tarc") {
                candidate_files.push_back(e.path());
            }
        }
        std::sort(candidate_files.begin(), candidate_files.end());
        if (candidate_files.empty()) {
            throw ExternalCommandError("trainer wrote no .tarc candidates", 0);
        }
        for (const auto& f : candidate_files) {
            record(f);
        }
    });

    stage("soup", [&] {
        std::unordered_map<std::string, double> cache;
        const auto run_eval = command_evaluator(config.eval_cmd, dir / "soup_eval");
        SoupEvaluator evaluator = [&](const TensorArchive& a, const std::string& label) {
            const auto key = sha256_hex(encode_archive(a));
            if (const auto it = cache.find(key); it != cache.end()) {
                return it->second;
            }
            const double score = run_eval(a, label);
            cache.emplace(key, score);
            return score;
        };

        std::vector<SoupCandidate> candidates;
        std::vector<std::string> seen{m.checkpoint_in};
        candidates.push_back({"G" + std::to_string(t), load_archive(checkpoint_in), 0.0});
        for (const auto& f : candidate_files) {
            const auto hash = sha256_file(f);
            if (std::find(seen.begin(), seen.end(), hash) != seen.end()) {
                spdlog::info("round {}: candidate {} duplicates an earlier ingredient, skipped", t,
                             f.filename().string());
                continue;
            }
            seen.push_back(hash);
            candidates.push_back({f.stem().string(), load_archive(f), 0.0});
        }
        for (auto& c : candidates) {
            c.val_score = evaluator(c.archive, c.id);
        }
        auto result = greedy_soup(std::move(candidates), evaluator, config.soup);
        result.archive.metadata["round"] = std::to_string(t);
        result.archive.metadata["parent"] = m.checkpoint_in;
        m.checkpoint_out = workdir.store_checkpoint(result.archive);
        m.soup_log = result;
        write_atomically(dir / "soup.json", nlohmann::json(result).dump(2) + "\n");
        record(dir / "soup.json");
    });

    if (config.validation_dataset) {
        stage("validation", [&] {
            const auto ckpt = workdir.verified_checkpoint(m.checkpoint_out);
            const auto results_dir = dir / "validation" / "results";
            fs::create_directories(results_dir);
            for (const auto& seq : sequence_dirs(*config.validation_dataset)) {
                const auto name = seq.filename().string();
                const auto det_file = dir / "validation" / "detections" / (name + ".txt");
                fs::create_directories(det_file.parent_path());
                run_command_checked(config.inference_cmd, {ckpt.string(), seq.string(), det_file.string()});
                const auto info = load_seqinfo(seq / "seqinfo.ini");
                const auto records =
                    run_sequence(config.pseudo.tracker, load_detections(det_file).by_frame(), info.frame_count);
                write_annotations(records, results_dir / (name + ".txt"));
            }
            m.metrics = nlohmann::json(evaluate(discover_sequences(*config.validation_dataset, results_dir)));
        });
    }

    m.status = RoundStatus::complete;
    m.finished_at = utc_now();
    workdir.write_manifest(m);
    spdlog::info("round {}: complete, checkpoint {}", t, m.checkpoint_out);
    return m;
}

int resume(const fs::path& workdir) {
    const auto manifests = Workdir(workdir).manifests();
    if (manifests.empty()) {
        return 0;
    }
    int expected = 0;
    for (const auto& [round, m] : manifests) {
        if (round != expected || m.status != RoundStatus::complete) {
            return expected;
        }
        ++expected;
    }
    return expected;
}

RoundManifest run_pipeline(const PipelineConfig& config, const Workdir& workdir) {
    config.validate();
    int next = resume(workdir.root());
    if (next == 0) {
        bootstrap(config, workdir);
        next = 1;
    }
    auto manifests = workdir.manifests();
    RoundManifest last = manifests.at(next - 1);
    while (next <= config.rounds) {
        last = run_round(manifests.at(next - 1), config, workdir);
        manifests[next] = last;
        ++next;
    }
    return last;
}

}  // namespace adaptrack
