#include "cli.hpp"

#include <adaptrack/error.hpp>
#include <adaptrack/kernels.hpp>
#include <adaptrack/metrics.hpp>
#include <adaptrack/mosaic.hpp>
#include <adaptrack/pipeline.hpp>
#include <adaptrack/pseudo_label.hpp>
#include <adaptrack/soup.hpp>
#include <adaptrack/tensor_archive.hpp>
#include <adaptrack/tracker.hpp>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>

namespace adaptrack::cli {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Globals {
    int jobs = 0;
    std::optional<std::uint64_t> seed;
    std::string output = "human";
    int verbosity = 0;

    bool as_json() const { return output == "json"; }
};

// Thrown for bad flag values that CLI11 cannot catch on its own.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

json read_json_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError(path.string() + ": cannot open");
    }
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

std::pair<int, int> parse_pair(const std::string& text, char sep, const char* flag) {
    const auto pos = text.find(sep);
    try {
        if (pos == std::string::npos) {
            throw std::invalid_argument(text);
        }
        std::size_t used = 0;
        const int a = std::stoi(text.substr(0, pos), &used);
        if (used != pos) {
            throw std::invalid_argument(text);
        }
        const auto rest = text.substr(pos + 1);
        const int b = std::stoi(rest, &used);
        if (used != rest.size()) {
            throw std::invalid_argument(text);
        }
        return {a, b};
    } catch (const std::exception&) {
        throw UsageError(std::string(flag) + ": expected two integers separated by '" + sep + "', got '" + text + "'");
    }
}

std::pair<double, double> parse_range(const std::string& text, const char* flag) {
    const auto pos = text.find(',');
    try {
        if (pos == std::string::npos) {
            throw std::invalid_argument(text);
        }
        return {std::stod(text.substr(0, pos)), std::stod(text.substr(pos + 1))};
    } catch (const std::exception&) {
        throw UsageError(std::string(flag) + ": expected lo,hi, got '" + text + "'");
    }
}

// "path score" per line; relative paths resolve against the list file.
std::vector<SoupCandidate> read_candidates(const fs::path& list) {
    std::ifstream in(list);
    if (!in) {
        throw DataError(list.string() + ": cannot open");
    }
    std::vector<SoupCandidate> out;
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (const auto hash = line.find('#'); hash != std::string::npos) {
            line.erase(hash);
        }
        std::istringstream fields(line);
        std::string path;
        if (!(fields >> path)) {
            continue;
        }
        double score = 0.0;
        std::string extra;
        if (!(fields >> score) || (fields >> extra)) {
            throw ParseError(list.string() + ": expected '<archive> <score>'", n);
        }
        fs::path p(path);
        if (p.is_relative()) {
            p = list.parent_path() / p;
        }
        out.push_back({p.stem().string(), load_archive(p), score});
    }
    if (out.empty()) {
        throw ValidationError(list.string() + ": no candidates listed");
    }
    return out;
}

fs::path workdir_or_env(const std::string& flag) {
    if (!flag.empty()) {
        return flag;
    }
    if (const char* env = std::getenv("ADAPTRACK_WORKDIR"); env && *env) {
        return env;
    }
    throw UsageError("--workdir is required (or set ADAPTRACK_WORKDIR)");
}

void print_metrics(std::ostream& out, const MetricsReport& r) {
    out << std::fixed << std::setprecision(3);
    out << std::left << std::setw(24) << "sequence" << std::right << std::setw(8) << "HOTA" << std::setw(8) << "DetA"
        << std::setw(8) << "AssA" << std::setw(8) << "MOTA" << std::setw(8) << "IDF1" << std::setw(8) << "IDSW" << "\n";
    auto row = [&](const std::string& name, const SequenceMetrics& m) {
        out << std::left << std::setw(24) << name << std::right << std::setw(8) << m.hota << std::setw(8) << m.deta
            << std::setw(8) << m.assa << std::setw(8) << m.mota << std::setw(8) << m.idf1 << std::setw(8) << m.idsw
            << "\n";
    };
    for (const auto& [name, m] : r.per_sequence) {
        row(name, m);
    }
    row("COMBINED", r);
}

json status_json(const Workdir& wd) {
    json rounds = json::array();
    for (const auto& [round, m] : wd.manifests()) {
        rounds.push_back({{"round", round},
                          {"status", to_string(m.status)},
                          {"attempt", m.attempt},
                          {"failed_stage", m.failed_stage},
                          {"checkpoint_out", m.checkpoint_out}});
    }
    return {{"workdir", wd.root().string()}, {"next_round", resume(wd.root())}, {"rounds", rounds}};
}

void print_status(std::ostream& out, const json& s) {
    out << "workdir " << s["workdir"].get<std::string>() << "\n";
    for (const auto& r : s["rounds"]) {
        out << "round " << r["round"] << "  " << r["status"].get<std::string>() << "  attempt " << r["attempt"];
        if (!r["failed_stage"].get<std::string>().empty()) {
            out << "  failed in " << r["failed_stage"].get<std::string>();
        }
        if (!r["checkpoint_out"].get<std::string>().empty()) {
            out << "  -> " << r["checkpoint_out"].get<std::string>().substr(0, 12);
        }
        out << "\n";
    }
    out << "next round " << s["next_round"] << "\n";
}

void emit(std::ostream& out, const Globals& g, const json& payload, const std::string& human) {
    if (g.as_json()) {
        out << payload.dump() << "\n";
    } else {
        out << human;
    }
}

void report_error(std::ostream& err, const Globals& g, const char* kind, const std::string& message, int code) {
    if (g.as_json()) {
        err << json{{"error", kind}, {"message", message}, {"exit_code", code}}.dump() << "\n";
    } else {
        err << "adaptrack: " << message << "\n";
    }
}

}  // namespace

int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    Globals g;
    CLI::App app{"Domain-adaptive multi-object tracking toolkit", "adaptrack"};
    app.require_subcommand(1);
    app.fallthrough();
    app.add_option("-j,--jobs", g.jobs, "Worker threads for parallel stages (default: all cores)")
        ->check(CLI::NonNegativeNumber);
    app.add_option("--seed", g.seed, "Seed for every stochastic stage");
    app.add_option("--output", g.output, "Result format")->check(CLI::IsMember({"human", "json"}));
    app.add_flag("-v,--verbose", g.verbosity, "More logging (repeatable)");

    // track
    std::string det_file, seqinfo_file, out_file, config_file;
    auto* track = app.add_subcommand("track", "Run the tracker over one sequence of detections");
    track->add_option("--det", det_file, "Detections file (MOT format)")->required();
    track->add_option("--seqinfo", seqinfo_file, "seqinfo.ini of the sequence")->required();
    track->add_option("--out", out_file, "Result file to write")->required();
    track->add_option("--config", config_file, "Tracker config (JSON)");

    // eval
    std::string gt_dir, results_dir, seqmap, report_path;
    auto* eval = app.add_subcommand("eval", "Compute HOTA, CLEAR MOT and IDF1");
    eval->add_option("--gt", gt_dir, "Ground-truth root (<SEQ>/gt/gt.txt)")->required();
    eval->add_option("--results", results_dir, "Result root (<SEQ>.txt)")->required();
    eval->add_option("--seqmap", seqmap, "Sequence list");
    eval->add_option("--report", report_path, "JSON report to write")->required();

    // pseudo
    std::string pseudo_det, pseudo_out, pseudo_dataset;
    PseudoLabelConfig pseudo_cfg;
    auto* pseudo = app.add_subcommand("pseudo", "Turn confident detections into pseudo ground truth");
    pseudo->add_option("--det", pseudo_det, "Directory of <SEQ>.txt detection files")->required();
    pseudo->add_option("--out", pseudo_out, "Output dataset root")->required();
    pseudo->add_option("--threshold", pseudo_cfg.confidence_threshold, "Minimum kept confidence")
        ->capture_default_str();
    pseudo->add_flag("--track", pseudo_cfg.assign_ids, "Assign ids with the tracker");
    pseudo->add_option("--dataset", pseudo_dataset, "Original dataset, to carry seqinfo.ini over");
    pseudo->add_option("--min-area", pseudo_cfg.min_box_area, "Drop boxes smaller than this")->capture_default_str();
    pseudo->add_option("--config", config_file, "Tracker config (JSON) for --track");

    // mosaic
    std::string source_dir, target_dir, mosaic_out, mix = "2,2", size = "1280x1280", jitter = "0.25,0.75",
                                                     interp = "nearest";
    std::size_t count = 0;
    MosaicConfig mosaic_cfg;
    auto* mosaic = app.add_subcommand("mosaic", "Sample cross-domain 2x2 mosaics");
    mosaic->add_option("--source", source_dir, "Source dataset root");
    mosaic->add_option("--target", target_dir, "Target (pseudo-labelled) dataset root")->required();
    mosaic->add_option("--count", count, "Number of mosaics")->required();
    mosaic->add_option("--mix", mix, "Source,target tiles per mosaic")->capture_default_str();
    mosaic->add_option("--size", size, "Canvas WxH")->capture_default_str();
    mosaic->add_option("--jitter", jitter, "Center range as fractions lo,hi")->capture_default_str();
    mosaic->add_option("--min-size", mosaic_cfg.min_size, "Drop remapped boxes thinner than this")
        ->capture_default_str();
    mosaic->add_option("--interpolation", interp, "Resampling filter")
        ->check(CLI::IsMember({"nearest", "bilinear"}))
        ->capture_default_str();
    mosaic->add_option("--out", mosaic_out, "Output directory")->required();

    // soup
    auto* soup = app.add_subcommand("soup", "Average checkpoints");
    soup->require_subcommand(1);
    std::vector<std::string> soup_in;
    std::string soup_out, candidates_file, eval_cmd, soup_log, scratch;
    GreedySoupOptions greedy_opts;
    auto* uniform = soup->add_subcommand("uniform", "Elementwise mean of all inputs");
    uniform->add_option("--in", soup_in, "Input archives")->required()->expected(1, -1);
    uniform->add_option("--out", soup_out, "Output archive")->required();
    auto* greedy = soup->add_subcommand("greedy", "Greedy soup driven by an external evaluator");
    greedy->add_option("--candidates", candidates_file, "List file of '<archive> <score>' lines")->required();
    greedy->add_option("--eval-cmd", eval_cmd, "Evaluator, run as '<cmd> <archive>'")->required();
    greedy->add_option("--out", soup_out, "Output archive")->required();
    greedy->add_option("--log", soup_log, "JSON log of accepted/rejected ingredients");
    greedy->add_option("--scratch", scratch, "Where tentative soups are written (default: next to --out)");
    greedy->add_flag("--strict", greedy_opts.strict, "Accept only strict improvements");

    // pipeline
    auto* pipeline = app.add_subcommand("pipeline", "Iterative pseudo-labelling rounds");
    pipeline->require_subcommand(1);
    std::string workdir_flag, pipeline_config;
    auto* run = pipeline->add_subcommand("run", "Start or continue a pipeline");
    run->add_option("--config", pipeline_config, "Pipeline config (JSON)")->required();
    run->add_option("--workdir", workdir_flag, "Work directory (default: $ADAPTRACK_WORKDIR)");
    auto* resume_cmd = pipeline->add_subcommand("resume", "Continue from the first unfinished round");
    resume_cmd->add_option("--workdir", workdir_flag, "Work directory (default: $ADAPTRACK_WORKDIR)");
    auto* status = pipeline->add_subcommand("status", "Show round manifests");
    status->add_option("--workdir", workdir_flag, "Work directory (default: $ADAPTRACK_WORKDIR)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == static_cast<int>(CLI::ExitCodes::Success)) {
            out << (dynamic_cast<const CLI::CallForAllHelp*>(&e) ? app.help("", CLI::AppFormatMode::All)
                                                                   : app.help(""));
            return ok;
        }
        report_error(err, g, "usage", e.what(), usage);
        return usage;
    }

    auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(err);
    auto logger = std::make_shared<spdlog::logger>("adaptrack", sink);
    logger->set_level(g.verbosity >= 2 ? spdlog::level::debug
                      : g.verbosity == 1 ? spdlog::level::info
                                         : spdlog::level::warn);
    logger->set_pattern("[%l] %v");
    auto previous_logger = spdlog::default_logger();
    spdlog::set_default_logger(logger);
    struct Restore {
        std::shared_ptr<spdlog::logger> logger;
        ~Restore() { spdlog::set_default_logger(logger); }
    } restore{previous_logger};

    kernels::set_worker_count(g.jobs);
    const std::uint64_t seed = g.seed.value_or(0);

    try {
        if (*track) {
            TrackerConfig tc;
            if (!config_file.empty()) {
                tc = read_json_file(config_file).get<TrackerConfig>();
            }
            tc.validate();
            const auto info = load_seqinfo(seqinfo_file);
            const auto dets = load_detections(det_file);
            const auto records = run_sequence(tc, dets.by_frame(), info.frame_count);
            for (const auto& d : dets.detections) {
                if (d.frame > info.frame_count) {
                    throw ValidationError(det_file + ": frame " + std::to_string(d.frame) + " exceeds seqLength " +
                                          std::to_string(info.frame_count));
                }
            }
            write_annotations(records, fs::path(out_file));
            std::set<int> ids;
            for (const auto& r : records) {
                ids.insert(r.track_id);
            }
            emit(out, g,
                 {{"records", records.size()},
                  {"tracks", ids.size()},
                  {"detections", dets.detections.size()},
                  {"rejected", dets.rejected},
                  {"out", out_file}},
                 "wrote " + std::to_string(records.size()) + " records for " + std::to_string(ids.size()) +
                     " tracks to " + out_file + "\n");
        } else if (*eval) {
            const auto files = discover_sequences(
                gt_dir, results_dir, seqmap.empty() ? std::nullopt : std::optional<fs::path>(seqmap));
            const auto report = evaluate(files);
            const json j = report;
            if (const auto parent = fs::path(report_path).parent_path(); !parent.empty()) {
                fs::create_directories(parent);
            }
            std::ofstream(report_path) << j.dump(2) << "\n";
            if (g.as_json()) {
                out << j.dump() << "\n";
            } else {
                print_metrics(out, report);
            }
        } else if (*pseudo) {
            if (!config_file.empty()) {
                pseudo_cfg.tracker = read_json_file(config_file).get<TrackerConfig>();
            }
            pseudo_cfg.validate();
            const auto summary = generate_pseudo_dataset(
                pseudo_det, pseudo_out, pseudo_cfg,
                pseudo_dataset.empty() ? std::nullopt : std::optional<fs::path>(pseudo_dataset));
            emit(out, g,
                 {{"sequences", summary.sequences},
                  {"input_detections", summary.input_detections},
                  {"labels", summary.labels},
                  {"out", pseudo_out}},
                 "kept " + std::to_string(summary.labels) + " of " + std::to_string(summary.input_detections) +
                     " detections over " + std::to_string(summary.sequences) + " sequences\n");
        } else if (*mosaic) {
            std::tie(mosaic_cfg.n_source, mosaic_cfg.n_target) = parse_pair(mix, ',', "--mix");
            std::tie(mosaic_cfg.canvas_w, mosaic_cfg.canvas_h) = parse_pair(size, 'x', "--size");
            std::tie(mosaic_cfg.jitter_lo, mosaic_cfg.jitter_hi) = parse_range(jitter, "--jitter");
            mosaic_cfg.interpolation = interp == "bilinear" ? Interpolation::bilinear : Interpolation::nearest;
            mosaic_cfg.validate();
            if (mosaic_cfg.n_source > 0 && source_dir.empty()) {
                throw UsageError("--source is required when --mix uses source tiles");
            }
            const auto source_pool =
                mosaic_cfg.n_source > 0 ? load_pool(source_dir, Domain::source) : std::vector<LabeledSample>{};
            const auto target_pool =
                mosaic_cfg.n_target > 0 ? load_pool(target_dir, Domain::target) : std::vector<LabeledSample>{};
            const auto items = sample_batch(source_pool, target_pool, mosaic_cfg, count, seed, mosaic_out);
            emit(out, g, {{"count", items.size()}, {"seed", seed}, {"manifest", (fs::path(mosaic_out) / "manifest.json").string()}},
                 "wrote " + std::to_string(items.size()) + " mosaics to " + mosaic_out + "\n");
        } else if (*uniform) {
            std::vector<TensorArchive> archives;
            for (const auto& p : soup_in) {
                archives.push_back(load_archive(p));
            }
            const auto result = uniform_soup(archives);
            save_archive(result, soup_out);
            emit(out, g, {{"ingredients", archives.size()}, {"out", soup_out}},
                 "averaged " + std::to_string(archives.size()) + " archives into " + soup_out + "\n");
        } else if (*greedy) {
            auto candidates = read_candidates(candidates_file);
            const fs::path scratch_dir = scratch.empty() ? fs::path(soup_out + ".eval") : fs::path(scratch);
            const auto result = greedy_soup(std::move(candidates), command_evaluator(eval_cmd, scratch_dir), greedy_opts);
            save_archive(result.archive, soup_out);
            const json log = result;
            if (!soup_log.empty()) {
                std::ofstream(soup_log) << log.dump(2) << "\n";
            }
            std::size_t accepted = 0;
            for (const auto& i : result.ingredients) {
                accepted += i.accepted;
            }
            std::ostringstream human;
            human << "accepted " << accepted << " of " << result.ingredients.size() << " ingredients, score "
                  << result.final_score << "\n";
            emit(out, g, log, human.str());
        } else if (*run || *resume_cmd) {
            const Workdir wd(workdir_or_env(workdir_flag));
            const auto stored = wd.root() / "config.json";
            PipelineConfig pc;
            if (*run) {
                const fs::path cfg_path = fs::absolute(pipeline_config);
                pc = PipelineConfig::from_json(read_json_file(cfg_path), cfg_path.parent_path());
                if (g.seed) {
                    pc.mosaic_seed = *g.seed;
                }
                pc.validate();
                fs::create_directories(wd.root());
                std::ofstream(stored) << pc.to_json().dump(2) << "\n";
            } else {
                if (!fs::exists(stored)) {
                    throw DataError(stored.string() + ": no pipeline config; start with 'pipeline run'");
                }
                pc = PipelineConfig::from_json(read_json_file(stored), wd.root());
            }
            const auto last = run_pipeline(pc, wd);
            const auto s = status_json(wd);
            if (g.as_json()) {
                out << s.dump() << "\n";
            } else {
                out << "round " << last.round << " complete, checkpoint " << last.checkpoint_out << "\n";
            }
        } else if (*status) {
            const Workdir wd(workdir_or_env(workdir_flag));
            const auto s = status_json(wd);
            if (g.as_json()) {
                out << s.dump() << "\n";
            } else {
                print_status(out, s);
            }
        }
    } catch (const UsageError& e) {
        report_error(err, g, "usage", e.what(), usage);
        return usage;
    } catch (const ExternalCommandError& e) {
        report_error(err, g, "external_command", e.what(), external);
        return external;
    } catch (const ArchiveError& e) {
        report_error(err, g, "archive", e.what(), data);
        return data;
    } catch (const ParseError& e) {
        report_error(err, g, "parse", e.what(), data);
        return data;
    } catch (const ValidationError& e) {
        report_error(err, g, "validation", e.what(), data);
        return data;
    } catch (const DataError& e) {
        report_error(err, g, "data", e.what(), data);
        return data;
    } catch (const fs::filesystem_error& e) {
        report_error(err, g, "data", e.what(), data);
        return data;
    } catch (const json::exception& e) {
        report_error(err, g, "data", e.what(), data);
        return data;
    }
    return ok;
}

}  // namespace adaptrack::cli
