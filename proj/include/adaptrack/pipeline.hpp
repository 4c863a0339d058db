#pragma once

#include <adaptrack/mosaic.hpp>
#include <adaptrack/pseudo_label.hpp>
#include <adaptrack/soup.hpp>

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>

namespace adaptrack {

/// Settings that may change per round.
struct RoundOverride {
    std::optional<double> threshold;
    std::optional<bool> include_source;
};

struct PipelineConfig {
    int rounds = 1;
    std::filesystem::path source_dataset;     // D^S, labelled MOT-style sequences
    std::filesystem::path target_dataset;     // D^T, unlabelled sequences with images
    std::filesystem::path warmup_checkpoint;  // G_1
    std::optional<std::filesystem::path> validation_dataset;

    /// `<cmd> <checkpoint.tarc> <sequence-dir> <out-det.txt>`
    std::string inference_cmd;
    /// `<cmd> <checkpoint.tarc> <mosaic-dir> <pseudo-label-dir> <candidates-out-dir>`,
    /// writes one or more .tarc files into the candidates directory.
    std::string train_cmd;
    /// `<cmd> <archive.tarc>`, prints one number (higher is better).
    std::string eval_cmd;

    PseudoLabelConfig pseudo;
    MosaicConfig mosaic;
    std::size_t mosaic_count = 16;
    std::uint64_t mosaic_seed = 0;
    GreedySoupOptions soup;
    /// Whether rounds after the first keep mixing in source tiles.
    bool step3_include_source = false;
    std::map<int, RoundOverride> overrides;

    /// Relative paths resolve against `base_dir`.
    static PipelineConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
    nlohmann::json to_json() const;
    void validate() const;
};

enum class RoundStatus { running, complete, failed };

struct RoundManifest {
    int round = 0;
    RoundStatus status = RoundStatus::running;
    int attempt = 1;
    std::string failed_stage;
    std::string error;

    std::string source_dataset;
    std::string target_dataset;
    std::string pseudo_labels;
    std::string mosaic_dir;
    std::string checkpoint_in;   // content hash of G_t, empty for the bootstrap record
    std::string checkpoint_out;  // content hash of G_{t+1}
    double threshold = 0.0;
    bool include_source = false;
    std::uint64_t mosaic_seed = 0;

    std::map<std::string, std::string> artifacts;  // relative path -> sha256
    nlohmann::json soup_log;
    std::optional<nlohmann::json> metrics;
    std::string started_at;
    std::string finished_at;

    nlohmann::json to_json() const;
    static RoundManifest from_json(const nlohmann::json& j);
};

/// Content-addressed checkpoint store and manifest directory under one work dir.
class Workdir {
public:
    explicit Workdir(std::filesystem::path root);

    const std::filesystem::path& root() const noexcept { return root_; }
    std::filesystem::path manifest_path(int round) const;
    std::filesystem::path round_dir(int round, int attempt) const;
    std::filesystem::path checkpoint_path(const std::string& id) const;

    /// Copies an archive file into the store and returns its id (SHA-256).
    std::string store_checkpoint(const std::filesystem::path& file) const;
    std::string store_checkpoint(const TensorArchive& archive) const;
    /// Path of a stored checkpoint after re-hashing it; throws on a mismatch.
    std::filesystem::path verified_checkpoint(const std::string& id) const;

    std::map<int, RoundManifest> manifests() const;
    void write_manifest(const RoundManifest& m) const;

private:
    std::filesystem::path root_;
};

/// Executes round previous.round + 1: inference with G_t over D^T, confidence
/// filtering, mosaic sampling over (D^S, pseudo-labelled D^T), external
/// fine-tuning, then a greedy soup over G_t and the fine-tuned candidates.
/// A failing stage writes a failed manifest and rethrows.
RoundManifest run_round(const RoundManifest& previous, const PipelineConfig& config, const Workdir& workdir);

/// Records the warm-up checkpoint as round 0.
RoundManifest bootstrap(const PipelineConfig& config, const Workdir& workdir);

/// First round that still has to run: 0 for an empty work dir, a failed or
/// unfinished round if there is one, otherwise one past the last complete round.
int resume(const std::filesystem::path& workdir);

/// Bootstraps if needed and runs rounds until config.rounds are complete.
/// Returns the manifest of the last round.
RoundManifest run_pipeline(const PipelineConfig& config, const Workdir& workdir);

const char* to_string(RoundStatus s) noexcept;

}  // namespace adaptrack
