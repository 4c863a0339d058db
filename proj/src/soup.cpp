#include <adaptrack/error.hpp>
#include <adaptrack/hashing.hpp>
#include <adaptrack/kernels.hpp>
#include <adaptrack/process.hpp>
#include <adaptrack/soup.hpp>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <charconv>
#include <cmath>

namespace adaptrack {
namespace {

std::string label_of(const TensorArchive& a, std::size_t index) {
    const auto it = a.metadata.find("id");
    return it != a.metadata.end() ? it->second : "#" + std::to_string(index);
}

std::string join_sorted(std::vector<std::string> ids) {
    std::sort(ids.begin(), ids.end());
    std::string out;
    for (const auto& id : ids) {
        if (!out.empty()) {
            out += ',';
        }
        out += id;
    }
    return out;
}

// Re-raises the active exception with the ingredient id prefixed, keeping its category.
[[noreturn]] void rethrow_for(const std::string& id) {
    try {
        throw;
    } catch (const ExternalCommandError& e) {
        throw ExternalCommandError("ingredient " + id + ": " + e.what(), e.exit_code());
    } catch (const std::exception& e) {
        throw DataError("ingredient " + id + ": " + e.what());
    }
}

}  // namespace

void check_compatible(const TensorArchive& a, const TensorArchive& b) {
    auto ia = a.entries.begin();
    auto ib = b.entries.begin();
    for (; ia != a.entries.end() && ib != b.entries.end(); ++ia, ++ib) {
        if (ia->first != ib->first) {
            throw ValidationError("archives are not soup-compatible: entry '" + std::min(ia->first, ib->first) +
                                  "' is missing from one of them");
        }
        if (ia->second.shape != ib->second.shape) {
            throw ValidationError("archives are not soup-compatible: entry '" + ia->first + "' differs in shape");
        }
    }
    if (ia != a.entries.end() || ib != b.entries.end()) {
        const auto& name = ia != a.entries.end() ? ia->first : ib->first;
        throw ValidationError("archives are not soup-compatible: entry '" + name + "' is missing from one of them");
    }
}

RunningSoup::RunningSoup(const TensorArchive& first) : layout_(first) {
    first.validate();
    for (auto& [name, t] : layout_.entries) {
        sums_.emplace_back(t.data.size(), 0.0);
    }
    add(first);
}

void RunningSoup::add(const TensorArchive& ingredient) {
    check_compatible(layout_, ingredient);
    ingredient.validate();
    std::size_t k = 0;
    for (const auto& [name, t] : ingredient.entries) {
        kernels::omp::accumulate(sums_[k++], t.data);
    }
    ++count_;
}

TensorArchive RunningSoup::mean() const {
    TensorArchive out = layout_;
    std::size_t k = 0;
    for (auto& [name, t] : out.entries) {
        kernels::omp::scale(sums_[k++], 1.0 / static_cast<double>(count_), t.data);
    }
    return out;
}

TensorArchive RunningSoup::mean_with(const TensorArchive& ingredient) const {
    check_compatible(layout_, ingredient);
    ingredient.validate();
    TensorArchive out = layout_;
    std::size_t k = 0;
    auto in = ingredient.entries.begin();
    for (auto& [name, t] : out.entries) {
        std::vector<double> sum = sums_[k++];
        kernels::omp::accumulate(sum, in->second.data);
        kernels::omp::scale(sum, 1.0 / static_cast<double>(count_ + 1), t.data);
        ++in;
    }
    return out;
}

TensorArchive uniform_soup(std::span<const TensorArchive> archives) {
    if (archives.empty()) {
        throw ValidationError("uniform soup needs at least one archive");
    }
    RunningSoup soup(archives[0]);
    std::vector<std::string> ids{label_of(archives[0], 0)};
    for (std::size_t i = 1; i < archives.size(); ++i) {
        try {
            soup.add(archives[i]);
        } catch (const ValidationError& e) {
            throw ValidationError("archive " + std::to_string(i) + ": " + e.what());
        }
        ids.push_back(label_of(archives[i], i));
    }
    auto out = soup.mean();
    out.metadata.erase("id");
    out.metadata["soup"] = "uniform";
    out.metadata["ingredients"] = join_sorted(std::move(ids));
    return out;
}

TensorArchive ema_update(const TensorArchive& running, const TensorArchive& update, double decay) {
    if (!(decay >= 0.0 && decay <= 1.0)) {
        throw ValidationError("ema decay must lie in [0, 1]");
    }
    check_compatible(running, update);
    running.validate();
    update.validate();
    TensorArchive out = running;
    auto in = update.entries.begin();
    for (auto& [name, t] : out.entries) {
        kernels::omp::blend(running.entries.at(name).data, in->second.data, decay, t.data);
        ++in;
    }
    return out;
}

void to_json(nlohmann::json& j, const SoupResult& r) {
    nlohmann::json ingredients = nlohmann::json::array();
    for (const auto& i : r.ingredients) {
        ingredients.push_back({{"id", i.id}, {"accepted", i.accepted}, {"score_after", i.score_after}});
    }
    j = {{"ingredients", std::move(ingredients)}, {"final_score", r.final_score}};
}

SoupResult greedy_soup(std::vector<SoupCandidate> candidates, const SoupEvaluator& evaluator,
                       GreedySoupOptions options) {
    if (candidates.empty()) {
        throw ValidationError("greedy soup needs at least one candidate");
    }
    for (std::size_t i = 1; i < candidates.size(); ++i) {
        try {
            check_compatible(candidates[0].archive, candidates[i].archive);
        } catch (const ValidationError& e) {
            throw ValidationError("candidate " + candidates[i].id + ": " + e.what());
        }
    }
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const SoupCandidate& a, const SoupCandidate& b) { return a.val_score > b.val_score; });

    SoupResult result;
    RunningSoup soup(candidates.front().archive);
    double best = 0.0;
    try {
        best = evaluator(candidates.front().archive, candidates.front().id);
    } catch (...) {
        rethrow_for(candidates.front().id);
    }
    result.ingredients.push_back({candidates.front().id, true, best});
    std::vector<std::string> accepted{candidates.front().id};

    for (std::size_t i = 1; i < candidates.size(); ++i) {
        const auto& c = candidates[i];
        auto tentative = soup.mean_with(c.archive);
        double score = 0.0;
        try {
            score = evaluator(tentative, "soup+" + c.id);
        } catch (...) {
            rethrow_for(c.id);
        }
        const bool keep = options.strict ? score > best : score >= best;
        if (keep) {
            soup.add(c.archive);
            best = score;
            accepted.push_back(c.id);
        }
        spdlog::info("greedy soup: {} {} (score {}, best {})", c.id, keep ? "accepted" : "rejected", score, best);
        result.ingredients.push_back({c.id, keep, score});
    }

    result.archive = soup.mean();
    result.archive.metadata.erase("id");
    result.archive.metadata["soup"] = "greedy";
    result.archive.metadata["ingredients"] = join_sorted(std::move(accepted));
    result.final_score = best;
    return result;
}

double parse_score(const std::string& output) {
    const auto first = output.find_first_not_of(" \t\r\n");
    const auto last = output.find_last_not_of(" \t\r\n");
    if (first == std::string::npos) {
        throw ExternalCommandError("evaluator printed nothing", 0);
    }
    const std::string text = output.substr(first, last - first + 1);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(value)) {
        throw ExternalCommandError("evaluator output is not a single number: '" + text + "'", 0);
    }
    return value;
}

SoupEvaluator command_evaluator(std::string command, std::filesystem::path scratch_dir) {
    return [command = std::move(command), scratch_dir = std::move(scratch_dir)](const TensorArchive& archive,
                                                                                const std::string&) {
        const auto bytes = encode_archive(archive);
        const auto path = scratch_dir / (sha256_hex(bytes) + ".tarc");
        std::filesystem::create_directories(scratch_dir);
        if (!std::filesystem::exists(path)) {
            save_archive(archive, path);
        }
        return parse_score(run_command_checked(command, {path.string()}));
    };
}

}  // namespace adaptrack
