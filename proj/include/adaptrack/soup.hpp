#pragma once

#include <adaptrack/tensor_archive.hpp>

#include <nlohmann/json_fwd.hpp>

#include <cstddef>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace adaptrack {

/// Throws ValidationError naming the first name or shape mismatch.
void check_compatible(const TensorArchive& a, const TensorArchive& b);

/// Elementwise mean, accumulated in double. Metadata records the lineage.
TensorArchive uniform_soup(std::span<const TensorArchive> archives);

/// out = decay * running + (1 - decay) * update, elementwise.
TensorArchive ema_update(const TensorArchive& running, const TensorArchive& update, double decay);

/// Exact uniform mean of the ingredients added so far, kept as double sums.
class RunningSoup {
public:
    explicit RunningSoup(const TensorArchive& first);

    void add(const TensorArchive& ingredient);
    TensorArchive mean() const;
    /// Mean that would result from add(ingredient), without changing the soup.
    TensorArchive mean_with(const TensorArchive& ingredient) const;
    std::size_t size() const noexcept { return count_; }

private:
    TensorArchive layout_;
    std::vector<std::vector<double>> sums_;  // in entry order
    std::size_t count_ = 0;
};

struct SoupCandidate {
    std::string id;
    TensorArchive archive;
    double val_score = 0.0;
};

struct SoupIngredient {
    std::string id;
    bool accepted = false;
    double score_after = 0.0;
};

struct SoupResult {
    TensorArchive archive;
    std::vector<SoupIngredient> ingredients;  // in the order they were tried
    double final_score = 0.0;
};

void to_json(nlohmann::json& j, const SoupResult& r);

/// Scores an archive, higher is better. `label` names the archive for error messages.
using SoupEvaluator = std::function<double(const TensorArchive& archive, const std::string& label)>;

struct GreedySoupOptions {
    /// Accept a candidate only on a strict improvement instead of on ties.
    bool strict = false;
};

/// Candidates are tried in descending val_score (input order among ties). The
/// soup starts as the best candidate and each further candidate is kept iff
/// the evaluator scores the tentative uniform mean at least as high as the
/// current soup. Evaluator failures are rethrown naming the ingredient.
SoupResult greedy_soup(std::vector<SoupCandidate> candidates, const SoupEvaluator& evaluator,
                       GreedySoupOptions options = {});

/// Evaluator that saves the archive under `scratch_dir` and runs
/// `<command> <archive-path>`, which must print one decimal number.
SoupEvaluator command_evaluator(std::string command, std::filesystem::path scratch_dir);

/// Parses the single decimal number an evaluator prints.
double parse_score(const std::string& output);

}  // namespace adaptrack
