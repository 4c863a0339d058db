#include "synth.hpp"

#include <adaptrack/error.hpp>
#include <adaptrack/soup.hpp>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <fstream>

using namespace adaptrack;

namespace {

TensorArchive vec(std::vector<float> v) {
    TensorArchive a;
    const auto n = v.size();
    a.entries["w"] = {{n}, std::move(v)};
    return a;
}

// -||w - target||^2 over every entry.
SoupEvaluator quadratic(const TensorArchive& target) {
    return [target](const TensorArchive& a, const std::string&) {
        double s = 0.0;
        for (const auto& [name, t] : a.entries) {
            const auto& ref = target.entries.at(name).data;
            for (std::size_t i = 0; i < t.data.size(); ++i) {
                const double d = static_cast<double>(t.data[i]) - ref[i];
                s += d * d;
            }
        }
        return -s;
    };
}

}  // namespace

TEST(Soup, UniformMean) {
    const std::vector<TensorArchive> in{vec({1, 2}), vec({3, 4})};
    const auto s = uniform_soup(in);
    EXPECT_EQ(s.entries.at("w").data, (std::vector<float>{2, 3}));
    EXPECT_EQ(s.metadata.at("soup"), "uniform");
}

TEST(Soup, UniformRejectsIncompatible) {
    TensorArchive other = vec({1, 2});
    other.entries["extra"] = {{1}, {0}};
    const std::vector<TensorArchive> in{vec({1, 2}), other};
    EXPECT_THROW(uniform_soup(in), ValidationError);
    const std::vector<TensorArchive> shape{vec({1, 2}), vec({1, 2, 3})};
    EXPECT_THROW(uniform_soup(shape), ValidationError);
}

TEST(Soup, UniformIsPermutationInvariantAndIdempotent) {
    Rng rng(3);
    for (int trial = 0; trial < 50; ++trial) {
        const auto layout = synth::random_archive(rng, 4);
        std::vector<TensorArchive> in;
        for (int k = 0; k < 2 + static_cast<int>(rng.below(4)); ++k) {
            in.push_back(synth::like(layout, rng));
        }
        const auto a = uniform_soup(in);
        std::reverse(in.begin(), in.end());
        EXPECT_TRUE(bit_equal(a, uniform_soup(in)));
        const std::vector<TensorArchive> same(3, in[0]);
        EXPECT_EQ(uniform_soup(same).entries, in[0].entries);
    }
}

TEST(Soup, Ema) {
    const auto a = vec({0});
    const auto b = vec({2});
    EXPECT_EQ(ema_update(a, b, 0.5).entries.at("w").data[0], 1.0f);
    EXPECT_EQ(ema_update(a, b, 1.0).entries, a.entries);
    EXPECT_EQ(ema_update(a, b, 0.0).entries, b.entries);
    EXPECT_EQ(ema_update(b, b, 0.3).entries, b.entries);
    EXPECT_THROW(ema_update(a, b, 1.5), ValidationError);
}

TEST(Soup, GreedySingleCandidate) {
    const auto r = greedy_soup({{"only", vec({1, 2}), 0.5}}, [](const auto&, const auto&) { return 1.0; });
    ASSERT_EQ(r.ingredients.size(), 1u);
    EXPECT_TRUE(r.ingredients[0].accepted);
    EXPECT_EQ(r.archive.entries, vec({1, 2}).entries);
}

TEST(Soup, GreedyAcceptsSymmetricIngredient) {
    const auto r = greedy_soup({{"a", vec({1, 0}), 0.9}, {"b", vec({-1, 0}), 0.8}}, quadratic(vec({0, 0})));
    ASSERT_EQ(r.ingredients.size(), 2u);
    EXPECT_TRUE(r.ingredients[1].accepted);
    EXPECT_EQ(r.final_score, 0.0);
    EXPECT_GT(r.ingredients[1].score_after, r.ingredients[0].score_after);
}

TEST(Soup, GreedyRejectsOffOptimum) {
    const auto r = greedy_soup({{"a", vec({1, 1}), 0.9}, {"b", vec({3, 0}), 0.8}, {"c", vec({-2, 5}), 0.1}},
                               quadratic(vec({1, 1})));
    EXPECT_FALSE(r.ingredients[1].accepted);
    EXPECT_FALSE(r.ingredients[2].accepted);
    EXPECT_EQ(r.archive.entries, vec({1, 1}).entries);
}

TEST(Soup, GreedyOrdersByValScoreAndHandlesTies) {
    auto constant = [](const auto&, const auto&) { return 1.0; };
    auto r = greedy_soup({{"low", vec({0}), 0.1}, {"high", vec({4}), 0.9}}, constant);
    EXPECT_EQ(r.ingredients[0].id, "high");
    EXPECT_TRUE(r.ingredients[1].accepted);
    EXPECT_EQ(r.archive.entries.at("w").data[0], 2.0f);
    r = greedy_soup({{"low", vec({0}), 0.1}, {"high", vec({4}), 0.9}}, constant, {true});
    EXPECT_FALSE(r.ingredients[1].accepted);
}

TEST(Soup, GreedyNeverWorseThanStandalone) {
    Rng rng(17);
    for (int trial = 0; trial < 100; ++trial) {
        const auto layout = synth::random_archive(rng, 3);
        const auto target = synth::like(layout, rng);
        const auto eval = quadratic(target);
        std::vector<SoupCandidate> c;
        double best = -std::numeric_limits<double>::infinity();
        for (int k = 0; k < 1 + static_cast<int>(rng.below(5)); ++k) {
            auto a = synth::like(layout, rng);
            const double s = eval(a, "");
            best = std::max(best, s);
            c.push_back({"c" + std::to_string(k), std::move(a), s});
        }
        const auto r = greedy_soup(c, eval);
        EXPECT_GE(r.final_score, best);
        double prev = -std::numeric_limits<double>::infinity();
        for (const auto& ing : r.ingredients) {
            if (ing.accepted) {
                EXPECT_GE(ing.score_after, prev);
                prev = ing.score_after;
            }
        }
    }
}

TEST(Soup, EvaluatorFailureNamesIngredient) {
    auto failing = [](const TensorArchive& a, const std::string&) -> double {
        if (a.entries.at("w").data[0] != 1.0f) {
            throw ExternalCommandError("boom", 4);
        }
        return 0.0;
    };
    try {
        greedy_soup({{"good", vec({1}), 1.0}, {"bad", vec({5}), 0.5}}, failing);
        FAIL();
    } catch (const ExternalCommandError& e) {
        EXPECT_NE(std::string(e.what()).find("bad"), std::string::npos);
    }
}

TEST(Soup, CommandEvaluator) {
    const auto dir = synth::temp_dir("soup");
    const auto script = dir / "eval.sh";
    std::ofstream(script) << "#!/bin/sh\ntest -f \"$1\" && echo 0.625\n";
    std::filesystem::permissions(script, std::filesystem::perms::owner_all);
    const auto eval = command_evaluator(script.string(), dir / "scratch");
    EXPECT_EQ(eval(vec({1}), "x"), 0.625);
    std::ofstream(script) << "#!/bin/sh\necho not-a-number\n";
    EXPECT_THROW(eval(vec({1}), "x"), ExternalCommandError);
    std::ofstream(script) << "#!/bin/sh\nexit 3\n";
    EXPECT_THROW(eval(vec({1}), "x"), ExternalCommandError);
    std::filesystem::remove_all(dir);
}

TEST(Soup, ParseScore) {
    EXPECT_EQ(parse_score(" 0.5\n"), 0.5);
    EXPECT_THROW(parse_score("1 2"), ExternalCommandError);
    EXPECT_THROW(parse_score(""), ExternalCommandError);
}

TEST(Soup, ResultJson) {
    const auto r = greedy_soup({{"a", vec({1}), 1.0}}, [](const auto&, const auto&) { return 2.0; });
    const nlohmann::json j = r;
    EXPECT_EQ(j["final_score"], 2.0);
    EXPECT_EQ(j["ingredients"][0]["id"], "a");
}
