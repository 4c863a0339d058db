#include "cli.hpp"
#include "synth.hpp"

#include <adaptrack/tensor_archive.hpp>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <fstream>
#include <sstream>

using namespace adaptrack;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run run_cli(std::vector<std::string> args) {
    args.insert(args.begin(), "adaptrack");
    std::vector<const char*> argv;
    for (const auto& a : args) {
        argv.push_back(a.c_str());
    }
    std::ostringstream out, err;
    const int code = cli::dispatch(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
protected:
    void SetUp() override { root = synth::temp_dir("cli"); }
    void TearDown() override { fs::remove_all(root); }
    fs::path root;
};

}  // namespace

TEST_F(CliTest, HelpAndUsageErrors) {
    EXPECT_EQ(run_cli({"--help"}).code, 0);
    for (const char* sub : {"track", "eval", "pseudo", "mosaic", "soup", "pipeline"}) {
        const auto r = run_cli({sub, "--help"});
        EXPECT_EQ(r.code, 0) << sub;
        EXPECT_NE(r.out.find("Usage"), std::string::npos) << sub;
    }
    EXPECT_EQ(run_cli({}).code, 1);
    EXPECT_EQ(run_cli({"frobnicate"}).code, 1);
    EXPECT_EQ(run_cli({"track", "--det", "x"}).code, 1);
    EXPECT_EQ(run_cli({"mosaic", "--target", "t", "--count", "1", "--out", "o", "--size", "big"}).code, 1);
}

TEST_F(CliTest, JsonErrorsAreSingleLine) {
    const auto r = run_cli({"--output", "json", "track", "--det", (root / "none.txt").string(), "--seqinfo",
                        (root / "none.ini").string(), "--out", (root / "o.txt").string()});
    EXPECT_EQ(r.code, 2);
    EXPECT_EQ(std::count(r.err.begin(), r.err.end(), '\n'), 1);
    const auto j = nlohmann::json::parse(r.err);
    EXPECT_EQ(j["exit_code"], 2);
}

TEST_F(CliTest, TrackThenEvaluate) {
    const auto gt = synth::linear_sequence(3, 30);
    synth::write_sequence(root / "data", "SEQ-1", 30, 16, 16, gt, synth::to_detections(gt));
    const auto seq = root / "data" / "SEQ-1";
    auto r = run_cli({"track", "--det", (seq / "det" / "det.txt").string(), "--seqinfo", (seq / "seqinfo.ini").string(),
                  "--out", (root / "res" / "SEQ-1.txt").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    r = run_cli({"--output", "json", "eval", "--gt", (root / "data").string(), "--results", (root / "res").string(),
             "--report", (root / "report.json").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = nlohmann::json::parse(r.out);
    EXPECT_EQ(j["mota"], 1.0);
    EXPECT_EQ(j["idf1"], 1.0);
    std::ifstream report(root / "report.json");
    EXPECT_EQ(nlohmann::json::parse(report)["per_sequence"].size(), 1u);
}

TEST_F(CliTest, PseudoAndMosaicAreDeterministic) {
    const auto gt = synth::linear_sequence(2, 4, 1.0);
    auto dets = synth::to_detections(gt);
    dets[0].confidence = 0.69;
    synth::write_sequence(root / "tgt", "T1", 4, 40, 30, {}, dets);
    fs::create_directories(root / "det");
    fs::copy_file(root / "tgt" / "T1" / "det" / "det.txt", root / "det" / "T1.txt");
    auto r = run_cli({"--output", "json", "pseudo", "--det", (root / "det").string(), "--out", (root / "pl").string(),
                  "--threshold", "0.7", "--dataset", (root / "tgt").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(nlohmann::json::parse(r.out)["labels"], dets.size() - 1);

    for (const char* out : {"m1", "m2"}) {
        r = run_cli({"mosaic", "--target", (root / "pl").string(), "--mix", "0,4", "--count", "3", "--size", "32x24",
                 "--seed", "11", "--out", (root / out).string()});
        ASSERT_EQ(r.code, 0) << r.err;
    }
    std::ifstream a(root / "m1" / "manifest.json"), b(root / "m2" / "manifest.json");
    std::stringstream sa, sb;
    sa << a.rdbuf();
    sb << b.rdbuf();
    EXPECT_EQ(sa.str(), sb.str());
    EXPECT_EQ(run_cli({"mosaic", "--target", (root / "pl").string(), "--count", "1", "--out", (root / "m3").string()}).code,
              1);
}

TEST_F(CliTest, SoupCommands) {
    TensorArchive a, b;
    a.entries["w"] = {{2}, {1, 2}};
    b.entries["w"] = {{2}, {3, 4}};
    save_archive(a, root / "a.tarc");
    save_archive(b, root / "b.tarc");
    auto r = run_cli({"soup", "uniform", "--in", (root / "a.tarc").string(), (root / "b.tarc").string(), "--out",
                  (root / "u.tarc").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(load_archive(root / "u.tarc").entries.at("w").data, (std::vector<float>{2, 3}));

    std::ofstream(root / "list.txt") << "# candidates\na.tarc 0.9\nb.tarc 0.5\n";
    std::ofstream(root / "eval.sh") << "#!/bin/sh\necho 1\n";
    r = run_cli({"soup", "greedy", "--candidates", (root / "list.txt").string(), "--eval-cmd",
             "sh " + (root / "eval.sh").string(), "--out", (root / "g.tarc").string(), "--log",
             (root / "log.json").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    std::ifstream log(root / "log.json");
    EXPECT_EQ(nlohmann::json::parse(log)["ingredients"].size(), 2u);

    std::ofstream(root / "eval.sh") << "#!/bin/sh\nexit 5\n";
    r = run_cli({"soup", "greedy", "--candidates", (root / "list.txt").string(), "--eval-cmd",
             "sh " + (root / "eval.sh").string(), "--out", (root / "g.tarc").string()});
    EXPECT_EQ(r.code, 3);

    std::ofstream(root / "bad.tarc") << "junk";
    r = run_cli({"soup", "uniform", "--in", (root / "bad.tarc").string(), "--out", (root / "u2.tarc").string()});
    EXPECT_EQ(r.code, 2);
}
