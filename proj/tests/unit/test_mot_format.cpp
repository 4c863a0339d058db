#include "synth.hpp"

#include <adaptrack/error.hpp>
#include <adaptrack/mot_format.hpp>

#include <gtest/gtest.h>

#include <sstream>

using namespace adaptrack;

TEST(MotFormat, ParsesDetections) {
    std::istringstream in("1,-1,10,20,30,40,0.9,-1,-1,-1\n2,-1,1,2,0,4,0.5\n3,-1,1,2,3,4,1.5,-1,-1,-1\n");
    const auto p = parse_detections(in);
    ASSERT_EQ(p.detections.size(), 2u);
    EXPECT_EQ(p.rejected, 1u);
    EXPECT_EQ(p.clamped, 1u);
    EXPECT_EQ(p.detections[0].bbox, (BBox{10, 20, 30, 40}));
    EXPECT_EQ(p.detections[1].confidence, 1.0);
    EXPECT_EQ(p.frame(3).size(), 1u);
}

TEST(MotFormat, ShortLineReportsLineNumber) {
    std::istringstream in("1,-1,10,20,30,40,0.9\n2,-1,1,2\n");
    try {
        parse_detections(in);
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 2u);
    }
}

TEST(MotFormat, GroundTruthFilters) {
    std::istringstream in(
        "1,1,0,0,10,10,1,1,1\n"
        "1,2,0,0,10,10,0,1,1\n"   // ignored region
        "1,3,0,0,10,10,1,7,1\n"   // static person
        "2,1,1,0,10,10,1,1,0.5\n");
    const auto gt = parse_ground_truth(in);
    ASSERT_EQ(gt.size(), 2u);
    EXPECT_EQ(gt[1].visibility, 0.5);
}

TEST(MotFormat, DuplicateFrameIdRejected) {
    std::istringstream in("1,1,0,0,10,10,1,1,1\n1,1,5,5,10,10,1,1,1\n");
    EXPECT_THROW(parse_ground_truth(in), ValidationError);
}

TEST(MotFormat, WriteParseRoundTrip) {
    Rng rng(3);
    std::vector<TrackRecord> records;
    for (int i = 0; i < 200; ++i) {
        TrackRecord r;
        r.frame = 1 + static_cast<int>(rng.below(20));
        r.track_id = 1 + i;
        r.bbox = {rng.uniform() * 1000, rng.uniform() * 1000, 1 + rng.uniform() * 100, 1 + rng.uniform() * 100};
        r.confidence = rng.uniform();
        r.visibility = rng.uniform();
        records.push_back(r);
    }
    std::ostringstream out;
    const auto bytes = write_annotations(records, out);
    EXPECT_EQ(bytes, out.str().size());
    std::istringstream in(out.str());
    auto back = parse_results(in);
    std::sort(records.begin(), records.end(),
              [](const auto& a, const auto& b) { return std::tie(a.frame, a.track_id) < std::tie(b.frame, b.track_id); });
    EXPECT_EQ(back, records);
}

TEST(MotFormat, SeqinfoRoundTrip) {
    std::istringstream in("[Sequence]\nname=MOT17-02\nimDir=img1\nframeRate=30\nseqLength=600\nimWidth=1920\n"
                          "imHeight=1080\nimExt=.jpg\n");
    const auto info = parse_seqinfo(in);
    EXPECT_EQ(info.name, "MOT17-02");
    EXPECT_EQ(info.frame_count, 600);
    EXPECT_EQ(info.frame_path("/d/MOT17-02", 7), std::filesystem::path("/d/MOT17-02/img1/000007.jpg"));
    std::ostringstream out;
    write_seqinfo(info, out);
    std::istringstream again(out.str());
    const auto info2 = parse_seqinfo(again);
    EXPECT_EQ(info2.width, 1920);
    EXPECT_EQ(info2.image_ext, ".jpg");
}

TEST(MotFormat, SeqinfoMissingKey) {
    std::istringstream in("[Sequence]\nname=x\nseqLength=3\nimHeight=10\n");
    EXPECT_THROW(parse_seqinfo(in), DataError);
}

TEST(MotFormat, FormatNumberRoundTrips) {
    for (double v : {0.1, 1.0 / 3.0, 1e-300, 123456.789, -0.0}) {
        EXPECT_EQ(std::stod(format_number(v)), v);
    }
    EXPECT_EQ(format_number(42.0), "42");
}
