#include <gtest/gtest.h>

#include <bit>
#include <cmath>
#include <numbers>
#include <sstream>

#include "oracles/oracles.hpp"
#include "refsig/gesture/angles.hpp"
#include "refsig/gesture/classifier.hpp"
#include "refsig/gesture/roi.hpp"
#include "refsig/gesture/skeleton.hpp"
#include "refsig/gesture/stream.hpp"
#include "refsig/gesture/synth.hpp"
#include "refsig/gesture/temporal_filter.hpp"

using namespace refsig;
using namespace refsig::gesture;
using std::numbers::pi;

namespace {

void put(Skeleton& s, Joint j, double x, double y, double c = 0.9) { s[j] = {x, y, c}; }

// Upright body in image coordinates (y down), arms straight out sideways.
Skeleton t_pose() {
    Skeleton s;
    for (auto& k : s.keypoints) k = {320.0, 100.0, 0.9};
    put(s, Joint::LeftHip, 340, 300);
    put(s, Joint::RightHip, 300, 300);
    put(s, Joint::LeftShoulder, 340, 200);
    put(s, Joint::RightShoulder, 300, 200);
    put(s, Joint::LeftElbow, 400, 200);
    put(s, Joint::RightElbow, 240, 200);
    put(s, Joint::LeftWrist, 460, 200);
    put(s, Joint::RightWrist, 180, 200);
    return s;
}

Skeleton arms_raised() {
    auto s = t_pose();
    put(s, Joint::LeftElbow, 340, 140);
    put(s, Joint::RightElbow, 300, 140);
    put(s, Joint::LeftWrist, 340, 80);
    put(s, Joint::RightWrist, 300, 80);
    return s;
}

bool same_bits(double a, double b) { return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b); }

}  // namespace

TEST(Roi, SquareBox) {
    const auto t = roi_to_input_transform({10, 20, 100, 100});
    EXPECT_DOUBLE_EQ(t.scale, 1.92);
    EXPECT_DOUBLE_EQ(t.pad_x, 0.0);
    EXPECT_DOUBLE_EQ(t.pad_y, 0.0);
}

TEST(Roi, WideBoxPadsVertically) {
    const auto t = roi_to_input_transform({0, 0, 200, 100});
    EXPECT_DOUBLE_EQ(t.scale, 0.96);
    EXPECT_DOUBLE_EQ(t.pad_x, 0.0);
    EXPECT_DOUBLE_EQ(t.pad_y, 48.0);
}

TEST(Roi, DegenerateBoxIsArgumentError) {
    EXPECT_THROW(roi_to_input_transform({0, 0, 0, 10}), ArgumentError);
    EXPECT_THROW(roi_to_input_transform({600, 0, 100, 10}), ArgumentError);
}

TEST(Roi, CenterAndCornerMapBack) {
    const RoiBox roi{100, 50, 80, 80};
    const auto t = roi_to_input_transform(roi);
    const auto c = model_to_frame({96, 96}, t, roi);
    EXPECT_NEAR(c.x, 140.0, 1e-12);
    EXPECT_NEAR(c.y, 90.0, 1e-12);
    const RoiBox wide{10, 20, 200, 100};
    const auto tw = roi_to_input_transform(wide);
    const auto corner = model_to_frame({tw.pad_x, tw.pad_y}, tw, wide);
    EXPECT_NEAR(corner.x, 10.0, 1e-12);
    EXPECT_NEAR(corner.y, 20.0, 1e-12);
}

TEST(Roi, RoundTripIdentity) {
    Rng rng(1);
    for (int i = 0; i < 100; ++i) {
        const RoiBox roi{rng.uniform(0, 300), rng.uniform(0, 200), rng.uniform(10, 300), rng.uniform(10, 250)};
        const auto t = roi_to_input_transform(roi);
        const Point2 p{roi.x + rng.uniform(0, roi.width), roi.y + rng.uniform(0, roi.height)};
        const auto back = model_to_frame(frame_to_model(p, t, roi), t, roi);
        EXPECT_NEAR(back.x, p.x, 1e-9);
        EXPECT_NEAR(back.y, p.y, 1e-9);
    }
}

TEST(Roi, MappedSkeletonKeepsConfidences) {
    const RoiBox roi{50, 60, 100, 200};
    const auto t = roi_to_input_transform(roi);
    std::array<Keypoint, kJointCount> model{};
    for (std::size_t i = 0; i < kJointCount; ++i) model[i] = {10.0 * i, 5.0 * i, 0.05 * i};
    const auto s = map_keypoints_to_frame(model, t, roi);
    for (std::size_t i = 0; i < kJointCount; ++i) {
        EXPECT_EQ(s.keypoints[i].confidence, model[i].confidence);
        const auto m = frame_to_model(s.keypoints[i].point(), t, roi);
        EXPECT_NEAR(m.x, model[i].x, 1e-9);
    }
}

TEST(Angle, PerpendicularRays) { EXPECT_DOUBLE_EQ(joint_angle({0, 1}, {0, 0}, {1, 0}), -pi / 2); }

TEST(Angle, CollinearSameDirection) { EXPECT_DOUBLE_EQ(joint_angle({1, 0}, {0, 0}, {2, 0}), 0.0); }

TEST(Angle, WrapRangeIsHalfOpen) {
    EXPECT_DOUBLE_EQ(wrap_angle(pi), pi);
    EXPECT_DOUBLE_EQ(wrap_angle(-pi), pi);
    EXPECT_NEAR(wrap_angle(1.5 * pi), -0.5 * pi, 1e-15);
    // Opposite rays give +pi, whichever way round.
    EXPECT_DOUBLE_EQ(joint_angle({-1, 0}, {0, 0}, {1, 0}), pi);
}

TEST(Angle, CoincidentPointsAreDegenerate) {
    EXPECT_THROW(joint_angle({1, 1}, {1, 1}, {2, 2}), DegenerateGeometryError);
    EXPECT_THROW(joint_angle({0, 0}, {1, 1}, {1, 1}), DegenerateGeometryError);
}

TEST(Angle, RotationByFixedAngleAboutPivot) {
    Rng rng(2);
    for (int i = 0; i < 200; ++i) {
        const Point2 a{rng.uniform(-9, 9), rng.uniform(-9, 9)}, b{rng.uniform(-9, 9), rng.uniform(-9, 9)},
            c{rng.uniform(-9, 9), rng.uniform(-9, 9)};
        const Point2 pivot{rng.uniform(-20, 20), rng.uniform(-20, 20)};
        auto rot = [&](Point2 p) {
            const Point2 q = p - pivot;
            return pivot + Point2{std::cos(1.23) * q.x - std::sin(1.23) * q.y, std::sin(1.23) * q.x + std::cos(1.23) * q.y};
        };
        const double d = wrap_angle(joint_angle(rot(a), rot(b), rot(c)) - joint_angle(a, b, c));
        EXPECT_LE(std::abs(d), 1e-9);
    }
}

TEST(Angle, InvariancesAndAntisymmetry) {
    Rng rng(3);
    for (int i = 0; i < 1000; ++i) {
        const Point2 a{rng.uniform(-50, 50), rng.uniform(-50, 50)}, b{rng.uniform(-50, 50), rng.uniform(-50, 50)},
            c{rng.uniform(-50, 50), rng.uniform(-50, 50)};
        const double th = joint_angle(a, b, c);
        const double s = std::exp(rng.uniform(-4, 4));
        const Point2 shift{rng.uniform(-1e3, 1e3), rng.uniform(-1e3, 1e3)};
        EXPECT_LE(std::abs(wrap_angle(joint_angle(s * a, s * b, s * c) - th)), 1e-9);
        EXPECT_LE(std::abs(wrap_angle(joint_angle(a + shift, b + shift, c + shift) - th)), 1e-9);
        EXPECT_EQ(joint_angle(c, b, a), wrap_angle(-th));
    }
}

TEST(Features, TPoseIsRightAngle) {
    const auto f = extract_features(t_pose());
    ASSERT_TRUE(f.valid);
    EXPECT_NEAR(std::abs(f.left_hse), pi / 2, 1e-6);
    EXPECT_NEAR(std::abs(f.right_hse), pi / 2, 1e-6);
    EXPECT_NEAR(std::abs(f.left_sew), pi, 1e-6);
}

TEST(Features, ArmsRaisedIsNearPi) {
    const auto f = extract_features(arms_raised());
    ASSERT_TRUE(f.valid);
    EXPECT_NEAR(std::abs(f.left_hse), pi, 0.2);
    EXPECT_NEAR(std::abs(f.right_hse), pi, 0.2);
    // Without pixel jitter the upper arm is off vertical by at most the
    // limb spread, and the torso leans by atan(0.04 / 0.30).
    Rng rng(4);
    SkeletonSynthConfig cfg;
    cfg.jitter_px = 0.0;
    const double bound = cfg.limb_spread + std::atan(0.04 / 0.30) + 1e-9;
    for (int i = 0; i < 200; ++i) {
        const auto g = extract_features(synth_skeleton(ArmPose::Raised, cfg, rng).skeleton);
        ASSERT_TRUE(g.valid);
        EXPECT_NEAR(std::abs(g.left_hse), pi, bound);
        EXPECT_NEAR(std::abs(g.right_hse), pi, bound);
    }
}

TEST(Features, LowConfidenceInvalidates) {
    auto s = t_pose();
    s[Joint::LeftWrist].confidence = 0.1;
    EXPECT_FALSE(extract_features(s).valid);
    auto d = t_pose();
    d[Joint::RightElbow] = d[Joint::RightShoulder];
    EXPECT_FALSE(extract_features(d).valid);
}

TEST(Features, ReadsOnlyArmAndHipJoints) {
    Rng rng(5);
    const std::array<Joint, 9> others = {Joint::Nose,     Joint::LeftEye,   Joint::RightEye,
                                         Joint::LeftEar,  Joint::RightEar,  Joint::LeftKnee,
                                         Joint::RightKnee, Joint::LeftAnkle, Joint::RightAnkle};
    for (int i = 0; i < 200; ++i) {
        auto s = synth_skeleton(kArmPoses[rng.below(4)], {}, rng).skeleton;
        const auto before = extract_features(s);
        for (auto j : others) s[j] = {rng.uniform(-1e4, 1e4), rng.uniform(-1e4, 1e4), rng.uniform(0, 1)};
        const auto after = extract_features(s);
        ASSERT_EQ(before.valid, after.valid);
        const auto x = before.as_array(), y = after.as_array();
        for (std::size_t k = 0; k < 4; ++k) EXPECT_TRUE(same_bits(x[k], y[k]));
    }
}

TEST(RuleClassifier, RaisedAndTPose) {
    const RulePoseClassifier rule;
    EXPECT_EQ(rule.classify(extract_features(arms_raised())).label, PoseLabel::HandsRaised);
    EXPECT_EQ(rule.classify(extract_features(t_pose())).label, PoseLabel::Other);
}

TEST(RuleClassifier, AgreesWithGeneratorPoses) {
    Rng rng(6);
    const RulePoseClassifier rule;
    for (const auto& s : synth_skeletons(500, {}, rng)) {
        const auto f = extract_features(s.skeleton);
        ASSERT_TRUE(f.valid);
        EXPECT_EQ(rule.classify(f).label == PoseLabel::HandsRaised, s.pose == ArmPose::Raised) << to_string(s.pose);
    }
}

TEST(Classifier, InvalidFeaturesArePrecondition) {
    const AngleFeatures invalid;
    EXPECT_THROW(RulePoseClassifier{}.classify(invalid), PreconditionError);
    EXPECT_THROW(PoseClassifier{}.classify(invalid), PreconditionError);
    EXPECT_THROW(classify_pose(invalid, RulePoseClassifier{}), PreconditionError);
}

TEST(Classifier, LearnsRuleOnSmallSet) {
    Rng rng(7);
    const RulePoseClassifier rule;
    std::vector<LabeledFeatures> data;
    for (const auto& s : synth_skeletons(800, {}, rng)) {
        const auto f = extract_features(s.skeleton);
        data.push_back({f, rule.classify(f).label});
    }
    PoseClassifier clf;
    clf.init(rng);
    const auto hist = clf.train(data, {.epochs = 60, .seed = 1});
    EXPECT_LT(hist.back(), hist.front());
    std::size_t agree = 0;
    const auto held = synth_skeletons(300, {}, rng);
    for (const auto& s : held) {
        const auto f = extract_features(s.skeleton);
        agree += clf.classify(f).label == rule.classify(f).label;
    }
    EXPECT_GE(agree, 294u);
}

TEST(Classifier, CheckpointRoundTrip) {
    Rng rng(8);
    PoseClassifier a;
    a.init(rng);
    PoseClassifier b;
    b.load_records(a.to_records());
    const auto f = extract_features(t_pose());
    EXPECT_EQ(a.classify(f).confidence, b.classify(f).confidence);
}

TEST(TemporalFilter, FiresOnFourthConsecutiveFrame) {
    TemporalFilter f;
    EXPECT_FALSE(f.step(1, true));
    EXPECT_FALSE(f.step(2, true));
    EXPECT_FALSE(f.step(3, true));
    EXPECT_TRUE(f.step(4, true));
    EXPECT_FALSE(f.step(5, true));
    EXPECT_EQ(f.state().current_run, 5u);
}

TEST(TemporalFilter, InterruptedRunNeverFires) {
    TemporalFilter f;
    const bool seq[] = {true, true, true, false, true};
    for (int i = 0; i < 5; ++i) EXPECT_FALSE(f.step(i + 1, seq[i]));
}

TEST(TemporalFilter, FrameGapResetsRun) {
    TemporalFilter f;
    f.step(1, true);
    f.step(2, true);
    f.step(3, true);
    EXPECT_FALSE(f.step(5, true));
    EXPECT_EQ(f.state().current_run, 1u);
}

TEST(TemporalFilter, NonMonotonicFrameIsSequencingError) {
    TemporalFilter f;
    f.step(3, true);
    EXPECT_THROW(f.step(3, true), SequencingError);
    EXPECT_THROW(f.step(2, false), SequencingError);
}

TEST(TemporalFilter, PureStepLeavesInputStateAlone) {
    const TemporalFilterState s0;
    const auto r = temporal_filter_step(s0, 1, true);
    EXPECT_EQ(s0.current_run, 0u);
    EXPECT_EQ(r.state.current_run, 1u);
}

TEST(TemporalFilter, ExhaustiveAgainstStreakOracle) {
    for (std::size_t len = 1; len <= 10; ++len)
        for (std::uint32_t bits = 0; bits < (1u << len); ++bits) {
            std::vector<bool> seq(len);
            for (std::size_t i = 0; i < len; ++i) seq[i] = bits >> i & 1u;
            const auto expected = oracle::filter_fires(seq);
            TemporalFilter f;
            std::size_t fires = 0, long_runs = 0, run = 0;
            for (std::size_t i = 0; i < len; ++i) {
                const bool fired = f.step(static_cast<std::int64_t>(i), seq[i]);
                ASSERT_EQ(fired, expected[i]) << "len " << len << " bits " << bits << " t " << i;
                fires += fired;
                run = seq[i] ? run + 1 : 0;
                if (run == 4) ++long_runs;
            }
            EXPECT_LE(fires, long_runs);
        }
}

TEST(Stream, JsonLinesRoundTrip) {
    Rng rng(9);
    std::vector<StreamFrame> frames;
    for (const auto& s : synth_skeleton_stream(20, {}, rng)) frames.push_back({s.skeleton, s.roi});
    std::stringstream ss;
    write_skeleton_stream(ss, frames);
    const auto back = read_skeleton_stream(ss);
    ASSERT_EQ(back.size(), frames.size());
    for (std::size_t i = 0; i < frames.size(); ++i) {
        EXPECT_EQ(back[i].skeleton.frame_index, frames[i].skeleton.frame_index);
        EXPECT_EQ(back[i].roi.width, frames[i].roi.width);
        for (std::size_t k = 0; k < kJointCount; ++k) {
            EXPECT_EQ(back[i].skeleton.keypoints[k].x, frames[i].skeleton.keypoints[k].x);
            EXPECT_EQ(back[i].skeleton.keypoints[k].confidence, frames[i].skeleton.keypoints[k].confidence);
        }
    }
}

TEST(Stream, MalformedLineReportsLineNumber) {
    std::stringstream ss;
    write_skeleton_stream(ss, {StreamFrame{}});
    ss << "\n{\"frame\": 2, \"roi\": [0,0,1,1], \"keypoints\": [[1,2,0.5]]}\n";
    try {
        read_skeleton_stream(ss);
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
    }
    std::stringstream junk("not json\n");
    EXPECT_THROW(read_skeleton_stream(junk), ParseError);
}

TEST(Synth, StreamHoldsPosesForRuns) {
    Rng rng(10);
    const auto stream = synth_skeleton_stream(100, {}, rng, 3, 6);
    ASSERT_EQ(stream.size(), 100u);
    std::size_t run = 1;
    for (std::size_t i = 1; i < stream.size(); ++i) {
        EXPECT_EQ(stream[i].skeleton.frame_index, static_cast<std::int64_t>(i));
        if (stream[i].pose == stream[i - 1].pose) ++run;
        else {
            EXPECT_GE(run, 3u);
            run = 1;
        }
    }
}
