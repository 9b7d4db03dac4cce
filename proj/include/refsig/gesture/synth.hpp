#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "refsig/common/error.hpp"
#include "refsig/common/random.hpp"
#include "refsig/gesture/roi.hpp"
#include "refsig/gesture/skeleton.hpp"

namespace refsig::gesture {

enum class ArmPose : int { Raised = 0, TPose = 1, Down = 2, OneArm = 3 };

inline constexpr std::array<ArmPose, 4> kArmPoses = {ArmPose::Raised, ArmPose::TPose, ArmPose::Down,
                                                     ArmPose::OneArm};

inline const char* to_string(ArmPose p) {
    switch (p) {
        case ArmPose::Raised: return "raised";
        case ArmPose::TPose: return "t-pose";
        case ArmPose::Down: return "down";
        case ArmPose::OneArm: return "one-arm";
    }
    return "?";
}

struct SkeletonSynthConfig {
    // Max deviation of each limb segment from its nominal direction (radians).
    double limb_spread = 0.35;
    double jitter_px = 1.0;
    double max_rotation = 0.25;
    double min_height_px = 120.0;
    double max_height_px = 300.0;
    // Probability that one random keypoint drops below the confidence threshold.
    double dropout = 0.0;
    double min_confidence = 0.6;
};

struct SyntheticSkeleton {
    Skeleton skeleton;
    ArmPose pose = ArmPose::Down;
    RoiBox roi;
};

// Parametric 2-D body model. Body proportions are in units of body height,
// then the whole figure is rotated, scaled and placed inside the frame.
inline SyntheticSkeleton synth_skeleton(ArmPose pose, const SkeletonSynthConfig& cfg, Rng& rng,
                                        std::int64_t frame_index = 0) {
    if (cfg.min_height_px <= 0.0 || cfg.max_height_px < cfg.min_height_px ||
        cfg.max_height_px > kSourceHeight * 0.9)
        throw ArgumentError("synth_skeleton: body height range must lie in (0, 0.9 * frame height]");
    using J = Joint;
    std::array<Point2, kJointCount> p{};
    const double sh = 0.11, hip = 0.07, upper = 0.17, fore = 0.15;
    p[std::size_t(J::Nose)] = {0.0, -0.40};
    p[std::size_t(J::LeftEye)] = {0.02, -0.42};
    p[std::size_t(J::RightEye)] = {-0.02, -0.42};
    p[std::size_t(J::LeftEar)] = {0.045, -0.41};
    p[std::size_t(J::RightEar)] = {-0.045, -0.41};
    p[std::size_t(J::LeftShoulder)] = {sh, -0.30};
    p[std::size_t(J::RightShoulder)] = {-sh, -0.30};
    p[std::size_t(J::LeftHip)] = {hip, 0.0};
    p[std::size_t(J::RightHip)] = {-hip, 0.0};
    p[std::size_t(J::LeftKnee)] = {hip, 0.25};
    p[std::size_t(J::RightKnee)] = {-hip, 0.25};
    p[std::size_t(J::LeftAnkle)] = {hip, 0.50};
    p[std::size_t(J::RightAnkle)] = {-hip, 0.50};

    // Nominal upper-arm direction per side, as angle from straight down
    // towards the body's own side (sign = outward).
    auto nominal = [&](bool raised, bool horizontal) {
        return raised ? std::numbers::pi : horizontal ? std::numbers::pi / 2 : 0.0;
    };
    double left = 0.0, right = 0.0;
    switch (pose) {
        case ArmPose::Raised: left = right = nominal(true, false); break;
        case ArmPose::TPose: left = right = nominal(false, true); break;
        case ArmPose::Down: left = right = nominal(false, false); break;
        case ArmPose::OneArm:
            left = nominal(true, false);
            right = nominal(false, false);
            if (rng.bernoulli(0.5)) std::swap(left, right);
            break;
    }
    auto place_arm = [&](J shoulder, J elbow, J wrist, double theta, double side) {
        const double a = theta + rng.uniform(-cfg.limb_spread, cfg.limb_spread);
        const double b = a + rng.uniform(-cfg.limb_spread, cfg.limb_spread);
        const Point2 s = p[std::size_t(shoulder)];
        const Point2 e = s + upper * Point2{side * std::sin(a), std::cos(a)};
        p[std::size_t(elbow)] = e;
        p[std::size_t(wrist)] = e + fore * Point2{side * std::sin(b), std::cos(b)};
    };
    place_arm(J::LeftShoulder, J::LeftElbow, J::LeftWrist, left, 1.0);
    place_arm(J::RightShoulder, J::RightElbow, J::RightWrist, right, -1.0);

    const double height = rng.uniform(cfg.min_height_px, cfg.max_height_px);
    const double rot = rng.uniform(-cfg.max_rotation, cfg.max_rotation);
    const double c = std::cos(rot), s = std::sin(rot);
    double lo_x = 1e300, lo_y = 1e300, hi_x = -1e300, hi_y = -1e300;
    for (auto& q : p) {
        q = {height * (c * q.x - s * q.y), height * (s * q.x + c * q.y)};
        lo_x = std::min(lo_x, q.x);
        hi_x = std::max(hi_x, q.x);
        lo_y = std::min(lo_y, q.y);
        hi_y = std::max(hi_y, q.y);
    }
    const double margin = 4.0 * cfg.jitter_px + 2.0;
    const double w = hi_x - lo_x + 2 * margin, h = hi_y - lo_y + 2 * margin;
    if (w >= kSourceWidth || h >= kSourceHeight) throw ArgumentError("synth_skeleton: body does not fit the frame");
    const double ox = rng.uniform(0.0, kSourceWidth - w), oy = rng.uniform(0.0, kSourceHeight - h);

    SyntheticSkeleton out;
    out.pose = pose;
    out.skeleton.frame_index = frame_index;
    out.roi = {ox, oy, w, h};
    for (std::size_t j = 0; j < kJointCount; ++j) {
        const double x = p[j].x - lo_x + margin + ox + cfg.jitter_px * rng.normal();
        const double y = p[j].y - lo_y + margin + oy + cfg.jitter_px * rng.normal();
        out.skeleton.keypoints[j] = {std::clamp(x, 0.0, double(kSourceWidth)),
                                     std::clamp(y, 0.0, double(kSourceHeight)),
                                     rng.uniform(cfg.min_confidence, 1.0)};
    }
    if (cfg.dropout > 0.0 && rng.bernoulli(cfg.dropout))
        out.skeleton.keypoints[rng.below(kJointCount)].confidence = rng.uniform(0.0, 0.25);
    return out;
}

// Poses drawn uniformly from the four classes.
inline std::vector<SyntheticSkeleton> synth_skeletons(std::size_t n, const SkeletonSynthConfig& cfg, Rng& rng) {
    std::vector<SyntheticSkeleton> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        out.push_back(synth_skeleton(kArmPoses[rng.below(kArmPoses.size())], cfg, rng, std::int64_t(i)));
    return out;
}

// A camera stream: consecutive frames grouped into segments that hold one
// arm pose for `min_run`..`max_run` frames.
inline std::vector<SyntheticSkeleton> synth_skeleton_stream(std::size_t frames, const SkeletonSynthConfig& cfg,
                                                            Rng& rng, std::size_t min_run = 2,
                                                            std::size_t max_run = 10) {
    if (min_run == 0 || max_run < min_run) throw ArgumentError("synth_skeleton_stream: bad run length range");
    std::vector<SyntheticSkeleton> out;
    out.reserve(frames);
    while (out.size() < frames) {
        const auto pose = kArmPoses[rng.below(kArmPoses.size())];
        const std::size_t run = min_run + rng.below(max_run - min_run + 1);
        for (std::size_t i = 0; i < run && out.size() < frames; ++i)
            out.push_back(synth_skeleton(pose, cfg, rng, static_cast<std::int64_t>(out.size())));
    }
    return out;
}

}  // namespace refsig::gesture
