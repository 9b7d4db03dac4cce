#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string_view>

#include "refsig/common/error.hpp"

namespace refsig::gesture {

struct Point2 {
    double x = 0.0;
    double y = 0.0;

    friend Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
    friend Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
    friend Point2 operator*(double s, Point2 p) { return {s * p.x, s * p.y}; }
    friend bool operator==(Point2, Point2) = default;
};

inline double norm(Point2 p) { return std::hypot(p.x, p.y); }

struct Keypoint {
    double x = 0.0;
    double y = 0.0;
    double confidence = 0.0;

    Point2 point() const { return {x, y}; }
};

// COCO keypoint order.
enum class Joint : std::size_t {
    Nose,
    LeftEye,
    RightEye,
    LeftEar,
    RightEar,
    LeftShoulder,
    RightShoulder,
    LeftElbow,
    RightElbow,
    LeftWrist,
    RightWrist,
    LeftHip,
    RightHip,
    LeftKnee,
    RightKnee,
    LeftAnkle,
    RightAnkle,
};

inline constexpr std::size_t kJointCount = 17;

inline constexpr std::array<std::string_view, kJointCount> kJointNames = {
    "nose",          "left_eye",       "right_eye",  "left_ear",    "right_ear",  "left_shoulder",
    "right_shoulder", "left_elbow",    "right_elbow", "left_wrist", "right_wrist", "left_hip",
    "right_hip",     "left_knee",      "right_knee", "left_ankle",  "right_ankle",
};

inline constexpr int kSourceWidth = 640;
inline constexpr int kSourceHeight = 480;

struct Skeleton {
    std::array<Keypoint, kJointCount> keypoints{};
    std::int64_t frame_index = 0;
    int width = kSourceWidth;
    int height = kSourceHeight;

    Keypoint& operator[](Joint j) { return keypoints[static_cast<std::size_t>(j)]; }
    const Keypoint& operator[](Joint j) const { return keypoints[static_cast<std::size_t>(j)]; }
};

}  // namespace refsig::gesture
