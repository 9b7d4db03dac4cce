#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <numbers>

#include "refsig/common/error.hpp"
#include "refsig/gesture/skeleton.hpp"

namespace refsig::gesture {

// Wraps into (-pi, pi].
inline double wrap_angle(double theta) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    double r = std::fmod(theta, two_pi);
    if (r <= -std::numbers::pi) r += two_pi;
    else if (r > std::numbers::pi) r -= two_pi;
    return r;
}

inline constexpr double kMinRayLength = 1e-9;

// Signed angle at B from ray B->A to ray B->C:
// atan2(BC_y, BC_x) - atan2(BA_y, BA_x), wrapped into (-pi, pi].
inline double joint_angle(Point2 a, Point2 b, Point2 c) {
    const Point2 ba = a - b;
    const Point2 bc = c - b;
    if (norm(ba) <= kMinRayLength || norm(bc) <= kMinRayLength)
        throw DegenerateGeometryError("joint_angle: coincident points");
    return wrap_angle(std::atan2(bc.y, bc.x) - std::atan2(ba.y, ba.x));
}

struct AngleFeatures {
    static constexpr double kUnset = std::numeric_limits<double>::quiet_NaN();

    double left_hse = kUnset;   // hip - shoulder - elbow
    double right_hse = kUnset;
    double left_sew = kUnset;   // shoulder - elbow - wrist
    double right_sew = kUnset;
    bool valid = false;

    std::array<double, 4> as_array() const { return {left_hse, right_hse, left_sew, right_sew}; }
};

inline constexpr double kDefaultConfidenceThreshold = 0.3;

// Reads only hips, shoulders, elbows and wrists. Low confidence or coincident
// joints yield valid = false rather than an error.
inline AngleFeatures extract_features(const Skeleton& s, double confidence_threshold = kDefaultConfidenceThreshold) {
    using J = Joint;
    AngleFeatures f;
    for (J j : {J::LeftHip, J::RightHip, J::LeftShoulder, J::RightShoulder, J::LeftElbow, J::RightElbow,
                J::LeftWrist, J::RightWrist})
        if (!(s[j].confidence >= confidence_threshold)) return f;
    try {
        const double lh = joint_angle(s[J::LeftHip].point(), s[J::LeftShoulder].point(), s[J::LeftElbow].point());
        const double rh = joint_angle(s[J::RightHip].point(), s[J::RightShoulder].point(), s[J::RightElbow].point());
        const double ls = joint_angle(s[J::LeftShoulder].point(), s[J::LeftElbow].point(), s[J::LeftWrist].point());
        const double rs = joint_angle(s[J::RightShoulder].point(), s[J::RightElbow].point(), s[J::RightWrist].point());
        f = {lh, rh, ls, rs, true};
    } catch (const DegenerateGeometryError&) {
        f.valid = false;
    }
    return f;
}

}  // namespace refsig::gesture
