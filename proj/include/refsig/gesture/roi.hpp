#pragma once

#include <algorithm>

#include "refsig/common/error.hpp"
#include "refsig/gesture/skeleton.hpp"

namespace refsig::gesture {

struct RoiBox {
    double x = 0.0;
    double y = 0.0;
    double width = 0.0;
    double height = 0.0;

    void validate(int frame_width = kSourceWidth, int frame_height = kSourceHeight) const {
        if (!(width > 0.0 && height > 0.0)) throw ArgumentError("roi: width and height must be positive");
        if (x < 0.0 || y < 0.0 || x + width > frame_width || y + height > frame_height)
            throw ArgumentError("roi: box lies outside the source frame");
    }

    Point2 center() const { return {x + 0.5 * width, y + 0.5 * height}; }
};

// Crop -> uniform scale -> symmetric zero padding into a square model input.
struct InputTransform {
    double scale = 1.0;
    double pad_x = 0.0;
    double pad_y = 0.0;
    int target = 192;

    // ROI-relative pixel -> model input pixel.
    Point2 to_model(Point2 roi_local) const { return {roi_local.x * scale + pad_x, roi_local.y * scale + pad_y}; }
    Point2 to_roi(Point2 model) const { return {(model.x - pad_x) / scale, (model.y - pad_y) / scale}; }
};

inline InputTransform roi_to_input_transform(const RoiBox& roi, int target = 192) {
    roi.validate();
    if (target <= 0) throw ArgumentError("roi: target size must be positive");
    InputTransform t;
    t.target = target;
    t.scale = static_cast<double>(target) / std::max(roi.width, roi.height);
    t.pad_x = 0.5 * (target - roi.width * t.scale);
    t.pad_y = 0.5 * (target - roi.height * t.scale);
    return t;
}

inline Point2 frame_to_model(Point2 frame, const InputTransform& t, const RoiBox& roi) {
    return t.to_model({frame.x - roi.x, frame.y - roi.y});
}

inline Point2 model_to_frame(Point2 model, const InputTransform& t, const RoiBox& roi) {
    const auto local = t.to_roi(model);
    return {local.x + roi.x, local.y + roi.y};
}

// Model-space keypoints -> source-frame skeleton; confidences pass through.
inline Skeleton map_keypoints_to_frame(const std::array<Keypoint, kJointCount>& model_space, const InputTransform& t,
                                       const RoiBox& roi) {
    Skeleton s;
    for (std::size_t i = 0; i < kJointCount; ++i) {
        const auto p = model_to_frame(model_space[i].point(), t, roi);
        s.keypoints[i] = {p.x, p.y, model_space[i].confidence};
    }
    return s;
}

}  // namespace refsig::gesture
