#pragma once

#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "refsig/common/error.hpp"
#include "refsig/gesture/roi.hpp"
#include "refsig/gesture/skeleton.hpp"

namespace refsig::gesture {

struct StreamFrame {
    Skeleton skeleton;
    RoiBox roi;
};

// One JSON object per line:
//   {"frame": n, "roi": [x,y,w,h], "keypoints": [[x,y,c] x 17]}
// Blank lines are skipped.
inline std::vector<StreamFrame> read_skeleton_stream(std::istream& in) {
    std::vector<StreamFrame> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        auto fail = [&](const std::string& what) {
            return ParseError("skeleton stream line " + std::to_string(line_no) + ": " + what);
        };
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw fail(e.what());
        }
        try {
            StreamFrame f;
            f.skeleton.frame_index = j.at("frame").get<std::int64_t>();
            const auto roi = j.at("roi").get<std::vector<double>>();
            if (roi.size() != 4) throw fail("roi must have 4 numbers");
            f.roi = {roi[0], roi[1], roi[2], roi[3]};
            const auto& kps = j.at("keypoints");
            if (!kps.is_array() || kps.size() != kJointCount) throw fail("expected 17 keypoints");
            for (std::size_t k = 0; k < kJointCount; ++k) {
                const auto v = kps[k].get<std::vector<double>>();
                if (v.size() != 3) throw fail("keypoint " + std::to_string(k) + " must be [x,y,c]");
                if (!(v[2] >= 0.0 && v[2] <= 1.0)) throw fail("confidence outside [0,1]");
                f.skeleton.keypoints[k] = {v[0], v[1], v[2]};
            }
            out.push_back(f);
        } catch (const nlohmann::json::exception& e) {
            throw fail(e.what());
        }
    }
    return out;
}

inline std::vector<StreamFrame> read_skeleton_stream(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    return read_skeleton_stream(in);
}

inline void write_skeleton_stream(std::ostream& out, const std::vector<StreamFrame>& frames) {
    for (const auto& f : frames) {
        nlohmann::json kps = nlohmann::json::array();
        for (const auto& k : f.skeleton.keypoints) kps.push_back({k.x, k.y, k.confidence});
        nlohmann::json j = {{"frame", f.skeleton.frame_index},
                            {"roi", {f.roi.x, f.roi.y, f.roi.width, f.roi.height}},
                            {"keypoints", kps}};
        out << j.dump() << '\n';
    }
}

inline void write_skeleton_stream(const std::filesystem::path& path, const std::vector<StreamFrame>& frames) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    write_skeleton_stream(out, frames);
}

}  // namespace refsig::gesture
