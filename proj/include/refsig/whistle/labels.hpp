#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "refsig/common/error.hpp"

namespace refsig::whistle {

inline constexpr const char* kWhistleLabel = "whistle";

struct LabelEvent {
    double start = 0.0;
    double end = 0.0;
    std::string label = kWhistleLabel;

    bool is_whistle() const { return label == kWhistleLabel; }
    bool contains(double t) const { return t >= start && t <= end; }
    double duration() const { return end - start; }
};

namespace detail {

inline double parse_seconds(const std::string& field, std::size_t line_no) {
    double value = 0.0;
    const char* first = field.data();
    const char* last = field.data() + field.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last)
        throw ParseError("labels line " + std::to_string(line_no) + ": '" + field + "' is not a number");
    return value;
}

}  // namespace detail

// Audacity label track export: `start<TAB>end<TAB>label` per line, seconds.
// Spectral-selection continuation lines (leading backslash) are skipped.
// Events with labels other than "whistle" are kept; check is_whistle().
inline std::vector<LabelEvent> parse_audacity_labels(std::istream& in) {
    std::vector<LabelEvent> events;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '\\') continue;

        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, '\t')) fields.push_back(field);
        if (fields.size() < 2)
            throw ParseError("labels line " + std::to_string(line_no) + ": expected start<TAB>end<TAB>label");

        LabelEvent ev;
        ev.start = detail::parse_seconds(fields[0], line_no);
        ev.end = detail::parse_seconds(fields[1], line_no);
        ev.label = fields.size() >= 3 ? fields[2] : std::string{};
        if (ev.start < 0.0 || ev.start >= ev.end)
            throw ValidationError("labels line " + std::to_string(line_no) + ": start must satisfy 0 <= start < end");
        events.push_back(std::move(ev));
    }
    return events;
}

inline std::vector<LabelEvent> parse_audacity_labels(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    return parse_audacity_labels(in);
}

inline void write_audacity_labels(std::ostream& out, const std::vector<LabelEvent>& events) {
    out << std::fixed << std::setprecision(6);
    for (const auto& ev : events) out << ev.start << '\t' << ev.end << '\t' << ev.label << '\n';
}

}  // namespace refsig::whistle
