#pragma once

#include <algorithm>
#include <cstddef>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace refsig::whistle {

struct Confusion {
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;

    std::size_t total() const { return tp + fp + tn + fn; }
    void add(bool predicted, bool actual) {
        if (predicted && actual) ++tp;
        else if (predicted) ++fp;
        else if (actual) ++fn;
        else ++tn;
    }
};

struct EvalReport {
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    Confusion confusion;
    double threshold = 0.5;
};

// precision = 1 when nothing is predicted positive; recall = 1 when there is
// nothing to find; f1 = 0 when precision + recall = 0.
inline EvalReport report_from_confusion(const Confusion& c, double threshold = 0.5) {
    EvalReport r;
    r.confusion = c;
    r.threshold = threshold;
    const auto total = c.total();
    r.accuracy = total == 0 ? 0.0 : static_cast<double>(c.tp + c.tn) / static_cast<double>(total);
    r.precision = c.tp + c.fp == 0 ? 1.0 : static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
    r.recall = c.tp + c.fn == 0 ? 1.0 : static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
    r.f1 = r.precision + r.recall == 0.0 ? 0.0 : 2.0 * r.precision * r.recall / (r.precision + r.recall);
    return r;
}

// Plain-text table with Accuracy / Precision / Recall columns, optionally F1.
inline void render_table(std::ostream& os, const std::vector<std::pair<std::string, EvalReport>>& rows,
                         bool with_f1 = false) {
    std::vector<std::string> headers = {"Accuracy", "Precision", "Recall"};
    if (with_f1) headers.push_back("F1-Score");
    std::size_t name_w = 4;
    for (const auto& [name, r] : rows) name_w = std::max(name_w, name.size());
    constexpr int cell_w = 9;
    const auto rule = [&] {
        os << '+' << std::string(name_w + 2, '-');
        for (std::size_t i = 0; i < headers.size(); ++i) os << '+' << std::string(cell_w + 2, '-');
        os << "+\n";
    };
    const auto pct = [](double v) {
        std::ostringstream s;
        s << std::fixed << std::setprecision(2) << 100.0 * v << '%';
        return s.str();
    };
    rule();
    os << "| " << std::left << std::setw(static_cast<int>(name_w)) << "" << ' ';
    for (const auto& h : headers) os << "| " << std::setw(cell_w) << h << ' ';
    os << "|\n";
    rule();
    for (const auto& [name, r] : rows) {
        os << "| " << std::left << std::setw(static_cast<int>(name_w)) << name << ' ' << std::right;
        std::vector<double> cells = {r.accuracy, r.precision, r.recall};
        if (with_f1) cells.push_back(r.f1);
        for (double c : cells) os << "| " << std::setw(cell_w) << pct(c) << ' ';
        os << std::left << "|\n";
    }
    rule();
}

}  // namespace refsig::whistle
