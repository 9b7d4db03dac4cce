#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "refsig/audio/stft.hpp"
#include "refsig/audio/wav.hpp"
#include "refsig/ckconv/whistle_net.hpp"
#include "refsig/common/error.hpp"
#include "refsig/game/simulator.hpp"
#include "refsig/gesture/angles.hpp"
#include "refsig/gesture/classifier.hpp"
#include "refsig/gesture/stream.hpp"
#include "refsig/gesture/synth.hpp"
#include "refsig/gesture/temporal_filter.hpp"
#include "refsig/nn/checkpoint.hpp"
#include "refsig/verify/selfcheck.hpp"
#include "refsig/whistle/corpus.hpp"
#include "refsig/whistle/detect.hpp"
#include "refsig/whistle/train.hpp"

#ifndef REFSIG_VERSION
#define REFSIG_VERSION "dev"
#endif

namespace fs = std::filesystem;
using nlohmann::json;
using namespace refsig;

namespace {

// Usage or validation problem: exit code 2.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// Every flag of the subcommand with its effective value.
json option_snapshot(const CLI::App& sub) {
    json j = json::object();
    for (const auto* opt : sub.get_options()) {
        if (opt->get_lnames().empty() || opt->get_lnames()[0] == "help") continue;
        const auto& name = opt->get_lnames()[0];
        if (opt->get_expected_min() == 0) {
            j[name] = opt->count() > 0;
        } else if (!opt->results().empty()) {
            const auto& r = opt->results();
            j[name] = r.size() == 1 ? json(r[0]) : json(r);
        } else {
            j[name] = opt->get_default_str();
        }
    }
    return j;
}

void write_manifest(const fs::path& path, const CLI::App& sub, const json& inputs, const json& outputs,
                    const json& extra = json::object()) {
    json m = {{"subcommand", sub.get_name()},
              {"config", option_snapshot(sub)},
              {"inputs", inputs},
              {"outputs", outputs},
              {"code_version", REFSIG_VERSION},
              {"timestamp", utc_timestamp()}};
    for (auto it = extra.begin(); it != extra.end(); ++it) m[it.key()] = it.value();
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw IoError("cannot write manifest " + path.string());
    out << m.dump(2) << '\n';
}

fs::path manifest_beside(const fs::path& artifact) {
    auto p = artifact;
    p += ".manifest.json";
    return p;
}

json report_json(const whistle::EvalReport& r) {
    return {{"accuracy", r.accuracy},
            {"precision", r.precision},
            {"recall", r.recall},
            {"f1", r.f1},
            {"threshold", r.threshold},
            {"confusion", {{"tp", r.confusion.tp}, {"fp", r.confusion.fp}, {"tn", r.confusion.tn}, {"fn", r.confusion.fn}}}};
}

void require_file(const fs::path& p, const std::string& what) {
    if (!fs::is_regular_file(p)) throw UsageError(what + " not found: " + p.string());
}

whistle::Split parse_split(const std::string& s) {
    if (s == "train") return whistle::Split::Train;
    if (s == "val") return whistle::Split::Val;
    if (s == "test") return whistle::Split::Test;
    throw UsageError("unknown split '" + s + "'");
}

// ---------------------------------------------------------------- gen-data

struct GenDataArgs {
    std::string out;
    std::size_t clips = 40;
    double ratio = 10.0;
    double duration = 3.0;
    double min_snr = -10.0;
    double max_snr = 0.0;
    double negative_fraction = 0.0;
    std::size_t skeleton_frames = 200;
    double jitter = 1.0;
    double dropout = 0.05;
    std::uint64_t seed = 1;
};

int cmd_gen_data(const CLI::App& sub, const GenDataArgs& a) {
    const fs::path out(a.out);
    whistle::CorpusConfig cc;
    cc.clips = a.clips;
    cc.ratio = a.ratio;
    cc.clip_duration = a.duration;
    cc.min_snr_db = a.min_snr;
    cc.max_snr_db = a.max_snr;
    cc.negative_clip_fraction = a.negative_fraction;
    cc.seed = a.seed;
    if (a.min_snr > a.max_snr) throw UsageError("--min-snr must not exceed --max-snr");
    std::vector<whistle::CorpusClipInfo> info;
    const auto clips = whistle::synth_corpus(cc, &info);
    fs::create_directories(out / "audio");
    whistle::write_corpus(out / "audio", clips);

    Rng rng(a.seed ^ 0x5eed5eedULL);
    gesture::SkeletonSynthConfig sc;
    sc.jitter_px = a.jitter;
    sc.dropout = a.dropout;
    const auto skeletons = gesture::synth_skeleton_stream(a.skeleton_frames, sc, rng);
    std::vector<gesture::StreamFrame> frames;
    std::ofstream truth(out / "skeleton_poses.txt");
    for (const auto& s : skeletons) {
        frames.push_back({s.skeleton, s.roi});
        truth << s.skeleton.frame_index << ' ' << gesture::to_string(s.pose) << '\n';
    }
    gesture::write_skeleton_stream(out / "skeletons.jsonl", frames);

    json realized = nullptr;
    if (!clips.empty()) {
        const auto ds = whistle::build_dataset(clips, audio::SpectralConfig{}, {});
        realized = {{"windows", ds.samples.size()},
                    {"whistle", ds.whistle_count},
                    {"no_whistle", ds.no_whistle_count},
                    {"ratio", ds.class_ratio()}};
        std::cout << "clips " << clips.size() << ", windows " << ds.samples.size() << ", realized ratio "
                  << std::fixed << std::setprecision(2) << ds.class_ratio() << ":1\n";
    } else {
        std::cout << "clips 0 (empty corpus)\n";
    }
    std::cout << "skeleton frames " << frames.size() << '\n';

    json clip_meta = json::array();
    for (std::size_t i = 0; i < clips.size(); ++i)
        clip_meta.push_back({{"id", clips[i].source_id}, {"snr_db", info[i].snr_db}, {"freq_hz", info[i].whistle_freq}});
    write_manifest(out / "manifest.json", sub, json::object(),
                   {{"audio", (out / "audio").string()},
                    {"skeletons", (out / "skeletons.jsonl").string()},
                    {"skeleton_poses", (out / "skeleton_poses.txt").string()}},
                   {{"seed", a.seed}, {"realized", realized}, {"clips", clip_meta}});
    return 0;
}

// ----------------------------------------------------------- train-whistle

struct TrainWhistleArgs {
    std::string data;
    std::string out;
    std::size_t epochs = 6;
    double lr = 5e-3;
    std::string schedule = "cosine";
    std::size_t batch = 32;
    std::uint64_t seed = 1;
    std::uint64_t split_seed = 0;
    std::string precision = "float";
    double threshold = 0.5;
};

whistle::DatasetSpec load_dataset(const std::string& data, std::uint64_t split_seed) {
    fs::path dir(data);
    if (fs::is_directory(dir / "audio")) dir /= "audio";
    if (!fs::is_directory(dir)) throw UsageError("corpus directory not found: " + data);
    const auto clips = whistle::load_corpus(dir);
    if (clips.empty()) throw UsageError("corpus " + dir.string() + " holds no .wav files");
    whistle::DatasetOptions opt;
    opt.seed = split_seed;
    auto ds = whistle::build_dataset(clips, audio::SpectralConfig{}, opt);
    for (const auto& w : ds.warnings) std::cerr << "warning: " << w << '\n';
    return ds;
}

template <class T>
int train_whistle_impl(const CLI::App& sub, const TrainWhistleArgs& a, const whistle::DatasetSpec& ds) {
    ckconv::WhistleNet<T> net;
    Rng init(a.seed);
    net.init(init);
    whistle::TrainConfig tc;
    tc.lr = a.lr;
    tc.cosine_decay = a.schedule == "cosine";
    tc.epochs = a.epochs;
    tc.batch = a.batch;
    tc.seed = a.seed + 1;
    tc.threshold = a.threshold;
    std::cout << "windows " << ds.samples.size() << " (train " << ds.train.size() << ", val " << ds.val.size()
              << ", test " << ds.test.size() << "), ratio " << std::fixed << std::setprecision(2) << ds.class_ratio()
              << ":1, parameters " << net.parameter_count() << '\n';
    const auto log = whistle::train(net, ds, tc, [](const whistle::EpochLog& e) {
        std::cout << "epoch " << e.epoch << "  loss " << std::setprecision(4) << e.train_loss << "  val acc "
                  << e.val.accuracy << " prec " << e.val.precision << " rec " << e.val.recall << " f1 " << e.val.f1
                  << std::endl;
    });
    std::cout << "best epoch " << log.best_epoch << '\n';
    const fs::path out(a.out);
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    nn::save_checkpoint(out, net.to_records());

    json epochs = json::array();
    for (const auto& e : log.epochs)
        epochs.push_back({{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"val", report_json(e.val)}});
    json test = nullptr;
    if (!ds.test.empty()) {
        const auto rep = whistle::evaluate(net, ds, ds.test, a.threshold);
        whistle::render_table(std::cout, {{"test (windows)", rep}}, true);
        test = report_json(rep);
    }
    write_manifest(manifest_beside(out), sub, {{"data", a.data}}, {{"checkpoint", out.string()}},
                   {{"seeds", {{"init", a.seed}, {"train", tc.seed}, {"split", a.split_seed}}},
                    {"parameter_count", net.parameter_count()},
                    {"lr_schedule", a.schedule},
                    {"class_weights", log.class_weights},
                    {"initialization", "uniform(+-sqrt(1/fan_in)), zero biases, BatchNorm gamma=1 beta=0"},
                    {"best_epoch", log.best_epoch},
                    {"epochs", epochs},
                    {"test", test}});
    return 0;
}

int cmd_train_whistle(const CLI::App& sub, const TrainWhistleArgs& a) {
    const auto ds = load_dataset(a.data, a.split_seed);
    if (a.precision == "double") return train_whistle_impl<double>(sub, a, ds);
    return train_whistle_impl<float>(sub, a, ds);
}

ckconv::WhistleNet<float> load_whistle_net(const std::string& path) {
    require_file(path, "checkpoint");
    ckconv::WhistleNet<float> net;
    net.load_records(nn::load_checkpoint(path));
    return net;
}

// ------------------------------------------------------------ eval-whistle

struct EvalWhistleArgs {
    std::string data;
    std::string checkpoint;
    std::string split = "test";
    std::uint64_t split_seed = 0;
    double threshold = 0.5;
    std::string report;
};

int cmd_eval_whistle(const CLI::App& sub, const EvalWhistleArgs& a) {
    auto net = load_whistle_net(a.checkpoint);
    const auto ds = load_dataset(a.data, a.split_seed);
    std::vector<std::size_t> idx;
    if (a.split == "all") {
        for (std::size_t i = 0; i < ds.samples.size(); ++i) idx.push_back(i);
    } else {
        idx = ds.indices(parse_split(a.split));
    }
    if (idx.empty()) throw UsageError("split '" + a.split + "' is empty");
    const auto rep = whistle::evaluate(net, ds, idx, a.threshold);
    whistle::render_table(std::cout, {{a.split + " (" + std::to_string(idx.size()) + " windows)", rep}}, true);
    const auto& c = rep.confusion;
    std::cout << "TP " << c.tp << "  FP " << c.fp << "  TN " << c.tn << "  FN " << c.fn << "  threshold "
              << a.threshold << '\n';
    const fs::path report = a.report.empty() ? fs::path(a.checkpoint + ".eval.json") : fs::path(a.report);
    std::ofstream(report) << report_json(rep).dump(2) << '\n';
    write_manifest(manifest_beside(report), sub, {{"data", a.data}, {"checkpoint", a.checkpoint}},
                   {{"report", report.string()}}, {{"seeds", {{"split", a.split_seed}}}});
    return 0;
}

// ------------------------------------------------------------------ detect

struct DetectArgs {
    std::string checkpoint;
    std::string wav;
    std::string json_out;
    double threshold = 0.5;
    std::size_t min_run = 3;
    double merge_gap = 0.1;
};

int cmd_detect(const CLI::App& sub, const DetectArgs& a) {
    auto net = load_whistle_net(a.checkpoint);
    require_file(a.wav, "audio file");
    const auto clip = audio::load_wav(a.wav);
    audio::Spectrogram spec;
    try {
        spec = audio::stft(clip, audio::SpectralConfig{}, fs::path(a.wav).stem().string());
    } catch (const EmptyInputError& e) {
        throw UsageError(std::string("detect: ") + e.what());
    }
    whistle::DetectConfig dc{a.threshold, a.min_run, a.merge_gap};
    const auto events = whistle::detect_events(net, spec, dc);
    json arr = json::array();
    std::cout << std::fixed << std::setprecision(3);
    for (const auto& e : events) {
        std::cout << e.start << ' ' << e.end << ' ' << e.peak_confidence << '\n';
        arr.push_back({{"start", e.start}, {"end", e.end}, {"confidence", e.peak_confidence}});
    }
    const fs::path sidecar = a.json_out.empty() ? fs::path(a.wav + ".events.json") : fs::path(a.json_out);
    std::ofstream(sidecar) << json{{"source", a.wav}, {"events", arr}}.dump(2) << '\n';
    write_manifest(manifest_beside(sidecar), sub, {{"wav", a.wav}, {"checkpoint", a.checkpoint}},
                   {{"events", sidecar.string()}});
    return 0;
}

// ----------------------------------------------------------- train-gesture

struct TrainGestureArgs {
    std::string out;
    std::size_t samples = 4000;
    std::size_t epochs = 200;
    double lr = 1e-2;
    double jitter = 1.0;
    std::uint64_t seed = 1;
};

// Labels come from the rule-based reference decider.
std::vector<gesture::LabeledFeatures> synth_pose_set(std::size_t n, const gesture::SkeletonSynthConfig& cfg,
                                                     Rng& rng) {
    const gesture::RulePoseClassifier rule;
    std::vector<gesture::LabeledFeatures> out;
    for (const auto& s : gesture::synth_skeletons(n, cfg, rng)) {
        const auto f = gesture::extract_features(s.skeleton);
        if (!f.valid) continue;
        out.push_back({f, rule.classify(f).label});
    }
    return out;
}

int cmd_train_gesture(const CLI::App& sub, const TrainGestureArgs& a) {
    Rng rng(a.seed);
    gesture::SkeletonSynthConfig sc;
    sc.jitter_px = a.jitter;
    const auto data = synth_pose_set(a.samples, sc, rng);
    gesture::PoseClassifier clf;
    clf.init(rng);
    const auto hist = clf.train(data, {.lr = a.lr, .epochs = a.epochs, .batch = 64, .seed = a.seed + 1});
    const auto held_out = synth_pose_set(1000, sc, rng);
    std::size_t agree = 0;
    for (const auto& s : held_out) agree += clf.classify(s.features).label == s.label;
    const double agreement = static_cast<double>(agree) / static_cast<double>(held_out.size());
    std::cout << "final loss " << hist.back() << ", agreement with rule on " << held_out.size()
              << " held-out skeletons: " << std::fixed << std::setprecision(2) << 100.0 * agreement << "%\n";
    const fs::path out(a.out);
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    nn::save_checkpoint(out, clf.to_records());
    write_manifest(manifest_beside(out), sub, json::object(), {{"checkpoint", out.string()}},
                   {{"seed", a.seed}, {"final_loss", hist.back()}, {"agreement", agreement}});
    return 0;
}

// ----------------------------------------------------------------- gesture

struct GestureArgs {
    std::string skeletons;
    std::string classifier;
    std::size_t frames_rule = 4;
    double confidence = gesture::kDefaultConfidenceThreshold;
    std::string out;
};

int cmd_gesture(const CLI::App& sub, const GestureArgs& a) {
    require_file(a.skeletons, "skeleton stream");
    std::vector<gesture::StreamFrame> frames;
    try {
        frames = gesture::read_skeleton_stream(fs::path(a.skeletons));
    } catch (const ParseError& e) {
        throw UsageError(e.what());
    }
    std::optional<gesture::PoseClassifier> clf;
    if (!a.classifier.empty()) {
        require_file(a.classifier, "classifier checkpoint");
        clf.emplace();
        clf->load_records(nn::load_checkpoint(a.classifier));
    }
    const gesture::RulePoseClassifier rule;
    gesture::TemporalFilter filter(a.frames_rule);
    std::size_t positives = 0, invalid = 0, fires = 0;
    json events = json::array();
    std::cout << std::fixed << std::setprecision(3);
    for (const auto& f : frames) {
        const auto feats = gesture::extract_features(f.skeleton, a.confidence);
        std::string label = "invalid";
        double conf = 0.0;
        bool positive = false;
        if (feats.valid) {
            const auto d = clf ? clf->classify(feats) : rule.classify(feats);
            positive = d.label == gesture::PoseLabel::HandsRaised;
            label = positive ? "hands_raised" : "other";
            conf = d.confidence;
        } else {
            ++invalid;
        }
        positives += positive;
        const bool fired = filter.step(f.skeleton.frame_index, positive);
        if (fired) {
            ++fires;
            events.push_back(f.skeleton.frame_index);
        }
        std::cout << f.skeleton.frame_index << ' ' << label << ' ' << conf << ' ' << (fired ? "fired" : "-") << '\n';
    }
    std::cout << "frames " << frames.size() << ", positive " << positives << ", invalid " << invalid << ", fired "
              << fires << '\n';
    const fs::path out = a.out.empty() ? fs::path(a.skeletons + ".gesture.json") : fs::path(a.out);
    std::ofstream(out) << json{{"frames", frames.size()}, {"positive", positives}, {"invalid", invalid},
                               {"fired_at", events}}.dump(2)
                       << '\n';
    write_manifest(manifest_beside(out), sub, {{"skeletons", a.skeletons}, {"classifier", a.classifier}},
                   {{"summary", out.string()}});
    return 0;
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
    std::string scenario;
    std::string rules;
    std::string trace;
    std::string initial = "Standby";
    std::size_t robots = 3;
    std::size_t quorum = 2;
    double window = 1.0;
    double gc_delay = 15.0;
    double min_latency = 0.005;
    double max_latency = 0.050;
    double drop = 0.05;
    std::uint64_t seed = 1;
};

int cmd_simulate(const CLI::App& sub, const SimulateArgs& a) {
    require_file(a.scenario, "scenario file");
    game::Scenario sc;
    game::RuleTable rules = game::default_rules();
    game::Trace trace;
    try {
        sc = game::load_scenario(a.scenario, game::parse_game_state(a.initial));
        if (!a.rules.empty()) {
            require_file(a.rules, "rule table");
            rules = game::load_rules(a.rules);
        }
        game::NetworkConfig net{a.robots, a.min_latency, a.max_latency, a.drop, a.seed};
        game::ConsensusPolicy policy{a.quorum, a.window, a.gc_delay};
        trace = game::simulate(sc, net, policy, rules);
    } catch (const ParseError& e) {
        throw UsageError(e.what());
    } catch (const ValidationError& e) {
        throw UsageError(e.what());
    }
    const fs::path out = a.trace.empty() ? fs::path(a.scenario + ".trace.jsonl") : fs::path(a.trace);
    {
        std::ofstream t(out);
        if (!t) throw IoError("cannot write " + out.string());
        game::write_trace(t, trace);
    }
    game::render_latency_report(std::cout, game::latency_report(trace));
    std::cout << "packets sent " << trace.stats.packets_sent << ", dropped " << trace.stats.packets_dropped
              << ", safety " << (game::trace_is_safe(trace, rules) ? "ok" : "VIOLATED") << "\nfinal states:";
    for (auto s : trace.final_states) std::cout << ' ' << game::to_string(s);
    std::cout << '\n';
    write_manifest(manifest_beside(out), sub, {{"scenario", a.scenario}, {"rules", a.rules}},
                   {{"trace", out.string()}}, {{"seed", a.seed}, {"rule_table", game::rules_to_json(rules)}});
    return game::trace_is_safe(trace, rules) ? 0 : 1;
}

// --------------------------------------------------------------- selfcheck

int cmd_selfcheck(const CLI::App& sub, bool inject_fault, const std::string& manifest) {
    const auto results = verify::run_selfcheck(inject_fault ? 1e-3 : 0.0);
    verify::render_checklist(std::cout, results);
    ckconv::WhistleNet<double> net;
    const auto bd = ckconv::parameter_breakdown(net);
    std::cout << "\nWhistleNet parameters: " << bd.blocks[0] << " + 3 x " << bd.blocks[1] << " + " << bd.head
              << " = " << bd.total << " (reported: 59.1k)\n";
    bool ok = true;
    json checks = json::array();
    for (const auto& r : results) {
        ok = ok && r.passed;
        checks.push_back({{"name", r.name}, {"passed", r.passed}, {"detail", r.detail}, {"seconds", r.seconds}});
    }
    std::cout << (ok ? "all checks passed\n" : "SELFCHECK FAILED\n");
    if (!manifest.empty())
        write_manifest(manifest, sub, json::object(), json::object(), {{"checks", checks}, {"passed", ok}});
    return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"refsig: referee-signal recognition toolkit (whistle, gesture, game-state simulation)"};
    app.set_config("--config", "", "TOML/INI file with flag values; command-line flags take precedence");
    app.require_subcommand(1);
    int rc = 0;

    GenDataArgs gd;
    auto* gen = app.add_subcommand("gen-data", "Synthesize a whistle corpus and a skeleton stream");
    gen->add_option("--out", gd.out, "Output directory")->required();
    gen->add_option("--clips", gd.clips, "Number of audio clips")->capture_default_str();
    gen->add_option("--ratio", gd.ratio, "Target no-whistle:whistle window ratio")->capture_default_str()->check(CLI::PositiveNumber);
    gen->add_option("--duration", gd.duration, "Clip length in seconds")->capture_default_str()->check(CLI::Range(0.2, 600.0));
    gen->add_option("--min-snr", gd.min_snr, "Lowest whistle SNR (dB, wideband)")->capture_default_str();
    gen->add_option("--max-snr", gd.max_snr, "Highest whistle SNR (dB, wideband)")->capture_default_str();
    gen->add_option("--negative-fraction", gd.negative_fraction, "Fraction of clips without a whistle")->capture_default_str()->check(CLI::Range(0.0, 1.0));
    gen->add_option("--skeleton-frames", gd.skeleton_frames, "Frames in the skeleton stream")->capture_default_str();
    gen->add_option("--jitter", gd.jitter, "Keypoint jitter sigma (px)")->capture_default_str()->check(CLI::NonNegativeNumber);
    gen->add_option("--dropout", gd.dropout, "Per-frame keypoint confidence dropout probability")->capture_default_str()->check(CLI::Range(0.0, 1.0));
    gen->add_option("--seed", gd.seed, "Random seed")->capture_default_str();
    gen->callback([&] { rc = cmd_gen_data(*gen, gd); });

    TrainWhistleArgs tw;
    auto* trw = app.add_subcommand("train-whistle", "Train the whistle network on a corpus directory");
    trw->add_option("--data", tw.data, "Corpus directory (from gen-data, or WAV + Audacity label files)")->required();
    trw->add_option("--out", tw.out, "Checkpoint path")->required();
    trw->add_option("--epochs", tw.epochs, "Training epochs")->capture_default_str()->check(CLI::PositiveNumber);
    trw->add_option("--lr", tw.lr, "Adam learning rate")->capture_default_str()->check(CLI::NonNegativeNumber);
    trw->add_option("--schedule", tw.schedule, "Learning-rate schedule")->capture_default_str()->check(CLI::IsMember({"constant", "cosine"}));
    trw->add_option("--batch", tw.batch, "Batch size")->capture_default_str()->check(CLI::Range(2, 4096));
    trw->add_option("--seed", tw.seed, "Initialization and shuffling seed")->capture_default_str();
    trw->add_option("--split-seed", tw.split_seed, "Seed of the clip-level train/val/test split")->capture_default_str();
    trw->add_option("--precision", tw.precision, "Arithmetic used for training")->capture_default_str()->check(CLI::IsMember({"float", "double"}));
    trw->add_option("--threshold", tw.threshold, "Decision threshold for validation metrics")->capture_default_str()->check(CLI::Range(0.0, 1.0));
    trw->callback([&] { rc = cmd_train_whistle(*trw, tw); });

    EvalWhistleArgs ew;
    auto* evw = app.add_subcommand("eval-whistle", "Window-level metrics of a trained whistle network");
    evw->add_option("--data", ew.data, "Corpus directory")->required();
    evw->add_option("--checkpoint", ew.checkpoint, "Checkpoint from train-whistle")->required();
    evw->add_option("--split", ew.split, "train, val, test or all")->capture_default_str()->check(CLI::IsMember({"train", "val", "test", "all"}));
    evw->add_option("--split-seed", ew.split_seed, "Must match the seed used for training")->capture_default_str();
    evw->add_option("--threshold", ew.threshold, "Decision threshold on P(whistle)")->capture_default_str()->check(CLI::Range(0.0, 1.0));
    evw->add_option("--report", ew.report, "JSON report path (default: <checkpoint>.eval.json)");
    evw->callback([&] { rc = cmd_eval_whistle(*evw, ew); });

    DetectArgs dt;
    auto* det = app.add_subcommand("detect", "Whistle events in a WAV file");
    det->add_option("--checkpoint", dt.checkpoint, "Checkpoint from train-whistle")->required();
    det->add_option("--wav", dt.wav, "16-bit PCM WAV at 44100 Hz")->required();
    det->add_option("--json", dt.json_out, "Sidecar path (default: <wav>.events.json)");
    det->add_option("--threshold", dt.threshold, "Decision threshold on P(whistle)")->capture_default_str()->check(CLI::Range(0.0, 1.0));
    det->add_option("--min-run", dt.min_run, "Consecutive positive windows per event")->capture_default_str()->check(CLI::PositiveNumber);
    det->add_option("--merge-gap", dt.merge_gap, "Merge events closer than this (s)")->capture_default_str()->check(CLI::NonNegativeNumber);
    det->callback([&] { rc = cmd_detect(*det, dt); });

    TrainGestureArgs tg;
    auto* trg = app.add_subcommand("train-gesture", "Train the 4-angle pose classifier on synthetic skeletons");
    trg->add_option("--out", tg.out, "Checkpoint path")->required();
    trg->add_option("--samples", tg.samples, "Training skeletons")->capture_default_str()->check(CLI::PositiveNumber);
    trg->add_option("--epochs", tg.epochs, "Training epochs")->capture_default_str()->check(CLI::PositiveNumber);
    trg->add_option("--lr", tg.lr, "Adam learning rate")->capture_default_str()->check(CLI::NonNegativeNumber);
    trg->add_option("--jitter", tg.jitter, "Keypoint jitter sigma (px)")->capture_default_str()->check(CLI::NonNegativeNumber);
    trg->add_option("--seed", tg.seed, "Random seed")->capture_default_str();
    trg->callback([&] { rc = cmd_train_gesture(*trg, tg); });

    GestureArgs gs;
    auto* ges = app.add_subcommand("gesture", "Per-frame pose decisions and temporal-filter fires");
    ges->add_option("--skeletons", gs.skeletons, "Skeleton stream (JSON Lines)")->required();
    ges->add_option("--classifier", gs.classifier, "Pose classifier checkpoint (default: rule-based decider)");
    ges->add_option("--frames-rule", gs.frames_rule, "Consecutive positive frames required")->capture_default_str()->check(CLI::PositiveNumber);
    ges->add_option("--confidence", gs.confidence, "Keypoint confidence threshold")->capture_default_str()->check(CLI::Range(0.0, 1.0));
    ges->add_option("--out", gs.out, "Summary path (default: <skeletons>.gesture.json)");
    ges->callback([&] { rc = cmd_gesture(*ges, gs); });

    SimulateArgs sm;
    auto* sim = app.add_subcommand("simulate", "Multi-robot game-state simulation with quorum consensus");
    sim->add_option("--scenario", sm.scenario, "Scenario (JSON Lines)")->required();
    sim->add_option("--rules", sm.rules, "Rule table JSON (default: built-in table)");
    sim->add_option("--trace", sm.trace, "Trace output (default: <scenario>.trace.jsonl)");
    sim->add_option("--initial", sm.initial, "Initial game state")->capture_default_str();
    sim->add_option("--robots", sm.robots, "Number of robots")->capture_default_str()->check(CLI::Range(1, 256));
    sim->add_option("--quorum", sm.quorum, "Robots needed to agree")->capture_default_str()->check(CLI::PositiveNumber);
    sim->add_option("--window", sm.window, "Consensus window (s)")->capture_default_str()->check(CLI::NonNegativeNumber);
    sim->add_option("--gc-delay", sm.gc_delay, "GameController message delay (s)")->capture_default_str()->check(CLI::NonNegativeNumber);
    sim->add_option("--min-latency", sm.min_latency, "Minimum packet latency (s)")->capture_default_str()->check(CLI::NonNegativeNumber);
    sim->add_option("--max-latency", sm.max_latency, "Maximum packet latency (s)")->capture_default_str()->check(CLI::NonNegativeNumber);
    sim->add_option("--drop", sm.drop, "Per-receiver packet drop probability")->capture_default_str()->check(CLI::Range(0.0, 0.999999));
    sim->add_option("--seed", sm.seed, "Network seed")->capture_default_str();
    sim->callback([&] { rc = cmd_simulate(*sim, sm); });

    bool inject_fault = false;
    std::string selfcheck_manifest;
    auto* chk = app.add_subcommand("selfcheck", "Run the built-in oracle checks");
    chk->add_flag("--inject-gradient-fault", inject_fault, "Corrupt the analytic gradients (negative control)");
    chk->add_option("--manifest", selfcheck_manifest, "Write a run manifest here");
    chk->callback([&] { rc = cmd_selfcheck(*chk, inject_fault, selfcheck_manifest); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        switch (e.kind()) {
            case Error::Kind::Argument:
            case Error::Kind::Parse:
            case Error::Kind::Validation:
            case Error::Kind::Precondition:
            case Error::Kind::EmptyInput:
            case Error::Kind::Unsupported:
                return 2;
            default:
                return 1;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return rc;
}
