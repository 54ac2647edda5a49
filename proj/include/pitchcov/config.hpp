#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "pitchcov/csv.hpp"
#include "pitchcov/dsp.hpp"
#include "pitchcov/error.hpp"
#include "pitchcov/eval.hpp"
#include "pitchcov/pitch.hpp"
#include "pitchcov/synth.hpp"

namespace pitchcov {

struct SynthConfig {
    std::string mechanism = "sinusoidal";
    std::size_t n = 60;
    double duration_s = 5.0;
    SynthOptions options;
};

struct EvalConfig {
    std::string train;
    std::string test;  // empty: same as train
    std::vector<std::string> matrix;
    bool ablation = false;
    std::vector<double> fractions = default_fractions();
    std::string ablation_unit = "utterances";
    bool percoeff = false;
    bool traces = false;
    double alpha = 0.05;
};

/// Everything a command needs. `jobs` only changes scheduling, never results, and is
/// not persisted.
struct RunConfig {
    FrameSpec frame;
    PitchParams pitch;
    SynthConfig synth;
    EvalConfig eval;
    double split = 0.8;
    std::size_t runs = 10;
    std::size_t context_k = 0;
    std::uint64_t seed = 0;
    std::string corpus;
    std::string out;
    std::size_t jobs = 1;
};

using nlohmann::json;

inline void to_json(json& j, const FrameSpec& f) {
    j = json{{"window_ms", f.window_ms}, {"step_ms", f.step_ms},     {"n_mels", f.n_mels},
             {"n_mfcc", f.n_mfcc},       {"fmin_hz", f.fmin_hz},     {"log_floor", f.log_floor}};
    j["n_fft"] = f.n_fft ? json(*f.n_fft) : json(nullptr);
    j["fmax_hz"] = f.fmax_hz ? json(*f.fmax_hz) : json(nullptr);
}

inline void from_json(const json& j, FrameSpec& f) {
    f.window_ms = j.value("window_ms", f.window_ms);
    f.step_ms = j.value("step_ms", f.step_ms);
    f.n_mels = j.value("n_mels", f.n_mels);
    f.n_mfcc = j.value("n_mfcc", f.n_mfcc);
    f.fmin_hz = j.value("fmin_hz", f.fmin_hz);
    f.log_floor = j.value("log_floor", f.log_floor);
    if (j.contains("n_fft") && !j["n_fft"].is_null()) f.n_fft = j["n_fft"].get<std::size_t>();
    if (j.contains("fmax_hz") && !j["fmax_hz"].is_null()) f.fmax_hz = j["fmax_hz"].get<double>();
}

inline void to_json(json& j, const PitchParams& p) {
    j = json{{"f0_min_hz", p.f0_min_hz},
             {"f0_max_hz", p.f0_max_hz},
             {"step_ms", p.step_ms},
             {"corr_window_ms", p.corr_window_ms},
             {"voicing_threshold", p.voicing_threshold},
             {"octave_cost", p.octave_cost},
             {"transition_cost", p.transition_cost},
             {"lag_weight", p.lag_weight},
             {"first_center_ms", p.first_center_ms},
             {"max_candidates", p.max_candidates},
             {"lowpass_hz", p.lowpass_hz}};
}

inline void from_json(const json& j, PitchParams& p) {
    p.f0_min_hz = j.value("f0_min_hz", p.f0_min_hz);
    p.f0_max_hz = j.value("f0_max_hz", p.f0_max_hz);
    p.step_ms = j.value("step_ms", p.step_ms);
    p.corr_window_ms = j.value("corr_window_ms", p.corr_window_ms);
    p.voicing_threshold = j.value("voicing_threshold", p.voicing_threshold);
    p.octave_cost = j.value("octave_cost", p.octave_cost);
    p.transition_cost = j.value("transition_cost", p.transition_cost);
    p.lag_weight = j.value("lag_weight", p.lag_weight);
    p.first_center_ms = j.value("first_center_ms", p.first_center_ms);
    p.max_candidates = j.value("max_candidates", p.max_candidates);
    p.lowpass_hz = j.value("lowpass_hz", p.lowpass_hz);
}

inline void to_json(json& j, const SynthConfig& s) {
    const auto& o = s.options;
    j = json{{"mechanism", s.mechanism},
             {"n", s.n},
             {"duration_s", s.duration_s},
             {"sample_rate_hz", o.sample_rate_hz},
             {"step_s", o.step_s},
             {"open_quotient", o.open_quotient},
             {"sample_open_quotient", o.sample_open_quotient},
             {"open_quotient_range", {o.open_quotient_min, o.open_quotient_max}},
             {"formant_ranges_hz", o.formant_ranges_hz},
             {"bandwidth_range_hz", o.bandwidth_range_hz},
             {"min_formant_spacing_hz", o.min_formant_spacing_hz},
             {"complicated_rule", std::string(kComplicatedRule)}};
}

inline void from_json(const json& j, SynthConfig& s) {
    auto& o = s.options;
    s.mechanism = j.value("mechanism", s.mechanism);
    s.n = j.value("n", s.n);
    s.duration_s = j.value("duration_s", s.duration_s);
    o.sample_rate_hz = j.value("sample_rate_hz", o.sample_rate_hz);
    o.step_s = j.value("step_s", o.step_s);
    o.open_quotient = j.value("open_quotient", o.open_quotient);
    o.sample_open_quotient = j.value("sample_open_quotient", o.sample_open_quotient);
    if (j.contains("open_quotient_range")) {
        const auto r = j["open_quotient_range"].get<std::array<double, 2>>();
        o.open_quotient_min = r[0];
        o.open_quotient_max = r[1];
    }
    o.formant_ranges_hz = j.value("formant_ranges_hz", o.formant_ranges_hz);
    o.bandwidth_range_hz = j.value("bandwidth_range_hz", o.bandwidth_range_hz);
    o.min_formant_spacing_hz = j.value("min_formant_spacing_hz", o.min_formant_spacing_hz);
}

inline void to_json(json& j, const EvalConfig& e) {
    j = json{{"train", e.train},         {"test", e.test},         {"matrix", e.matrix},
             {"ablation", e.ablation},   {"fractions", e.fractions}, {"ablation_unit", e.ablation_unit},
             {"percoeff", e.percoeff},   {"traces", e.traces},     {"alpha", e.alpha}};
}

inline void from_json(const json& j, EvalConfig& e) {
    e.train = j.value("train", e.train);
    e.test = j.value("test", e.test);
    e.matrix = j.value("matrix", e.matrix);
    e.ablation = j.value("ablation", e.ablation);
    e.fractions = j.value("fractions", e.fractions);
    e.ablation_unit = j.value("ablation_unit", e.ablation_unit);
    e.percoeff = j.value("percoeff", e.percoeff);
    e.traces = j.value("traces", e.traces);
    e.alpha = j.value("alpha", e.alpha);
}

inline void to_json(json& j, const RunConfig& c) {
    j = json{{"frame", c.frame}, {"pitch", c.pitch}, {"synth", c.synth},     {"eval", c.eval},
             {"split", c.split}, {"runs", c.runs},   {"context_k", c.context_k}, {"seed", c.seed},
             {"corpus", c.corpus}, {"out", c.out}};
}

inline void from_json(const json& j, RunConfig& c) {
    if (j.contains("frame")) c.frame = j["frame"].get<FrameSpec>();
    if (j.contains("pitch")) c.pitch = j["pitch"].get<PitchParams>();
    if (j.contains("synth")) c.synth = j["synth"].get<SynthConfig>();
    if (j.contains("eval")) c.eval = j["eval"].get<EvalConfig>();
    c.split = j.value("split", c.split);
    c.runs = j.value("runs", c.runs);
    c.context_k = j.value("context_k", c.context_k);
    c.seed = j.value("seed", c.seed);
    c.corpus = j.value("corpus", c.corpus);
    c.out = j.value("out", c.out);
}

inline RunConfig load_config(const std::filesystem::path& path) {
    try {
        return json::parse(csv::read_file(path)).get<RunConfig>();
    } catch (const json::exception& e) {
        throw Error(ErrorCode::InvalidRange, "bad config " + path.string() + ": " + e.what());
    }
}

inline std::string dump_config(const RunConfig& cfg) { return json(cfg).dump(2) + "\n"; }

/// Parses "lo:hi:step" (inclusive) or a comma list into fractions.
inline std::vector<double> parse_fractions(const std::string& text) {
    std::vector<double> out;
    const auto parts = csv::split(text, ':');
    if (parts.size() == 3) {
        const double lo = csv::parse_double(parts[0], "--fractions");
        const double hi = csv::parse_double(parts[1], "--fractions");
        const double step = csv::parse_double(parts[2], "--fractions");
        if (!(step > 0.0) || lo > hi) throw Error(ErrorCode::InvalidRange, "bad fraction range " + text);
        const auto n = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9));
        for (std::size_t i = 0; i <= n; ++i) out.push_back(lo + static_cast<double>(i) * step);
        return out;
    }
    for (auto f : csv::split(text, ',')) out.push_back(csv::parse_double(f, "--fractions"));
    return out;
}

}  // namespace pitchcov
