#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include "pitchcov/audio_io.hpp"
#include "pitchcov/config.hpp"
#include "pitchcov/csv.hpp"
#include "pitchcov/dsp.hpp"
#include "pitchcov/eval.hpp"
#include "pitchcov/parallel.hpp"
#include "pitchcov/pitch.hpp"
#include "pitchcov/synth.hpp"

namespace pitchcov {

namespace fs = std::filesystem;

/// Features and gold pitch for one utterance at the canonical rate.
inline Utterance extract_utterance(const AudioBuffer& audio, const FrameSpec& frame, const PitchParams& pitch,
                                   std::string id = {}) {
    const AudioBuffer canonical = resample(audio, kCanonicalRateHz);
    Utterance u;
    u.id = std::move(id);
    u.mfcc = mfcc(canonical, frame);
    u.pitch = track_f0(canonical, pitch);
    return u;
}

namespace detail {

inline void ensure_directory(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) {
        throw Error(ErrorCode::IoError, "cannot create output directory " + dir.string() +
                                            (ec ? ": " + ec.message() : std::string()));
    }
}

inline std::vector<fs::path> files_with_suffix(const fs::path& dir, const std::string& suffix) {
    std::vector<fs::path> out;
    for (const auto& entry : fs::directory_iterator(dir)) {
        const auto name = entry.path().filename().string();
        if (entry.is_regular_file() && name.size() > suffix.size() && name.ends_with(suffix)) {
            out.push_back(entry.path());
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

inline std::string stem_without(const fs::path& p, const std::string& suffix) {
    const auto name = p.filename().string();
    return name.substr(0, name.size() - suffix.size());
}

}  // namespace detail

/// Writes `<mechanism>_<index>.wav` for every utterance plus manifest.csv and config.json.
inline void cmd_synth(const RunConfig& cfg) {
    const auto mechanism = parse_mechanism(cfg.synth.mechanism);
    if (!mechanism || *mechanism == Mechanism::Constant) {
        throw Error(ErrorCode::InvalidRange, "unknown mechanism '" + cfg.synth.mechanism +
                                                 "' (expected sinusoidal or complicated)");
    }
    if (cfg.out.empty()) throw Error(ErrorCode::IoError, "synth needs an output directory (--out)");
    const fs::path out = cfg.out;
    detail::ensure_directory(out);

    const auto corpus = generate_corpus(*mechanism, cfg.synth.n, cfg.synth.duration_s, cfg.seed, cfg.synth.options,
                                        cfg.jobs);
    std::vector<StimulusSpec> specs;
    for (const auto& s : corpus) specs.push_back(s.spec);
    parallel_for(corpus.size(), cfg.jobs, [&](std::size_t i) {
        char name[64];
        std::snprintf(name, sizeof name, "%s_%03zu.wav", cfg.synth.mechanism.c_str(), i);
        const auto bytes = encode_wav(corpus[i].audio);
        csv::atomic_write(out / name, std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
    });
    csv::atomic_write(out / "manifest.csv", csv::format_manifest(specs));
    csv::atomic_write(out / "config.json", dump_config(cfg));
}

/// Writes `<utt>.mfcc.csv` and `<utt>.f0.csv` for each WAV in the corpus directory.
/// Returns the number of utterances skipped because they could not be read.
inline std::size_t cmd_extract(const RunConfig& cfg, std::ostream& warn = std::cerr) {
    if (cfg.corpus.empty()) throw Error(ErrorCode::IoError, "extract needs a corpus directory (--corpus)");
    const fs::path corpus = cfg.corpus;
    if (!fs::is_directory(corpus)) throw Error(ErrorCode::IoError, "corpus directory " + corpus.string() + " not found");
    const auto wavs = detail::files_with_suffix(corpus, ".wav");
    if (wavs.empty()) throw Error(ErrorCode::EmptyCorpus, "no .wav files in " + corpus.string());

    const fs::path out = cfg.out.empty() ? corpus / "features" : fs::path(cfg.out);
    detail::ensure_directory(out);

    std::vector<std::string> failures(wavs.size());
    parallel_for(wavs.size(), cfg.jobs, [&](std::size_t i) {
        const std::string utt = detail::stem_without(wavs[i], ".wav");
        AudioBuffer audio;
        try {
            audio = read_wav(wavs[i]);
        } catch (const Error& e) {
            failures[i] = wavs[i].string() + ": " + e.what();
            return;
        }
        const auto u = extract_utterance(audio, cfg.frame, cfg.pitch, utt);
        csv::atomic_write(out / (utt + ".mfcc.csv"), csv::format_mfcc(u.mfcc));
        csv::atomic_write(out / (utt + ".f0.csv"), csv::format_pitch(u.pitch));
    });
    std::size_t skipped = 0;
    for (const auto& f : failures) {
        if (f.empty()) continue;
        warn << "warning: skipping " << f << "\n";
        ++skipped;
    }
    RunConfig resolved = cfg;
    resolved.out = out.string();
    csv::atomic_write(out / "config.json", dump_config(resolved));
    return skipped;
}

/// Directory holding extracted features: `dir` itself, or `dir/features`.
inline fs::path feature_directory(const fs::path& dir) {
    if (fs::is_directory(dir) && !detail::files_with_suffix(dir, ".mfcc.csv").empty()) return dir;
    if (fs::is_directory(dir / "features") && !detail::files_with_suffix(dir / "features", ".mfcc.csv").empty()) {
        return dir / "features";
    }
    throw Error(ErrorCode::EmptyCorpus, "no extracted features (*.mfcc.csv) in " + dir.string() +
                                            " or its features/ subdirectory; run `extract` first");
}

inline std::string corpus_label(const fs::path& dir) {
    fs::path p = dir.lexically_normal();
    if (p.has_filename() == false) p = p.parent_path();
    if (p.filename() == "features" && p.has_parent_path()) p = p.parent_path();
    const auto name = p.filename().string();
    return name.empty() ? std::string("corpus") : name;
}

inline Corpus load_corpus(const fs::path& dir, const RunConfig& cfg, std::string name) {
    const auto features = feature_directory(dir);
    Corpus corpus;
    corpus.name = std::move(name);
    for (const auto& m : detail::files_with_suffix(features, ".mfcc.csv")) {
        const auto utt = detail::stem_without(m, ".mfcc.csv");
        const auto f0 = features / (utt + ".f0.csv");
        if (!fs::exists(f0)) throw Error(ErrorCode::IoError, "missing pitch track " + f0.string());
        Utterance u;
        u.id = utt;
        u.mfcc = csv::read_mfcc(m, cfg.frame);
        u.pitch = csv::read_pitch(f0, cfg.pitch);
        corpus.utterances.push_back(std::move(u));
    }
    return corpus;
}

/// Runs the configured experiments and writes the report files into cfg.out.
inline void cmd_eval(const RunConfig& cfg) {
    if (cfg.out.empty()) throw Error(ErrorCode::IoError, "eval needs an output directory (--out)");
    const EvalConfig& ev = cfg.eval;
    if (ev.matrix.empty() && ev.train.empty()) {
        throw Error(ErrorCode::EmptyCorpus, "eval needs --train (and optionally --test) or --matrix");
    }
    AblationUnit unit = AblationUnit::Utterances;
    if (ev.ablation_unit == "frames") {
        unit = AblationUnit::Frames;
    } else if (ev.ablation_unit != "utterances") {
        throw Error(ErrorCode::InvalidRange, "ablation unit must be 'utterances' or 'frames'");
    }
    const fs::path out = cfg.out;
    detail::ensure_directory(out);

    ExperimentOptions opt;
    opt.split = cfg.split;
    opt.runs = cfg.runs;
    opt.seed = cfg.seed;
    opt.alpha = ev.alpha;
    opt.jobs = cfg.jobs;
    opt.keep_traces = ev.traces;

    auto prepare = [&](const std::string& dir, std::string label) {
        return prepare_corpus(load_corpus(dir, cfg, std::move(label)), cfg.context_k);
    };

    json summary;
    summary["semitone_base"] = "5th percentile of all voiced frames, per corpus";
    summary["split_unit"] = "utterance";
    std::vector<EvalReport> reports;

    if (!ev.matrix.empty()) {
        std::vector<PreparedCorpus> conditions;
        std::vector<std::string> labels;
        for (const auto& dir : ev.matrix) {
            std::string label = corpus_label(dir);
            while (std::find(labels.begin(), labels.end(), label) != labels.end()) label += "'";
            labels.push_back(label);
            conditions.push_back(prepare(dir, label));
        }
        const auto cm = cross_matrix(conditions, opt);
        reports = cm.cells;
        csv::atomic_write(out / "matrix.csv", csv::format_matrix(cm));
        summary["matrix"] = {{"conditions", cm.conditions}, {"runs", cm.runs},
                             {"off_diagonal_protocol", "train on full source corpus, test on full target corpus"},
                             {"significance", "every run p <= alpha"}};
    }

    std::optional<PreparedCorpus> train;
    if (!ev.train.empty()) {
        train = prepare(ev.train, corpus_label(ev.train));
        const bool self = ev.test.empty() || fs::weakly_canonical(feature_directory(ev.test)) ==
                                                   fs::weakly_canonical(feature_directory(ev.train));
        EvalReport rep;
        if (self) {
            rep = run_experiment(*train, *train, opt);
        } else {
            std::string label = corpus_label(ev.test);
            if (label == train->name) label += "'";
            const auto test = prepare(ev.test, label);
            rep = run_experiment(*train, test, opt);
        }
        if (ev.traces) {
            for (const auto& t : rep.traces) csv::atomic_write(out / ("trace_" + t.utterance_id + ".csv"), csv::format_trace(t));
        }
        reports.push_back(std::move(rep));
    }

    if (ev.ablation) {
        if (!train) throw Error(ErrorCode::EmptyCorpus, "--ablation needs --train");
        const auto points = ablation(*train, ev.fractions, opt, unit);
        csv::atomic_write(out / "ablation.csv", csv::format_ablation(points));
    }
    if (ev.percoeff) {
        if (!train) throw Error(ErrorCode::EmptyCorpus, "--percoeff needs --train");
        csv::atomic_write(out / "percoeff.csv", csv::format_percoeff(per_coefficient_correlation(*train)));
    }

    csv::atomic_write(out / "experiments.csv", csv::format_experiments(reports));
    json cells = json::array();
    for (const auto& r : reports) {
        cells.push_back({{"train", r.train},
                         {"test", r.test},
                         {"protocol", r.protocol},
                         {"rmse_semitones", r.rmse_semitones},
                         {"rmse_train_semitones", r.rmse_train_semitones},
                         {"pearson_r", r.pearson_r},
                         {"p_value", r.p_value},
                         {"significant", r.significant},
                         {"n_frames", r.n_frames},
                         {"base_hz_train", r.base_hz_train},
                         {"base_hz_test", r.base_hz_test}});
    }
    summary["reports"] = cells;
    csv::atomic_write(out / "report.json", summary.dump(2) + "\n");
    csv::atomic_write(out / "config.json", dump_config(cfg));
}

}  // namespace pitchcov
