#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pitchcov/dsp.hpp"
#include "pitchcov/error.hpp"
#include "pitchcov/model.hpp"
#include "pitchcov/parallel.hpp"
#include "pitchcov/pitch.hpp"
#include "pitchcov/synth.hpp"

namespace pitchcov {

inline double rmse(std::span<const double> gold, std::span<const double> pred) {
    if (gold.size() != pred.size()) throw Error(ErrorCode::LengthMismatch, "rmse inputs differ in length");
    if (gold.empty()) throw Error(ErrorCode::EmptyInput, "rmse of empty vectors");
    double acc = 0.0;
    for (std::size_t i = 0; i < gold.size(); ++i) {
        const double d = gold[i] - pred[i];
        acc += d * d;
    }
    return std::sqrt(acc / static_cast<double>(gold.size()));
}

namespace detail {

// Continued fraction for the incomplete beta function (modified Lentz).
inline double beta_continued_fraction(double a, double b, double x) {
    constexpr int kMaxIter = 500;
    constexpr double kEps = 1e-15;
    constexpr double kTiny = 1e-300;
    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < kEps) break;
    }
    return h;
}

}  // namespace detail

/// Regularized incomplete beta function I_x(a, b).
inline double incomplete_beta(double a, double b, double x) {
    if (!(a > 0.0 && b > 0.0)) throw Error(ErrorCode::InvalidRange, "incomplete beta needs a, b > 0");
    if (!(x >= 0.0 && x <= 1.0)) throw Error(ErrorCode::InvalidRange, "incomplete beta needs x in [0, 1]");
    if (x == 0.0 || x == 1.0) return x;
    const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(log_front);
    if (x < (a + 1.0) / (a + b + 2.0)) return front * detail::beta_continued_fraction(a, b, x) / a;
    return 1.0 - front * detail::beta_continued_fraction(b, a, 1.0 - x) / b;
}

/// Two-sided p-value of Student's t statistic with `df` degrees of freedom.
inline double student_t_two_sided_p(double t, double df) {
    if (std::isinf(t)) return 0.0;
    return incomplete_beta(0.5 * df, 0.5, df / (df + t * t));
}

struct Correlation {
    double r = 0.0;
    double p_value = 1.0;
};

/// Sample Pearson correlation with a two-sided Student-t p-value (n - 2 degrees of freedom).
inline Correlation pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw Error(ErrorCode::LengthMismatch, "pearson inputs differ in length");
    const std::size_t n = x.size();
    if (n < 3) throw Error(ErrorCode::TooFewSamples, "pearson needs at least 3 samples");
    // the mean of identical values is not always bit-exact, so test constancy directly
    auto constant = [](std::span<const double> v) {
        return std::all_of(v.begin(), v.end(), [&](double a) { return a == v.front(); });
    };
    if (constant(x) || constant(y)) throw Error(ErrorCode::ConstantInput, "correlation undefined for a constant input");
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
    double sxx = 0.0;
    double syy = 0.0;
    double sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (sxx == 0.0 || syy == 0.0) throw Error(ErrorCode::ConstantInput, "correlation undefined for a constant input");
    Correlation c;
    c.r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
    const double df = static_cast<double>(n - 2);
    const double denom = 1.0 - c.r * c.r;
    const double t = denom <= 0.0 ? std::copysign(std::numeric_limits<double>::infinity(), c.r)
                                  : c.r * std::sqrt(df / denom);
    c.p_value = student_t_two_sided_p(t, df);
    return c;
}

struct CoefficientCorrelation {
    std::size_t coefficient = 0;
    std::optional<Correlation> value;  // empty when the coefficient is constant
};

/// Pearson r of every feature column against the targets.
inline std::vector<CoefficientCorrelation> per_coefficient_correlation(const Dataset& data) {
    if (data.size() < 3) throw Error(ErrorCode::TooFewSamples, "need at least 3 aligned voiced frames");
    std::vector<CoefficientCorrelation> out(data.features.cols());
    for (std::size_t c = 0; c < data.features.cols(); ++c) {
        out[c].coefficient = c;
        const auto column = data.features.column(c);
        try {
            out[c].value = pearson(column, data.targets);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::ConstantInput) throw;
        }
    }
    return out;
}

inline std::vector<CoefficientCorrelation> per_coefficient_correlation(const MfccMatrix& mfcc, const SemitoneTrack& st) {
    return per_coefficient_correlation(align_targets(mfcc, st));
}

// ---------------------------------------------------------------------------
// Corpora and experiment protocols

struct Utterance {
    std::string id;
    MfccMatrix mfcc;
    PitchTrack pitch;
};

/// One condition (e.g. speaker x vowel, or one synthetic mechanism).
struct Corpus {
    std::string name;
    std::vector<Utterance> utterances;
};

/// Semitone base: 5th percentile over all voiced frames of the corpus.
inline double corpus_base_hz(const Corpus& corpus, double percentile_p = 5.0) {
    std::vector<double> voiced;
    for (const auto& u : corpus.utterances) {
        const auto v = u.pitch.voiced_f0();
        voiced.insert(voiced.end(), v.begin(), v.end());
    }
    if (voiced.empty()) throw Error(ErrorCode::NoVoicedFrames, "corpus " + corpus.name + " has no voiced frames");
    return percentile(voiced, percentile_p);
}

/// Corpus with semitone targets aligned to (context-stacked) features per utterance.
struct PreparedCorpus {
    std::string name;
    double base_hz = 0.0;
    std::size_t context_k = 0;
    std::vector<std::string> utterance_ids;
    std::vector<Dataset> datasets;                 // one per utterance; empty when nothing is voiced
    std::vector<std::vector<double>> frame_times;  // feature frame times per utterance
};

inline PreparedCorpus prepare_corpus(const Corpus& corpus, std::size_t context_k = 0) {
    if (corpus.utterances.empty()) throw Error(ErrorCode::EmptyCorpus, "corpus " + corpus.name + " is empty");
    PreparedCorpus pc;
    pc.name = corpus.name;
    pc.context_k = context_k;
    pc.base_hz = corpus_base_hz(corpus);
    for (std::size_t u = 0; u < corpus.utterances.size(); ++u) {
        const auto& utt = corpus.utterances[u];
        pc.utterance_ids.push_back(utt.id);
        pc.frame_times.push_back(utt.mfcc.frame_times_s);
        Dataset ds;
        if (utt.mfcc.frames() > 0) {
            try {
                const auto st = hz_to_semitones(utt.pitch, pc.base_hz);
                ds = align_targets(assemble_features(utt.mfcc, context_k), utt.mfcc.frame_times_s,
                                   utt.mfcc.spec.step_ms / 1000.0, st, u);
            } catch (const Error& e) {
                if (e.code() != ErrorCode::NoVoicedFrames) throw;
            }
        }
        ds.corpus_id = corpus.name;
        pc.datasets.push_back(std::move(ds));
    }
    return pc;
}

inline Dataset pool(const PreparedCorpus& pc, std::span<const std::size_t> utterances) {
    Dataset out;
    out.corpus_id = pc.name;
    for (std::size_t u : utterances) out.append(pc.datasets[u]);
    return out;
}

inline Dataset pool_all(const PreparedCorpus& pc) {
    std::vector<std::size_t> all(pc.datasets.size());
    std::iota(all.begin(), all.end(), 0);
    return pool(pc, all);
}

inline std::vector<CoefficientCorrelation> per_coefficient_correlation(const PreparedCorpus& pc) {
    return per_coefficient_correlation(pool_all(pc));
}

struct ExperimentOptions {
    double split = 0.8;
    std::size_t runs = 10;
    std::uint64_t seed = 0;
    double alpha = 0.05;  // significance level
    std::size_t jobs = 1;
    bool keep_traces = false;
};

struct RunResult {
    std::size_t run = 0;
    double rmse = 0.0;
    double rmse_train = 0.0;
    double r = 0.0;
    double p_value = 1.0;
    bool constant_prediction = false;
    std::size_t n_test = 0;
    std::size_t n_train = 0;
    std::vector<std::size_t> train_utterances;
    std::vector<std::size_t> test_utterances;
    bool rank_deficient = false;
};

struct PredictionTrace {
    std::string utterance_id;
    std::vector<double> time_s;
    std::vector<double> gold_st;
    std::vector<double> pred_st;
};

struct EvalReport {
    std::string train;
    std::string test;
    std::string protocol;  // "self-split" or "full-corpus"
    std::vector<RunResult> runs;
    double rmse_semitones = 0.0;
    double rmse_train_semitones = 0.0;
    double pearson_r = 0.0;
    double p_value = 1.0;  // largest per-run p
    bool significant = false;
    double n_frames = 0.0;  // mean test frames per run
    double base_hz_train = 0.0;
    double base_hz_test = 0.0;
    std::vector<PredictionTrace> traces;  // test utterances of run 0, when requested
};

namespace detail {

/// Utterance split for one run: the first round(split*n) of a seeded shuffle train, the
/// rest test. Both sides are returned in ascending order.
inline std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_utterances(std::size_t n, double split,
                                                                                      std::uint64_t stream) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Uniform u(stream);
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[u.below(i)]);
    auto n_train = static_cast<std::size_t>(std::llround(split * static_cast<double>(n)));
    if (n >= 2) n_train = std::clamp<std::size_t>(n_train, 1, n - 1);
    std::vector<std::size_t> train(order.begin(), order.begin() + static_cast<long>(n_train));
    std::vector<std::size_t> test(order.begin() + static_cast<long>(n_train), order.end());
    std::sort(train.begin(), train.end());
    std::sort(test.begin(), test.end());
    return {train, test};
}

inline std::uint64_t run_stream(std::uint64_t seed, std::size_t cell, std::size_t run) {
    return derive_seed(derive_seed(seed, cell), run);
}

inline RunResult score(const Dataset& train_ds, const Dataset& test_ds, std::size_t context_k,
                       std::vector<double>* predictions = nullptr) {
    const auto model = fit_ols(train_ds, context_k);
    const auto pred = predict(model, test_ds.features);
    if (predictions) *predictions = pred;
    RunResult res;
    res.n_train = train_ds.size();
    res.n_test = test_ds.size();
    res.rmse = rmse(test_ds.targets, pred);
    res.rmse_train = rmse(train_ds.targets, predict(model, train_ds.features));
    res.rank_deficient = model.rank_deficient;
    try {
        const auto c = pearson(test_ds.targets, pred);
        res.r = c.r;
        res.p_value = c.p_value;
    } catch (const Error& e) {
        if (e.code() != ErrorCode::ConstantInput && e.code() != ErrorCode::TooFewSamples) throw;
        res.constant_prediction = true;
    }
    return res;
}

inline RunResult evaluate_fit(const PreparedCorpus& train, std::span<const std::size_t> train_utts,
                              const PreparedCorpus& test, std::span<const std::size_t> test_utts,
                              std::vector<PredictionTrace>* traces) {
    const Dataset train_ds = pool(train, train_utts);
    const Dataset test_ds = pool(test, test_utts);
    if (train_ds.size() == 0 || test_ds.size() == 0) {
        throw Error(ErrorCode::EmptyCorpus, "no voiced frames on one side of the split");
    }
    std::vector<double> pred;
    RunResult res = score(train_ds, test_ds, train.context_k, &pred);
    res.train_utterances.assign(train_utts.begin(), train_utts.end());
    res.test_utterances.assign(test_utts.begin(), test_utts.end());

    if (traces) {
        std::size_t row = 0;
        for (std::size_t u : test_utts) {
            const auto& ds = test.datasets[u];
            PredictionTrace tr;
            tr.utterance_id = test.utterance_ids[u];
            for (std::size_t i = 0; i < ds.size(); ++i, ++row) {
                tr.time_s.push_back(test.frame_times[u][ds.provenance[i].frame]);
                tr.gold_st.push_back(test_ds.targets[row]);
                tr.pred_st.push_back(pred[row]);
            }
            traces->push_back(std::move(tr));
        }
    }
    return res;
}

inline void summarize(EvalReport& report, double alpha) {
    const auto n = static_cast<double>(report.runs.size());
    report.rmse_semitones = 0.0;
    report.rmse_train_semitones = 0.0;
    report.pearson_r = 0.0;
    report.n_frames = 0.0;
    report.p_value = 0.0;
    for (const auto& r : report.runs) {
        report.rmse_semitones += r.rmse / n;
        report.rmse_train_semitones += r.rmse_train / n;
        report.pearson_r += r.r / n;
        report.n_frames += static_cast<double>(r.n_test) / n;
        report.p_value = std::max(report.p_value, r.p_value);
    }
    report.significant = !report.runs.empty() && report.p_value <= alpha;
}

inline EvalReport run_cell(const PreparedCorpus& train, const PreparedCorpus& test, bool self, std::size_t cell,
                           const ExperimentOptions& opt) {
    if (train.datasets.empty() || test.datasets.empty()) throw Error(ErrorCode::EmptyCorpus, "empty corpus");
    if (opt.runs == 0) throw Error(ErrorCode::InvalidRange, "runs must be positive");
    EvalReport report;
    report.train = train.name;
    report.test = test.name;
    report.base_hz_train = train.base_hz;
    report.base_hz_test = test.base_hz;
    report.runs.resize(opt.runs);

    if (self) {
        if (train.datasets.size() < 2) throw Error(ErrorCode::EmptyCorpus, "self-split needs at least 2 utterances");
        report.protocol = "self-split";
        parallel_for(opt.runs, opt.jobs, [&](std::size_t run) {
            const auto [tr, te] = split_utterances(train.datasets.size(), opt.split, run_stream(opt.seed, cell, run));
            report.runs[run] = evaluate_fit(train, tr, test, te, run == 0 && opt.keep_traces ? &report.traces : nullptr);
            report.runs[run].run = run;
        });
    } else {
        // The fit is deterministic when both corpora are used whole, so every run repeats it.
        report.protocol = "full-corpus";
        std::vector<std::size_t> tr(train.datasets.size());
        std::vector<std::size_t> te(test.datasets.size());
        std::iota(tr.begin(), tr.end(), 0);
        std::iota(te.begin(), te.end(), 0);
        const auto once = evaluate_fit(train, tr, test, te, opt.keep_traces ? &report.traces : nullptr);
        for (std::size_t run = 0; run < opt.runs; ++run) {
            report.runs[run] = once;
            report.runs[run].run = run;
        }
    }
    summarize(report, opt.alpha);
    return report;
}

}  // namespace detail

/// Train on `train`, test on `test`. Passing the same corpus (by name) selects the
/// utterance-level self-split protocol, resampled every run; otherwise both corpora are
/// used whole.
inline EvalReport run_experiment(const PreparedCorpus& train, const PreparedCorpus& test,
                                 const ExperimentOptions& opt = {}) {
    return detail::run_cell(train, test, train.name == test.name, 0, opt);
}

struct CrossMatrix {
    std::vector<std::string> conditions;
    Matrix mean_r;
    std::vector<std::vector<bool>> significant;
    std::size_t runs = 0;
    std::vector<EvalReport> cells;  // row-major: cells[i * n + j] trains on i, tests on j
};

/// Every ordered (train, test) pair; diagonal cells use the self-split protocol. A cell
/// is significant only when every run's p <= alpha.
inline CrossMatrix cross_matrix(std::span<const PreparedCorpus> conditions, const ExperimentOptions& opt = {}) {
    const std::size_t n = conditions.size();
    if (n == 0) throw Error(ErrorCode::EmptyCorpus, "no conditions");
    CrossMatrix cm;
    cm.runs = opt.runs;
    for (const auto& c : conditions) cm.conditions.push_back(c.name);
    cm.cells.resize(n * n);
    ExperimentOptions cell_opt = opt;
    cell_opt.jobs = 1;
    parallel_for(n * n, opt.jobs, [&](std::size_t cell) {
        const std::size_t i = cell / n;
        const std::size_t j = cell % n;
        cm.cells[cell] = detail::run_cell(conditions[i], conditions[j], i == j, cell, cell_opt);
    });
    cm.mean_r = Matrix(n, n);
    cm.significant.assign(n, std::vector<bool>(n, false));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            cm.mean_r(i, j) = cm.cells[i * n + j].pearson_r;
            cm.significant[i][j] = cm.cells[i * n + j].significant;
        }
    }
    return cm;
}

struct AblationPoint {
    double fraction = 0.0;
    std::size_t train_utterances = 0;  // run 0; all training utterances in frame mode
    std::size_t train_frames = 0;      // run 0
    double rmse = 0.0;
    double r = 0.0;
};

/// What a training fraction subsamples: whole utterances, or frames pooled from all
/// training utterances.
enum class AblationUnit { Utterances, Frames };

inline std::vector<double> default_fractions() {
    std::vector<double> f;
    for (int i = 1; i <= 10; ++i) f.push_back(i / 10.0);
    return f;
}

namespace detail {

inline std::size_t fraction_count(double fraction, std::size_t n) {
    const auto k = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n) - 1e-9));
    return std::clamp<std::size_t>(k, 1, n);
}

inline Dataset select_rows(const Dataset& ds, std::span<const std::size_t> rows) {
    Dataset out;
    out.corpus_id = ds.corpus_id;
    out.features = Matrix(rows.size(), ds.features.cols());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const auto src = ds.features.row(rows[r]);
        std::copy(src.begin(), src.end(), out.features.row(r).begin());
        out.targets.push_back(ds.targets[rows[r]]);
        out.provenance.push_back(ds.provenance[rows[r]]);
    }
    return out;
}

}  // namespace detail

/// Training-data ablation. Each run draws the same split as run_experiment; each
/// fraction trains on a nested prefix of a per-run shuffle of the training side
/// (ceil(fraction * count) utterances or frames, restored to corpus order) and is scored
/// on that run's held-out utterances.
inline std::vector<AblationPoint> ablation(const PreparedCorpus& corpus, std::span<const double> fractions,
                                           const ExperimentOptions& opt = {},
                                           AblationUnit unit = AblationUnit::Utterances) {
    if (corpus.datasets.size() < 2) throw Error(ErrorCode::EmptyCorpus, "ablation needs at least 2 utterances");
    if (opt.runs == 0) throw Error(ErrorCode::InvalidRange, "runs must be positive");
    for (double f : fractions) {
        if (!(f > 0.0 && f <= 1.0)) throw Error(ErrorCode::InvalidRange, "fractions must lie in (0, 1]");
    }

    std::vector<std::vector<RunResult>> results(opt.runs, std::vector<RunResult>(fractions.size()));
    std::vector<AblationPoint> out(fractions.size());
    parallel_for(opt.runs, opt.jobs, [&](std::size_t run) {
        const std::uint64_t stream = detail::run_stream(opt.seed, 0, run);
        const auto [train, test] = detail::split_utterances(corpus.datasets.size(), opt.split, stream);
        const Dataset test_ds = pool(corpus, test);
        Uniform u(derive_seed(stream, 0xab1a7104ULL));

        if (unit == AblationUnit::Utterances) {
            std::vector<std::size_t> order = train;
            for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[u.below(i)]);
            for (std::size_t f = 0; f < fractions.size(); ++f) {
                const std::size_t k = detail::fraction_count(fractions[f], train.size());
                std::vector<std::size_t> subset(order.begin(), order.begin() + static_cast<long>(k));
                std::sort(subset.begin(), subset.end());
                results[run][f] = detail::score(pool(corpus, subset), test_ds, corpus.context_k);
                if (run == 0) {
                    out[f].train_utterances = k;
                    out[f].train_frames = results[run][f].n_train;
                }
            }
        } else {
            const Dataset full = pool(corpus, train);
            std::vector<std::size_t> order(full.size());
            std::iota(order.begin(), order.end(), 0);
            for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[u.below(i)]);
            for (std::size_t f = 0; f < fractions.size(); ++f) {
                const std::size_t k = detail::fraction_count(fractions[f], full.size());
                std::vector<std::size_t> rows(order.begin(), order.begin() + static_cast<long>(k));
                std::sort(rows.begin(), rows.end());
                results[run][f] = detail::score(detail::select_rows(full, rows), test_ds, corpus.context_k);
                if (run == 0) {
                    out[f].train_utterances = train.size();
                    out[f].train_frames = k;
                }
            }
        }
    });

    for (std::size_t f = 0; f < fractions.size(); ++f) {
        out[f].fraction = fractions[f];
        for (std::size_t run = 0; run < opt.runs; ++run) {
            out[f].rmse += results[run][f].rmse / static_cast<double>(opt.runs);
            out[f].r += results[run][f].r / static_cast<double>(opt.runs);
        }
    }
    return out;
}

}  // namespace pitchcov
