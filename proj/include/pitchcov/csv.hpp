#pragma once

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "pitchcov/dsp.hpp"
#include "pitchcov/error.hpp"
#include "pitchcov/eval.hpp"
#include "pitchcov/model.hpp"
#include "pitchcov/pitch.hpp"
#include "pitchcov/synth.hpp"

namespace pitchcov::csv {

/// Shortest "%.Ng" rendering; N = 9 for reports, 17 for exact round trips.
inline std::string num(double v, int digits = 9) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    return buf;
}

/// Writes `content` to `path` via a sibling temp file and rename, so readers never see a
/// partially written file.
inline void atomic_write(const std::filesystem::path& path, std::string_view content) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw Error(ErrorCode::IoError, "cannot rename into " + path.string() + ": " + ec.message());
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline std::vector<std::string_view> split(std::string_view line, char sep = ',') {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const std::size_t pos = line.find(sep, start);
        out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

inline std::vector<std::string_view> lines(std::string_view text) {
    std::vector<std::string_view> out;
    for (auto& l : split(text, '\n')) {
        if (!l.empty() && l.back() == '\r') l.remove_suffix(1);
        if (!l.empty()) out.push_back(l);
    }
    return out;
}

inline double parse_double(std::string_view field, const std::filesystem::path& where) {
    std::string s(field);
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size()) {
        throw Error(ErrorCode::InvalidRange, "bad number '" + s + "' in " + where.string());
    }
    return v;
}

// --- MFCC: time_s,c0,...,c{n-1}

inline std::string format_mfcc(const MfccMatrix& m) {
    std::string out = "time_s";
    for (std::size_t c = 0; c < m.dims(); ++c) out += ",c" + std::to_string(c);
    out += '\n';
    for (std::size_t f = 0; f < m.frames(); ++f) {
        out += num(m.frame_times_s[f]);
        for (std::size_t c = 0; c < m.dims(); ++c) out += "," + num(m.coeffs(f, c));
        out += '\n';
    }
    return out;
}

inline MfccMatrix read_mfcc(const std::filesystem::path& path, const FrameSpec& spec = {},
                            int sample_rate_hz = kCanonicalRateHz) {
    const std::string text = read_file(path);
    const auto rows = lines(text);
    if (rows.empty() || !rows[0].starts_with("time_s")) {
        throw Error(ErrorCode::InvalidRange, "missing MFCC header in " + path.string());
    }
    const std::size_t dims = split(rows[0]).size() - 1;
    MfccMatrix m;
    m.spec = spec;
    m.sample_rate_hz = sample_rate_hz;
    m.coeffs = Matrix(rows.size() - 1, dims);
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto fields = split(rows[r]);
        if (fields.size() != dims + 1) throw Error(ErrorCode::InvalidRange, "ragged row in " + path.string());
        m.frame_times_s.push_back(parse_double(fields[0], path));
        for (std::size_t c = 0; c < dims; ++c) m.coeffs(r - 1, c) = parse_double(fields[c + 1], path);
    }
    return m;
}

// --- Pitch: time_s,f0_hz,voiced

inline std::string format_pitch(const PitchTrack& t) {
    std::string out = "time_s,f0_hz,voiced\n";
    for (std::size_t i = 0; i < t.frames(); ++i) {
        out += num(t.frame_times_s[i]) + "," + num(t.voiced[i] ? t.f0_hz[i] : 0.0) + "," + (t.voiced[i] ? "1" : "0");
        out += '\n';
    }
    return out;
}

inline PitchTrack read_pitch(const std::filesystem::path& path, const PitchParams& params = {}) {
    const std::string text = read_file(path);
    const auto rows = lines(text);
    if (rows.empty() || rows[0] != "time_s,f0_hz,voiced") {
        throw Error(ErrorCode::InvalidRange, "missing pitch header in " + path.string());
    }
    PitchTrack t;
    t.params = params;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto fields = split(rows[r]);
        if (fields.size() != 3) throw Error(ErrorCode::InvalidRange, "ragged row in " + path.string());
        t.frame_times_s.push_back(parse_double(fields[0], path));
        const bool voiced = fields[2] == "1";
        t.voiced.push_back(voiced);
        t.f0_hz.push_back(voiced ? parse_double(fields[1], path) : 0.0);
    }
    return t;
}

// --- Model: row 1 context_k,feature_dim,intercept,rank_flag; row 2 weights

inline std::string format_model(const RegressionModel& m) {
    std::string out = std::to_string(m.context_k) + "," + std::to_string(m.feature_dim) + "," + num(m.intercept, 17) +
                      "," + (m.rank_deficient ? "1" : "0") + "\n";
    for (std::size_t i = 0; i < m.weights.size(); ++i) out += (i ? "," : "") + num(m.weights[i], 17);
    out += '\n';
    return out;
}

inline RegressionModel parse_model(std::string_view text, const std::filesystem::path& where = "model") {
    const auto rows = lines(text);
    if (rows.empty()) throw Error(ErrorCode::InvalidRange, "empty model file " + where.string());
    const auto meta = split(rows[0]);
    if (meta.size() != 4) throw Error(ErrorCode::InvalidRange, "bad model metadata in " + where.string());
    RegressionModel m;
    m.context_k = static_cast<std::size_t>(parse_double(meta[0], where));
    m.feature_dim = static_cast<std::size_t>(parse_double(meta[1], where));
    m.intercept = parse_double(meta[2], where);
    m.rank_deficient = meta[3] == "1";
    if (m.feature_dim > 0) {
        if (rows.size() < 2) throw Error(ErrorCode::InvalidRange, "missing weights in " + where.string());
        for (auto f : split(rows[1])) m.weights.push_back(parse_double(f, where));
    }
    if (m.weights.size() != m.feature_dim) {
        throw Error(ErrorCode::DimensionMismatch, "weight count differs from feature_dim in " + where.string());
    }
    return m;
}

// --- Synthesis manifest

inline std::string format_manifest(const std::vector<StimulusSpec>& specs) {
    std::string out = "index,mechanism,alpha,phi,alpha1,beta1,alpha2,beta2,f1,f2,f3,f4,seed\n";
    for (const auto& s : specs) {
        const auto& p = s.contour.params;
        const bool sine = s.contour.mechanism == Mechanism::Sinusoidal;
        const bool comp = s.contour.mechanism == Mechanism::Complicated;
        out += std::to_string(s.index) + "," + std::string(to_string(s.contour.mechanism)) + ",";
        out += (sine ? num(p.alpha) : "") + "," + (sine ? num(p.phi) : "") + ",";
        out += (comp ? num(p.alpha1) : "") + "," + (comp ? num(p.beta1) : "") + ",";
        out += (comp ? num(p.alpha2) : "") + "," + (comp ? num(p.beta2) : "") + ",";
        for (const auto& f : s.formants) out += num(f.frequency_hz) + ",";
        out += std::to_string(s.rng_seed) + "\n";
    }
    return out;
}

// --- Reports

inline std::string format_experiments(const std::vector<EvalReport>& reports) {
    std::string out = "train,test,run,rmse,r,p,n,base_train,base_test,rmse_train,protocol\n";
    for (const auto& rep : reports) {
        for (const auto& run : rep.runs) {
            out += rep.train + "," + rep.test + "," + std::to_string(run.run) + "," + num(run.rmse) + "," + num(run.r) +
                   "," + num(run.p_value) + "," + std::to_string(run.n_test) + "," + num(rep.base_hz_train) + "," +
                   num(rep.base_hz_test) + "," + num(run.rmse_train) + "," + rep.protocol + "\n";
        }
    }
    return out;
}

/// Wide layout: one row per training condition, mean r per test condition followed by
/// the per-cell significance flags.
inline std::string format_matrix(const CrossMatrix& cm) {
    std::string out = "train";
    for (const auto& c : cm.conditions) out += "," + c;
    for (const auto& c : cm.conditions) out += ",sig_" + c;
    out += '\n';
    for (std::size_t i = 0; i < cm.conditions.size(); ++i) {
        out += cm.conditions[i];
        for (std::size_t j = 0; j < cm.conditions.size(); ++j) out += "," + num(cm.mean_r(i, j));
        for (std::size_t j = 0; j < cm.conditions.size(); ++j) out += cm.significant[i][j] ? ",1" : ",0";
        out += '\n';
    }
    return out;
}

inline std::string format_ablation(const std::vector<AblationPoint>& points) {
    std::string out = "fraction,rmse,r\n";
    for (const auto& p : points) out += num(p.fraction) + "," + num(p.rmse) + "," + num(p.r) + "\n";
    return out;
}

inline std::string format_percoeff(const std::vector<CoefficientCorrelation>& coeffs) {
    std::string out = "coeff,r,p\n";
    for (const auto& c : coeffs) {
        out += std::to_string(c.coefficient) + ",";
        out += c.value ? num(c.value->r) + "," + num(c.value->p_value) : std::string("nan,nan");
        out += '\n';
    }
    return out;
}

inline std::string format_trace(const PredictionTrace& t) {
    std::string out = "time_s,gold_st,pred_st\n";
    for (std::size_t i = 0; i < t.time_s.size(); ++i) {
        out += num(t.time_s[i]) + "," + num(t.gold_st[i]) + "," + num(t.pred_st[i]) + "\n";
    }
    return out;
}

}  // namespace pitchcov::csv
