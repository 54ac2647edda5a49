#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "pitchcov/dsp.hpp"
#include "pitchcov/error.hpp"
#include "pitchcov/matrix.hpp"
#include "pitchcov/pitch.hpp"

namespace pitchcov {

struct FrameRef {
    std::size_t utterance = 0;
    std::size_t frame = 0;
};

/// Feature rows paired one-to-one with semitone targets.
struct Dataset {
    Matrix features;
    std::vector<double> targets;
    std::string corpus_id;
    std::vector<FrameRef> provenance;

    std::size_t size() const noexcept { return targets.size(); }

    void append(const Dataset& other) {
        features.append_rows(other.features);
        targets.insert(targets.end(), other.targets.begin(), other.targets.end());
        provenance.insert(provenance.end(), other.provenance.begin(), other.provenance.end());
    }
};

struct RegressionModel {
    std::vector<double> weights;
    double intercept = 0.0;
    std::size_t context_k = 0;
    std::size_t feature_dim = 0;
    std::size_t rank = 0;
    bool rank_deficient = false;
};

/// Stacks frames i-k..i+k into each row, replicating the first/last frame at the edges.
inline Matrix assemble_features(const Matrix& frames, std::size_t context_k) {
    if (frames.empty()) throw Error(ErrorCode::EmptyInput, "no frames to assemble");
    if (context_k == 0) return frames;
    const std::size_t n = frames.rows();
    const std::size_t d = frames.cols();
    const std::size_t width = 2 * context_k + 1;
    Matrix out(n, d * width);
    const auto k = static_cast<long>(context_k);
    for (std::size_t i = 0; i < n; ++i) {
        auto row = out.row(i);
        for (long off = -k; off <= k; ++off) {
            const long src = std::clamp(static_cast<long>(i) + off, 0L, static_cast<long>(n) - 1);
            const auto from = frames.row(static_cast<std::size_t>(src));
            std::copy(from.begin(), from.end(), row.begin() + (off + k) * static_cast<long>(d));
        }
    }
    return out;
}

inline Matrix assemble_features(const MfccMatrix& mfcc, std::size_t context_k) {
    return assemble_features(mfcc.coeffs, context_k);
}

/// Pairs each feature frame with the semitone frame nearest in time, if it lies within
/// half a feature step. Feature frames without a voiced partner are dropped.
inline Dataset align_targets(const Matrix& features, std::span<const double> frame_times_s, double step_s,
                             const SemitoneTrack& st, std::size_t utterance = 0) {
    if (features.rows() != frame_times_s.size()) {
        throw Error(ErrorCode::DimensionMismatch, "feature rows and frame times differ");
    }
    const double tolerance = 0.5 * step_s * (1.0 + 1e-9);
    Dataset ds;
    ds.features = Matrix(0, features.cols());
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < frame_times_s.size(); ++i) {
        const double t = frame_times_s[i];
        const auto it = std::lower_bound(st.frame_times_s.begin(), st.frame_times_s.end(), t);
        double best = std::numeric_limits<double>::infinity();
        std::size_t arg = 0;
        if (it != st.frame_times_s.end()) {
            best = *it - t;
            arg = static_cast<std::size_t>(it - st.frame_times_s.begin());
        }
        if (it != st.frame_times_s.begin() && t - *(it - 1) < best) {
            best = t - *(it - 1);
            arg = static_cast<std::size_t>(it - st.frame_times_s.begin()) - 1;
        }
        if (best > tolerance) continue;
        rows.push_back(i);
        ds.targets.push_back(st.semitones[arg]);
        ds.provenance.push_back({utterance, i});
    }
    if (rows.empty()) throw Error(ErrorCode::NoVoicedFrames, "no voiced frame aligns with the features");

    ds.features = Matrix(rows.size(), features.cols());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const auto src = features.row(rows[r]);
        std::copy(src.begin(), src.end(), ds.features.row(r).begin());
    }
    return ds;
}

inline Dataset align_targets(const MfccMatrix& mfcc, const SemitoneTrack& st, std::size_t utterance = 0) {
    return align_targets(mfcc.coeffs, mfcc.frame_times_s, mfcc.spec.step_ms / 1000.0, st, utterance);
}

namespace detail {

/// Column-major working copy used by the Householder routines.
struct ColumnMajor {
    std::size_t rows;
    std::size_t cols;
    std::vector<double> a;
    double& at(std::size_t r, std::size_t c) { return a[c * rows + r]; }
    double at(std::size_t r, std::size_t c) const { return a[c * rows + r]; }
    double* col(std::size_t c) { return a.data() + c * rows; }
};

/// Builds a Householder reflector for x[k..m) in place; returns (v stored in x, beta, alpha)
/// such that (I - beta v v^T) x = alpha e_k.
inline void householder(double* x, std::size_t k, std::size_t m, double& beta, double& alpha) {
    double norm = 0.0;
    for (std::size_t i = k; i < m; ++i) norm += x[i] * x[i];
    norm = std::sqrt(norm);
    if (norm == 0.0) {
        beta = 0.0;
        alpha = 0.0;
        return;
    }
    alpha = x[k] > 0.0 ? -norm : norm;
    x[k] -= alpha;
    double vnorm2 = 0.0;
    for (std::size_t i = k; i < m; ++i) vnorm2 += x[i] * x[i];
    beta = vnorm2 > 0.0 ? 2.0 / vnorm2 : 0.0;
}

inline void apply_householder(const double* v, double beta, std::size_t k, std::size_t m, double* y) {
    if (beta == 0.0) return;
    double dot = 0.0;
    for (std::size_t i = k; i < m; ++i) dot += v[i] * y[i];
    dot *= beta;
    for (std::size_t i = k; i < m; ++i) y[i] -= dot * v[i];
}

struct LeastSquaresSolution {
    std::vector<double> x;
    std::size_t rank = 0;
};

/// Minimum-norm least-squares solution of A x ~ b (A given column-major, overwritten):
/// column-pivoted Householder QR followed, when rank-deficient, by a second QR of the
/// leading rows of R (complete orthogonal decomposition).
inline LeastSquaresSolution solve_least_squares(ColumnMajor A, std::vector<double> b) {
    const std::size_t m = A.rows;
    const std::size_t n = A.cols;
    const std::size_t steps = std::min(m, n);
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::vector<double> diag(steps, 0.0);

    for (std::size_t k = 0; k < steps; ++k) {
        // Pivot: largest remaining column norm over rows k..m.
        std::size_t best = k;
        double best_norm = -1.0;
        for (std::size_t c = k; c < n; ++c) {
            const double* col = A.col(c);
            double s = 0.0;
            for (std::size_t i = k; i < m; ++i) s += col[i] * col[i];
            if (s > best_norm) {
                best_norm = s;
                best = c;
            }
        }
        if (best != k) {
            std::swap_ranges(A.col(k), A.col(k) + m, A.col(best));
            std::swap(perm[k], perm[best]);
        }
        double beta = 0.0;
        double alpha = 0.0;
        double* v = A.col(k);
        householder(v, k, m, beta, alpha);
        for (std::size_t c = k + 1; c < n; ++c) apply_householder(v, beta, k, m, A.col(c));
        apply_householder(v, beta, k, m, b.data());
        diag[k] = alpha;
    }

    const double eps = std::numeric_limits<double>::epsilon();
    const double tol = std::abs(diag.empty() ? 0.0 : diag[0]) * eps * static_cast<double>(std::max(m, n));
    std::size_t rank = 0;
    while (rank < steps && std::abs(diag[rank]) > tol) ++rank;

    // R (rank x n) upper trapezoid: diagonal in diag, strictly-upper entries in A above the diagonal.
    auto R = [&](std::size_t i, std::size_t j) { return i == j ? diag[i] : (j > i ? A.at(i, j) : 0.0); };

    std::vector<double> z(n, 0.0);
    if (rank == n) {
        for (std::size_t ii = n; ii-- > 0;) {
            double s = b[ii];
            for (std::size_t j = ii + 1; j < n; ++j) s -= R(ii, j) * z[j];
            z[ii] = s / diag[ii];
        }
    } else if (rank > 0) {
        // QR of [R11 R12]^T (n x rank): [R11 R12]^T = W [T; 0].
        ColumnMajor Rt{n, rank, std::vector<double>(n * rank, 0.0)};
        for (std::size_t i = 0; i < rank; ++i) {
            for (std::size_t j = i; j < n; ++j) Rt.at(j, i) = R(i, j);
        }
        std::vector<double> betas(rank, 0.0);
        std::vector<double> tdiag(rank, 0.0);
        for (std::size_t k = 0; k < rank; ++k) {
            double* v = Rt.col(k);
            householder(v, k, n, betas[k], tdiag[k]);
            for (std::size_t c = k + 1; c < rank; ++c) apply_householder(v, betas[k], k, n, Rt.col(c));
        }
        // Solve T^T u = c (forward substitution), then z = W [u; 0].
        std::vector<double> u(n, 0.0);
        for (std::size_t i = 0; i < rank; ++i) {
            double s = b[i];
            for (std::size_t j = 0; j < i; ++j) s -= Rt.at(j, i) * u[j];  // T(j, i) stored above diagonal
            u[i] = s / tdiag[i];
        }
        for (std::size_t k = rank; k-- > 0;) apply_householder(Rt.col(k), betas[k], k, n, u.data());
        z = std::move(u);
    }

    LeastSquaresSolution sol;
    sol.rank = rank;
    sol.x.assign(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) sol.x[perm[j]] = z[j];
    return sol;
}

}  // namespace detail

/// Ordinary least squares with an unpenalized intercept. Rank-deficient designs get the
/// minimum-norm solution (over weights and intercept jointly) and rank_deficient = true.
inline RegressionModel fit_ols(const Dataset& data, std::size_t context_k = 0) {
    const std::size_t n = data.size();
    const std::size_t d = data.features.cols();
    if (data.features.rows() != n) throw Error(ErrorCode::DimensionMismatch, "feature rows and targets differ");
    if (n < d + 1) {
        throw Error(ErrorCode::TooFewSamples,
                    "need at least " + std::to_string(d + 1) + " samples, got " + std::to_string(n));
    }
    for (double v : data.features.data()) {
        if (!std::isfinite(v)) throw Error(ErrorCode::InvalidRange, "non-finite feature value");
    }
    for (double v : data.targets) {
        if (!std::isfinite(v)) throw Error(ErrorCode::InvalidRange, "non-finite target value");
    }

    detail::ColumnMajor A{n, d + 1, std::vector<double>(n * (d + 1))};
    for (std::size_t r = 0; r < n; ++r) {
        const auto row = data.features.row(r);
        for (std::size_t c = 0; c < d; ++c) A.at(r, c) = row[c];
        A.at(r, d) = 1.0;
    }
    const auto sol = detail::solve_least_squares(std::move(A), data.targets);

    RegressionModel model;
    model.weights.assign(sol.x.begin(), sol.x.begin() + static_cast<long>(d));
    model.intercept = sol.x[d];
    model.context_k = context_k;
    model.feature_dim = d;
    model.rank = sol.rank;
    model.rank_deficient = sol.rank < d + 1;
    return model;
}

inline std::vector<double> predict(const RegressionModel& model, const Matrix& features) {
    if (features.cols() != model.feature_dim) {
        throw Error(ErrorCode::DimensionMismatch, "feature width " + std::to_string(features.cols()) +
                                                      " != model dimension " + std::to_string(model.feature_dim));
    }
    std::vector<double> out(features.rows());
    for (std::size_t r = 0; r < features.rows(); ++r) {
        const auto row = features.row(r);
        out[r] = std::inner_product(row.begin(), row.end(), model.weights.begin(), model.intercept);
    }
    return out;
}

}  // namespace pitchcov
