#include "groupreduce/baselines.hpp"

#include "groupreduce/compressor.hpp"
#include "groupreduce/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace groupreduce {

FactorPair lowrank_baseline(const Matrix& A, Index k) {
    SvdResult svd = svd_truncated(A, k);
    FactorPair out;
    out.U = svd.U * svd.S.asDiagonal();
    out.V = std::move(svd.V);
    return out;
}

Matrix PrunedMatrix::to_dense() const {
    Matrix out = Matrix::Zero(rows, cols);
    for (const PrunedEntry& e : entries) {
        out(e.row, e.col) = e.value;
    }
    return out;
}

PrunedMatrix prune(const Matrix& A, double threshold) {
    if (!(threshold >= 0.0)) {
        throw std::invalid_argument("prune: threshold must be nonnegative");
    }
    PrunedMatrix out;
    out.rows = A.rows();
    out.cols = A.cols();
    out.threshold = threshold;
    for (Index i = 0; i < A.rows(); ++i) {
        for (Index j = 0; j < A.cols(); ++j) {
            const double v = A(i, j);
            if (v != 0.0 && std::abs(v) >= threshold) {
                out.entries.push_back({i, j, v});
            }
        }
    }
    return out;
}

PrunedMatrix prune_to_budget(const Matrix& A, long long budget_params) {
    if (budget_params < 0) {
        throw std::invalid_argument("prune_to_budget: budget must be nonnegative");
    }
    const long long keep = budget_params / 2;

    // Row-major positions of all nonzeros, best magnitude first.
    std::vector<long long> positions;
    for (Index i = 0; i < A.rows(); ++i) {
        for (Index j = 0; j < A.cols(); ++j) {
            if (A(i, j) != 0.0) {
                positions.push_back(i * A.cols() + j);
            }
        }
    }
    std::stable_sort(positions.begin(), positions.end(), [&](long long a, long long b) {
        const double ma = std::abs(A(a / A.cols(), a % A.cols()));
        const double mb = std::abs(A(b / A.cols(), b % A.cols()));
        return ma > mb;
    });
    if (static_cast<long long>(positions.size()) > keep) {
        positions.resize(static_cast<std::size_t>(keep));
    }
    std::sort(positions.begin(), positions.end());

    PrunedMatrix out;
    out.rows = A.rows();
    out.cols = A.cols();
    for (long long pos : positions) {
        const Index i = pos / A.cols();
        const Index j = pos % A.cols();
        out.entries.push_back({i, j, A(i, j)});
    }
    out.threshold =
        out.entries.empty()
            ? 0.0
            : std::abs(std::min_element(out.entries.begin(), out.entries.end(),
                                        [](const PrunedEntry& a, const PrunedEntry& b) {
                                            return std::abs(a.value) < std::abs(b.value);
                                        })
                           ->value);
    return out;
}

QuantizedMatrix quantize_uniform(const Matrix& M, int bits) {
    if (bits < 1 || bits > 16) {
        throw std::invalid_argument("quantize_uniform: bits " + std::to_string(bits) +
                                    " out of range [1, 16]");
    }
    if (!M.allFinite()) {
        throw std::invalid_argument("quantize_uniform: input has non-finite entries");
    }

    QuantizedMatrix out;
    out.rows = M.rows();
    out.cols = M.cols();
    out.bits = bits;
    out.range_min = M.minCoeff();
    out.range_max = M.maxCoeff();
    out.codes.resize(static_cast<std::size_t>(M.size()));

    if (out.range_min == out.range_max) {
        std::fill(out.codes.begin(), out.codes.end(), std::uint16_t{0});
        return out;
    }

    const int levels = 1 << bits;
    const double width = (out.range_max - out.range_min) / static_cast<double>(levels);
    std::size_t pos = 0;
    for (Index i = 0; i < M.rows(); ++i) {
        for (Index j = 0; j < M.cols(); ++j) {
            const double t = (M(i, j) - out.range_min) / width;
            const long long code = std::min<long long>(static_cast<long long>(std::floor(t)),
                                                       static_cast<long long>(levels - 1));
            out.codes[pos++] = static_cast<std::uint16_t>(std::max<long long>(code, 0));
        }
    }
    return out;
}

Matrix dequantize(const QuantizedMatrix& Q) {
    Matrix out(Q.rows, Q.cols);
    if (Q.range_min == Q.range_max) {
        out.setConstant(Q.range_min);
        return out;
    }
    const double width = (Q.range_max - Q.range_min) / static_cast<double>(1 << Q.bits);
    std::size_t pos = 0;
    for (Index i = 0; i < Q.rows; ++i) {
        for (Index j = 0; j < Q.cols; ++j) {
            out(i, j) = Q.range_min + (static_cast<double>(Q.codes[pos++]) + 0.5) * width;
        }
    }
    return out;
}

QuantizedBlockModel quantize_model(const BlockLowRankModel& model, int bits) {
    QuantizedBlockModel out;
    out.rows = model.rows;
    out.cols = model.cols;
    out.bits = bits;
    out.partition = model.partition;
    out.factors_u.reserve(model.factors.size());
    out.factors_v.reserve(model.factors.size());
    for (const FactorPair& f : model.factors) {
        out.factors_u.push_back(quantize_uniform(f.U, bits));
        out.factors_v.push_back(quantize_uniform(f.V, bits));
    }
    return out;
}

BlockLowRankModel dequantize_model(const QuantizedBlockModel& model) {
    BlockLowRankModel out;
    out.rows = model.rows;
    out.cols = model.cols;
    out.partition = model.partition;
    out.factors.reserve(model.factors_u.size());
    for (std::size_t p = 0; p < model.factors_u.size(); ++p) {
        FactorPair f;
        f.U = dequantize(model.factors_u[p]);
        f.V = dequantize(model.factors_v[p]);
        out.factors.push_back(std::move(f));
    }
    return out;
}

Matrix reconstruct_full(const QuantizedBlockModel& model) {
    return reconstruct_full(dequantize_model(model));
}

}  // namespace groupreduce
