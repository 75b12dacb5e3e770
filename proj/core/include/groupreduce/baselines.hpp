#pragma once

#include "groupreduce/types.hpp"

namespace groupreduce {

/// Plain truncated-SVD factorization with the singular values absorbed into U.
FactorPair lowrank_baseline(const Matrix& A, Index k);

struct PrunedEntry {
    Index row;
    Index col;
    double value;
};

/// Sparse leftover of magnitude pruning. Stored cost is two parameters per
/// surviving entry (index plus value, the usual compressed-sparse convention).
struct PrunedMatrix {
    Index rows = 0;
    Index cols = 0;
    double threshold = 0.0;
    std::vector<PrunedEntry> entries;  // row-major order

    long long nnz() const { return static_cast<long long>(entries.size()); }
    long long param_cost() const { return 2 * nnz(); }
    Matrix to_dense() const;
};

/// Zeroes every entry with |a| < threshold. Exact zeros are never stored.
/// Throws std::invalid_argument on a negative threshold.
PrunedMatrix prune(const Matrix& A, double threshold);

/// Keeps the floor(budget_params / 2) largest-magnitude entries (ties broken
/// by row-major order), so the stored cost never exceeds the budget.
PrunedMatrix prune_to_budget(const Matrix& A, long long budget_params);

/// Uniform b-bit quantization of one matrix: per-matrix range, equal intervals,
/// interval midpoints as representatives.
struct QuantizedMatrix {
    Index rows = 0;
    Index cols = 0;
    int bits = 0;
    double range_min = 0.0;
    double range_max = 0.0;
    std::vector<std::uint16_t> codes;  // row-major, each < 2^bits
};

/// Splits [min(M), max(M)] into 2^bits equal intervals; code(x) =
/// min(floor((x - min) / width), 2^bits - 1). A degenerate (constant) range
/// produces all-zero codes with the constant kept in range_min.
/// Throws std::invalid_argument for bits outside [1, 16] or non-finite input.
QuantizedMatrix quantize_uniform(const Matrix& M, int bits);

/// Interval-midpoint decoder: value = range_min + (code + 0.5) * width.
/// Entrywise error is at most width / 2 for inputs inside the stored range.
Matrix dequantize(const QuantizedMatrix& Q);

/// A block low-rank model whose factor matrices are uniformly quantized.
struct QuantizedBlockModel {
    Index rows = 0;
    Index cols = 0;
    int bits = 0;
    BlockPartition partition;
    std::vector<QuantizedMatrix> factors_u;
    std::vector<QuantizedMatrix> factors_v;
};

/// Quantizes every cluster's U and V independently at the given bit width.
QuantizedBlockModel quantize_model(const BlockLowRankModel& model, int bits);

/// Decodes the factor matrices back to a plain block low-rank model.
BlockLowRankModel dequantize_model(const QuantizedBlockModel& model);

/// Dense reconstruction through the dequantized factors.
Matrix reconstruct_full(const QuantizedBlockModel& model);

}  // namespace groupreduce
