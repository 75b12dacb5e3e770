#pragma once

#include "groupreduce/baselines.hpp"
#include "groupreduce/compressor.hpp"
#include "groupreduce/types.hpp"

#include <cstdint>
#include <utility>

namespace groupreduce {

/// The block-clustering objective: sum over clusters p of
/// ||Q_p A_p - Q_p U^p (V^p)^T||_F^2 with Q_p = diag(sqrt(q)) over the
/// cluster's rows. Zero iff the model reconstructs A exactly.
double weighted_objective(const Matrix& A, const FrequencyTable& freq,
                          const BlockLowRankModel& model);

/// Same objective with unit weights: ||A - reconstruction||_F^2.
double unweighted_objective(const Matrix& A, const BlockLowRankModel& model);

/// Storage accounting in equivalent 32-bit parameters.
/// parameter_count is exact: integer for dense/pruned/block models, and an
/// integer number of bits divided by 32 (exact in binary floating point) for
/// quantized payloads.
struct MemoryReport {
    double parameter_count = 0.0;
    double bytes_at_32bit = 0.0;
    double compression_rate = 1.0;  // dense parameter count / parameter_count
};

MemoryReport memory_footprint_dense(Index rows, Index cols);
MemoryReport memory_footprint(const BlockLowRankModel& model);
MemoryReport memory_footprint(const PrunedMatrix& pruned);
MemoryReport memory_footprint(const QuantizedMatrix& q);
MemoryReport memory_footprint(const QuantizedBlockModel& model);

/// Full non-increasing singular-value sequence of A.
Vector spectrum(const Matrix& A);

/// Per requested rank k, the relative reconstruction error
/// ||A - rank-k truncation||_F / ||A||_F. Rank 0 is reported as 1.0 by
/// convention. Non-increasing in k.
std::vector<std::pair<Index, double>> error_curve(const Matrix& A, const std::vector<Index>& ranks);

/// Frequency table sorted descending, with natural-log values, for log-log
/// frequency/rank plots. Ranks start at 1.
std::vector<std::pair<Index, double>> zipf_stats(const FrequencyTable& freq);

/// A synthetic desk-scale instance with power-law token frequencies.
struct ZipfInstance {
    Matrix matrix;
    FrequencyTable frequencies;
    std::vector<int> true_assignment;  // planted cluster per token
};

/// Generates rows = cols-dimensional embeddings for `rows` tokens whose
/// frequencies follow 1/rank (floored at 1). Tokens are split into
/// `true_clusters` bands, log-spaced over the frequency ranking so head
/// tokens spread across many bands; each band owns a random orthonormal
/// subspace of dimension cols / (2 * true_clusters), and every row is a
/// Gaussian sample from its band's subspace plus noise_level * N(0, I).
/// Bit-identical regeneration for a fixed seed.
ZipfInstance gen_zipf_embedding(Index rows, Index cols, int true_clusters, double noise_level,
                                std::uint64_t seed);

enum class Strategy {
    vanilla_svd,
    weighted,
    block,
    block_dynamic_rank,
    refined,
};

const char* strategy_label(Strategy s);

struct AblationRow {
    Strategy strategy;
    long long parameter_count;
    double weighted_error;    // the block-clustering objective
    double unweighted_error;  // same with unit weights
};

/// Adds the compression strategies one by one at a matched parameter budget:
/// single-block SVD, single-block weighted, frequency blocks with uniform
/// rank, frequency blocks with frequency-proportional ranks, and finally
/// refinement. Every row picks the largest rank(s) whose cost fits the budget.
/// Throws std::invalid_argument when the budget cannot fit some strategy.
std::vector<AblationRow> ablation_run(const Matrix& A, const FrequencyTable& freq, int clusters,
                                      long long budget_params, const RefineConfig& cfg);

}  // namespace groupreduce
