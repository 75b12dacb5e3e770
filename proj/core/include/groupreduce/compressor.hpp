#pragma once

#include "groupreduce/types.hpp"

#include <cstddef>

namespace groupreduce {

/// Row-weighted rank-k factorization of a block: minimizes
/// sum_ij q_i (A_ij - U_i V_j^T)^2 over rank-k factor pairs.
///
/// Solved through the SVD of diag(sqrt(q)) * A: with [Ub, Sb, Vb] the top-k
/// triplets of that product, the solution is U = diag(1/sqrt(q)) * Ub * Sb
/// and V = Vb, so V keeps orthonormal columns.
///
/// Throws std::invalid_argument on non-positive weights, weight-count
/// mismatch, or rank out of range.
FactorPair weighted_lowrank(const Matrix& block, const Vector& weights, Index k);

/// Initial grouping: tokens sorted by frequency descending (ties by ascending
/// token index) and split into `clusters` contiguous groups of near-equal size.
/// The first (N mod c) groups take one extra token; cluster 0 holds the most
/// frequent tokens. Ranks are left unset.
BlockPartition init_partition_by_frequency(const FrequencyTable& freq, int clusters);

/// Gives cluster p rank clamp(round((f_p / f_min) * base_rank), 1,
/// min(|cluster p|, dim)), where f_p is the cluster's mean frequency and
/// f_min the smallest such mean. The least-frequent cluster gets base_rank
/// before clamping.
void assign_ranks(BlockPartition& part, const FrequencyTable& freq, int base_rank, Index dim);

/// Parameter cost of a ranked partition: sum_p (|cluster p| + dim) * k_p.
long long block_param_cost(const BlockPartition& part, Index dim);

/// Largest base rank whose assign_ranks cost fits budget_params, found by
/// doubling then bisection (the cost is non-decreasing in the base rank).
/// Once every cluster rank is clamped at min(|cluster|, dim) the cost stops
/// growing; the search is capped at the smallest base rank reaching that
/// saturation point. Throws std::invalid_argument when the budget is below
/// the all-rank-1 floor sum_p (|cluster p| + dim).
int rank_budget_solve(const BlockPartition& part, const FrequencyTable& freq, Index dim,
                      long long budget_params);

/// Factorizes every cluster independently with its assigned rank. The result
/// does not depend on cluster evaluation order.
BlockLowRankModel fit_blocks(const Matrix& A, const BlockPartition& part,
                             const FrequencyTable& freq);

/// One executed reassignment, with the projection residuals measured when the
/// move was decided.
struct MoveRecord {
    int token = 0;
    int from_cluster = 0;
    int to_cluster = 0;
    double home_residual = 0.0;
    double dest_residual = 0.0;
};

struct RefineIteration {
    std::size_t candidates = 0;  // tokens that preferred another cluster
    std::size_t moved = 0;       // moves actually executed
    double objective_after = 0.0;
    std::vector<MoveRecord> moves;
    std::vector<int> assignment_after;
};

/// Per-iteration trace of a refinement run; filled when a report pointer is
/// passed to refine() or group_reduce().
struct RefineReport {
    std::vector<RefineIteration> iterations;
};

/// Iterative cluster refinement. Each iteration:
///   1. computes every token's projection residual against every cluster basis;
///   2. collects candidates whose best residual is strictly below their home
///      residual (destination = lowest cluster id among minima), skipping
///      tokens whose departure would shrink their cluster below its rank;
///   3. stops if fewer than min_candidates tokens qualify;
///   4. moves the ceil(move_fraction * candidates) tokens with smallest best
///      residual (ties by lowest token index), re-checking the shrink guard as
///      moves are applied in order;
///   5. refits factor pairs of the clusters that changed, keeping ranks fixed.
///
/// Because a token carries its destination's rank, moves between unequal-rank
/// clusters shift the stored parameter count by k_to - k_from; a move is
/// skipped (like one that would over-shrink its source) when it would push the
/// running count above its value at entry, so refinement never grows the
/// model. Skipped candidates hand their slot to the next-best candidate; the
/// per-iteration move count stays capped at ceil(move_fraction * candidates).
///
/// The weighted block objective never increases across iterations.
BlockLowRankModel refine(const Matrix& A, const FrequencyTable& freq, BlockLowRankModel model,
                         const RefineConfig& cfg, RefineReport* report = nullptr);

/// Compression budget: either an explicit parameter count or a base rank for
/// the least-frequent cluster.
class Budget {
public:
    static Budget parameter_count(long long params) { return Budget(Kind::params, params); }
    static Budget base_rank(int r) { return Budget(Kind::rank, r); }

    bool is_parameter_count() const { return kind_ == Kind::params; }
    long long params() const { return value_; }
    int rank() const { return static_cast<int>(value_); }

private:
    enum class Kind { params, rank };
    Budget(Kind kind, long long value) : kind_(kind), value_(value) {}
    Kind kind_;
    long long value_;
};

/// Full pipeline: frequency grouping, dynamic rank assignment (solving for the
/// base rank when a parameter budget is given), per-cluster weighted
/// factorization, then refinement. Deterministic for fixed inputs.
BlockLowRankModel group_reduce(const Matrix& A, const FrequencyTable& freq, int clusters,
                               const Budget& budget, const RefineConfig& cfg,
                               RefineReport* report = nullptr);

/// Row i of the compressed representation: U^p_j (V^p)^T for i's cluster p and
/// local position j. Throws std::invalid_argument when the index is out of range.
Vector reconstruct_row(const BlockLowRankModel& model, int token);

/// Dense N x D materialization of the model; row i equals reconstruct_row(model, i).
Matrix reconstruct_full(const BlockLowRankModel& model);

}  // namespace groupreduce
