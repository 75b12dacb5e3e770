#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace groupreduce {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Result of a truncated singular value decomposition: A ~ U * S.asDiagonal() * V^T.
/// S is non-increasing, U and V have orthonormal columns.
struct SvdResult {
    Matrix U;   // n x k
    Vector S;   // k
    Matrix V;   // d x k
};

/// Low-rank factor pair for one block: block ~ U * V^T.
/// V always has orthonormal columns; U absorbs the singular values.
struct FactorPair {
    Matrix U;   // n x k
    Matrix V;   // d x k
    Index rank() const { return U.cols(); }
};

/// Per-token occurrence counts (smoothed so every entry is positive).
struct FrequencyTable {
    std::vector<double> counts;

    Index size() const { return static_cast<Index>(counts.size()); }
    Vector as_vector() const {
        return Eigen::Map<const Vector>(counts.data(), static_cast<Index>(counts.size()));
    }
};

/// Exact partition of row indices 0..N-1 into disjoint nonempty clusters,
/// with an optional per-cluster rank (empty until ranks are assigned).
struct BlockPartition {
    std::vector<int> assignment;            // token -> cluster id
    std::vector<std::vector<int>> members;  // cluster -> ascending token ids
    std::vector<int> ranks;                 // per-cluster rank k_p, or empty

    int cluster_count() const { return static_cast<int>(members.size()); }
    bool has_ranks() const { return !ranks.empty(); }
};

/// Throws std::invalid_argument if the partition is not a valid disjoint cover
/// of 0..rows-1 with nonempty clusters. When require_ranks is set, also checks
/// 1 <= k_p <= min(|cluster p|, cols).
void validate_partition(const BlockPartition& part, Index rows, Index cols, bool require_ranks);

/// The compressed artifact: a partition plus one factor pair per cluster.
struct BlockLowRankModel {
    Index rows = 0;   // N
    Index cols = 0;   // D
    BlockPartition partition;
    std::vector<FactorPair> factors;
};

/// Knobs for the cluster refinement loop.
struct RefineConfig {
    int max_iterations = 20;      // 0 means no refinement
    int min_candidates = 1;       // stop when fewer tokens want to move
    double move_fraction = 0.10;  // fraction of candidates moved per iteration

    static RefineConfig defaults_for(Index rows) {
        RefineConfig cfg;
        cfg.min_candidates = static_cast<int>(std::max<Index>(1, (rows + 999) / 1000));
        return cfg;
    }
};

/// Default cluster count for a vocabulary of the given size.
inline int default_cluster_count(Index rows) { return rows <= 50000 ? 5 : 20; }

enum class io_errc {
    bad_magic = 1,
    bad_version,
    bad_dtype,
    truncated,
    trailing_data,
    parse_error,
    line_count_mismatch,
    invalid_content,
    io_failure,
};

const char* io_errc_name(io_errc code);

/// File-format and parsing failures; carries a distinct code per error class.
class io_error : public std::runtime_error {
public:
    io_error(io_errc code, const std::string& what)
        : std::runtime_error(what), code_(code) {}
    io_errc code() const { return code_; }

private:
    io_errc code_;
};

}  // namespace groupreduce
