#include "groupreduce/metrics.hpp"

#include "groupreduce/linalg.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

namespace groupreduce {

namespace {

double block_objective(const Matrix& A, const BlockLowRankModel& model, const double* weights) {
    double total = 0.0;
    for (std::size_t p = 0; p < model.factors.size(); ++p) {
        const auto& cluster = model.partition.members[p];
        const FactorPair& f = model.factors[p];
        const Matrix recon = f.U * f.V.transpose();
        for (std::size_t j = 0; j < cluster.size(); ++j) {
            const double err2 =
                (A.row(cluster[j]) - recon.row(static_cast<Index>(j))).squaredNorm();
            total += (weights ? weights[static_cast<std::size_t>(cluster[j])] : 1.0) * err2;
        }
    }
    return total;
}

}  // namespace

double weighted_objective(const Matrix& A, const FrequencyTable& freq,
                          const BlockLowRankModel& model) {
    if (model.rows != A.rows() || model.cols != A.cols()) {
        throw std::invalid_argument("weighted_objective: model dims do not match matrix");
    }
    if (freq.size() != A.rows()) {
        throw std::invalid_argument("weighted_objective: frequency table size mismatch");
    }
    return block_objective(A, model, freq.counts.data());
}

double unweighted_objective(const Matrix& A, const BlockLowRankModel& model) {
    if (model.rows != A.rows() || model.cols != A.cols()) {
        throw std::invalid_argument("unweighted_objective: model dims do not match matrix");
    }
    return block_objective(A, model, nullptr);
}

namespace {

MemoryReport make_report(double params, double dense_params) {
    MemoryReport report;
    report.parameter_count = params;
    report.bytes_at_32bit = params * 4.0;
    report.compression_rate = dense_params / params;
    return report;
}

double quantized_matrix_params(const QuantizedMatrix& q) {
    // Packed code bits divided by 32 (exact: power-of-two divisor),
    // plus two full-precision range scalars.
    const double code_bits = static_cast<double>(static_cast<long long>(q.codes.size()) * q.bits);
    return code_bits / 32.0 + 2.0;
}

}  // namespace

MemoryReport memory_footprint_dense(Index rows, Index cols) {
    const double dense = static_cast<double>(rows) * static_cast<double>(cols);
    return make_report(dense, dense);
}

MemoryReport memory_footprint(const BlockLowRankModel& model) {
    const double dense = static_cast<double>(model.rows) * static_cast<double>(model.cols);
    return make_report(static_cast<double>(block_param_cost(model.partition, model.cols)), dense);
}

MemoryReport memory_footprint(const PrunedMatrix& pruned) {
    const double dense = static_cast<double>(pruned.rows) * static_cast<double>(pruned.cols);
    return make_report(static_cast<double>(pruned.param_cost()), dense);
}

MemoryReport memory_footprint(const QuantizedMatrix& q) {
    const double dense = static_cast<double>(q.rows) * static_cast<double>(q.cols);
    return make_report(quantized_matrix_params(q), dense);
}

MemoryReport memory_footprint(const QuantizedBlockModel& model) {
    const double dense = static_cast<double>(model.rows) * static_cast<double>(model.cols);
    double params = 0.0;
    for (std::size_t p = 0; p < model.factors_u.size(); ++p) {
        params += quantized_matrix_params(model.factors_u[p]);
        params += quantized_matrix_params(model.factors_v[p]);
    }
    return make_report(params, dense);
}

Vector spectrum(const Matrix& A) {
    Eigen::BDCSVD<Matrix> svd(A);
    return svd.singularValues();
}

std::vector<std::pair<Index, double>> error_curve(const Matrix& A, const std::vector<Index>& ranks) {
    const double norm = A.norm();
    std::vector<std::pair<Index, double>> curve;
    curve.reserve(ranks.size());
    for (Index k : ranks) {
        if (k == 0) {
            curve.emplace_back(0, 1.0);
            continue;
        }
        const SvdResult svd = svd_truncated(A, k);
        const Matrix recon = svd.U * svd.S.asDiagonal() * svd.V.transpose();
        curve.emplace_back(k, frobenius_error(A, recon) / norm);
    }
    return curve;
}

std::vector<std::pair<Index, double>> zipf_stats(const FrequencyTable& freq) {
    std::vector<int> order(static_cast<std::size_t>(freq.size()));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        const double qa = freq.counts[static_cast<std::size_t>(a)];
        const double qb = freq.counts[static_cast<std::size_t>(b)];
        if (qa != qb) {
            return qa > qb;
        }
        return a < b;
    });
    std::vector<std::pair<Index, double>> stats;
    stats.reserve(order.size());
    for (std::size_t r = 0; r < order.size(); ++r) {
        stats.emplace_back(static_cast<Index>(r + 1),
                           std::log(freq.counts[static_cast<std::size_t>(order[r])]));
    }
    return stats;
}

namespace {

/// Band boundaries log-spaced over 0..rows: band j covers tokens
/// [bounds[j], bounds[j+1]). Every band is nonempty.
std::vector<Index> log_spaced_bounds(Index rows, int bands) {
    std::vector<Index> bounds(static_cast<std::size_t>(bands) + 1);
    bounds[0] = 0;
    bounds[static_cast<std::size_t>(bands)] = rows;
    for (int j = 1; j < bands; ++j) {
        const double t = std::pow(static_cast<double>(rows),
                                  static_cast<double>(j) / static_cast<double>(bands));
        Index b = static_cast<Index>(std::floor(t));
        b = std::max(b, bounds[static_cast<std::size_t>(j - 1)] + 1);
        b = std::min(b, rows - static_cast<Index>(bands - j));
        bounds[static_cast<std::size_t>(j)] = b;
    }
    return bounds;
}

}  // namespace

ZipfInstance gen_zipf_embedding(Index rows, Index cols, int true_clusters, double noise_level,
                                std::uint64_t seed) {
    if (rows < 1 || cols < 1) {
        throw std::invalid_argument("gen_zipf_embedding: invalid dims");
    }
    if (true_clusters < 1 || static_cast<Index>(true_clusters) > rows) {
        throw std::invalid_argument("gen_zipf_embedding: true_clusters out of range");
    }
    if (cols < 2 * static_cast<Index>(true_clusters)) {
        throw std::invalid_argument("gen_zipf_embedding: need cols >= 2 * true_clusters");
    }

    ZipfInstance out;
    out.frequencies.counts.resize(static_cast<std::size_t>(rows));
    const double scale = 100.0 * static_cast<double>(rows);
    for (Index i = 0; i < rows; ++i) {
        const double count = std::llround(scale / static_cast<double>(i + 1));
        out.frequencies.counts[static_cast<std::size_t>(i)] = std::max(1.0, count);
    }

    const auto bounds = log_spaced_bounds(rows, true_clusters);
    out.true_assignment.resize(static_cast<std::size_t>(rows));
    for (int b = 0; b < true_clusters; ++b) {
        for (Index i = bounds[static_cast<std::size_t>(b)]; i < bounds[static_cast<std::size_t>(b) + 1];
             ++i) {
            out.true_assignment[static_cast<std::size_t>(i)] = b;
        }
    }

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    const Index dim = std::max<Index>(1, cols / (2 * static_cast<Index>(true_clusters)));
    std::vector<Matrix> bases;
    bases.reserve(static_cast<std::size_t>(true_clusters));
    for (int b = 0; b < true_clusters; ++b) {
        Matrix g(cols, dim);
        for (Index j = 0; j < dim; ++j) {
            for (Index i = 0; i < cols; ++i) {
                g(i, j) = gauss(rng);
            }
        }
        Eigen::HouseholderQR<Matrix> qr(g);
        bases.push_back(Matrix(qr.householderQ() * Matrix::Identity(cols, dim)));
    }

    out.matrix.resize(rows, cols);
    Vector coeff(dim);
    Vector noise(cols);
    for (Index i = 0; i < rows; ++i) {
        for (Index j = 0; j < dim; ++j) {
            coeff(j) = gauss(rng);
        }
        for (Index j = 0; j < cols; ++j) {
            noise(j) = gauss(rng);
        }
        const int band = out.true_assignment[static_cast<std::size_t>(i)];
        out.matrix.row(i) =
            (bases[static_cast<std::size_t>(band)] * coeff + noise_level * noise).transpose();
    }
    return out;
}

const char* strategy_label(Strategy s) {
    switch (s) {
        case Strategy::vanilla_svd: return "vanilla-svd";
        case Strategy::weighted: return "weighted";
        case Strategy::block: return "block";
        case Strategy::block_dynamic_rank: return "block-dynamic-rank";
        case Strategy::refined: return "refined";
    }
    return "unknown";
}

namespace {

/// Wraps a plain factor pair as a one-cluster model so all strategies share
/// the same evaluation path.
BlockLowRankModel single_block_model(const Matrix& A, FactorPair factors) {
    BlockLowRankModel model;
    model.rows = A.rows();
    model.cols = A.cols();
    model.partition.assignment.assign(static_cast<std::size_t>(A.rows()), 0);
    model.partition.members.resize(1);
    model.partition.members[0].resize(static_cast<std::size_t>(A.rows()));
    std::iota(model.partition.members[0].begin(), model.partition.members[0].end(), 0);
    model.partition.ranks = {static_cast<int>(factors.rank())};
    model.factors.push_back(std::move(factors));
    return model;
}

AblationRow evaluate_row(Strategy strategy, const Matrix& A, const FrequencyTable& freq,
                         const BlockLowRankModel& model) {
    AblationRow row;
    row.strategy = strategy;
    row.parameter_count = block_param_cost(model.partition, model.cols);
    row.weighted_error = weighted_objective(A, freq, model);
    row.unweighted_error = unweighted_objective(A, model);
    return row;
}

}  // namespace

std::vector<AblationRow> ablation_run(const Matrix& A, const FrequencyTable& freq, int clusters,
                                      long long budget_params, const RefineConfig& cfg) {
    const Index n = A.rows();
    const Index d = A.cols();

    const long long single_cost = static_cast<long long>(n) + static_cast<long long>(d);
    Index k_single = static_cast<Index>(budget_params / single_cost);
    k_single = std::min(k_single, std::min(n, d));
    if (k_single < 1) {
        throw std::invalid_argument("ablation_run: budget " + std::to_string(budget_params) +
                                    " cannot fit a rank-1 factorization");
    }

    std::vector<AblationRow> rows;
    rows.reserve(5);

    rows.push_back(evaluate_row(Strategy::vanilla_svd, A, freq,
                                single_block_model(A, lowrank_baseline(A, k_single))));
    rows.push_back(evaluate_row(Strategy::weighted, A, freq,
                                single_block_model(A, weighted_lowrank(A, freq.as_vector(), k_single))));

    BlockPartition part = init_partition_by_frequency(freq, clusters);

    long long per_rank_cost = 0;
    for (const auto& cluster : part.members) {
        per_rank_cost += static_cast<long long>(cluster.size()) + static_cast<long long>(d);
    }
    const long long k_uniform = budget_params / per_rank_cost;
    if (k_uniform < 1) {
        throw std::invalid_argument("ablation_run: budget " + std::to_string(budget_params) +
                                    " cannot fit uniform rank-1 blocks");
    }
    BlockPartition uniform = part;
    uniform.ranks.resize(uniform.members.size());
    for (std::size_t p = 0; p < uniform.members.size(); ++p) {
        const auto cap = std::min<Index>(static_cast<Index>(uniform.members[p].size()), d);
        uniform.ranks[p] = static_cast<int>(std::min<long long>(k_uniform, cap));
    }
    rows.push_back(evaluate_row(Strategy::block, A, freq, fit_blocks(A, uniform, freq)));

    const int base_rank = rank_budget_solve(part, freq, d, budget_params);
    assign_ranks(part, freq, base_rank, d);
    BlockLowRankModel dynamic = fit_blocks(A, part, freq);
    rows.push_back(evaluate_row(Strategy::block_dynamic_rank, A, freq, dynamic));

    BlockLowRankModel refined = refine(A, freq, std::move(dynamic), cfg);
    rows.push_back(evaluate_row(Strategy::refined, A, freq, refined));

    return rows;
}

}  // namespace groupreduce
