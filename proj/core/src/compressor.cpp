#include "groupreduce/compressor.hpp"

#include "groupreduce/linalg.hpp"
#include "groupreduce/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace groupreduce {

void validate_partition(const BlockPartition& part, Index rows, Index cols, bool require_ranks) {
    const int c = part.cluster_count();
    if (c < 1) {
        throw std::invalid_argument("partition: no clusters");
    }
    if (static_cast<Index>(part.assignment.size()) != rows) {
        throw std::invalid_argument("partition: assignment covers " +
                                    std::to_string(part.assignment.size()) + " tokens, expected " +
                                    std::to_string(rows));
    }
    std::vector<char> seen(static_cast<std::size_t>(rows), 0);
    Index total = 0;
    for (int p = 0; p < c; ++p) {
        if (part.members[p].empty()) {
            throw std::invalid_argument("partition: cluster " + std::to_string(p) + " is empty");
        }
        for (int token : part.members[p]) {
            if (token < 0 || token >= rows) {
                throw std::invalid_argument("partition: token index " + std::to_string(token) +
                                            " out of range");
            }
            if (seen[static_cast<std::size_t>(token)]) {
                throw std::invalid_argument("partition: token " + std::to_string(token) +
                                            " appears in more than one cluster");
            }
            if (part.assignment[static_cast<std::size_t>(token)] != p) {
                throw std::invalid_argument("partition: assignment of token " +
                                            std::to_string(token) + " disagrees with member list");
            }
            seen[static_cast<std::size_t>(token)] = 1;
            ++total;
        }
    }
    if (total != rows) {
        throw std::invalid_argument("partition: clusters cover " + std::to_string(total) +
                                    " tokens, expected " + std::to_string(rows));
    }
    if (require_ranks) {
        if (static_cast<int>(part.ranks.size()) != c) {
            throw std::invalid_argument("partition: expected " + std::to_string(c) +
                                        " cluster ranks, got " + std::to_string(part.ranks.size()));
        }
        for (int p = 0; p < c; ++p) {
            const auto cap = std::min<Index>(static_cast<Index>(part.members[p].size()), cols);
            if (part.ranks[p] < 1 || part.ranks[p] > cap) {
                throw std::invalid_argument("partition: rank " + std::to_string(part.ranks[p]) +
                                            " of cluster " + std::to_string(p) +
                                            " out of range [1, " + std::to_string(cap) + "]");
            }
        }
    }
}

FactorPair weighted_lowrank(const Matrix& block, const Vector& weights, Index k) {
    if (weights.size() != block.rows()) {
        throw std::invalid_argument("weighted_lowrank: " + std::to_string(weights.size()) +
                                    " weights for " + std::to_string(block.rows()) + " rows");
    }
    for (Index i = 0; i < weights.size(); ++i) {
        if (!(weights(i) > 0.0)) {
            throw std::invalid_argument("weighted_lowrank: weight " + std::to_string(i) +
                                        " is not positive");
        }
    }
    const Vector root = weights.array().sqrt();
    SvdResult svd = svd_truncated(root.asDiagonal() * block, k);

    FactorPair out;
    out.U = svd.U;
    out.U.array().colwise() /= root.array();
    out.U = out.U * svd.S.asDiagonal();
    out.V = std::move(svd.V);
    return out;
}

BlockPartition init_partition_by_frequency(const FrequencyTable& freq, int clusters) {
    const Index n = freq.size();
    if (n < 1) {
        throw std::invalid_argument("init_partition_by_frequency: empty frequency table");
    }
    if (clusters < 1 || static_cast<Index>(clusters) > n) {
        throw std::invalid_argument("init_partition_by_frequency: cluster count " +
                                    std::to_string(clusters) + " out of range [1, " +
                                    std::to_string(n) + "]");
    }

    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        const double qa = freq.counts[static_cast<std::size_t>(a)];
        const double qb = freq.counts[static_cast<std::size_t>(b)];
        if (qa != qb) {
            return qa > qb;
        }
        return a < b;
    });

    BlockPartition part;
    part.assignment.assign(static_cast<std::size_t>(n), 0);
    part.members.resize(static_cast<std::size_t>(clusters));

    const Index base = n / clusters;
    const Index extra = n % clusters;
    std::size_t pos = 0;
    for (int p = 0; p < clusters; ++p) {
        const Index size = base + (p < extra ? 1 : 0);
        auto& cluster = part.members[static_cast<std::size_t>(p)];
        cluster.assign(order.begin() + static_cast<std::ptrdiff_t>(pos),
                       order.begin() + static_cast<std::ptrdiff_t>(pos + size));
        std::sort(cluster.begin(), cluster.end());
        for (int token : cluster) {
            part.assignment[static_cast<std::size_t>(token)] = p;
        }
        pos += static_cast<std::size_t>(size);
    }
    return part;
}

namespace {

std::vector<double> cluster_mean_frequencies(const BlockPartition& part,
                                             const FrequencyTable& freq) {
    std::vector<double> means;
    means.reserve(part.members.size());
    for (const auto& cluster : part.members) {
        if (cluster.empty()) {
            throw std::invalid_argument("assign_ranks: empty cluster");
        }
        double sum = 0.0;
        for (int token : cluster) {
            sum += freq.counts[static_cast<std::size_t>(token)];
        }
        means.push_back(sum / static_cast<double>(cluster.size()));
    }
    return means;
}

int dynamic_rank(double ratio, int base_rank, Index cap) {
    const long long raw = std::llround(ratio * static_cast<double>(base_rank));
    return static_cast<int>(std::clamp<long long>(raw, 1, static_cast<long long>(cap)));
}

}  // namespace

void assign_ranks(BlockPartition& part, const FrequencyTable& freq, int base_rank, Index dim) {
    if (base_rank < 1) {
        throw std::invalid_argument("assign_ranks: base rank must be >= 1");
    }
    const auto means = cluster_mean_frequencies(part, freq);
    const double f_min = *std::min_element(means.begin(), means.end());

    part.ranks.resize(part.members.size());
    for (std::size_t p = 0; p < part.members.size(); ++p) {
        const auto cap = std::min<Index>(static_cast<Index>(part.members[p].size()), dim);
        part.ranks[p] = dynamic_rank(means[p] / f_min, base_rank, cap);
    }
}

long long block_param_cost(const BlockPartition& part, Index dim) {
    if (!part.has_ranks()) {
        throw std::invalid_argument("block_param_cost: partition has no ranks");
    }
    long long cost = 0;
    for (std::size_t p = 0; p < part.members.size(); ++p) {
        cost += (static_cast<long long>(part.members[p].size()) + static_cast<long long>(dim)) *
                part.ranks[p];
    }
    return cost;
}

int rank_budget_solve(const BlockPartition& part, const FrequencyTable& freq, Index dim,
                      long long budget_params) {
    const auto means = cluster_mean_frequencies(part, freq);
    const double f_min = *std::min_element(means.begin(), means.end());

    std::vector<long long> sizes;
    std::vector<Index> caps;
    for (const auto& cluster : part.members) {
        sizes.push_back(static_cast<long long>(cluster.size()));
        caps.push_back(std::min<Index>(static_cast<Index>(cluster.size()), dim));
    }

    long long floor_cost = 0;
    for (long long size : sizes) {
        floor_cost += size + static_cast<long long>(dim);
    }
    if (budget_params < floor_cost) {
        throw std::invalid_argument("rank_budget_solve: budget " + std::to_string(budget_params) +
                                    " below the all-rank-1 floor " + std::to_string(floor_cost));
    }

    const auto cost = [&](int r) {
        long long total = 0;
        for (std::size_t p = 0; p < sizes.size(); ++p) {
            total += (sizes[p] + static_cast<long long>(dim)) *
                     dynamic_rank(means[p] / f_min, r, caps[p]);
        }
        return total;
    };

    // Past this base rank every cluster is clamped and the cost is constant.
    const int saturation = static_cast<int>(*std::max_element(caps.begin(), caps.end()));
    if (cost(saturation) <= budget_params) {
        return saturation;
    }
    if (cost(1) > budget_params) {
        throw std::invalid_argument(
            "rank_budget_solve: budget " + std::to_string(budget_params) +
            " cannot fit the frequency-proportional rank profile (smallest cost " +
            std::to_string(cost(1)) + ")");
    }

    int lo = 1;
    int hi = 2;
    while (cost(hi) <= budget_params) {
        lo = hi;
        hi *= 2;
    }
    while (hi - lo > 1) {
        const int mid = lo + (hi - lo) / 2;
        if (cost(mid) <= budget_params) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return lo;
}

namespace {

Matrix gather_rows(const Matrix& A, const std::vector<int>& tokens) {
    Matrix block(static_cast<Index>(tokens.size()), A.cols());
    for (std::size_t j = 0; j < tokens.size(); ++j) {
        block.row(static_cast<Index>(j)) = A.row(tokens[j]);
    }
    return block;
}

Vector gather_weights(const FrequencyTable& freq, const std::vector<int>& tokens) {
    Vector w(static_cast<Index>(tokens.size()));
    for (std::size_t j = 0; j < tokens.size(); ++j) {
        w(static_cast<Index>(j)) = freq.counts[static_cast<std::size_t>(tokens[j])];
    }
    return w;
}

void refit_cluster(BlockLowRankModel& model, const Matrix& A, const FrequencyTable& freq, int p) {
    const auto& tokens = model.partition.members[static_cast<std::size_t>(p)];
    model.factors[static_cast<std::size_t>(p)] =
        weighted_lowrank(gather_rows(A, tokens), gather_weights(freq, tokens),
                         model.partition.ranks[static_cast<std::size_t>(p)]);
}

}  // namespace

BlockLowRankModel fit_blocks(const Matrix& A, const BlockPartition& part,
                             const FrequencyTable& freq) {
    validate_partition(part, A.rows(), A.cols(), /*require_ranks=*/true);
    if (freq.size() != A.rows()) {
        throw std::invalid_argument("fit_blocks: frequency table size mismatch");
    }

    BlockLowRankModel model;
    model.rows = A.rows();
    model.cols = A.cols();
    model.partition = part;
    model.factors.resize(part.members.size());
    for (int p = 0; p < part.cluster_count(); ++p) {
        refit_cluster(model, A, freq, p);
    }
    return model;
}

namespace {

void validate_refine_inputs(const Matrix& A, const FrequencyTable& freq,
                            const BlockLowRankModel& model, const RefineConfig& cfg) {
    if (model.rows != A.rows() || model.cols != A.cols()) {
        throw std::invalid_argument("refine: model dims do not match matrix");
    }
    if (freq.size() != A.rows()) {
        throw std::invalid_argument("refine: frequency table size mismatch");
    }
    validate_partition(model.partition, model.rows, model.cols, /*require_ranks=*/true);
    if (model.factors.size() != model.partition.members.size()) {
        throw std::invalid_argument("refine: factor count does not match cluster count");
    }
    if (cfg.max_iterations < 0) {
        throw std::invalid_argument("refine: max_iterations must be >= 0");
    }
    if (cfg.min_candidates < 1) {
        throw std::invalid_argument("refine: min_candidates must be >= 1");
    }
    if (!(cfg.move_fraction > 0.0) || cfg.move_fraction > 1.0) {
        throw std::invalid_argument("refine: move_fraction must be in (0, 1]");
    }
}

struct Candidate {
    int token;
    int from;
    int to;
    double home_residual;
    double dest_residual;
};

}  // namespace

BlockLowRankModel refine(const Matrix& A, const FrequencyTable& freq, BlockLowRankModel model,
                         const RefineConfig& cfg, RefineReport* report) {
    validate_refine_inputs(A, freq, model, cfg);
    if (report) {
        report->iterations.clear();
    }

    const int c = model.partition.cluster_count();
    auto& members = model.partition.members;
    auto& assignment = model.partition.assignment;
    const auto& ranks = model.partition.ranks;

    // Moving a token from rank-k_from to rank-k_to changes the stored
    // parameter count by k_to - k_from. Capping the running count at its
    // entry value keeps the model within whatever budget produced it.
    const long long cost_cap = block_param_cost(model.partition, model.cols);
    long long cost = cost_cap;

    std::vector<double> residual(static_cast<std::size_t>(c));
    for (int iter = 0; iter < cfg.max_iterations; ++iter) {
        // Scan: each token's residual against every cluster basis.
        std::vector<Candidate> candidates;
        for (Index i = 0; i < model.rows; ++i) {
            const Vector row = A.row(i).transpose();
            for (int p = 0; p < c; ++p) {
                residual[static_cast<std::size_t>(p)] =
                    project_residual(row, model.factors[static_cast<std::size_t>(p)].V);
            }
            int best = 0;
            for (int p = 1; p < c; ++p) {
                if (residual[static_cast<std::size_t>(p)] < residual[static_cast<std::size_t>(best)]) {
                    best = p;
                }
            }
            const int home = assignment[static_cast<std::size_t>(i)];
            const double home_res = residual[static_cast<std::size_t>(home)];
            const double best_res = residual[static_cast<std::size_t>(best)];
            if (best == home || !(best_res < home_res)) {
                continue;
            }
            // A cluster may not shrink below its fixed rank (nor empty out).
            if (static_cast<Index>(members[static_cast<std::size_t>(home)].size()) <=
                ranks[static_cast<std::size_t>(home)]) {
                continue;
            }
            candidates.push_back({static_cast<int>(i), home, best, home_res, best_res});
        }

        RefineIteration stats;
        stats.candidates = candidates.size();

        if (candidates.size() < static_cast<std::size_t>(cfg.min_candidates)) {
            if (report) {
                stats.objective_after = weighted_objective(A, freq, model);
                stats.assignment_after = assignment;
                report->iterations.push_back(std::move(stats));
            }
            break;
        }

        // Move the best-approximated candidates first.
        std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
            if (a.dest_residual != b.dest_residual) {
                return a.dest_residual < b.dest_residual;
            }
            return a.token < b.token;
        });
        const std::size_t quota = static_cast<std::size_t>(
            std::ceil(cfg.move_fraction * static_cast<double>(candidates.size())));

        std::vector<char> changed(static_cast<std::size_t>(c), 0);
        for (std::size_t n = 0; n < candidates.size() && stats.moves.size() < quota; ++n) {
            const Candidate& cand = candidates[n];
            auto& source = members[static_cast<std::size_t>(cand.from)];
            // Earlier moves in this batch may have drained the source.
            if (static_cast<Index>(source.size()) <= ranks[static_cast<std::size_t>(cand.from)]) {
                continue;
            }
            // A blocked candidate passes its slot to the next-best one, so
            // cheap within-tier moves still happen when every top candidate
            // wants a costlier cluster.
            const long long delta = ranks[static_cast<std::size_t>(cand.to)] -
                                    ranks[static_cast<std::size_t>(cand.from)];
            if (cost + delta > cost_cap) {
                continue;
            }
            cost += delta;
            source.erase(std::lower_bound(source.begin(), source.end(), cand.token));
            auto& dest = members[static_cast<std::size_t>(cand.to)];
            dest.insert(std::lower_bound(dest.begin(), dest.end(), cand.token), cand.token);
            assignment[static_cast<std::size_t>(cand.token)] = cand.to;
            changed[static_cast<std::size_t>(cand.from)] = 1;
            changed[static_cast<std::size_t>(cand.to)] = 1;
            stats.moves.push_back(
                {cand.token, cand.from, cand.to, cand.home_residual, cand.dest_residual});
        }
        const std::size_t executed = stats.moves.size();
        stats.moved = executed;

        for (int p = 0; p < c; ++p) {
            if (changed[static_cast<std::size_t>(p)]) {
                refit_cluster(model, A, freq, p);
            }
        }

        if (report) {
            stats.objective_after = weighted_objective(A, freq, model);
            stats.assignment_after = assignment;
            report->iterations.push_back(std::move(stats));
        }
        if (executed == 0) {
            break;  // every selected move was blocked; the state cannot change
        }
    }
    return model;
}

BlockLowRankModel group_reduce(const Matrix& A, const FrequencyTable& freq, int clusters,
                               const Budget& budget, const RefineConfig& cfg,
                               RefineReport* report) {
    BlockPartition part = init_partition_by_frequency(freq, clusters);
    const int base_rank = budget.is_parameter_count()
                              ? rank_budget_solve(part, freq, A.cols(), budget.params())
                              : budget.rank();
    assign_ranks(part, freq, base_rank, A.cols());
    BlockLowRankModel model = fit_blocks(A, part, freq);
    return refine(A, freq, std::move(model), cfg, report);
}

Vector reconstruct_row(const BlockLowRankModel& model, int token) {
    if (token < 0 || static_cast<Index>(token) >= model.rows) {
        throw std::invalid_argument("reconstruct_row: token index " + std::to_string(token) +
                                    " out of range [0, " + std::to_string(model.rows) + ")");
    }
    const int p = model.partition.assignment[static_cast<std::size_t>(token)];
    const auto& cluster = model.partition.members[static_cast<std::size_t>(p)];
    const auto it = std::lower_bound(cluster.begin(), cluster.end(), token);
    const Index local = static_cast<Index>(it - cluster.begin());
    const FactorPair& f = model.factors[static_cast<std::size_t>(p)];
    return f.V * f.U.row(local).transpose();
}

Matrix reconstruct_full(const BlockLowRankModel& model) {
    Matrix out(model.rows, model.cols);
    for (std::size_t p = 0; p < model.factors.size(); ++p) {
        const Matrix block = model.factors[p].U * model.factors[p].V.transpose();
        const auto& cluster = model.partition.members[p];
        for (std::size_t j = 0; j < cluster.size(); ++j) {
            out.row(cluster[j]) = block.row(static_cast<Index>(j));
        }
    }
    return out;
}

}  // namespace groupreduce
