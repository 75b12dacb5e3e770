#pragma once

// Shared test utilities. Oracles here deliberately take a different code path
// than the library: decompositions use Eigen's one-sided Jacobi algorithm and
// objectives are direct summations, so agreement is meaningful.

#include "groupreduce/types.hpp"

#include <Eigen/SVD>

#include <random>

namespace testutil {

inline groupreduce::Matrix random_matrix(groupreduce::Index rows, groupreduce::Index cols,
                                         std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    groupreduce::Matrix A(rows, cols);
    for (groupreduce::Index i = 0; i < rows; ++i) {
        for (groupreduce::Index j = 0; j < cols; ++j) {
            A(i, j) = gauss(rng);
        }
    }
    return A;
}

/// Power-law row weights: w_i roughly proportional to 1/(rank+1) with the
/// ranks shuffled so weight order is independent of row order.
inline groupreduce::Vector zipf_weights(groupreduce::Index n, std::uint64_t seed) {
    std::vector<int> rank(static_cast<std::size_t>(n));
    std::iota(rank.begin(), rank.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(rank.begin(), rank.end(), rng);
    groupreduce::Vector w(n);
    for (groupreduce::Index i = 0; i < n; ++i) {
        w(i) = static_cast<double>(n) / static_cast<double>(rank[static_cast<std::size_t>(i)] + 1);
    }
    return w;
}

inline groupreduce::FrequencyTable table_from(const groupreduce::Vector& w) {
    groupreduce::FrequencyTable t;
    t.counts.assign(w.data(), w.data() + w.size());
    return t;
}

/// Full one-sided Jacobi decomposition; the independent reference for
/// anything the library computes through bidiagonalization.
struct JacobiSvd {
    groupreduce::Matrix U;
    groupreduce::Vector S;
    groupreduce::Matrix V;

    explicit JacobiSvd(const groupreduce::Matrix& A) {
        Eigen::JacobiSVD<groupreduce::Matrix> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
        U = svd.matrixU();
        S = svd.singularValues();
        V = svd.matrixV();
    }

    groupreduce::Matrix reconstruction(groupreduce::Index k) const {
        return U.leftCols(k) * S.head(k).asDiagonal() * V.leftCols(k).transpose();
    }

    double tail_energy(groupreduce::Index k) const {
        double sum = 0.0;
        for (groupreduce::Index i = k; i < S.size(); ++i) {
            sum += S(i) * S(i);
        }
        return sum;
    }
};

/// Direct-summation weighted squared error: sum_i w_i * ||A_i - R_i||^2.
inline double row_weighted_error(const groupreduce::Matrix& A, const groupreduce::Vector& w,
                                 const groupreduce::Matrix& R) {
    double total = 0.0;
    for (groupreduce::Index i = 0; i < A.rows(); ++i) {
        total += w(i) * (A.row(i) - R.row(i)).squaredNorm();
    }
    return total;
}

}  // namespace testutil
