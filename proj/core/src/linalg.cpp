#include "groupreduce/linalg.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <string>

namespace groupreduce {

SvdResult svd_truncated(const Matrix& A, Index k) {
    const Index max_rank = std::min(A.rows(), A.cols());
    if (k < 1 || k > max_rank) {
        throw std::invalid_argument("svd_truncated: rank " + std::to_string(k) +
                                    " out of range [1, " + std::to_string(max_rank) + "]");
    }
    if (!A.allFinite()) {
        throw std::invalid_argument("svd_truncated: input has non-finite entries");
    }

    Eigen::BDCSVD<Matrix> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);

    SvdResult out;
    out.U = svd.matrixU().leftCols(k);
    out.S = svd.singularValues().head(k);
    out.V = svd.matrixV().leftCols(k);

    // Fix signs: largest-magnitude entry of each V column made positive.
    for (Index j = 0; j < k; ++j) {
        Index best = 0;
        double best_mag = std::abs(out.V(0, j));
        for (Index i = 1; i < out.V.rows(); ++i) {
            const double mag = std::abs(out.V(i, j));
            if (mag > best_mag) {
                best_mag = mag;
                best = i;
            }
        }
        if (out.V(best, j) < 0.0) {
            out.V.col(j) = -out.V.col(j);
            out.U.col(j) = -out.U.col(j);
        }
    }
    return out;
}

double frobenius_error(const Matrix& A, const Matrix& B) {
    if (A.rows() != B.rows() || A.cols() != B.cols()) {
        throw std::invalid_argument("frobenius_error: shape mismatch (" +
                                    std::to_string(A.rows()) + "x" + std::to_string(A.cols()) +
                                    " vs " + std::to_string(B.rows()) + "x" +
                                    std::to_string(B.cols()) + ")");
    }
    return (A - B).norm();
}

double project_residual(const Vector& a, const Matrix& V) {
    if (a.size() != V.rows()) {
        throw std::invalid_argument("project_residual: vector length " + std::to_string(a.size()) +
                                    " does not match basis rows " + std::to_string(V.rows()));
    }
    return (a - V * (V.transpose() * a)).norm();
}

}  // namespace groupreduce
