#pragma once

#include "groupreduce/types.hpp"

namespace groupreduce {

/// Top-k singular triplets of a dense matrix, computed by a full
/// bidiagonalization-based decomposition and then truncated.
///
/// Deterministic sign convention: each column of V is flipped so that its
/// entry of largest magnitude is positive (ties broken by lowest index);
/// the matching column of U is flipped with it.
///
/// Throws std::invalid_argument if k is out of [1, min(rows, cols)] or the
/// input has non-finite entries.
SvdResult svd_truncated(const Matrix& A, Index k);

/// Frobenius norm of A - B. Throws std::invalid_argument on shape mismatch.
double frobenius_error(const Matrix& A, const Matrix& B);

/// Distance from a to its projection onto the column span of the orthonormal
/// basis V: ||a - V V^T a||_2. Throws std::invalid_argument on dimension
/// mismatch. V's columns are assumed orthonormal.
double project_residual(const Vector& a, const Matrix& V);

}  // namespace groupreduce
