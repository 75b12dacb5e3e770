#pragma once

#include "groupreduce/baselines.hpp"
#include "groupreduce/types.hpp"

#include <string>
#include <variant>

namespace groupreduce {

/// On-disk element type of a matrix file. Values are widened to 64-bit
/// internally regardless of the stored width.
enum class MatrixDType : std::uint8_t {
    f32 = 0,
    f64 = 1,
};

/// Binary dense-matrix format:
///   magic "GRMX" | version u32=1 | dtype u8 | rows u64 | cols u64 |
///   payload row-major little-endian.
/// Throws io_error with a distinct code per failure (bad magic, bad version,
/// bad dtype, truncation, trailing bytes, non-finite or empty content).
Matrix read_matrix(const std::string& path, MatrixDType* dtype_out = nullptr);

/// Writes atomically (temp file then rename). dtype f32 narrows each entry.
void write_matrix(const std::string& path, const Matrix& A, MatrixDType dtype = MatrixDType::f32);

/// Text frequency format: one "token<TAB>count" line per matrix row, counts
/// as nonnegative integers. Zero counts are floored to 1 on load. Parse
/// failures report the offending line number; a line-count mismatch names the
/// expected and actual counts.
FrequencyTable read_frequencies(const std::string& path, Index expected_rows);

/// Same, without a row-count expectation (any positive number of lines).
FrequencyTable read_frequencies(const std::string& path);

/// Writes "w<i><TAB><count>" lines, counts rounded to nearest integer.
void write_frequencies(const std::string& path, const FrequencyTable& freq);

using AnyModel = std::variant<BlockLowRankModel, QuantizedBlockModel>;

/// Binary compressed-model format:
///   magic "GRLR" | version u32=1 | flags u8 (bit0 = quantized) |
///   N u64 | D u64 | c u32 | per cluster:
///     member count u64 | member indices u64[] (strictly ascending) |
///     rank u32 | U payload | V payload.
/// Plain payloads are row-major 32-bit floats; quantized payloads are
/// bits u8 | range_min f64 | range_max f64 | bit-packed codes (LSB-first,
/// zero-padded to a byte boundary).
/// All partition and shape invariants are validated before a model is
/// returned; violations raise io_error(invalid_content).
AnyModel load_model(const std::string& path);

void save_model(const std::string& path, const BlockLowRankModel& model);
void save_model(const std::string& path, const QuantizedBlockModel& model);

/// Atomic text write used for CSV emission (temp file then rename).
void write_text_atomic(const std::string& path, const std::string& contents);

}  // namespace groupreduce
