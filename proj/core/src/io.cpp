#include "groupreduce/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <charconv>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>

namespace groupreduce {

const char* io_errc_name(io_errc code) {
    switch (code) {
        case io_errc::bad_magic: return "bad-magic";
        case io_errc::bad_version: return "bad-version";
        case io_errc::bad_dtype: return "bad-dtype";
        case io_errc::truncated: return "truncated";
        case io_errc::trailing_data: return "trailing-data";
        case io_errc::parse_error: return "parse-error";
        case io_errc::line_count_mismatch: return "line-count-mismatch";
        case io_errc::invalid_content: return "invalid-content";
        case io_errc::io_failure: return "io-failure";
    }
    return "unknown";
}

namespace {

constexpr char kMatrixMagic[4] = {'G', 'R', 'M', 'X'};
constexpr char kModelMagic[4] = {'G', 'R', 'L', 'R'};
constexpr std::uint32_t kFormatVersion = 1;
constexpr std::uint8_t kFlagQuantized = 0x01;

std::vector<unsigned char> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw io_error(io_errc::io_failure, path + ": cannot open for reading");
    }
    std::vector<unsigned char> buf((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
    if (in.bad()) {
        throw io_error(io_errc::io_failure, path + ": read failed");
    }
    return buf;
}

void write_file_atomic(const std::string& path, const unsigned char* data, std::size_t size) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw io_error(io_errc::io_failure, tmp + ": cannot open for writing");
        }
        out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(size));
        if (!out) {
            throw io_error(io_errc::io_failure, tmp + ": write failed");
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        throw io_error(io_errc::io_failure, path + ": rename failed: " + ec.message());
    }
}

struct Reader {
    const std::vector<unsigned char>& buf;
    const std::string& path;
    std::size_t off = 0;

    void need(std::size_t count, const char* what) {
        if (off + count > buf.size()) {
            throw io_error(io_errc::truncated,
                           path + ": truncated while reading " + std::string(what));
        }
    }
    void bytes(void* dst, std::size_t count, const char* what) {
        need(count, what);
        std::memcpy(dst, buf.data() + off, count);
        off += count;
    }
    std::uint8_t u8(const char* what) {
        need(1, what);
        return buf[off++];
    }
    std::uint32_t u32(const char* what) {
        need(4, what);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) {
            v |= static_cast<std::uint32_t>(buf[off + static_cast<std::size_t>(i)]) << (8 * i);
        }
        off += 4;
        return v;
    }
    std::uint64_t u64(const char* what) {
        need(8, what);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) {
            v |= static_cast<std::uint64_t>(buf[off + static_cast<std::size_t>(i)]) << (8 * i);
        }
        off += 8;
        return v;
    }
    float f32(const char* what) { return std::bit_cast<float>(u32(what)); }
    double f64(const char* what) { return std::bit_cast<double>(u64(what)); }
    void finish() {
        if (off != buf.size()) {
            throw io_error(io_errc::trailing_data,
                           path + ": " + std::to_string(buf.size() - off) +
                               " trailing bytes after payload");
        }
    }
};

struct Writer {
    std::vector<unsigned char> buf;

    void bytes(const void* src, std::size_t count) {
        const auto* p = static_cast<const unsigned char*>(src);
        buf.insert(buf.end(), p, p + count);
    }
    void u8(std::uint8_t v) { buf.push_back(v); }
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) {
            buf.push_back(static_cast<unsigned char>(v >> (8 * i)));
        }
    }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) {
            buf.push_back(static_cast<unsigned char>(v >> (8 * i)));
        }
    }
    void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
};

Index checked_dim(std::uint64_t v, const std::string& path, const char* what) {
    if (v < 1 || v > (1ull << 40)) {
        throw io_error(io_errc::invalid_content,
                       path + ": " + std::string(what) + " " + std::to_string(v) + " out of range");
    }
    return static_cast<Index>(v);
}

}  // namespace

Matrix read_matrix(const std::string& path, MatrixDType* dtype_out) {
    const auto buf = read_file(path);
    Reader r{buf, path};

    char magic[4];
    r.bytes(magic, 4, "magic");
    if (std::memcmp(magic, kMatrixMagic, 4) != 0) {
        throw io_error(io_errc::bad_magic, path + ": not a matrix file (bad magic)");
    }
    const std::uint32_t version = r.u32("version");
    if (version != kFormatVersion) {
        throw io_error(io_errc::bad_version,
                       path + ": unsupported matrix file version " + std::to_string(version));
    }
    const std::uint8_t dtype = r.u8("dtype");
    if (dtype > 1) {
        throw io_error(io_errc::bad_dtype,
                       path + ": unknown dtype " + std::to_string(int(dtype)));
    }
    const Index rows = checked_dim(r.u64("rows"), path, "rows");
    const Index cols = checked_dim(r.u64("cols"), path, "cols");
    if (rows > std::numeric_limits<Index>::max() / cols) {
        throw io_error(io_errc::invalid_content, path + ": dimensions overflow");
    }

    Matrix out(rows, cols);
    const std::size_t width = dtype == 0 ? 4 : 8;
    r.need(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols) * width, "payload");
    for (Index i = 0; i < rows; ++i) {
        for (Index j = 0; j < cols; ++j) {
            out(i, j) = dtype == 0 ? static_cast<double>(r.f32("payload")) : r.f64("payload");
        }
    }
    r.finish();

    if (!out.allFinite()) {
        throw io_error(io_errc::invalid_content, path + ": non-finite matrix entries");
    }
    if (dtype_out) {
        *dtype_out = static_cast<MatrixDType>(dtype);
    }
    return out;
}

void write_matrix(const std::string& path, const Matrix& A, MatrixDType dtype) {
    if (A.rows() < 1 || A.cols() < 1) {
        throw std::invalid_argument("write_matrix: empty matrix");
    }
    Writer w;
    w.bytes(kMatrixMagic, 4);
    w.u32(kFormatVersion);
    w.u8(static_cast<std::uint8_t>(dtype));
    w.u64(static_cast<std::uint64_t>(A.rows()));
    w.u64(static_cast<std::uint64_t>(A.cols()));
    for (Index i = 0; i < A.rows(); ++i) {
        for (Index j = 0; j < A.cols(); ++j) {
            if (dtype == MatrixDType::f32) {
                w.f32(static_cast<float>(A(i, j)));
            } else {
                w.f64(A(i, j));
            }
        }
    }
    write_file_atomic(path, w.buf.data(), w.buf.size());
}

namespace {

std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw io_error(io_errc::io_failure, path + ": cannot open for reading");
    }
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        lines.push_back(line);
    }
    if (in.bad()) {
        throw io_error(io_errc::io_failure, path + ": read failed");
    }
    return lines;
}

FrequencyTable parse_frequencies(const std::vector<std::string>& lines, const std::string& path) {
    FrequencyTable table;
    table.counts.reserve(lines.size());
    for (std::size_t n = 0; n < lines.size(); ++n) {
        const std::string& line = lines[n];
        const auto tab = line.find('\t');
        if (tab == std::string::npos) {
            throw io_error(io_errc::parse_error,
                           path + ":" + std::to_string(n + 1) + ": missing tab separator");
        }
        const char* first = line.data() + tab + 1;
        const char* last = line.data() + line.size();
        std::uint64_t count = 0;
        const auto [ptr, ec] = std::from_chars(first, last, count);
        if (ec != std::errc() || ptr != last) {
            throw io_error(io_errc::parse_error, path + ":" + std::to_string(n + 1) +
                                                     ": cannot parse count '" +
                                                     std::string(first, last) + "'");
        }
        table.counts.push_back(std::max<double>(1.0, static_cast<double>(count)));
    }
    if (table.counts.empty()) {
        throw io_error(io_errc::parse_error, path + ": no frequency lines");
    }
    return table;
}

}  // namespace

FrequencyTable read_frequencies(const std::string& path, Index expected_rows) {
    const auto lines = read_lines(path);
    if (static_cast<Index>(lines.size()) != expected_rows) {
        throw io_error(io_errc::line_count_mismatch,
                       path + ": expected " + std::to_string(expected_rows) +
                           " frequency lines, found " + std::to_string(lines.size()));
    }
    return parse_frequencies(lines, path);
}

FrequencyTable read_frequencies(const std::string& path) {
    return parse_frequencies(read_lines(path), path);
}

void write_frequencies(const std::string& path, const FrequencyTable& freq) {
    std::string text;
    for (std::size_t i = 0; i < freq.counts.size(); ++i) {
        text += "w" + std::to_string(i) + "\t" +
                std::to_string(static_cast<long long>(std::llround(freq.counts[i]))) + "\n";
    }
    write_text_atomic(path, text);
}

void write_text_atomic(const std::string& path, const std::string& contents) {
    write_file_atomic(path, reinterpret_cast<const unsigned char*>(contents.data()),
                      contents.size());
}

namespace {

void pack_codes(Writer& w, const std::vector<std::uint16_t>& codes, int bits) {
    const std::size_t total_bits = codes.size() * static_cast<std::size_t>(bits);
    const std::size_t start = w.buf.size();
    w.buf.resize(start + (total_bits + 7) / 8, 0);
    std::size_t bitpos = 0;
    for (std::uint16_t code : codes) {
        for (int b = 0; b < bits; ++b) {
            if ((code >> b) & 1) {
                w.buf[start + (bitpos >> 3)] |= static_cast<unsigned char>(1u << (bitpos & 7));
            }
            ++bitpos;
        }
    }
}

std::vector<std::uint16_t> unpack_codes(Reader& r, std::size_t count, int bits) {
    const std::size_t total_bits = count * static_cast<std::size_t>(bits);
    const std::size_t nbytes = (total_bits + 7) / 8;
    r.need(nbytes, "packed codes");
    const unsigned char* base = r.buf.data() + r.off;

    std::vector<std::uint16_t> codes(count, 0);
    std::size_t bitpos = 0;
    for (std::size_t i = 0; i < count; ++i) {
        std::uint16_t v = 0;
        for (int b = 0; b < bits; ++b) {
            v |= static_cast<std::uint16_t>(((base[bitpos >> 3] >> (bitpos & 7)) & 1) << b);
            ++bitpos;
        }
        codes[i] = v;
    }
    // Padding bits up to the byte boundary must be zero.
    for (; bitpos < nbytes * 8; ++bitpos) {
        if ((base[bitpos >> 3] >> (bitpos & 7)) & 1) {
            throw io_error(io_errc::invalid_content, r.path + ": nonzero padding bits");
        }
    }
    r.off += nbytes;
    return codes;
}

void write_model_header(Writer& w, std::uint8_t flags, Index rows, Index cols, int clusters) {
    w.bytes(kModelMagic, 4);
    w.u32(kFormatVersion);
    w.u8(flags);
    w.u64(static_cast<std::uint64_t>(rows));
    w.u64(static_cast<std::uint64_t>(cols));
    w.u32(static_cast<std::uint32_t>(clusters));
}

void write_cluster_prefix(Writer& w, const std::vector<int>& members, int rank) {
    w.u64(members.size());
    for (int token : members) {
        w.u64(static_cast<std::uint64_t>(token));
    }
    w.u32(static_cast<std::uint32_t>(rank));
}

void write_plain_factor(Writer& w, const Matrix& M) {
    for (Index i = 0; i < M.rows(); ++i) {
        for (Index j = 0; j < M.cols(); ++j) {
            w.f32(static_cast<float>(M(i, j)));
        }
    }
}

void write_quantized_factor(Writer& w, const QuantizedMatrix& q) {
    w.u8(static_cast<std::uint8_t>(q.bits));
    w.f64(q.range_min);
    w.f64(q.range_max);
    pack_codes(w, q.codes, q.bits);
}

Matrix read_plain_factor(Reader& r, Index rows, Index cols) {
    Matrix out(rows, cols);
    r.need(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols) * 4, "factor payload");
    for (Index i = 0; i < rows; ++i) {
        for (Index j = 0; j < cols; ++j) {
            out(i, j) = static_cast<double>(r.f32("factor payload"));
        }
    }
    if (!out.allFinite()) {
        throw io_error(io_errc::invalid_content, r.path + ": non-finite factor entries");
    }
    return out;
}

QuantizedMatrix read_quantized_factor(Reader& r, Index rows, Index cols) {
    QuantizedMatrix q;
    q.rows = rows;
    q.cols = cols;
    q.bits = r.u8("bits");
    if (q.bits < 1 || q.bits > 16) {
        throw io_error(io_errc::invalid_content,
                       r.path + ": quantization bits " + std::to_string(q.bits) + " out of range");
    }
    q.range_min = r.f64("range_min");
    q.range_max = r.f64("range_max");
    if (!std::isfinite(q.range_min) || !std::isfinite(q.range_max) || q.range_min > q.range_max) {
        throw io_error(io_errc::invalid_content, r.path + ": invalid quantization range");
    }
    q.codes = unpack_codes(r, static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols),
                           q.bits);
    return q;
}

// Reads one cluster's member list and rank, recording the assignment.
// Returns the rank; members land in part.members[p], rank in part.ranks.
int read_cluster_prefix(Reader& r, BlockPartition& part, std::uint32_t p, Index rows, Index cols) {
    const std::uint64_t count = r.u64("member count");
    if (count < 1 || count > static_cast<std::uint64_t>(rows)) {
        throw io_error(io_errc::invalid_content,
                       r.path + ": cluster " + std::to_string(p) + " member count " +
                           std::to_string(count) + " out of range");
    }
    auto& cluster = part.members[p];
    cluster.resize(static_cast<std::size_t>(count));
    long long prev = -1;
    for (std::uint64_t m = 0; m < count; ++m) {
        const std::uint64_t token = r.u64("member index");
        if (token >= static_cast<std::uint64_t>(rows) || static_cast<long long>(token) <= prev) {
            throw io_error(io_errc::invalid_content,
                           r.path + ": cluster " + std::to_string(p) +
                               " member indices not strictly ascending in range");
        }
        prev = static_cast<long long>(token);
        cluster[static_cast<std::size_t>(m)] = static_cast<int>(token);
        if (part.assignment[static_cast<std::size_t>(token)] != -1) {
            throw io_error(io_errc::invalid_content, r.path + ": token " + std::to_string(token) +
                                                         " appears in more than one cluster");
        }
        part.assignment[static_cast<std::size_t>(token)] = static_cast<int>(p);
    }
    const std::uint32_t rank = r.u32("rank");
    if (rank < 1 ||
        rank > static_cast<std::uint32_t>(std::min<Index>(static_cast<Index>(count), cols))) {
        throw io_error(io_errc::invalid_content, r.path + ": cluster " + std::to_string(p) +
                                                     " rank " + std::to_string(rank) +
                                                     " out of range");
    }
    part.ranks.push_back(static_cast<int>(rank));
    return static_cast<int>(rank);
}

void validate_loaded_partition(const BlockPartition& part, Index rows, Index cols,
                               const std::string& path) {
    try {
        validate_partition(part, rows, cols, /*require_ranks=*/true);
    } catch (const std::invalid_argument& e) {
        throw io_error(io_errc::invalid_content, path + ": " + e.what());
    }
}

}  // namespace

void save_model(const std::string& path, const BlockLowRankModel& model) {
    validate_partition(model.partition, model.rows, model.cols, /*require_ranks=*/true);
    if (model.factors.size() != model.partition.members.size()) {
        throw std::invalid_argument("save_model: factor count does not match cluster count");
    }
    Writer w;
    write_model_header(w, 0, model.rows, model.cols, model.partition.cluster_count());
    for (std::size_t p = 0; p < model.factors.size(); ++p) {
        const auto& cluster = model.partition.members[p];
        const FactorPair& f = model.factors[p];
        const int rank = model.partition.ranks[p];
        if (f.U.rows() != static_cast<Index>(cluster.size()) || f.U.cols() != rank ||
            f.V.rows() != model.cols || f.V.cols() != rank) {
            throw std::invalid_argument("save_model: factor shapes inconsistent with partition");
        }
        write_cluster_prefix(w, cluster, rank);
        write_plain_factor(w, f.U);
        write_plain_factor(w, f.V);
    }
    write_file_atomic(path, w.buf.data(), w.buf.size());
}

void save_model(const std::string& path, const QuantizedBlockModel& model) {
    validate_partition(model.partition, model.rows, model.cols, /*require_ranks=*/true);
    if (model.factors_u.size() != model.partition.members.size() ||
        model.factors_v.size() != model.partition.members.size()) {
        throw std::invalid_argument("save_model: factor count does not match cluster count");
    }
    Writer w;
    write_model_header(w, kFlagQuantized, model.rows, model.cols,
                       model.partition.cluster_count());
    for (std::size_t p = 0; p < model.factors_u.size(); ++p) {
        const auto& cluster = model.partition.members[p];
        const int rank = model.partition.ranks[p];
        const QuantizedMatrix& qu = model.factors_u[p];
        const QuantizedMatrix& qv = model.factors_v[p];
        if (qu.rows != static_cast<Index>(cluster.size()) || qu.cols != rank ||
            qv.rows != model.cols || qv.cols != rank || qu.bits != model.bits ||
            qv.bits != model.bits) {
            throw std::invalid_argument("save_model: quantized factor shapes inconsistent");
        }
        write_cluster_prefix(w, cluster, rank);
        write_quantized_factor(w, qu);
        write_quantized_factor(w, qv);
    }
    write_file_atomic(path, w.buf.data(), w.buf.size());
}

AnyModel load_model(const std::string& path) {
    const auto buf = read_file(path);
    Reader r{buf, path};

    char magic[4];
    r.bytes(magic, 4, "magic");
    if (std::memcmp(magic, kModelMagic, 4) != 0) {
        throw io_error(io_errc::bad_magic, path + ": not a model file (bad magic)");
    }
    const std::uint32_t version = r.u32("version");
    if (version != kFormatVersion) {
        throw io_error(io_errc::bad_version,
                       path + ": unsupported model file version " + std::to_string(version));
    }
    const std::uint8_t flags = r.u8("flags");
    if (flags & ~kFlagQuantized) {
        throw io_error(io_errc::invalid_content,
                       path + ": unknown flags 0x" + std::to_string(int(flags)));
    }
    const Index rows = checked_dim(r.u64("rows"), path, "rows");
    const Index cols = checked_dim(r.u64("cols"), path, "cols");
    const std::uint32_t clusters = r.u32("cluster count");
    if (clusters < 1 || clusters > static_cast<std::uint64_t>(rows)) {
        throw io_error(io_errc::invalid_content,
                       path + ": cluster count " + std::to_string(clusters) + " out of range");
    }

    BlockPartition part;
    part.members.resize(clusters);
    part.assignment.assign(static_cast<std::size_t>(rows), -1);

    if ((flags & kFlagQuantized) == 0) {
        BlockLowRankModel model;
        model.rows = rows;
        model.cols = cols;
        for (std::uint32_t p = 0; p < clusters; ++p) {
            const int rank = read_cluster_prefix(r, part, p, rows, cols);
            FactorPair f;
            f.U = read_plain_factor(r, static_cast<Index>(part.members[p].size()), rank);
            f.V = read_plain_factor(r, cols, rank);
            model.factors.push_back(std::move(f));
        }
        r.finish();
        validate_loaded_partition(part, rows, cols, path);
        model.partition = std::move(part);
        return model;
    }

    QuantizedBlockModel model;
    model.rows = rows;
    model.cols = cols;
    int shared_bits = 0;
    for (std::uint32_t p = 0; p < clusters; ++p) {
        const int rank = read_cluster_prefix(r, part, p, rows, cols);
        model.factors_u.push_back(
            read_quantized_factor(r, static_cast<Index>(part.members[p].size()), rank));
        model.factors_v.push_back(read_quantized_factor(r, cols, rank));
        const int bits = model.factors_u.back().bits;
        if (model.factors_v.back().bits != bits || (shared_bits != 0 && bits != shared_bits)) {
            throw io_error(io_errc::invalid_content,
                           path + ": inconsistent quantization bit widths");
        }
        shared_bits = bits;
    }
    r.finish();
    validate_loaded_partition(part, rows, cols, path);
    model.partition = std::move(part);
    model.bits = shared_bits;
    return model;
}

}  // namespace groupreduce
