#include "groupreduce/io.hpp"

#include "groupreduce/compressor.hpp"
#include "groupreduce/metrics.hpp"
#include "helpers.hpp"

#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>

using namespace groupreduce;
using testutil::random_matrix;

namespace {

struct TempDir {
    std::filesystem::path path;

    TempDir() {
        static std::mt19937_64 rng(std::random_device{}());
        path = std::filesystem::temp_directory_path() /
               ("groupreduce-io-" + std::to_string(rng()));
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

std::vector<unsigned char> slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void spit(const std::string& path, const std::vector<unsigned char>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    REQUIRE(out.good());
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
}

template <typename Fn>
io_errc code_of(Fn&& fn) {
    try {
        fn();
    } catch (const io_error& e) {
        return e.code();
    }
    FAIL("expected an io_error");
    return io_errc::bad_magic;
}

BlockLowRankModel two_cluster_model(std::uint64_t seed) {
    const auto inst = gen_zipf_embedding(17, 6, 2, 0.1, seed);
    const RefineConfig cfg = RefineConfig::defaults_for(17);
    return group_reduce(inst.matrix, inst.frequencies, 2, Budget::base_rank(1), cfg);
}

}  // namespace

TEST_CASE("a one-entry matrix survives both storage widths") {
    TempDir dir;
    Matrix A(1, 1);
    A << 2.5;
    for (MatrixDType dtype : {MatrixDType::f32, MatrixDType::f64}) {
        const std::string path = dir.file("one.grmx");
        write_matrix(path, A, dtype);
        MatrixDType read_dtype;
        const Matrix B = read_matrix(path, &read_dtype);
        CHECK(read_dtype == dtype);
        CHECK(B == A);  // 2.5 is exact in both widths
    }
}

TEST_CASE("write-read-write produces byte-identical matrix files") {
    TempDir dir;
    const Matrix A = random_matrix(100, 20, 1200);
    const std::string first = dir.file("a.grmx");
    const std::string second = dir.file("b.grmx");

    write_matrix(first, A, MatrixDType::f32);
    write_matrix(second, read_matrix(first), MatrixDType::f32);
    CHECK(slurp(first) == slurp(second));

    write_matrix(first, A, MatrixDType::f64);
    const Matrix B = read_matrix(first);
    CHECK(B == A);  // the wide format is lossless
    write_matrix(second, B, MatrixDType::f64);
    CHECK(slurp(first) == slurp(second));
}

TEST_CASE("the narrow storage width rounds entries to single precision") {
    TempDir dir;
    const Matrix A = random_matrix(5, 3, 1210);
    write_matrix(dir.file("n.grmx"), A, MatrixDType::f32);
    const Matrix B = read_matrix(dir.file("n.grmx"));
    for (Index i = 0; i < 5; ++i) {
        for (Index j = 0; j < 3; ++j) {
            CHECK(B(i, j) == static_cast<double>(static_cast<float>(A(i, j))));
        }
    }
}

TEST_CASE("corrupted matrix headers report their specific failure") {
    TempDir dir;
    const std::string path = dir.file("m.grmx");
    write_matrix(path, random_matrix(4, 3, 1220), MatrixDType::f32);
    const std::vector<unsigned char> good = slurp(path);

    auto corrupt = [&](std::size_t offset, unsigned char value) {
        std::vector<unsigned char> bad = good;
        bad[offset] = value;
        spit(path, bad);
    };

    corrupt(0, 'X');  // magic
    CHECK(code_of([&] { read_matrix(path); }) == io_errc::bad_magic);

    corrupt(4, 9);  // version
    CHECK(code_of([&] { read_matrix(path); }) == io_errc::bad_version);

    corrupt(8, 7);  // dtype
    CHECK(code_of([&] { read_matrix(path); }) == io_errc::bad_dtype);

    std::vector<unsigned char> shortened = good;
    shortened.resize(good.size() - 5);
    spit(path, shortened);
    CHECK(code_of([&] { read_matrix(path); }) == io_errc::truncated);

    std::vector<unsigned char> padded = good;
    padded.push_back(0);
    spit(path, padded);
    CHECK(code_of([&] { read_matrix(path); }) == io_errc::trailing_data);

    // NaN payload: quiet-NaN bit pattern over the first f32 entry.
    std::vector<unsigned char> nan_payload = good;
    nan_payload[25] = 0x00;
    nan_payload[26] = 0x00;
    nan_payload[27] = 0xC0;
    nan_payload[28] = 0x7F;
    spit(path, nan_payload);
    CHECK(code_of([&] { read_matrix(path); }) == io_errc::invalid_content);
}

TEST_CASE("missing files and unwritable targets surface as io failures") {
    TempDir dir;
    CHECK(code_of([&] { read_matrix(dir.file("absent.grmx")); }) == io_errc::io_failure);
    const Matrix A = random_matrix(2, 2, 1230);
    CHECK(code_of([&] {
              write_matrix(dir.file("no/such/dir/m.grmx"), A);
          }) == io_errc::io_failure);
}

TEST_CASE("frequency files round trip and enforce the expected row count") {
    TempDir dir;
    FrequencyTable freq;
    freq.counts = {120.0, 35.0, 1.0, 999.0};
    const std::string path = dir.file("f.tsv");
    write_frequencies(path, freq);
    const FrequencyTable back = read_frequencies(path, 4);
    CHECK(back.counts == freq.counts);
    CHECK(read_frequencies(path).counts == freq.counts);

    const auto mismatch = [&] { read_frequencies(path, 5); };
    CHECK(code_of(mismatch) == io_errc::line_count_mismatch);
    try {
        mismatch();
    } catch (const io_error& e) {
        const std::string what = e.what();
        CHECK(what.find('5') != std::string::npos);  // expected count
        CHECK(what.find('4') != std::string::npos);  // actual count
    }
}

TEST_CASE("a zero count is floored to one on load") {
    TempDir dir;
    const std::string path = dir.file("z.tsv");
    write_text_atomic(path, "the\t100\nof\t0\nand\t7\n");
    const FrequencyTable t = read_frequencies(path, 3);
    CHECK(t.counts == std::vector<double>{100.0, 1.0, 7.0});
}

TEST_CASE("malformed frequency lines report the line number") {
    TempDir dir;
    const std::string path = dir.file("bad.tsv");

    write_text_atomic(path, "a\t1\nb no-tab\nc\t3\n");
    CHECK(code_of([&] { read_frequencies(path); }) == io_errc::parse_error);
    try {
        read_frequencies(path);
    } catch (const io_error& e) {
        CHECK(std::string(e.what()).find(":2") != std::string::npos);
    }

    write_text_atomic(path, "a\t1\nb\t2x\n");
    CHECK(code_of([&] { read_frequencies(path); }) == io_errc::parse_error);

    write_text_atomic(path, "a\t-3\n");
    CHECK(code_of([&] { read_frequencies(path); }) == io_errc::parse_error);

    write_text_atomic(path, "");
    CHECK(code_of([&] { read_frequencies(path); }) == io_errc::parse_error);
}

TEST_CASE("a plain model round trips field-for-field and byte-for-byte") {
    TempDir dir;
    const BlockLowRankModel model = two_cluster_model(1300);
    const std::string first = dir.file("m.grlr");
    const std::string second = dir.file("m2.grlr");
    save_model(first, model);

    const AnyModel any = load_model(first);
    REQUIRE(std::holds_alternative<BlockLowRankModel>(any));
    const BlockLowRankModel& back = std::get<BlockLowRankModel>(any);
    CHECK(back.rows == model.rows);
    CHECK(back.cols == model.cols);
    CHECK(back.partition.assignment == model.partition.assignment);
    CHECK(back.partition.members == model.partition.members);
    CHECK(back.partition.ranks == model.partition.ranks);
    for (std::size_t p = 0; p < model.factors.size(); ++p) {
        for (Index i = 0; i < model.factors[p].U.rows(); ++i) {
            for (Index j = 0; j < model.factors[p].U.cols(); ++j) {
                CHECK(back.factors[p].U(i, j) ==
                      static_cast<double>(static_cast<float>(model.factors[p].U(i, j))));
            }
        }
    }

    save_model(second, back);
    CHECK(slurp(first) == slurp(second));
}

TEST_CASE("a quantized model round trips its codes exactly") {
    TempDir dir;
    const QuantizedBlockModel q = quantize_model(two_cluster_model(1301), 5);
    const std::string first = dir.file("q.grlr");
    const std::string second = dir.file("q2.grlr");
    save_model(first, q);

    const AnyModel any = load_model(first);
    REQUIRE(std::holds_alternative<QuantizedBlockModel>(any));
    const QuantizedBlockModel& back = std::get<QuantizedBlockModel>(any);
    CHECK(back.bits == 5);
    CHECK(back.partition.members == q.partition.members);
    for (std::size_t p = 0; p < q.factors_u.size(); ++p) {
        CHECK(back.factors_u[p].codes == q.factors_u[p].codes);
        CHECK(back.factors_u[p].range_min == q.factors_u[p].range_min);
        CHECK(back.factors_u[p].range_max == q.factors_u[p].range_max);
        CHECK(back.factors_v[p].codes == q.factors_v[p].codes);
    }

    save_model(second, back);
    CHECK(slurp(first) == slurp(second));
}

TEST_CASE("model files validate their partition on load") {
    TempDir dir;
    const BlockLowRankModel model = two_cluster_model(1302);
    const std::string path = dir.file("m.grlr");
    save_model(path, model);
    const std::vector<unsigned char> good = slurp(path);

    // Header is 29 bytes; cluster 0 starts with an 8-byte member count and
    // then 8-byte member indices.
    REQUIRE(model.partition.members[0].size() >= 2);
    const std::size_t first_member = 29 + 8;

    std::vector<unsigned char> dup = good;
    // Duplicate: member[1] = member[0] (both little-endian u64).
    std::memcpy(dup.data() + first_member + 8, good.data() + first_member, 8);
    spit(path, dup);
    CHECK(code_of([&] { load_model(path); }) == io_errc::invalid_content);

    std::vector<unsigned char> bad_rank = good;
    const std::size_t cluster0 = model.partition.members[0].size();
    const std::size_t rank_offset = first_member + 8 * cluster0;
    std::memset(bad_rank.data() + rank_offset, 0, 4);  // rank = 0
    spit(path, bad_rank);
    CHECK(code_of([&] { load_model(path); }) == io_errc::invalid_content);

    std::vector<unsigned char> bad_magic = good;
    bad_magic[0] = 'Z';
    spit(path, bad_magic);
    CHECK(code_of([&] { load_model(path); }) == io_errc::bad_magic);

    std::vector<unsigned char> bad_flags = good;
    bad_flags[8] = 0x80;
    spit(path, bad_flags);
    CHECK(code_of([&] { load_model(path); }) == io_errc::invalid_content);

    std::vector<unsigned char> shortened = good;
    shortened.resize(good.size() / 2);
    spit(path, shortened);
    CHECK(code_of([&] { load_model(path); }) == io_errc::truncated);

    std::vector<unsigned char> padded = good;
    padded.push_back(1);
    spit(path, padded);
    CHECK(code_of([&] { load_model(path); }) == io_errc::trailing_data);
}

TEST_CASE("nonzero padding bits in packed codes are rejected") {
    TempDir dir;
    // 3-bit codes over a rank-1 V of 6 rows: 18 bits = 3 bytes with 6 padding
    // bits in the final byte of the file.
    const QuantizedBlockModel q = quantize_model(two_cluster_model(1303), 3);
    const std::string path = dir.file("q.grlr");
    save_model(path, q);
    std::vector<unsigned char> bytes = slurp(path);
    bytes.back() |= 0x80;  // set a padding bit in the last packed byte
    spit(path, bytes);
    CHECK(code_of([&] { load_model(path); }) == io_errc::invalid_content);
}

TEST_CASE("many random models survive the round trip byte-identically") {
    TempDir dir;
    std::mt19937_64 rng(1400);
    for (int trial = 0; trial < 20; ++trial) {
        const Index n = 8 + static_cast<Index>(rng() % 40);
        const int c = 1 + static_cast<int>(rng() % 3);
        const auto inst = gen_zipf_embedding(n, 8, 2, 0.1, 1401 + trial);
        const RefineConfig cfg = RefineConfig::defaults_for(n);
        const BlockLowRankModel model =
            group_reduce(inst.matrix, inst.frequencies, c, Budget::base_rank(1), cfg);

        const std::string first = dir.file("r.grlr");
        const std::string second = dir.file("r2.grlr");
        if (trial % 2 == 0) {
            save_model(first, model);
            save_model(second, std::get<BlockLowRankModel>(load_model(first)));
        } else {
            const int bits = 1 + static_cast<int>(rng() % 16);
            save_model(first, quantize_model(model, bits));
            save_model(second, std::get<QuantizedBlockModel>(load_model(first)));
        }
        CHECK(slurp(first) == slurp(second));
    }
}
