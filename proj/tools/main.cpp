// Command-line frontend for the block low-rank compression toolkit.
//
// Exit codes: 0 success; CLI11's own codes for flag/usage errors;
// 3 file-format errors; 4 precondition violations; 1 anything else.
// Every failure prints a single diagnostic line on stderr.

#include <CLI11.hpp>

#include "groupreduce/baselines.hpp"
#include "groupreduce/compressor.hpp"
#include "groupreduce/io.hpp"
#include "groupreduce/linalg.hpp"
#include "groupreduce/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

namespace {

using namespace groupreduce;

// Round-trippable decimal form; used everywhere a number is emitted.
std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string num(long long v) { return std::to_string(v); }

void print_memory(const MemoryReport& mem) {
    std::cout << "parameters " << num(mem.parameter_count) << "\n"
              << "bytes_32bit " << num(mem.bytes_at_32bit) << "\n"
              << "compression_rate " << num(mem.compression_rate) << "\n";
}

struct CompressArgs {
    std::string matrix_path;
    std::string freq_path;
    std::string out_path;
    int clusters = 0;  // 0 = pick by vocabulary size
    double budget_frac = 0.0;
    int base_rank = 0;
    int iters = -1;
    double move_frac = -1.0;
    int min_moves = -1;
};

RefineConfig make_refine_config(Index rows, int iters, double move_frac, int min_moves) {
    RefineConfig cfg = RefineConfig::defaults_for(rows);
    if (iters >= 0) {
        cfg.max_iterations = iters;
    }
    if (move_frac >= 0.0) {
        cfg.move_fraction = move_frac;
    }
    if (min_moves >= 0) {
        cfg.min_candidates = min_moves;
    }
    return cfg;
}

int run_compress(const CompressArgs& a) {
    const Matrix A = read_matrix(a.matrix_path);
    const FrequencyTable freq = read_frequencies(a.freq_path, A.rows());
    const int clusters = a.clusters > 0 ? a.clusters : default_cluster_count(A.rows());
    const Budget budget =
        a.base_rank > 0
            ? Budget::base_rank(a.base_rank)
            : Budget::parameter_count(
                  std::llround(a.budget_frac * static_cast<double>(A.rows() * A.cols())));
    const RefineConfig cfg = make_refine_config(A.rows(), a.iters, a.move_frac, a.min_moves);

    const BlockLowRankModel model = group_reduce(A, freq, clusters, budget, cfg);

    std::cout << "rows " << model.rows << "\n"
              << "cols " << model.cols << "\n"
              << "clusters " << model.partition.cluster_count() << "\n";
    print_memory(memory_footprint(model));
    std::cout << "weighted_error " << num(weighted_objective(A, freq, model)) << "\n";
    if (!a.out_path.empty()) {
        save_model(a.out_path, model);
    }
    return 0;
}

int run_quantize(const std::string& model_path, int bits, const std::string& out_path) {
    const AnyModel any = load_model(model_path);
    const auto* plain = std::get_if<BlockLowRankModel>(&any);
    if (!plain) {
        throw std::invalid_argument("quantize: " + model_path + " is already quantized");
    }
    const QuantizedBlockModel q = quantize_model(*plain, bits);
    print_memory(memory_footprint(q));
    save_model(out_path, q);
    return 0;
}

int run_evaluate(const std::string& matrix_path, const std::string& freq_path,
                 const std::string& model_path) {
    const Matrix A = read_matrix(matrix_path);
    const FrequencyTable freq = read_frequencies(freq_path, A.rows());
    const AnyModel any = load_model(model_path);

    const bool quantized = std::holds_alternative<QuantizedBlockModel>(any);
    const BlockLowRankModel model =
        quantized ? dequantize_model(std::get<QuantizedBlockModel>(any))
                  : std::get<BlockLowRankModel>(any);
    if (model.rows != A.rows() || model.cols != A.cols()) {
        throw std::invalid_argument("evaluate: model is " + std::to_string(model.rows) + "x" +
                                    std::to_string(model.cols) + " but matrix is " +
                                    std::to_string(A.rows()) + "x" + std::to_string(A.cols()));
    }

    std::cout << "weighted_error " << num(weighted_objective(A, freq, model)) << "\n"
              << "unweighted_error " << num(unweighted_objective(A, model)) << "\n";
    print_memory(quantized ? memory_footprint(std::get<QuantizedBlockModel>(any))
                           : memory_footprint(model));
    return 0;
}

int run_reconstruct(const std::string& model_path, long long row, const std::string& out_path) {
    const AnyModel any = load_model(model_path);
    const BlockLowRankModel model =
        std::holds_alternative<QuantizedBlockModel>(any)
            ? dequantize_model(std::get<QuantizedBlockModel>(any))
            : std::get<BlockLowRankModel>(any);

    if (row >= 0) {
        const Vector v = reconstruct_row(model, static_cast<int>(row));
        for (Index j = 0; j < v.size(); ++j) {
            std::cout << (j ? " " : "") << num(v[j]);
        }
        std::cout << "\n";
    } else {
        write_matrix(out_path, reconstruct_full(model), MatrixDType::f64);
    }
    return 0;
}

int run_ablate(const std::string& matrix_path, const std::string& freq_path, int clusters,
               double budget_frac, const std::string& out_path) {
    const Matrix A = read_matrix(matrix_path);
    const FrequencyTable freq = read_frequencies(freq_path, A.rows());
    const long long budget =
        std::llround(budget_frac * static_cast<double>(A.rows() * A.cols()));
    const RefineConfig cfg = RefineConfig::defaults_for(A.rows());

    const auto rows = ablation_run(A, freq, clusters, budget, cfg);

    std::string csv = "strategy,parameter_count,weighted_error,unweighted_error\n";
    for (const AblationRow& r : rows) {
        csv += std::string(strategy_label(r.strategy)) + "," + num(r.parameter_count) + "," +
               num(r.weighted_error) + "," + num(r.unweighted_error) + "\n";
    }
    write_text_atomic(out_path, csv);
    std::cout << csv;
    return 0;
}

int run_spectrum(const std::string& matrix_path, const std::string& out_path) {
    const Vector s = spectrum(read_matrix(matrix_path));
    std::string csv = "rank,singular_value\n";
    for (Index i = 0; i < s.size(); ++i) {
        csv += std::to_string(i + 1) + "," + num(s[i]) + "\n";
    }
    write_text_atomic(out_path, csv);
    return 0;
}

int run_curve(const std::string& matrix_path, const std::vector<long long>& ranks,
              const std::string& out_path) {
    const Matrix A = read_matrix(matrix_path);
    std::vector<Index> ks(ranks.begin(), ranks.end());
    std::string csv = "rank,relative_error\n";
    for (const auto& [k, err] : error_curve(A, ks)) {
        csv += std::to_string(k) + "," + num(err) + "\n";
    }
    write_text_atomic(out_path, csv);
    return 0;
}

int run_zipf(const std::string& freq_path, const std::string& out_path) {
    const FrequencyTable freq = read_frequencies(freq_path);
    std::string csv = "rank,log_rank,log_count\n";
    for (const auto& [rank, log_count] : zipf_stats(freq)) {
        csv += std::to_string(rank) + "," + num(std::log(static_cast<double>(rank))) + "," +
               num(log_count) + "\n";
    }
    write_text_atomic(out_path, csv);
    return 0;
}

int run_baseline(const std::string& matrix_path, long long svd_rank, long long prune_budget,
                 int quant_bits) {
    const Matrix A = read_matrix(matrix_path);
    if (svd_rank > 0) {
        const FactorPair f = lowrank_baseline(A, svd_rank);
        const double err = frobenius_error(A, f.U * f.V.transpose());
        const long long params = (A.rows() + A.cols()) * svd_rank;
        std::cout << "baseline svd\n"
                  << "rank " << svd_rank << "\n"
                  << "unweighted_error " << num(err * err) << "\n"
                  << "parameters " << num(params) << "\n"
                  << "compression_rate "
                  << num(static_cast<double>(A.rows() * A.cols()) / static_cast<double>(params))
                  << "\n";
    } else if (prune_budget > 0) {
        const PrunedMatrix p = prune_to_budget(A, prune_budget);
        const double err = frobenius_error(A, p.to_dense());
        std::cout << "baseline prune\n"
                  << "threshold " << num(p.threshold) << "\n"
                  << "nonzeros " << num(p.nnz()) << "\n"
                  << "unweighted_error " << num(err * err) << "\n";
        print_memory(memory_footprint(p));
    } else {
        const QuantizedMatrix q = quantize_uniform(A, quant_bits);
        const double err = frobenius_error(A, dequantize(q));
        std::cout << "baseline quantize\n"
                  << "bits " << quant_bits << "\n"
                  << "unweighted_error " << num(err * err) << "\n";
        print_memory(memory_footprint(q));
    }
    return 0;
}

int run_gen(long long rows, long long cols, int clusters, double noise, std::uint64_t seed,
            const std::string& matrix_out, const std::string& freq_out) {
    const ZipfInstance inst = gen_zipf_embedding(rows, cols, clusters, noise, seed);
    write_matrix(matrix_out, inst.matrix, MatrixDType::f64);
    write_frequencies(freq_out, inst.frequencies);
    std::cout << "rows " << rows << "\n"
              << "cols " << cols << "\n"
              << "planted_clusters " << clusters << "\n";
    return 0;
}

std::string one_line(std::string s) {
    std::replace(s.begin(), s.end(), '\n', ' ');
    return s;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Frequency-weighted block low-rank compression for embedding matrices"};
    app.require_subcommand(1);
    app.failure_message(CLI::FailureMessage::help);

    CompressArgs ca;
    auto* compress = app.add_subcommand("compress", "Compress a matrix into a block model");
    compress->add_option("--matrix", ca.matrix_path, "Input matrix file")->required();
    compress->add_option("--freq", ca.freq_path, "Token frequency file")->required();
    compress->add_option("--clusters", ca.clusters, "Cluster count (default: by vocabulary size)");
    auto* budget_opt = compress->add_option("--budget", ca.budget_frac,
                                            "Parameter budget as a fraction of dense size");
    auto* rank_opt =
        compress->add_option("--base-rank", ca.base_rank, "Rank of the least-frequent cluster");
    budget_opt->excludes(rank_opt);
    rank_opt->excludes(budget_opt);
    compress->add_option("--iters", ca.iters, "Maximum refinement iterations");
    compress->add_option("--move-frac", ca.move_frac, "Fraction of candidates moved per iteration");
    compress->add_option("--min-moves", ca.min_moves, "Stop when fewer tokens want to move");
    compress->add_option("--out", ca.out_path, "Write the compressed model here");

    std::string q_model, q_out;
    int q_bits = 8;
    auto* quantize = app.add_subcommand("quantize", "Quantize a compressed model's factors");
    quantize->add_option("--model", q_model, "Input model file")->required();
    quantize->add_option("--bits", q_bits, "Bits per code")->required();
    quantize->add_option("--out", q_out, "Output model file")->required();

    std::string e_matrix, e_freq, e_model;
    auto* evaluate = app.add_subcommand("evaluate", "Reconstruction errors of a model");
    evaluate->add_option("--matrix", e_matrix, "Reference matrix file")->required();
    evaluate->add_option("--freq", e_freq, "Token frequency file")->required();
    evaluate->add_option("--model", e_model, "Model file")->required();

    std::string r_model, r_out;
    long long r_row = -1;
    auto* reconstruct = app.add_subcommand("reconstruct", "Materialize rows of a model");
    reconstruct->add_option("--model", r_model, "Model file")->required();
    auto* row_opt = reconstruct->add_option("--row", r_row, "Print this row to stdout");
    auto* rout_opt = reconstruct->add_option("--out", r_out, "Write the full matrix here");
    row_opt->excludes(rout_opt);
    rout_opt->excludes(row_opt);

    std::string ab_matrix, ab_freq, ab_out;
    int ab_clusters = 5;
    double ab_budget = 0.0;
    auto* ablate = app.add_subcommand("ablate", "Strategy-by-strategy error at a fixed budget");
    ablate->add_option("--matrix", ab_matrix, "Input matrix file")->required();
    ablate->add_option("--freq", ab_freq, "Token frequency file")->required();
    ablate->add_option("--clusters", ab_clusters, "Cluster count")->required();
    ablate->add_option("--budget", ab_budget, "Parameter budget as a fraction of dense size")
        ->required();
    ablate->add_option("--out", ab_out, "Output CSV")->required();

    std::string sp_matrix, sp_out;
    auto* spectrum_cmd = app.add_subcommand("spectrum", "Singular values of a matrix");
    spectrum_cmd->add_option("--matrix", sp_matrix, "Input matrix file")->required();
    spectrum_cmd->add_option("--out", sp_out, "Output CSV")->required();

    std::string cu_matrix, cu_out;
    std::vector<long long> cu_ranks;
    auto* curve = app.add_subcommand("curve", "Relative error versus rank");
    curve->add_option("--matrix", cu_matrix, "Input matrix file")->required();
    curve->add_option("--ranks", cu_ranks, "Comma-separated ranks")->required()->delimiter(',');
    curve->add_option("--out", cu_out, "Output CSV")->required();

    std::string z_freq, z_out;
    auto* zipf = app.add_subcommand("zipf", "Log-log frequency/rank table");
    zipf->add_option("--freq", z_freq, "Token frequency file")->required();
    zipf->add_option("--out", z_out, "Output CSV")->required();

    std::string b_matrix;
    long long b_svd = 0, b_prune = 0;
    int b_bits = 0;
    auto* baseline = app.add_subcommand("baseline", "Vanilla SVD, pruning, or quantization");
    baseline->add_option("--matrix", b_matrix, "Input matrix file")->required();
    auto* svd_opt = baseline->add_option("--svd", b_svd, "Truncated-SVD rank");
    auto* prune_opt = baseline->add_option("--prune-budget", b_prune, "Parameter budget");
    auto* bits_opt = baseline->add_option("--quant-bits", b_bits, "Bits per code");
    svd_opt->excludes(prune_opt)->excludes(bits_opt);
    prune_opt->excludes(svd_opt)->excludes(bits_opt);
    bits_opt->excludes(svd_opt)->excludes(prune_opt);

    long long g_rows = 0, g_cols = 0;
    int g_clusters = 5;
    double g_noise = 0.05;
    std::uint64_t g_seed = 1;
    std::string g_matrix_out, g_freq_out;
    auto* gen = app.add_subcommand("gen", "Generate a synthetic power-law embedding instance");
    gen->add_option("--rows", g_rows, "Vocabulary size")->required();
    gen->add_option("--cols", g_cols, "Embedding dimension")->required();
    gen->add_option("--clusters", g_clusters, "Planted cluster count");
    gen->add_option("--noise", g_noise, "Additive noise level");
    gen->add_option("--seed", g_seed, "Random seed");
    gen->add_option("--matrix-out", g_matrix_out, "Output matrix file")->required();
    gen->add_option("--freq-out", g_freq_out, "Output frequency file")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand(compress)) {
            if (ca.budget_frac <= 0.0 && ca.base_rank <= 0) {
                throw std::invalid_argument("compress: need --budget or --base-rank");
            }
            return run_compress(ca);
        }
        if (app.got_subcommand(quantize)) {
            return run_quantize(q_model, q_bits, q_out);
        }
        if (app.got_subcommand(evaluate)) {
            return run_evaluate(e_matrix, e_freq, e_model);
        }
        if (app.got_subcommand(reconstruct)) {
            if (r_row < 0 && r_out.empty()) {
                throw std::invalid_argument("reconstruct: need --row or --out");
            }
            return run_reconstruct(r_model, r_row, r_out);
        }
        if (app.got_subcommand(ablate)) {
            return run_ablate(ab_matrix, ab_freq, ab_clusters, ab_budget, ab_out);
        }
        if (app.got_subcommand(spectrum_cmd)) {
            return run_spectrum(sp_matrix, sp_out);
        }
        if (app.got_subcommand(curve)) {
            return run_curve(cu_matrix, cu_ranks, cu_out);
        }
        if (app.got_subcommand(zipf)) {
            return run_zipf(z_freq, z_out);
        }
        if (app.got_subcommand(baseline)) {
            if (b_svd <= 0 && b_prune <= 0 && b_bits <= 0) {
                throw std::invalid_argument(
                    "baseline: need one of --svd, --prune-budget, --quant-bits");
            }
            return run_baseline(b_matrix, b_svd, b_prune, b_bits);
        }
        if (app.got_subcommand(gen)) {
            return run_gen(g_rows, g_cols, g_clusters, g_noise, g_seed, g_matrix_out, g_freq_out);
        }
    } catch (const groupreduce::io_error& e) {
        std::cerr << "error (" << io_errc_name(e.code()) << "): " << one_line(e.what()) << "\n";
        return 3;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << one_line(e.what()) << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << one_line(e.what()) << "\n";
        return 1;
    }
    return 0;
}
