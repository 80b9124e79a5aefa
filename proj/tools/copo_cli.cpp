#include "copo/harness.hpp"
#include "copo/metrics.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

namespace {

int cmd_run(const std::string& config_path) {
    const copo::ExperimentConfig cfg = copo::load_config(config_path);
    const copo::ExperimentResult result = copo::run_experiment(cfg);
    const auto files = copo::emit_outputs(cfg, result);

    std::printf("%-12s %-14s %-12s %8s %10s %10s\n", "sweep_param", "sweep_value", "method",
                "n_reps", "mean_h", "se_h");
    for (const auto& c : result.summary)
        std::printf("%-12s %-14g %-12s %8d %10.4f %10.4f\n", c.sweep_param.c_str(), c.sweep_value,
                    c.method.c_str(), c.n_reps, c.h_mean, c.h_se);
    for (const auto& f : files) std::printf("wrote %s\n", f.c_str());
    return 0;
}

int cmd_cluster(const std::string& input, int k, const std::string& method,
                std::optional<int> labels_col, std::uint64_t seed, bool header,
                const std::string& out_path) {
    const copo::IngestResult in = copo::ingest_csv(input, header, labels_col);
    copo::SeededRng rng(seed, 0);

    copo::LabelVector labels;
    if (method == "kmeans") {
        labels = copo::kmeans(in.data, k, rng).labels;
    } else if (method == "spectral") {
        labels = copo::spectral_cluster(in.data, k, copo::EmbeddingKind::VanillaSVD, rng);
    } else if (method == "hollowed") {
        labels = copo::spectral_cluster(in.data, k, copo::EmbeddingKind::Hollowed, rng);
    } else if (method == "copo") {
        const copo::Embedding e = copo::hollowed_embedding(in.data, k);
        copo::CopoConfig cc;
        cc.k = k;
        cc.rng_seed = seed;
        const copo::LabelVector init = copo::spectral_init(e, k, rng, cc.init_restarts);
        labels = copo::copo(e, init, cc).labels;
    } else {
        throw copo::ValidationError("unknown method " + method, {"--method"});
    }

    if (!out_path.empty()) {
        FILE* f = std::fopen(out_path.c_str(), "wb");
        if (!f) throw copo::Error("cannot write " + out_path);
        for (int z : labels) std::fprintf(f, "%d\n", z + 1);
        std::fclose(f);
    }

    if (in.labels) {
        const int truth_k = std::max(k, in.label_count);
        const auto match = copo::misclustering(labels, *in.labels, truth_k);
        std::printf("h = %.6f\n", match.h);
    } else {
        for (int z : labels) std::printf("%d\n", z + 1);
    }
    return 0;
}

int cmd_snr(const std::string& config_path) {
    const copo::ExperimentConfig cfg = copo::load_config(config_path);
    const copo::Dataset ds = copo::make_dataset(cfg.generator, cfg.base_seed, 0, 0);
    const copo::TruthSpectral ts = copo::truth_spectral(ds.truth);
    const copo::ProjectedParams pp = copo::projected_params(ds.truth, ts);
    const copo::SnrReport rep = copo::snr_report(pp, ds.truth, ts);

    std::printf("snr      = %.10f\n", rep.snr);
    std::printf("snr_mod  = %.10f\n", rep.snr_mod);
    std::printf("snr_exc  = %.10f\n", rep.snr_exc);
    if (rep.snr_full)
        std::printf("snr_full = %.10f\n", *rep.snr_full);
    else
        std::printf("snr_full = (omitted: unstructured covariances)\n");
    std::printf("beta = %.6f  nu = %.6f  kappa = %.6f\n", pp.beta, pp.nu, pp.kappa);
    for (int a = 0; a < ds.truth.k; ++a)
        for (int b = 0; b < ds.truth.k; ++b) {
            if (a == b) continue;
            std::printf("pair (%d,%d): snr = %.10f  mod = %.10f  exc = %.10f  omega = %.10f\n",
                        a + 1, b + 1, rep.pair_snr(a, b), rep.pair_snr_mod(a, b),
                        rep.pair_snr_exc(a, b), pp.omega(a, b));
        }
    return 0;
}

int cmd_diag(const std::string& config_path) {
    const copo::ExperimentConfig cfg = copo::load_config(config_path);
    const copo::Dataset ds = copo::make_dataset(cfg.generator, cfg.base_seed, 0, 0);
    const copo::TruthSpectral ts = copo::truth_spectral(ds.truth);
    const copo::Embedding e = copo::hollowed_embedding(ds.y, ds.truth.k);
    const copo::LinearizationReport rep = copo::linearization_diagnostic(ds, ts, e);

    std::printf("rows                   = %ld\n", static_cast<long>(rep.residual.size()));
    std::printf("median residual        = %.8f\n", rep.median_residual);
    std::printf("median |L_i|           = %.8f\n", rep.median_linear_norm);
    std::printf("relative residual q25  = %.8f\n", rep.q25_relative);
    std::printf("relative residual med  = %.8f\n", rep.median_relative);
    std::printf("relative residual q75  = %.8f\n", rep.q75_relative);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Covariance-projected spectral clustering toolkit"};
    app.require_subcommand(1);

    std::string config_path;
    auto* run = app.add_subcommand("run", "Run a config-driven Monte Carlo experiment");
    run->add_option("config", config_path, "JSON experiment config")->required();

    std::string cl_input, cl_method = "copo", cl_out;
    int cl_k = 2;
    int cl_labels_col = -1;
    std::uint64_t cl_seed = 0;
    bool cl_header = false;
    auto* cluster = app.add_subcommand("cluster", "Cluster rows of a numeric CSV");
    cluster->add_option("--input", cl_input, "input CSV path")->required();
    cluster->add_option("--k", cl_k, "number of clusters")->required();
    cluster->add_option("--method", cl_method, "copo|kmeans|spectral|hollowed");
    cluster->add_option("--labels-col", cl_labels_col, "0-based truth label column; prints h");
    cluster->add_option("--seed", cl_seed, "rng seed");
    cluster->add_flag("--header", cl_header, "skip the first row");
    cluster->add_option("--out", cl_out, "write 1-based labels to this file");

    std::string snr_config;
    auto* snr = app.add_subcommand("snr", "Print the SNR family for a generator config");
    snr->add_option("config", snr_config, "JSON experiment config")->required();

    std::string diag_config;
    auto* diag = app.add_subcommand("diag", "Embedding linearization diagnostic for a config");
    diag->add_option("config", diag_config, "JSON experiment config")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return cmd_run(config_path);
        if (cluster->parsed()) {
            std::optional<int> labels_col;
            if (cl_labels_col >= 0) labels_col = cl_labels_col;
            return cmd_cluster(cl_input, cl_k, cl_method, labels_col, cl_seed, cl_header, cl_out);
        }
        if (snr->parsed()) return cmd_snr(snr_config);
        if (diag->parsed()) return cmd_diag(diag_config);
    } catch (const copo::ValidationError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        for (const auto& f : e.fields) std::cerr << "  field: " << f << "\n";
        return 2;
    } catch (const copo::ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
