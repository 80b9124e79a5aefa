#pragma once

#include "copo/cluster.hpp"
#include "copo/datagen.hpp"
#include "copo/oracle.hpp"
#include "copo/types.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace copo {

// Generator family plus its literal parameters. `params` carries numeric
// fields (n, p, s, alpha, ...); sweeps overwrite one of them per point.
struct GeneratorSpec {
    std::string name;
    std::map<std::string, double> params;

    double get(const std::string& key) const;
    double get_or(const std::string& key, double fallback) const;
    bool has(const std::string& key) const;
};

struct SweepSpec {
    std::string parameter;
    std::vector<double> values;
};

struct ExperimentConfig {
    std::string experiment = "experiment";
    GeneratorSpec generator;
    std::vector<std::string> methods;
    int replicates = 1;
    std::uint64_t base_seed = 0;
    std::optional<SweepSpec> sweep;
    std::string output_dir = "out";
    CopoConfig copo_cfg;
    int kmeans_restarts = 10;
    bool compute_snr = true;

    void validate() const;
};

ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config_json(const std::string& text);

struct RunRecord {
    std::string sweep_param;
    double sweep_value = 0.0;
    int replicate = 0;
    std::string method;
    double h = std::numeric_limits<double>::quiet_NaN();
    double weighted_loss = std::numeric_limits<double>::quiet_NaN();
    double snr = std::numeric_limits<double>::quiet_NaN();
    double snr_mod = std::numeric_limits<double>::quiet_NaN();
    double snr_exc = std::numeric_limits<double>::quiet_NaN();
    int iters = 0;
    double wall_ms = 0.0;
    bool failed = false;
};

struct SummaryCell {
    std::string sweep_param;
    double sweep_value = 0.0;
    std::string method;
    int n_reps = 0;
    double h_mean = std::numeric_limits<double>::quiet_NaN();
    double h_se = std::numeric_limits<double>::quiet_NaN();
    double weighted_loss_mean = std::numeric_limits<double>::quiet_NaN();
    double weighted_loss_se = std::numeric_limits<double>::quiet_NaN();
    double snr_mean = std::numeric_limits<double>::quiet_NaN();
    double snr_mod_mean = std::numeric_limits<double>::quiet_NaN();
    double snr_exc_mean = std::numeric_limits<double>::quiet_NaN();
};

struct ExperimentResult {
    std::vector<RunRecord> records;
    std::vector<SummaryCell> summary;
};

// Materialize one dataset for a sweep point and replicate. Rows are
// shuffled after generation so deterministic label layouts carry no
// ordering signal.
Dataset make_dataset(const GeneratorSpec& gen, std::uint64_t base_seed, std::size_t point_index,
                     int replicate);

// Runs every (sweep point x replicate x method) cell; replicate-level
// worker pool sized by COPO_WORKERS (default: hardware concurrency).
ExperimentResult run_experiment(const ExperimentConfig& cfg);

std::vector<SummaryCell> summarize(const std::vector<RunRecord>& records);

// Raw CSV with the fixed column order; floats carry 17 significant digits.
std::string records_to_csv(const std::vector<RunRecord>& records);
std::string summary_to_csv(const std::vector<SummaryCell>& summary);

// One line chart per metric: mean vs sweep value with SE bars per method.
std::string svg_chart(const std::vector<SummaryCell>& summary, const std::string& metric);

// Writes raw CSV, summary CSV, and SVG charts under cfg.output_dir; returns
// the file paths written.
std::vector<std::string> emit_outputs(const ExperimentConfig& cfg, const ExperimentResult& result);

// Rectangular numeric CSV; optional label column remapped by first
// occurrence. Returns 0-based labels.
struct IngestResult {
    Matrix data;
    std::optional<LabelVector> labels;
    int label_count = 0;
};
IngestResult ingest_csv(const std::string& path, bool has_header, std::optional<int> label_column);
IngestResult parse_csv_text(const std::string& text, bool has_header, std::optional<int> label_column);

}  // namespace copo
