#include "copo/harness.hpp"

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace copo;

namespace {

std::string trivial_config(const std::string& outdir, int replicates = 2) {
    std::ostringstream cfg;
    cfg << R"({
      "experiment": "trivial",
      "generator": {"name": "sparse_gaussian", "n": 60, "p": 40, "s": 5, "alpha": 40.0},
      "methods": ["copo", "kmeans", "spectral", "hollowed", "bayes_oracle"],
      "replicates": )" << replicates << R"(,
      "base_seed": 99,
      "output_dir": ")" << outdir << R"("
    })";
    return cfg.str();
}

}  // namespace

TEST_CASE("config parsing accepts the documented shape and validates") {
    const auto cfg = parse_config_json(trivial_config("out"));
    CHECK(cfg.experiment == "trivial");
    CHECK(cfg.generator.name == "sparse_gaussian");
    CHECK(cfg.generator.get("n") == 60.0);
    CHECK(cfg.replicates == 2);
    CHECK(cfg.methods.size() == 5);

    CHECK_THROWS_AS(parse_config_json("{"), ValidationError);
    CHECK_THROWS_AS(parse_config_json(R"({"generator": {"name": "x"}, "methods": ["copo"]})"),
                    ValidationError);
    try {
        parse_config_json(
            R"({"generator": {"name": "ising", "n": 10, "p": 8}, "methods": ["nope"], "replicates": 1})");
        CHECK(false);
    } catch (const ValidationError& e) {
        REQUIRE(e.fields.size() == 1);
        CHECK(e.fields[0] == "methods.nope");
    }

    // Sweep parameter must name an existing generator parameter.
    CHECK_THROWS_AS(parse_config_json(R"({
        "generator": {"name": "ising", "n": 10, "p": 8},
        "methods": ["copo"],
        "sweep": {"parameter": "q", "values": [1, 2]}
    })"),
                    ValidationError);
}

TEST_CASE("make_dataset is deterministic per (seed, point, replicate)") {
    GeneratorSpec gen;
    gen.name = "gamma";
    gen.params = {{"n", 30.0}, {"p", 8.0}};
    const Dataset a = make_dataset(gen, 5, 1, 3);
    const Dataset b = make_dataset(gen, 5, 1, 3);
    CHECK(a.y == b.y);
    CHECK(a.truth.labels == b.truth.labels);
    const Dataset c = make_dataset(gen, 5, 1, 4);
    CHECK(a.y != c.y);
}

TEST_CASE("run_experiment: separable config clusters perfectly for all methods") {
    auto cfg = parse_config_json(trivial_config("out_trivial", 1));
    cfg.compute_snr = false;
    const auto result = run_experiment(cfg);
    REQUIRE(result.records.size() == 5);
    for (const auto& r : result.records) {
        CHECK_FALSE(r.failed);
        CHECK(r.h == 0.0);
    }
    for (const auto& c : result.summary) CHECK(c.h_mean == 0.0);
}

TEST_CASE("run_experiment output is byte-identical across runs and worker counts") {
    auto cfg = parse_config_json(trivial_config("out_det"));
    setenv("COPO_WORKERS", "1", 1);
    const auto serial = run_experiment(cfg);
    setenv("COPO_WORKERS", "3", 1);
    const auto parallel = run_experiment(cfg);
    unsetenv("COPO_WORKERS");

    // wall_ms is measurement, not result: compare everything else.
    REQUIRE(serial.records.size() == parallel.records.size());
    for (std::size_t i = 0; i < serial.records.size(); ++i) {
        auto a = serial.records[i];
        auto b = parallel.records[i];
        a.wall_ms = b.wall_ms = 0.0;
        CHECK(records_to_csv({a}) == records_to_csv({b}));
    }
    CHECK(summary_to_csv(serial.summary) == summary_to_csv(parallel.summary));
}

TEST_CASE("summary cells equal an independent recomputation") {
    auto cfg = parse_config_json(trivial_config("out_sum", 3));
    cfg.generator.params["alpha"] = 0.8;  // non-trivial errors
    const auto result = run_experiment(cfg);
    for (const auto& cell : result.summary) {
        double sum = 0.0;
        int cnt = 0;
        for (const auto& r : result.records) {
            if (r.method != cell.method || r.sweep_value != cell.sweep_value || r.failed) continue;
            sum += r.h;
            ++cnt;
        }
        REQUIRE(cnt == cell.n_reps);
        const double mean = sum / cnt;
        CHECK(std::abs(mean - cell.h_mean) <= 1e-12);
        double ss = 0.0;
        for (const auto& r : result.records) {
            if (r.method != cell.method || r.sweep_value != cell.sweep_value || r.failed) continue;
            ss += (r.h - mean) * (r.h - mean);
        }
        const double se = cnt > 1 ? std::sqrt(ss / (cnt - 1)) / std::sqrt(double(cnt)) : 0.0;
        CHECK(std::abs(se - cell.h_se) <= 1e-12);
    }
}

TEST_CASE("raw CSV has the pinned schema and one line per record") {
    RunRecord r;
    r.sweep_param = "p";
    r.sweep_value = 100;
    r.replicate = 0;
    r.method = "copo";
    r.h = 0.125;
    r.weighted_loss = 1.5;
    r.snr = 2.0;
    r.snr_mod = 1.0;
    r.snr_exc = 0.5;
    r.iters = 4;
    r.wall_ms = 12.5;
    const std::string csv = records_to_csv({r});
    std::istringstream lines(csv);
    std::string header, row, extra;
    std::getline(lines, header);
    std::getline(lines, row);
    CHECK_FALSE(std::getline(lines, extra));
    CHECK(header ==
          "sweep_param,sweep_value,replicate,method,h,weighted_loss,snr,snr_mod,snr_exc,iters,wall_ms");
    CHECK(row == "p,100,0,copo,0.125,1.5,2,1,0.5,4,12.5");
}

TEST_CASE("svg chart carries one polyline per method and one marker per point") {
    std::vector<SummaryCell> cells;
    for (const std::string method : {"copo", "kmeans"}) {
        for (double x : {10.0, 20.0, 30.0}) {
            SummaryCell c;
            c.sweep_param = "p";
            c.sweep_value = x;
            c.method = method;
            c.n_reps = 5;
            c.h_mean = method == "copo" ? 0.1 : 0.2;
            c.h_se = 0.01;
            cells.push_back(c);
        }
    }
    const std::string svg = svg_chart(cells, "h");
    auto count = [&](const std::string& needle) {
        std::size_t n = 0, at = 0;
        while ((at = svg.find(needle, at)) != std::string::npos) {
            ++n;
            at += needle.size();
        }
        return n;
    };
    CHECK(count("<polyline") == 2);
    CHECK(count("<circle") == 6);
    CHECK(svg.find("</svg>") != std::string::npos);
}

TEST_CASE("emit_outputs writes raw, summary and chart files") {
    const std::string dir = "out_emit_test";
    std::filesystem::remove_all(dir);
    auto cfg = parse_config_json(trivial_config(dir, 1));
    cfg.methods = {"copo"};
    const auto result = run_experiment(cfg);
    const auto files = emit_outputs(cfg, result);
    REQUIRE(files.size() >= 3);
    for (const auto& f : files) CHECK(std::filesystem::exists(f));
    std::filesystem::remove_all(dir);
}

TEST_CASE("ingest_csv basics") {
    const auto simple = parse_csv_text("1,2\n3,4", false, std::nullopt);
    REQUIRE(simple.data.rows() == 2);
    REQUIRE(simple.data.cols() == 2);
    CHECK(simple.data(0, 0) == 1.0);
    CHECK(simple.data(1, 1) == 4.0);
    CHECK_FALSE(simple.labels.has_value());

    const auto with_header = parse_csv_text("a,b\n1,2\n3,4", true, std::nullopt);
    CHECK(with_header.data.rows() == 2);

    const auto labeled = parse_csv_text("1,b\n2,a\n3,b", false, 1);
    REQUIRE(labeled.labels.has_value());
    CHECK(*labeled.labels == LabelVector{0, 1, 0});
    CHECK(labeled.label_count == 2);
    CHECK(labeled.data.cols() == 1);
}

TEST_CASE("ingest_csv reports ragged and non-numeric cells with positions") {
    try {
        parse_csv_text("1,2\n3", false, std::nullopt);
        CHECK(false);
    } catch (const ParseError& e) {
        CHECK(e.row == 2);
    }
    try {
        parse_csv_text("1,2\n3,oops", false, std::nullopt);
        CHECK(false);
    } catch (const ParseError& e) {
        CHECK(e.row == 2);
        CHECK(e.col == 2);
    }
}

TEST_CASE("ingest_csv handles quoted fields") {
    const auto r = parse_csv_text("\"1\",\"lab,el\"\n2,\"x\"\"y\"", false, 1);
    CHECK(r.data(0, 0) == 1.0);
    REQUIRE(r.labels.has_value());
    CHECK(r.label_count == 2);
}

TEST_CASE("failed replicates are recorded without aborting the run") {
    // negbin requires even p; sweep hits an invalid point.
    auto cfg = parse_config_json(R"({
        "experiment": "failures",
        "generator": {"name": "negbin", "n": 20, "p": 8},
        "methods": ["kmeans"],
        "replicates": 1,
        "base_seed": 3,
        "sweep": {"parameter": "p", "values": [8, 7]}
    })");
    const auto result = run_experiment(cfg);
    REQUIRE(result.records.size() == 2);
    CHECK_FALSE(result.records[0].failed);
    CHECK(result.records[1].failed);
}
