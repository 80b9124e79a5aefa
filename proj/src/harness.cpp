#include "copo/harness.hpp"

#include "copo/metrics.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

namespace copo {

namespace {

using nlohmann::json;

const std::vector<std::string> kKnownMethods = {"copo", "kmeans", "spectral", "hollowed",
                                                "bayes_oracle"};
const std::vector<std::string> kKnownGenerators = {"sparse_gaussian", "hetero_gaussian",
                                                   "dense_gaussian", "ising", "probit",
                                                   "gamma", "negbin"};

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

// Replicate stream: deterministic in (base_seed, point, replicate) and
// independent of scheduling.
std::uint64_t replicate_stream(std::uint64_t base_seed, std::size_t point_index, int replicate) {
    const std::uint64_t h1 = SeededRng::mix64(base_seed);
    const std::uint64_t h2 = SeededRng::mix64(static_cast<std::uint64_t>(point_index) * 0x100000001B3ULL +
                                              static_cast<std::uint64_t>(replicate) + 1);
    return SeededRng::mix64(h1 ^ h2);
}

void shuffle_rows(Dataset& ds, SeededRng& rng) {
    const Index n = ds.y.rows();
    std::vector<Index> perm(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
    for (Index i = n - 1; i > 0; --i) {
        const auto j = static_cast<Index>(rng.uniform_index(static_cast<std::uint64_t>(i) + 1));
        std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
    }
    Matrix y(n, ds.y.cols());
    Matrix noise;
    if (ds.has_noise) noise.resize(n, ds.noise.cols());
    LabelVector labels(ds.truth.labels.size());
    for (Index i = 0; i < n; ++i) {
        const Index src = perm[static_cast<std::size_t>(i)];
        y.row(i) = ds.y.row(src);
        if (ds.has_noise) noise.row(i) = ds.noise.row(src);
        labels[static_cast<std::size_t>(i)] = ds.truth.labels[static_cast<std::size_t>(src)];
    }
    ds.y = std::move(y);
    if (ds.has_noise) ds.noise = std::move(noise);
    ds.truth.labels = std::move(labels);
}

Index even_param(const GeneratorSpec& gen, const std::string& key, Index multiple) {
    const double raw = gen.get(key);
    const auto v = static_cast<Index>(std::llround(raw));
    if (v < multiple || v % multiple != 0)
        throw ValidationError("generator." + key + " must be a positive multiple of " +
                                  std::to_string(multiple),
                              {"generator." + key});
    return v;
}

double resolve_alpha(const GeneratorSpec& gen, Index n, Index p) {
    if (gen.has("alpha")) return gen.get("alpha");
    if (gen.has("alpha_scale"))
        return gen.get("alpha_scale") *
               std::pow(static_cast<double>(p) / static_cast<double>(n), 0.25);
    throw ValidationError("generator needs alpha or alpha_scale", {"generator.alpha"});
}

LabelMode label_mode(const GeneratorSpec& gen) {
    return gen.get_or("balanced", 1.0) != 0.0 ? LabelMode::Balanced : LabelMode::Iid;
}

Dataset build_dataset(const GeneratorSpec& gen, SeededRng& rng) {
    const std::string& name = gen.name;
    if (name == "sparse_gaussian") {
        const Index n = even_param(gen, "n", 1);
        const Index p = even_param(gen, "p", 1);
        Index s;
        if (gen.has("s")) {
            s = static_cast<Index>(std::llround(gen.get("s")));
        } else if (gen.has("s_frac")) {
            s = std::max<Index>(1, static_cast<Index>(std::llround(gen.get("s_frac") * static_cast<double>(p))));
        } else {
            throw ValidationError("sparse_gaussian needs s or s_frac", {"generator.s"});
        }
        if (2 * s > p) throw ValidationError("sparse_gaussian needs 2s <= p", {"generator.s"});
        const double alpha = resolve_alpha(gen, n, p);
        const double scale = alpha * std::sqrt(2.0) / std::sqrt(static_cast<double>(s));
        Matrix centers = Matrix::Zero(p, 2);
        centers.col(0).head(s).setConstant(scale);
        centers.col(1).segment(s, s).setConstant(scale);
        std::vector<CovSpec> covs(2, CovSpec::identity(p));
        return gen_gaussian(n, p, centers, covs, Vector::Constant(2, 0.5), rng, label_mode(gen));
    }
    if (name == "hetero_gaussian") {
        const Index n = even_param(gen, "n", 1);
        const Index p = even_param(gen, "p", 2);
        const double alpha = resolve_alpha(gen, n, p);
        const double hi = gen.get_or("var_high", 25.0);
        // fixed_center_norm treats alpha as ||theta_k||_2, so the signal
        // stays put while the dimension sweeps.
        const double coord = gen.get_or("fixed_center_norm", 0.0) != 0.0
                                 ? alpha / std::sqrt(static_cast<double>(p) / 2.0)
                                 : alpha;
        Matrix centers = Matrix::Zero(p, 2);
        centers.col(0).head(p / 2).setConstant(coord);
        centers.col(1).tail(p / 2).setConstant(coord);
        Vector v1(p), v2(p);
        v1.head(p / 2).setConstant(hi);
        v1.tail(p / 2).setOnes();
        v2.head(p / 2).setOnes();
        v2.tail(p / 2).setConstant(hi);
        std::vector<CovSpec> covs = {CovSpec::diagonal(v1), CovSpec::diagonal(v2)};
        return gen_gaussian(n, p, centers, covs, Vector::Constant(2, 0.5), rng, label_mode(gen));
    }
    if (name == "dense_gaussian") {
        const Index n = even_param(gen, "n", 1);
        const Index p = even_param(gen, "p", 2);
        const double alpha = resolve_alpha(gen, n, p);
        Matrix centers = Matrix::Zero(p, 2);
        centers.col(0).head(p / 2).setConstant(alpha);
        centers.col(1).tail(p / 2).setConstant(alpha);
        std::vector<CovSpec> covs(2, CovSpec::identity(p));
        return gen_gaussian(n, p, centers, covs, Vector::Constant(2, 0.5), rng, label_mode(gen));
    }
    if (name == "ising") return gen_ising(even_param(gen, "n", 1), even_param(gen, "p", 4), rng);
    if (name == "probit") {
        const Index n = even_param(gen, "n", 1);
        const Index p = even_param(gen, "p", 2);
        const double lo = gen.get_or("rho_min", -0.8);
        const double hi = gen.get_or("rho_max", 0.8);
        if (!(lo < hi) || lo <= -1.0 || hi >= 1.0)
            throw ValidationError("probit rho range must satisfy -1 < rho_min < rho_max < 1",
                                  {"generator.rho_min", "generator.rho_max"});
        return gen_probit(
            n, p, [lo, hi](SeededRng& r) { return lo + (hi - lo) * r.uniform(); }, rng);
    }
    if (name == "gamma") return gen_gamma(even_param(gen, "n", 1), even_param(gen, "p", 2), rng);
    if (name == "negbin") return gen_negbin(even_param(gen, "n", 1), even_param(gen, "p", 2), rng);
    throw ValidationError("unknown generator '" + name + "'", {"generator.name"});
}

int pool_size() {
    if (const char* env = std::getenv("COPO_WORKERS")) {
        const int v = std::atoi(env);
        if (v >= 1) return v;
    }
    const unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : static_cast<int>(hc);
}

struct TruthStats {
    bool ok = false;
    Matrix omega;
    double snr = std::numeric_limits<double>::quiet_NaN();
    double snr_mod = std::numeric_limits<double>::quiet_NaN();
    double snr_exc = std::numeric_limits<double>::quiet_NaN();
};

TruthStats truth_stats(const MixtureTruth& truth, bool compute_snr) {
    TruthStats st;
    try {
        const TruthSpectral ts = truth_spectral(truth);
        const ProjectedParams pp = projected_params(truth, ts);
        st.omega = pp.omega;
        if (compute_snr) {
            SnrReport rep = snr_report(pp, truth, ts);
            st.snr = rep.snr;
            st.snr_mod = rep.snr_mod;
            st.snr_exc = rep.snr_exc;
        }
        st.ok = true;
    } catch (const Error&) {
        st.ok = false;
    }
    return st;
}

}  // namespace

double GeneratorSpec::get(const std::string& key) const {
    const auto it = params.find(key);
    if (it == params.end())
        throw ValidationError("generator parameter '" + key + "' missing", {"generator." + key});
    return it->second;
}

double GeneratorSpec::get_or(const std::string& key, double fallback) const {
    const auto it = params.find(key);
    return it == params.end() ? fallback : it->second;
}

bool GeneratorSpec::has(const std::string& key) const { return params.count(key) > 0; }

void ExperimentConfig::validate() const {
    std::vector<std::string> bad;
    if (std::find(kKnownGenerators.begin(), kKnownGenerators.end(), generator.name) ==
        kKnownGenerators.end())
        bad.push_back("generator.name");
    if (replicates < 1) bad.push_back("replicates");
    if (methods.empty()) bad.push_back("methods");
    for (const auto& m : methods)
        if (std::find(kKnownMethods.begin(), kKnownMethods.end(), m) == kKnownMethods.end())
            bad.push_back("methods." + m);
    if (sweep) {
        if (sweep->values.empty()) bad.push_back("sweep.values");
        if (!generator.has(sweep->parameter)) bad.push_back("sweep.parameter");
    }
    if (copo_cfg.ridge < 0.0) bad.push_back("copo.ridge");
    if (!bad.empty()) throw ValidationError("invalid experiment config", bad);
}

ExperimentConfig parse_config_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw ValidationError(std::string("config is not valid JSON: ") + e.what(), {"<json>"});
    }
    ExperimentConfig cfg;
    try {
        cfg.experiment = doc.value("experiment", std::string("experiment"));
        const auto& gen = doc.at("generator");
        cfg.generator.name = gen.at("name").get<std::string>();
        for (const auto& [key, value] : gen.items()) {
            if (key == "name") continue;
            if (!value.is_number())
                throw ValidationError("generator parameter '" + key + "' must be numeric",
                                      {"generator." + key});
            cfg.generator.params[key] = value.get<double>();
        }
        cfg.methods = doc.at("methods").get<std::vector<std::string>>();
        cfg.replicates = doc.value("replicates", 1);
        cfg.base_seed = doc.value("base_seed", static_cast<std::uint64_t>(0));
        if (doc.contains("sweep") && !doc["sweep"].is_null()) {
            SweepSpec sw;
            sw.parameter = doc["sweep"].at("parameter").get<std::string>();
            sw.values = doc["sweep"].at("values").get<std::vector<double>>();
            cfg.sweep = std::move(sw);
        }
        cfg.output_dir = doc.value("output_dir", std::string("out"));
        if (doc.contains("copo")) {
            const auto& c = doc["copo"];
            cfg.copo_cfg.max_iters = c.value("max_iters", 0);
            cfg.copo_cfg.ridge = c.value("ridge", 1e-6);
            cfg.copo_cfg.min_cluster_size = c.value("min_cluster_size", 2);
            cfg.copo_cfg.add_log_det = c.value("add_log_det", false);
            cfg.copo_cfg.init_restarts = c.value("init_restarts", 10);
        }
        cfg.kmeans_restarts = doc.value("kmeans_restarts", 10);
        cfg.compute_snr = doc.value("compute_snr", true);
    } catch (const json::exception& e) {
        throw ValidationError(std::string("config field error: ") + e.what(), {"<json>"});
    }
    cfg.validate();
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open config file " + path, {"<path>"});
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_json(buf.str());
}

Dataset make_dataset(const GeneratorSpec& gen, std::uint64_t base_seed, std::size_t point_index,
                     int replicate) {
    SeededRng rng(base_seed, replicate_stream(base_seed, point_index, replicate));
    Dataset ds = build_dataset(gen, rng);
    SeededRng shuffle_rng = rng.child(fnv1a("shuffle"));
    shuffle_rows(ds, shuffle_rng);
    return ds;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();

    std::vector<std::pair<std::string, double>> points;
    if (cfg.sweep) {
        for (double v : cfg.sweep->values) points.emplace_back(cfg.sweep->parameter, v);
    } else {
        points.emplace_back("none", 0.0);
    }

    const std::size_t cells = points.size() * static_cast<std::size_t>(cfg.replicates);
    std::vector<std::vector<RunRecord>> slots(cells);

    auto run_task = [&](std::size_t task) {
        const std::size_t pt = task / static_cast<std::size_t>(cfg.replicates);
        const int rep = static_cast<int>(task % static_cast<std::size_t>(cfg.replicates));
        GeneratorSpec gen = cfg.generator;
        if (cfg.sweep) gen.params[points[pt].first] = points[pt].second;

        std::vector<RunRecord>& out = slots[task];
        out.reserve(cfg.methods.size());
        auto base_record = [&](const std::string& method) {
            RunRecord r;
            r.sweep_param = points[pt].first;
            r.sweep_value = points[pt].second;
            r.replicate = rep;
            r.method = method;
            return r;
        };

        Dataset ds;
        try {
            ds = make_dataset(gen, cfg.base_seed, pt, rep);
        } catch (const Error&) {
            for (const auto& m : cfg.methods) {
                RunRecord r = base_record(m);
                r.failed = true;
                out.push_back(std::move(r));
            }
            return;
        }

        const int k = ds.truth.k;
        const TruthStats stats = truth_stats(ds.truth, cfg.compute_snr);
        SeededRng method_root(cfg.base_seed, replicate_stream(cfg.base_seed, pt, rep));

        std::optional<Embedding> hollowed_cache;
        std::optional<Embedding> vanilla_cache;
        auto hollowed = [&]() -> const Embedding& {
            if (!hollowed_cache) hollowed_cache = hollowed_embedding(ds.y, k);
            return *hollowed_cache;
        };
        auto vanilla = [&]() -> const Embedding& {
            if (!vanilla_cache) vanilla_cache = svd_embedding(ds.y, k);
            return *vanilla_cache;
        };

        for (const auto& m : cfg.methods) {
            RunRecord r = base_record(m);
            SeededRng mrng = method_root.child(fnv1a(m));
            const auto t0 = std::chrono::steady_clock::now();
            try {
                LabelVector labels;
                if (m == "copo") {
                    const Embedding& e = hollowed();
                    CopoConfig cc = cfg.copo_cfg;
                    cc.k = k;
                    const LabelVector init = spectral_init(e, k, mrng, cc.init_restarts);
                    CopoResult res = copo(e, init, cc);
                    labels = std::move(res.labels);
                    r.iters = res.iterations;
                } else if (m == "kmeans") {
                    labels = kmeans(ds.y, k, mrng, cfg.kmeans_restarts).labels;
                } else if (m == "spectral") {
                    labels = kmeans(scaled_rows(vanilla()), k, mrng, cfg.kmeans_restarts).labels;
                } else if (m == "hollowed") {
                    labels = kmeans(scaled_rows(hollowed()), k, mrng, cfg.kmeans_restarts).labels;
                } else if (m == "bayes_oracle") {
                    labels.resize(static_cast<std::size_t>(ds.y.rows()));
                    for (Index i = 0; i < ds.y.rows(); ++i)
                        labels[static_cast<std::size_t>(i)] =
                            bayes_classify(ds.y.row(i).transpose(), ds.truth);
                } else {
                    throw ValidationError("unknown method " + m, {"methods"});
                }
                const auto t1 = std::chrono::steady_clock::now();
                r.wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
                r.h = misclustering(labels, ds.truth.labels, k).h;
                if (stats.ok) {
                    r.weighted_loss = weighted_loss(labels, ds.truth.labels, stats.omega);
                    r.snr = stats.snr;
                    r.snr_mod = stats.snr_mod;
                    r.snr_exc = stats.snr_exc;
                }
            } catch (const Error&) {
                r.failed = true;
            }
            out.push_back(std::move(r));
        }
    };

    const int workers = std::min<int>(pool_size(), static_cast<int>(cells));
    if (workers <= 1) {
        for (std::size_t t = 0; t < cells; ++t) run_task(t);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> threads;
        threads.reserve(static_cast<std::size_t>(workers));
        for (int w = 0; w < workers; ++w) {
            threads.emplace_back([&]() {
                for (;;) {
                    const std::size_t t = next.fetch_add(1);
                    if (t >= cells) return;
                    run_task(t);
                }
            });
        }
        for (auto& th : threads) th.join();
    }

    ExperimentResult result;
    result.records.reserve(cells * cfg.methods.size());
    for (auto& slot : slots)
        for (auto& r : slot) result.records.push_back(std::move(r));
    result.summary = summarize(result.records);
    return result;
}

std::vector<SummaryCell> summarize(const std::vector<RunRecord>& records) {
    // Group keys in first-appearance order keeps output deterministic.
    std::vector<SummaryCell> cells;
    std::map<std::pair<double, std::string>, std::size_t> index;
    std::vector<std::vector<const RunRecord*>> groups;
    for (const auto& r : records) {
        const auto key = std::make_pair(r.sweep_value, r.method);
        auto it = index.find(key);
        if (it == index.end()) {
            index.emplace(key, cells.size());
            SummaryCell c;
            c.sweep_param = r.sweep_param;
            c.sweep_value = r.sweep_value;
            c.method = r.method;
            cells.push_back(c);
            groups.emplace_back();
            it = index.find(key);
        }
        groups[it->second].push_back(&r);
    }

    auto mean_se = [](const std::vector<double>& xs, double& mean, double& se) {
        mean = std::numeric_limits<double>::quiet_NaN();
        se = std::numeric_limits<double>::quiet_NaN();
        if (xs.empty()) return;
        double m = 0.0;
        for (double x : xs) m += x;
        m /= static_cast<double>(xs.size());
        mean = m;
        if (xs.size() == 1) {
            se = 0.0;
            return;
        }
        double ss = 0.0;
        for (double x : xs) ss += (x - m) * (x - m);
        se = std::sqrt(ss / static_cast<double>(xs.size() - 1)) /
             std::sqrt(static_cast<double>(xs.size()));
    };

    for (std::size_t g = 0; g < groups.size(); ++g) {
        std::vector<double> hs, wls, snrs, mods, excs;
        for (const RunRecord* r : groups[g]) {
            if (r->failed || std::isnan(r->h)) continue;
            hs.push_back(r->h);
            if (!std::isnan(r->weighted_loss)) wls.push_back(r->weighted_loss);
            if (!std::isnan(r->snr)) snrs.push_back(r->snr);
            if (!std::isnan(r->snr_mod)) mods.push_back(r->snr_mod);
            if (!std::isnan(r->snr_exc)) excs.push_back(r->snr_exc);
        }
        SummaryCell& c = cells[g];
        c.n_reps = static_cast<int>(hs.size());
        mean_se(hs, c.h_mean, c.h_se);
        mean_se(wls, c.weighted_loss_mean, c.weighted_loss_se);
        double dummy;
        mean_se(snrs, c.snr_mean, dummy);
        mean_se(mods, c.snr_mod_mean, dummy);
        mean_se(excs, c.snr_exc_mean, dummy);
    }
    return cells;
}

}  // namespace copo
