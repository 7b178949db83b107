#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "spc/completion/completion.hpp"
#include "spc/io/report.hpp"
#include "spc/model/mask.hpp"
#include "spc/nb/nonbacktracking.hpp"

namespace spc {

/// Bad or inconsistent experiment configuration (CLI exit code 2).
class ConfigError : public ContractViolation {
public:
    using ContractViolation::ContractViolation;
};

/// CLI exit status for an error escaping a subcommand.
inline int exit_code(const std::exception& e) {
    if (dynamic_cast<const NumericalConsistencyError*>(&e)) return 3;
    if (dynamic_cast<const ParseError*>(&e) || dynamic_cast<const ContractViolation*>(&e)) return 2;
    return 1;
}

struct ExperimentConfig {
    std::string scenario;
    Index n = 0;
    Index m = 0;                   // rectangular scenarios only
    std::vector<double> d;         // d grid (d̄ for nb_example)
    std::string sampler = "gaussian";
    std::vector<double> values;    // μ or σ of the truth
    std::vector<std::uint64_t> seeds;
    std::vector<std::string> methods;
    std::string output_dir = "out";

    bool operator==(const ExperimentConfig&) const = default;
};

struct MetricRow {
    std::string family;  // output file: spectrum | overlap | completion
    double d = 0.0;
    std::uint64_t seed = 0;
    int index = 0;
    std::string metric;
    double measured = 0.0;
    double predicted = std::numeric_limits<double>::quiet_NaN();
};

struct RunRecord {
    ExperimentConfig config;
    std::string config_hash;
    std::vector<MetricRow> rows;  // ordered by (d, seed), then emission order
    std::vector<double> task_seconds;
    double wall_clock = 0.0;
};

using ScenarioRunner = std::function<std::vector<MetricRow>(const ExperimentConfig&, double d, std::uint64_t seed)>;

struct ScenarioEntry {
    std::string name;
    ExperimentConfig defaults;
    ScenarioRunner run;
};

namespace detail {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

inline MetricRow row(std::string fam, double d, std::uint64_t seed, int idx, std::string metric, double meas,
                     double pred = kNaN) {
    return {std::move(fam), d, seed, idx, std::move(metric), meas, pred};
}

inline Vec unit_real(const CVec& v) {
    Vec r = v.real();
    const double nr = r.norm();
    return nr > 0 ? Vec(r / nr) : r;
}

// γ for index i with an explicit count, ignoring the ϑ₁ gate; NaN when the
// series does not converge (μ²d ≤ ρ).
inline double gamma_at(const GroundTruth& gt, const DetectionProfile& prof, int i) {
    if (!(std::abs(prof.values[i]) > prof.theta2)) return kNaN;
    SeriesOptions so;
    so.count = i + 1;
    const auto t = correlation_tables(gt, prof, so);
    return t.converged ? t.gamma[i] : kNaN;
}

inline std::vector<MetricRow> run_er_square(const ExperimentConfig& c, double d, std::uint64_t seed) {
    const auto gt = erdos_renyi_truth(c.n);
    const auto prof = detection_profile(gt, d, Variant::square);
    const double gamma = gamma_at(gt, prof, 0);
    // unscaled adjacency M of the directed graph
    const SparseMatrix M = observe_raw(gt, sample_mask(c.n, c.n, d, seed)).scaled(double(c.n));
    ArnoldiOptions ao;
    ao.seed = seed;
    const auto rep = top_eigenpairs(as_operator(M), 2, ao);
    const auto& p = rep.pairs[0];
    const Vec psi = unit_real(p.right);
    const double ov = std::abs(psi.sum()) / std::sqrt(double(c.n));
    return {row("spectrum", d, seed, 0, "lambda1", p.value.real(), d),
            row("spectrum", d, seed, 1, "modulus", std::abs(rep.pairs[1].value), std::sqrt(d)),
            row("spectrum", d, seed, 0, "bulk_radius", rep.bulk_radius_estimate, std::sqrt(d)),
            row("overlap", d, seed, 0, "overlap", ov, 1.0 / std::sqrt(gamma)),
            row("overlap", d, seed, 0, "lr_dot", p.lr_overlap, 1.0 / gamma)};
}

inline std::vector<MetricRow> run_rank1_square(const ExperimentConfig& c, double d, std::uint64_t seed) {
    const double mu = c.values.empty() ? 1.0 : c.values[0];
    const auto gt = generate_ground_truth({c.n, c.n, {mu}, true, Sampler::parse(c.sampler)}, seed);
    const auto prof = detection_profile(gt, d, Variant::square);
    const double gamma = gamma_at(gt, prof, 0);
    const bool above = std::isfinite(gamma);
    const auto obs = observe_scaled(gt, sample_mask(c.n, c.n, d, seed));
    ArnoldiOptions ao;
    ao.seed = seed;
    const auto rep = top_eigenpairs(as_operator(obs.A), 2, ao);
    const auto& p = rep.pairs[0];
    const double top = std::abs(p.value), second = std::abs(rep.pairs[1].value);
    const Vec phi = gt.phi(0);
    const Vec psi = unit_real(p.right), psil = unit_real(p.left);
    Vec avg = psi + (psi.dot(psil) < 0 ? Vec(-psil) : psil);
    if (avg.norm() > 0) avg.normalize();
    return {row("spectrum", d, seed, 0, "lambda1", p.value.real(), above ? mu : kNaN),
            row("spectrum", d, seed, 0, "top_modulus", top),
            row("spectrum", d, seed, 1, "modulus", second, prof.theta2),
            row("spectrum", d, seed, 0, "theta2", prof.theta2, prof.theta2),
            row("spectrum", d, seed, 0, "gap", (top - second) / second),
            row("overlap", d, seed, 0, "overlap", std::abs(psi.dot(phi)), above ? 1.0 / std::sqrt(gamma) : 0.0),
            row("overlap", d, seed, 0, "lr_dot", p.lr_overlap, above ? 1.0 / gamma : 0.0),
            row("overlap", d, seed, 0, "overlap_avg", std::abs(avg.dot(phi)),
                above ? std::sqrt(2.0 / (gamma + 1.0)) : 0.0)};
}

inline std::vector<MetricRow> run_rank1_rect(const ExperimentConfig& c, double d, std::uint64_t seed) {
    const double sigma = c.values.empty() ? 1.0 : c.values[0];
    const auto gt = generate_ground_truth({c.m, c.n, {sigma}, false, Sampler::parse(c.sampler)}, seed);
    const auto prof = detection_profile(gt, d, Variant::rectangular);
    SeriesOptions so;
    so.count = 1;
    const auto tab = correlation_tables(gt, prof, so);
    const auto T = observe_raw(gt, sample_mask(c.m, c.n, d, seed));
    std::vector<MetricRow> out;
    std::map<std::string, double> err;
    for (const auto& name : c.methods) {
        const Method meth = parse_method(name);
        CompleteOptions opt;
        opt.rank = 1;
        opt.seed = seed;
        const auto cm = complete(T, d, meth, opt);
        const double e = frobenius_error_sq(gt, cm);
        err[name] = e;
        double pred = kNaN;
        if (meth != Method::svd_baseline && tab.converged) pred = mse_star(gt, tab, meth);
        out.push_back(row("completion", d, seed, 0, "mse_" + name, e, pred));
        if (meth == Method::svd_baseline || cm.rank == 0) continue;
        const auto th = theory_cs(tab, meth);
        const auto& cc = cm.components[0].c;
        const bool sim = meth == Method::sim;
        out.push_back(row("completion", d, seed, 0, "c1_" + name, sim ? cc.c1_sim : cc.c1_avg, th.c1[0]));
        out.push_back(row("completion", d, seed, 0, "c2_" + name, sim ? cc.c2_sim : cc.c2_avg, th.c2[0]));
        out.push_back(row("completion", d, seed, 0, "weight_" + name, cm.weights[0], sigma * th.c1[0] * th.c2[0]));
    }
    if (err.count("avg") && err.count("sim") && err.count("svd"))
        out.push_back(row("completion", d, seed, 0, "ordered", err["avg"] <= err["sim"] && err["sim"] <= err["svd"]));
    return out;
}

inline std::vector<MetricRow> run_rect_two_spikes(const ExperimentConfig& c, double d, std::uint64_t seed) {
    const auto gt = generate_ground_truth({c.m, c.n, c.values, false, Sampler::parse(c.sampler)}, seed);
    const auto prof = detection_profile(gt, d, Variant::rectangular);
    const double edge = prof.theta2 * prof.theta2;
    int expect = 0;
    for (double s : gt.sigma) expect += s > prof.theta2;
    const auto T = observe_raw(gt, sample_mask(c.m, c.n, d, seed));
    const auto xy = build_xy(split(T, seed), c.n, d);
    const int k = int(gt.rank()) + 4;
    ArnoldiOptions ao;
    ao.seed = seed;
    std::vector<MetricRow> out;
    for (const auto& [tag, op] : {std::pair{std::string("x"), &xy.X}, std::pair{std::string("y"), &xy.Y}}) {
        const auto rep = top_eigenpairs(*op, k, ao);
        int adm = 0;
        double other = 0.0;
        for (const auto& p : rep.pairs) {
            if (detail::admissible(p, rep.bulk_radius_estimate)) {
                out.push_back(row("spectrum", d, seed, adm, "sqrt_nu_" + tag, std::sqrt(p.value.real()),
                                  adm < int(gt.rank()) ? gt.sigma[adm] : kNaN));
                ++adm;
            } else {
                other = std::max(other, std::abs(p.value));
            }
        }
        out.push_back(row("spectrum", d, seed, 0, "admissible_" + tag, adm, expect));
        out.push_back(row("spectrum", d, seed, 0, "other_max_" + tag, other, edge));
        out.push_back(row("spectrum", d, seed, 0, "bulk_radius_" + tag, rep.bulk_radius_estimate, edge));
    }
    SeriesOptions so;
    so.count = int(gt.rank());
    const auto tab = correlation_tables(gt, prof, so);
    for (const auto& name : c.methods) {
        const Method meth = parse_method(name);
        CompleteOptions opt;
        opt.rank = int(gt.rank());
        opt.seed = seed;
        const auto cm = complete(T, d, meth, opt);
        double pred = kNaN;
        if (meth != Method::svd_baseline && tab.converged) pred = mse_star(gt, tab, meth);
        out.push_back(row("completion", d, seed, 0, "mse_" + name, frobenius_error_sq(gt, cm), pred));
    }
    return out;
}

// Two-block truth at d̄ = d: A from a directed mask at d/2 (the same edge
// density), B from the symmetric mask.
inline std::vector<MetricRow> run_nb_example(const ExperimentConfig& c, double d, std::uint64_t seed) {
    const auto gt = two_block_truth(c.n, c.values.at(0), c.values.at(1));
    const auto mu = gt.mu();
    const auto sq = detection_profile(gt, d / 2.0, Variant::square);
    const auto obs = observe_scaled(gt, sample_mask(c.n, c.n, d / 2.0, seed));
    ArnoldiOptions ao;
    ao.seed = seed;
    const auto rep = top_eigenpairs(as_operator(obs.A), 4, ao);
    int above = 0;
    for (const auto& p : rep.pairs) above += std::abs(p.value) > sq.theta;
    std::vector<MetricRow> out{row("spectrum", d, seed, 0, "a_lambda1", rep.pairs[0].value.real(), mu[0]),
                               row("spectrum", d, seed, 0, "a_above", above, sq.r0),
                               row("spectrum", d, seed, 0, "a_threshold", sq.theta, sq.theta)};

    SeriesOptions so;
    so.count = int(gt.rank());
    const auto pred = nb_predictions(gt, d, so);
    const auto op = nb_operator(gt, sample_symmetric_mask(c.n, d, seed), d);
    const auto s = nb_spectrum(op, 4, ao);
    int adm = 0;
    for (std::size_t i = 0; i < s.report.pairs.size(); ++i) {
        if (!s.admissible[i]) continue;
        const bool known = adm < int(gt.rank());
        const auto& p = s.report.pairs[i];
        out.push_back(row("spectrum", d, seed, adm, "b_eigenvalue", p.value.real(), known ? mu[adm] : kNaN));
        out.push_back(row("overlap", d, seed, adm, "b_lr_dot", p.lr_overlap, known ? pred.lr_dot[adm] : kNaN));
        if (known)
            out.push_back(row("overlap", d, seed, adm, "b_phi_hat_overlap",
                              std::abs(s.lowered[i].phi_hat.dot(gt.phi(adm))), 1.0 / std::sqrt(pred.gamma[adm])));
        ++adm;
    }
    int expect = 0;
    for (double m : mu) expect += std::abs(m) > pred.threshold;
    out.push_back(row("spectrum", d, seed, 0, "b_admissible", adm, expect));
    out.push_back(row("spectrum", d, seed, 0, "b_threshold", pred.threshold, pred.threshold));
    return out;
}

inline std::vector<std::uint64_t> default_seeds() {
    std::vector<std::uint64_t> s;
    for (std::uint64_t i = 1; i <= 10; ++i) s.push_back(i);
    return s;
}

inline ExperimentConfig base(const std::string& name, Index n, Index m, std::vector<double> d,
                             std::vector<double> values, std::vector<std::string> methods = {}) {
    ExperimentConfig c;
    c.scenario = name;
    c.n = n;
    c.m = m;
    c.d = std::move(d);
    c.values = std::move(values);
    c.seeds = default_seeds();
    c.methods = std::move(methods);
    return c;
}

}  // namespace detail

inline const std::vector<ScenarioEntry>& scenario_registry() {
    static const std::vector<ScenarioEntry> reg = [] {
        std::vector<double> sweep;
        for (int d = 2; d <= 20; ++d) sweep.push_back(d);
        std::vector<ScenarioEntry> r;
        r.push_back({"er_square", detail::base("er_square", 5000, 0, {4.0}, {1.0}), detail::run_er_square});
        r.push_back({"rank1_square", detail::base("rank1_square", 4000, 0, {10.0}, {1.0}), detail::run_rank1_square});
        r.push_back({"rank1_rect", detail::base("rank1_rect", 3000, 3000, {50.0}, {1.0}, {"svd", "sim", "avg"}),
                     detail::run_rank1_rect});
        r.push_back({"nb_example", detail::base("nb_example", 2000, 0, {6.0}, {5.0, 3.0}), detail::run_nb_example});
        r.push_back({"rect_two_spikes",
                     detail::base("rect_two_spikes", 5000, 1000, {50.0}, {5.0, 3.0}, {"sim", "avg"}),
                     detail::run_rect_two_spikes});
        r.push_back({"sweep_d", detail::base("sweep_d", 2000, 0, sweep, {1.0}), detail::run_rank1_square});
        return r;
    }();
    return reg;
}

inline std::string registry_names() {
    std::string s;
    for (const auto& e : scenario_registry()) s += (s.empty() ? "" : ", ") + e.name;
    return s;
}

inline const ScenarioEntry& find_scenario(const std::string& name) {
    for (const auto& e : scenario_registry())
        if (e.name == name) return e;
    throw ConfigError("unknown scenario '" + name + "'; registered: " + registry_names());
}

inline ExperimentConfig default_config(const std::string& scenario) { return find_scenario(scenario).defaults; }

inline void validate(const ExperimentConfig& c) {
    const auto& e = find_scenario(c.scenario);
    (void)e;
    if (c.seeds.empty()) throw ConfigError("config: seeds list is empty");
    if (c.d.empty()) throw ConfigError("config: d grid is empty");
    for (double d : c.d)
        if (!(d > 0) || !std::isfinite(d)) throw ConfigError("config: d values must be positive");
    if (c.n < 2) throw ConfigError("config: n must be >= 2");
    const bool rect = c.scenario == "rank1_rect" || c.scenario == "rect_two_spikes";
    if (rect && c.m < 2) throw ConfigError("config: m must be >= 2 for " + c.scenario);
    for (double d : c.d)
        if (d > double(rect ? std::min(c.m, c.n) : c.n)) throw ConfigError("config: d exceeds the dimension");
    if (c.values.empty()) throw ConfigError("config: values list is empty");
    if (c.scenario == "nb_example" && (c.values.size() != 2 || c.n % 2 != 0))
        throw ConfigError("config: nb_example needs two values and even n");
    if (c.scenario == "rect_two_spikes" && Index(c.values.size()) > std::min(c.m, c.n))
        throw ConfigError("config: rank exceeds min(m, n)");
    try {
        Sampler::parse(c.sampler);
        for (const auto& m : c.methods) parse_method(m);
    } catch (const ContractViolation& ex) {
        throw ConfigError(std::string("config: ") + ex.what());
    }
}

inline json to_json(const ExperimentConfig& c) {
    return {{"scenario", c.scenario}, {"n", c.n},           {"m", c.m},
            {"d", c.d},               {"sampler", c.sampler}, {"values", c.values},
            {"seeds", c.seeds},       {"methods", c.methods}, {"output_dir", c.output_dir}};
}

/// Missing keys take the scenario defaults; unknown keys are rejected.
inline ExperimentConfig config_from_json(const json& j) {
    if (!j.is_object()) throw ConfigError("config: top level must be an object");
    if (!j.contains("scenario") || !j["scenario"].is_string()) throw ConfigError("config: missing 'scenario'");
    ExperimentConfig c = default_config(j["scenario"].get<std::string>());
    static const std::vector<std::string> keys{"scenario", "n",     "m",       "d",         "sampler",
                                               "values",   "seeds", "methods", "output_dir"};
    for (const auto& [k, v] : j.items())
        if (std::find(keys.begin(), keys.end(), k) == keys.end()) throw ConfigError("config: unknown key '" + k + "'");
    try {
        if (j.contains("n")) c.n = j["n"].get<Index>();
        if (j.contains("m")) c.m = j["m"].get<Index>();
        if (j.contains("d")) c.d = j["d"].is_array() ? j["d"].get<std::vector<double>>() : std::vector{j["d"].get<double>()};
        if (j.contains("sampler")) c.sampler = j["sampler"].get<std::string>();
        if (j.contains("values")) c.values = j["values"].get<std::vector<double>>();
        if (j.contains("seeds")) c.seeds = j["seeds"].get<std::vector<std::uint64_t>>();
        if (j.contains("methods")) c.methods = j["methods"].get<std::vector<std::string>>();
        if (j.contains("output_dir")) c.output_dir = j["output_dir"].get<std::string>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    validate(c);
    return c;
}

inline ExperimentConfig read_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path.string());
    json j;
    try {
        j = json::parse(in, nullptr, true, true);
    } catch (const json::parse_error& e) {
        throw ConfigError("config: " + path.string() + ": " + e.what());
    }
    return config_from_json(j);
}

inline void write_config(const std::filesystem::path& path, const ExperimentConfig& c) {
    std::ofstream out(path);
    if (!out) throw ConfigError("config: cannot write " + path.string());
    out << to_json(c).dump(2) << "\n";
}

/// FNV-1a of the canonical config text, output directory excluded.
inline std::string config_hash(const ExperimentConfig& c) {
    json j = to_json(c);
    j.erase("output_dir");
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : j.dump()) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

inline std::string fmt_double(double v) {
    if (std::isnan(v)) return "NA";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// Runs every (d, seed) cell on `threads` workers pulling from a shared
/// counter; rows are gathered in grid order regardless of scheduling.
inline RunRecord run_experiment(const ExperimentConfig& cfg, int threads = 1) {
    validate(cfg);
    const auto& entry = find_scenario(cfg.scenario);
    const auto t0 = std::chrono::steady_clock::now();
    struct Cell {
        double d;
        std::uint64_t seed;
    };
    std::vector<Cell> cells;
    for (double d : cfg.d)
        for (auto s : cfg.seeds) cells.push_back({d, s});
    std::vector<std::vector<MetricRow>> res(cells.size());
    std::vector<double> secs(cells.size());
    std::vector<std::exception_ptr> errs(cells.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < cells.size();) {
            const auto a = std::chrono::steady_clock::now();
            try {
                res[i] = entry.run(cfg, cells[i].d, cells[i].seed);
            } catch (...) {
                errs[i] = std::current_exception();
            }
            secs[i] = std::chrono::duration<double>(std::chrono::steady_clock::now() - a).count();
        }
    };
    const int nt = std::max(1, std::min<int>(threads, int(cells.size())));
    std::vector<std::thread> pool;
    for (int t = 1; t < nt; ++t) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
    for (auto& e : errs)
        if (e) std::rethrow_exception(e);

    RunRecord r;
    r.config = cfg;
    r.config_hash = config_hash(cfg);
    for (auto& v : res) r.rows.insert(r.rows.end(), v.begin(), v.end());
    r.task_seconds = std::move(secs);
    r.wall_clock = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
}

inline std::string csv_header() { return "config_hash,scenario,d,seed,index,metric,measured,predicted\n"; }

/// family → CSV text, families in first-appearance order.
inline std::vector<std::pair<std::string, std::string>> to_csv(const RunRecord& r) {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& row : r.rows) {
        auto it = std::find_if(out.begin(), out.end(), [&](const auto& p) { return p.first == row.family; });
        if (it == out.end()) {
            out.push_back({row.family, csv_header()});
            it = std::prev(out.end());
        }
        it->second += r.config_hash + "," + r.config.scenario + "," + fmt_double(row.d) + "," +
                      std::to_string(row.seed) + "," + std::to_string(row.index) + "," + row.metric + "," +
                      fmt_double(row.measured) + "," + fmt_double(row.predicted) + "\n";
    }
    return out;
}

/// Means over seeds per (d, metric, index).
inline json summarize(const RunRecord& r) {
    struct Acc {
        double meas = 0, pred = 0;
        int n = 0, np = 0;
    };
    std::map<std::tuple<double, std::string, int>, Acc> acc;
    for (const auto& row : r.rows) {
        auto& a = acc[{row.d, row.metric, row.index}];
        a.meas += row.measured;
        ++a.n;
        if (!std::isnan(row.predicted)) {
            a.pred += row.predicted;
            ++a.np;
        }
    }
    json metrics = json::array();
    for (const auto& [k, a] : acc)
        metrics.push_back({{"d", std::get<0>(k)},
                           {"metric", std::get<1>(k)},
                           {"index", std::get<2>(k)},
                           {"count", a.n},
                           {"mean_measured", num(a.meas / a.n)},
                           {"mean_predicted", a.np ? num(a.pred / a.np) : json(nullptr)}});
    return {{"config", to_json(r.config)},
            {"config_hash", r.config_hash},
            {"rows", r.rows.size()},
            {"wall_clock_seconds", r.wall_clock},
            {"task_seconds", r.task_seconds},
            {"metrics", metrics}};
}

/// Writes <dir>/<scenario>_<family>.csv and <dir>/<scenario>_summary.json.
inline std::vector<std::filesystem::path> write_outputs(const RunRecord& r, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    std::vector<std::filesystem::path> files;
    for (const auto& [fam, text] : to_csv(r)) {
        auto p = dir / (r.config.scenario + "_" + fam + ".csv");
        std::ofstream(p, std::ios::binary) << text;
        files.push_back(p);
    }
    auto p = dir / (r.config.scenario + "_summary.json");
    std::ofstream(p) << summarize(r).dump(2) << "\n";
    files.push_back(p);
    return files;
}

}  // namespace spc
