#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <thread>

#include "spc/completion/completion.hpp"
#include "spc/experiment/experiment.hpp"
#include "spc/io/bundle.hpp"
#include "spc/io/matrix_market.hpp"
#include "spc/io/report.hpp"
#include "spc/model/mask.hpp"
#include "spc/nb/nonbacktracking.hpp"
#include "spc/oracles/tree.hpp"

using namespace spc;

namespace {

constexpr int kConfigError = 2;

struct Globals {
    std::uint64_t seed = 1;
    int threads = 1;
    std::string out;
};

void emit(const json& j, const std::string& path) {
    if (path.empty() || path == "-") {
        std::cout << j.dump(2) << "\n";
        return;
    }
    std::ofstream f(path);
    if (!f) throw ConfigError("cannot write " + path);
    f << j.dump(2) << "\n";
}

// Overlaps of unit vectors against the truth's leading vectors.
json overlaps(const Mat& est, const Mat& truth) {
    json a = json::array();
    for (Index i = 0; i < est.cols(); ++i) {
        json row = json::array();
        for (Index k = 0; k < truth.cols(); ++k) row.push_back(num(std::abs(est.col(i).dot(truth.col(k)))));
        a.push_back(row);
    }
    return a;
}

int cmd_generate(const Globals& g, const std::string& preset, Index m, Index n, const std::vector<double>& values,
                 bool symmetric, const std::string& sampler, double obs_d, const std::string& obs_path,
                 const std::string& mask_kind) {
    GroundTruth gt;
    if (preset == "er") {
        gt = erdos_renyi_truth(n);
    } else if (preset == "two_block") {
        if (values.size() != 2) throw ConfigError("two_block needs --values mu1,mu2");
        gt = two_block_truth(n, values[0], values[1]);
    } else if (preset == "random") {
        if (values.empty()) throw ConfigError("--values required");
        gt = generate_ground_truth({symmetric ? n : m, n, values, symmetric, Sampler::parse(sampler)}, g.seed);
    } else {
        throw ConfigError("unknown preset '" + preset + "' (random | er | two_block)");
    }
    if (g.out.empty()) throw ConfigError("--out required");
    write_bundle(g.out, gt);
    if (obs_d > 0) {
        if (obs_path.empty()) throw ConfigError("--obs required with --observe-d");
        if (mask_kind != "directed" && mask_kind != "symmetric") throw ConfigError("--mask: directed | symmetric");
        if (mask_kind == "symmetric" && !gt.symmetric) throw ConfigError("--mask symmetric needs a symmetric truth");
        const auto mask = mask_kind == "symmetric" ? sample_symmetric_mask(gt.n, obs_d, g.seed)
                                                   : sample_mask(gt.m, gt.n, obs_d, g.seed);
        write_matrix_market(obs_path, observe_raw(gt, mask));
    }
    return 0;
}

int cmd_complete(const Globals& g, const std::string& input, double d, int rank, const std::string& method,
                 const std::string& truth) {
    const auto T = read_matrix_market(input);
    CompleteOptions opt;
    opt.rank = rank;
    opt.seed = g.seed;
    opt.parallel = g.threads > 1;
    const auto cm = complete(T, d, parse_method(method), opt);
    json j{{"method", method_name(cm.method)},
           {"d", d},
           {"seed", g.seed},
           {"rank", cm.rank},
           {"requested_rank", cm.requested_rank},
           {"weights", num_list(cm.weights)},
           {"x_bulk_radius", num(cm.x_bulk_radius)},
           {"y_bulk_radius", num(cm.y_bulk_radius)},
           {"warnings", cm.warnings}};
    json comps = json::array();
    for (const auto& c : cm.components)
        comps.push_back({{"nu", num(c.nu)},
                         {"eta", num(c.eta)},
                         {"sigma_hat", num(c.sigma_hat)},
                         {"t_x", num(c.t_x)},
                         {"t_y", num(c.t_y)},
                         {"c1_sim", num(c.c.c1_sim)},
                         {"c2_sim", num(c.c.c2_sim)},
                         {"c1_avg", num(c.c.c1_avg)},
                         {"c2_avg", num(c.c.c2_avg)},
                         {"w_sim", num(c.w_sim)},
                         {"w_avg", num(c.w_avg)},
                         {"converged", c.converged}});
    j["components"] = comps;
    json xs = json::array(), ys = json::array();
    for (auto z : cm.x_values) xs.push_back(cplx_json(z));
    for (auto z : cm.y_values) ys.push_back(cplx_json(z));
    j["x_values"] = xs;
    j["y_values"] = ys;
    if (!truth.empty()) {
        const auto gt = read_bundle(truth);
        if (gt.m != T.rows() || gt.n != T.cols()) throw ConfigError("truth bundle does not match the observation");
        const double err = frobenius_error_sq(gt, cm);
        j["truth"] = {{"left_overlaps", overlaps(cm.left, gt.left)},
                      {"right_overlaps", overlaps(cm.right, gt.right)},
                      {"frobenius_error_sq", num(err)},
                      {"relative_error", num(std::sqrt(err / gt.frobenius_norm_sq()))}};
    }
    emit(j, g.out);
    return 0;
}

int cmd_spectrum(const Globals& g, const std::string& input, double d, int k, const std::string& truth) {
    const auto T = read_matrix_market(input);
    if (T.rows() != T.cols()) throw ConfigError("spectrum: observation must be square");
    const SparseMatrix A = T.scaled(double(T.cols()) / d);
    ArnoldiOptions ao;
    ao.seed = g.seed;
    const auto rep = square_spectrum(A, k, ao);
    json pairs = json::array();
    for (const auto& p : rep.pairs) pairs.push_back(to_json(p));
    json j{{"d", d}, {"k", k}, {"bulk_radius", num(rep.bulk_radius_estimate)}, {"iterations", rep.iterations},
           {"matvecs", rep.matvecs}, {"pairs", pairs}};
    if (!truth.empty()) {
        const auto gt = read_bundle(truth);
        if (gt.n != T.cols() || gt.m != T.rows()) throw ConfigError("truth bundle does not match the observation");
        Mat right(T.cols(), rep.pairs.size());
        for (std::size_t i = 0; i < rep.pairs.size(); ++i) right.col(i) = detail::unit_real(rep.pairs[i].right);
        j["truth_overlaps"] = overlaps(right, gt.right);
    }
    emit(j, g.out);
    return 0;
}

int cmd_nb_spectrum(const Globals& g, const std::string& input, double dbar, int k, const std::string& truth) {
    const auto T = read_matrix_market(input);
    const auto op = nb_operator(T, dbar);
    ArnoldiOptions ao;
    ao.seed = g.seed;
    const auto s = nb_spectrum(op, k, ao);
    std::optional<GroundTruth> gt;
    if (!truth.empty()) {
        gt = read_bundle(truth);
        if (gt->n != T.cols() || !gt->symmetric) throw ConfigError("truth bundle must be symmetric and match");
    }
    json pairs = json::array();
    for (std::size_t i = 0; i < s.report.pairs.size(); ++i) {
        json p = to_json(s.report.pairs[i]);
        p["admissible"] = bool(s.admissible[i]);
        const auto& lw = s.lowered[i];
        if (lw.phi_hat.size() > 0) {
            p["hat_check_overlap"] = num(lw.hat_check_overlap);
            if (gt) {
                json ov = json::array();
                for (Index r = 0; r < gt->rank(); ++r) ov.push_back(num(std::abs(lw.phi_hat.dot(gt->phi(r)))));
                p["phi_hat_truth_overlaps"] = ov;
            }
        }
        pairs.push_back(p);
    }
    json j{{"dbar", dbar},
           {"k", k},
           {"edges", op.dim()},
           {"bulk_radius", num(s.report.bulk_radius_estimate)},
           {"pairs", pairs}};
    emit(j, g.out);
    return 0;
}

int cmd_predict(const Globals& g, const std::string& truth, double d, const std::string& variant,
                const std::string& truncation, int count) {
    const auto gt = read_bundle(truth);
    PredictOptions po;
    po.policy = parse_truncation(truncation);
    po.count = count;
    emit(predict(gt, d, parse_variant(variant), po), g.out);
    return 0;
}

int cmd_oracle_tree(const Globals& g, const std::string& truth, double d, int t, long samples, Index x, int i, int j) {
    const auto gt = read_bundle(truth);
    const auto r = mc_tree_moments(gt, d, x, i, j, t, samples, g.seed, g.threads);
    json out{{"d", d},
             {"t", r.t},
             {"x", r.x},
             {"i", r.i},
             {"j", r.j},
             {"samples", r.samples},
             {"seed", g.seed},
             {"tc1", {{"mean", num(r.mean_f)}, {"se", num(r.se_f)}, {"closed_form", num(r.tc1)}, {"z", num(r.z_tc1())}}},
             {"tc3", {{"mean", num(r.mean_ff)}, {"se", num(r.se_ff)}, {"closed_form", num(r.tc3)}, {"z", num(r.z_tc3())}}},
             {"tc5",
              {{"mean", num(r.mean_F2)},
               {"se", num(r.se_F2)},
               {"closed_form", num(r.tc5_derived)},
               {"z", num(r.z_tc5(false))},
               {"printed_closed_form", num(r.tc5_printed)},
               {"printed_z", num(r.z_tc5(true))}}}};
    emit(out, g.out);
    return 0;
}

int cmd_experiment(const Globals& g, const std::string& config, const std::string& scenario, bool dump) {
    ExperimentConfig cfg;
    if (!config.empty()) cfg = read_config(config);
    else if (!scenario.empty()) cfg = default_config(scenario);
    else throw ConfigError("experiment: --config or --scenario required; registered: " + registry_names());
    if (!config.empty() && !scenario.empty() && scenario != cfg.scenario)
        throw ConfigError("experiment: --scenario disagrees with the config file");
    if (!g.out.empty()) cfg.output_dir = g.out;
    if (dump) {
        std::cout << to_json(cfg).dump(2) << "\n";
        return 0;
    }
    const auto rec = run_experiment(cfg, g.threads);
    for (const auto& p : write_outputs(rec, cfg.output_dir)) std::cerr << "wrote " << p.string() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"spectral completion and detection toolkit"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    app.add_option("--seed", g.seed, "random seed")->capture_default_str();
    app.add_option("--threads", g.threads, "worker threads")->capture_default_str()->check(CLI::PositiveNumber);
    app.add_option("--out", g.out, "output path (file, bundle stem, or directory)");

    auto* gen = app.add_subcommand("generate", "write a ground-truth bundle, optionally an observation");
    std::string preset = "random", sampler = "gaussian", obs_path;
    Index gm = 0, gn = 0;
    std::vector<double> values;
    bool symmetric = false;
    double obs_d = 0;
    gen->add_option("--preset", preset, "random | er | two_block")->capture_default_str();
    gen->add_option("--m", gm, "rows (rectangular)");
    gen->add_option("--n", gn, "columns")->required();
    gen->add_option("--values", values, "sigma or signed mu values")->delimiter(',');
    gen->add_flag("--symmetric", symmetric, "symmetric truth");
    gen->add_option("--sampler", sampler, "entry sampler")->capture_default_str();
    gen->add_option("--observe-d", obs_d, "also sample an observation at this d");
    gen->add_option("--obs", obs_path, "observation Matrix Market path");
    std::string mask_kind = "directed";
    gen->add_option("--mask", mask_kind, "directed | symmetric (symmetric for nb-spectrum)")->capture_default_str();

    auto* comp = app.add_subcommand("complete", "randomized asymmetric completion");
    std::string input, method = "avg", truth;
    double d = 0;
    int rank = -1;
    comp->add_option("--input", input, "observation (Matrix Market, raw P.M entries)")->required()->check(CLI::ExistingFile);
    comp->add_option("--d", d, "mean degree")->required();
    comp->add_option("--rank", rank, "target rank (-1: admissible count)")->capture_default_str();
    comp->add_option("--method", method, "sim | avg | svd")->capture_default_str();
    comp->add_option("--truth", truth, "truth bundle for overlaps");

    auto* spec = app.add_subcommand("spectrum", "top eigenvalues of A = (n/d) P.M");
    int k = 4;
    spec->add_option("--input", input)->required()->check(CLI::ExistingFile);
    spec->add_option("--d", d)->required();
    spec->add_option("--k", k)->capture_default_str();
    spec->add_option("--truth", truth);

    auto* nbs = app.add_subcommand("nb-spectrum", "weighted non-backtracking spectrum");
    double dbar = 0;
    nbs->add_option("--input", input)->required()->check(CLI::ExistingFile);
    nbs->add_option("--dbar", dbar)->required();
    nbs->add_option("--k", k)->capture_default_str();
    nbs->add_option("--truth", truth);

    auto* pred = app.add_subcommand("predict", "theory quantities from a truth bundle");
    std::string variant = "square", truncation = "converged";
    int count = -1;
    pred->add_option("--truth", truth)->required();
    pred->add_option("--d", d)->required();
    pred->add_option("--variant", variant, "square | nb | rectangular")->capture_default_str();
    pred->add_option("--truncation", truncation, "converged | fixed")->capture_default_str();
    pred->add_option("--count", count, "indices to tabulate (-1: r0)")->capture_default_str();

    auto* tree = app.add_subcommand("oracle-tree", "Monte-Carlo tree moments");
    int t = 1, ti = 0, tj = 0;
    long samples = 100000;
    Index tx = 0;
    tree->add_option("--truth", truth)->required();
    tree->add_option("--d", d)->required();
    tree->add_option("--t", t)->required();
    tree->add_option("--samples", samples)->capture_default_str();
    tree->add_option("--x", tx, "root mark")->capture_default_str();
    tree->add_option("--i", ti)->capture_default_str();
    tree->add_option("--j", tj)->capture_default_str();

    auto* exp = app.add_subcommand("experiment", "seeded scenario runs to CSV");
    std::string config, scenario;
    bool dump = false;
    exp->add_option("--config", config, "JSON config file");
    exp->add_option("--scenario", scenario, "scenario with default settings");
    exp->add_flag("--dump-config", dump, "print the resolved config and exit");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kConfigError;
    }

    try {
        if (*gen) return cmd_generate(g, preset, gm, gn, values, symmetric, sampler, obs_d, obs_path, mask_kind);
        if (*comp) return cmd_complete(g, input, d, rank, method, truth);
        if (*spec) return cmd_spectrum(g, input, d, k, truth);
        if (*nbs) return cmd_nb_spectrum(g, input, dbar, k, truth);
        if (*pred) return cmd_predict(g, truth, d, variant, truncation, count);
        if (*tree) return cmd_oracle_tree(g, truth, d, t, samples, tx, ti, tj);
        if (*exp) return cmd_experiment(g, config, scenario, dump);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code(e);
    }
    return 0;
}
