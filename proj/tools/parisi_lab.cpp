// Command-line front end: configuration-driven runs of the mixture checks,
// the 1-D solver and functional, the k-RSB optimizer, the two-dimensional
// bound scans, and the small-N enumeration oracle.
//
// Exit codes: 0 success, 1 usage/config error, 2 hypothesis refusal.

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "parisi/errors.hpp"
#include "parisi/json_io.hpp"

using namespace parisi;

namespace {

struct CliOptions {
    std::string config_path;
    std::string out_path;
    std::string mode;  // empty = take the config's mode
    std::uint64_t seed = 0;
    bool seed_set = false;
    int threads = 0;
    int q_grid = 0;
};

json load_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw config_error("cannot open config file " + path);
    json j;
    try {
        is >> j;
    } catch (const std::exception& e) {
        throw config_error(std::string("config parse error: ") + e.what());
    }
    if (!j.is_object()) throw config_error("config root must be a JSON object");
    return j;
}

int default_threads(const CliOptions& opt) {
    if (opt.threads > 0) return opt.threads;
    if (const char* env = std::getenv("PARISI_LAB_THREADS")) {
        int t = std::atoi(env);
        if (t > 0) return t;
    }
    return 1;
}

GridParams grid_from_json(const json& cfg, const MixtureSpec& mixture, double h,
                          const char* key = "grid") {
    GridParams g = GridParams::defaults(mixture, h);
    if (cfg.contains(key)) {
        const json& jg = cfg.at(key);
        require_known_keys(jg, {"half_width", "dx", "quad_order"}, key);
        if (jg.contains("half_width")) g.half_width = jg.at("half_width").get<double>();
        if (jg.contains("dx")) g.dx = jg.at("dx").get<double>();
        if (jg.contains("quad_order")) g.quad_order = jg.at("quad_order").get<int>();
    }
    return g;
}

PsiGrid grid2d_from_json(const json& cfg, const CouplingSpec& coupling) {
    PsiGrid g = PsiGrid::defaults(coupling);
    if (cfg.contains("grid2d")) {
        const json& jg = cfg.at("grid2d");
        require_known_keys(jg, {"half_width", "dx", "quad_order"}, "grid2d");
        if (jg.contains("half_width")) g.half_width = jg.at("half_width").get<double>();
        if (jg.contains("dx")) g.dx = jg.at("dx").get<double>();
        if (jg.contains("quad_order")) g.quad_order = jg.at("quad_order").get<int>();
    }
    return g;
}

json grid_to_json(const GridParams& g) {
    return json{{"half_width", g.half_width}, {"dx", g.dx}, {"quad_order", g.quad_order}};
}

json grid2d_to_json(const PsiGrid& g) {
    return json{{"half_width", g.half_width}, {"dx", g.dx}, {"quad_order", g.quad_order}};
}

CouplingSpec coupling_from_cfg(const json& cfg, double q_override, bool has_q_override) {
    MixtureSpec xi = mixture_from_json(cfg.at("mixture"));
    MixtureSpec xi0 = cfg.contains("mixture0") ? mixture_from_json(cfg.at("mixture0")) : xi;
    double h = cfg.value("h", 0.0);
    double q = has_q_override ? q_override : cfg.value("q", 0.0);
    return CouplingSpec(xi, xi0, h, q);
}

void emit(const CliOptions& opt, const json& resolved, const std::string& content,
          const json& report) {
    std::cout << json{{"resolved_config", resolved}}.dump(2) << "\n";
    if (!opt.out_path.empty()) {
        write_text_atomic(opt.out_path, content);
    } else {
        std::cout << content;
        if (content.empty() || content.back() != '\n') std::cout << "\n";
    }
    if (!report.is_null() && !opt.out_path.empty()) std::cout << report.dump(2) << "\n";
}

std::string csv_preamble(const json& resolved, std::uint64_t seed) {
    std::ostringstream os;
    os << "# config_hash=" << config_hash(resolved) << " seed=" << seed << "\n";
    return os.str();
}

json with_provenance(json payload, const json& resolved, std::uint64_t seed) {
    payload["config_hash"] = config_hash(resolved);
    payload["seed"] = seed;
    return payload;
}

// ---- subcommand bodies -------------------------------------------------

int run_mixture_check(const CliOptions& opt) {
    json cfg = load_config(opt.config_path);
    require_known_keys(cfg, {"mixture", "mixture0", "h", "q", "grid_n"}, "mixture check");
    int grid_n = cfg.value("grid_n", 2001);
    CouplingSpec cp = coupling_from_cfg(cfg, 0.0, false);

    json resolved = cfg;
    resolved["grid_n"] = grid_n;

    ConvexityReport conv = check_convexity(cp.xi, grid_n);
    ConvexityReport conv0 = check_convexity(cp.xi0, grid_n);
    DominanceReport dom = check_dominance(cp, grid_n);
    json rep{{"convexity", {{"convex", conv.convex}}},
             {"convexity_xi0", {{"convex", conv0.convex}}},
             {"dominance", {{"weak", dom.weak}, {"strict", dom.strict}}}};
    if (conv.witness) rep["convexity"]["witness"] = *conv.witness;
    if (conv0.witness) rep["convexity_xi0"]["witness"] = *conv0.witness;
    if (dom.witness) rep["dominance"]["witness"] = *dom.witness;
    try {
        MonotoneReport mono = check_monotone_ratio(cp.xi, cp.xi0, true, grid_n);
        rep["ratio_reflected"] = json{{"monotone", mono.monotone}};
        if (mono.witness) rep["ratio_reflected"]["witness"] = *mono.witness;
        mono = check_monotone_ratio(cp.xi, cp.xi0, false, grid_n);
        rep["ratio_direct"] = json{{"monotone", mono.monotone}};
        if (mono.witness) rep["ratio_direct"]["witness"] = *mono.witness;
    } catch (const degenerate_denominator_error& e) {
        rep["ratio_error"] = e.what();
    }
    emit(opt, resolved, with_provenance(rep, resolved, 0).dump(2) + "\n", json());
    return 0;
}

int run_parisi_solve(const CliOptions& opt) {
    json cfg = load_config(opt.config_path);
    require_known_keys(cfg, {"mixture", "measure", "h", "grid"}, "parisi solve");
    MixtureSpec mixture = mixture_from_json(cfg.at("mixture"));
    AtomicMeasure measure = measure_from_json(cfg.at("measure"));
    double h = cfg.value("h", 0.0);
    GridParams grid = grid_from_json(cfg, mixture, h);

    json resolved = cfg;
    resolved["h"] = h;
    resolved["grid"] = grid_to_json(grid);

    PhiSolution phi = solve_phi(measure, mixture, h, grid);
    std::ostringstream os;
    write_phi_csv(os, phi, csv_preamble(resolved, 0));
    emit(opt, resolved, os.str(), json());
    return 0;
}

int run_parisi_functional(const CliOptions& opt) {
    json cfg = load_config(opt.config_path);
    require_known_keys(cfg, {"mixture", "measure", "h", "grid"}, "parisi functional");
    MixtureSpec mixture = mixture_from_json(cfg.at("mixture"));
    AtomicMeasure measure = measure_from_json(cfg.at("measure"));
    double h = cfg.value("h", 0.0);
    GridParams grid = grid_from_json(cfg, mixture, h);

    json resolved = cfg;
    resolved["h"] = h;
    resolved["grid"] = grid_to_json(grid);

    double value = parisi_functional(measure, mixture, h, grid);
    json rep{{"value", value}};
    emit(opt, resolved, with_provenance(rep, resolved, 0).dump(2) + "\n", json());
    return 0;
}

int run_parisi_optimize(const CliOptions& opt) {
    json cfg = load_config(opt.config_path);
    require_known_keys(cfg,
                       {"mixture", "h", "grid", "k_max", "improve_tol", "restarts", "seed",
                        "q_grid_n"},
                       "parisi optimize");
    MixtureSpec mixture = mixture_from_json(cfg.at("mixture"));
    double h = cfg.value("h", 0.0);
    GridParams grid = grid_from_json(cfg, mixture, h);
    int k_max = cfg.value("k_max", 3);
    double improve_tol = cfg.value("improve_tol", 1e-5);
    EscalationParams params;
    params.restarts = cfg.value("restarts", 8);
    params.q_grid_n = opt.q_grid > 0 ? opt.q_grid : cfg.value("q_grid_n", 41);
    std::uint64_t seed = opt.seed_set ? opt.seed : cfg.value("seed", 1ULL);

    json resolved = cfg;
    resolved["h"] = h;
    resolved["grid"] = grid_to_json(grid);
    resolved["k_max"] = k_max;
    resolved["improve_tol"] = improve_tol;
    resolved["restarts"] = params.restarts;
    resolved["q_grid_n"] = params.q_grid_n;
    resolved["seed"] = seed;

    ParisiEstimate est = find_parisi_measure(mixture, h, k_max, improve_tol, seed, grid, params);
    emit(opt, resolved, with_provenance(estimate_to_json(est), resolved, seed).dump(2) + "\n",
         json());
    return 0;
}

int run_parisi_criterion(const CliOptions& opt) {
    json cfg = load_config(opt.config_path);
    require_known_keys(cfg, {"mixture", "measure", "h", "grid", "q_grid_n"}, "parisi criterion");
    MixtureSpec mixture = mixture_from_json(cfg.at("mixture"));
    AtomicMeasure measure = measure_from_json(cfg.at("measure"));
    double h = cfg.value("h", 0.0);
    GridParams grid = grid_from_json(cfg, mixture, h);
    int q_grid_n = opt.q_grid > 0 ? opt.q_grid : cfg.value("q_grid_n", 41);

    json resolved = cfg;
    resolved["h"] = h;
    resolved["grid"] = grid_to_json(grid);
    resolved["q_grid_n"] = q_grid_n;

    CriterionReport rep = check_parisi_criterion(measure, mixture, h, q_grid_n, grid, {});
    emit(opt, resolved, with_provenance(criterion_to_json(rep), resolved, 0).dump(2) + "\n",
         json());
    return 0;
}

int run_at_line(const CliOptions& opt) {
    json cfg = load_config(opt.config_path);
    require_known_keys(cfg, {"mixture", "h", "quad_order"}, "at-line");
    MixtureSpec mixture = mixture_from_json(cfg.at("mixture"));
    double h = cfg.value("h", 0.0);
    int quad_order = cfg.value("quad_order", 80);

    json resolved = cfg;
    resolved["h"] = h;
    resolved["quad_order"] = quad_order;

    ATLineReport rep = at_line_check(mixture, h, quad_order);
    emit(opt, resolved, with_provenance(at_line_to_json(rep), resolved, 0).dump(2) + "\n", json());
    return 0;
}

int run_gt_bound(const CliOptions& opt) {
    json cfg = load_config(opt.config_path);
    require_known_keys(cfg, {"mixture", "mixture0", "h", "q", "measure", "lambda", "grid2d"},
                       "gt bound");
    CouplingSpec cp = coupling_from_cfg(cfg, 0.0, false);
    AtomicMeasure measure = measure_from_json(cfg.at("measure"));
    double lambda = cfg.value("lambda", 0.0);
    PsiGrid grid = grid2d_from_json(cfg, cp);

    json resolved = cfg;
    resolved["h"] = cp.h;
    resolved["q"] = cp.q;
    resolved["lambda"] = lambda;
    resolved["grid2d"] = grid2d_to_json(grid);

    double value = gt_bound(measure, cp, lambda, grid);
    json rep{{"Lambda", value}, {"lambda", lambda}, {"q", cp.q}};
    emit(opt, resolved, with_provenance(rep, resolved, 0).dump(2) + "\n", json());
    return 0;
}

int run_gt_scan(const CliOptions& opt) {
    json cfg = load_config(opt.config_path);
    require_known_keys(cfg,
                       {"mixture", "mixture0", "h", "mode", "q_grid_n", "eps_exclusion", "grid",
                        "grid2d", "k_max", "improve_tol", "restarts", "seed", "modified_eps"},
                       "gt scan");
    CouplingSpec cp = coupling_from_cfg(cfg, 0.0, false);
    GridParams grid1d = grid_from_json(cfg, cp.xi, cp.h);
    PsiGrid grid2d = grid2d_from_json(cfg, cp);
    std::string mode_str = !opt.mode.empty() ? opt.mode : cfg.value("mode", "positivity");

    ScanMode mode;
    if (mode_str == "positivity") mode = ScanMode::positivity;
    else if (mode_str == "nonnegativity") mode = ScanMode::nonnegativity;
    else if (mode_str == "chaos") mode = ScanMode::chaos;
    else throw config_error("gt scan: unknown mode '" + mode_str + "'");

    ScanParams params;
    params.q_grid_n = opt.q_grid > 0 ? opt.q_grid : cfg.value("q_grid_n", 101);
    params.eps_exclusion = cfg.value("eps_exclusion", 0.1);
    params.threads = default_threads(opt);
    params.modified_eps = cfg.value("modified_eps", 1.0 / 48.0);
    std::uint64_t seed = opt.seed_set ? opt.seed : cfg.value("seed", 1ULL);
    int k_max = cfg.value("k_max", 3);
    double improve_tol = cfg.value("improve_tol", 1e-5);
    EscalationParams opt_params;
    opt_params.restarts = cfg.value("restarts", 8);

    json resolved = cfg;
    resolved["mode"] = mode_str;
    resolved["q_grid_n"] = params.q_grid_n;
    resolved["eps_exclusion"] = params.eps_exclusion;
    resolved["seed"] = seed;
    resolved["k_max"] = k_max;
    resolved["improve_tol"] = improve_tol;
    resolved["grid"] = grid_to_json(grid1d);
    resolved["grid2d"] = grid2d_to_json(grid2d);

    ParisiEstimate est =
        find_parisi_measure(cp.xi, cp.h, k_max, improve_tol, seed, grid1d, opt_params);
    BoundCurve curve = scan_bound(cp, est, mode, grid1d, grid2d, params);

    std::ostringstream os;
    write_bound_csv(os, curve, csv_preamble(resolved, seed));
    json cert = with_provenance(certificate_to_json(curve), resolved, seed);
    cert["muP"] = estimate_to_json(est);
    emit(opt, resolved, os.str(), cert);
    if (opt.out_path.empty()) std::cout << cert.dump(2) << "\n";
    return 0;
}

int run_oracle_free_energy(const CliOptions& opt) {
    json cfg = load_config(opt.config_path);
    require_known_keys(cfg, {"mixture", "h", "N", "n_disorder", "seed", "measure", "grid"},
                       "oracle free-energy");
    MixtureSpec mixture = mixture_from_json(cfg.at("mixture"), true);
    double h = cfg.value("h", 0.0);
    int N = cfg.value("N", 10);
    int n_disorder = cfg.value("n_disorder", 100);
    std::uint64_t seed = opt.seed_set ? opt.seed : cfg.value("seed", 1ULL);

    json resolved = cfg;
    resolved["h"] = h;
    resolved["N"] = N;
    resolved["n_disorder"] = n_disorder;
    resolved["seed"] = seed;

    Estimate fe = free_energy_exact(mixture, h, N, n_disorder, seed);
    json rep{{"mean", fe.mean}, {"std_err", fe.std_err}};
    if (cfg.contains("measure")) {
        AtomicMeasure measure = measure_from_json(cfg.at("measure"));
        GridParams grid = grid_from_json(cfg, mixture, h);
        GapReport gap = guerra_gap(measure, mixture, h, N, n_disorder, seed, grid);
        rep["guerra_gap"] = json{{"gap", gap.gap}, {"std_err", gap.std_err}, {"ok", gap.ok}};
    }
    emit(opt, resolved, with_provenance(rep, resolved, seed).dump(2) + "\n", json());
    return 0;
}

int run_oracle_overlap(const CliOptions& opt) {
    json cfg = load_config(opt.config_path);
    require_known_keys(cfg, {"mixture", "mixture0", "h", "N", "n_disorder", "seed"},
                       "oracle overlap");
    CouplingSpec cp = coupling_from_cfg(cfg, 0.0, false);
    int N = cfg.value("N", 10);
    int n_disorder = cfg.value("n_disorder", 50);
    std::uint64_t seed = opt.seed_set ? opt.seed : cfg.value("seed", 1ULL);

    json resolved = cfg;
    resolved["N"] = N;
    resolved["n_disorder"] = n_disorder;
    resolved["seed"] = seed;

    OverlapHistogram hist = coupled_overlap_distribution(cp, N, n_disorder, seed);
    std::ostringstream os;
    write_histogram_csv(os, hist, csv_preamble(resolved, seed));
    emit(opt, resolved, os.str(), json());
    return 0;
}

int run_oracle_constrained(const CliOptions& opt) {
    json cfg = load_config(opt.config_path);
    require_known_keys(cfg, {"mixture", "mixture0", "h", "q", "N", "n_disorder", "seed"},
                       "oracle constrained");
    CouplingSpec cp = coupling_from_cfg(cfg, 0.0, false);
    int N = cfg.value("N", 8);
    int n_disorder = cfg.value("n_disorder", 50);
    std::uint64_t seed = opt.seed_set ? opt.seed : cfg.value("seed", 1ULL);

    json resolved = cfg;
    resolved["N"] = N;
    resolved["n_disorder"] = n_disorder;
    resolved["seed"] = seed;

    ConstrainedFE fe = constrained_coupled_free_energy(cp, N, cp.q, n_disorder, seed);
    json rep{{"mean", fe.mean},
             {"std_err", fe.std_err},
             {"pair_count", fe.pair_count},
             {"q", cp.q}};
    emit(opt, resolved, with_provenance(rep, resolved, seed).dump(2) + "\n", json());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"parisi-lab: mixed p-spin mean-field toolkit"};
    app.require_subcommand(1);
    CliOptions opt;

    auto add_common = [&](CLI::App* cmd, bool config_required = true) {
        auto* c = cmd->add_option("--config", opt.config_path, "JSON experiment config");
        if (config_required) c->required();
        cmd->add_option("--out", opt.out_path, "output file (atomic write)");
        cmd->add_option("--seed", opt.seed, "RNG seed override")
            ->each([&](const std::string&) { opt.seed_set = true; });
        cmd->add_option("--threads", opt.threads,
                        "worker threads (default: PARISI_LAB_THREADS or 1)");
        cmd->add_option("--q-grid", opt.q_grid, "probe grid size override");
    };

    auto* mixture = app.add_subcommand("mixture", "mixture function checks");
    auto* mixture_check = mixture->add_subcommand("check", "convexity/ratio/dominance report");
    add_common(mixture_check);

    auto* parisi_cmd = app.add_subcommand("parisi", "one-dimensional solver and optimizer");
    auto* p_solve = parisi_cmd->add_subcommand("solve", "solve the backward equation, CSV dump");
    add_common(p_solve);
    auto* p_funct = parisi_cmd->add_subcommand("functional", "evaluate the functional");
    add_common(p_funct);
    auto* p_opt = parisi_cmd->add_subcommand("optimize", "k-RSB escalation");
    add_common(p_opt);
    auto* p_crit = parisi_cmd->add_subcommand("criterion", "Dirac-probe optimality check");
    add_common(p_crit);

    auto* at = app.add_subcommand("at-line", "Almeida-Thouless consistency check");
    add_common(at);

    auto* gt = app.add_subcommand("gt", "two-dimensional bound");
    auto* gt_b = gt->add_subcommand("bound", "single bound evaluation");
    add_common(gt_b);
    auto* gt_s = gt->add_subcommand("scan", "certificate scan over q");
    add_common(gt_s);
    gt_s->add_option("--mode", opt.mode, "positivity|nonnegativity|chaos");

    auto* oracle = app.add_subcommand("oracle", "small-N exact enumeration");
    auto* o_fe = oracle->add_subcommand("free-energy", "exact free energy (and Guerra gap)");
    add_common(o_fe);
    auto* o_ov = oracle->add_subcommand("overlap", "coupled overlap histogram");
    add_common(o_ov);
    auto* o_cn = oracle->add_subcommand("constrained", "overlap-constrained free energy");
    add_common(o_cn);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;  // --help exits 0, any usage error exits 1
    }

    try {
        if (mixture_check->parsed()) return run_mixture_check(opt);
        if (p_solve->parsed()) return run_parisi_solve(opt);
        if (p_funct->parsed()) return run_parisi_functional(opt);
        if (p_opt->parsed()) return run_parisi_optimize(opt);
        if (p_crit->parsed()) return run_parisi_criterion(opt);
        if (at->parsed()) return run_at_line(opt);
        if (gt_b->parsed()) return run_gt_bound(opt);
        if (gt_s->parsed()) return run_gt_scan(opt);
        if (o_fe->parsed()) return run_oracle_free_energy(opt);
        if (o_ov->parsed()) return run_oracle_overlap(opt);
        if (o_cn->parsed()) return run_oracle_constrained(opt);
        std::cerr << "no subcommand\n";
        return 1;
    } catch (const hypothesis_error& e) {
        std::cout << json{{"refused", e.hypothesis}, {"detail", e.what()}}.dump(2) << "\n";
        return 2;
    } catch (const not_psd_error& e) {
        std::cout << json{{"refused", "psd"}, {"detail", e.what()}, {"witness", e.witness}}.dump(2)
                  << "\n";
        return 2;
    } catch (const invalid_modified_measure_error& e) {
        std::cout << json{{"refused", "ratio"}, {"detail", e.what()}}.dump(2) << "\n";
        return 2;
    } catch (const degenerate_denominator_error& e) {
        std::cout << json{{"refused", "ratio-denominator"}, {"detail", e.what()}}.dump(2) << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
