#pragma once

#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "robustsbm/io.hpp"
#include "robustsbm/pipeline.hpp"
#include "robustsbm/sweep.hpp"
#include "robustsbm/verifiers.hpp"

namespace rsbm {

// master seed pinned for reproducible verifier verdicts
inline constexpr std::uint64_t kPinnedMasterSeed = 912771;

namespace cli_detail {

struct GenerateArgs {
    std::string mode = "sbm";
    int n = 400, k = 2;
    double a = 40, b = 5, alpha = 1.0, lambda = 6.0;
    std::uint64_t seed = 0;
    std::string out = "instance.sbm";
    std::string truth_out = "instance.truth";
};

struct AttackArgs {
    std::string mode = "sbm";
    std::string in, truth;
    std::string attack = "rewire_opposite";
    std::string select = "uniform";
    std::string monotone = "";
    long budget = 0;
    double eps = 0.0;
    double monotone_scale = 0.0; // z2 monotone magnitude
    std::uint64_t seed = 0;
    std::string out = "attacked.sbm";
    std::string truth_out = "attacked.truth";
};

struct StageArgs {
    std::string mode = "sbm2";
    std::string in, truth, labels;
    double a = 40, b = 5, alpha = 1.0, lambda = 6.0, eps = 0.0, chi = 0.0;
    int k = 2;
    std::string preset = "desk";
    std::uint64_t seed = 0;
    std::string out = "labels.txt";
    std::string report;
    // generate-on-the-fly options for `run`
    int n = 400;
    std::string attack = "rewire_opposite";
    std::string monotone = "";
    long budget = 0;
    std::string instance_out;
};

inline int finish_run(const RunReport& report, const Labelling& labels, const StageArgs& args) {
    write_labels(args.out, labels);
    if (!args.report.empty()) {
        std::ofstream out(args.report);
        out << report_to_json(report).dump(2) << "\n";
    }
    if (report.boost_infeasible_seen) {
        std::cerr << "warning: boosting was flagged infeasible in at least one round\n";
        return 2;
    }
    return 0;
}

} // namespace cli_detail

inline int cli_main(int argc, const char* const* argv) {
    CLI::App app{"robust community detection and Z2 synchronization toolkit"};
    app.require_subcommand(1);

    cli_detail::GenerateArgs gen;
    auto* cgen = app.add_subcommand("generate", "generate a pure instance with ground truth");
    cgen->add_option("--mode", gen.mode)->check(CLI::IsMember({"sbm", "z2"}));
    cgen->add_option("--n", gen.n);
    cgen->add_option("--k", gen.k);
    cgen->add_option("--a", gen.a);
    cgen->add_option("--b", gen.b);
    cgen->add_option("--alpha", gen.alpha);
    cgen->add_option("--lambda", gen.lambda);
    cgen->add_option("--seed", gen.seed);
    cgen->add_option("--out", gen.out);
    cgen->add_option("--truth-out", gen.truth_out);

    cli_detail::AttackArgs atk;
    auto* catk = app.add_subcommand("attack", "apply monotone and/or node corruption");
    catk->add_option("--mode", atk.mode)->check(CLI::IsMember({"sbm", "z2"}));
    catk->add_option("--in", atk.in)->required();
    catk->add_option("--truth", atk.truth)->required();
    catk->add_option("--attack", atk.attack);
    catk->add_option("--select", atk.select)->check(CLI::IsMember({"uniform", "boundary"}));
    catk->add_option("--monotone", atk.monotone);
    catk->add_option("--budget", atk.budget);
    catk->add_option("--monotone-scale", atk.monotone_scale);
    catk->add_option("--eps", atk.eps);
    catk->add_option("--seed", atk.seed);
    catk->add_option("--out", atk.out);
    catk->add_option("--truth-out", atk.truth_out);

    cli_detail::StageArgs init_args;
    auto* cinit = app.add_subcommand("init", "initialization SDP + rounding on an instance file");
    cinit->add_option("--mode", init_args.mode)->check(CLI::IsMember({"sbm2", "sbmk", "z2"}));
    cinit->add_option("--in", init_args.in)->required();
    cinit->add_option("--a", init_args.a);
    cinit->add_option("--b", init_args.b);
    cinit->add_option("--k", init_args.k);
    cinit->add_option("--lambda", init_args.lambda);
    cinit->add_option("--chi", init_args.chi);
    cinit->add_option("--preset", init_args.preset)->check(CLI::IsMember({"desk", "theory"}));
    cinit->add_option("--seed", init_args.seed);
    cinit->add_option("--out", init_args.out);

    cli_detail::StageArgs boost_args;
    auto* cboost = app.add_subcommand("boost", "boosting loop from an initial labelling");
    cboost->add_option("--mode", boost_args.mode)->check(CLI::IsMember({"sbm2", "sbmk", "z2"}));
    cboost->add_option("--in", boost_args.in)->required();
    cboost->add_option("--labels", boost_args.labels)->required();
    cboost->add_option("--a", boost_args.a);
    cboost->add_option("--b", boost_args.b);
    cboost->add_option("--k", boost_args.k);
    cboost->add_option("--lambda", boost_args.lambda);
    cboost->add_option("--preset", boost_args.preset)->check(CLI::IsMember({"desk", "theory"}));
    cboost->add_option("--seed", boost_args.seed);
    cboost->add_option("--out", boost_args.out);
    cboost->add_option("--report", boost_args.report);

    cli_detail::StageArgs run_args;
    auto* crun = app.add_subcommand("run", "full pipeline; generates an instance when --in is absent");
    crun->add_option("--mode", run_args.mode)->check(CLI::IsMember({"sbm2", "sbmk", "z2"}));
    crun->add_option("--in", run_args.in);
    crun->add_option("--truth", run_args.truth);
    crun->add_option("--n", run_args.n);
    crun->add_option("--a", run_args.a);
    crun->add_option("--b", run_args.b);
    crun->add_option("--k", run_args.k);
    crun->add_option("--alpha", run_args.alpha);
    crun->add_option("--lambda", run_args.lambda);
    crun->add_option("--eps", run_args.eps);
    crun->add_option("--chi", run_args.chi);
    crun->add_option("--attack", run_args.attack);
    crun->add_option("--monotone", run_args.monotone);
    crun->add_option("--budget", run_args.budget);
    crun->add_option("--preset", run_args.preset)->check(CLI::IsMember({"desk", "theory"}));
    crun->add_option("--seed", run_args.seed);
    crun->add_option("--out", run_args.out);
    crun->add_option("--report", run_args.report);
    crun->add_option("--instance-out", run_args.instance_out);

    std::string verify_claim = "all";
    int verify_trials = 0;
    std::uint64_t verify_seed = kPinnedMasterSeed;
    double verify_n = 0, verify_a = 0, verify_b = 0, verify_eps = 0, verify_lambda = 0;
    std::string verify_csv;
    auto* cverify = app.add_subcommand("verify", "run Monte Carlo claim verifiers");
    cverify->add_option("--claim", verify_claim)
        ->check(CLI::IsMember({"all", "binomial_tail", "rectangle_sums", "spectral_pruning",
                               "resolvability", "z2_rowsums", "majority_attack"}));
    cverify->add_option("--trials", verify_trials);
    cverify->add_option("--seed", verify_seed);
    cverify->add_option("--n", verify_n);
    cverify->add_option("--a", verify_a);
    cverify->add_option("--b", verify_b);
    cverify->add_option("--eps", verify_eps);
    cverify->add_option("--lambda", verify_lambda);
    cverify->add_option("--csv", verify_csv);

    std::vector<std::string> eval_files;
    auto* ceval = app.add_subcommand("eval", "match error between two labelling files");
    ceval->add_option("files", eval_files)->expected(2);

    std::string sweep_plan_path, sweep_out = "sweep.csv";
    int sweep_workers = 0;
    auto* csweep = app.add_subcommand("sweep", "execute an experiment plan, emit CSV");
    csweep->add_option("--plan", sweep_plan_path)->required();
    csweep->add_option("--out", sweep_out);
    csweep->add_option("--workers", sweep_workers);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (cgen->parsed()) {
            Rng rng(gen.seed);
            if (gen.mode == "z2") {
                auto [inst, truth] = gen_z2(gen.n, gen.lambda, rng);
                write_matrix(gen.out, inst.mat, gen.lambda);
                write_truth(gen.truth_out, truth);
            } else {
                InstanceSpec spec;
                spec.n = gen.n;
                spec.k = gen.k;
                spec.a = gen.a;
                spec.b = gen.b;
                spec.alpha = gen.alpha;
                spec.seed = gen.seed;
                auto [g, truth] = gen_sbm(spec, rng);
                write_graph(gen.out, g, gen.k);
                write_truth(gen.truth_out, truth);
            }
            return 0;
        }
        if (catk->parsed()) {
            Rng rng(atk.seed);
            if (atk.mode == "z2") {
                auto [mat, lambda] = read_matrix(atk.in);
                auto truth = read_truth(atk.truth, static_cast<int>(mat.rows()), 2);
                Z2Instance inst{static_cast<int>(mat.rows()), std::move(mat), lambda};
                auto out = corrupt_z2(inst, truth, atk.eps, atk.monotone_scale,
                                      z2_attack_from_string(atk.attack == "rewire_opposite"
                                                                ? "flip_sign"
                                                                : atk.attack),
                                      rng);
                write_matrix(atk.out, out.mat, lambda);
                write_truth(atk.truth_out, truth);
            } else {
                auto [g, k] = read_graph(atk.in);
                auto truth = read_truth(atk.truth, g.n, k);
                Graph cur = g;
                if (!atk.monotone.empty() && atk.budget > 0) {
                    auto res = apply_monotone(cur, truth,
                                              monotone_strategy_from_string(atk.monotone),
                                              atk.budget, rng);
                    cur = std::move(res.graph);
                }
                if (atk.eps > 0.0)
                    cur = apply_node_corruption(cur, truth, node_attack_from_string(atk.attack),
                                                atk.eps, rng,
                                                atk.select == "boundary"
                                                    ? CorruptSelect::boundary
                                                    : CorruptSelect::uniform);
                write_graph(atk.out, cur, k);
                write_truth(atk.truth_out, truth);
            }
            return 0;
        }
        if (cinit->parsed()) {
            PipelineConfig cfg;
            cfg.preset = preset_from_string(init_args.preset);
            cfg.chi = init_args.chi;
            cfg.seed = init_args.seed;
            InitSolverConfig icfg = cfg.init;
            icfg.seed = derive_stream(cfg.seed, 0, 0, "init");
            if (init_args.mode == "z2") {
                auto [mat, lambda] = read_matrix(init_args.in);
                Z2Instance inst{static_cast<int>(mat.rows()), std::move(mat),
                                init_args.lambda > 0 ? init_args.lambda : lambda};
                auto sol = solve_init_z2(inst, inst.lambda, icfg);
                write_labels(init_args.out, sign_round_z2(sol.W).labels);
            } else {
                auto [g, kfile] = read_graph(init_args.in);
                const int k = init_args.mode == "sbmk" ? init_args.k : 2;
                auto sol = solve_init_sbm(g, init_args.a, init_args.b, cfg.chi_or_default(k), icfg);
                KmeansConfig kcfg;
                kcfg.seed = derive_stream(cfg.seed, 0, 0, "kmeans");
                write_labels(init_args.out, kmeans_rows(sol.W, k, kcfg));
                (void)kfile;
            }
            return 0;
        }
        if (cboost->parsed()) {
            PipelineConfig cfg;
            cfg.preset = preset_from_string(boost_args.preset);
            cfg.seed = boost_args.seed;
            RunReport report;
            Labelling init = read_labels(boost_args.labels);
            Labelling out;
            if (boost_args.mode == "z2") {
                auto [mat, lambda] = read_matrix(boost_args.in);
                Z2Instance inst{static_cast<int>(mat.rows()), std::move(mat),
                                boost_args.lambda > 0 ? boost_args.lambda : lambda};
                out = run_z2(inst, inst.lambda, 0.0, cfg, &report, nullptr, &init);
            } else {
                auto [g, kfile] = read_graph(boost_args.in);
                if (boost_args.mode == "sbmk")
                    out = run_sbmk(g, boost_args.a, boost_args.b, 0.0, boost_args.k,
                                   boost_args.alpha, cfg, &report, nullptr, &init);
                else
                    out = run_sbm2(g, boost_args.a, boost_args.b, 0.0, boost_args.alpha, cfg,
                                   &report, nullptr, &init);
                (void)kfile;
            }
            return cli_detail::finish_run(report, out, boost_args);
        }
        if (crun->parsed()) {
            PipelineConfig cfg;
            cfg.preset = preset_from_string(run_args.preset);
            cfg.chi = run_args.chi;
            cfg.seed = derive_stream(run_args.seed, 0, 0, "pipeline");
            cfg.collect_trace = true;
            RunReport report;
            Labelling out;
            GroundTruth truth;
            bool have_truth = false;
            if (run_args.mode == "z2") {
                Z2Instance inst;
                if (run_args.in.empty()) {
                    Rng rng(derive_stream(run_args.seed, 0, 0, "gen"));
                    auto [pure, t] = gen_z2(run_args.n, run_args.lambda, rng);
                    truth = std::move(t);
                    have_truth = true;
                    inst = run_args.eps > 0.0
                               ? corrupt_z2(pure, truth, run_args.eps, 0.0, Z2Attack::flip_sign,
                                            rng)
                               : std::move(pure);
                    if (!run_args.instance_out.empty())
                        write_matrix(run_args.instance_out, inst.mat, run_args.lambda);
                } else {
                    auto [mat, lambda] = read_matrix(run_args.in);
                    inst = Z2Instance{static_cast<int>(mat.rows()), std::move(mat),
                                      run_args.lambda > 0 ? run_args.lambda : lambda};
                    if (!run_args.truth.empty()) {
                        truth = read_truth(run_args.truth, inst.n, 2);
                        have_truth = true;
                    }
                }
                out = run_z2(inst, inst.lambda, run_args.eps, cfg, &report,
                             have_truth ? &truth : nullptr);
                if (have_truth)
                    report.final_error = match_error_signs(out.to_signs(), truth.sign_vector);
            } else {
                Graph g;
                const int k = run_args.mode == "sbmk" ? run_args.k : 2;
                if (run_args.in.empty()) {
                    InstanceSpec spec;
                    spec.n = run_args.n;
                    spec.k = k;
                    spec.a = run_args.a;
                    spec.b = run_args.b;
                    spec.alpha = run_args.alpha;
                    spec.eps = run_args.eps;
                    Rng rng(derive_stream(run_args.seed, 0, 0, "gen"));
                    auto [pure, t] = gen_sbm(spec, rng);
                    truth = std::move(t);
                    have_truth = true;
                    g = std::move(pure);
                    if (!run_args.monotone.empty() && run_args.budget > 0) {
                        auto res = apply_monotone(g, truth,
                                                  monotone_strategy_from_string(run_args.monotone),
                                                  run_args.budget, rng);
                        g = std::move(res.graph);
                    }
                    if (run_args.eps > 0.0)
                        g = apply_node_corruption(g, truth,
                                                  node_attack_from_string(run_args.attack),
                                                  run_args.eps, rng);
                    if (!run_args.instance_out.empty()) write_graph(run_args.instance_out, g, k);
                } else {
                    auto [gfile, kfile] = read_graph(run_args.in);
                    g = std::move(gfile);
                    if (!run_args.truth.empty()) {
                        truth = read_truth(run_args.truth, g.n, kfile);
                        have_truth = true;
                    }
                }
                if (run_args.mode == "sbmk")
                    out = run_sbmk(g, run_args.a, run_args.b, run_args.eps, k, run_args.alpha, cfg,
                                   &report, have_truth ? &truth : nullptr);
                else
                    out = run_sbm2(g, run_args.a, run_args.b, run_args.eps, run_args.alpha, cfg,
                                   &report, have_truth ? &truth : nullptr);
                if (have_truth) {
                    Labelling lt;
                    lt.k = k;
                    lt.ids = truth.partition;
                    report.final_error = match_error(out, lt);
                }
            }
            return cli_detail::finish_run(report, out, run_args);
        }
        if (cverify->parsed()) {
            std::vector<VerifierReport> reports;
            if (verify_claim == "all") {
                reports = run_verifier_suite(verify_seed);
            } else if (verify_claim == "binomial_tail") {
                reports.push_back(verify_binomial_tail(
                    verify_a > 0 ? verify_a : 40, verify_b > 0 ? verify_b : 5,
                    verify_n > 0 ? static_cast<int>(verify_n) : 1000, 0.5, 0.0,
                    verify_trials > 0 ? verify_trials : 100000, verify_seed));
            } else if (verify_claim == "rectangle_sums") {
                const int n = verify_n > 0 ? static_cast<int>(verify_n) : 500;
                reports.push_back(verify_rectangle_sums(n, std::sqrt(40.0 / n), 10, 10,
                                                        verify_trials > 0 ? verify_trials : 50,
                                                        verify_seed));
            } else if (verify_claim == "spectral_pruning") {
                reports.push_back(verify_spectral_pruning(
                    verify_n > 0 ? static_cast<int>(verify_n) : 1000,
                    verify_a > 0 ? verify_a : 20, verify_b > 0 ? verify_b : 5,
                    verify_trials > 0 ? verify_trials : 30, verify_seed));
            } else if (verify_claim == "resolvability") {
                reports.push_back(verify_resolvability(
                    verify_a > 0 ? verify_a : 60, verify_b > 0 ? verify_b : 10,
                    verify_n > 0 ? static_cast<int>(verify_n) : 400, 1.5, 0.05, 0.1,
                    verify_trials > 0 ? verify_trials : 50, verify_seed));
            } else if (verify_claim == "z2_rowsums") {
                reports.push_back(verify_z2_rowsums(
                    verify_n > 0 ? static_cast<int>(verify_n) : 300,
                    verify_lambda > 0 ? verify_lambda : 6.0, 2.0, 0.05,
                    verify_trials > 0 ? verify_trials : 50, verify_seed));
            } else if (verify_claim == "majority_attack") {
                reports.push_back(verify_majority_attack(
                    verify_n > 0 ? static_cast<int>(verify_n) : 2000,
                    verify_a > 0 ? verify_a : 110, verify_b > 0 ? verify_b : 90,
                    verify_eps > 0 ? verify_eps : 0.3, verify_trials > 0 ? verify_trials : 30,
                    verify_seed));
            }
            bool all_pass = true;
            std::ostringstream csv;
            csv << "claim_id,trials,pass_rate,threshold,verdict\n";
            for (const auto& r : reports) {
                std::cout << r.text();
                csv << r.csv_line() << "\n";
                all_pass = all_pass && r.verdict;
            }
            if (!verify_csv.empty()) {
                std::ofstream out(verify_csv);
                out << csv.str();
            } else {
                std::cout << csv.str();
            }
            return all_pass ? 0 : 3;
        }
        if (ceval->parsed()) {
            auto a = read_labels(eval_files[0]);
            auto b = read_labels(eval_files[1]);
            const int k = std::max(a.k, b.k);
            a.k = b.k = k;
            std::printf("%.10g\n", match_error(a, b));
            return 0;
        }
        if (csweep->parsed()) {
            std::ifstream in(sweep_plan_path);
            if (!in) throw std::runtime_error("cannot open plan: " + sweep_plan_path);
            nlohmann::json j;
            in >> j;
            auto plan = ExperimentPlan::from_json(j);
            auto result = run_sweep(plan, sweep_workers);
            std::ofstream out(sweep_out);
            out << sweep_csv_header() << "\n";
            for (const auto& row : result.rows) out << sweep_csv_line(row) << "\n";
            if (result.spearman_eps_valid)
                out << "# spearman_eps=" << result.spearman_eps << "\n";
            if (result.spearman_c_valid) out << "# spearman_c=" << result.spearman_c << "\n";
            std::cout << "rows=" << result.rows.size() << " failures=" << result.failures;
            if (result.spearman_eps_valid) std::cout << " spearman_eps=" << result.spearman_eps;
            if (result.spearman_c_valid) std::cout << " spearman_c=" << result.spearman_c;
            std::cout << "\n";
            return 0;
        }
    } catch (const ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}

} // namespace rsbm
