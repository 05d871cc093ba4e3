#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "robustsbm/boost_sdp.hpp"
#include "robustsbm/init_sdp.hpp"
#include "robustsbm/instance.hpp"
#include "robustsbm/rounding.hpp"
#include "robustsbm/stats.hpp"

namespace rsbm {

enum class Preset { theory, desk };

inline Preset preset_from_string(const std::string& s) {
    if (s == "theory") return Preset::theory;
    if (s == "desk") return Preset::desk;
    throw std::invalid_argument("unknown preset: " + s);
}

// Desk chi defaults, frozen by calibration: the k=2 value keeps the exact
// community-indicator witness feasible at (n=300, a=30, b=5); the k>=3 value
// keeps the per-pair cross-weight cap tight enough for k-means separation.
inline double desk_chi_default(int k) { return k <= 2 ? 1.35 : 1.2; }

struct PipelineConfig {
    Preset preset = Preset::desk;
    double chi = 0.0;          // <= 0: preset default
    InitSolverConfig init;
    KmeansConfig kmeans;
    int max_rounds = 0;        // 0: the preset round count
    int boost_inner_iters = 0; // 0: BoostParams default
    std::uint64_t seed = 0;
    bool collect_trace = false;

    double chi_or_default(int k = 2) const {
        if (chi > 0.0) return chi;
        return preset == Preset::desk ? desk_chi_default(k) : 1.0;
    }
};

struct RunReport {
    std::string mode;
    double a = 0, b = 0, lambda = 0, eps = 0, alpha = 1;
    int n = 0, k = 2;
    std::string preset;
    double snr_c = 0.0;
    bool early_exit = false;
    bool zeta_clamped = false;
    double init_objective = 0.0;
    bool init_feasible = false;
    double init_error = -1.0;  // vs truth when supplied
    double final_error = -1.0;
    double rho_final = 0.0;
    int rounds_used = 0;
    bool boost_infeasible_seen = false;
    std::vector<std::string> warnings;
    RoundTrace trace;
};

namespace detail {

inline BoostParams pipeline_boost_params(const PipelineConfig& cfg, const std::string& mode,
                                         double a, double b, int k, double alpha,
                                         double lambda, int n, RunReport* report) {
    BoostParams p;
    if (cfg.preset == Preset::theory) {
        if (mode == "sbm2")
            p = BoostParams::theory_sbm(a, b, alpha, cfg.chi_or_default(2), cfg.seed);
        else if (mode == "sbmk")
            p = BoostParams::theory_sbm_k(a, b, k, alpha, cfg.chi_or_default(k), cfg.seed);
        else
            p = BoostParams::theory_z2(lambda, n, cfg.seed);
        if (p.zeta_clamped && report) {
            report->zeta_clamped = true;
            report->warnings.push_back(
                "theory preset: zeta exceeded 1 and was clamped; the paper's regime needs far "
                "larger signal-to-noise ratio");
        }
    } else {
        if (mode == "z2")
            p = BoostParams::desk_z2(lambda, n, cfg.seed);
        else
            p = BoostParams::desk_sbm(a, b, cfg.seed);
        p.alpha = alpha;
    }
    if (cfg.max_rounds > 0) p.max_rounds = cfg.max_rounds;
    if (cfg.boost_inner_iters > 0) p.inner_iters = cfg.boost_inner_iters;
    return p;
}

inline void fill_trace_summary(const RoundTrace& trace, RunReport* report) {
    if (!report) return;
    report->trace = trace;
    report->rounds_used = static_cast<int>(trace.rows.size());
    for (const auto& r : trace.rows) {
        report->rho_final = r.rho;
        if (!r.feasible) report->boost_infeasible_seen = true;
    }
}

} // namespace detail

// Algorithm flow for two communities: demean, initialization SDP + k-means,
// the eps >= 1/sqrt(C) early exit, then the boosting loop on signs.
inline Labelling run_sbm2(const Graph& g, double a, double b, double eps, double alpha,
                          const PipelineConfig& cfg, RunReport* report = nullptr,
                          const GroundTruth* truth = nullptr,
                          const Labelling* init_override = nullptr) {
    if (!(b < a)) throw std::invalid_argument("run_sbm2: need b < a");
    const double C = snr(a, b);
    if (report) {
        report->mode = "sbm2";
        report->a = a;
        report->b = b;
        report->eps = eps;
        report->alpha = alpha;
        report->n = g.n;
        report->k = 2;
        report->snr_c = C;
        report->preset = cfg.preset == Preset::desk ? "desk" : "theory";
    }
    DemeanedMatrix A_hat = demean(g, a, b);

    Labelling init;
    if (init_override) {
        init = *init_override;
    } else {
        InitSolverConfig icfg = cfg.init;
        icfg.seed = derive_stream(cfg.seed, 0, 0, "init");
        auto sol = solve_init_sbm(g, a, b, cfg.chi_or_default(2), icfg);
        KmeansConfig kcfg = cfg.kmeans;
        kcfg.seed = derive_stream(cfg.seed, 0, 0, "kmeans");
        init = kmeans_rows(sol.W, 2, kcfg);
        if (report) {
            report->init_objective = sol.objective;
            report->init_feasible = sol.feasible_found;
        }
    }
    if (report && truth) {
        Labelling lt;
        lt.k = 2;
        lt.ids = truth->partition;
        report->init_error = match_error(init, lt);
    }

    if (eps >= 1.0 / std::sqrt(C)) {
        if (report) report->early_exit = true;
        return init;
    }

    BoostParams p = detail::pipeline_boost_params(cfg, "sbm2", a, b, 2, alpha, 0.0, g.n, report);
    Rng rng(derive_stream(cfg.seed, 0, 0, "boost"));
    RoundTrace trace;
    Labelling lt;
    const Labelling* truth_labels = nullptr;
    if (truth) {
        lt.k = 2;
        lt.ids = truth->partition;
        truth_labels = &lt;
    }
    Labelling out = boost_loop(A_hat.mat, init, p, BoostMode::two, rng, truth_labels,
                               cfg.collect_trace || report ? &trace : nullptr);
    detail::fill_trace_summary(trace, report);
    return out;
}

inline Labelling run_sbmk(const Graph& g, double a, double b, double eps, int k, double alpha,
                          const PipelineConfig& cfg, RunReport* report = nullptr,
                          const GroundTruth* truth = nullptr,
                          const Labelling* init_override = nullptr) {
    if (k < 3) throw std::invalid_argument("run_sbmk: k >= 3");
    if (!(b < a)) throw std::invalid_argument("run_sbmk: need b < a");
    const double C = snr(a, b);
    if (report) {
        report->mode = "sbmk";
        report->a = a;
        report->b = b;
        report->eps = eps;
        report->alpha = alpha;
        report->n = g.n;
        report->k = k;
        report->snr_c = C;
        report->preset = cfg.preset == Preset::desk ? "desk" : "theory";
    }
    DemeanedMatrix A_hat = demean(g, a, b);

    Labelling init;
    if (init_override) {
        init = *init_override;
    } else {
        InitSolverConfig icfg = cfg.init;
        icfg.seed = derive_stream(cfg.seed, 0, 0, "init");
        auto sol = solve_init_sbm(g, a, b, cfg.chi_or_default(k), icfg);
        KmeansConfig kcfg = cfg.kmeans;
        kcfg.seed = derive_stream(cfg.seed, 0, 0, "kmeans");
        init = kmeans_rows(sol.W, k, kcfg);
        if (report) {
            report->init_objective = sol.objective;
            report->init_feasible = sol.feasible_found;
        }
    }
    if (report && truth) {
        Labelling lt;
        lt.k = k;
        lt.ids = truth->partition;
        report->init_error = match_error(init, lt);
    }

    if (eps >= 1.0 / std::sqrt(C)) {
        if (report) report->early_exit = true;
        return init;
    }

    BoostParams p = detail::pipeline_boost_params(cfg, "sbmk", a, b, k, alpha, 0.0, g.n, report);
    Rng rng(derive_stream(cfg.seed, 0, 0, "boost"));
    RoundTrace trace;
    Labelling lt;
    const Labelling* truth_labels = nullptr;
    if (truth) {
        lt.k = k;
        lt.ids = truth->partition;
        truth_labels = &lt;
    }
    Labelling out = boost_loop(A_hat.mat, init, p, BoostMode::k, rng, truth_labels,
                               cfg.collect_trace || report ? &trace : nullptr);
    detail::fill_trace_summary(trace, report);
    return out;
}

// Z2 flow: initialization SDP + sign rounding, eps >= 1/lambda early exit,
// then boosting on the raw observation matrix (no demeaning).
inline Labelling run_z2(const Z2Instance& inst, double lambda, double eps,
                        const PipelineConfig& cfg, RunReport* report = nullptr,
                        const GroundTruth* truth = nullptr,
                        const Labelling* init_override = nullptr) {
    if (!(lambda > 0)) throw std::invalid_argument("run_z2: lambda > 0");
    if (report) {
        report->mode = "z2";
        report->lambda = lambda;
        report->eps = eps;
        report->n = inst.n;
        report->k = 2;
        report->preset = cfg.preset == Preset::desk ? "desk" : "theory";
    }

    Labelling init;
    if (init_override) {
        init = *init_override;
    } else {
        InitSolverConfig icfg = cfg.init;
        icfg.seed = derive_stream(cfg.seed, 0, 0, "init");
        auto sol = solve_init_z2(inst, lambda, icfg);
        auto rounded = sign_round_z2(sol.W);
        init = rounded.labels;
        if (report) {
            report->init_objective = sol.objective;
            report->init_feasible = sol.feasible_found;
            if (rounded.degenerate) report->warnings.push_back("sign rounding was degenerate");
        }
    }
    if (report && truth) {
        report->init_error = match_error_signs(init.to_signs(), truth->sign_vector);
    }

    if (eps >= 1.0 / lambda) {
        if (report) report->early_exit = true;
        return init;
    }

    BoostParams p =
        detail::pipeline_boost_params(cfg, "z2", 0.0, 0.0, 2, 1.0, lambda, inst.n, report);
    Rng rng(derive_stream(cfg.seed, 0, 0, "boost"));
    RoundTrace trace;
    Labelling lt;
    const Labelling* truth_labels = nullptr;
    if (truth) {
        lt = Labelling::from_signs(truth->sign_vector);
        truth_labels = &lt;
    }
    Labelling out = boost_loop(inst.mat, init, p, BoostMode::z2, rng, truth_labels,
                               cfg.collect_trace || report ? &trace : nullptr);
    detail::fill_trace_summary(trace, report);
    return out;
}

} // namespace rsbm
