#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "robustsbm/instance.hpp"
#include "robustsbm/pipeline.hpp"
#include "robustsbm/rounding.hpp"

namespace rsbm {

// One sweep cell per (eps, (a,b)) combination; replicates share the cell and
// derive their RNG streams from (master seed, cell index, replicate index).
struct ExperimentPlan {
    int schema_version = 1;
    std::string mode = "sbm2"; // sbm2 | sbmk | z2
    int n = 400;
    int k = 2;
    double alpha = 1.0;
    std::string preset = "desk";
    std::string attack = "rewire_opposite";
    std::string monotone = "";  // empty: no monotone noise
    long monotone_budget = 0;
    std::vector<double> eps_grid{0.0};
    std::vector<std::pair<double, double>> ab_pairs{{40.0, 5.0}};
    std::vector<double> lambda_grid{6.0}; // z2 mode only
    int replicates = 1;
    std::uint64_t master_seed = 0;

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["schema_version"] = schema_version;
        j["mode"] = mode;
        j["n"] = n;
        j["k"] = k;
        j["alpha"] = alpha;
        j["preset"] = preset;
        j["attack"] = attack;
        j["monotone"] = monotone;
        j["monotone_budget"] = monotone_budget;
        j["eps_grid"] = eps_grid;
        nlohmann::json ab = nlohmann::json::array();
        for (auto& [a, b] : ab_pairs) ab.push_back({a, b});
        j["ab_pairs"] = ab;
        j["lambda_grid"] = lambda_grid;
        j["replicates"] = replicates;
        j["master_seed"] = master_seed;
        return j;
    }

    static ExperimentPlan from_json(const nlohmann::json& j) {
        ExperimentPlan p;
        p.schema_version = j.at("schema_version").get<int>();
        if (p.schema_version != 1)
            throw std::invalid_argument("ExperimentPlan: unsupported schema_version");
        p.mode = j.at("mode").get<std::string>();
        p.n = j.at("n").get<int>();
        p.k = j.value("k", 2);
        p.alpha = j.value("alpha", 1.0);
        p.preset = j.value("preset", std::string("desk"));
        p.attack = j.value("attack", std::string("rewire_opposite"));
        p.monotone = j.value("monotone", std::string(""));
        p.monotone_budget = j.value("monotone_budget", 0L);
        p.eps_grid = j.at("eps_grid").get<std::vector<double>>();
        p.ab_pairs.clear();
        if (j.contains("ab_pairs"))
            for (const auto& ab : j.at("ab_pairs"))
                p.ab_pairs.emplace_back(ab.at(0).get<double>(), ab.at(1).get<double>());
        if (j.contains("lambda_grid")) p.lambda_grid = j.at("lambda_grid").get<std::vector<double>>();
        p.replicates = j.at("replicates").get<int>();
        p.master_seed = j.at("master_seed").get<std::uint64_t>();
        return p;
    }
};

struct SweepRow {
    std::string mode;
    int n = 0, k = 0;
    double a = 0, b = 0, eps = 0;
    std::string attack, preset;
    std::uint64_t seed = 0;
    std::string replicate; // index, or "agg" for the per-cell aggregate row
    double error = 0, rho_final = 0;
    int rounds_used = 0;
    double wall_ms = 0;
    double error_iqr = 0; // filled on aggregate rows
    bool failed = false;
    std::string fail_reason;
    long cell = 0;
};

inline const char* sweep_csv_header() {
    return "mode,n,k,a,b,eps,attack,preset,seed,replicate,error,rho_final,rounds_used,wall_ms,"
           "error_iqr";
}

inline std::string sweep_csv_line(const SweepRow& r) {
    std::ostringstream os;
    os << r.mode << "," << r.n << "," << r.k << "," << r.a << "," << r.b << "," << r.eps << ","
       << r.attack << "," << r.preset << "," << r.seed << "," << r.replicate << ",";
    if (r.failed)
        os << "NA";
    else
        os << r.error;
    os << "," << r.rho_final << "," << r.rounds_used << "," << r.wall_ms << "," << r.error_iqr;
    return os.str();
}

struct SweepResult {
    std::vector<SweepRow> rows;       // data rows then aggregate rows, cell order
    double spearman_eps = 0.0;        // median error vs eps (fixed (a,b))
    double spearman_c = 0.0;          // median error vs C (fixed eps)
    bool spearman_eps_valid = false;
    bool spearman_c_valid = false;
    int failures = 0;
};

namespace detail {

inline std::vector<double> ranks_of(const std::vector<double>& v) {
    const size_t n = v.size();
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) { return v[a] < v[b]; });
    std::vector<double> rank(n, 0.0);
    size_t i = 0;
    while (i < n) {
        size_t j = i;
        while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
        const double avg = 0.5 * (i + j) + 1.0; // average rank for ties
        for (size_t t = i; t <= j; ++t) rank[order[t]] = avg;
        i = j + 1;
    }
    return rank;
}

inline double spearman(const std::vector<double>& x, const std::vector<double>& y) {
    const size_t n = x.size();
    if (n < 2) return 0.0;
    auto rx = ranks_of(x), ry = ranks_of(y);
    double mx = 0, my = 0;
    for (size_t i = 0; i < n; ++i) {
        mx += rx[i];
        my += ry[i];
    }
    mx /= n;
    my /= n;
    double num = 0, dx = 0, dy = 0;
    for (size_t i = 0; i < n; ++i) {
        num += (rx[i] - mx) * (ry[i] - my);
        dx += (rx[i] - mx) * (rx[i] - mx);
        dy += (ry[i] - my) * (ry[i] - my);
    }
    if (dx <= 0 || dy <= 0) return 0.0; // degenerate (constant) series
    return num / std::sqrt(dx * dy);
}

struct SweepCell {
    double eps = 0, a = 0, b = 0, lambda = 0;
    long index = 0;
};

} // namespace detail

inline int sweep_worker_count() {
    if (const char* env = std::getenv("ROBUSTSBM_WORKERS")) {
        const int v = std::atoi(env);
        if (v > 0) return v;
    }
    const unsigned hc = std::thread::hardware_concurrency();
    return hc > 0 ? static_cast<int>(hc) : 1;
}

// Executes one replicate of one cell; every row is regenerable from
// (plan, master seed, cell index, replicate index) alone.
inline SweepRow run_sweep_replicate(const ExperimentPlan& plan, const detail::SweepCell& cell,
                                    int replicate) {
    SweepRow row;
    row.mode = plan.mode;
    row.n = plan.n;
    row.k = plan.mode == "sbmk" ? plan.k : 2;
    row.a = cell.a;
    row.b = cell.b;
    row.eps = cell.eps;
    row.attack = plan.attack;
    row.preset = plan.preset;
    row.cell = cell.index;
    row.replicate = std::to_string(replicate);
    row.seed = derive_stream(plan.master_seed, cell.index, replicate, "sweep");
    const auto t0 = std::chrono::steady_clock::now();
    try {
        PipelineConfig cfg;
        cfg.preset = preset_from_string(plan.preset);
        cfg.seed = derive_stream(plan.master_seed, cell.index, replicate, "pipeline");
        RunReport report;
        if (plan.mode == "z2") {
            Rng rng(derive_stream(plan.master_seed, cell.index, replicate, "gen"));
            auto [inst, truth] = gen_z2(plan.n, cell.lambda, rng);
            Z2Instance obs = inst;
            if (cell.eps > 0.0 || plan.monotone_budget > 0)
                obs = corrupt_z2(inst, truth, cell.eps,
                                 plan.monotone.empty() ? 0.0 : plan.monotone_budget,
                                 Z2Attack::flip_sign, rng);
            auto labels = run_z2(obs, cell.lambda, cell.eps, cfg, &report, &truth);
            row.error = match_error_signs(labels.to_signs(), truth.sign_vector);
        } else {
            InstanceSpec spec;
            spec.n = plan.n;
            spec.k = row.k;
            spec.a = cell.a;
            spec.b = cell.b;
            spec.alpha = plan.alpha;
            spec.eps = cell.eps;
            Rng rng(derive_stream(plan.master_seed, cell.index, replicate, "gen"));
            auto [g, truth] = gen_sbm(spec, rng);
            Graph obs = g;
            if (!plan.monotone.empty() && plan.monotone_budget > 0) {
                auto res = apply_monotone(obs, truth, monotone_strategy_from_string(plan.monotone),
                                          plan.monotone_budget, rng);
                obs = std::move(res.graph);
            }
            if (cell.eps > 0.0)
                obs = apply_node_corruption(obs, truth, node_attack_from_string(plan.attack),
                                            cell.eps, rng);
            Labelling labels;
            if (plan.mode == "sbmk")
                labels = run_sbmk(obs, cell.a, cell.b, cell.eps, plan.k, plan.alpha, cfg, &report,
                                  &truth);
            else
                labels = run_sbm2(obs, cell.a, cell.b, cell.eps, plan.alpha, cfg, &report, &truth);
            Labelling lt;
            lt.k = row.k;
            lt.ids = truth.partition;
            row.error = match_error(labels, lt);
        }
        row.rho_final = report.rho_final;
        row.rounds_used = report.rounds_used;
    } catch (const std::exception& e) {
        row.failed = true;
        row.fail_reason = e.what();
    }
    row.wall_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return row;
}

inline SweepResult run_sweep(const ExperimentPlan& plan, int workers = 0) {
    if (plan.replicates < 1) throw std::invalid_argument("run_sweep: replicates >= 1");
    std::vector<detail::SweepCell> cells;
    long idx = 0;
    if (plan.mode == "z2") {
        for (double lambda : plan.lambda_grid)
            for (double eps : plan.eps_grid) {
                detail::SweepCell c;
                c.lambda = lambda;
                c.eps = eps;
                c.index = idx++;
                cells.push_back(c);
            }
    } else {
        for (auto& [a, b] : plan.ab_pairs)
            for (double eps : plan.eps_grid) {
                detail::SweepCell c;
                c.a = a;
                c.b = b;
                c.eps = eps;
                c.index = idx++;
                cells.push_back(c);
            }
    }

    const int nworkers = workers > 0 ? workers : sweep_worker_count();
    std::vector<SweepRow> data(cells.size() * plan.replicates);
    std::atomic<long> next{0};
    const long total = static_cast<long>(data.size());
    auto work = [&]() {
        for (;;) {
            const long t = next.fetch_add(1);
            if (t >= total) break;
            const long ci = t / plan.replicates;
            const int rep = static_cast<int>(t % plan.replicates);
            data[t] = run_sweep_replicate(plan, cells[ci], rep);
        }
    };
    std::vector<std::thread> pool;
    for (int i = 1; i < nworkers; ++i) pool.emplace_back(work);
    work();
    for (auto& th : pool) th.join();

    SweepResult out;
    out.rows = data;
    // per-cell aggregates (median + interquartile range)
    std::vector<double> cell_median(cells.size(), 0.0);
    for (size_t ci = 0; ci < cells.size(); ++ci) {
        std::vector<double> errs, rhos, walls;
        std::vector<double> rounds;
        for (int rep = 0; rep < plan.replicates; ++rep) {
            const auto& r = data[ci * plan.replicates + rep];
            if (r.failed) {
                ++out.failures;
                continue;
            }
            errs.push_back(r.error);
            rhos.push_back(r.rho_final);
            walls.push_back(r.wall_ms);
            rounds.push_back(r.rounds_used);
        }
        SweepRow agg;
        const auto& proto = data[ci * plan.replicates];
        agg = proto;
        agg.replicate = "agg";
        agg.failed = errs.empty();
        if (!errs.empty()) {
            std::sort(errs.begin(), errs.end());
            auto q = [&](double f) {
                const double pos = f * (errs.size() - 1);
                const size_t lo = static_cast<size_t>(pos);
                const size_t hi = std::min(lo + 1, errs.size() - 1);
                return errs[lo] + (pos - lo) * (errs[hi] - errs[lo]);
            };
            agg.error = q(0.5);
            agg.error_iqr = q(0.75) - q(0.25);
            std::sort(rhos.begin(), rhos.end());
            agg.rho_final = rhos[rhos.size() / 2];
            std::sort(rounds.begin(), rounds.end());
            agg.rounds_used = static_cast<int>(rounds[rounds.size() / 2]);
            double wsum = 0;
            for (double wv : walls) wsum += wv;
            agg.wall_ms = wsum / walls.size();
            cell_median[ci] = agg.error;
        }
        out.rows.push_back(agg);
    }

    // monotone-trend diagnostics
    {
        std::vector<double> xs, ys;
        for (size_t ci = 0; ci < cells.size(); ++ci) {
            xs.push_back(cells[ci].eps);
            ys.push_back(cell_median[ci]);
        }
        // eps trend at fixed (a,b): only meaningful when a single (a,b) pair
        // spans several eps values
        if (plan.eps_grid.size() >= 2 &&
            (plan.mode == "z2" ? plan.lambda_grid.size() == 1 : plan.ab_pairs.size() == 1)) {
            out.spearman_eps = detail::spearman(xs, ys);
            out.spearman_eps_valid = true;
        }
        if (plan.mode != "z2" && plan.ab_pairs.size() >= 2 && plan.eps_grid.size() == 1) {
            std::vector<double> cs;
            for (size_t ci = 0; ci < cells.size(); ++ci)
                cs.push_back(snr(cells[ci].a, cells[ci].b));
            out.spearman_c = detail::spearman(cs, cell_median);
            out.spearman_c_valid = true;
        }
    }
    return out;
}

} // namespace rsbm
