// Acceptance suite: one criterion per invocation (`acceptance <1..10>`), one
// PASS/FAIL line per criterion, exit 0 iff the criterion holds.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <numeric>
#include <thread>
#include <vector>

#include "robustsbm/boost_sdp.hpp"
#include "robustsbm/cli.hpp"
#include "robustsbm/init_sdp.hpp"
#include "robustsbm/instance.hpp"
#include "robustsbm/pipeline.hpp"
#include "robustsbm/rounding.hpp"
#include "robustsbm/stats.hpp"
#include "robustsbm/sweep.hpp"
#include "robustsbm/verifiers.hpp"

using namespace rsbm;

namespace {

constexpr std::uint64_t kSeed = kPinnedMasterSeed;

void parallel_for(int count, const std::function<void(int)>& body) {
    std::atomic<int> next{0};
    auto work = [&]() {
        for (;;) {
            const int i = next.fetch_add(1);
            if (i >= count) break;
            body(i);
        }
    };
    const unsigned hw = std::thread::hardware_concurrency();
    const int workers = std::max(1u, hw);
    std::vector<std::thread> pool;
    for (int t = 1; t < workers; ++t) pool.emplace_back(work);
    work();
    for (auto& th : pool) th.join();
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

std::pair<Graph, GroundTruth> sbm(int n, double a, double b, std::uint64_t seed, int k = 2) {
    InstanceSpec spec;
    spec.n = n;
    spec.k = k;
    spec.a = a;
    spec.b = b;
    spec.alpha = 1.0;
    Rng rng(seed);
    return gen_sbm(spec, rng);
}

Labelling to_labels(const GroundTruth& t, int k = 2) {
    Labelling l;
    l.k = k;
    l.ids = t.partition;
    return l;
}

bool report(int idx, bool pass, const std::string& detail) {
    std::printf("CRITERION %d: %s (%s)\n", idx, pass ? "PASS" : "FAIL", detail.c_str());
    std::fflush(stdout);
    return pass;
}

// --------------------------------------------------------------------------
// 1. Scalar exactness: dconst/rconst against an independent 12-digit route on
//    10^4 random pairs; the q < D(p,q) < p sandwich on all of them.
// --------------------------------------------------------------------------
bool criterion1() {
    Rng rng(derive_stream(kSeed, 1, 0, "acceptance"));
    int sandwich_ok = 0, dconst_ok = 0, rconst_ok = 0;
    const int trials = 10000;
    for (int t = 0; t < trials; ++t) {
        const double p = 0.001 + 0.998 * rng.uniform();
        double q = 0.001 + 0.998 * rng.uniform();
        if (std::abs(p - q) < 1e-9) q = p / 2 + 0.2;
        const double d = dconst(p, q);
        // independent arrangement: D = 1 / (1 + log(p/q) / log((1-q)/(1-p)))
        const double d_alt = 1.0 / (1.0 + std::log(p / q) / std::log((1 - q) / (1 - p)));
        if (std::abs(d - d_alt) <= 1e-12 * std::max(1.0, std::abs(d_alt))) ++dconst_ok;
        const double r = rconst(p, q);
        const double r_alt = std::exp(std::log(p) + std::log1p(-q) - std::log(q) - std::log1p(-p));
        if (std::abs(r - r_alt) <= 1e-12 * std::max(1.0, std::abs(r_alt))) ++rconst_ok;
        if (d > std::min(p, q) && d < std::max(p, q)) ++sandwich_ok;
    }
    char buf[160];
    std::snprintf(buf, sizeof buf, "dconst 12-digit %d/%d, rconst %d/%d, sandwich %d/%d",
                  dconst_ok, trials, rconst_ok, trials, sandwich_ok, trials);
    return report(1, dconst_ok == trials && rconst_ok == trials && sandwich_ok == trials, buf);
}

// --------------------------------------------------------------------------
// 2. Resolvability oracle vs LP-vertex brute force on 100 random 8x8 matrices,
//    1e-9 absolute.
// --------------------------------------------------------------------------
double brute_force_slack(const Eigen::MatrixXd& X, const ResolvabilityParams& p) {
    const int n = static_cast<int>(X.rows());
    Eigen::VectorXd rs = X.rowwise().sum();
    const double B = p.budget_frac * n;
    double best = 0.0;
    for (int mask = 0; mask < (1 << n); ++mask) {
        double sum = 0.0;
        int count = 0;
        for (int i = 0; i < n; ++i)
            if (mask & (1 << i)) {
                sum += rs[i] - p.d1;
                ++count;
            }
        if (count <= B) {
            best = std::min(best, sum);
            const double frac = B - count;
            if (frac > 0.0 && frac < 1.0)
                for (int j = 0; j < n; ++j) {
                    if (mask & (1 << j)) continue;
                    best = std::min(best, sum + frac * (rs[j] - p.d1));
                }
        }
    }
    return best + p.d2 * n;
}

bool criterion2() {
    Rng rng(derive_stream(kSeed, 2, 0, "acceptance"));
    int ok = 0;
    const int trials = 100;
    double worst = 0.0;
    for (int t = 0; t < trials; ++t) {
        Eigen::MatrixXd X(8, 8);
        for (int i = 0; i < 8; ++i)
            for (int j = 0; j < 8; ++j) X(i, j) = 3.0 * rng.normal();
        ResolvabilityParams p;
        p.d1 = 2.0 * rng.uniform();
        p.d2 = rng.uniform();
        p.budget_frac = 0.05 + 0.45 * rng.uniform();
        const double mine = resolvability_slack(X, p).slack;
        const double brute = brute_force_slack(X, p);
        const double diff = std::abs(mine - brute);
        worst = std::max(worst, diff);
        if (diff <= 1e-9) ++ok;
    }
    char buf[120];
    std::snprintf(buf, sizeof buf, "%d/%d matched, worst |diff| = %.3g", ok, trials, worst);
    return report(2, ok == trials, buf);
}

// --------------------------------------------------------------------------
// 3. match_error vs k!-brute-force on 100 random cases, k <= 5.
// --------------------------------------------------------------------------
bool criterion3() {
    Rng rng(derive_stream(kSeed, 3, 0, "acceptance"));
    int ok = 0;
    const int trials = 100;
    for (int t = 0; t < trials; ++t) {
        const int k = 2 + t % 4;
        const int n = 10 + t % 30;
        Labelling p, q;
        p.k = q.k = k;
        p.ids.resize(n);
        q.ids.resize(n);
        for (int i = 0; i < n; ++i) {
            p.ids[i] = rng.uniform_int(0, k - 1);
            q.ids[i] = rng.uniform_int(0, k - 1);
        }
        std::vector<int> perm(k);
        std::iota(perm.begin(), perm.end(), 0);
        int best = n + 1;
        do {
            int miss = 0;
            for (int i = 0; i < n; ++i)
                if (perm[p.ids[i]] != q.ids[i]) ++miss;
            best = std::min(best, miss);
        } while (std::next_permutation(perm.begin(), perm.end()));
        if (std::abs(match_error(p, q) - static_cast<double>(best) / n) <= 1e-12) ++ok;
    }
    char buf[80];
    std::snprintf(buf, sizeof buf, "%d/%d matched", ok, trials);
    return report(3, ok == trials, buf);
}

// --------------------------------------------------------------------------
// 4. Lemma-8.4-style witness check on (n=400, a=60, b=10) desk instances:
//    >= 90% clean on 50 pure draws, >= 80% clean under eps = 0.05 rewire.
// --------------------------------------------------------------------------
bool criterion4() {
    const int n = 400;
    const int trials = 50;
    std::vector<int> pure_ok(trials, 0), corr_ok(trials, 0);
    parallel_for(trials, [&](int t) {
        {
            auto [g, truth] = sbm(n, 60, 10, derive_stream(kSeed, 4, t, "pure"));
            Eigen::MatrixXd A_hat = demean(g, 60, 10).mat;
            BoostParams p = BoostParams::desk_sbm(60, 10, derive_stream(kSeed, 4, t, "params"));
            auto rep = check_witness_feasibility(A_hat, to_labels(truth),
                                                 Eigen::VectorXd::Zero(n), p);
            pure_ok[t] = rep.feasible ? 1 : 0;
        }
        {
            auto [g, truth] = sbm(n, 60, 10, derive_stream(kSeed, 4, t, "corr"));
            Rng rng(derive_stream(kSeed, 4, t, "attack"));
            auto h = apply_node_corruption(g, truth, NodeAttack::rewire_opposite, 0.05, rng);
            Eigen::MatrixXd A_hat = demean(h, 60, 10).mat;
            Eigen::VectorXd w_base = Eigen::VectorXd::Zero(n);
            for (int v : truth.corrupted_set) w_base[v] = 1.0;
            BoostParams p = BoostParams::desk_sbm(60, 10, derive_stream(kSeed, 4, t, "params2"));
            auto rep = check_witness_feasibility(A_hat, to_labels(truth), w_base, p);
            corr_ok[t] = rep.feasible ? 1 : 0;
        }
    });
    const int pure = std::accumulate(pure_ok.begin(), pure_ok.end(), 0);
    const int corr = std::accumulate(corr_ok.begin(), corr_ok.end(), 0);
    char buf[160];
    std::snprintf(buf, sizeof buf, "pure clean %d/%d (need >= 45), rewire clean %d/%d (need >= 40)",
                  pure, trials, corr, trials);
    return report(4, pure >= 45 && corr >= 40, buf);
}

// --------------------------------------------------------------------------
// 5. Boosting contraction on SBM(400, 40, 5) at eps = 0: one round cuts the
//    artificial init error (median ratio <= 0.9 over 30 seeds); the full loop
//    reaches median final error <= 0.02.
// --------------------------------------------------------------------------
bool criterion5() {
    const int n = 400, trials = 30;
    std::vector<double> ratios(trials), finals(trials);
    parallel_for(trials, [&](int t) {
        auto [g, truth] = sbm(n, 40, 5, derive_stream(kSeed, 5, t, "inst"));
        Eigen::MatrixXd A_hat = demean(g, 40, 5).mat;
        Labelling lt = to_labels(truth);
        Rng rng(derive_stream(kSeed, 5, t, "errors"));
        const double theta = 0.05 + 0.15 * rng.uniform();
        Labelling noisy = lt;
        int need = static_cast<int>(std::ceil(theta * n));
        while (need > 0) {
            const int v = rng.uniform_int(0, n - 1);
            if (noisy.ids[v] == lt.ids[v]) {
                noisy.ids[v] = 1 - noisy.ids[v];
                --need;
            }
        }
        const double err0 = match_error(noisy, lt);
        BoostParams p = BoostParams::desk_sbm(40, 5, derive_stream(kSeed, 5, t, "params"));
        auto sol = solve_boost(A_hat, noisy, p);
        Labelling after = sol.feasible ? flip_step_2(noisy, sol.w, p) : noisy;
        ratios[t] = err0 > 0 ? match_error(after, lt) / err0 : 1.0;
        Rng loop_rng(derive_stream(kSeed, 5, t, "loop"));
        auto fin = boost_loop(A_hat, noisy, p, BoostMode::two, loop_rng);
        finals[t] = match_error(fin, lt);
    });
    const double med_ratio = median(ratios);
    const double med_final = median(finals);
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "median one-round ratio %.3f (need <= 0.9), median final %.4f (need <= 0.02)",
                  med_ratio, med_final);
    return report(5, med_ratio <= 0.9 && med_final <= 0.02, buf);
}

// --------------------------------------------------------------------------
// 6. Robustness separation at n=2000, a=110, b=90, eps=0.3 rewire (attack
//    threshold 2(a-b)/(a+b) = 0.2): one-step majority voting from true labels
//    is >= 0.3 wrong in >= 90% of 30 trials, while the boosting SDP from the
//    same start keeps the median error <= 0.15 and <= half the majority
//    median.
// --------------------------------------------------------------------------
bool criterion6() {
    const int n = 2000, trials = 30;
    std::vector<double> majority_err(trials), sdp_err(trials);
    parallel_for(trials, [&](int t) {
        auto [g, truth] = sbm(n, 110, 90, derive_stream(kSeed, 6, t, "inst"));
        Rng rng(derive_stream(kSeed, 6, t, "attack"));
        auto h = apply_node_corruption(g, truth, NodeAttack::rewire_opposite, 0.3, rng);
        majority_err[t] = majority_vote_error(h, truth);
        Eigen::MatrixXd A_hat = demean(h, 110, 90).mat;
        BoostParams p = BoostParams::desk_sbm(110, 90, derive_stream(kSeed, 6, t, "params"));
        Rng loop_rng(derive_stream(kSeed, 6, t, "loop"));
        Labelling lt = to_labels(truth);
        auto out = boost_loop(A_hat, lt, p, BoostMode::two, loop_rng);
        sdp_err[t] = match_error(out, lt);
    });
    int majority_bad = 0;
    for (double e : majority_err)
        if (e >= 0.3) ++majority_bad;
    const double med_majority = median(majority_err);
    const double med_sdp = median(sdp_err);
    char buf[200];
    std::snprintf(buf, sizeof buf,
                  "majority >= 0.3 in %d/%d (need >= 27), majority median %.3f, sdp median %.4f "
                  "(need <= 0.15 and <= %.3f)",
                  majority_bad, trials, med_majority, med_sdp, 0.5 * med_majority);
    return report(6, majority_bad >= 27 && med_sdp <= 0.15 && med_sdp <= 0.5 * med_majority, buf);
}

// --------------------------------------------------------------------------
// 7. Double robustness on SBM(400, 40, 5): eps=0.02 rewire plus clique_plant
//    monotone noise (budget n edges). Full pipeline median error <= 0.1 over
//    30 seeds and within 2x of the paired no-monotone runs.
// --------------------------------------------------------------------------
bool criterion7() {
    const int n = 400, trials = 30;
    std::vector<double> with_mono(trials), without(trials);
    parallel_for(trials, [&](int t) {
        for (int variant = 0; variant < 2; ++variant) {
            auto [g, truth] = sbm(n, 40, 5, derive_stream(kSeed, 7, t, "inst"));
            Rng rng(derive_stream(kSeed, 7, t, "adv"));
            Graph cur = g;
            if (variant == 1) {
                auto res =
                    apply_monotone(cur, truth, MonotoneStrategy::clique_plant, n, rng);
                cur = std::move(res.graph);
            } else {
                // burn the same stream so the corruption draw is paired
                GroundTruth scratch = truth;
                auto res = apply_monotone(g, scratch, MonotoneStrategy::clique_plant, n, rng);
            }
            cur = apply_node_corruption(cur, truth, NodeAttack::rewire_opposite, 0.02, rng);
            PipelineConfig cfg;
            cfg.preset = Preset::desk;
            cfg.seed = derive_stream(kSeed, 7, t, "pipeline");
            auto out = run_sbm2(cur, 40, 5, 0.02, 1.0, cfg, nullptr, &truth);
            const double err = match_error(out, to_labels(truth));
            if (variant == 1)
                with_mono[t] = err;
            else
                without[t] = err;
        }
    });
    const double med_mono = median(with_mono);
    const double med_plain = median(without);
    const double pair_cap = 2.0 * med_plain + 1.0 / n; // 1/n grace for a zero paired median
    char buf[200];
    std::snprintf(buf, sizeof buf,
                  "median with monotone %.4f (need <= 0.1), paired plain median %.4f, cap %.4f",
                  med_mono, med_plain, pair_cap);
    return report(7, med_mono <= 0.1 && med_mono <= pair_cap, buf);
}

// --------------------------------------------------------------------------
// 8. Z2 pipeline at lambda=6, n=300: median error <= 0.02 at eps=0 and <= 0.1
//    at eps=0.05, over 30 seeds each.
// --------------------------------------------------------------------------
bool criterion8() {
    const int n = 300, trials = 30;
    std::vector<double> clean(trials), corrupted(trials);
    parallel_for(trials, [&](int t) {
        {
            Rng rng(derive_stream(kSeed, 8, t, "gen0"));
            auto [inst, truth] = gen_z2(n, 6.0, rng);
            PipelineConfig cfg;
            cfg.preset = Preset::desk;
            cfg.seed = derive_stream(kSeed, 8, t, "pipe0");
            auto out = run_z2(inst, 6.0, 0.0, cfg, nullptr, &truth);
            clean[t] = match_error_signs(out.to_signs(), truth.sign_vector);
        }
        {
            Rng rng(derive_stream(kSeed, 8, t, "gen1"));
            auto [inst, truth] = gen_z2(n, 6.0, rng);
            auto obs = corrupt_z2(inst, truth, 0.05, 0.0, Z2Attack::flip_sign, rng);
            PipelineConfig cfg;
            cfg.preset = Preset::desk;
            cfg.seed = derive_stream(kSeed, 8, t, "pipe1");
            auto out = run_z2(obs, 6.0, 0.05, cfg, nullptr, &truth);
            corrupted[t] = match_error_signs(out.to_signs(), truth.sign_vector);
        }
    });
    const double med_clean = median(clean);
    const double med_corr = median(corrupted);
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "median eps=0 error %.4f (need <= 0.02), eps=0.05 error %.4f (need <= 0.1)",
                  med_clean, med_corr);
    return report(8, med_clean <= 0.02 && med_corr <= 0.1, buf);
}

// --------------------------------------------------------------------------
// 9. Verifier suite at the frozen desk configurations under the pinned master
//    seed.
// --------------------------------------------------------------------------
bool criterion9() {
    auto reports = run_verifier_suite(kSeed);
    bool all = true;
    std::string detail;
    for (const auto& r : reports) {
        all = all && r.verdict;
        if (!detail.empty()) detail += ", ";
        detail += r.claim_id + (r.verdict ? "=pass" : "=FAIL");
    }
    return report(9, all, detail);
}

// --------------------------------------------------------------------------
// 10. Monte Carlo trends: eps-sweep Spearman >= 0 at fixed (a, b); C-sweep
//     Spearman <= 0 at eps = 0.
// --------------------------------------------------------------------------
bool criterion10() {
    ExperimentPlan eps_plan;
    eps_plan.mode = "sbm2";
    eps_plan.n = 400;
    eps_plan.eps_grid = {0.0, 0.02, 0.05};
    eps_plan.ab_pairs = {{40, 5}};
    eps_plan.attack = "rewire_opposite";
    eps_plan.replicates = 20;
    eps_plan.master_seed = derive_stream(kSeed, 10, 0, "eps_sweep");
    auto eps_res = run_sweep(eps_plan);

    ExperimentPlan c_plan;
    c_plan.mode = "sbm2";
    c_plan.n = 400;
    c_plan.eps_grid = {0.0};
    c_plan.ab_pairs = {{30, 5}, {40, 5}, {60, 5}};
    c_plan.replicates = 20;
    c_plan.master_seed = derive_stream(kSeed, 10, 1, "c_sweep");
    auto c_res = run_sweep(c_plan);

    char buf[200];
    std::snprintf(buf, sizeof buf,
                  "spearman(eps) = %.3f (need >= 0), spearman(C) = %.3f (need <= 0), failures "
                  "%d/%d",
                  eps_res.spearman_eps, c_res.spearman_c, eps_res.failures + c_res.failures,
                  120);
    return report(10,
                  eps_res.spearman_eps_valid && c_res.spearman_c_valid &&
                      eps_res.spearman_eps >= 0.0 && c_res.spearman_c <= 0.0 &&
                      eps_res.failures + c_res.failures == 0,
                  buf);
}

} // namespace

int main(int argc, char** argv) {
    if (argc != 2) {
        std::fprintf(stderr, "usage: acceptance <criterion 1..10>\n");
        return 2;
    }
    const int idx = std::atoi(argv[1]);
    bool ok = false;
    switch (idx) {
    case 1: ok = criterion1(); break;
    case 2: ok = criterion2(); break;
    case 3: ok = criterion3(); break;
    case 4: ok = criterion4(); break;
    case 5: ok = criterion5(); break;
    case 6: ok = criterion6(); break;
    case 7: ok = criterion7(); break;
    case 8: ok = criterion8(); break;
    case 9: ok = criterion9(); break;
    case 10: ok = criterion10(); break;
    default: std::fprintf(stderr, "unknown criterion %d\n", idx); return 2;
    }
    return ok ? 0 : 1;
}
