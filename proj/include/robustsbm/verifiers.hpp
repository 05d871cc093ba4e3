#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "robustsbm/instance.hpp"
#include "robustsbm/rng.hpp"
#include "robustsbm/rounding.hpp"
#include "robustsbm/stats.hpp"

namespace rsbm {

struct VerifierReport {
    std::string claim_id;
    int trials = 0;
    int pass_count = 0;
    double pass_rate = 0.0;
    double stat_min = 0.0, stat_median = 0.0, stat_max = 0.0;
    std::map<std::string, double> thresholds;
    bool verdict = false;

    std::string csv_line() const {
        std::ostringstream os;
        const double threshold =
            thresholds.count("pass_rate_min") ? thresholds.at("pass_rate_min") : 0.0;
        os << claim_id << "," << trials << "," << pass_rate << "," << threshold << ","
           << (verdict ? "pass" : "fail");
        return os.str();
    }
    std::string text() const {
        std::ostringstream os;
        os << "claim " << claim_id << ": trials=" << trials << " pass_rate=" << pass_rate
           << " stat[min/median/max]=" << stat_min << "/" << stat_median << "/" << stat_max
           << " verdict=" << (verdict ? "pass" : "fail") << "\n";
        for (const auto& [k, v] : thresholds) os << "  threshold " << k << " = " << v << "\n";
        return os.str();
    }
};

namespace detail {

inline double median_of(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

inline void fill_stats(VerifierReport& rep, const std::vector<double>& stats) {
    if (stats.empty()) return;
    rep.stat_min = *std::min_element(stats.begin(), stats.end());
    rep.stat_max = *std::max_element(stats.begin(), stats.end());
    rep.stat_median = median_of(stats);
}

inline int binomial_sample(Rng& rng, double p, long count) {
    int s = 0;
    for (long i = 0; i < count; ++i)
        if (rng.bernoulli(p)) ++s;
    return s;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Binomial tail: samples D1 = Binom(a/n, alpha n) - Binom(b/n, (1-alpha) n)
// and compares the empirical Pr[x + K <= theta] against the analytic bound
// exp(-C/2 + (theta/2) log R(a/n, b/n)), K = (1 - 2 alpha) n D(a/n, b/n).
// ---------------------------------------------------------------------------
inline VerifierReport verify_binomial_tail(double a, double b, int n, double alpha,
                                           double theta, int trials, std::uint64_t seed) {
    if (!(b < a)) throw std::invalid_argument("verify_binomial_tail: need b < a");
    VerifierReport rep;
    rep.claim_id = "binomial_tail";
    rep.trials = trials;
    const double C = snr(a, b);
    const double K = (1.0 - 2.0 * alpha) * n * dconst(a / n, b / n);
    const double bound = std::exp(-C / 2.0 + theta / 2.0 * std::log(rconst(a / n, b / n)));
    const long n1 = std::lround(alpha * n);
    const long n2 = std::lround((1.0 - alpha) * n);
    long hits = 0;
    Rng rng(derive_stream(seed, 0, 0, "binomial_tail"));
    for (int t = 0; t < trials; ++t) {
        const int x =
            detail::binomial_sample(rng, a / n, n1) - detail::binomial_sample(rng, b / n, n2);
        if (x + K <= theta) ++hits;
    }
    const double emp = static_cast<double>(hits) / trials;
    const double se = std::sqrt(std::max(bound * (1 - bound), 1e-12) / trials);
    rep.pass_count = static_cast<int>(hits);
    rep.pass_rate = emp;
    rep.thresholds["analytic_bound"] = bound;
    rep.thresholds["bound_plus_3se"] = bound + 3.0 * se;
    rep.thresholds["K"] = K;
    rep.verdict = emp <= bound + 3.0 * se;
    rep.stat_min = rep.stat_median = rep.stat_max = emp;
    return rep;
}

// ---------------------------------------------------------------------------
// Resolvability of (A - D(a/n,b/n) J) .* L on pure SBM draws at the frozen
// desk pair (K, theta): parameters (K sqrt(a+b), theta sqrt(a+b)). The
// restricted variant draws a random subset S of size (1 - K/(10 sqrt(C))) n
// and halves d1.
// ---------------------------------------------------------------------------
inline VerifierReport verify_resolvability(double a, double b, int n, double K, double theta,
                                           double budget_frac, int trials, std::uint64_t seed,
                                           bool restricted = false,
                                           double pass_rate_min = 0.9) {
    if (!(b < a)) throw std::invalid_argument("verify_resolvability: need b < a");
    VerifierReport rep;
    rep.claim_id = restricted ? "resolvability_restricted" : "resolvability";
    rep.trials = trials;
    const double C = snr(a, b);
    const double rootab = std::sqrt(a + b);
    std::vector<double> slacks;
    InstanceSpec spec;
    spec.n = n;
    spec.k = 2;
    spec.a = a;
    spec.b = b;
    spec.alpha = 1.0;
    for (int t = 0; t < trials; ++t) {
        Rng rng(derive_stream(seed, 1, t, "resolvability"));
        auto [g, truth] = gen_sbm(spec, rng);
        Eigen::MatrixXd X = demean(g, a, b).mat;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                X(i, j) *= truth.sign_vector[i] * truth.sign_vector[j];
        ResolvabilityParams params;
        params.budget_frac = budget_frac;
        if (!restricted) {
            params.d1 = K * rootab;
            params.d2 = theta * rootab;
            slacks.push_back(resolvability_slack(X, params).slack);
        } else {
            const int keep = static_cast<int>(
                std::ceil((1.0 - K / (10.0 * std::sqrt(C))) * n));
            std::vector<int> idx(n);
            std::iota(idx.begin(), idx.end(), 0);
            for (int i = n - 1; i > 0; --i) std::swap(idx[i], idx[rng.uniform_int(0, i)]);
            idx.resize(std::max(2, keep));
            std::sort(idx.begin(), idx.end());
            Eigen::MatrixXd Xs(idx.size(), idx.size());
            for (size_t ii = 0; ii < idx.size(); ++ii)
                for (size_t jj = 0; jj < idx.size(); ++jj) Xs(ii, jj) = X(idx[ii], idx[jj]);
            params.d1 = 0.5 * K * rootab;
            params.d2 = 1.1 * (theta + static_cast<double>(n - idx.size()) / n) * rootab;
            slacks.push_back(resolvability_slack(Xs, params).slack);
        }
    }
    int pass = 0;
    for (double s : slacks)
        if (s >= 0.0) ++pass;
    rep.pass_count = pass;
    rep.pass_rate = static_cast<double>(pass) / trials;
    rep.thresholds["pass_rate_min"] = pass_rate_min;
    rep.thresholds["K"] = K;
    rep.thresholds["theta"] = theta;
    rep.verdict = rep.pass_rate >= pass_rate_min;
    detail::fill_stats(rep, slacks);
    return rep;
}

// ---------------------------------------------------------------------------
// Rectangle sums of centered Bernoulli matrices: |best n1 x n2 rectangle| of a
// mean-zero matrix with entry variance <= sigma^2 stays below
// (n1 + n2) sigma sqrt(n).
// ---------------------------------------------------------------------------
inline VerifierReport verify_rectangle_sums(int n, double sigma, int n1, int n2, int trials,
                                            std::uint64_t seed, double pass_rate_min = 0.95) {
    if (n1 > n / 10 || n2 > n / 10)
        throw std::invalid_argument("verify_rectangle_sums: n1, n2 <= 0.1 n (desk bound)");
    VerifierReport rep;
    rep.claim_id = "rectangle_sums";
    rep.trials = trials;
    const double bound = (n1 + n2) * sigma * std::sqrt(static_cast<double>(n));
    const double p = sigma * sigma; // Bernoulli(p) - p has variance p(1-p) <= sigma^2
    if (p >= 1.0) throw std::invalid_argument("verify_rectangle_sums: sigma^2 must be < 1");
    std::vector<double> magnitudes;
    int pass = 0;
    for (int t = 0; t < trials; ++t) {
        Rng rng(derive_stream(seed, 2, t, "rectangles"));
        Eigen::MatrixXd M(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) M(i, j) = (rng.bernoulli(p) ? 1.0 : 0.0) - p;
        auto hi = best_rectangle_sum(M, n1, n2, RectMode::max, rng);
        auto lo = best_rectangle_sum(M, n1, n2, RectMode::min, rng);
        const double mag = std::max(std::abs(hi.value), std::abs(lo.value));
        magnitudes.push_back(mag);
        if (mag <= bound) ++pass;
    }
    rep.pass_count = pass;
    rep.pass_rate = static_cast<double>(pass) / trials;
    rep.thresholds["pass_rate_min"] = pass_rate_min;
    rep.thresholds["analytic_bound"] = bound;
    rep.verdict = rep.pass_rate >= pass_rate_min;
    detail::fill_stats(rep, magnitudes);
    return rep;
}

// ---------------------------------------------------------------------------
// Spectral pruning: degree-prune at 20a, measure the operator norm of the
// centered pruned matrix, report the empirical chi distribution. Pass: median
// chi <= 4 (frozen desk constant) and the pruned set keeps at least
// (1 - exp(-2C)) n nodes in >= 95% of trials.
// ---------------------------------------------------------------------------
inline VerifierReport verify_spectral_pruning(int n, double a, double b, int trials,
                                              std::uint64_t seed, double chi_max = 4.0) {
    VerifierReport rep;
    rep.claim_id = "spectral_pruning";
    rep.trials = trials;
    const double C = snr(a, b);
    const double size_floor = (1.0 - std::exp(-2.0 * C)) * n;
    std::vector<double> chis;
    int size_ok = 0;
    InstanceSpec spec;
    spec.n = n;
    spec.k = 2;
    spec.a = a;
    spec.b = std::min(b, a - 1e-9); // a == b degenerates to pure noise, same check
    spec.alpha = 1.0;
    for (int t = 0; t < trials; ++t) {
        Rng rng(derive_stream(seed, 3, t, "spectral_pruning"));
        auto [g, truth] = gen_sbm(spec, rng);
        auto keep = prune_high_degree(g, 20.0 * a);
        if (static_cast<double>(keep.size()) >= size_floor) ++size_ok;
        Eigen::MatrixXd M(keep.size(), keep.size());
        for (size_t ii = 0; ii < keep.size(); ++ii)
            for (size_t jj = 0; jj < keep.size(); ++jj) {
                const int i = keep[ii], j = keep[jj];
                const double L = truth.partition[i] == truth.partition[j] ? 1.0 : -1.0;
                M(ii, jj) = g.adj(i, j) - (a + b) / (2.0 * n) - (a - b) / (2.0 * n) * L;
            }
        const double nrm = opnorm(M, 1e-6, 800).value;
        chis.push_back(nrm / std::sqrt(a + b));
    }
    rep.pass_count = size_ok;
    rep.pass_rate = static_cast<double>(size_ok) / trials;
    rep.thresholds["chi_max"] = chi_max;
    rep.thresholds["size_floor_frac"] = size_floor / n;
    rep.thresholds["pass_rate_min"] = 0.95;
    detail::fill_stats(rep, chis);
    rep.verdict = rep.stat_median <= chi_max && rep.pass_rate >= 0.95;
    return rep;
}

// ---------------------------------------------------------------------------
// Z2 row sums: resolvability of A .* L at desk-scaled (K sqrt(n),
// theta sqrt(n)) with row budget 0.1 n.
// ---------------------------------------------------------------------------
inline VerifierReport verify_z2_rowsums(int n, double lambda, double K, double theta,
                                        int trials, std::uint64_t seed,
                                        double pass_rate_min = 0.9) {
    VerifierReport rep;
    rep.claim_id = "z2_rowsums";
    rep.trials = trials;
    const double rootn = std::sqrt(static_cast<double>(n));
    std::vector<double> slacks;
    for (int t = 0; t < trials; ++t) {
        Rng rng(derive_stream(seed, 4, t, "z2_rowsums"));
        auto [inst, truth] = gen_z2(n, lambda, rng);
        Eigen::MatrixXd X = inst.mat;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                X(i, j) *= truth.sign_vector[i] * truth.sign_vector[j];
        ResolvabilityParams params{K * rootn, theta * rootn, 0.1};
        slacks.push_back(resolvability_slack(X, params).slack);
    }
    int pass = 0;
    for (double s : slacks)
        if (s >= 0.0) ++pass;
    rep.pass_count = pass;
    rep.pass_rate = static_cast<double>(pass) / trials;
    rep.thresholds["pass_rate_min"] = pass_rate_min;
    rep.thresholds["K"] = K;
    rep.thresholds["theta"] = theta;
    rep.verdict = rep.pass_rate >= pass_rate_min;
    detail::fill_stats(rep, slacks);
    return rep;
}

// One synchronous majority-vote step from the supplied labels; ties keep the
// current label. Error is the raw disagreement with the truth: the rewire
// attack flips nearly every node, which the permutation-minimized metric
// would score as harmless.
inline double majority_vote_error(const Graph& g, const GroundTruth& truth) {
    const int n = g.n;
    int wrong = 0;
    for (int i = 0; i < n; ++i) {
        double vote = 0.0;
        for (int j = 0; j < n; ++j)
            if (j != i && g.adj(i, j) > 0.5) vote += truth.sign_vector[j];
        int label = truth.sign_vector[i];
        if (vote > 0) label = 1;
        if (vote < 0) label = -1;
        if (label != truth.sign_vector[i]) ++wrong;
    }
    return static_cast<double>(wrong) / n;
}

// ---------------------------------------------------------------------------
// Majority-vote attack: at eps >= 2(a-b)/(a+b), the degree-preserving rewire
// makes one majority step get most labels wrong.
// ---------------------------------------------------------------------------
inline VerifierReport verify_majority_attack(int n, double a, double b, double eps, int trials,
                                             std::uint64_t seed, double error_floor = 0.3,
                                             double pass_rate_min = 0.9) {
    const double threshold = 2.0 * (a - b) / (a + b);
    if (eps > 0.0 && eps < threshold)
        throw std::invalid_argument("verify_majority_attack: eps below the attack threshold");
    VerifierReport rep;
    rep.claim_id = "majority_attack";
    rep.trials = trials;
    std::vector<double> errors;
    int pass = 0;
    InstanceSpec spec;
    spec.n = n;
    spec.k = 2;
    spec.a = a;
    spec.b = b;
    spec.alpha = 1.0;
    for (int t = 0; t < trials; ++t) {
        Rng rng(derive_stream(seed, 5, t, "majority"));
        auto [g, truth] = gen_sbm(spec, rng);
        Graph attacked = g;
        if (eps > 0.0) {
            auto d0 = g.degrees();
            attacked = apply_node_corruption(g, truth, NodeAttack::rewire_opposite, eps, rng);
            auto d1 = attacked.degrees();
            for (int v : truth.corrupted_set)
                if (std::abs(d0[v] - d1[v]) > 0.5)
                    throw std::logic_error("rewire attack failed to preserve a degree");
        }
        const double err = majority_vote_error(attacked, truth);
        errors.push_back(err);
        if (eps > 0.0 ? err >= error_floor : true) ++pass;
    }
    rep.pass_count = pass;
    rep.pass_rate = static_cast<double>(pass) / trials;
    rep.thresholds["error_floor"] = error_floor;
    rep.thresholds["attack_threshold"] = threshold;
    rep.thresholds["pass_rate_min"] = pass_rate_min;
    rep.verdict = rep.pass_rate >= pass_rate_min;
    detail::fill_stats(rep, errors);
    return rep;
}

// Frozen desk configurations for the whole suite under one master seed.
inline std::vector<VerifierReport> run_verifier_suite(std::uint64_t master_seed) {
    std::vector<VerifierReport> out;
    out.push_back(verify_binomial_tail(40, 5, 1000, 0.5, 0.0, 100000, master_seed));
    out.push_back(verify_rectangle_sums(500, std::sqrt(40.0 / 500.0), 10, 10, 50, master_seed));
    out.push_back(verify_spectral_pruning(1000, 20, 5, 30, master_seed));
    out.push_back(verify_resolvability(60, 10, 400, 1.5, 0.05, 0.1, 50, master_seed));
    out.push_back(verify_resolvability(60, 10, 400, 1.5, 0.05, 0.1, 50, master_seed, true, 0.85));
    out.push_back(verify_z2_rowsums(300, 6.0, 2.0, 0.05, 50, master_seed));
    out.push_back(verify_majority_attack(2000, 110, 90, 0.3, 30, master_seed));
    return out;
}

} // namespace rsbm
