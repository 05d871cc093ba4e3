#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <vector>

#include "robustsbm/rng.hpp"
#include "robustsbm/rounding.hpp"
#include "robustsbm/stats.hpp"

namespace rsbm {

// ---------------------------------------------------------------------------
// Boosting SDP over pseudorectangles and approximate-row-selectors.
//
// Program (2 communities): minimize rho subject to
//   0 <= w_i <= 1, sum w <= rho n, N in R_n(rho), W = J - wcols - wrows + N,
//   W_ij >= 0, and for every rho' in [rho/K, zeta] and (M, x) in
//   S_n(rho', K rho'):
//     < Ahat .* L .* W , M >  >=  c1 * sum_i x_i (1 - w_i)  -  c2 * rho' * n.
//
// The paper's coefficients are (c1, c2) = (10 d K^3, 10 d K^2); the desk
// preset calibrates them against the instance's signal row-sum scale instead
// (see BoostParams). Feasibility is defined relative to this module's own
// separation oracle, used identically by the solver and by tests.
// ---------------------------------------------------------------------------

struct Pseudorectangle {
    Eigen::MatrixXd mat;
    double theta = 0.0;

    double entry_sum() const { return mat.cwiseAbs().sum(); }
    double trace_norm() const {
        Eigen::BDCSVD<Eigen::MatrixXd> svd(mat);
        return svd.singularValues().sum();
    }
    bool admissible(double tol = 1e-9) const {
        const double n = static_cast<double>(mat.rows());
        if (mat.minCoeff() < -tol || mat.maxCoeff() > 1.0 + tol) return false;
        if (entry_sum() > theta * theta * n * n + tol) return false;
        return trace_norm() <= theta * n + tol;
    }
};

// Structured members of R_n(theta): scaled 0/1 rectangles and box-feasible
// rank-1 outer products. Entry sums and trace norms are exact in closed form,
// so admissibility certificates never need an SVD.
struct NAtom {
    enum class Kind { none, rect, rank1 };
    Kind kind = Kind::none;
    std::vector<int> rows, cols; // rect support
    double scale = 1.0;          // rect height
    Eigen::VectorXd xt, yt;      // rank1: N = xt yt^T

    static NAtom outer(const Eigen::VectorXd& v) {
        NAtom a;
        a.kind = Kind::rank1;
        a.xt = v;
        a.yt = v;
        return a;
    }

    double entry_sum() const {
        switch (kind) {
        case Kind::none: return 0.0;
        case Kind::rect: return scale * static_cast<double>(rows.size()) * cols.size();
        case Kind::rank1: return xt.sum() * yt.sum();
        }
        return 0.0;
    }
    double trace_norm() const {
        switch (kind) {
        case Kind::none: return 0.0;
        case Kind::rect:
            return scale * std::sqrt(static_cast<double>(rows.size()) * cols.size());
        case Kind::rank1: return xt.norm() * yt.norm();
        }
        return 0.0;
    }
    // per-row maximum entry of N (lower bound for admissible x in a selector)
    Eigen::VectorXd row_max(int n) const {
        Eigen::VectorXd m = Eigen::VectorXd::Zero(n);
        switch (kind) {
        case Kind::none: break;
        case Kind::rect:
            if (!cols.empty())
                for (int i : rows) m[i] = scale;
            break;
        case Kind::rank1:
            if (yt.size() > 0) m = xt * yt.maxCoeff();
            break;
        }
        return m;
    }
    Eigen::MatrixXd materialize(int n) const {
        Eigen::MatrixXd N = Eigen::MatrixXd::Zero(n, n);
        switch (kind) {
        case Kind::none: break;
        case Kind::rect:
            for (int i : rows)
                for (int j : cols) N(i, j) = scale;
            break;
        case Kind::rank1: N = xt * yt.transpose(); break;
        }
        return N;
    }
};

namespace detail {

// Matrix-free access to R = AL .* W with W = J - wcols - wrows + N.
struct MaskedMat {
    const Eigen::MatrixXd& AL;
    const Eigen::VectorXd& w;
    const NAtom& N;

    int size() const { return static_cast<int>(AL.rows()); }

    // R v
    Eigen::VectorXd mul(const Eigen::VectorXd& v) const {
        const int r = size();
        Eigen::VectorXd out = (Eigen::VectorXd::Ones(r) - w).cwiseProduct(AL * v);
        out -= AL * w.cwiseProduct(v);
        out += atom_mul(v);
        return out;
    }
    // R^T v
    Eigen::VectorXd tmul(const Eigen::VectorXd& v) const {
        const int r = size();
        Eigen::VectorXd out =
            AL.transpose() * (Eigen::VectorXd::Ones(r) - w).cwiseProduct(v);
        out -= w.cwiseProduct(AL.transpose() * v);
        out += atom_tmul(v);
        return out;
    }
    Eigen::VectorXd row_sums() const { return mul(Eigen::VectorXd::Ones(size())); }

private:
    // (AL .* N) v
    Eigen::VectorXd atom_mul(const Eigen::VectorXd& v) const {
        const int r = size();
        switch (N.kind) {
        case NAtom::Kind::none: return Eigen::VectorXd::Zero(r);
        case NAtom::Kind::rect: {
            Eigen::VectorXd cv = Eigen::VectorXd::Zero(r);
            for (int j : N.cols) cv[j] = v[j];
            Eigen::VectorXd full = AL * cv;
            Eigen::VectorXd out = Eigen::VectorXd::Zero(r);
            for (int i : N.rows) out[i] = N.scale * full[i];
            return out;
        }
        case NAtom::Kind::rank1: return N.xt.cwiseProduct(AL * N.yt.cwiseProduct(v));
        }
        return Eigen::VectorXd::Zero(r);
    }
    // (AL .* N)^T v
    Eigen::VectorXd atom_tmul(const Eigen::VectorXd& v) const {
        const int r = size();
        switch (N.kind) {
        case NAtom::Kind::none: return Eigen::VectorXd::Zero(r);
        case NAtom::Kind::rect: {
            Eigen::VectorXd rv = Eigen::VectorXd::Zero(r);
            for (int i : N.rows) rv[i] = N.scale * v[i];
            Eigen::VectorXd full = AL.transpose() * rv;
            Eigen::VectorXd out = Eigen::VectorXd::Zero(r);
            for (int j : N.cols) out[j] = full[j];
            return out;
        }
        case NAtom::Kind::rank1: return N.yt.cwiseProduct(AL.transpose() * N.xt.cwiseProduct(v));
        }
        return Eigen::VectorXd::Zero(r);
    }
};

} // namespace detail

struct BoostParams {
    double zeta = 0.2;
    double d = 1.0;
    double K = 49.0;
    double c1 = 0.0; // selector reward coefficient
    double c2 = 0.0; // selector slack coefficient (times rho' r)
    int rho_grid = 24;
    int rho_prime_grid = 24;
    int oracle_restarts = 3;
    int inner_iters = 40;
    int stale_break = 10;
    int max_rounds = 0; // 0: ceil(10 ln n) (two/z2) or ceil(10 k ln n) (k)
    double alpha = 1.0;
    double tol_rel = 1e-6;
    std::uint64_t seed = 0;
    bool theory = false;
    bool zeta_clamped = false;

    double flip_threshold() const { return 1.0 - 1.0 / std::sqrt(K); }
    // Desk-scale solutions saturate below 1 (the forcing ratio c1/c2 = K of
    // the paper's regime is unattainable; see the calibration notes), while
    // the weights separate cleanly: flagged rows sit well above 1/sqrt(K) and
    // clean rows below it. The flip cut is therefore 1/sqrt(K); on a
    // 0/1-saturated solution this selects exactly the same set as the paper's
    // w_i >= 1 - 1/sqrt(K) rule, boundary inclusive.
    double flip_cut(const Eigen::VectorXd& w) const {
        (void)w;
        return 1.0 / std::sqrt(K);
    }
    double tol_abs(double r) const { return tol_rel * std::max(1.0, c2) * r; }

    void validate() const {
        if (!(zeta > 0.0 && zeta < 1.0)) throw std::invalid_argument("BoostParams: 0 < zeta < 1");
        if (!(K >= 4.0)) throw std::invalid_argument("BoostParams: K >= 4");
        if (!(d > 0.0)) throw std::invalid_argument("BoostParams: d > 0");
        if (!(c1 > 0.0 && c2 > 0.0)) throw std::invalid_argument("BoostParams: c1, c2 > 0");
    }

    // Desk calibration: constraint coefficients tied to the instance's signal
    // row-sum scale s ((a-b)/2 for the SBM, lambda sqrt(n) for Z2). The
    // paper's 10dK^3 / 10dK^2 swamp every desk-scale row sum.
    static constexpr double kDeskRewardFrac = 0.2;
    static constexpr double kDeskSlackFrac = 0.85;

    static BoostParams desk_sbm(double a, double b, std::uint64_t seed = 0) {
        BoostParams p;
        p.zeta = 0.2;
        p.K = 49.0;
        p.d = std::sqrt(a + b);
        const double s = 0.5 * (a - b);
        p.c1 = kDeskRewardFrac * s;
        p.c2 = kDeskSlackFrac * s;
        p.seed = seed;
        return p;
    }

    static BoostParams desk_z2(double lambda, int n, std::uint64_t seed = 0) {
        BoostParams p;
        p.zeta = 0.2;
        p.K = 49.0;
        p.d = std::sqrt(static_cast<double>(n));
        const double s = lambda * std::sqrt(static_cast<double>(n));
        p.c1 = kDeskRewardFrac * s;
        p.c2 = kDeskSlackFrac * s;
        p.seed = seed;
        return p;
    }

    static BoostParams theory_sbm(double a, double b, double alpha, double chi,
                                  std::uint64_t seed = 0) {
        BoostParams p;
        p.theory = true;
        p.alpha = alpha;
        p.d = std::sqrt(a + b);
        const double C = snr(a, b);
        const double zeta_raw = 4e5 / (alpha * alpha * alpha) * chi / std::sqrt(C);
        p.zeta = std::min(zeta_raw, 1.0 - 1e-9);
        p.zeta_clamped = zeta_raw > 1.0 - 1e-9;
        p.K = 1e6 * chi / (alpha * alpha * alpha);
        p.c1 = 10.0 * p.d * p.K * p.K * p.K;
        p.c2 = 10.0 * p.d * p.K * p.K;
        p.seed = seed;
        return p;
    }

    static BoostParams theory_sbm_k(double a, double b, int k, double alpha, double chi,
                                    std::uint64_t seed = 0) {
        BoostParams p;
        p.theory = true;
        p.alpha = alpha;
        p.d = std::sqrt(a + b);
        const double C = snr(a, b);
        const double a4 = alpha * alpha * alpha * alpha;
        const double zeta_raw = 2e5 * k * k / a4 * chi / std::sqrt(C);
        p.zeta = std::min(zeta_raw, 1.0 - 1e-9);
        p.zeta_clamped = zeta_raw > 1.0 - 1e-9;
        p.K = std::pow(10.0 * k / alpha, 10.0) * chi;
        p.c1 = 10.0 * p.d * p.K * p.K * p.K;
        p.c2 = 10.0 * p.d * p.K * p.K;
        p.seed = seed;
        return p;
    }

    static BoostParams theory_z2(double lambda, int n, std::uint64_t seed = 0) {
        BoostParams p;
        p.theory = true;
        p.d = std::sqrt(static_cast<double>(n));
        const double zeta_raw = 1e5 / lambda;
        p.zeta = std::min(zeta_raw, 1.0 - 1e-9);
        p.zeta_clamped = zeta_raw > 1.0 - 1e-9;
        p.K = 1e6;
        p.c1 = 10.0 * p.d * p.K * p.K * p.K;
        p.c2 = 10.0 * p.d * p.K * p.K;
        p.seed = seed;
        return p;
    }
};

struct RowSelector {
    Eigen::VectorXd x;
    NAtom n_sub;
    double theta = 0.0; // selector class S_r(theta, delta)
    double delta = 0.0;

    Eigen::MatrixXd materialize() const {
        const int n = static_cast<int>(x.size());
        Eigen::MatrixXd M = x * Eigen::RowVectorXd::Ones(n);
        M -= n_sub.materialize(n);
        return M;
    }
    Pseudorectangle n_as_pseudorectangle() const {
        return Pseudorectangle{n_sub.materialize(static_cast<int>(x.size())),
                               std::sqrt(theta * delta)};
    }
};

struct ConstraintWitness {
    double rho_prime = 0.0;
    RowSelector selector;
    double violation = 0.0; // positive: constraint violated

    // Dense re-derivation of the violation (independent of the oracle's
    // matrix-free evaluation path): builds W and M explicitly.
    double recompute(const Eigen::MatrixXd& AL, const Eigen::VectorXd& w, const NAtom& N,
                     double c1, double c2) const {
        const int r = static_cast<int>(AL.rows());
        Eigen::MatrixXd W = Eigen::MatrixXd::Ones(r, r);
        W -= w * Eigen::RowVectorXd::Ones(r);
        W -= Eigen::VectorXd::Ones(r) * w.transpose();
        W += N.materialize(r);
        const Eigen::MatrixXd RW = AL.cwiseProduct(W);
        const Eigen::MatrixXd M = selector.materialize();
        const double lhs = RW.cwiseProduct(M).sum();
        const double rhs = c1 * selector.x.dot(Eigen::VectorXd::Ones(r) - w) -
                           c2 * rho_prime * static_cast<double>(r);
        return rhs - lhs;
    }
};

struct BoostSolution {
    double rho = 0.0;
    Eigen::VectorXd w;
    NAtom N; // w w^T for solver output
    bool feasible = true;
    double min_mask_entry = 0.0;
    int accepted_grid_index = -1;
    double residual_violation = 0.0; // 0 when feasible

    Eigen::MatrixXd mask() const {
        const int n = static_cast<int>(w.size());
        Eigen::MatrixXd W = Eigen::MatrixXd::Ones(n, n);
        W -= w * Eigen::RowVectorXd::Ones(n);
        W -= Eigen::VectorXd::Ones(n) * w.transpose();
        W += N.materialize(n);
        return W;
    }
};

// W = J - wcols - wrows + N with its minimum entry reported.
inline std::pair<Eigen::MatrixXd, double> build_mask(const Eigen::VectorXd& w,
                                                     const Eigen::MatrixXd& N) {
    const int n = static_cast<int>(w.size());
    if (N.rows() != n || N.cols() != n) throw std::invalid_argument("build_mask: shape mismatch");
    Eigen::MatrixXd W = Eigen::MatrixXd::Ones(n, n);
    W -= w * Eigen::RowVectorXd::Ones(n);
    W -= Eigen::VectorXd::Ones(n) * w.transpose();
    W += N;
    return {W, W.minCoeff()};
}

// ---------------------------------------------------------------------------
// Separation oracle
// ---------------------------------------------------------------------------

struct OracleQuery {
    double rho = 0.0;            // current grid point (sets rho' lower end)
    double rho_prime_min = -1.0; // override; default rho / K
    double coeff_scale = 1.0;    // pair-size scaling r/n in the k-community SDP
};

inline std::optional<ConstraintWitness> oracle_separate(const Eigen::MatrixXd& AL,
                                                        const Eigen::VectorXd& w,
                                                        const NAtom& N, const BoostParams& p,
                                                        const OracleQuery& q, Rng& rng) {
    const int r = static_cast<int>(AL.rows());
    const double c1 = p.c1 * q.coeff_scale;
    const double c2 = p.c2 * q.coeff_scale;
    const double tol = p.tol_abs(r) * q.coeff_scale;
    const Eigen::VectorXd omw = Eigen::VectorXd::Ones(r) - w;
    detail::MaskedMat R{AL, w, N};
    const Eigen::VectorXd rw = R.row_sums();

    // top singular direction of AL .* W, shared across the rho' grid
    Eigen::VectorXd spec_u, spec_v;
    bool spec_ok = false;
    {
        Eigen::VectorXd v(r);
        for (int i = 0; i < r; ++i) v[i] = rng.normal();
        v.normalize();
        Eigen::VectorXd u;
        for (int it = 0; it < 25; ++it) {
            u = R.mul(v);
            const double nu = u.norm();
            if (nu <= 1e-300) break;
            u /= nu;
            v = R.tmul(u);
            const double nv = v.norm();
            if (nv <= 1e-300) break;
            v /= nv;
            spec_ok = true;
        }
        spec_u = u;
        spec_v = v;
    }

    const double lo = std::max(q.rho_prime_min > 0 ? q.rho_prime_min : q.rho / p.K, 1e-12);
    const double hi = p.zeta;
    ConstraintWitness best;
    best.violation = tol;
    bool found = false;

    // exact greedy for the x-part: maximize sum x_i score_i over
    // lower <= x <= 1, sum x <= budget
    auto greedy_x = [&](const Eigen::VectorXd& values, const Eigen::VectorXd& lower,
                        double budget) -> Eigen::VectorXd {
        Eigen::VectorXd x = lower;
        double left = budget - lower.sum();
        if (left < 0) return Eigen::VectorXd::Zero(r); // lower bound infeasible
        std::vector<int> order(r);
        std::iota(order.begin(), order.end(), 0);
        std::vector<double> score(r);
        for (int i = 0; i < r; ++i) score[i] = c1 * omw[i] - values[i];
        std::stable_sort(order.begin(), order.end(),
                         [&](int a, int b) { return score[a] > score[b]; });
        for (int i : order) {
            if (left <= 0) break;
            if (score[i] <= 0) break;
            const double take = std::min(1.0 - x[i], left);
            x[i] += take;
            left -= take;
        }
        return x;
    };

    auto violation_of = [&](const Eigen::VectorXd& x, const NAtom& atom, double rho_prime,
                            double atom_gain) {
        return c1 * x.dot(omw) - c2 * rho_prime * r - (x.dot(rw) - atom_gain);
    };

    // <AL .* W, atom>
    auto atom_gain_of = [&](const NAtom& atom) -> double {
        switch (atom.kind) {
        case NAtom::Kind::none: return 0.0;
        case NAtom::Kind::rect: {
            Eigen::VectorXd rv = Eigen::VectorXd::Zero(r);
            for (int i : atom.rows) rv[i] = atom.scale;
            Eigen::VectorXd cs = R.tmul(rv);
            double s = 0.0;
            for (int j : atom.cols) s += cs[j];
            return s;
        }
        case NAtom::Kind::rank1: return atom.yt.dot(R.tmul(atom.xt));
        }
        return 0.0;
    };

    for (int gi = 0; gi < p.rho_prime_grid; ++gi) {
        const double t =
            p.rho_prime_grid == 1 ? 0.0 : static_cast<double>(gi) / (p.rho_prime_grid - 1);
        const double rho_prime = lo * std::pow(hi / lo, t);
        if (rho_prime > hi * (1 + 1e-12)) break;
        const double x_budget = rho_prime * r;
        const double entry_cap = p.K * rho_prime * rho_prime * r * r;
        const double trace_cap = std::sqrt(p.K) * rho_prime * r;

        Eigen::VectorXd x = greedy_x(rw, Eigen::VectorXd::Zero(r), x_budget);
        if (x.sum() <= 1e-15) {
            // nothing scores positive without a subtraction; still try the
            // spectral atom route below with a budget-filling x
            const Eigen::VectorXd shifted =
                (rw.array() - rw.cwiseAbs().maxCoeff() - 1.0).matrix();
            x = greedy_x(shifted, Eigen::VectorXd::Zero(r), x_budget);
        }

        std::vector<int> support;
        for (int i = 0; i < r; ++i)
            if (x[i] >= 0.999) support.push_back(i);

        std::vector<NAtom> candidates;
        candidates.emplace_back();

        // alternating-maximization rectangles on the full-row support
        if (!support.empty() && entry_cap >= 1.0) {
            for (int restart = 0; restart < std::max(1, p.oracle_restarts); ++restart) {
                std::vector<int> rset = support;
                if (restart > 0 && rset.size() > 1) {
                    for (int i = static_cast<int>(rset.size()) - 1; i > 0; --i)
                        std::swap(rset[i], rset[rng.uniform_int(0, i)]);
                    rset.resize(1 + rng.uniform_int(0, static_cast<int>(rset.size()) - 1));
                    std::sort(rset.begin(), rset.end());
                }
                std::vector<int> cset;
                for (int alt = 0; alt < 3; ++alt) {
                    const int max_cols = static_cast<int>(std::min<double>(
                        r, entry_cap / std::max<std::size_t>(1, rset.size())));
                    if (max_cols < 1) break;
                    Eigen::VectorXd rv = Eigen::VectorXd::Zero(r);
                    for (int i : rset) rv[i] = 1.0;
                    Eigen::VectorXd colsum = R.tmul(rv);
                    std::vector<int> order(r);
                    std::iota(order.begin(), order.end(), 0);
                    std::stable_sort(order.begin(), order.end(),
                                     [&](int a, int b) { return colsum[a] > colsum[b]; });
                    cset.clear();
                    for (int j : order) {
                        if (static_cast<int>(cset.size()) >= max_cols) break;
                        if (colsum[j] <= 0) break;
                        cset.push_back(j);
                    }
                    if (cset.empty()) break;
                    Eigen::VectorXd cv = Eigen::VectorXd::Zero(r);
                    for (int j : cset) cv[j] = 1.0;
                    Eigen::VectorXd rowgain = R.mul(cv);
                    std::vector<int> nr;
                    for (int i : support)
                        if (rowgain[i] > 0) nr.push_back(i);
                    if (nr.empty()) break;
                    std::stable_sort(nr.begin(), nr.end(),
                                     [&](int a, int b) { return rowgain[a] > rowgain[b]; });
                    const int max_rows = static_cast<int>(std::min<double>(
                        nr.size(), entry_cap / std::max<std::size_t>(1, cset.size())));
                    if (max_rows < 1) break;
                    nr.resize(max_rows);
                    std::sort(nr.begin(), nr.end());
                    if (nr == rset) break;
                    rset = std::move(nr);
                }
                if (!rset.empty() && !cset.empty()) {
                    NAtom a;
                    a.kind = NAtom::Kind::rect;
                    a.rows = std::move(rset);
                    a.cols = std::move(cset);
                    // a 0/1 rectangle inside the entry cap automatically
                    // satisfies the trace cap: sqrt(|R||C|) <= sqrt(entry_cap)
                    // = trace_cap
                    while (!a.cols.empty() && a.entry_sum() > entry_cap + 1e-9) a.cols.pop_back();
                    if (!a.cols.empty()) candidates.push_back(std::move(a));
                }
            }
        }

        // greedy rank-1 atom: xt = x, 0/1 columns by restricted gains
        {
            Eigen::VectorXd colsum = R.tmul(x);
            std::vector<int> order(r);
            std::iota(order.begin(), order.end(), 0);
            std::stable_sort(order.begin(), order.end(),
                             [&](int a, int b) { return colsum[a] > colsum[b]; });
            Eigen::VectorXd yt = Eigen::VectorXd::Zero(r);
            const double xs = x.sum(), xn = x.norm();
            double ys = 0.0, yn2 = 0.0;
            for (int j : order) {
                if (colsum[j] <= 0) break;
                if (xs * (ys + 1.0) > entry_cap + 1e-9) break;
                if (xn * std::sqrt(yn2 + 1.0) > trace_cap + 1e-9) break;
                yt[j] = 1.0;
                ys += 1.0;
                yn2 += 1.0;
            }
            if (ys > 0) {
                NAtom a;
                a.kind = NAtom::Kind::rank1;
                a.xt = x;
                a.yt = std::move(yt);
                candidates.push_back(std::move(a));
            }
        }

        // spectral rank-1 atom, clipped to the box and rescaled into budgets
        if (spec_ok) {
            Eigen::VectorXd xt = spec_u.cwiseMax(0.0).cwiseMin(1.0).cwiseMin(x);
            Eigen::VectorXd yt = spec_v.cwiseMax(0.0).cwiseMin(1.0);
            const double es = xt.sum() * yt.sum();
            const double tn = xt.norm() * yt.norm();
            if (es > 1e-12 && tn > 1e-12) {
                const double shrink = std::min({1.0, entry_cap / es, trace_cap / tn});
                NAtom a;
                a.kind = NAtom::Kind::rank1;
                a.xt = std::move(xt);
                a.yt = yt * shrink;
                candidates.push_back(std::move(a));
            }
        }

        // evaluate candidates
        double local_best = -std::numeric_limits<double>::infinity();
        NAtom local_atom;
        double local_gain = 0.0;
        for (auto& atom : candidates) {
            const double gain = atom_gain_of(atom);
            const double v = violation_of(x, atom, rho_prime, gain);
            if (v > local_best) {
                local_best = v;
                local_atom = std::move(atom);
                local_gain = gain;
            }
        }

        // refine x once against the chosen atom's per-row gains
        Eigen::VectorXd local_x = x;
        if (local_atom.kind != NAtom::Kind::none) {
            Eigen::VectorXd gains = Eigen::VectorXd::Zero(r);
            switch (local_atom.kind) {
            case NAtom::Kind::rect: {
                Eigen::VectorXd cv = Eigen::VectorXd::Zero(r);
                for (int j : local_atom.cols) cv[j] = local_atom.scale;
                Eigen::VectorXd g = R.mul(cv);
                for (int i : local_atom.rows) gains[i] = g[i];
                break;
            }
            case NAtom::Kind::rank1:
                gains = local_atom.xt.cwiseProduct(R.mul(local_atom.yt));
                break;
            default: break;
            }
            const Eigen::VectorXd lower = local_atom.row_max(r).cwiseMin(1.0).cwiseMax(0.0);
            if (lower.sum() <= x_budget) {
                Eigen::VectorXd x2 = greedy_x(rw - gains, lower, x_budget);
                const double v2 = violation_of(x2, local_atom, rho_prime, local_gain);
                if (v2 > local_best) {
                    local_best = v2;
                    local_x = std::move(x2);
                }
            }
        }

        if (local_best > best.violation) {
            best.violation = local_best;
            best.rho_prime = rho_prime;
            best.selector.x = local_x;
            best.selector.n_sub = local_atom;
            best.selector.theta = rho_prime;
            best.selector.delta = p.K * rho_prime;
            found = true;
        }
    }
    if (!found) return std::nullopt;
    return best;
}

// ---------------------------------------------------------------------------
// Feasibility solver: ascending geometric grid on rho, penalty subgradient on
// w per grid point (the mask component is kept at N = w w^T, which lies in
// R_n(rho) whenever sum w <= rho n and makes W = (1-w)(1-w)^T >= 0 exactly).
// A zeta-first probe exploits that feasibility is monotone in rho: if even the
// largest budget fails against the oracle, the solve is flagged infeasible.
// ---------------------------------------------------------------------------

namespace detail {

// projection onto { 0 <= w <= 1, sum w <= budget }
inline void project_w(Eigen::VectorXd& w, double budget) {
    w = w.cwiseMax(0.0).cwiseMin(1.0);
    if (w.sum() <= budget) return;
    // bisection on the uniform shift
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double s = (w.array() - mid).cwiseMax(0.0).cwiseMin(1.0).sum();
        if (s > budget)
            lo = mid;
        else
            hi = mid;
    }
    w = (w.array() - hi).cwiseMax(0.0).cwiseMin(1.0);
}

struct PairBlock {
    std::vector<int> index;  // global node ids
    Eigen::MatrixXd AL;      // Ahat .* L(j1,j2) restricted to the pair
    double coeff_scale = 1.0;
};

struct InnerResult {
    Eigen::VectorXd w;
    bool feasible = false;
    double residual = 0.0;
};

// minimize oracle violation at fixed rho over w via projected subgradient
template <typename OracleFn>
InnerResult inner_solve(int n, double rho_budget, const Eigen::VectorXd& warm,
                        const BoostParams& p, OracleFn&& worst_witness) {
    InnerResult res;
    Eigen::VectorXd w = warm;
    project_w(w, rho_budget);
    Eigen::VectorXd best_w = w;
    double best_viol = std::numeric_limits<double>::infinity();
    int stale = 0;
    for (int it = 1; it <= p.inner_iters; ++it) {
        double viol = 0.0;
        Eigen::VectorXd g = Eigen::VectorXd::Zero(n);
        const bool any = worst_witness(w, viol, g);
        if (!any) {
            res.w = w;
            res.feasible = true;
            res.residual = 0.0;
            return res;
        }
        if (viol < best_viol - 1e-12) {
            best_viol = viol;
            best_w = w;
            stale = 0;
        } else if (++stale >= p.stale_break) {
            break;
        }
        const double gmax = g.cwiseAbs().maxCoeff();
        if (gmax <= 1e-300) break;
        w += (0.35 / std::sqrt(static_cast<double>(it))) * (g / gmax);
        project_w(w, rho_budget);
    }
    res.w = best_w;
    res.feasible = false;
    res.residual = best_viol;
    return res;
}

} // namespace detail

// subgradient of the violation w.r.t. w for the solver's N = w w^T mask
inline void witness_subgradient(const Eigen::MatrixXd& AL, const Eigen::VectorXd& w,
                                const ConstraintWitness& wit, double c1,
                                Eigen::VectorXd& g_out) {
    const int r = static_cast<int>(AL.rows());
    const Eigen::VectorXd omw = Eigen::VectorXd::Ones(r) - w;
    // M = rows(x) - N_sub; descent direction of the violation is
    // +c1 x - (AL.*M)(1-w) - (AL.*M)^T (1-w)
    const Eigen::VectorXd alv = AL * omw;
    Eigen::VectorXd term1 = wit.selector.x.cwiseProduct(alv); // (AL.*rows(x)) (1-w)
    Eigen::VectorXd term1t = AL.transpose() * wit.selector.x.cwiseProduct(omw);
    Eigen::VectorXd term2 = Eigen::VectorXd::Zero(r);
    Eigen::VectorXd term2t = Eigen::VectorXd::Zero(r);
    const NAtom& a = wit.selector.n_sub;
    switch (a.kind) {
    case NAtom::Kind::none: break;
    case NAtom::Kind::rect: {
        Eigen::VectorXd cv = Eigen::VectorXd::Zero(r);
        for (int j : a.cols) cv[j] = a.scale * omw[j];
        Eigen::VectorXd g = AL * cv;
        for (int i : a.rows) term2[i] = g[i];
        Eigen::VectorXd rv = Eigen::VectorXd::Zero(r);
        for (int i : a.rows) rv[i] = a.scale * omw[i];
        Eigen::VectorXd gt = AL.transpose() * rv;
        for (int j : a.cols) term2t[j] = gt[j];
        break;
    }
    case NAtom::Kind::rank1: {
        term2 = a.xt.cwiseProduct(AL * a.yt.cwiseProduct(omw));
        term2t = a.yt.cwiseProduct(AL.transpose() * a.xt.cwiseProduct(omw));
        break;
    }
    }
    g_out += c1 * wit.selector.x - (term1 - term2) - (term1t - term2t);
}

inline BoostSolution solve_boost(const Eigen::MatrixXd& A_hat, const Labelling& labels,
                                 const BoostParams& p) {
    p.validate();
    const int n = static_cast<int>(A_hat.rows());
    if (labels.n() != n) throw std::invalid_argument("solve_boost: label size mismatch");
    const std::vector<int> signs = labels.to_signs();
    Eigen::MatrixXd AL(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) AL(i, j) = A_hat(i, j) * signs[i] * signs[j];

    auto run_inner = [&](double rho, const Eigen::VectorXd& warm, std::uint64_t stream) {
        Rng rng(derive_stream(p.seed, stream, 0, "solve_boost"));
        auto oracle_once = [&](const Eigen::VectorXd& w, double& viol,
                               Eigen::VectorXd& g) -> bool {
            NAtom N = NAtom::outer(w);
            OracleQuery q;
            q.rho = rho;
            auto wit = oracle_separate(AL, w, N, p, q, rng);
            if (!wit) return false;
            viol = wit->violation;
            witness_subgradient(AL, w, *wit, p.c1, g);
            return true;
        };
        return detail::inner_solve(n, rho * n, warm, p, oracle_once);
    };

    // zeta-first probe: feasibility is monotone in rho
    auto probe = run_inner(p.zeta, Eigen::VectorXd::Zero(n), 1000);
    if (!probe.feasible) {
        BoostSolution sol;
        sol.rho = p.zeta;
        sol.w = probe.w;
        sol.N = NAtom::outer(probe.w);
        sol.feasible = false;
        sol.residual_violation = probe.residual;
        sol.min_mask_entry = 0.0;
        return sol;
    }

    // Locate the first feasible point of the ascending geometric grid. The
    // probe's weight mass is a lower hint for the needed budget; walking down
    // to the infeasible boundary and back up yields the same index as a full
    // ascending scan (per-grid-point RNG streams keep each solve identical
    // regardless of visit order).
    const double lo = 1.0 / n;
    const int G = p.rho_grid;
    auto rho_at = [&](int gi) {
        const double t = G == 1 ? 0.0 : static_cast<double>(gi) / (G - 1);
        return lo * std::pow(p.zeta / lo, t);
    };
    int hint = 0;
    const double need = probe.w.sum() / n;
    while (hint < G - 1 && rho_at(hint) < need) ++hint;
    hint = std::max(0, hint - 2);

    std::vector<int> feas_state(G, -1); // -1 unknown, 0 infeasible, 1 feasible
    std::vector<Eigen::VectorXd> w_at(G);
    auto eval_grid = [&](int gi) {
        if (feas_state[gi] < 0) {
            auto res = run_inner(rho_at(gi), probe.w, static_cast<std::uint64_t>(gi));
            feas_state[gi] = res.feasible ? 1 : 0;
            w_at[gi] = std::move(res.w);
        }
        return feas_state[gi] == 1;
    };
    int first_feasible = -1;
    if (eval_grid(hint)) {
        int gi = hint;
        while (gi > 0 && eval_grid(gi - 1)) --gi;
        first_feasible = gi;
    } else {
        for (int gi = hint + 1; gi < G; ++gi)
            if (eval_grid(gi)) {
                first_feasible = gi;
                break;
            }
    }

    BoostSolution sol;
    if (first_feasible >= 0) {
        sol.rho = rho_at(first_feasible);
        sol.w = w_at[first_feasible];
        sol.accepted_grid_index = first_feasible;
    } else {
        // the probe was feasible at zeta, so fall back to it
        sol.rho = p.zeta;
        sol.w = probe.w;
        sol.accepted_grid_index = G - 1;
    }
    sol.N = NAtom::outer(sol.w);
    sol.feasible = true;
    sol.min_mask_entry = 0.0; // (1-w)(1-w)^T >= 0 exactly
    return sol;
}

// ---------------------------------------------------------------------------
// Lemma-style witness feasibility check: w = w_base (0/1 corruption +
// disagreement indicator), N = indicator of the base-set square. Used by the
// test harness, not by the pipeline.
// ---------------------------------------------------------------------------

struct WitnessReport {
    bool feasible = true;
    double violation = 0.0;
    double rho = 0.0;
    std::optional<ConstraintWitness> witness;
};

inline WitnessReport check_witness_feasibility(const Eigen::MatrixXd& A_hat,
                                               const Labelling& labels,
                                               const Eigen::VectorXd& w_base,
                                               const BoostParams& p) {
    p.validate();
    const int n = static_cast<int>(A_hat.rows());
    for (int i = 0; i < n; ++i)
        if (w_base[i] != 0.0 && w_base[i] != 1.0)
            throw std::invalid_argument("check_witness_feasibility: w_base must be 0/1");
    const double rho = std::max(w_base.sum() / n, 1.0 / n);
    if (rho > p.zeta + 1e-12)
        throw std::invalid_argument(
            "check_witness_feasibility: base set exceeds the zeta budget");
    const std::vector<int> signs = labels.to_signs();
    Eigen::MatrixXd AL(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) AL(i, j) = A_hat(i, j) * signs[i] * signs[j];
    Rng rng(derive_stream(p.seed, 1, 0, "witness_check"));
    NAtom N = NAtom::outer(w_base);
    OracleQuery q;
    q.rho = rho;
    WitnessReport rep;
    rep.rho = rho;
    auto wit = oracle_separate(AL, w_base, N, p, q, rng);
    if (wit) {
        rep.feasible = false;
        rep.violation = wit->violation;
        rep.witness = std::move(wit);
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Label flipping and the boosting loops
// ---------------------------------------------------------------------------

inline Labelling flip_step_2(const Labelling& labels, const Eigen::VectorXd& w,
                             const BoostParams& p) {
    if (labels.k != 2) throw std::invalid_argument("flip_step_2: k must be 2");
    Labelling out = labels;
    const double thr = p.flip_cut(w);
    for (int i = 0; i < out.n(); ++i)
        if (w[i] >= thr) out.ids[i] = 1 - out.ids[i];
    return out;
}

inline Labelling flip_step_k(const Labelling& labels, const Eigen::VectorXd& w,
                             const BoostParams& p, Rng& rng) {
    if (labels.k < 3) throw std::invalid_argument("flip_step_k: k must be >= 3");
    Labelling out = labels;
    const double thr = p.flip_cut(w);
    for (int i = 0; i < out.n(); ++i) {
        if (w[i] >= thr) {
            int pick = rng.uniform_int(0, labels.k - 2);
            if (pick >= out.ids[i]) ++pick; // uniform among the other k-1 ids
            out.ids[i] = pick;
        }
    }
    return out;
}

// k-community solve: one (rho, w) against all pair-restricted constraints.
inline BoostSolution solve_boost_k(const Eigen::MatrixXd& A_hat, const Labelling& labels,
                                   const BoostParams& p) {
    p.validate();
    const int n = static_cast<int>(A_hat.rows());
    const int k = labels.k;
    // pair blocks under the current partition
    std::vector<std::vector<int>> groups(k);
    for (int i = 0; i < n; ++i) groups[labels.ids[i]].push_back(i);
    std::vector<detail::PairBlock> pairs;
    for (int j1 = 0; j1 < k; ++j1)
        for (int j2 = j1 + 1; j2 < k; ++j2) {
            detail::PairBlock b;
            b.index = groups[j1];
            b.index.insert(b.index.end(), groups[j2].begin(), groups[j2].end());
            std::sort(b.index.begin(), b.index.end());
            const int r = static_cast<int>(b.index.size());
            if (r < 2) continue;
            b.AL.resize(r, r);
            for (int ii = 0; ii < r; ++ii)
                for (int jj = 0; jj < r; ++jj) {
                    const int gi = b.index[ii], gj = b.index[jj];
                    const double li = labels.ids[gi] == j1 ? 1.0 : -1.0;
                    const double lj = labels.ids[gj] == j1 ? 1.0 : -1.0;
                    b.AL(ii, jj) = A_hat(gi, gj) * li * lj;
                }
            b.coeff_scale = static_cast<double>(r) / n;
            pairs.push_back(std::move(b));
        }

    auto run_inner = [&](double rho, const Eigen::VectorXd& warm, std::uint64_t stream) {
        Rng rng(derive_stream(p.seed, stream, 1, "solve_boost_k"));
        auto worst_over_pairs = [&](const Eigen::VectorXd& w, double& viol,
                                    Eigen::VectorXd& g) -> bool {
            bool any = false;
            double worst = 0.0;
            for (const auto& b : pairs) {
                const int r = static_cast<int>(b.index.size());
                Eigen::VectorXd wloc(r);
                for (int ii = 0; ii < r; ++ii) wloc[ii] = w[b.index[ii]];
                NAtom N = NAtom::outer(wloc);
                OracleQuery q;
                q.rho = rho;
                q.rho_prime_min = k * rho / (p.alpha * p.K);
                q.coeff_scale = b.coeff_scale;
                auto wit = oracle_separate(b.AL, wloc, N, p, q, rng);
                if (wit) {
                    any = true;
                    if (wit->violation > worst) worst = wit->violation;
                    Eigen::VectorXd gloc = Eigen::VectorXd::Zero(r);
                    witness_subgradient(b.AL, wloc, *wit, p.c1 * b.coeff_scale, gloc);
                    for (int ii = 0; ii < r; ++ii) g[b.index[ii]] += gloc[ii];
                }
            }
            viol = worst;
            return any;
        };
        return detail::inner_solve(n, rho * n, warm, p, worst_over_pairs);
    };

    auto probe = run_inner(p.zeta, Eigen::VectorXd::Zero(n), 1000);
    if (!probe.feasible) {
        BoostSolution sol;
        sol.rho = p.zeta;
        sol.w = probe.w;
        sol.N = NAtom::outer(probe.w);
        sol.feasible = false;
        sol.residual_violation = probe.residual;
        return sol;
    }
    const double lo = 1.0 / n;
    const int G = p.rho_grid;
    auto rho_at = [&](int gi) {
        const double t = G == 1 ? 0.0 : static_cast<double>(gi) / (G - 1);
        return lo * std::pow(p.zeta / lo, t);
    };
    int hint = 0;
    const double need = probe.w.sum() / n;
    while (hint < G - 1 && rho_at(hint) < need) ++hint;
    hint = std::max(0, hint - 2);
    std::vector<int> feas_state(G, -1);
    std::vector<Eigen::VectorXd> w_at(G);
    auto eval_grid = [&](int gi) {
        if (feas_state[gi] < 0) {
            auto res = run_inner(rho_at(gi), probe.w, static_cast<std::uint64_t>(gi));
            feas_state[gi] = res.feasible ? 1 : 0;
            w_at[gi] = std::move(res.w);
        }
        return feas_state[gi] == 1;
    };
    int first_feasible = -1;
    if (eval_grid(hint)) {
        int gi = hint;
        while (gi > 0 && eval_grid(gi - 1)) --gi;
        first_feasible = gi;
    } else {
        for (int gi = hint + 1; gi < G; ++gi)
            if (eval_grid(gi)) {
                first_feasible = gi;
                break;
            }
    }
    BoostSolution sol;
    if (first_feasible >= 0) {
        sol.rho = rho_at(first_feasible);
        sol.w = w_at[first_feasible];
        sol.accepted_grid_index = first_feasible;
    } else {
        sol.rho = p.zeta;
        sol.w = probe.w;
        sol.accepted_grid_index = G - 1;
    }
    sol.N = NAtom::outer(sol.w);
    sol.feasible = true;
    return sol;
}

enum class BoostMode { two, k, z2 };

struct RoundTrace {
    struct Row {
        int round = 0;
        double rho = 0.0;
        int flips = 0;
        bool feasible = true;
        double error = -1.0; // vs truth when supplied
    };
    std::vector<Row> rows;
};

inline Labelling boost_loop(const Eigen::MatrixXd& A_hat, const Labelling& init_labels,
                            const BoostParams& p, BoostMode mode, Rng& rng,
                            const Labelling* truth = nullptr, RoundTrace* trace = nullptr) {
    const int n = static_cast<int>(A_hat.rows());
    Labelling labels = init_labels;
    const int rounds = p.max_rounds > 0
                           ? p.max_rounds
                           : static_cast<int>(std::ceil(
                                 10.0 * (mode == BoostMode::k ? labels.k : 1) * std::log(n)));
    std::vector<int> two_ago;
    for (int t = 0; t < rounds; ++t) {
        BoostSolution sol = mode == BoostMode::k ? solve_boost_k(A_hat, labels, p)
                                                 : solve_boost(A_hat, labels, p);
        Labelling next = labels;
        int flips = 0;
        if (sol.feasible) {
            if (mode == BoostMode::k) {
                next = flip_step_k(labels, sol.w, p, rng);
            } else {
                next = flip_step_2(labels, sol.w, p);
            }
            for (int i = 0; i < n; ++i)
                if (next.ids[i] != labels.ids[i]) ++flips;
        } // infeasible solve: skip the flip this round
        if (trace) {
            RoundTrace::Row row;
            row.round = t;
            row.rho = sol.rho;
            row.flips = flips;
            row.feasible = sol.feasible;
            if (truth) row.error = match_error(next, *truth);
            trace->rows.push_back(row);
        }
        const bool same = next.ids == labels.ids;
        const bool cycle = !two_ago.empty() && next.ids == two_ago; // period-2 flip cycles
        two_ago = labels.ids;
        labels = std::move(next);
        if ((same && t >= 1) || cycle) break;
    }
    return labels;
}

} // namespace rsbm
