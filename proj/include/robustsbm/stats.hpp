#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "robustsbm/instance.hpp"
#include "robustsbm/rng.hpp"

namespace rsbm {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Demeaning constant D(p,q) = log((1-q)/(1-p)) / log(p(1-q)/(q(1-p))).
// Lies strictly between min(p,q) and max(p,q).
inline double dconst(double p, double q) {
    if (!(p > 0.0 && p < 1.0 && q > 0.0 && q < 1.0))
        throw std::domain_error("dconst: p,q must be in (0,1)");
    if (p == q)
        throw std::domain_error("dconst: p == q");
    const double num = std::log((1.0 - q) / (1.0 - p));
    const double den = std::log(p * (1.0 - q) / (q * (1.0 - p)));
    return num / den;
}

// Likelihood ratio R(p,q) = p(1-q) / (q(1-p)).
inline double rconst(double p, double q) {
    if (!(p > 0.0 && p < 1.0 && q > 0.0 && q < 1.0))
        throw std::domain_error("rconst: p,q must be in (0,1)");
    return p * (1.0 - q) / (q * (1.0 - p));
}

// Signal-to-noise ratio C = (sqrt(a) - sqrt(b))^2.
inline double snr(double a, double b) {
    if (b < 0.0 || a < b)
        throw std::domain_error("snr: need 0 <= b <= a");
    const double d = std::sqrt(a) - std::sqrt(b);
    return d * d;
}

struct DemeanedMatrix {
    Matrix mat;
    double demean_constant = 0.0;
    int n() const { return static_cast<int>(mat.rows()); }
};

inline DemeanedMatrix demean(const Graph& g, double a, double b) {
    if (!(b < a)) throw std::domain_error("demean: need b < a");
    const double n = static_cast<double>(g.n);
    const double D = dconst(a / n, b / n);
    DemeanedMatrix out;
    out.demean_constant = D;
    out.mat = g.adj.array() - D;
    return out;
}

// ---------------------------------------------------------------------------
// Resolvability (exact greedy oracle).
//
// slack = min over x in [0,1]^n with sum(x) <= budget_frac*n of
//         <X, rows(x)> - d1*sum(x), plus d2*n,
// where rows(x) stacks x_i * ones^T. X is (d1,d2)-resolvable iff slack >= 0.
// The minimum of the linear objective over the box with one budget constraint
// is attained by filling the most negative (row_sum - d1) coordinates, with at
// most one fractional coordinate at the budget boundary.
// ---------------------------------------------------------------------------

struct ResolvabilityParams {
    double d1 = 0.0;
    double d2 = 0.0;
    double budget_frac = 0.1;
};

struct ResolvabilityResult {
    double slack = 0.0;
    Vector worst_x;
};

inline ResolvabilityResult resolvability_slack(const Matrix& X, const ResolvabilityParams& p) {
    if (p.d1 < 0.0 || p.d2 < 0.0) throw std::domain_error("resolvability_slack: d1,d2 >= 0");
    if (!(p.budget_frac > 0.0 && p.budget_frac <= 0.5))
        throw std::domain_error("resolvability_slack: budget_frac in (0, 0.5]");
    const int n = static_cast<int>(X.rows());
    Vector rs = X.rowwise().sum();
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int i, int j) {
        return rs[i] - p.d1 < rs[j] - p.d1;
    });
    double budget = p.budget_frac * n;
    Vector x = Vector::Zero(n);
    double acc = 0.0;
    for (int idx : order) {
        const double gain = rs[idx] - p.d1;
        if (gain >= 0.0 || budget <= 0.0) break;
        const double take = std::min(1.0, budget);
        x[idx] = take;
        acc += take * gain;
        budget -= take;
    }
    return ResolvabilityResult{acc + p.d2 * n, std::move(x)};
}

// ---------------------------------------------------------------------------
// Best combinatorial rectangle sum, heuristic with achieved-value certificate.
// ---------------------------------------------------------------------------

enum class RectMode { max, min };

struct RectResult {
    double value = 0.0;
    std::vector<int> rows, cols;
};

namespace detail {

inline std::vector<int> top_indices(const Vector& score, int m) {
    const int n = static_cast<int>(score.size());
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int i, int j) { return score[i] > score[j]; });
    order.resize(std::min(m, n));
    std::sort(order.begin(), order.end());
    return order;
}

inline double rect_sum(const Matrix& M, const std::vector<int>& rows, const std::vector<int>& cols) {
    double s = 0.0;
    for (int i : rows)
        for (int j : cols) s += M(i, j);
    return s;
}

} // namespace detail

inline RectResult best_rectangle_sum(const Matrix& M, int n1, int n2, RectMode mode,
                                     Rng& rng, int restarts = 10) {
    const int n = static_cast<int>(M.rows());
    if (n1 < 1 || n2 < 1 || n1 > n || n2 > n)
        throw std::domain_error("best_rectangle_sum: need 1 <= n1,n2 <= n");
    const Matrix S = (mode == RectMode::max) ? M : Matrix(-M);

    RectResult best;
    best.value = -std::numeric_limits<double>::infinity();
    auto consider = [&](const std::vector<int>& rows, const std::vector<int>& cols) {
        const double v = detail::rect_sum(S, rows, cols);
        if (v > best.value) best = RectResult{v, rows, cols};
    };

    // small column spaces admit exact enumeration: for a fixed column set the
    // optimal rows are the top-n1 by restricted sums
    double log_combos = 0.0;
    for (int i = 0; i < n2; ++i) log_combos += std::log((n - i) / double(i + 1));
    if (log_combos <= std::log(4096.0)) {
        std::vector<int> cols(n2);
        std::iota(cols.begin(), cols.end(), 0);
        while (true) {
            Vector row_score = Vector::Zero(n);
            for (int j : cols) row_score += S.col(j);
            consider(detail::top_indices(row_score, n1), cols);
            int i = n2 - 1;
            while (i >= 0 && cols[i] == n - n2 + i) --i;
            if (i < 0) break;
            ++cols[i];
            for (int j = i + 1; j < n2; ++j) cols[j] = cols[j - 1] + 1;
        }
        if (mode == RectMode::min) best.value = -best.value;
        return best;
    }

    for (int r = 0; r < restarts; ++r) {
        std::vector<int> cols;
        if (r == 0) {
            cols = detail::top_indices(S.colwise().sum().transpose(), n2);
        } else {
            std::vector<int> perm(n);
            std::iota(perm.begin(), perm.end(), 0);
            for (int i = n - 1; i > 0; --i) std::swap(perm[i], perm[rng.uniform_int(0, i)]);
            cols.assign(perm.begin(), perm.begin() + n2);
            std::sort(cols.begin(), cols.end());
        }
        std::vector<int> rows;
        for (int iter = 0; iter < 50; ++iter) {
            Vector row_score = Vector::Zero(n);
            for (int j : cols) row_score += S.col(j);
            auto new_rows = detail::top_indices(row_score, n1);
            Vector col_score = Vector::Zero(n);
            for (int i : new_rows) col_score += S.row(i).transpose();
            auto new_cols = detail::top_indices(col_score, n2);
            const bool fixed = (new_rows == rows && new_cols == cols);
            rows = std::move(new_rows);
            cols = std::move(new_cols);
            if (fixed) break;
        }
        consider(rows, cols);
    }
    if (mode == RectMode::min) best.value = -best.value;
    return best;
}

// Nodes with degree <= threshold.
inline std::vector<int> prune_high_degree(const Graph& g, double degree_threshold) {
    if (!(degree_threshold > 0.0))
        throw std::domain_error("prune_high_degree: threshold > 0");
    std::vector<int> keep;
    Vector deg = g.adj.rowwise().sum();
    for (int i = 0; i < g.n; ++i)
        if (deg[i] <= degree_threshold) keep.push_back(i);
    return keep;
}

// ---------------------------------------------------------------------------
// Largest singular value via power iteration on M^T M, with a fresh-restart
// deflation safeguard. Also exposes the top singular pair(s), which the SDP
// solvers use for subgradients.
// ---------------------------------------------------------------------------

struct SingularPair {
    double sigma = 0.0;
    Vector u, v;
};

struct OpnormResult {
    double value = 0.0;
    bool converged = false;
    int iterations = 0;
};

namespace detail {

inline SingularPair power_top_pair(const Matrix& M, Rng& rng, double rel_tol, int max_iters,
                                   bool* converged = nullptr,
                                   const SingularPair* deflate = nullptr) {
    const int n = static_cast<int>(M.cols());
    Vector v(n);
    for (int i = 0; i < n; ++i) v[i] = rng.normal();
    if (deflate) v -= deflate->v * deflate->v.dot(v);
    double nv = v.norm();
    v /= (nv > 0 ? nv : 1.0);
    double sigma = 0.0;
    bool ok = false;
    int it = 0;
    Vector u;
    for (; it < max_iters; ++it) {
        u = M * v;
        if (deflate) u -= deflate->u * (deflate->sigma * deflate->v.dot(v));
        Vector w = M.transpose() * u;
        if (deflate) w -= deflate->v * (deflate->sigma * deflate->u.dot(u));
        const double nw = w.norm();
        if (nw <= 0.0) break;
        v = w / nw;
        const double s = std::sqrt(nw);
        if (it > 0 && std::abs(s - sigma) <= rel_tol * std::max(1.0, std::abs(s))) {
            sigma = s;
            ok = true;
            ++it;
            break;
        }
        sigma = s;
    }
    u = M * v;
    if (deflate) u -= deflate->u * (deflate->sigma * deflate->v.dot(v));
    const double nu = u.norm();
    if (nu > 0) u /= nu;
    if (converged) *converged = ok;
    return SingularPair{sigma, std::move(u), std::move(v)};
}

} // namespace detail

inline SingularPair top_singular_pair(const Matrix& M, double rel_tol = 1e-9,
                                      int max_iters = 500, std::uint64_t seed = 0x5eedULL,
                                      bool* converged = nullptr) {
    Rng rng(seed);
    bool ok1 = false, ok2 = false;
    SingularPair p1 = detail::power_top_pair(M, rng, rel_tol, max_iters, &ok1);
    // safeguard restart: a second random start, keep the larger estimate
    SingularPair p2 = detail::power_top_pair(M, rng, rel_tol, max_iters, &ok2);
    if (converged) *converged = ok1 || ok2;
    return (p2.sigma > p1.sigma) ? p2 : p1;
}

// Top two singular values (second obtained after deflating the first).
inline std::pair<SingularPair, SingularPair> top_two_singular(const Matrix& M,
                                                              double rel_tol = 1e-9,
                                                              int max_iters = 500,
                                                              std::uint64_t seed = 0x5eedULL) {
    SingularPair first = top_singular_pair(M, rel_tol, max_iters, seed);
    Rng rng(mix64(seed + 1));
    bool ok = false;
    SingularPair second = detail::power_top_pair(M, rng, rel_tol, max_iters, &ok, &first);
    return {std::move(first), std::move(second)};
}

inline OpnormResult opnorm(const Matrix& M, double rel_tol = 1e-6, int max_iters = 1000) {
    for (int i = 0; i < M.rows(); ++i)
        for (int j = 0; j < M.cols(); ++j)
            if (!std::isfinite(M(i, j))) throw std::domain_error("opnorm: non-finite entry");
    bool ok = false;
    SingularPair p = top_singular_pair(M, rel_tol, max_iters, 0x5eedULL, &ok);
    return OpnormResult{p.sigma, ok, max_iters};
}

// Extreme eigenvalues of a symmetric matrix via power iteration on shifted
// matrices; returns (lambda_max with vector, lambda_min with vector).
struct EigenPair {
    double lambda = 0.0;
    Vector v;
};

inline std::pair<EigenPair, EigenPair> extreme_eigs_sym(const Matrix& M, double rel_tol = 1e-8,
                                                        int max_iters = 400,
                                                        std::uint64_t seed = 0x5eedULL) {
    const int n = static_cast<int>(M.rows());
    // Gershgorin-style shift so both ends become dominant under shifting
    const double shift = M.cwiseAbs().rowwise().sum().maxCoeff() + 1.0;
    Rng rng(seed);
    auto run = [&](double sgn) {
        Vector v(n);
        for (int i = 0; i < n; ++i) v[i] = rng.normal();
        v.normalize();
        double lam = 0.0;
        for (int it = 0; it < max_iters; ++it) {
            Vector w = sgn * (M * v) + shift * v;
            const double nw = w.norm();
            if (nw <= 0) break;
            w /= nw;
            const double l = w.dot(M * w); // Rayleigh quotient
            if (it > 3 && std::abs(l - lam) <= rel_tol * std::max(1.0, std::abs(l))) {
                lam = l;
                v = w;
                break;
            }
            lam = l;
            v = w;
        }
        return EigenPair{lam, v};
    };
    EigenPair top = run(+1.0);
    EigenPair bottom = run(-1.0);
    return {std::move(top), std::move(bottom)};
}

} // namespace rsbm
