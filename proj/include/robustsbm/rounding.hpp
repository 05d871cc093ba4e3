#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "robustsbm/rng.hpp"
#include "robustsbm/stats.hpp"

namespace rsbm {

struct Labelling {
    int k = 2;
    std::vector<int> ids; // in [0, k)

    int n() const { return static_cast<int>(ids.size()); }

    static Labelling from_signs(const std::vector<int>& signs) {
        Labelling l;
        l.k = 2;
        l.ids.resize(signs.size());
        for (size_t i = 0; i < signs.size(); ++i) l.ids[i] = signs[i] > 0 ? 0 : 1;
        return l;
    }

    std::vector<int> to_signs() const {
        if (k != 2) throw std::logic_error("Labelling::to_signs: k must be 2");
        std::vector<int> s(ids.size());
        for (size_t i = 0; i < ids.size(); ++i) s[i] = ids[i] == 0 ? 1 : -1;
        return s;
    }
};

// ---------------------------------------------------------------------------
// Hungarian algorithm (O(k^3)), used to maximize label agreement over
// permutations. k is small (<= 32) throughout.
// ---------------------------------------------------------------------------

namespace detail {

// Minimum-cost perfect assignment on a square cost matrix; returns the column
// assigned to each row. Standard potentials formulation.
inline std::vector<int> hungarian_min(const Eigen::MatrixXd& cost) {
    const int n = static_cast<int>(cost.rows());
    const double INF = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<int> p(n + 1, 0), way(n + 1, 0);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(n + 1, INF);
        std::vector<char> used(n + 1, 0);
        do {
            used[j0] = 1;
            const int i0 = p[j0];
            double delta = INF;
            int j1 = 0;
            for (int j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0);
    }
    std::vector<int> row_to_col(n, -1);
    for (int j = 1; j <= n; ++j)
        if (p[j] > 0) row_to_col[p[j] - 1] = j - 1;
    return row_to_col;
}

} // namespace detail

// Fraction of misclassified nodes, minimized over label permutations.
inline double match_error(const Labelling& pred, const Labelling& truth) {
    const int n = pred.n();
    if (n != truth.n()) throw std::invalid_argument("match_error: size mismatch");
    const int k = std::max(pred.k, truth.k);
    for (int id : pred.ids)
        if (id < 0 || id >= k) throw std::invalid_argument("match_error: label id out of range");
    for (int id : truth.ids)
        if (id < 0 || id >= k) throw std::invalid_argument("match_error: label id out of range");
    Eigen::MatrixXd agree = Eigen::MatrixXd::Zero(k, k);
    for (int i = 0; i < n; ++i) agree(pred.ids[i], truth.ids[i]) += 1.0;
    // maximize agreement == minimize (n - agreement)
    auto assign = detail::hungarian_min(-agree);
    double matched = 0.0;
    for (int r = 0; r < k; ++r) matched += agree(r, assign[r]);
    return (n - matched) / static_cast<double>(n);
}

inline double match_error_signs(const std::vector<int>& pred, const std::vector<int>& truth) {
    return match_error(Labelling::from_signs(pred), Labelling::from_signs(truth));
}

// ---------------------------------------------------------------------------
// k-means on matrix rows: k-means++ seeding, Lloyd with farthest-point
// reseeding of empty clusters, restarts, then single-swap local search.
// ---------------------------------------------------------------------------

struct KmeansConfig {
    int restarts = 20;
    int max_iters = 100;
    std::uint64_t seed = 0;
};

namespace detail {

struct KmeansRun {
    std::vector<int> labels;
    double objective = std::numeric_limits<double>::infinity();
};

inline double sqdist(const Eigen::MatrixXd& W, int row, const Eigen::RowVectorXd& c) {
    return (W.row(row) - c).squaredNorm();
}

inline KmeansRun kmeans_once(const Eigen::MatrixXd& W, int k, int max_iters, Rng& rng) {
    const int n = static_cast<int>(W.rows());
    std::vector<Eigen::RowVectorXd> centers;
    centers.reserve(k);
    // k-means++ seeding
    centers.push_back(W.row(rng.uniform_int(0, n - 1)));
    Eigen::VectorXd d2(n);
    for (int i = 0; i < n; ++i) d2[i] = sqdist(W, i, centers[0]);
    while (static_cast<int>(centers.size()) < k) {
        const double total = d2.sum();
        int pick = 0;
        if (total <= 0.0) {
            pick = rng.uniform_int(0, n - 1);
        } else {
            double r = rng.uniform() * total, acc = 0.0;
            for (int i = 0; i < n; ++i) {
                acc += d2[i];
                if (acc >= r) {
                    pick = i;
                    break;
                }
            }
        }
        centers.push_back(W.row(pick));
        for (int i = 0; i < n; ++i) d2[i] = std::min(d2[i], sqdist(W, i, centers.back()));
    }

    std::vector<int> labels(n, 0);
    for (int it = 0; it < max_iters; ++it) {
        bool changed = false;
        for (int i = 0; i < n; ++i) {
            int best = 0;
            double bd = sqdist(W, i, centers[0]);
            for (int c = 1; c < k; ++c) {
                const double d = sqdist(W, i, centers[c]);
                if (d < bd) {
                    bd = d;
                    best = c;
                }
            }
            if (labels[i] != best) {
                labels[i] = best;
                changed = true;
            }
        }
        // recompute centers; reseed empty clusters at the farthest point
        std::vector<int> counts(k, 0);
        std::vector<Eigen::RowVectorXd> sums(k, Eigen::RowVectorXd::Zero(W.cols()));
        for (int i = 0; i < n; ++i) {
            sums[labels[i]] += W.row(i);
            ++counts[labels[i]];
        }
        for (int c = 0; c < k; ++c) {
            if (counts[c] > 0) {
                centers[c] = sums[c] / counts[c];
            } else {
                int far = 0;
                double fd = -1.0;
                for (int i = 0; i < n; ++i) {
                    const double d = sqdist(W, i, centers[labels[i]]);
                    if (d > fd) {
                        fd = d;
                        far = i;
                    }
                }
                centers[c] = W.row(far);
                labels[far] = c;
                changed = true;
            }
        }
        if (!changed) break;
    }

    KmeansRun run;
    run.labels = labels;
    run.objective = 0.0;
    for (int i = 0; i < n; ++i) run.objective += sqdist(W, i, centers[labels[i]]);
    return run;
}

// Move single points between clusters while the objective strictly improves.
inline void kmeans_local_search(const Eigen::MatrixXd& W, int k, KmeansRun& run) {
    const int n = static_cast<int>(W.rows());
    bool improved = true;
    int guard = 0;
    while (improved && guard++ < 200) {
        improved = false;
        std::vector<int> counts(k, 0);
        std::vector<Eigen::RowVectorXd> sums(k, Eigen::RowVectorXd::Zero(W.cols()));
        for (int i = 0; i < n; ++i) {
            sums[run.labels[i]] += W.row(i);
            ++counts[run.labels[i]];
        }
        auto objective = [&]() {
            double o = 0.0;
            for (int i = 0; i < n; ++i)
                o += (W.row(i) - sums[run.labels[i]] / counts[run.labels[i]]).squaredNorm();
            return o;
        };
        double cur = objective();
        for (int i = 0; i < n; ++i) {
            const int from = run.labels[i];
            if (counts[from] <= 1) continue;
            for (int to = 0; to < k; ++to) {
                if (to == from) continue;
                sums[from] -= W.row(i);
                --counts[from];
                sums[to] += W.row(i);
                ++counts[to];
                run.labels[i] = to;
                const double cand = objective();
                if (cand + 1e-12 < cur) {
                    cur = cand;
                    improved = true;
                    break;
                }
                // revert
                sums[to] -= W.row(i);
                --counts[to];
                sums[from] += W.row(i);
                ++counts[from];
                run.labels[i] = from;
            }
        }
        run.objective = cur;
    }
}

} // namespace detail

inline Labelling kmeans_rows(const Eigen::MatrixXd& W, int k, const KmeansConfig& cfg) {
    if (k < 2) throw std::invalid_argument("kmeans_rows: k >= 2");
    detail::KmeansRun best;
    for (int r = 0; r < cfg.restarts; ++r) {
        Rng rng(derive_stream(cfg.seed, r, 0, "kmeans"));
        auto run = detail::kmeans_once(W, k, cfg.max_iters, rng);
        if (run.objective < best.objective) best = std::move(run); // earliest restart wins ties
    }
    detail::kmeans_local_search(W, k, best);
    Labelling out;
    out.k = k;
    out.ids = std::move(best.labels);
    return out;
}

inline double kmeans_objective(const Eigen::MatrixXd& W, const Labelling& l) {
    const int n = l.n();
    std::vector<int> counts(l.k, 0);
    std::vector<Eigen::RowVectorXd> sums(l.k, Eigen::RowVectorXd::Zero(W.cols()));
    for (int i = 0; i < n; ++i) {
        sums[l.ids[i]] += W.row(i);
        ++counts[l.ids[i]];
    }
    double o = 0.0;
    for (int i = 0; i < n; ++i)
        if (counts[l.ids[i]] > 0)
            o += (W.row(i) - sums[l.ids[i]] / counts[l.ids[i]]).squaredNorm();
    return o;
}

// ---------------------------------------------------------------------------
// Sign rounding for Z2: signs of the top right singular vector of W - J/2.
// ---------------------------------------------------------------------------

struct SignRoundResult {
    Labelling labels;
    bool degenerate = false;
    double singular_gap = 0.0;
};

inline SignRoundResult sign_round_z2(const Eigen::MatrixXd& W) {
    const int n = static_cast<int>(W.rows());
    if (W.cols() != n) throw std::invalid_argument("sign_round_z2: W must be square");
    Eigen::MatrixXd B = W.array() - 0.5;
    auto [first, second] = top_two_singular(B, 1e-10, 800);
    SignRoundResult out;
    out.singular_gap = first.sigma - second.sigma;
    out.degenerate = out.singular_gap < 1e-10;
    std::vector<int> signs(n);
    for (int i = 0; i < n; ++i) signs[i] = first.v[i] >= 0.0 ? 1 : -1;
    if (out.degenerate) {
        // deterministic tie-break: first coordinate positive
        if (signs[0] < 0)
            for (auto& s : signs) s = -s;
    }
    out.labels = Labelling::from_signs(signs);
    return out;
}

} // namespace rsbm
