#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "robustsbm/instance.hpp"
#include "robustsbm/rng.hpp"
#include "robustsbm/stats.hpp"

namespace rsbm {

// ---------------------------------------------------------------------------
// Initialization SDP
//
//   maximize sum_ij W_ij
//   s.t.     0 <= W_ij, F_ij <= 1,   ||W||_1 <= n,
//            ||(A - (a/n) J - F) .* W||_op <= chi * sqrt(a+b)
//
// (Z2 variant: demean by lambda J / sqrt(n), slack matrix D, bound 3 sqrt(n).)
//
// First-order scheme: the objective pulls W toward J, spectral violations are
// repaired along the extreme eigen/singular pair, the box is clipped, and the
// trace norm is projected by soft-clipping the spectrum of W. Feasibility of
// the returned iterate is audited post hoc with dense decompositions.
// ---------------------------------------------------------------------------

struct InitSolverConfig {
    int max_iters = 60;
    double step0 = 0.03;       // objective step, decays as 1/sqrt(t)
    double repair_damp = 0.9;  // damping of the first-order spectral repair
    int repair_rounds = 5;     // repair sweeps per iteration
    double plateau_rel = 1e-4; // stop when the feasible objective stalls
    std::uint64_t seed = 0;
    double tol_feas = 0.02;    // relative feasibility tolerance

    void validate() const {
        if (max_iters < 1) throw std::invalid_argument("InitSolverConfig: max_iters >= 1");
        if (!(tol_feas > 0.0 && tol_feas <= 0.1))
            throw std::invalid_argument("InitSolverConfig: tol_feas in (0, 0.1]");
    }
};

struct InitFeasibility {
    double spectral_violation = 0.0;
    double trace_norm_excess = 0.0;
    double box_violation = 0.0;
};

struct InitSolution {
    Eigen::MatrixXd W;
    Eigen::MatrixXd slack_matrix; // F for the SBM program, D for the Z2 program
    double objective = 0.0;
    InitFeasibility feasibility;
    bool feasible_found = false;
    double spectral_bound = 0.0;
};

namespace detail {

// Projection of a symmetric matrix onto { ||.||_1 <= r } by soft-thresholding
// its eigenvalues (exact l1-ball projection of the spectrum).
inline void trace_norm_project_sym(Eigen::MatrixXd& W, double r) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (W + W.transpose()));
    Eigen::VectorXd ev = es.eigenvalues();
    const double total = ev.cwiseAbs().sum();
    if (total <= r) return;
    std::vector<double> mags(ev.size());
    for (int i = 0; i < ev.size(); ++i) mags[i] = std::abs(ev[i]);
    std::sort(mags.begin(), mags.end(), std::greater<double>());
    double acc = 0.0, tau = 0.0;
    for (size_t k = 0; k < mags.size(); ++k) {
        acc += mags[k];
        const double cand = (acc - r) / static_cast<double>(k + 1);
        if (k + 1 == mags.size() || cand >= mags[k + 1]) {
            tau = cand;
            break;
        }
    }
    tau = std::max(0.0, tau);
    for (int i = 0; i < ev.size(); ++i) {
        const double m = std::max(0.0, std::abs(ev[i]) - tau);
        ev[i] = ev[i] >= 0 ? m : -m;
    }
    W = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

inline double trace_norm(const Eigen::MatrixXd& W) {
    Eigen::BDCSVD<Eigen::MatrixXd> svd(W);
    return svd.singularValues().sum();
}

struct InitProblem {
    Eigen::MatrixXd A0;  // demeaned observation
    double bound = 0.0;  // spectral bound
    bool symmetric = true;
};

// One spectral-repair sweep: decompose M = (A0 - F) .* W, take every
// eigen/singular direction beyond the bound, and apply a per-direction damped
// Newton step split between W and F. Returns the worst violation seen.
struct RepairWorkspace {
    Eigen::MatrixXd Usub, Vsub; // warm-started subspace for the nonsymmetric case
    Eigen::MatrixXd Vsym;       // warm-started block for the symmetric case
    bool init = false;
};

inline double spectral_repair_sweep(Eigen::MatrixXd& W, Eigen::MatrixXd& F,
                                    const InitProblem& prob, double damp,
                                    RepairWorkspace& ws, Rng& rng,
                                    bool trace_safe = false, bool exact = false) {
    const int n = static_cast<int>(W.rows());
    const double B = prob.bound;
    Eigen::MatrixXd M = (prob.A0 - F).cwiseProduct(W);

    struct Excess {
        double excess;
        double sign;
        Eigen::VectorXd u, v;
    };
    std::vector<Excess> viols;
    double worst = 0.0;

    if (prob.symmetric && exact) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (M + M.transpose()));
        const auto& ev = es.eigenvalues();
        for (int i = 0; i < n; ++i) {
            const double e = std::abs(ev[i]) - B;
            if (e > 0) {
                viols.push_back({e, ev[i] >= 0 ? 1.0 : -1.0, es.eigenvectors().col(i),
                                 es.eigenvectors().col(i)});
                worst = std::max(worst, e);
            }
        }
    } else if (prob.symmetric) {
        // warm-started subspace iteration on M^2 captures both spectrum ends;
        // Rayleigh-Ritz on M recovers the signs
        const int q = std::min(n, 16);
        if (ws.Vsym.cols() != q) {
            ws.Vsym.resize(n, q);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < q; ++j) ws.Vsym(i, j) = rng.normal();
        }
        Eigen::MatrixXd V = ws.Vsym;
        for (int it = 0; it < 3; ++it) {
            V = M * (M * V);
            Eigen::HouseholderQR<Eigen::MatrixXd> qr(V);
            V = qr.householderQ() * Eigen::MatrixXd::Identity(n, q);
        }
        ws.Vsym = V;
        Eigen::MatrixXd small = V.transpose() * M * V;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (small + small.transpose()));
        for (int i = 0; i < q; ++i) {
            const double lam = es.eigenvalues()[i];
            const double e = std::abs(lam) - B;
            if (e > 0) {
                Eigen::VectorXd vec = V * es.eigenvectors().col(i);
                viols.push_back({e, lam >= 0 ? 1.0 : -1.0, vec, vec});
                worst = std::max(worst, e);
            }
        }
    } else {
        // subspace iteration for the top singular block, warm-started
        const int q = std::min(n, 12);
        if (!ws.init) {
            ws.Vsub.resize(n, q);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < q; ++j) ws.Vsub(i, j) = rng.normal();
            ws.init = true;
        }
        Eigen::MatrixXd V = ws.Vsub;
        Eigen::HouseholderQR<Eigen::MatrixXd> qr0(V);
        V = qr0.householderQ() * Eigen::MatrixXd::Identity(n, q);
        Eigen::MatrixXd U;
        for (int it = 0; it < 6; ++it) {
            U = M * V;
            Eigen::HouseholderQR<Eigen::MatrixXd> qru(U);
            U = qru.householderQ() * Eigen::MatrixXd::Identity(n, q);
            V = M.transpose() * U;
            Eigen::HouseholderQR<Eigen::MatrixXd> qrv(V);
            V = qrv.householderQ() * Eigen::MatrixXd::Identity(n, q);
        }
        ws.Vsub = V;
        // Rayleigh-Ritz on the subspace
        Eigen::MatrixXd small = U.transpose() * M * V; // q x q
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(small, Eigen::ComputeFullU | Eigen::ComputeFullV);
        for (int i = 0; i < q; ++i) {
            const double s = svd.singularValues()[i];
            const double e = s - B;
            if (e > 0) {
                viols.push_back({e, 1.0, U * svd.matrixU().col(i), V * svd.matrixV().col(i)});
                worst = std::max(worst, e);
            }
        }
    }
    if (viols.empty()) return 0.0;

    // process the worst violators first
    std::sort(viols.begin(), viols.end(),
              [](const Excess& a, const Excess& b) { return a.excess > b.excess; });
    if (viols.size() > 6) viols.resize(6);

    const Eigen::MatrixXd base = prob.A0 - F;
    for (const auto& x : viols) {
        Eigen::MatrixXd dir = 0.5 * (x.u * x.v.transpose() + x.v * x.u.transpose());
        const Eigen::MatrixXd grad = dir.cwiseProduct(base); // d lambda / d W

        // Positive-side violations are repaired by the objective-neutral
        // pattern move W += gamma * dir, which shifts the eigenvalue by
        // gamma * kappa while sculpting block structure. Negative-side
        // violations use the gradient move, which adds weight on entries where
        // the base matrix is positive instead of shrinking W uniformly.
        const double kappa = grad.cwiseProduct(dir).sum();
        bool moved = false;
        if (x.sign > 0 && std::abs(kappa) > 1e-12) {
            double gamma = -x.sign * damp * x.excess / kappa;
            Eigen::MatrixXd P_eff = dir;
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) {
                    const double step = gamma * P_eff(i, j);
                    const double w = W(i, j);
                    if ((w <= 0.0 && step < 0.0) || (w >= 1.0 && step > 0.0)) P_eff(i, j) = 0.0;
                }
            const double kappa_eff = grad.cwiseProduct(P_eff).sum();
            if (std::abs(kappa_eff) > 1e-12 && kappa_eff * kappa > 0) {
                gamma = -x.sign * damp * x.excess / kappa_eff;
                W += gamma * P_eff;
                moved = true;
            }
        }
        if (!moved) {
            // damped Newton along the cone-projected gradient; on the negative
            // side keep only the removal components (low-rank cross-mass
            // subtraction) so the trace norm is not polluted
            Eigen::MatrixXd gW = x.sign * grad;
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) {
                    const double w = W(i, j);
                    if ((w <= 0.0 && gW(i, j) > 0.0) || (w >= 1.0 && gW(i, j) < 0.0))
                        gW(i, j) = 0.0;
                    // in trace-safe mode only removal components are kept, so
                    // the projected trace norm is not re-polluted
                    if (trace_safe && gW(i, j) < 0.0) gW(i, j) = 0.0;
                }
            double denom = gW.squaredNorm();
            if (denom <= 1e-30 && trace_safe) {
                gW = x.sign * grad;
                for (int i = 0; i < n; ++i)
                    for (int j = 0; j < n; ++j) {
                        const double w = W(i, j);
                        if ((w <= 0.0 && gW(i, j) > 0.0) || (w >= 1.0 && gW(i, j) < 0.0))
                            gW(i, j) = 0.0;
                    }
                denom = gW.squaredNorm();
            }
            if (denom > 1e-30) W -= (damp * x.excess / denom) * gW;
        }

        // slack-matrix move absorbs aligned (monotone-noise shaped) mass
        Eigen::MatrixXd gF = x.sign * dir.cwiseProduct(W);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                const double f = F(i, j);
                if ((f <= 0.0 && gF(i, j) < 0.0) || (f >= 1.0 && gF(i, j) > 0.0)) gF(i, j) = 0.0;
            }
        const double fden = gF.squaredNorm();
        if (fden > 1e-12) F += (0.3 * damp * x.excess / fden) * gF;
        W = W.cwiseMax(0.0).cwiseMin(1.0);
        F = F.cwiseMax(0.0).cwiseMin(1.0);
    }
    return worst;
}

inline InitSolution solve_init_impl(const InitProblem& prob, const InitSolverConfig& cfg) {
    cfg.validate();
    const int n = static_cast<int>(prob.A0.rows());
    const double B = prob.bound;
    Rng rng(mix64(cfg.seed ^ 0x1217f00dULL));

    // feasibly scaled flat start: c0 * J with spectrum inside the bound
    const double a0_norm = top_singular_pair(prob.A0, 1e-4, 120, cfg.seed + 3).sigma;
    const double c0 = std::min(1.0, 0.7 * B / std::max(a0_norm, 1e-9));
    Eigen::MatrixXd W = Eigen::MatrixXd::Constant(n, n, c0);
    Eigen::MatrixXd F = Eigen::MatrixXd::Zero(n, n);
    RepairWorkspace ws;

    InitSolution best;
    best.spectral_bound = B;
    best.objective = -1.0;
    double best_infeas = std::numeric_limits<double>::infinity();
    Eigen::MatrixXd bestW_infeas = W, bestF_infeas = F;

    for (int t = 1; t <= cfg.max_iters; ++t) {
        const double eta = cfg.step0 / std::sqrt(static_cast<double>(t));
        W.array() += eta;
        W = W.cwiseMin(1.0); // entries only grow, lower clip unnecessary here

        double viol = 0.0;
        for (int rep = 0; rep < cfg.repair_rounds; ++rep) {
            viol = spectral_repair_sweep(W, F, prob, cfg.repair_damp, ws, rng, false, false);
            if (viol <= 0.4 * cfg.tol_feas * B) break;
        }
        const bool record = (t % 2 == 0) || t == cfg.max_iters;
        if (record) {
            trace_norm_project_sym(W, static_cast<double>(n));
            W = W.cwiseMax(0.0).cwiseMin(1.0);
            for (int rep = 0; rep < 3; ++rep) {
                viol = spectral_repair_sweep(W, F, prob, cfg.repair_damp, ws, rng, true, true);
                if (viol <= 0.4 * cfg.tol_feas * B) break;
            }
        }

        const double obj = W.sum();
#ifdef RSBM_INIT_TRACE
        if (t % 10 == 0) {
            std::fprintf(stderr, "  t=%3d obj=%.0f viol=%.3f Wmin=%.2f Wmax=%.2f Fsum=%.0f\n", t,
                         obj, viol, W.minCoeff(), W.maxCoeff(), F.sum());
        }
#endif
        const bool feas = record && viol <= 0.8 * cfg.tol_feas * B;
        if (feas && obj > best.objective) {
            if (best.feasible_found && t > 20 &&
                obj - best.objective < cfg.plateau_rel * std::max(1.0, best.objective)) {
                best.W = W;
                best.slack_matrix = F;
                best.objective = obj;
                break; // stalled on the constraint surface
            }
            best.W = W;
            best.slack_matrix = F;
            best.objective = obj;
            best.feasible_found = true;
        } else if (!best.feasible_found) {
            const double infeas = viol / B;
            if (infeas < best_infeas) {
                best_infeas = infeas;
                bestW_infeas = W;
                bestF_infeas = F;
            }
        }
    }

    if (!best.feasible_found) {
        best.W = bestW_infeas;
        best.slack_matrix = bestF_infeas;
    }

    // post-hoc audit with dense decompositions, independent of the in-loop
    // power iterations
    Eigen::MatrixXd M = (prob.A0 - best.slack_matrix).cwiseProduct(best.W);
    double extreme = 0.0;
    if (prob.symmetric) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (M + M.transpose()));
        extreme = std::max(std::abs(es.eigenvalues().maxCoeff()),
                           std::abs(es.eigenvalues().minCoeff()));
    } else {
        Eigen::BDCSVD<Eigen::MatrixXd> svd(M);
        extreme = svd.singularValues()[0];
    }
    best.feasibility.spectral_violation = std::max(0.0, extreme - B);
    best.feasibility.trace_norm_excess = std::max(0.0, trace_norm(best.W) - n);
    best.feasibility.box_violation =
        std::max({0.0, -best.W.minCoeff(), best.W.maxCoeff() - 1.0,
                  -best.slack_matrix.minCoeff(), best.slack_matrix.maxCoeff() - 1.0});
    best.objective = best.W.sum();
    if (best.feasible_found &&
        (best.feasibility.spectral_violation > cfg.tol_feas * B ||
         best.feasibility.trace_norm_excess > cfg.tol_feas * n)) {
        best.feasible_found = false; // audit overrules the in-loop estimate
    }
    return best;
}

} // namespace detail

inline InitSolution solve_init_sbm(const Graph& g, double a, double b, double chi,
                                   const InitSolverConfig& cfg) {
    if (!(b < a)) throw std::invalid_argument("solve_init_sbm: need b < a");
    if (!(chi > 0.0)) throw std::invalid_argument("solve_init_sbm: chi > 0");
    detail::InitProblem prob;
    prob.A0 = g.adj.array() - a / g.n;
    prob.bound = chi * std::sqrt(a + b);
    prob.symmetric = true;
    return detail::solve_init_impl(prob, cfg);
}

inline InitSolution solve_init_z2(const Z2Instance& inst, double lambda,
                                  const InitSolverConfig& cfg) {
    if (!(lambda > 0.0)) throw std::invalid_argument("solve_init_z2: lambda > 0");
    detail::InitProblem prob;
    prob.A0 = inst.mat.array() - lambda / std::sqrt(static_cast<double>(inst.n));
    prob.bound = 3.0 * std::sqrt(static_cast<double>(inst.n));
    prob.symmetric = false;
    return detail::solve_init_impl(prob, cfg);
}

} // namespace rsbm
