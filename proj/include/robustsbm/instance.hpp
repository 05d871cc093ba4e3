#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "robustsbm/rng.hpp"

namespace rsbm {

// Symmetric 0/1 adjacency with zero diagonal, stored dense (desk scale).
struct Graph {
    int n = 0;
    Eigen::MatrixXd adj;

    Graph() = default;
    explicit Graph(int n_) : n(n_), adj(Eigen::MatrixXd::Zero(n_, n_)) {}

    bool has_edge(int u, int v) const { return adj(u, v) > 0.5; }
    void set_edge(int u, int v, bool present) {
        adj(u, v) = adj(v, u) = present ? 1.0 : 0.0;
    }
    long edge_count() const { return static_cast<long>(adj.sum() / 2.0 + 0.5); }
    Eigen::VectorXd degrees() const { return adj.rowwise().sum(); }
};

struct GroundTruth {
    int k = 0;
    std::vector<int> partition;      // community id per node, in [0, k)
    std::vector<int> sign_vector;    // +/-1 per node; defined for k=2 and Z2
    std::vector<int> corrupted_set;  // nodes touched by the node adversary
    long monotone_edits = 0;

    std::vector<std::vector<int>> communities() const {
        std::vector<std::vector<int>> cs(k);
        for (int i = 0; i < static_cast<int>(partition.size()); ++i)
            cs[partition[i]].push_back(i);
        return cs;
    }
};

struct InstanceSpec {
    int n = 0;
    int k = 2;
    double a = 0.0, b = 0.0;
    double alpha = 1.0;
    double eps = 0.0;
    std::uint64_t seed = 0;

    void validate() const {
        if (n < 2) throw std::invalid_argument("InstanceSpec: n >= 2");
        if (k < 2) throw std::invalid_argument("InstanceSpec: k >= 2");
        if (!(0.0 < b && b < a && a <= n / 2.0))
            throw std::invalid_argument("InstanceSpec: need 0 < b < a <= n/2");
        if (!(alpha > 0.0 && alpha <= 1.0))
            throw std::invalid_argument("InstanceSpec: alpha in (0,1]");
        if (!(eps >= 0.0 && eps < 1.0))
            throw std::invalid_argument("InstanceSpec: eps in [0,1)");
    }
};

// Z2-synchronization observation: lambda * l l^T / sqrt(n) + noise.
struct Z2Instance {
    int n = 0;
    Eigen::MatrixXd mat;
    double lambda = 0.0;
};

// ---------------------------------------------------------------------------
// Generation
// ---------------------------------------------------------------------------

// Uniform size vector inside the [alpha*n/k, n/(alpha*k)] box summing to n.
// The box endpoints are rounded outward to the nearest integers so that
// balanced odd-n instances stay feasible.
inline std::vector<int> sample_community_sizes(int n, int k, double alpha, Rng& rng) {
    const double lo_f = alpha * n / k;
    const double hi_f = n / (alpha * k);
    const int lo = std::max(1, static_cast<int>(std::floor(lo_f + 1e-12)));
    const int hi = static_cast<int>(std::ceil(hi_f - 1e-12));
    if (lo > hi || static_cast<long>(lo) * k > n || static_cast<long>(hi) * k < n)
        throw std::invalid_argument("sample_community_sizes: infeasible size constraints");
    for (int attempt = 0; attempt < 100000; ++attempt) {
        std::vector<int> sizes(k);
        int acc = 0;
        for (int j = 0; j + 1 < k; ++j) {
            sizes[j] = rng.uniform_int(lo, hi);
            acc += sizes[j];
        }
        sizes[k - 1] = n - acc;
        if (sizes[k - 1] >= lo && sizes[k - 1] <= hi) return sizes;
    }
    throw std::runtime_error("sample_community_sizes: rejection sampling failed");
}

inline std::pair<Graph, GroundTruth> gen_sbm_with_sizes(const InstanceSpec& spec,
                                                        const std::vector<int>& sizes,
                                                        Rng& rng) {
    spec.validate();
    if (static_cast<int>(sizes.size()) != spec.k ||
        std::accumulate(sizes.begin(), sizes.end(), 0) != spec.n)
        throw std::invalid_argument("gen_sbm_with_sizes: sizes must sum to n");

    GroundTruth truth;
    truth.k = spec.k;
    truth.partition.resize(spec.n);
    std::vector<int> order(spec.n);
    std::iota(order.begin(), order.end(), 0);
    for (int i = spec.n - 1; i > 0; --i) std::swap(order[i], order[rng.uniform_int(0, i)]);
    {
        int pos = 0;
        for (int c = 0; c < spec.k; ++c)
            for (int s = 0; s < sizes[c]; ++s) truth.partition[order[pos++]] = c;
    }
    truth.sign_vector.resize(spec.n, 0);
    if (spec.k == 2)
        for (int i = 0; i < spec.n; ++i) truth.sign_vector[i] = truth.partition[i] == 0 ? 1 : -1;

    Graph g(spec.n);
    const double pa = spec.a / spec.n, pb = spec.b / spec.n;
    for (int i = 0; i < spec.n; ++i)
        for (int j = i + 1; j < spec.n; ++j) {
            const double p = truth.partition[i] == truth.partition[j] ? pa : pb;
            if (rng.bernoulli(p)) g.set_edge(i, j, true);
        }
    return {std::move(g), std::move(truth)};
}

inline std::pair<Graph, GroundTruth> gen_sbm(const InstanceSpec& spec, Rng& rng) {
    spec.validate();
    auto sizes = sample_community_sizes(spec.n, spec.k, spec.alpha, rng);
    return gen_sbm_with_sizes(spec, sizes, rng);
}

// ---------------------------------------------------------------------------
// Semi-random (monotone) adversary
// ---------------------------------------------------------------------------

enum class MonotoneStrategy { random_helpful, clique_plant, hub_boost };

inline MonotoneStrategy monotone_strategy_from_string(const std::string& s) {
    if (s == "random_helpful") return MonotoneStrategy::random_helpful;
    if (s == "clique_plant") return MonotoneStrategy::clique_plant;
    if (s == "hub_boost") return MonotoneStrategy::hub_boost;
    throw std::invalid_argument("unknown monotone strategy: " + s);
}

struct MonotoneResult {
    Graph graph;
    long performed = 0;
    long shortfall = 0;
};

// Every edit either adds an intra-community edge or deletes an inter-community
// edge; updates truth.monotone_edits.
inline MonotoneResult apply_monotone(const Graph& g, GroundTruth& truth,
                                     MonotoneStrategy strategy, long budget, Rng& rng) {
    if (budget < 0) throw std::invalid_argument("apply_monotone: budget >= 0");
    MonotoneResult out;
    out.graph = g;
    Graph& h = out.graph;
    const int n = g.n;
    auto same = [&](int u, int v) { return truth.partition[u] == truth.partition[v]; };

    long remaining = budget;
    switch (strategy) {
    case MonotoneStrategy::random_helpful: {
        // random missing intra edges and present inter edges, shuffled
        std::vector<std::pair<int, int>> slots;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) {
                const bool e = h.has_edge(i, j);
                if ((same(i, j) && !e) || (!same(i, j) && e)) slots.emplace_back(i, j);
            }
        for (int i = static_cast<int>(slots.size()) - 1; i > 0; --i)
            std::swap(slots[i], slots[rng.uniform_int(0, i)]);
        for (auto [u, v] : slots) {
            if (remaining == 0) break;
            h.set_edge(u, v, same(u, v));
            --remaining;
            ++out.performed;
        }
        break;
    }
    case MonotoneStrategy::clique_plant: {
        // largest clique whose missing edges fit the budget, inside one community
        auto comms = truth.communities();
        int c = 0;
        for (int j = 1; j < truth.k; ++j)
            if (comms[j].size() > comms[c].size()) c = j;
        auto& nodes = comms[c];
        for (int i = static_cast<int>(nodes.size()) - 1; i > 0; --i)
            std::swap(nodes[i], nodes[rng.uniform_int(0, i)]);
        int m = 1;
        while (m < static_cast<int>(nodes.size()) &&
               static_cast<long>(m + 1) * m / 2 <= budget)
            ++m;
        for (int i = 0; i < m; ++i)
            for (int j = i + 1; j < m; ++j) {
                if (remaining == 0) break;
                if (!h.has_edge(nodes[i], nodes[j])) {
                    h.set_edge(nodes[i], nodes[j], true);
                    --remaining;
                    ++out.performed;
                }
            }
        break;
    }
    case MonotoneStrategy::hub_boost: {
        // connect one random hub per community to all of its community
        auto comms = truth.communities();
        for (auto& nodes : comms) {
            if (nodes.empty()) continue;
            const int hub = nodes[rng.uniform_int(0, static_cast<int>(nodes.size()) - 1)];
            for (int v : nodes) {
                if (remaining == 0) break;
                if (v != hub && !h.has_edge(hub, v)) {
                    h.set_edge(hub, v, true);
                    --remaining;
                    ++out.performed;
                }
            }
        }
        break;
    }
    }
    out.shortfall = budget - out.performed;
    truth.monotone_edits += out.performed;
    return out;
}

// ---------------------------------------------------------------------------
// Node-corruption adversary
// ---------------------------------------------------------------------------

enum class NodeAttack { rewire_opposite, erase, random_flip, clique_plant_corrupt };
enum class CorruptSelect { uniform, boundary };

inline NodeAttack node_attack_from_string(const std::string& s) {
    if (s == "rewire_opposite") return NodeAttack::rewire_opposite;
    if (s == "erase") return NodeAttack::erase;
    if (s == "random_flip") return NodeAttack::random_flip;
    if (s == "clique_plant_corrupt") return NodeAttack::clique_plant_corrupt;
    throw std::invalid_argument("unknown node attack: " + s);
}

namespace detail {

inline std::vector<int> pick_corrupted(const Graph& g, const GroundTruth& truth, int count,
                                       CorruptSelect select, Rng& rng) {
    const int n = g.n;
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    if (select == CorruptSelect::uniform) {
        for (int i = n - 1; i > 0; --i) std::swap(idx[i], idx[rng.uniform_int(0, i)]);
        idx.resize(count);
    } else {
        // highest cross-community degree first
        std::vector<double> cross(n, 0.0);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                if (j != i && g.adj(i, j) > 0.5 && truth.partition[i] != truth.partition[j])
                    cross[i] += 1.0;
        std::stable_sort(idx.begin(), idx.end(),
                         [&](int x, int y) { return cross[x] > cross[y]; });
        idx.resize(count);
    }
    std::sort(idx.begin(), idx.end());
    return idx;
}

} // namespace detail

// Corrupt up to ceil(eps*n) nodes; only their rows/columns change.
inline Graph apply_node_corruption(const Graph& g, GroundTruth& truth, NodeAttack attack,
                                   double eps, Rng& rng,
                                   CorruptSelect select = CorruptSelect::uniform) {
    if (!(eps >= 0.0 && eps < 1.0))
        throw std::invalid_argument("apply_node_corruption: eps in [0,1)");
    Graph h = g;
    const int n = g.n;
    const int count = static_cast<int>(std::ceil(eps * n));
    if (count == 0) return h;

    std::vector<int> corrupted = detail::pick_corrupted(g, truth, count, select, rng);
    std::vector<char> is_corrupted(n, 0);
    for (int v : corrupted) is_corrupted[v] = 1;

    switch (attack) {
    case NodeAttack::erase: {
        for (int v : corrupted) {
            h.adj.row(v).setZero();
            h.adj.col(v).setZero();
        }
        break;
    }
    case NodeAttack::rewire_opposite: {
        // Degree-preserving: every corrupted node keeps its original degree and
        // reconnects all edges to uniformly random nodes in a different
        // community. Corrupted targets are admissible while they still have
        // degree budget left, so the landing distribution stays uniform over
        // the whole opposite community. Falls back to uniform unused slots
        // when the opposite pool runs dry.
        Eigen::VectorXd deg0 = g.degrees();
        for (int v : corrupted) {
            h.adj.row(v).setZero();
            h.adj.col(v).setZero();
        }
        std::vector<int> budget(n, 0);
        for (int v : corrupted) budget[v] = static_cast<int>(deg0[v] + 0.5);
        std::vector<int> order = corrupted;
        for (int i = static_cast<int>(order.size()) - 1; i > 0; --i)
            std::swap(order[i], order[rng.uniform_int(0, i)]);
        for (int v : order) {
            std::vector<int> pool;
            for (int u = 0; u < n; ++u) {
                if (u == v || h.has_edge(v, u)) continue;
                if (truth.partition[u] == truth.partition[v]) continue;
                if (is_corrupted[u] && budget[u] <= 0) continue;
                pool.push_back(u);
            }
            for (int i = static_cast<int>(pool.size()) - 1; i > 0; --i)
                std::swap(pool[i], pool[rng.uniform_int(0, i)]);
            for (int u : pool) {
                if (budget[v] == 0) break;
                if (is_corrupted[u] && budget[u] <= 0) continue;
                h.set_edge(v, u, true);
                --budget[v];
                if (is_corrupted[u]) --budget[u];
            }
            if (budget[v] > 0) {
                // uniform unused slots anywhere
                std::vector<int> rest;
                for (int u = 0; u < n; ++u)
                    if (u != v && !h.has_edge(v, u) && !(is_corrupted[u] && budget[u] <= 0))
                        rest.push_back(u);
                for (int i = static_cast<int>(rest.size()) - 1; i > 0; --i)
                    std::swap(rest[i], rest[rng.uniform_int(0, i)]);
                for (int u : rest) {
                    if (budget[v] == 0) break;
                    h.set_edge(v, u, true);
                    --budget[v];
                    if (is_corrupted[u]) --budget[u];
                }
            }
        }
        break;
    }
    case NodeAttack::random_flip: {
        // resample each corrupted row with the node's empirical edge density
        Eigen::VectorXd deg0 = g.degrees();
        for (int v : corrupted) {
            const double p = deg0[v] / std::max(1, n - 1);
            for (int u = 0; u < n; ++u) {
                if (u == v) continue;
                h.set_edge(v, u, rng.bernoulli(p));
            }
        }
        break;
    }
    case NodeAttack::clique_plant_corrupt: {
        // corrupted nodes drop all edges and form a clique among themselves
        for (int v : corrupted) {
            h.adj.row(v).setZero();
            h.adj.col(v).setZero();
        }
        for (size_t i = 0; i < corrupted.size(); ++i)
            for (size_t j = i + 1; j < corrupted.size(); ++j)
                h.set_edge(corrupted[i], corrupted[j], true);
        break;
    }
    }
    truth.corrupted_set = std::move(corrupted);
    return h;
}

// ---------------------------------------------------------------------------
// Z2-synchronization generation and corruption
// ---------------------------------------------------------------------------

inline std::pair<Z2Instance, GroundTruth> gen_z2(int n, double lambda, Rng& rng) {
    if (n < 2) throw std::invalid_argument("gen_z2: n >= 2");
    if (!(lambda >= 0.0)) throw std::invalid_argument("gen_z2: lambda >= 0");
    GroundTruth truth;
    truth.k = 2;
    truth.sign_vector.resize(n);
    truth.partition.resize(n);
    for (int i = 0; i < n; ++i) {
        truth.sign_vector[i] = rng.bernoulli(0.5) ? 1 : -1;
        truth.partition[i] = truth.sign_vector[i] > 0 ? 0 : 1;
    }
    Z2Instance inst;
    inst.n = n;
    inst.lambda = lambda;
    inst.mat.resize(n, n);
    const double scale = lambda / std::sqrt(static_cast<double>(n));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            inst.mat(i, j) = scale * truth.sign_vector[i] * truth.sign_vector[j] + rng.normal();
    return {std::move(inst), std::move(truth)};
}

enum class Z2Attack { flip_sign, erase };

inline Z2Attack z2_attack_from_string(const std::string& s) {
    if (s == "flip_sign") return Z2Attack::flip_sign;
    if (s == "erase") return Z2Attack::erase;
    throw std::invalid_argument("unknown z2 attack: " + s);
}

// Monotone part adds monotone_budget * |G'| entrywise with the signs of l l^T;
// then up to ceil(eps*n) rows/columns are rewritten by the attack.
inline Z2Instance corrupt_z2(const Z2Instance& inst, GroundTruth& truth, double eps,
                             double monotone_budget, Z2Attack attack, Rng& rng) {
    if (!(eps >= 0.0 && eps < 1.0)) throw std::invalid_argument("corrupt_z2: eps in [0,1)");
    if (monotone_budget < 0.0) throw std::invalid_argument("corrupt_z2: monotone_budget >= 0");
    Z2Instance out = inst;
    const int n = inst.n;
    if (monotone_budget > 0.0) {
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                const double sgn = truth.sign_vector[i] * truth.sign_vector[j];
                out.mat(i, j) += monotone_budget * std::abs(rng.normal()) * sgn;
            }
        truth.monotone_edits += 1;
    }
    const int count = static_cast<int>(std::ceil(eps * n));
    if (count == 0) return out;
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    for (int i = n - 1; i > 0; --i) std::swap(idx[i], idx[rng.uniform_int(0, i)]);
    idx.resize(count);
    std::sort(idx.begin(), idx.end());
    const double scale = inst.lambda / std::sqrt(static_cast<double>(n));
    for (int v : idx) {
        for (int j = 0; j < n; ++j) {
            double val = 0.0;
            if (attack == Z2Attack::flip_sign)
                val = -scale * truth.sign_vector[v] * truth.sign_vector[j] + rng.normal();
            out.mat(v, j) = val;
            if (attack == Z2Attack::flip_sign)
                out.mat(j, v) = -scale * truth.sign_vector[j] * truth.sign_vector[v] + rng.normal();
            else
                out.mat(j, v) = 0.0;
        }
    }
    truth.corrupted_set = std::move(idx);
    return out;
}

} // namespace rsbm
