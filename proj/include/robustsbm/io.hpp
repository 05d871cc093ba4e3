#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "robustsbm/instance.hpp"
#include "robustsbm/pipeline.hpp"
#include "robustsbm/rounding.hpp"

namespace rsbm {

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

[[noreturn]] inline void parse_fail(const std::string& path, long line, const std::string& why) {
    std::ostringstream os;
    os << path << ":" << line << ": " << why;
    throw ParseError(os.str());
}

} // namespace detail

// ---------------------------------------------------------------------------
// Graph file: header `SBM n=<n> k=<k>`, one `u v` edge per line, 0-indexed.
// Ground truth sidecar: one community id per line, then optional
// `#monotone <count>` and `#corrupted` followed by one node id per line.
// ---------------------------------------------------------------------------

inline void write_graph(const std::string& path, const Graph& g, int k) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << "SBM n=" << g.n << " k=" << k << "\n";
    for (int i = 0; i < g.n; ++i)
        for (int j = i + 1; j < g.n; ++j)
            if (g.has_edge(i, j)) out << i << " " << j << "\n";
}

inline std::pair<Graph, int> read_graph(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open: " + path);
    std::string header;
    if (!std::getline(in, header)) detail::parse_fail(path, 1, "missing header");
    int n = -1, k = -1;
    if (std::sscanf(header.c_str(), "SBM n=%d k=%d", &n, &k) != 2 || n <= 0 || k < 2)
        detail::parse_fail(path, 1, "expected header `SBM n=<n> k=<k>`, got `" + header + "`");
    Graph g(n);
    std::string line;
    long lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        int u, v;
        if (std::sscanf(line.c_str(), "%d %d", &u, &v) != 2)
            detail::parse_fail(path, lineno, "expected edge `u v`, got `" + line + "`");
        if (u < 0 || v < 0 || u >= n || v >= n || u == v)
            detail::parse_fail(path, lineno, "edge endpoint out of range");
        g.set_edge(u, v, true);
    }
    return {std::move(g), k};
}

inline void write_truth(const std::string& path, const GroundTruth& t) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    for (int id : t.partition) out << id << "\n";
    if (t.monotone_edits > 0) out << "#monotone " << t.monotone_edits << "\n";
    if (!t.corrupted_set.empty()) {
        out << "#corrupted\n";
        for (int v : t.corrupted_set) out << v << "\n";
    }
}

inline GroundTruth read_truth(const std::string& path, int n, int k) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open: " + path);
    GroundTruth t;
    t.k = k;
    std::string line;
    long lineno = 0;
    bool corrupted_section = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        if (line.rfind("#monotone", 0) == 0) {
            if (std::sscanf(line.c_str(), "#monotone %ld", &t.monotone_edits) != 1)
                detail::parse_fail(path, lineno, "malformed #monotone line");
            continue;
        }
        if (line == "#corrupted") {
            corrupted_section = true;
            continue;
        }
        int v = 0;
        if (std::sscanf(line.c_str(), "%d", &v) != 1)
            detail::parse_fail(path, lineno, "expected an integer, got `" + line + "`");
        if (corrupted_section) {
            if (v < 0 || v >= n) detail::parse_fail(path, lineno, "corrupted node out of range");
            t.corrupted_set.push_back(v);
        } else {
            if (v < 0 || v >= k) detail::parse_fail(path, lineno, "community id out of range");
            t.partition.push_back(v);
        }
    }
    if (static_cast<int>(t.partition.size()) != n)
        detail::parse_fail(path, lineno, "expected " + std::to_string(n) + " community ids, got " +
                                             std::to_string(t.partition.size()));
    t.sign_vector.resize(n, 0);
    if (k == 2)
        for (int i = 0; i < n; ++i) t.sign_vector[i] = t.partition[i] == 0 ? 1 : -1;
    return t;
}

// ---------------------------------------------------------------------------
// Dense matrix file: one text header line `{n:<n>, lambda:<lambda>}` followed
// by n*n little-endian 64-bit floats, row-major.
// ---------------------------------------------------------------------------

inline void write_matrix(const std::string& path, const Eigen::MatrixXd& m, double lambda) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    const int n = static_cast<int>(m.rows());
    std::ostringstream header;
    header << "{n:" << n << ", lambda:";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", lambda);
    header << buf << "}\n";
    out << header.str();
    std::vector<double> row(n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) row[j] = m(i, j);
        out.write(reinterpret_cast<const char*>(row.data()),
                  static_cast<std::streamsize>(sizeof(double) * n));
    }
}

inline std::pair<Eigen::MatrixXd, double> read_matrix(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open: " + path);
    std::string header;
    if (!std::getline(in, header)) detail::parse_fail(path, 1, "missing matrix header");
    int n = -1;
    double lambda = 0.0;
    if (std::sscanf(header.c_str(), "{n:%d, lambda:%lf}", &n, &lambda) != 2 || n <= 0)
        detail::parse_fail(path, 1,
                           "expected header `{n:<n>, lambda:<lambda>}`, got `" + header + "`");
    Eigen::MatrixXd m(n, n);
    std::vector<double> row(n);
    for (int i = 0; i < n; ++i) {
        in.read(reinterpret_cast<char*>(row.data()),
                static_cast<std::streamsize>(sizeof(double) * n));
        if (!in)
            detail::parse_fail(path, 2, "matrix payload truncated at row " + std::to_string(i));
        for (int j = 0; j < n; ++j) m(i, j) = row[j];
    }
    return {std::move(m), lambda};
}

// ---------------------------------------------------------------------------
// Labelling file: optional `k=<k>` header, one community id per line.
// ---------------------------------------------------------------------------

inline void write_labels(const std::string& path, const Labelling& l) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << "k=" << l.k << "\n";
    for (int id : l.ids) out << id << "\n";
}

inline Labelling read_labels(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open: " + path);
    Labelling l;
    l.k = -1;
    std::string line;
    long lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        if (line.rfind("k=", 0) == 0) {
            if (std::sscanf(line.c_str(), "k=%d", &l.k) != 1 || l.k < 2)
                detail::parse_fail(path, lineno, "malformed k= header");
            continue;
        }
        int v = 0;
        if (std::sscanf(line.c_str(), "%d", &v) != 1 || v < 0)
            detail::parse_fail(path, lineno, "expected a community id, got `" + line + "`");
        l.ids.push_back(v);
    }
    if (l.ids.empty()) detail::parse_fail(path, lineno, "empty labelling");
    if (l.k < 2) {
        int mx = 0;
        for (int id : l.ids) mx = std::max(mx, id);
        l.k = std::max(2, mx + 1);
    }
    for (int id : l.ids)
        if (id >= l.k) detail::parse_fail(path, 0, "label id exceeds k");
    return l;
}

inline void write_vector(const std::string& path, const Eigen::VectorXd& v) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    char buf[64];
    for (int i = 0; i < v.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g", v[i]);
        out << buf << "\n";
    }
}

inline Eigen::VectorXd read_vector(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open: " + path);
    std::vector<double> vals;
    std::string line;
    long lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            vals.push_back(std::stod(line));
        } catch (const std::exception&) {
            detail::parse_fail(path, lineno, "expected a float, got `" + line + "`");
        }
    }
    Eigen::VectorXd v(vals.size());
    for (size_t i = 0; i < vals.size(); ++i) v[i] = vals[i];
    return v;
}

inline nlohmann::json report_to_json(const RunReport& r) {
    nlohmann::json j;
    j["mode"] = r.mode;
    j["n"] = r.n;
    j["k"] = r.k;
    j["a"] = r.a;
    j["b"] = r.b;
    j["lambda"] = r.lambda;
    j["eps"] = r.eps;
    j["alpha"] = r.alpha;
    j["preset"] = r.preset;
    j["snr_c"] = r.snr_c;
    j["early_exit"] = r.early_exit;
    j["zeta_clamped"] = r.zeta_clamped;
    j["init_objective"] = r.init_objective;
    j["init_feasible"] = r.init_feasible;
    j["init_error"] = r.init_error;
    j["final_error"] = r.final_error;
    j["rho_final"] = r.rho_final;
    j["rounds_used"] = r.rounds_used;
    j["boost_infeasible_seen"] = r.boost_infeasible_seen;
    j["warnings"] = r.warnings;
    nlohmann::json rounds = nlohmann::json::array();
    for (const auto& row : r.trace.rows) {
        rounds.push_back({{"round", row.round},
                          {"rho", row.rho},
                          {"flips", row.flips},
                          {"feasible", row.feasible},
                          {"error", row.error}});
    }
    j["rounds"] = rounds;
    return j;
}

} // namespace rsbm
