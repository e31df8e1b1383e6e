#pragma once

// Plain serial reference implementations of the hot kernels, written
// index-by-index from the discrete formulas. They stay deliberately naive --
// no pointer arithmetic, no parallelism -- and exist to cross-check the
// production kernels and to baseline the benchmark.

#include <cmath>
#include <numbers>
#include <vector>

#include "petto/grid.hpp"

namespace petto::ref {

using Field = std::vector<double>;

inline double value(const Grid& g, const Field& f, Index i, Index j, Index k) {
    return f[static_cast<std::size_t>((k * g.n[1] + j) * g.n[0] + i)];
}

inline double d1(const Grid& g, const Field& f, int axis, Index i, Index j, Index k) {
    Index idx[3] = {i, j, k};
    const Index n = g.n[axis];
    if (n == 1) return 0.0;
    const double h = g.spacing[axis];
    auto at = [&](Index t) {
        Index p[3] = {idx[0], idx[1], idx[2]};
        p[axis] = t;
        return value(g, f, p[0], p[1], p[2]);
    };
    const Index t = idx[axis];
    if (t == 0) return (-3.0 * at(0) + 4.0 * at(1) - at(2)) / (2.0 * h);
    if (t == n - 1) return (3.0 * at(n - 1) - 4.0 * at(n - 2) + at(n - 3)) / (2.0 * h);
    return (at(t + 1) - at(t - 1)) / (2.0 * h);
}

inline std::vector<Field> gradient(const Grid& g, const Field& f) {
    std::vector<Field> out(g.dim, Field(static_cast<std::size_t>(g.num_nodes())));
    for (Index k = 0; k < g.n[2]; ++k)
        for (Index j = 0; j < g.n[1]; ++j)
            for (Index i = 0; i < g.n[0]; ++i)
                for (int a = 0; a < g.dim; ++a)
                    out[a][static_cast<std::size_t>(g.node(i, j, k))] = d1(g, f, a, i, j, k);
    return out;
}

inline Field divergence(const Grid& g, const std::vector<Field>& v) {
    Field out(static_cast<std::size_t>(g.num_nodes()), 0.0);
    for (Index k = 0; k < g.n[2]; ++k)
        for (Index j = 0; j < g.n[1]; ++j)
            for (Index i = 0; i < g.n[0]; ++i) {
                double s = 0.0;
                for (int a = 0; a < g.dim; ++a) s += d1(g, v[a], a, i, j, k);
                out[static_cast<std::size_t>(g.node(i, j, k))] = s;
            }
    return out;
}

// Flux form with mirror ghosts: the one-dimensional contribution at node t is
// [k_{t+1/2}(f_{t+1}-f_t) - k_{t-1/2}(f_t-f_{t-1})] / h^2 with arithmetic
// face means; at the ends the ghost mirrors the first interior neighbor.
inline double flux_term(const Grid& g, const Field& f, const Field& kap, int axis, Index i,
                        Index j, Index k) {
    Index idx[3] = {i, j, k};
    const Index n = g.n[axis];
    if (n == 1) return 0.0;
    const double h2 = g.spacing[axis] * g.spacing[axis];
    auto at = [&](const Field& q, Index t) {
        Index p[3] = {idx[0], idx[1], idx[2]};
        p[axis] = t;
        return value(g, q, p[0], p[1], p[2]);
    };
    const Index t = idx[axis];
    const double f0 = at(f, t);
    const double k0 = at(kap, t);
    const double fp = t + 1 < n ? at(f, t + 1) : at(f, t - 1);
    const double kp = t + 1 < n ? at(kap, t + 1) : at(kap, t - 1);
    const double fm = t > 0 ? at(f, t - 1) : at(f, t + 1);
    const double km = t > 0 ? at(kap, t - 1) : at(kap, t + 1);
    return (0.5 * (k0 + kp) * (fp - f0) - 0.5 * (km + k0) * (f0 - fm)) / h2;
}

inline Field variable_diffusion(const Grid& g, const Field& f, const Field& kap) {
    Field out(static_cast<std::size_t>(g.num_nodes()));
    for (Index k = 0; k < g.n[2]; ++k)
        for (Index j = 0; j < g.n[1]; ++j)
            for (Index i = 0; i < g.n[0]; ++i) {
                double s = 0.0;
                for (int a = 0; a < g.dim; ++a) s += flux_term(g, f, kap, a, i, j, k);
                out[static_cast<std::size_t>(g.node(i, j, k))] = s;
            }
    return out;
}

inline Field laplacian_noflux(const Grid& g, const Field& f) {
    Field ones(static_cast<std::size_t>(g.num_nodes()), 1.0);
    return variable_diffusion(g, f, ones);
}

inline Field pt_step(const Field& state, const Field& residual, double dt) {
    Field out(state.size());
    for (std::size_t i = 0; i < state.size(); ++i) out[i] = state[i] + dt * residual[i];
    return out;
}

inline Field apt_step_explicit(const Field& cur, const Field& prev, const Field& residual,
                               double dt, double theta) {
    Field out(cur.size());
    for (std::size_t i = 0; i < cur.size(); ++i) {
        const double first = (cur[i] - prev[i]) / dt;
        out[i] = 2.0 * cur[i] - prev[i] + dt * dt / theta * (residual[i] - first);
    }
    return out;
}

inline double dwell(double p) {
    return std::numbers::pi / 64.0 * std::sin(2.0 * std::numbers::pi * p);
}

inline Field chemical_potential(const Grid& g, const Field& phi, double gamma) {
    Field lap = laplacian_noflux(g, phi);
    Field mu(phi.size());
    for (std::size_t i = 0; i < phi.size(); ++i) mu[i] = dwell(phi[i]) - gamma * lap[i];
    return mu;
}

inline Field ch_step(const Grid& g, const Field& phi, double mobility, double gamma,
                     double dt) {
    Field mu = chemical_potential(g, phi, gamma);
    Field lap = laplacian_noflux(g, mu);
    Field out(phi.size());
    for (std::size_t i = 0; i < phi.size(); ++i) {
        double v = phi[i] + dt * mobility * lap[i];
        out[i] = std::min(1.0, std::max(0.0, v));
    }
    return out;
}

inline double residual_norm(const Grid& g, const std::vector<Field>& comps) {
    double sq = 0.0;
    for (const Field& f : comps)
        for (double v : f) sq += v * v;
    return std::sqrt(sq) / static_cast<double>(g.num_nodes());
}

inline double thermal_compliance(const Grid& g, const Field& T, const Field& kap) {
    const std::vector<Field> grad = gradient(g, T);
    double total = 0.0;
    for (Index k = 0; k < g.n[2]; ++k)
        for (Index j = 0; j < g.n[1]; ++j)
            for (Index i = 0; i < g.n[0]; ++i) {
                const std::size_t node = static_cast<std::size_t>(g.node(i, j, k));
                double gsq = 0.0;
                for (int a = 0; a < g.dim; ++a) gsq += grad[a][node] * grad[a][node];
                total += kap[node] * gsq * g.cell_volume(i, j, k);
            }
    return total;
}

} // namespace petto::ref
