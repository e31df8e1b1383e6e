#pragma once

#include <cmath>
#include <numbers>

#include "petto/grid.hpp"
#include "petto/parallel.hpp"
#include "petto/stencil.hpp"

namespace petto {

struct CahnHilliardParams {
    double mobility = 1.0; // D
    double gamma = 3e-5;   // interface thickness parameter
    double dt = 0.0;       // phase time step

    void validate() const {
        if (!(mobility > 0.0)) throw std::invalid_argument("cahn-hilliard: mobility must be positive");
        if (!(gamma > 0.0)) throw std::invalid_argument("cahn-hilliard: gamma must be positive");
        if (!(dt > 0.0)) throw std::invalid_argument("cahn-hilliard: dt must be positive");
    }
};

/// Largest forward-Euler step the linearized equation tolerates; the well
/// curvature term matters on coarse grids, the biharmonic term on fine ones.
inline double ch_stable_dt(const Grid& g, double mobility, double gamma) {
    double s = 0.0;
    for (int a = 0; a < g.dim; ++a) s += 4.0 / (g.spacing[a] * g.spacing[a]);
    const double wpp_max = std::numbers::pi * std::numbers::pi / 32.0;
    return 2.0 / (mobility * (gamma * s * s + wpp_max * s));
}

/// Ordered per-phase densities; the void is an explicit phase when a problem
/// defines one. All phases share a grid.
template <class Real>
struct PhaseSet {
    std::vector<Field<Real>> phases;

    PhaseSet() = default;
    PhaseSet(const Grid& g, int count, Real init) {
        phases.reserve(count);
        for (int i = 0; i < count; ++i) phases.emplace_back(g, 1, init);
    }

    int count() const { return static_cast<int>(phases.size()); }
    const Grid& grid() const { return *phases.front().grid; }
};

/// Double well with minima at the pure phases: w(p) = sin^2(pi p)/64.
template <class Real>
inline Real double_well(Real p) {
    const Real s = std::sin(static_cast<Real>(std::numbers::pi) * p);
    return s * s / Real(64);
}

template <class Real>
inline Real dwell(Real p) {
    return static_cast<Real>(std::numbers::pi / 64.0) *
           std::sin(Real(2) * static_cast<Real>(std::numbers::pi) * p);
}

/// mu = dw/dphi - gamma lap(phi), with the zero-flux mirror closure.
template <class Real>
void chemical_potential_into(const Field<Real>& phi, double gamma, Field<Real>& mu) {
    laplacian_noflux_into(phi, mu);
    const Index n = phi.num_nodes();
    const Real* p = phi.comp(0);
    Real* m = mu.comp(0);
    const Real gm = static_cast<Real>(gamma);
#pragma omp parallel for schedule(static) if (!par::serial())
    for (Index i = 0; i < n; ++i) m[i] = dwell(p[i]) - gm * m[i];
}

template <class Real>
Field<Real> chemical_potential(const Field<Real>& phi, double gamma) {
    Field<Real> mu(*phi.grid, 1);
    chemical_potential_into(phi, gamma, mu);
    return mu;
}

/// Lumped-volume integral of a phase; the quantity the zero-flux evolution
/// conserves exactly (up to round-off) before clamping.
template <class Real>
double phase_mass(const Field<Real>& phi) {
    const Grid& g = *phi.grid;
    const Index nx = g.n[0], ny = g.n[1], nz = g.n[2];
    const Real* p = phi.comp(0);
    double total = 0.0;
    if (par::serial()) {
        for (Index k = 0; k < nz; ++k)
            for (Index j = 0; j < ny; ++j)
                for (Index i = 0; i < nx; ++i)
                    total += static_cast<double>(p[(k * ny + j) * nx + i]) * g.cell_volume(i, j, k);
        return total;
    }
#pragma omp parallel for collapse(2) schedule(static) reduction(+ : total)
    for (Index k = 0; k < nz; ++k)
        for (Index j = 0; j < ny; ++j)
            for (Index i = 0; i < nx; ++i)
                total += static_cast<double>(p[(k * ny + j) * nx + i]) * g.cell_volume(i, j, k);
    return total;
}

/// Discrete Ginzburg-Landau energy: sum (w(phi) + gamma/2 |grad phi|^2) dV.
template <class Real>
double gl_energy(const Field<Real>& phi, double gamma) {
    const Grid& g = *phi.grid;
    Field<Real> grad = gradient(phi);
    const Index nx = g.n[0], ny = g.n[1], nz = g.n[2];
    const Real* p = phi.comp(0);
    double total = 0.0;
    for (Index k = 0; k < nz; ++k)
        for (Index j = 0; j < ny; ++j)
            for (Index i = 0; i < nx; ++i) {
                const Index node = (k * ny + j) * nx + i;
                double gsq = 0.0;
                for (int a = 0; a < g.dim; ++a) {
                    const double d = static_cast<double>(grad.at(a, node));
                    gsq += d * d;
                }
                total += (static_cast<double>(double_well(p[node])) + 0.5 * gamma * gsq) *
                         g.cell_volume(i, j, k);
            }
    return total;
}

struct ChStepStats {
    double mass_before = 0.0;
    double mass_preclamp = 0.0;
    double mass_postclamp = 0.0;
};

/// One forward-Euler Cahn-Hilliard step: phi += dt D lap(mu), then clamp to
/// [0,1]. The sin^2 well is periodic with spurious wells at every integer, so
/// the clamp keeps densities in the physical branch.
template <class Real>
void ch_step_inplace(Field<Real>& phi, const CahnHilliardParams& params,
                     Field<Real>& mu_scratch, Field<Real>& lap_scratch,
                     ChStepStats* stats = nullptr) {
    params.validate();
    if (stats) stats->mass_before = phase_mass(phi);
    chemical_potential_into(phi, params.gamma, mu_scratch);
    laplacian_noflux_into(mu_scratch, lap_scratch);
    const Index n = phi.num_nodes();
    Real* p = phi.comp(0);
    const Real* l = lap_scratch.comp(0);
    const Real step = static_cast<Real>(params.dt * params.mobility);
#pragma omp parallel for schedule(static) if (!par::serial())
    for (Index i = 0; i < n; ++i) p[i] += step * l[i];
    if (stats) stats->mass_preclamp = phase_mass(phi);
#pragma omp parallel for schedule(static) if (!par::serial())
    for (Index i = 0; i < n; ++i)
        p[i] = p[i] < Real(0) ? Real(0) : (p[i] > Real(1) ? Real(1) : p[i]);
    if (stats) stats->mass_postclamp = phase_mass(phi);
}

template <class Real>
Field<Real> ch_step(const Field<Real>& phi, const CahnHilliardParams& params,
                    ChStepStats* stats = nullptr) {
    Field<Real> out = phi;
    Field<Real> mu(*phi.grid, 1), lap(*phi.grid, 1);
    ch_step_inplace(out, params, mu, lap, stats);
    return out;
}

/// Applies ch_step independently to every phase; there is no cross-coupling
/// term, phases interact only through the sensitivities.
template <class Real>
void ch_step_multi_inplace(PhaseSet<Real>& phases, const CahnHilliardParams& params,
                           Field<Real>& mu_scratch, Field<Real>& lap_scratch,
                           std::vector<ChStepStats>* stats = nullptr) {
    if (stats) stats->resize(phases.phases.size());
    for (std::size_t i = 0; i < phases.phases.size(); ++i)
        ch_step_inplace(phases.phases[i], params, mu_scratch, lap_scratch,
                        stats ? &(*stats)[i] : nullptr);
}

template <class Real>
PhaseSet<Real> ch_step_multi(const PhaseSet<Real>& phases, const CahnHilliardParams& params,
                             std::vector<ChStepStats>* stats = nullptr) {
    PhaseSet<Real> out = phases;
    Field<Real> mu(phases.grid(), 1), lap(phases.grid(), 1);
    ch_step_multi_inplace(out, params, mu, lap, stats);
    return out;
}

} // namespace petto
