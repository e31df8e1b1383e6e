#pragma once

#include <cmath>
#include <vector>

#include "petto/grid.hpp"
#include "petto/parallel.hpp"
#include "petto/phase_field.hpp"
#include "petto/state_solver.hpp"
#include "petto/stencil.hpp"

namespace petto {

enum class MaterialKind { Thermal, Elastic };

/// Per-phase properties and the penalized mixing rule. Property values are
/// conductivities for thermal problems and Young's moduli for elastic ones,
/// listed in the problem's phase order.
struct MaterialModel {
    MaterialKind kind = MaterialKind::Thermal;
    std::vector<double> properties;
    double poisson_ratio = 0.3; // elastic only
    double penalty = 3.0;
    double void_floor = 1e-6;

    void validate(int phase_count) const {
        if (static_cast<int>(properties.size()) != phase_count)
            throw std::invalid_argument("material: one property value per phase required");
        for (double p : properties)
            if (!(p > 0.0)) throw std::invalid_argument("material: properties must be positive");
        if (penalty < 1.0) throw std::invalid_argument("material: penalty must be >= 1");
        if (!(void_floor > 0.0)) throw std::invalid_argument("material: void floor must be positive");
    }
};

struct ObjectiveWeights {
    double alpha_compliance = 0.1;
    double alpha_volume = 0.0;
    double alpha_unity = 0.0;
    double alpha_region = 0.0;
    bool normalize_compliance = true;
    int compliance_sign = 1; // +1 descends on dJ/dphi with the state fixed

    void validate() const {
        if (alpha_compliance < 0 || alpha_volume < 0 || alpha_unity < 0 || alpha_region < 0)
            throw std::invalid_argument("weights: must be non-negative");
        if (alpha_compliance + alpha_volume + alpha_unity + alpha_region <= 0)
            throw std::invalid_argument("weights: at least one weight must be positive");
        if (compliance_sign != 1 && compliance_sign != -1)
            throw std::invalid_argument("weights: compliance sign must be +1 or -1");
    }
};

/// Global per-phase volume targets, plus an optional protected region with
/// its own per-phase targets (e.g. a void pocket reserved for payload).
struct VolumeTargets {
    std::vector<double> fractions;
    std::vector<Index> region_nodes;      // sorted node indices of the region
    std::vector<double> region_fractions; // per phase; empty when unused

    bool has_region() const { return !region_fractions.empty(); }
};

struct ObjectiveReport {
    long loop = 0;
    double compliance = 0.0;
    double volume = 0.0;
    double unity = 0.0;
    double region = 0.0;
    double r_pde = 0.0;
    std::vector<double> volume_fractions;
};

template <class Real>
ObjectiveReport evaluate_objectives(const PhaseSet<Real>& phases, const Field<Real>& state,
                                    const MaterialModel& mat, const VolumeTargets& targets);

namespace detail {

template <class Real>
inline Real pow_penalty(Real x, double e) {
    const int ei = static_cast<int>(e);
    if (e == static_cast<double>(ei) && ei >= 0 && ei <= 8) {
        Real r = Real(1);
        for (int i = 0; i < ei; ++i) r *= x;
        return r;
    }
    return static_cast<Real>(std::pow(static_cast<double>(x), e));
}

} // namespace detail

/// Effective property field: sum_i p_i phi_i^e, floored at void_floor so the
/// state operators never see a singular coefficient.
template <class Real>
void interpolate_into(const PhaseSet<Real>& phases, const MaterialModel& mat,
                      Field<Real>& out) {
    mat.validate(phases.count());
    const Index n = out.num_nodes();
    const int np = phases.count();
    const Real floor_v = static_cast<Real>(mat.void_floor);
    std::vector<const Real*> p(np);
    std::vector<Real> props(np);
    for (int i = 0; i < np; ++i) {
        p[i] = phases.phases[i].comp(0);
        props[i] = static_cast<Real>(mat.properties[i]);
    }
    Real* o = out.comp(0);
    const double e = mat.penalty;
#pragma omp parallel for schedule(static) if (!par::serial())
    for (Index node = 0; node < n; ++node) {
        Real acc = Real(0);
        for (int i = 0; i < np; ++i) acc += props[i] * detail::pow_penalty(p[i][node], e);
        o[node] = acc > floor_v ? acc : floor_v;
    }
}

template <class Real>
Field<Real> interpolate(const PhaseSet<Real>& phases, const MaterialModel& mat) {
    Field<Real> out(phases.grid(), 1);
    interpolate_into(phases, mat, out);
    return out;
}

/// J = sum kappa |grad T|^2 dV (midpoint quadrature, lumped cell volumes).
template <class Real>
double thermal_compliance(const Field<Real>& T, const Field<Real>& kappa) {
    if (!same_grid(T, kappa))
        throw std::invalid_argument("thermal_compliance: fields on different grids");
    const Grid& g = *T.grid;
    Field<Real> grad = gradient(T);
    const Index nx = g.n[0], ny = g.n[1], nz = g.n[2];
    const Real* kd = kappa.comp(0);
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
                total += static_cast<double>(kd[node]) * gsq * g.cell_volume(i, j, k);
            }
    return total;
}

/// Nodal strain invariants of a displacement field: trace of the strain and
/// the full contraction eps:eps. Shared by the energy and its sensitivities.
template <class Real>
void strain_invariants(const Field<Real>& u, Field<Real>& trace, Field<Real>& contraction) {
    const Grid& g = *u.grid;
    const int d = g.dim;
    const Index nn = g.num_nodes();
    std::vector<std::vector<Real>> du(static_cast<std::size_t>(d) * d,
                                      std::vector<Real>(static_cast<std::size_t>(nn)));
    for (int c = 0; c < d; ++c)
        for (int a = 0; a < d; ++a)
            derivative_into(g, u.comp(c), a, du[static_cast<std::size_t>(c) * d + a].data());
    Real* tr = trace.comp(0);
    Real* ec = contraction.comp(0);
#pragma omp parallel for schedule(static) if (!par::serial())
    for (Index node = 0; node < nn; ++node) {
        Real t = Real(0), c2 = Real(0);
        for (int a = 0; a < d; ++a) {
            const Real eaa = du[static_cast<std::size_t>(a) * d + a][node];
            t += eaa;
            c2 += eaa * eaa;
        }
        for (int a = 0; a < d; ++a)
            for (int b = a + 1; b < d; ++b) {
                const Real eab = Real(0.5) * (du[static_cast<std::size_t>(a) * d + b][node] +
                                              du[static_cast<std::size_t>(b) * d + a][node]);
                c2 += Real(2) * eab * eab;
            }
        tr[node] = t;
        ec[node] = c2;
    }
}

/// J = sum (sigma : eps) dV with sigma from the nodal Lame fields.
template <class Real>
double mechanical_compliance(const Field<Real>& u, const ElasticMaterialField<Real>& mat) {
    const Grid& g = *u.grid;
    Field<Real> tr(g, 1), ec(g, 1);
    strain_invariants(u, tr, ec);
    const Real* lam = mat.lambda.comp(0);
    const Real* mu = mat.mu.comp(0);
    const Real* trd = tr.comp(0);
    const Real* ecd = ec.comp(0);
    const Index nx = g.n[0], ny = g.n[1], nz = g.n[2];
    double total = 0.0;
    for (Index k = 0; k < nz; ++k)
        for (Index j = 0; j < ny; ++j)
            for (Index i = 0; i < nx; ++i) {
                const Index node = (k * ny + j) * nx + i;
                const double t = static_cast<double>(trd[node]);
                total += (static_cast<double>(lam[node]) * t * t +
                          2.0 * static_cast<double>(mu[node]) * static_cast<double>(ecd[node])) *
                         g.cell_volume(i, j, k);
            }
    return total;
}

/// Cell-volume-weighted mean of each phase (the integral divided by |Omega|).
template <class Real>
std::vector<double> volume_fractions(const PhaseSet<Real>& phases) {
    const double inv_vol = 1.0 / phases.grid().domain_volume();
    std::vector<double> out(phases.phases.size());
    for (std::size_t i = 0; i < phases.phases.size(); ++i)
        out[i] = phase_mass(phases.phases[i]) * inv_vol;
    return out;
}

template <class Real>
double volume_objective(const PhaseSet<Real>& phases, const VolumeTargets& targets) {
    if (targets.fractions.size() != phases.phases.size())
        throw std::invalid_argument("volume_objective: one target per phase required");
    const std::vector<double> m = volume_fractions(phases);
    double j = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i) {
        const double d = m[i] - targets.fractions[i];
        j += d * d;
    }
    return j;
}

/// J = sum_nodes (sum_i phi_i - 1)^2 dV.
template <class Real>
double unity_objective(const PhaseSet<Real>& phases) {
    const Grid& g = phases.grid();
    const Index nx = g.n[0], ny = g.n[1], nz = g.n[2];
    const int np = phases.count();
    std::vector<const Real*> p(np);
    for (int i = 0; i < np; ++i) p[i] = phases.phases[i].comp(0);
    double total = 0.0;
    for (Index k = 0; k < nz; ++k)
        for (Index j = 0; j < ny; ++j)
            for (Index i = 0; i < nx; ++i) {
                const Index node = (k * ny + j) * nx + i;
                double s = -1.0;
                for (int q = 0; q < np; ++q) s += static_cast<double>(p[q][node]);
                total += s * s * g.cell_volume(i, j, k);
            }
    return total;
}

namespace detail {

template <class Real>
double region_volume(const Grid& g, const std::vector<Index>& nodes) {
    double vol = 0.0;
    const Index nx = g.n[0], ny = g.n[1];
    for (Index node : nodes) {
        const Index k = node / (nx * ny);
        const Index j = (node - k * nx * ny) / nx;
        const Index i = node - (k * ny + j) * nx;
        vol += g.cell_volume(i, j, k);
    }
    return vol;
}

} // namespace detail

/// Per-phase region fractions measured over the protected region only.
template <class Real>
std::vector<double> region_fractions_measured(const PhaseSet<Real>& phases,
                                              const VolumeTargets& targets) {
    if (targets.region_nodes.empty())
        throw std::invalid_argument("region_objective: region mask covers no nodes");
    const Grid& g = phases.grid();
    const double vol_b = detail::region_volume<Real>(g, targets.region_nodes);
    const Index nx = g.n[0], ny = g.n[1];
    std::vector<double> m(phases.phases.size(), 0.0);
    for (std::size_t q = 0; q < phases.phases.size(); ++q) {
        const Real* p = phases.phases[q].comp(0);
        double acc = 0.0;
        for (Index node : targets.region_nodes) {
            const Index k = node / (nx * ny);
            const Index j = (node - k * nx * ny) / nx;
            const Index i = node - (k * ny + j) * nx;
            acc += static_cast<double>(p[node]) * g.cell_volume(i, j, k);
        }
        m[q] = acc / vol_b;
    }
    return m;
}

template <class Real>
double region_objective(const PhaseSet<Real>& phases, const VolumeTargets& targets) {
    if (!targets.has_region())
        throw std::invalid_argument("region_objective: no region targets configured");
    const std::vector<double> m = region_fractions_measured(phases, targets);
    double j = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i) {
        const double d = m[i] - targets.region_fractions[i];
        j += d * d;
    }
    return j;
}

/// All objective values of the current design/state pair in one report.
template <class Real>
ObjectiveReport evaluate_objectives(const PhaseSet<Real>& phases, const Field<Real>& state,
                                    const MaterialModel& mat, const VolumeTargets& targets) {
    ObjectiveReport rep;
    const Field<Real> property = interpolate(phases, mat);
    if (mat.kind == MaterialKind::Thermal) {
        rep.compliance = thermal_compliance(state, property);
    } else {
        rep.compliance =
            mechanical_compliance(state, make_lame(property, mat.poisson_ratio));
    }
    rep.volume = volume_objective(phases, targets);
    rep.unity = unity_objective(phases);
    rep.region = targets.has_region() ? region_objective(phases, targets) : 0.0;
    rep.volume_fractions = volume_fractions(phases);
    return rep;
}

// ---------------------------------------------------------------------------
// Sensitivities (state held fixed) and the design update

/// Per-phase gradient fields of each objective term, with the state (T or u)
/// held fixed: the compliance term differentiates only through the property
/// interpolation; volume/unity/region use their closed forms.
template <class Real>
struct SensitivityFields {
    std::vector<Field<Real>> compliance;
    std::vector<Field<Real>> volume;
    std::vector<Field<Real>> unity;
    std::vector<Field<Real>> region; // empty when no region targets
};

template <class Real>
SensitivityFields<Real> sensitivities(const PhaseSet<Real>& phases, const Field<Real>& state,
                                      const MaterialModel& mat, const VolumeTargets& targets) {
    mat.validate(phases.count());
    const Grid& g = phases.grid();
    const int np = phases.count();
    const Index nx = g.n[0], ny = g.n[1], nz = g.n[2];
    const double e = mat.penalty;

    // Energy density factor per node: |grad T|^2 for thermal, or the
    // per-unit-modulus strain energy for elastic problems.
    Field<Real> factor(g, 1);
    if (mat.kind == MaterialKind::Thermal) {
        require_scalar(state, "sensitivities (thermal state)");
        Field<Real> grad = gradient(state);
        Real* f = factor.comp(0);
        const Index nn = g.num_nodes();
#pragma omp parallel for schedule(static) if (!par::serial())
        for (Index node = 0; node < nn; ++node) {
            Real gsq = Real(0);
            for (int a = 0; a < g.dim; ++a) {
                const Real d = grad.at(a, node);
                gsq += d * d;
            }
            f[node] = gsq;
        }
    } else {
        Field<Real> tr(g, 1), ec(g, 1);
        strain_invariants(state, tr, ec);
        const double nu = mat.poisson_ratio;
        const Real ctr = static_cast<Real>(nu / ((1.0 + nu) * (1.0 - 2.0 * nu)));
        const Real cec = static_cast<Real>(1.0 / (1.0 + nu));
        Real* f = factor.comp(0);
        const Real* trd = tr.comp(0);
        const Real* ecd = ec.comp(0);
        const Index nn = g.num_nodes();
#pragma omp parallel for schedule(static) if (!par::serial())
        for (Index node = 0; node < nn; ++node)
            f[node] = ctr * trd[node] * trd[node] + cec * ecd[node];
    }

    SensitivityFields<Real> out;
    for (int i = 0; i < np; ++i) {
        out.compliance.emplace_back(g, 1);
        out.volume.emplace_back(g, 1);
        out.unity.emplace_back(g, 1);
    }
    if (targets.has_region())
        for (int i = 0; i < np; ++i) out.region.emplace_back(g, 1);

    const std::vector<double> means = volume_fractions(phases);
    const double inv_vol = 1.0 / g.domain_volume();
    std::vector<const Real*> p(np);
    for (int i = 0; i < np; ++i) p[i] = phases.phases[i].comp(0);
    const Real floor_v = static_cast<Real>(mat.void_floor);
    const Real* fac = factor.comp(0);

    for (int i = 0; i < np; ++i) {
        Real* gc = out.compliance[i].comp(0);
        Real* gv = out.volume[i].comp(0);
        Real* gu = out.unity[i].comp(0);
        const Real prop = static_cast<Real>(mat.properties[i]);
        const Real dm = static_cast<Real>(2.0 * (means[i] - targets.fractions[i]) * inv_vol);
#pragma omp parallel for collapse(2) schedule(static) if (!par::serial())
        for (Index k = 0; k < nz; ++k)
            for (Index j = 0; j < ny; ++j)
                for (Index ii = 0; ii < nx; ++ii) {
                    const Index node = (k * ny + j) * nx + ii;
                    const Real vol = static_cast<Real>(g.cell_volume(ii, j, k));
                    // floor gate: once the mix is clamped the derivative is zero
                    Real mix = Real(0);
                    Real ssum = Real(-1);
                    for (int q = 0; q < np; ++q) {
                        mix += static_cast<Real>(mat.properties[q]) *
                               detail::pow_penalty(p[q][node], e);
                        ssum += p[q][node];
                    }
                    const Real dprop = mix > floor_v
                                           ? static_cast<Real>(e) * prop *
                                                 detail::pow_penalty(p[i][node], e - 1.0)
                                           : Real(0);
                    gc[node] = dprop * fac[node] * vol;
                    gv[node] = dm * vol;
                    gu[node] = Real(2) * ssum * vol;
                }
    }

    if (targets.has_region()) {
        const std::vector<double> mb = region_fractions_measured(phases, targets);
        const double vol_b = detail::region_volume<Real>(g, targets.region_nodes);
        for (int i = 0; i < np; ++i) {
            out.region[i].fill(Real(0));
            Real* gr = out.region[i].comp(0);
            const double coeff = 2.0 * (mb[i] - targets.region_fractions[i]) / vol_b;
            for (Index node : targets.region_nodes) {
                const Index k = node / (nx * ny);
                const Index j = (node - k * nx * ny) / nx;
                const Index ii = node - (k * ny + j) * nx;
                gr[node] = static_cast<Real>(coeff * g.cell_volume(ii, j, k));
            }
        }
    }
    return out;
}

/// Gradient update with clamping. When normalization is on, the compliance
/// term per phase is alpha_h * g / max|g| (skipped for a phase whose
/// sensitivity vanishes identically that loop).
template <class Real>
void design_update_inplace(PhaseSet<Real>& phases, const SensitivityFields<Real>& sens,
                           const ObjectiveWeights& w) {
    w.validate();
    const int np = phases.count();
    const Index nn = phases.grid().num_nodes();
    for (int i = 0; i < np; ++i) {
        Real* phi = phases.phases[i].comp(0);
        const Real* gc = sens.compliance[i].comp(0);
        const Real* gv = sens.volume[i].comp(0);
        const Real* gu = sens.unity[i].comp(0);
        const Real* gr = sens.region.empty() ? nullptr : sens.region[i].comp(0);
        Real cscale = Real(0);
        if (w.alpha_compliance > 0) {
            if (w.normalize_compliance) {
                const double gmax = par::max_abs_nodes(nn, [gc](Index q) {
                    return static_cast<double>(gc[q]);
                });
                cscale = gmax > 0 ? static_cast<Real>(w.compliance_sign * w.alpha_compliance /
                                                      gmax)
                                  : Real(0);
            } else {
                cscale = static_cast<Real>(w.compliance_sign * w.alpha_compliance);
            }
        }
        const Real av = static_cast<Real>(w.alpha_volume);
        const Real au = static_cast<Real>(w.alpha_unity);
        const Real ar = static_cast<Real>(w.alpha_region);
#pragma omp parallel for schedule(static) if (!par::serial())
        for (Index q = 0; q < nn; ++q) {
            Real step = cscale * gc[q] + av * gv[q] + au * gu[q];
            if (gr) step += ar * gr[q];
            Real v = phi[q] - step;
            phi[q] = v < Real(0) ? Real(0) : (v > Real(1) ? Real(1) : v);
        }
    }
}

template <class Real>
PhaseSet<Real> design_update(const PhaseSet<Real>& phases, const SensitivityFields<Real>& sens,
                             const ObjectiveWeights& w) {
    PhaseSet<Real> out = phases;
    design_update_inplace(out, sens, w);
    return out;
}

} // namespace petto
