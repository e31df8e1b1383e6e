#pragma once

#include <cmath>
#include <utility>

#include "petto/grid.hpp"
#include "petto/parallel.hpp"
#include "petto/stencil.hpp"

namespace petto {

/// Placement of the first-order damping difference in the accelerated step.
/// ExplicitDamping takes it at (n, n-1); SemiImplicitDamping at (n+1, n),
/// which is the form used for the elasticity iterations.
enum class AptForm { ExplicitDamping, SemiImplicitDamping };

struct PTParams {
    double dt_pt = 0.0;   // pseudo time step of the plain iteration
    double dt_apt = 0.0;  // pseudo time step of the accelerated iteration
    double theta = 1.0;   // damping factor of the second-order term
    long n_apt = 0;       // accelerated steps per optimization loop
    long n_pt = 0;        // plain steps per optimization loop
    AptForm form = AptForm::ExplicitDamping;

    void validate() const {
        if (!(dt_pt > 0.0) && n_pt > 0)
            throw std::invalid_argument("pt params: dt_pt must be positive");
        if (!(dt_apt > 0.0) && n_apt > 0)
            throw std::invalid_argument("pt params: dt_apt must be positive");
        if (!(theta > 0.0)) throw std::invalid_argument("pt params: theta must be positive");
        if (n_apt < 0 || n_pt < 0 || n_apt + n_pt < 1)
            throw std::invalid_argument("pt params: need at least one step per loop");
    }
};

/// Two consecutive iterates, enough for the three-level accelerated stencil.
template <class Real>
struct StateHistory {
    Field<Real> current;
    Field<Real> previous;

    explicit StateHistory(const Field<Real>& init) : current(init), previous(init) {}
    StateHistory(Field<Real> cur, Field<Real> prev)
        : current(std::move(cur)), previous(std::move(prev)) {}
};

/// Node-count-normalized Euclidean norm: ||r||_2 / N with N the number of
/// grid nodes (not entries; vector fields still divide by the node count).
template <class Real>
double residual_norm(const Field<Real>& r) {
    const Index entries = r.num_nodes() * r.components;
    const Real* d = r.data.data();
    const double sq = par::sum_nodes(entries, [d](Index i) {
        const double v = static_cast<double>(d[i]);
        return v * v;
    });
    return std::sqrt(sq) / static_cast<double>(r.num_nodes());
}

// ---------------------------------------------------------------------------
// Physics operators

/// A state equation bundle: evaluates the pseudo-transient right-hand side and
/// knows which entries are constrained.
template <class Real>
class StateOperator {
public:
    virtual ~StateOperator() = default;
    virtual void residual(const Field<Real>& state, Field<Real>& out) const = 0;
    virtual const ConstraintSet& constraints() const = 0;
    virtual int components() const = 0;
};

/// div(kappa grad T) + f with zero-flux mirror ghosting; entries at
/// Dirichlet nodes are zeroed (constrained nodes carry no residual).
template <class Real>
class HeatOperator final : public StateOperator<Real> {
public:
    HeatOperator(const Grid& g, const Field<Real>& kappa, const Field<Real>& source,
                 const BoundarySpec& bc)
        : kappa_(&kappa), source_(&source), cs_(make_constraints(g, bc, 1)) {}

    void residual(const Field<Real>& T, Field<Real>& out) const override {
        variable_diffusion_into(T, *kappa_, out, source_->comp(0));
        zero_constrained(out, cs_);
    }

    const ConstraintSet& constraints() const override { return cs_; }
    int components() const override { return 1; }

private:
    const Field<Real>* kappa_;
    const Field<Real>* source_;
    ConstraintSet cs_;
};

template <class Real>
Field<Real> heat_residual(const Field<Real>& T, const Field<Real>& kappa,
                          const Field<Real>& source, const BoundarySpec& bc) {
    Field<Real> out(*T.grid, 1);
    HeatOperator<Real>(*T.grid, kappa, source, bc).residual(T, out);
    return out;
}

/// Node-wise Lame fields derived from an effective Young's modulus field.
template <class Real>
struct ElasticMaterialField {
    Field<Real> lambda;
    Field<Real> mu;
};

template <class Real>
ElasticMaterialField<Real> make_lame(const Field<Real>& modulus, double nu) {
    const Real cl = static_cast<Real>(nu / ((1.0 + nu) * (1.0 - 2.0 * nu)));
    const Real cm = static_cast<Real>(1.0 / (2.0 * (1.0 + nu)));
    ElasticMaterialField<Real> m{Field<Real>(*modulus.grid, 1), Field<Real>(*modulus.grid, 1)};
    const Index nn = modulus.num_nodes();
    const Real* e = modulus.comp(0);
    Real* l = m.lambda.comp(0);
    Real* u = m.mu.comp(0);
#pragma omp parallel for schedule(static) if (!par::serial())
    for (Index i = 0; i < nn; ++i) {
        l[i] = cl * e[i];
        u[i] = cm * e[i];
    }
    return m;
}

template <class Real>
void update_lame(const Field<Real>& modulus, double nu, ElasticMaterialField<Real>& m) {
    const Real cl = static_cast<Real>(nu / ((1.0 + nu) * (1.0 - 2.0 * nu)));
    const Real cm = static_cast<Real>(1.0 / (2.0 * (1.0 + nu)));
    const Index nn = modulus.num_nodes();
    const Real* e = modulus.comp(0);
    Real* l = m.lambda.comp(0);
    Real* u = m.mu.comp(0);
#pragma omp parallel for schedule(static) if (!par::serial())
    for (Index i = 0; i < nn; ++i) {
        l[i] = cl * e[i];
        u[i] = cm * e[i];
    }
}

namespace detail {

/// Stiffness of one unit-modulus trilinear (bilinear) cell, full Gauss
/// quadrature, plane strain in 2D. Local node l sits at the corner with
/// offset bits (l & 1, l >> 1 & 1, l >> 2 & 1); dof order is node-major.
inline std::vector<double> unit_cell_stiffness(int dim, const std::array<double, 3>& h,
                                               double nu) {
    const int nodes = 1 << dim;
    const int dofs = nodes * dim;
    const int voigt = dim * (dim + 1) / 2;
    const double lam = nu / ((1.0 + nu) * (1.0 - 2.0 * nu));
    const double mu = 1.0 / (2.0 * (1.0 + nu));

    std::vector<double> ke(static_cast<std::size_t>(dofs) * dofs, 0.0);
    std::vector<double> dmat(static_cast<std::size_t>(voigt) * voigt, 0.0);
    for (int a = 0; a < dim; ++a)
        for (int b = 0; b < dim; ++b)
            dmat[static_cast<std::size_t>(a) * voigt + b] = lam + (a == b ? 2.0 * mu : 0.0);
    for (int s = dim; s < voigt; ++s) dmat[static_cast<std::size_t>(s) * voigt + s] = mu;

    double cell_volume = 1.0;
    for (int a = 0; a < dim; ++a) cell_volume *= h[a];
    const double weight = cell_volume / nodes;
    const double gauss[2] = {0.5 - 0.5 / std::sqrt(3.0), 0.5 + 0.5 / std::sqrt(3.0)};

    std::vector<double> bmat(static_cast<std::size_t>(voigt) * dofs);
    for (int gp = 0; gp < nodes; ++gp) {
        double xi[3] = {gauss[gp & 1], gauss[(gp >> 1) & 1], gauss[(gp >> 2) & 1]};
        // shape gradient of node l along axis a
        auto dshape = [&](int l, int a) {
            double v = 1.0;
            for (int b = 0; b < dim; ++b) {
                const int bit = (l >> b) & 1;
                if (b == a)
                    v *= (bit ? 1.0 : -1.0) / h[b];
                else
                    v *= bit ? xi[b] : 1.0 - xi[b];
            }
            return v;
        };
        std::fill(bmat.begin(), bmat.end(), 0.0);
        for (int l = 0; l < nodes; ++l)
            for (int c = 0; c < dim; ++c) {
                const int dof = l * dim + c;
                bmat[static_cast<std::size_t>(c) * dofs + dof] = dshape(l, c);
                // engineering shear rows: (xy), then (xz), (yz) in 3D
                int row = dim;
                for (int a = 0; a < dim; ++a)
                    for (int b = a + 1; b < dim; ++b, ++row) {
                        if (c == a) bmat[static_cast<std::size_t>(row) * dofs + dof] += dshape(l, b);
                        if (c == b) bmat[static_cast<std::size_t>(row) * dofs + dof] += dshape(l, a);
                    }
            }
        for (int p = 0; p < dofs; ++p)
            for (int q = 0; q < dofs; ++q) {
                double acc = 0.0;
                for (int r = 0; r < voigt; ++r) {
                    double db = 0.0;
                    for (int s = 0; s < voigt; ++s)
                        db += dmat[static_cast<std::size_t>(r) * voigt + s] *
                              bmat[static_cast<std::size_t>(s) * dofs + q];
                    acc += bmat[static_cast<std::size_t>(r) * dofs + p] * db;
                }
                ke[static_cast<std::size_t>(p) * dofs + q] += weight * acc;
            }
    }

    // Canonicalize over transposition and the axis-mirror group so the
    // matrix is invariant to the last bit; mirror symmetry of solutions then
    // survives millions of steps instead of being lost to rounding noise.
    std::vector<double> canon(ke.size());
    for (int p = 0; p < dofs; ++p)
        for (int q = 0; q < dofs; ++q) {
            int best_p = p, best_q = q;
            double best_sign = 1.0;
            for (int flips = 0; flips < nodes; ++flips)
                for (int transpose = 0; transpose < 2; ++transpose) {
                    int pp = ((p / dim) ^ flips) * dim + p % dim;
                    int qq = ((q / dim) ^ flips) * dim + q % dim;
                    double sign = 1.0;
                    if ((flips >> (p % dim)) & 1) sign = -sign;
                    if ((flips >> (q % dim)) & 1) sign = -sign;
                    if (transpose) std::swap(pp, qq);
                    if (pp < best_p || (pp == best_p && qq < best_q)) {
                        best_p = pp;
                        best_q = qq;
                        best_sign = sign;
                    }
                }
            canon[static_cast<std::size_t>(p) * dofs + q] =
                best_sign * ke[static_cast<std::size_t>(best_p) * dofs + best_q];
        }
    return canon;
}

/// Pairwise tree sum of 2^levels lanes. An axis mirror permutes lanes within
/// a single tree level only, so the rounded result is identical for a field
/// and its mirror image.
template <class Real>
inline Real mirror_tree_sum(Real* v, int count) {
    for (int width = count; width > 1; width /= 2)
        for (int i = 0; i < width / 2; ++i) v[i] = v[2 * i] + v[2 * i + 1];
    return v[0];
}

} // namespace detail

/// Largest eigenvalue the lumped elasticity operator can reach for any
/// modulus field bounded by e_max (elementwise Rayleigh bound); used to set
/// explicit step sizes.
inline double elasticity_spectral_bound(const Grid& g, double nu, double e_max) {
    const int dim = g.dim;
    const int dofs = (1 << dim) * dim;
    const std::vector<double> ke = detail::unit_cell_stiffness(dim, g.spacing, nu);
    // power iteration on the small element matrix
    std::vector<double> v(dofs, 1.0), w(dofs);
    double lmax = 0.0;
    for (int it = 0; it < 200; ++it) {
        double norm = 0.0;
        for (int p = 0; p < dofs; ++p) {
            double acc = 0.0;
            for (int q = 0; q < dofs; ++q)
                acc += ke[static_cast<std::size_t>(p) * dofs + q] * v[q];
            w[p] = acc;
            norm += acc * acc;
        }
        norm = std::sqrt(norm);
        if (norm == 0.0) break;
        lmax = norm;
        for (int p = 0; p < dofs; ++p) v[p] = w[p] / norm;
    }
    double cell_volume = 1.0;
    for (int a = 0; a < dim; ++a) cell_volume *= g.spacing[a];
    // lumped nodal mass per cell corner is V_cell / 2^dim
    return lmax * e_max * (1 << dim) / cell_volume;
}

/// div(sigma) - f for small-strain isotropic elasticity, evaluated as the
/// matrix-free action of an assembled trilinear-element stiffness with one
/// modulus value per cell (the mean of its corners) divided by the lumped
/// nodal volume. The quadratic form is symmetric negative semidefinite for
/// any positive modulus field, so the explicit pseudo-time iterations stay
/// stable under the million-to-one property contrast. Free faces are
/// natural (zero traction); constrained components of the residual are
/// zeroed. The Poisson ratio must be uniform.
template <class Real>
class ElasticityOperator final : public StateOperator<Real> {
public:
    ElasticityOperator(const Grid& g, const ElasticMaterialField<Real>& mat,
                       const Field<Real>& loads, const BoundarySpec& bc)
        : grid_(&g), mat_(&mat), loads_(&loads), cs_(make_constraints(g, bc, g.dim)) {
        for (Index i = 0; i < g.num_nodes(); ++i)
            if (!(mat.lambda.at(0, i) > Real(0)) || !(mat.mu.at(0, i) > Real(0)))
                throw std::invalid_argument("elasticity: Lame fields must be positive");
        // nu from the node-wise Lame pair; a uniform ratio is assumed
        const double l0 = static_cast<double>(mat.lambda.at(0, 0));
        const double m0 = static_cast<double>(mat.mu.at(0, 0));
        nu_ = l0 / (2.0 * (l0 + m0));
        ke_ = detail::unit_cell_stiffness(g.dim, g.spacing, nu_);
        const Index nn = g.num_nodes();
        inv_volume_.resize(static_cast<std::size_t>(nn));
        for (Index k = 0; k < g.n[2]; ++k)
            for (Index j = 0; j < g.n[1]; ++j)
                for (Index i = 0; i < g.n[0]; ++i)
                    inv_volume_[static_cast<std::size_t>(g.node(i, j, k))] =
                        1.0 / g.cell_volume(i, j, k);
    }

    void residual(const Field<Real>& u, Field<Real>& out) const override;

    const ConstraintSet& constraints() const override { return cs_; }
    int components() const override { return grid_->dim; }

private:
    const Grid* grid_;
    const ElasticMaterialField<Real>* mat_;
    const Field<Real>* loads_;
    ConstraintSet cs_;
    double nu_ = 0.3;
    std::vector<double> ke_;
    std::vector<double> inv_volume_;
};

template <class Real>
void ElasticityOperator<Real>::residual(const Field<Real>& u, Field<Real>& out) const {
    const Grid& g = *grid_;
    const int d = g.dim;
    const int cell_nodes = 1 << d;
    const int dofs = cell_nodes * d;
    const Index nx = g.n[0], ny = g.n[1], nz = g.n[2];
    const Real* mu = mat_->mu.comp(0);
    // E = 2 mu (1 + nu) node-wise; cells take the corner mean
    const Real e_from_mu = static_cast<Real>(2.0 * (1.0 + nu_) / cell_nodes);

#pragma omp parallel for collapse(2) schedule(static) if (!par::serial())
    for (Index k = 0; k < nz; ++k)
        for (Index j = 0; j < ny; ++j) {
            const Index row = (k * ny + j) * nx;
            for (Index i = 0; i < nx; ++i) {
                const Index node = row + i;
                // contribution of the cell at node-offset m, one lane per
                // offset; tree sums keep the result mirror-stable
                Real lanes[3][8];
                for (int c = 0; c < d; ++c)
                    for (int m = 0; m < cell_nodes; ++m) lanes[c][m] = Real(0);
                for (int m = 0; m < cell_nodes; ++m) {
                    const Index ci = i - (m & 1);
                    const Index cj = j - ((m >> 1) & 1);
                    const Index ck = d == 3 ? k - ((m >> 2) & 1) : 0;
                    if (ci < 0 || ci > nx - 2 || cj < 0 || cj > ny - 2) continue;
                    if (d == 3 && (ck < 0 || ck > nz - 2)) continue;
                    const Index base = (ck * ny + cj) * nx + ci;
                    Index corners[8];
                    Real ev[8];
                    for (int m2 = 0; m2 < cell_nodes; ++m2) {
                        corners[m2] = base + (m2 & 1) + nx * ((m2 >> 1) & 1) +
                                      (d == 3 ? nx * ny * ((m2 >> 2) & 1) : 0);
                        ev[m2] = mu[corners[m2]];
                    }
                    const Real e_cell = detail::mirror_tree_sum(ev, cell_nodes) * e_from_mu;
                    const int l = m; // this node's local index in that cell
                    for (int c = 0; c < d; ++c) {
                        const double* kr =
                            ke_.data() + static_cast<std::size_t>(l * d + c) * dofs;
                        Real tv[8];
                        for (int m2 = 0; m2 < cell_nodes; ++m2) {
                            Real t = Real(0);
                            for (int b = 0; b < d; ++b)
                                t += static_cast<Real>(kr[m2 * d + b]) * u.at(b, corners[m2]);
                            tv[m2] = t;
                        }
                        lanes[c][m] = e_cell * detail::mirror_tree_sum(tv, cell_nodes);
                    }
                }
                const Real invv = static_cast<Real>(inv_volume_[static_cast<std::size_t>(node)]);
                for (int c = 0; c < d; ++c)
                    out.at(c, node) =
                        -detail::mirror_tree_sum(lanes[c], cell_nodes) * invv - loads_->at(c, node);
            }
        }
    zero_constrained(out, cs_);
}

template <class Real>
Field<Real> elasticity_residual(const Field<Real>& u, const ElasticMaterialField<Real>& mat,
                                const Field<Real>& loads, const BoundarySpec& bc) {
    Field<Real> out(*u.grid, u.grid->dim);
    ElasticityOperator<Real>(*u.grid, mat, loads, bc).residual(u, out);
    return out;
}

// ---------------------------------------------------------------------------
// Pseudo-time steps

/// state + dt * residual, constraints reapplied. Writes the new iterate into
/// the history's previous buffer and swaps, so no allocation happens.
template <class Real>
void pt_step_inplace(StateHistory<Real>& hist, const Field<Real>& residual, double dt,
                     const ConstraintSet& cs) {
    const Index n = hist.current.num_nodes() * hist.current.components;
    const Real* c = hist.current.data.data();
    const Real* r = residual.data.data();
    Real* next = hist.previous.data.data();
    const Real h = static_cast<Real>(dt);
#pragma omp parallel for schedule(static) if (!par::serial())
    for (Index i = 0; i < n; ++i) next[i] = c[i] + h * r[i];
    std::swap(hist.current, hist.previous);
    apply_constraints(hist.current, cs);
}

template <class Real>
void apt_step_inplace(StateHistory<Real>& hist, const Field<Real>& residual, double dt,
                      double theta, AptForm form, const ConstraintSet& cs) {
    const Index n = hist.current.num_nodes() * hist.current.components;
    const Real* c = hist.current.data.data();
    const Real* p = hist.previous.data.data();
    const Real* r = residual.data.data();
    Real* next = hist.previous.data.data(); // reads p[i] before the overwrite
    if (form == AptForm::ExplicitDamping) {
        // theta (T+ - 2T + T-)/dt^2 + (T - T-)/dt = R
        const Real a = static_cast<Real>(dt * dt / theta);
        const Real b = static_cast<Real>(dt / theta);
#pragma omp parallel for schedule(static) if (!par::serial())
        for (Index i = 0; i < n; ++i) {
            const Real first = c[i] - p[i];
            next[i] = Real(2) * c[i] - p[i] + a * r[i] - b * first;
        }
    } else {
        // theta (T+ - 2T + T-)/dt^2 + (T+ - T)/dt = R
        const Real a = static_cast<Real>(dt * dt / theta);
        const Real b = static_cast<Real>(dt / theta);
        const Real inv = Real(1) / (Real(1) + b);
#pragma omp parallel for schedule(static) if (!par::serial())
        for (Index i = 0; i < n; ++i)
            next[i] = (Real(2) * c[i] - p[i] + b * c[i] + a * r[i]) * inv;
    }
    std::swap(hist.current, hist.previous);
    apply_constraints(hist.current, cs);
}

template <class Real>
Field<Real> pt_step(const Field<Real>& state, const Field<Real>& residual, double dt,
                    const BoundarySpec& bc) {
    StateHistory<Real> hist(state);
    pt_step_inplace(hist, residual, dt, make_constraints(*state.grid, bc, state.components));
    return hist.current;
}

template <class Real>
StateHistory<Real> apt_step(const StateHistory<Real>& hist, const Field<Real>& residual,
                            double dt, double theta, AptForm form, const BoundarySpec& bc) {
    StateHistory<Real> h = hist;
    apt_step_inplace(h, residual, dt, theta, form,
                     make_constraints(*hist.current.grid, bc, hist.current.components));
    return h;
}

namespace detail {

template <class Real>
void check_finite(const Field<Real>& f, const char* name, long long step) {
    const Index n = f.num_nodes() * f.components;
    const Real* d = f.data.data();
    const double s = par::sum_nodes(n, [d](Index i) {
        const double v = static_cast<double>(d[i]);
        return v < 0 ? -v : v;
    });
    if (!std::isfinite(s))
        throw NumericalAbort(name, step, "non-finite values (time step too large?)");
}

} // namespace detail

/// One pass of the hybrid schedule: n_apt accelerated steps followed by n_pt
/// plain steps. Never raises on non-convergence; the outer loop owns that.
/// A finiteness check every 100 steps aborts cleanly on blow-up.
template <class Real>
void hybrid_solve(StateHistory<Real>& hist, const StateOperator<Real>& op,
                  const PTParams& params) {
    params.validate();
    Field<Real> r(*hist.current.grid, op.components());
    long long step = 0;
    for (long s = 0; s < params.n_apt; ++s) {
        op.residual(hist.current, r);
        apt_step_inplace(hist, r, params.dt_apt, params.theta, params.form,
                         op.constraints());
        if (++step % 100 == 0) detail::check_finite(hist.current, "state", step);
    }
    for (long s = 0; s < params.n_pt; ++s) {
        op.residual(hist.current, r);
        pt_step_inplace(hist, r, params.dt_pt, op.constraints());
        if (++step % 100 == 0) detail::check_finite(hist.current, "state", step);
    }
    detail::check_finite(hist.current, "state", step);
}

enum class IterationMode { PT, APT };

struct SolveStats {
    long iterations = 0;
    double r_initial = 0.0;
    double r_final = 0.0;
    bool converged = false;
};

/// Repeats a single-flavor iteration until r_PDE drops below target (absolute)
/// or max_iters is reached. Used by scaling and convergence-order studies.
template <class Real>
SolveStats iterate_to_tolerance(StateHistory<Real>& hist, const StateOperator<Real>& op,
                                IterationMode mode, const PTParams& params, double target,
                                long max_iters) {
    Field<Real> r(*hist.current.grid, op.components());
    SolveStats out;
    op.residual(hist.current, r);
    out.r_initial = residual_norm(r);
    out.r_final = out.r_initial;
    if (out.r_final < target) {
        out.converged = true;
        return out;
    }
    for (long it = 0; it < max_iters; ++it) {
        if (mode == IterationMode::PT)
            pt_step_inplace(hist, r, params.dt_pt, op.constraints());
        else
            apt_step_inplace(hist, r, params.dt_apt, params.theta, params.form,
                             op.constraints());
        op.residual(hist.current, r);
        out.iterations = it + 1;
        out.r_final = residual_norm(r);
        if (!std::isfinite(out.r_final))
            throw NumericalAbort("state", it + 1, "residual norm diverged");
        if (out.r_final < target) {
            out.converged = true;
            break;
        }
    }
    return out;
}

} // namespace petto
