#pragma once

#include <atomic>
#include <cmath>

#include "petto/grid.hpp"
#include "petto/parallel.hpp"

// Second-order central-difference stencils on node-centered grids.
//
// Closure rules, fixed across the project:
//   * first derivatives: central in the interior, one-sided second order
//     (3-point) on boundary planes — exact for fields affine in the coords;
//   * conservative operators (variable_diffusion, laplacian_noflux): face
//     fluxes with mirror ghosts on every face, i.e. the zero-normal-flux
//     closure. Combined with half-cell lumping at the boundary this
//     telescopes, so flux-form operators conserve the lumped integral.

namespace petto {

namespace detail {

template <class Real>
inline Real d1_along(const Real* f, Index t, Index nn, Index stride, Real half_inv_h) {
    if (nn == 1) return Real(0);
    if (t == 0)
        return (Real(-3) * f[0] + Real(4) * f[stride] - f[2 * stride]) * half_inv_h;
    if (t == nn - 1)
        return (Real(3) * f[0] - Real(4) * f[-stride] + f[-2 * stride]) * half_inv_h;
    return (f[stride] - f[-stride]) * half_inv_h;
}

} // namespace detail

/// d/dx_a of one scalar component, written into out (length N).
template <class Real>
void derivative_into(const Grid& g, const Real* f, int axis, Real* out) {
    const Index nx = g.n[0], ny = g.n[1], nz = g.n[2];
    const Index stride = axis == 0 ? 1 : (axis == 1 ? nx : nx * ny);
    const Index nn = g.n[axis];
    const Real half_inv_h = Real(0.5) / static_cast<Real>(g.spacing[axis]);
#pragma omp parallel for collapse(2) schedule(static) if (!par::serial())
    for (Index k = 0; k < nz; ++k)
        for (Index j = 0; j < ny; ++j) {
            const Index row = (k * ny + j) * nx;
            for (Index i = 0; i < nx; ++i) {
                const Index node = row + i;
                const Index t = axis == 0 ? i : (axis == 1 ? j : k);
                out[node] = detail::d1_along(f + node, t, nn, stride, half_inv_h);
            }
        }
}

/// Gradient of a scalar field; output has one component per spatial axis.
template <class Real>
void gradient_into(const Field<Real>& f, Field<Real>& out) {
    require_scalar(f, "gradient");
    const Grid& g = *f.grid;
    for (int a = 0; a < g.dim; ++a) derivative_into(g, f.comp(0), a, out.comp(a));
}

template <class Real>
Field<Real> gradient(const Field<Real>& f) {
    Field<Real> out(*f.grid, f.grid->dim);
    gradient_into(f, out);
    return out;
}

/// Divergence of a vector field: sum of d/dx_a of component a.
template <class Real>
void divergence_into(const Field<Real>& v, Field<Real>& out) {
    const Grid& g = *v.grid;
    if (v.components != g.dim)
        throw std::invalid_argument("divergence: component count must match grid dimension");
    const Index nn = g.num_nodes();
    std::vector<Real> scratch(static_cast<std::size_t>(nn));
    derivative_into(g, v.comp(0), 0, out.comp(0));
    for (int a = 1; a < g.dim; ++a) {
        derivative_into(g, v.comp(a), a, scratch.data());
        Real* o = out.comp(0);
#pragma omp parallel for schedule(static) if (!par::serial())
        for (Index node = 0; node < nn; ++node) o[node] += scratch[node];
    }
}

template <class Real>
Field<Real> divergence(const Field<Real>& v) {
    Field<Real> out(*v.grid, 1);
    divergence_into(v, out);
    return out;
}

namespace detail {

// One axis of the flux form: d/dx (kappa df/dx) with arithmetic face means of
// kappa and mirror ghosts at both ends.
template <class Real>
inline Real flux_along(const Real* f, const Real* kp, Index t, Index nn, Index stride,
                       Real half_inv_h2) {
    if (nn == 1) return Real(0);
    if (t == 0) return (kp[0] + kp[stride]) * (f[stride] - f[0]) * (Real(2) * half_inv_h2);
    if (t == nn - 1)
        return (kp[0] + kp[-stride]) * (f[-stride] - f[0]) * (Real(2) * half_inv_h2);
    return ((kp[0] + kp[stride]) * (f[stride] - f[0]) -
            (kp[-stride] + kp[0]) * (f[0] - f[-stride])) *
           half_inv_h2;
}

template <class Real>
inline Real lap_along(const Real* f, Index t, Index nn, Index stride, Real inv_h2) {
    if (nn == 1) return Real(0);
    if (t == 0) return Real(2) * (f[stride] - f[0]) * inv_h2;
    if (nn - 1 == t) return Real(2) * (f[-stride] - f[0]) * inv_h2;
    // summed as two face differences so a mirrored field rounds identically
    return ((f[stride] - f[0]) + (f[-stride] - f[0])) * inv_h2;
}

} // namespace detail

/// Conservative-form div(kappa grad f), optionally plus a source term fused
/// into the same pass. Errors out if kappa is not strictly positive (a broken
/// property interpolation upstream).
template <class Real>
void variable_diffusion_into(const Field<Real>& f, const Field<Real>& kappa,
                             Field<Real>& out, const Real* source = nullptr) {
    require_scalar(f, "variable_diffusion");
    require_scalar(kappa, "variable_diffusion (kappa)");
    if (!same_grid(f, kappa))
        throw std::invalid_argument("variable_diffusion: fields live on different grids");
    const Grid& g = *f.grid;
    const Index nx = g.n[0], ny = g.n[1], nz = g.n[2];
    const Real* fd = f.comp(0);
    const Real* kd = kappa.comp(0);
    Real* od = out.comp(0);
    Real half_inv_h2[3];
    for (int a = 0; a < 3; ++a)
        half_inv_h2[a] = Real(0.5) / static_cast<Real>(g.spacing[a] * g.spacing[a]);
    std::atomic<bool> bad_kappa{false};
#pragma omp parallel for collapse(2) schedule(static) if (!par::serial())
    for (Index k = 0; k < nz; ++k)
        for (Index j = 0; j < ny; ++j) {
            const Index row = (k * ny + j) * nx;
            for (Index i = 0; i < nx; ++i) {
                const Index node = row + i;
                if (!(kd[node] > Real(0))) [[unlikely]]
                    bad_kappa.store(true, std::memory_order_relaxed);
                Real acc = detail::flux_along(fd + node, kd + node, i, nx, Index(1),
                                              half_inv_h2[0]);
                acc += detail::flux_along(fd + node, kd + node, j, ny, nx, half_inv_h2[1]);
                if (nz > 1)
                    acc += detail::flux_along(fd + node, kd + node, k, nz, nx * ny,
                                              half_inv_h2[2]);
                od[node] = source ? acc + source[node] : acc;
            }
        }
    if (bad_kappa.load())
        throw std::invalid_argument("variable_diffusion: kappa must be positive everywhere");
}

template <class Real>
Field<Real> variable_diffusion(const Field<Real>& f, const Field<Real>& kappa) {
    Field<Real> out(*f.grid, 1);
    variable_diffusion_into(f, kappa, out);
    return out;
}

/// Compact Laplacian with the zero-flux mirror closure, used by the phase
/// field equations for both grad^2 phi and grad^2 mu.
template <class Real>
void laplacian_noflux_into(const Field<Real>& f, Field<Real>& out) {
    require_scalar(f, "laplacian_noflux");
    const Grid& g = *f.grid;
    const Index nx = g.n[0], ny = g.n[1], nz = g.n[2];
    const Real* fd = f.comp(0);
    Real* od = out.comp(0);
    Real inv_h2[3];
    for (int a = 0; a < 3; ++a)
        inv_h2[a] = Real(1) / static_cast<Real>(g.spacing[a] * g.spacing[a]);
#pragma omp parallel for collapse(2) schedule(static) if (!par::serial())
    for (Index k = 0; k < nz; ++k)
        for (Index j = 0; j < ny; ++j) {
            const Index row = (k * ny + j) * nx;
            for (Index i = 0; i < nx; ++i) {
                const Index node = row + i;
                Real acc = detail::lap_along(fd + node, i, nx, Index(1), inv_h2[0]);
                acc += detail::lap_along(fd + node, j, ny, nx, inv_h2[1]);
                if (nz > 1) acc += detail::lap_along(fd + node, k, nz, nx * ny, inv_h2[2]);
                od[node] = acc;
            }
        }
}

template <class Real>
Field<Real> laplacian_noflux(const Field<Real>& f) {
    Field<Real> out(*f.grid, 1);
    laplacian_noflux_into(f, out);
    return out;
}

} // namespace petto
