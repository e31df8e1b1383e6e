#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "petto/errors.hpp"

namespace petto {

using Index = std::int64_t;

/// Uniform node-centered structured grid, 2D or 3D. Nodes sit on the domain
/// boundary, so spacing = length / (count - 1) per axis. The z axis is inert
/// in 2D (one node, unit spacing).
struct Grid {
    int dim = 2;
    std::array<Index, 3> n{1, 1, 1};
    std::array<double, 3> length{0.0, 0.0, 0.0};
    std::array<double, 3> spacing{1.0, 1.0, 1.0};

    static Grid make2d(Index nx, Index ny, double lx, double ly) {
        Grid g;
        g.dim = 2;
        g.n = {nx, ny, 1};
        g.length = {lx, ly, 0.0};
        g.finalize();
        return g;
    }

    static Grid make3d(Index nx, Index ny, Index nz, double lx, double ly, double lz) {
        Grid g;
        g.dim = 3;
        g.n = {nx, ny, nz};
        g.length = {lx, ly, lz};
        g.finalize();
        return g;
    }

    Index num_nodes() const { return n[0] * n[1] * n[2]; }

    Index node(Index i, Index j, Index k = 0) const { return (k * n[1] + j) * n[0] + i; }

    double coord(int axis, Index i) const { return spacing[axis] * static_cast<double>(i); }

    double min_spacing() const {
        double m = spacing[0];
        for (int a = 1; a < dim; ++a) m = std::min(m, spacing[a]);
        return m;
    }

    double domain_volume() const {
        double v = 1.0;
        for (int a = 0; a < dim; ++a) v *= length[a];
        return v;
    }

    /// Lumped quadrature weight along one axis: half a cell at the ends.
    double cell_extent(int axis, Index i) const {
        if (n[axis] == 1) return 1.0;
        return (i == 0 || i == n[axis] - 1) ? 0.5 * spacing[axis] : spacing[axis];
    }

    double cell_volume(Index i, Index j, Index k = 0) const {
        double v = cell_extent(0, i) * cell_extent(1, j);
        if (dim == 3) v *= cell_extent(2, k);
        return v;
    }

private:
    void finalize() {
        if (dim != 2 && dim != 3) throw std::invalid_argument("grid: dim must be 2 or 3");
        for (int a = 0; a < dim; ++a) {
            if (n[a] < 3)
                throw std::invalid_argument("grid: need at least 3 nodes per axis");
            if (!(length[a] > 0.0))
                throw std::invalid_argument("grid: axis length must be positive");
            spacing[a] = length[a] / static_cast<double>(n[a] - 1);
        }
        if (dim == 2) {
            n[2] = 1;
            spacing[2] = 1.0;
        }
    }
};

/// Nodal values on a Grid, scalar or one value per spatial component.
/// Storage is component-major: component c occupies [c*N, (c+1)*N).
template <class Real>
struct Field {
    const Grid* grid = nullptr;
    int components = 1;
    std::vector<Real> data;

    Field() = default;
    Field(const Grid& g, int comps, Real init = Real(0))
        : grid(&g), components(comps),
          data(static_cast<std::size_t>(g.num_nodes()) * comps, init) {
        if (comps < 1) throw std::invalid_argument("field: components must be >= 1");
    }

    Index num_nodes() const { return grid->num_nodes(); }

    Real* comp(int c) { return data.data() + static_cast<std::size_t>(c) * num_nodes(); }
    const Real* comp(int c) const {
        return data.data() + static_cast<std::size_t>(c) * num_nodes();
    }

    std::span<Real> comp_span(int c) {
        return {comp(c), static_cast<std::size_t>(num_nodes())};
    }
    std::span<const Real> comp_span(int c) const {
        return {comp(c), static_cast<std::size_t>(num_nodes())};
    }

    Real& at(int c, Index node) { return data[static_cast<std::size_t>(c) * num_nodes() + node]; }
    Real at(int c, Index node) const {
        return data[static_cast<std::size_t>(c) * num_nodes() + node];
    }

    void fill(Real v) { std::fill(data.begin(), data.end(), v); }

    bool all_finite() const {
        for (Real v : data)
            if (!std::isfinite(static_cast<double>(v))) return false;
        return true;
    }
};

template <class Real>
bool same_grid(const Field<Real>& a, const Field<Real>& b) {
    return a.grid == b.grid ||
           (a.grid && b.grid && a.grid->n == b.grid->n && a.grid->length == b.grid->length);
}

template <class Real>
void require_scalar(const Field<Real>& f, const char* what) {
    if (f.components != 1) throw std::invalid_argument(std::string(what) + ": expected a scalar field");
}

// ---------------------------------------------------------------------------
// Boundary conditions

enum class CondKind { Dirichlet, NeumannZero, TractionFree, Roller };

enum Face : int { XLo = 0, XHi = 1, YLo = 2, YHi = 3, ZLo = 4, ZHi = 5 };

inline int face_axis(int f) { return f / 2; }
inline bool face_high(int f) { return (f % 2) != 0; }

struct FaceCondition {
    CondKind kind = CondKind::NeumannZero;
    double value = 0.0; // Dirichlet value
    int component = 0;  // Roller: the displacement component held at zero
};

/// Single pinned degree of freedom: (node, component) forced to a value.
struct NodePin {
    Index node = 0;
    int component = 0;
    double value = 0.0;
};

struct BoundarySpec {
    std::array<FaceCondition, 6> face{};
    std::vector<NodePin> pins;
};

/// Flattened list of constrained entries of a field (comp*N + node), with the
/// prescribed values. Built once, applied after every solver step.
struct ConstraintSet {
    std::vector<Index> entry;
    std::vector<double> value;

    std::size_t size() const { return entry.size(); }
};

/// Collects Dirichlet/Roller faces plus node pins into a ConstraintSet for a
/// field with the given component count. Node pins override face conditions.
inline ConstraintSet make_constraints(const Grid& g, const BoundarySpec& bc, int components) {
    const Index nnodes = g.num_nodes();
    std::unordered_map<Index, double> pinned;

    auto add = [&](Index node, int c, double v) {
        pinned[static_cast<Index>(c) * nnodes + node] = v;
    };

    const int nfaces = g.dim * 2;
    for (int f = 0; f < nfaces; ++f) {
        const FaceCondition& fc = bc.face[f];
        if (fc.kind != CondKind::Dirichlet && fc.kind != CondKind::Roller) continue;
        const int a = face_axis(f);
        const Index fixed = face_high(f) ? g.n[a] - 1 : 0;
        const int b = (a + 1) % 3;
        const int c = (a + 2) % 3;
        Index idx[3];
        idx[a] = fixed;
        for (Index p = 0; p < g.n[b]; ++p) {
            idx[b] = p;
            for (Index q = 0; q < g.n[c]; ++q) {
                idx[c] = q;
                const Index node = g.node(idx[0], idx[1], idx[2]);
                if (fc.kind == CondKind::Dirichlet) {
                    for (int comp = 0; comp < components; ++comp) add(node, comp, fc.value);
                } else {
                    if (fc.component < components) add(node, fc.component, fc.value);
                }
            }
        }
    }

    for (const NodePin& p : bc.pins) {
        if (p.node < 0 || p.node >= nnodes)
            throw std::invalid_argument("boundary: pin references a node outside the grid");
        if (p.component < 0 || p.component >= components)
            throw std::invalid_argument("boundary: pin references an invalid component");
        add(p.node, p.component, p.value);
    }

    ConstraintSet cs;
    cs.entry.reserve(pinned.size());
    for (const auto& [e, v] : pinned) cs.entry.push_back(e);
    std::sort(cs.entry.begin(), cs.entry.end());
    cs.value.reserve(cs.entry.size());
    for (Index e : cs.entry) cs.value.push_back(pinned[e]);
    return cs;
}

template <class Real>
void apply_constraints(Field<Real>& f, const ConstraintSet& cs) {
    for (std::size_t i = 0; i < cs.size(); ++i)
        f.data[static_cast<std::size_t>(cs.entry[i])] = static_cast<Real>(cs.value[i]);
}

template <class Real>
void zero_constrained(Field<Real>& f, const ConstraintSet& cs) {
    for (Index e : cs.entry) f.data[static_cast<std::size_t>(e)] = Real(0);
}

/// Overwrites Dirichlet/Roller-constrained entries with their prescribed
/// values; all other entries are untouched. Idempotent.
template <class Real>
void apply_dirichlet(Field<Real>& f, const BoundarySpec& bc) {
    apply_constraints(f, make_constraints(*f.grid, bc, f.components));
}

} // namespace petto
