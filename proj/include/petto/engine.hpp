#pragma once

#include <cmath>
#include <string>

#include "petto/config_io.hpp"
#include "petto/field_io.hpp"
#include "petto/optimizer.hpp"
#include "petto/problem_config.hpp"

namespace petto {

/// Nodes whose coordinates fall inside the box, with half-spacing slack per
/// axis so a degenerate box captures the nearest node (or the symmetric pair
/// when the point sits exactly between two planes).
std::vector<Index> nodes_in_box(const Grid& g, const BoxSpec& box);

Grid make_grid(const ProblemConfig& cfg);

/// Rescales the volume/unity/region weights from the reference resolution
/// they were tuned at to the run grid, keeping the per-node update magnitude
/// resolution-independent. No-op when weight_ref_nodes is 0.
ObjectiveWeights effective_weights(const ProblemConfig& cfg, const Grid& g);

LoopSchedule build_schedule(const ProblemConfig& cfg, const Grid& g);

template <class Real>
Problem<Real> build_problem(const ProblemConfig& cfg) {
    validate_config(cfg);
    Problem<Real> prob;
    prob.grid = std::make_unique<Grid>(make_grid(cfg));
    const Grid& g = *prob.grid;
    const int dim = g.dim;

    prob.kind = cfg.physics == PhysicsKind::Heat ? MaterialKind::Thermal : MaterialKind::Elastic;
    prob.material.kind = prob.kind;
    prob.material.properties = cfg.properties;
    prob.material.poisson_ratio = cfg.poisson_ratio;
    prob.material.penalty = cfg.penalty;
    prob.material.void_floor = cfg.void_floor;

    if (cfg.physics == PhysicsKind::Heat) {
        for (int f = 0; f < 2 * dim; ++f) prob.bc.face[f] = {CondKind::NeumannZero, 0.0, 0};
        for (const std::string& name : cfg.dirichlet_faces)
            prob.bc.face[face_index_from_name(name)] = {CondKind::Dirichlet,
                                                        cfg.dirichlet_value, 0};
        prob.source = Field<Real>(g, 1, static_cast<Real>(cfg.source));
    } else {
        for (int f = 0; f < 2 * dim; ++f) prob.bc.face[f] = {CondKind::TractionFree, 0.0, 0};
        for (const std::string& name : cfg.fixed_faces)
            prob.bc.face[face_index_from_name(name)] = {CondKind::Dirichlet, 0.0, 0};
        for (const RollerSpec& r : cfg.rollers)
            for (Index node : nodes_in_box(g, r.box))
                prob.bc.pins.push_back({node, r.component, 0.0});

        prob.source = Field<Real>(g, dim, Real(0));
        for (const LoadSpec& l : cfg.loads) {
            const std::vector<Index> nodes = nodes_in_box(g, l.box);
            if (nodes.empty()) throw ConfigError("config field 'loads': box selects no nodes");
            double norm = 0.0;
            for (double d : l.direction) norm += d * d;
            norm = std::sqrt(norm);
            double lumped = 0.0;
            for (Index node : nodes) {
                const Index k = node / (g.n[0] * g.n[1]);
                const Index j = (node - k * g.n[0] * g.n[1]) / g.n[0];
                const Index i = node - (k * g.n[1] + j) * g.n[0];
                lumped += g.cell_volume(i, j, k);
            }
            // residual convention: r = div(sigma) - f, so a force along +dir
            // enters as f = -dir * magnitude / lumped volume
            for (Index node : nodes)
                for (int c = 0; c < dim; ++c)
                    prob.source.at(c, node) += static_cast<Real>(
                        -l.direction[c] / norm * l.magnitude / lumped);
        }
    }

    prob.targets.fractions = cfg.target_fractions;
    if (cfg.has_region) {
        prob.targets.region_nodes = nodes_in_box(g, cfg.region_box);
        if (prob.targets.region_nodes.empty())
            throw ConfigError("config field 'region_box': selects no nodes");
        prob.targets.region_fractions = cfg.region_fractions;
    }

    prob.weights = effective_weights(cfg, g);

    prob.initial_phases = PhaseSet<Real>(g, static_cast<int>(cfg.properties.size()),
                                         static_cast<Real>(cfg.initial_phase));
    prob.initial_state = Field<Real>(g, cfg.physics == PhysicsKind::Heat ? 1 : dim,
                                     static_cast<Real>(cfg.initial_state));
    // states start from the constrained values
    apply_constraints(prob.initial_state, make_constraints(g, prob.bc,
                                                           prob.initial_state.components));
    return prob;
}

/// CLI-level options; fields left at their sentinel keep the config value.
struct RunOptions {
    std::string preset;
    std::string config_path;
    long nx = -1, ny = -1, nz = -1;
    long loops = -1;
    std::string out_dir;
    std::string precision;
    int threads = -1;
    int report_every = -1;
    int compliance_sign = 0;
    bool quiet = false;
};

/// Merges preset/config file and flag overrides, resolves the output
/// directory (flag, then config, then PETTO_OUT), validates.
ProblemConfig resolve_config(const RunOptions& opt);

/// Full run: build, optimize, write outputs. Returns the process exit code
/// (0 success, 2 config error, 3 numerical abort, 4 I/O error).
int run_cli(const RunOptions& opt);

template <class Real>
OptimizationResult<Real> run_configured(const ProblemConfig& cfg,
                                        const RecordCallback& cb = {}) {
    const Problem<Real> prob = build_problem<Real>(cfg);
    return run(prob, build_schedule(cfg, *prob.grid), cb);
}

/// Writes history CSV, final phase/property/state fields and the run summary
/// into cfg.out_dir. 2D fields go to CSV (+PGM), 3D fields to legacy VTK.
template <class Real>
void write_outputs(const ProblemConfig& cfg, const Problem<Real>& prob,
                   const OptimizationResult<Real>& result);

} // namespace petto
