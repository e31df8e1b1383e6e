#pragma once

#include <chrono>
#include <functional>
#include <memory>
#include <string>

#include "petto/grid.hpp"
#include "petto/objectives.hpp"
#include "petto/phase_field.hpp"
#include "petto/state_solver.hpp"

namespace petto {

struct LoopSchedule {
    PTParams pt;
    CahnHilliardParams ch;
    long max_loops = 1;
    double convergence_tol = 1e-3; // relative compliance change over the window
    int convergence_window = 50;   // trailing records, not loops
    int report_every = 1;

    void validate() const {
        pt.validate();
        ch.validate();
        if (max_loops < 1) throw std::invalid_argument("schedule: max_loops must be >= 1");
        if (!(convergence_tol > 0.0))
            throw std::invalid_argument("schedule: convergence tolerance must be positive");
        if (convergence_window < 2)
            throw std::invalid_argument("schedule: convergence window must be >= 2");
        if (report_every < 1)
            throw std::invalid_argument("schedule: report_every must be >= 1");
    }
};

enum class Termination { Converged, MaxLoops, AbortedNaN };

inline const char* to_string(Termination t) {
    switch (t) {
        case Termination::Converged: return "converged";
        case Termination::MaxLoops: return "max_loops";
        case Termination::AbortedNaN: return "aborted_nan";
    }
    return "unknown";
}

/// One row of the run history. Wall-clock time is informational only and
/// never makes it into deterministic output files.
struct HistoryRecord {
    long loop = 0;
    long long apt_steps = 0; // cumulative
    long long pt_steps = 0;  // cumulative
    double compliance = 0.0;
    double volume = 0.0;
    double unity = 0.0;
    double region = 0.0;
    double r_pde = 0.0;
    double separation = 0.0;
    std::vector<double> volume_fractions;
    double wall_seconds = 0.0;
};

/// Fully assembled problem instance: geometry, physics, materials, targets,
/// weights (already effective for the run grid) and initial fields. The grid
/// is heap-allocated so fields can reference it across moves.
template <class Real>
struct Problem {
    std::unique_ptr<Grid> grid;
    MaterialKind kind = MaterialKind::Thermal;
    BoundarySpec bc;
    MaterialModel material;
    VolumeTargets targets;
    ObjectiveWeights weights;
    Field<Real> source; // heat: scalar source; elastic: per-component loads
    PhaseSet<Real> initial_phases;
    Field<Real> initial_state;
};

template <class Real>
struct OptimizationResult {
    PhaseSet<Real> phases;
    Field<Real> state;
    std::vector<HistoryRecord> history;
    long loops = 0;
    long long apt_steps = 0;
    long long pt_steps = 0;
    long long design_updates = 0;
    long long ch_steps = 0;
    double clamp_mass_drift = 0.0; // accumulated |post-clamp - pre-clamp| mass
    Termination termination = Termination::MaxLoops;
    std::string abort_detail;
};

/// Fraction of nodes at which every phase sits within 0.1 of a pure value.
template <class Real>
double phase_separation_metric(const PhaseSet<Real>& phases) {
    const Index nn = phases.grid().num_nodes();
    const int np = phases.count();
    std::vector<const Real*> p(np);
    for (int i = 0; i < np; ++i) p[i] = phases.phases[i].comp(0);
    Index near_wells = 0;
    for (Index node = 0; node < nn; ++node) {
        Real worst = Real(0);
        for (int i = 0; i < np; ++i) {
            const Real v = p[i][node];
            const Real d = v < Real(1) - v ? v : Real(1) - v;
            if (d > worst) worst = d;
        }
        if (worst < Real(0.1)) ++near_wells;
    }
    return static_cast<double>(near_wells) / static_cast<double>(nn);
}

using RecordCallback = std::function<void(const HistoryRecord&)>;

/// The coupled optimization loop: per loop, n_apt accelerated steps and n_pt
/// plain steps advance the state, one sensitivity update and one
/// Cahn-Hilliard step advance the design. State and design are never solved
/// to completion inside a loop; they converge together.
template <class Real>
OptimizationResult<Real> run(const Problem<Real>& prob, const LoopSchedule& sched,
                             const RecordCallback& on_record = {}) {
    sched.validate();
    prob.weights.validate();
    const Grid& g = *prob.grid;

    OptimizationResult<Real> result;
    result.phases = prob.initial_phases;
    StateHistory<Real> hist(prob.initial_state);

    Field<Real> property = interpolate(result.phases, prob.material);
    ElasticMaterialField<Real> lame = make_lame(property, prob.material.poisson_ratio);
    std::unique_ptr<StateOperator<Real>> op;
    if (prob.kind == MaterialKind::Thermal) {
        op = std::make_unique<HeatOperator<Real>>(g, property, prob.source, prob.bc);
    } else {
        op = std::make_unique<ElasticityOperator<Real>>(g, lame, prob.source, prob.bc);
    }

    Field<Real> mu_scratch(g, 1), lap_scratch(g, 1);
    Field<Real> residual_scratch(g, op->components());
    std::vector<ChStepStats> ch_stats;

    const auto t0 = std::chrono::steady_clock::now();
    auto record = [&](long loop) {
        HistoryRecord rec;
        const ObjectiveReport rep =
            evaluate_objectives(result.phases, hist.current, prob.material, prob.targets);
        rec.loop = loop;
        rec.apt_steps = result.apt_steps;
        rec.pt_steps = result.pt_steps;
        rec.compliance = rep.compliance;
        rec.volume = rep.volume;
        rec.unity = rep.unity;
        rec.region = rep.region;
        rec.volume_fractions = rep.volume_fractions;
        // the state operator still sees the property field of the last solve
        interpolate_into(result.phases, prob.material, property);
        if (prob.kind == MaterialKind::Elastic)
            update_lame(property, prob.material.poisson_ratio, lame);
        op->residual(hist.current, residual_scratch);
        rec.r_pde = residual_norm(residual_scratch);
        rec.separation = phase_separation_metric(result.phases);
        rec.wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        result.history.push_back(rec);
        if (on_record) on_record(rec);
    };

    auto converged = [&]() {
        const int w = sched.convergence_window;
        if (static_cast<int>(result.history.size()) < w) return false;
        double lo = result.history.back().compliance, hi = lo;
        for (int i = 0; i < w; ++i) {
            const double v = result.history[result.history.size() - 1 - i].compliance;
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        const double scale = std::max(std::abs(hi), 1e-300);
        return (hi - lo) / scale < sched.convergence_tol;
    };

    result.termination = Termination::MaxLoops;
    for (long loop = 1; loop <= sched.max_loops; ++loop) {
        result.loops = loop;
        try {
            interpolate_into(result.phases, prob.material, property);
            if (prob.kind == MaterialKind::Elastic)
                update_lame(property, prob.material.poisson_ratio, lame);
            hybrid_solve(hist, *op, sched.pt);
            result.apt_steps += sched.pt.n_apt;
            result.pt_steps += sched.pt.n_pt;

            const SensitivityFields<Real> sens =
                sensitivities(result.phases, hist.current, prob.material, prob.targets);
            design_update_inplace(result.phases, sens, prob.weights);
            ++result.design_updates;

            ch_step_multi_inplace(result.phases, sched.ch, mu_scratch, lap_scratch, &ch_stats);
            ++result.ch_steps;
            for (const ChStepStats& st : ch_stats)
                result.clamp_mass_drift += std::abs(st.mass_postclamp - st.mass_preclamp);
            for (const Field<Real>& phi : result.phases.phases)
                if (!phi.all_finite())
                    throw NumericalAbort("phi", loop, "design field turned non-finite");
        } catch (const NumericalAbort& abort) {
            result.termination = Termination::AbortedNaN;
            result.abort_detail = "loop " + std::to_string(loop) + ": " + abort.what();
            break;
        }

        if (loop % sched.report_every == 0 || loop == 1 || loop == sched.max_loops) {
            record(loop);
            if (converged()) {
                result.termination = Termination::Converged;
                break;
            }
        }
    }

    result.state = hist.current;
    return result;
}

} // namespace petto
