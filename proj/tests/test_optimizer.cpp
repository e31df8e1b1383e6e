#include <doctest.h>

#include "petto/engine.hpp"
#include "petto/optimizer.hpp"
#include "petto/parallel.hpp"

using namespace petto;

namespace {

// small heat problem used across the loop tests
ProblemConfig tiny_heat(long n = 16, long loops = 5) {
    ProblemConfig cfg = make_preset("heat2d");
    cfg.nx = n;
    cfg.ny = n;
    cfg.n_apt = 10;
    cfg.n_pt = 10;
    cfg.max_loops = loops;
    cfg.report_every = 1;
    cfg.convergence_tol = 1e-12;
    cfg.convergence_window = 1000; // effectively disabled
    return cfg;
}

} // namespace

TEST_SUITE_BEGIN("optimizer");

TEST_CASE("loop accounting matches the schedule arithmetic exactly") {
    par::set_threads(1);
    const ProblemConfig cfg = tiny_heat(16, 3);
    const Problem<double> prob = build_problem<double>(cfg);
    const LoopSchedule sched = build_schedule(cfg, *prob.grid);
    const OptimizationResult<double> result = run(prob, sched);
    CHECK(result.loops == 3);
    CHECK(result.apt_steps == 3 * 10);
    CHECK(result.pt_steps == 3 * 10);
    CHECK(result.design_updates == 3);
    CHECK(result.ch_steps == 3);
    CHECK(result.termination == Termination::MaxLoops);
}

TEST_CASE("single-threaded runs are bit-for-bit reproducible") {
    par::set_threads(1);
    const ProblemConfig cfg = tiny_heat(16, 4);
    const Problem<double> prob1 = build_problem<double>(cfg);
    const OptimizationResult<double> a = run(prob1, build_schedule(cfg, *prob1.grid));
    const Problem<double> prob2 = build_problem<double>(cfg);
    const OptimizationResult<double> b = run(prob2, build_schedule(cfg, *prob2.grid));

    REQUIRE(a.history.size() == b.history.size());
    CHECK(a.state.data == b.state.data);
    for (int i = 0; i < a.phases.count(); ++i)
        CHECK(a.phases.phases[i].data == b.phases.phases[i].data);
    for (std::size_t i = 0; i < a.history.size(); ++i) {
        CHECK(a.history[i].compliance == b.history[i].compliance);
        CHECK(a.history[i].r_pde == b.history[i].r_pde);
        CHECK(a.history[i].volume_fractions == b.history[i].volume_fractions);
    }
}

TEST_CASE("with the design frozen the loop reduces to a plain hybrid solve") {
    par::set_threads(1);
    const Grid* gp = nullptr;
    ProblemConfig cfg = tiny_heat(20, 1);
    cfg.n_apt = 150;
    cfg.n_pt = 150;
    Problem<double> prob = build_problem<double>(cfg);
    gp = prob.grid.get();
    // freeze the design: zero out every update channel except a vanishing one
    prob.weights.alpha_compliance = 0.0;
    prob.weights.alpha_volume = 1e-300;
    prob.weights.alpha_unity = 0.0;
    LoopSchedule sched = build_schedule(cfg, *prob.grid);
    sched.ch.dt = 1e-300; // the phase step underflows to a no-op
    const OptimizationResult<double> looped = run(prob, sched);

    // direct hybrid solve over the same state schedule
    Field<double> kappa = interpolate(prob.initial_phases, prob.material);
    const HeatOperator<double> op(*gp, kappa, prob.source, prob.bc);
    StateHistory<double> hist(prob.initial_state);
    hybrid_solve(hist, op, sched.pt);

    CHECK(looped.state.data == hist.current.data);
    for (int i = 0; i < looped.phases.count(); ++i)
        CHECK(looped.phases.phases[i].data == prob.initial_phases.phases[i].data);
}

TEST_CASE("history records stay sane and ordered") {
    par::set_threads(1);
    const ProblemConfig cfg = tiny_heat(16, 6);
    const Problem<double> prob = build_problem<double>(cfg);
    const OptimizationResult<double> result = run(prob, build_schedule(cfg, *prob.grid));
    long prev_loop = 0;
    for (const HistoryRecord& r : result.history) {
        CHECK(r.loop > prev_loop);
        prev_loop = r.loop;
        CHECK(std::isfinite(r.compliance));
        CHECK(r.r_pde >= 0.0);
        for (double v : r.volume_fractions) {
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
        }
    }
}

TEST_CASE("phase separation metric on pure and mixed designs") {
    const Grid g = Grid::make2d(8, 8, 1.0, 1.0);
    PhaseSet<double> pure(g, 2, 0.0);
    pure.phases[0].fill(1.0);
    CHECK(phase_separation_metric(pure) == 1.0);

    PhaseSet<double> mixed(g, 2, 0.5);
    CHECK(phase_separation_metric(mixed) == 0.0);

    // half the nodes separated
    PhaseSet<double> half(g, 1, 0.5);
    for (Index n = 0; n < g.num_nodes() / 2; ++n) half.phases[0].at(0, n) = 1.0;
    CHECK(phase_separation_metric(half) == doctest::Approx(0.5));
}

TEST_CASE("a blow-up surfaces as an aborted run, not a crash") {
    par::set_threads(1);
    ProblemConfig cfg = tiny_heat(16, 5);
    cfg.dt_pt = 1e9;
    const Problem<double> prob = build_problem<double>(cfg);
    const OptimizationResult<double> result = run(prob, build_schedule(cfg, *prob.grid));
    CHECK(result.termination == Termination::AbortedNaN);
    CHECK(!result.abort_detail.empty());
    CHECK(result.loops >= 1);
}

TEST_CASE("convergence detection stops a flat run early") {
    par::set_threads(1);
    ProblemConfig cfg = tiny_heat(16, 400);
    cfg.convergence_tol = 0.5; // generous: triggers as soon as the window fills
    cfg.convergence_window = 4;
    const Problem<double> prob = build_problem<double>(cfg);
    const OptimizationResult<double> result = run(prob, build_schedule(cfg, *prob.grid));
    CHECK(result.termination == Termination::Converged);
    CHECK(result.loops < 400);
}

TEST_CASE("the f32 path runs end to end and stays finite") {
    par::set_threads(1);
    const ProblemConfig cfg = tiny_heat(16, 3);
    const Problem<float> prob = build_problem<float>(cfg);
    const OptimizationResult<float> result = run(prob, build_schedule(cfg, *prob.grid));
    CHECK(result.termination == Termination::MaxLoops);
    CHECK(result.state.all_finite());
    for (const Field<float>& f : result.phases.phases) CHECK(f.all_finite());
}

TEST_CASE("a tiny elasticity problem runs through the loop") {
    par::set_threads(1);
    ProblemConfig cfg = make_preset("mbb2d");
    cfg.nx = 17;
    cfg.ny = 5;
    cfg.n_apt = 5;
    cfg.n_pt = 5;
    cfg.max_loops = 3;
    cfg.report_every = 1;
    const Problem<double> prob = build_problem<double>(cfg);
    const OptimizationResult<double> result = run(prob, build_schedule(cfg, *prob.grid));
    CHECK(result.termination == Termination::MaxLoops);
    CHECK(result.state.all_finite());
    CHECK(result.history.back().compliance > 0.0);
}

TEST_CASE("a tiny 3d problem with a region constraint runs through the loop") {
    par::set_threads(1);
    ProblemConfig cfg = make_preset("drone3d");
    cfg.nx = 9;
    cfg.ny = 5;
    cfg.nz = 9;
    cfg.n_apt = 5;
    cfg.n_pt = 5;
    cfg.max_loops = 2;
    cfg.report_every = 1;
    const Problem<double> prob = build_problem<double>(cfg);
    const OptimizationResult<double> result = run(prob, build_schedule(cfg, *prob.grid));
    CHECK(result.termination == Termination::MaxLoops);
    CHECK(result.history.back().region >= 0.0);
}

TEST_SUITE_END();
