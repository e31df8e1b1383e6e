// Kernel benchmark: times the production OpenMP kernels against the serial
// reference implementations and reports the threading speedup, with a
// correctness cross-check on random inputs.
#include <chrono>
#include <cstdio>
#include <random>
#include <vector>

#include "petto/grid.hpp"
#include "petto/parallel.hpp"
#include "petto/phase_field.hpp"
#include "petto/state_solver.hpp"
#include "petto/stencil.hpp"
#include "reference_kernels.hpp"

using namespace petto;

namespace {

double now_ms() {
    return std::chrono::duration<double, std::milli>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

template <class F>
double time_ms(F&& fn, int reps) {
    fn(); // warmup
    const double t0 = now_ms();
    for (int r = 0; r < reps; ++r) fn();
    return (now_ms() - t0) / reps;
}

Field<double> random_field(const Grid& g, unsigned seed, double lo, double hi) {
    Field<double> f(g, 1);
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> dist(lo, hi);
    for (double& v : f.data) v = dist(rng);
    return f;
}

double max_rel_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double scale = std::max({std::abs(a[i]), std::abs(b[i]), 1e-12});
        worst = std::max(worst, std::abs(a[i] - b[i]) / scale);
    }
    return worst;
}

struct Row {
    const char* name;
    double ref_ms;
    double serial_ms;
    double parallel_ms;
    double rel_err;
};

void print_rows(const std::vector<Row>& rows, int nthreads) {
    std::printf("%-24s %12s %12s %12s %9s %12s\n", "kernel", "reference ms", "serial ms",
                "parallel ms", "speedup", "max rel err");
    for (const Row& r : rows)
        std::printf("%-24s %12.3f %12.3f %12.3f %8.2fx %12.2e\n", r.name, r.ref_ms,
                    r.serial_ms, r.parallel_ms, r.serial_ms / r.parallel_ms, r.rel_err);
    std::printf("(parallel = %d threads)\n\n", nthreads);
}

void bench_grid(const Grid& g, int reps, int nthreads) {
    std::printf("grid %lld x %lld x %lld (%lld nodes)\n",
                static_cast<long long>(g.n[0]), static_cast<long long>(g.n[1]),
                static_cast<long long>(g.n[2]), static_cast<long long>(g.num_nodes()));

    const Field<double> f = random_field(g, 1, -1.0, 1.0);
    const Field<double> kap = random_field(g, 2, 0.5, 1.5);
    const Field<double> phi = random_field(g, 3, 0.3, 0.7);
    const ref::Field rf(f.data.begin(), f.data.end());
    const ref::Field rkap(kap.data.begin(), kap.data.end());
    const ref::Field rphi(phi.data.begin(), phi.data.end());

    std::vector<Row> rows;
    Field<double> out(g, g.dim);
    Field<double> scalar_out(g, 1);
    Field<double> mu(g, 1), lap(g, 1);

    CahnHilliardParams ch;
    ch.dt = 0.5 * ch_stable_dt(g, 1.0, 3e-5);
    ch.gamma = 3e-5;

    // reference timings (always serial)
    const double ref_grad = time_ms([&] { ref::gradient(g, rf); }, reps);
    const double ref_diff = time_ms([&] { ref::variable_diffusion(g, rf, rkap); }, reps);
    const double ref_lap = time_ms([&] { ref::laplacian_noflux(g, rf); }, reps);
    const double ref_ch = time_ms([&] { ref::ch_step(g, rphi, 1.0, ch.gamma, ch.dt); }, reps);

    for (int pass = 0; pass < 2; ++pass) {
        par::set_threads(pass == 0 ? 1 : nthreads);
        const double t_grad = time_ms([&] { gradient_into(f, out); }, reps);
        const double t_diff = time_ms([&] { variable_diffusion_into(f, kap, scalar_out); }, reps);
        const double t_lap = time_ms([&] { laplacian_noflux_into(f, scalar_out); }, reps);
        Field<double> phi_work = phi;
        const double t_ch = time_ms(
            [&] {
                phi_work = phi;
                ch_step_inplace(phi_work, ch, mu, lap);
            },
            reps);
        if (pass == 0) {
            rows = {{"gradient", ref_grad, t_grad, 0, 0},
                    {"variable_diffusion", ref_diff, t_diff, 0, 0},
                    {"laplacian_noflux", ref_lap, t_lap, 0, 0},
                    {"ch_step", ref_ch, t_ch, 0, 0}};
        } else {
            rows[0].parallel_ms = t_grad;
            rows[1].parallel_ms = t_diff;
            rows[2].parallel_ms = t_lap;
            rows[3].parallel_ms = t_ch;
        }
    }

    // correctness cross-check against the reference
    par::set_threads(nthreads);
    gradient_into(f, out);
    const auto rgrad = ref::gradient(g, rf);
    double err = 0.0;
    for (int a = 0; a < g.dim; ++a) {
        std::vector<double> prod(out.comp(a), out.comp(a) + g.num_nodes());
        err = std::max(err, max_rel_diff(prod, rgrad[a]));
    }
    rows[0].rel_err = err;

    variable_diffusion_into(f, kap, scalar_out);
    rows[1].rel_err = max_rel_diff(
        std::vector<double>(scalar_out.comp(0), scalar_out.comp(0) + g.num_nodes()),
        ref::variable_diffusion(g, rf, rkap));

    laplacian_noflux_into(f, scalar_out);
    rows[2].rel_err = max_rel_diff(
        std::vector<double>(scalar_out.comp(0), scalar_out.comp(0) + g.num_nodes()),
        ref::laplacian_noflux(g, rf));

    Field<double> phi_work = phi;
    ch_step_inplace(phi_work, ch, mu, lap);
    rows[3].rel_err = max_rel_diff(
        std::vector<double>(phi_work.comp(0), phi_work.comp(0) + g.num_nodes()),
        ref::ch_step(g, rphi, 1.0, ch.gamma, ch.dt));

    print_rows(rows, nthreads);
}

} // namespace

int main(int argc, char** argv) {
    int nthreads = 0;
    if (argc > 1) nthreads = std::atoi(argv[1]);
    par::set_threads(nthreads);
    nthreads = par::threads();

    const Grid g2 = Grid::make2d(512, 512, 4.0, 4.0);
    bench_grid(g2, 20, nthreads);

    const Grid g3 = Grid::make3d(64, 64, 64, 1.0, 1.0, 1.0);
    bench_grid(g3, 10, nthreads);

    // elasticity residual, production kernel only (serial vs parallel)
    const Grid gm = Grid::make2d(513, 128, 4.0, 1.0);
    Field<double> E(gm, 1, 1.0);
    ElasticMaterialField<double> mat = make_lame(E, 0.3);
    Field<double> loads(gm, 2, 0.0);
    BoundarySpec bc;
    for (int f = 0; f < 4; ++f) bc.face[f] = {CondKind::TractionFree, 0.0, 0};
    ElasticityOperator<double> op(gm, mat, loads, bc);
    Field<double> u = random_field(gm, 7, -0.1, 0.1);
    Field<double> uy = random_field(gm, 8, -0.1, 0.1);
    Field<double> disp(gm, 2);
    std::copy(u.comp(0), u.comp(0) + gm.num_nodes(), disp.comp(0));
    std::copy(uy.comp(0), uy.comp(0) + gm.num_nodes(), disp.comp(1));
    Field<double> res(gm, 2);

    par::set_threads(1);
    const double el_serial = time_ms([&] { op.residual(disp, res); }, 50);
    par::set_threads(nthreads);
    const double el_par = time_ms([&] { op.residual(disp, res); }, 50);
    std::printf("elasticity_residual (513x128): serial %.3f ms, parallel %.3f ms, %.2fx\n",
                el_serial, el_par, el_serial / el_par);
    return 0;
}
