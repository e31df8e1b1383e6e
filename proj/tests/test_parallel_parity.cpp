#include <doctest.h>

#include <random>

#include "petto/parallel.hpp"
#include "petto/phase_field.hpp"
#include "petto/state_solver.hpp"
#include "petto/stencil.hpp"
#include "reference_kernels.hpp"

using namespace petto;

namespace {

Field<double> random_field(const Grid& g, unsigned seed, double lo, double hi) {
    Field<double> f(g, 1);
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> dist(lo, hi);
    for (double& v : f.data) v = dist(rng);
    return f;
}

double max_rel(const std::vector<double>& a, const std::vector<double>& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double scale = std::max({std::abs(a[i]), std::abs(b[i]), 1e-12});
        worst = std::max(worst, std::abs(a[i] - b[i]) / scale);
    }
    return worst;
}

struct ThreadGuard {
    ~ThreadGuard() { par::set_threads(1); }
};

} // namespace

TEST_SUITE_BEGIN("parity");

TEST_CASE("production kernels agree with the serial reference") {
    ThreadGuard guard;
    for (const Grid& g : {Grid::make2d(37, 23, 1.3, 0.9), Grid::make3d(9, 11, 7, 1.0, 2.0, 0.5)}) {
        const Field<double> f = random_field(g, 1, -2.0, 2.0);
        const Field<double> kap = random_field(g, 2, 0.25, 3.0);
        const ref::Field rf(f.data.begin(), f.data.end());
        const ref::Field rkap(kap.data.begin(), kap.data.end());

        for (int threads : {1, 2}) {
            par::set_threads(threads);
            CAPTURE(threads);

            const Field<double> grad = gradient(f);
            const auto rgrad = ref::gradient(g, rf);
            for (int a = 0; a < g.dim; ++a) {
                std::vector<double> prod(grad.comp(a), grad.comp(a) + g.num_nodes());
                CHECK(max_rel(prod, rgrad[a]) < 1e-13);
            }

            const Field<double> diff = variable_diffusion(f, kap);
            CHECK(max_rel(std::vector<double>(diff.comp(0), diff.comp(0) + g.num_nodes()),
                          ref::variable_diffusion(g, rf, rkap)) < 1e-13);

            const Field<double> lap = laplacian_noflux(f);
            CHECK(max_rel(std::vector<double>(lap.comp(0), lap.comp(0) + g.num_nodes()),
                          ref::laplacian_noflux(g, rf)) < 1e-13);

            Field<double> vec(g, g.dim);
            for (int a = 0; a < g.dim; ++a) {
                const Field<double> part = random_field(g, 10 + static_cast<unsigned>(a), -1, 1);
                std::copy(part.comp(0), part.comp(0) + g.num_nodes(), vec.comp(a));
            }
            const Field<double> div = divergence(vec);
            std::vector<ref::Field> rvec(g.dim);
            for (int a = 0; a < g.dim; ++a)
                rvec[a].assign(vec.comp(a), vec.comp(a) + g.num_nodes());
            CHECK(max_rel(std::vector<double>(div.comp(0), div.comp(0) + g.num_nodes()),
                          ref::divergence(g, rvec)) < 1e-11);
        }
    }
}

TEST_CASE("ch step and chemical potential match the reference") {
    ThreadGuard guard;
    const Grid g = Grid::make2d(33, 29, 1.0, 1.0);
    const Field<double> phi = random_field(g, 5, 0.3, 0.7);
    const ref::Field rphi(phi.data.begin(), phi.data.end());
    CahnHilliardParams p;
    p.dt = 0.5 * ch_stable_dt(g, 1.0, p.gamma);
    for (int threads : {1, 2}) {
        par::set_threads(threads);
        const Field<double> mu = chemical_potential(phi, p.gamma);
        CHECK(max_rel(std::vector<double>(mu.comp(0), mu.comp(0) + g.num_nodes()),
                      ref::chemical_potential(g, rphi, p.gamma)) < 1e-12);
        const Field<double> stepped = ch_step(phi, p);
        CHECK(max_rel(std::vector<double>(stepped.comp(0), stepped.comp(0) + g.num_nodes()),
                      ref::ch_step(g, rphi, p.mobility, p.gamma, p.dt)) < 1e-12);
    }
}

TEST_CASE("node maps are bit-identical across thread counts") {
    ThreadGuard guard;
    const Grid g = Grid::make2d(41, 31, 1.0, 1.0);
    const Field<double> f = random_field(g, 21, -1.0, 1.0);
    const Field<double> kap = random_field(g, 22, 0.5, 2.0);

    par::set_threads(1);
    const Field<double> grad1 = gradient(f);
    const Field<double> diff1 = variable_diffusion(f, kap);
    par::set_threads(2);
    const Field<double> grad2 = gradient(f);
    const Field<double> diff2 = variable_diffusion(f, kap);
    CHECK(grad1.data == grad2.data);
    CHECK(diff1.data == diff2.data);
}

TEST_CASE("reductions are reproducible in serial mode") {
    ThreadGuard guard;
    par::set_threads(1);
    const Grid g = Grid::make2d(29, 29, 1.0, 1.0);
    const Field<double> f = random_field(g, 31, -1.0, 1.0);
    const double n1 = residual_norm(f);
    const double n2 = residual_norm(f);
    CHECK(n1 == n2);
    // parallel reductions agree to round-off with the reference
    par::set_threads(2);
    const double np = residual_norm(f);
    ref::Field rf(f.data.begin(), f.data.end());
    CHECK(np == doctest::Approx(ref::residual_norm(g, {rf})).epsilon(1e-13));
}

TEST_SUITE_END();
