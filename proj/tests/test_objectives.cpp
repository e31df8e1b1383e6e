#include <doctest.h>

#include <cmath>
#include <random>

#include "fd_oracle.hpp"
#include "petto/objectives.hpp"

using namespace petto;

namespace {

MaterialModel thermal_two_phase() {
    MaterialModel m;
    m.kind = MaterialKind::Thermal;
    m.properties = {1.0, 1e-6};
    m.penalty = 3.0;
    return m;
}

PhaseSet<double> random_phases(const Grid& g, int count, unsigned seed, double lo = 0.2,
                               double hi = 0.8) {
    PhaseSet<double> p(g, count, 0.0);
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> dist(lo, hi);
    for (Field<double>& f : p.phases)
        for (double& v : f.data) v = dist(rng);
    return p;
}

} // namespace

TEST_SUITE_BEGIN("objectives");

TEST_CASE("property interpolation follows the penalized mixing rule") {
    const Grid g = Grid::make2d(4, 4, 1.0, 1.0);
    PhaseSet<double> phases(g, 2, 0.0);
    const MaterialModel mat = thermal_two_phase();

    phases.phases[0].fill(1.0);
    Field<double> k = interpolate(phases, mat);
    for (double v : k.data) CHECK(v == 1.0);

    phases.phases[0].fill(0.5);
    phases.phases[1].fill(0.5);
    k = interpolate(phases, mat);
    for (double v : k.data) CHECK(v == doctest::Approx(0.125000125).epsilon(1e-12));

    phases.phases[0].fill(0.0);
    phases.phases[1].fill(0.0);
    k = interpolate(phases, mat);
    for (double v : k.data) CHECK(v == 1e-6); // floored, never singular
}

TEST_CASE("interpolation is non-increasing in the penalty exponent") {
    const Grid g = Grid::make2d(3, 3, 1.0, 1.0);
    PhaseSet<double> phases(g, 1, 0.6);
    MaterialModel m = thermal_two_phase();
    m.properties = {2.0};
    double prev = 1e300;
    for (double e : {1.0, 2.0, 3.0, 4.0}) {
        m.penalty = e;
        const Field<double> k = interpolate(phases, m);
        CHECK(k.at(0, 4) <= prev);
        prev = k.at(0, 4);
    }
}

TEST_CASE("interpolation rejects a property/phase count mismatch") {
    const Grid g = Grid::make2d(3, 3, 1.0, 1.0);
    PhaseSet<double> phases(g, 2, 0.5);
    MaterialModel m = thermal_two_phase();
    m.properties = {1.0};
    CHECK_THROWS_AS(interpolate(phases, m), std::invalid_argument);
}

TEST_CASE("thermal compliance of a unit gradient on the unit square is one") {
    const Grid g = Grid::make2d(21, 21, 1.0, 1.0);
    Field<double> T(g, 1), kappa(g, 1, 1.0);
    for (Index j = 0; j < g.n[1]; ++j)
        for (Index i = 0; i < g.n[0]; ++i) T.at(0, g.node(i, j)) = g.coord(0, i);
    const double j1 = thermal_compliance(T, kappa);
    CHECK(j1 == doctest::Approx(1.0).epsilon(1e-12));

    Field<double> Tc(g, 1, 3.0);
    CHECK(thermal_compliance(Tc, kappa) == 0.0);

    for (double& v : kappa.data) v *= 2.0;
    CHECK(thermal_compliance(T, kappa) == doctest::Approx(2.0 * j1).epsilon(1e-13));
}

TEST_CASE("mechanical compliance of uniaxial strain matches the plane-strain modulus") {
    const Grid g = Grid::make2d(17, 17, 1.0, 1.0);
    Field<double> E(g, 1, 1.0);
    const ElasticMaterialField<double> mat = make_lame(E, 0.3);
    const double eps = 0.01;
    Field<double> u(g, 2, 0.0);
    for (Index j = 0; j < g.n[1]; ++j)
        for (Index i = 0; i < g.n[0]; ++i) u.at(0, g.node(i, j)) = eps * g.coord(0, i);
    const double jm = mechanical_compliance(u, mat);
    CHECK(jm == doctest::Approx(1.3461538461538463 * eps * eps).epsilon(1e-10));

    Field<double> rigid(g, 2, 0.7); // translation: zero strain
    CHECK(std::abs(mechanical_compliance(rigid, mat)) < 1e-25);

    Field<double> zero(g, 2, 0.0);
    CHECK(mechanical_compliance(zero, mat) == 0.0);
}

TEST_CASE("volume objective measures squared deviation of the fractions") {
    const Grid g = Grid::make2d(9, 9, 1.0, 1.0);
    VolumeTargets t;
    t.fractions = {0.3};
    PhaseSet<double> phases(g, 1, 0.3);
    CHECK(volume_objective(phases, t) == doctest::Approx(0.0).epsilon(1e-28));
    phases.phases[0].fill(0.4);
    CHECK(volume_objective(phases, t) == doctest::Approx(0.01).epsilon(1e-12));

    VolumeTargets t2;
    t2.fractions = {0.3, 0.5};
    PhaseSet<double> two(g, 2, 0.0);
    two.phases[0].fill(0.4);
    two.phases[1].fill(0.4);
    CHECK(volume_objective(two, t2) == doctest::Approx(0.02).epsilon(1e-12));
}

TEST_CASE("unity objective on the unit square") {
    const Grid g = Grid::make2d(9, 9, 1.0, 1.0);
    PhaseSet<double> phases(g, 2, 0.6);
    CHECK(unity_objective(phases) == doctest::Approx(0.04).epsilon(1e-12));
    PhaseSet<double> swapped;
    swapped.phases = {phases.phases[1], phases.phases[0]};
    CHECK(unity_objective(swapped) == unity_objective(phases));

    phases.phases[0].fill(0.25);
    phases.phases[1].fill(0.75);
    CHECK(unity_objective(phases) == doctest::Approx(0.0).epsilon(1e-24));
}

TEST_CASE("region objective over a protected pocket") {
    const Grid g = Grid::make2d(9, 9, 1.0, 1.0);
    VolumeTargets t;
    t.fractions = {0.3, 0.7};
    for (Index j = 3; j <= 5; ++j)
        for (Index i = 3; i <= 5; ++i) t.region_nodes.push_back(g.node(i, j));
    t.region_fractions = {0.0, 1.0};

    PhaseSet<double> phases(g, 2, 0.0);
    phases.phases[1].fill(1.0); // pocket already pure void
    CHECK(region_objective(phases, t) == doctest::Approx(0.0).epsilon(1e-24));

    phases.phases[0].fill(1.0);
    phases.phases[1].fill(0.0); // pocket pure solid
    CHECK(region_objective(phases, t) == doctest::Approx(2.0).epsilon(1e-12));

    VolumeTargets empty = t;
    empty.region_nodes.clear();
    CHECK_THROWS_AS(region_objective(phases, empty), std::invalid_argument);
}

TEST_CASE("thermal sensitivity matches the closed-form value on a unit cell") {
    // 3x3 grid with spacing 1 so the center node carries unit volume
    const Grid g = Grid::make2d(3, 3, 2.0, 2.0);
    PhaseSet<double> phases(g, 2, 0.0);
    phases.phases[0].fill(0.5);
    phases.phases[1].fill(0.5);
    const MaterialModel mat = thermal_two_phase();
    Field<double> T(g, 1);
    for (Index j = 0; j < g.n[1]; ++j)
        for (Index i = 0; i < g.n[0]; ++i) T.at(0, g.node(i, j)) = g.coord(0, i); // |grad| = 1
    VolumeTargets t;
    t.fractions = {0.5, 0.5};
    const SensitivityFields<double> s = sensitivities(phases, T, mat, t);
    CHECK(s.compliance[0].at(0, g.node(1, 1)) == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("sensitivities vanish at the analytic minima") {
    const Grid g = Grid::make2d(8, 8, 1.0, 1.0);
    PhaseSet<double> phases(g, 2, 0.0);
    phases.phases[0].fill(0.3);
    phases.phases[1].fill(0.7);
    VolumeTargets t;
    t.fractions = {0.3, 0.7};
    const MaterialModel mat = thermal_two_phase();
    Field<double> T(g, 1, 2.0); // constant state, zero gradient
    const SensitivityFields<double> s = sensitivities(phases, T, mat, t);
    for (int i = 0; i < 2; ++i)
        for (Index n = 0; n < g.num_nodes(); ++n) {
            CHECK(std::abs(s.compliance[i].at(0, n)) < 1e-12);
            CHECK(std::abs(s.volume[i].at(0, n)) < 1e-12);
            CHECK(std::abs(s.unity[i].at(0, n)) < 1e-12);
        }
}

TEST_CASE("analytic sensitivities agree with the finite-difference oracle") {
    const Grid g = Grid::make2d(8, 8, 1.0, 1.0);
    // comparable property magnitudes keep the difference quotient above the
    // cancellation noise of the objective evaluation
    MaterialModel mat = thermal_two_phase();
    mat.properties = {1.0, 0.37};
    VolumeTargets t;
    t.fractions = {0.3, 0.6};
    for (Index j = 2; j <= 4; ++j)
        for (Index i = 2; i <= 4; ++i) t.region_nodes.push_back(g.node(i, j));
    t.region_fractions = {0.1, 0.9};

    const PhaseSet<double> phases = random_phases(g, 2, 42);
    Field<double> T(g, 1);
    std::mt19937 rng(43);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    for (double& v : T.data) v = dist(rng);

    const SensitivityFields<double> s = sensitivities(phases, T, mat, t);

    const auto fd_h = oracle::fd_gradient(phases, [&](const PhaseSet<double>& p) {
        return thermal_compliance(T, interpolate(p, mat));
    });
    CHECK(oracle::worst_relative_error(s.compliance, fd_h) < 1e-5);

    const auto fd_v = oracle::fd_gradient(phases, [&](const PhaseSet<double>& p) {
        return volume_objective(p, t);
    });
    CHECK(oracle::worst_relative_error(s.volume, fd_v) < 1e-5);

    const auto fd_1 = oracle::fd_gradient(phases, [&](const PhaseSet<double>& p) {
        return unity_objective(p);
    });
    CHECK(oracle::worst_relative_error(s.unity, fd_1) < 1e-5);

    const auto fd_b = oracle::fd_gradient(phases, [&](const PhaseSet<double>& p) {
        return region_objective(p, t);
    });
    CHECK(oracle::worst_relative_error(s.region, fd_b) < 1e-5);
}

TEST_CASE("elastic sensitivities agree with the oracle too") {
    const Grid g = Grid::make2d(8, 8, 1.0, 1.0);
    MaterialModel mat;
    mat.kind = MaterialKind::Elastic;
    mat.properties = {1.0, 0.5, 1e-3};
    mat.poisson_ratio = 0.3;
    VolumeTargets t;
    t.fractions = {0.2, 0.2, 0.6};

    const PhaseSet<double> phases = random_phases(g, 3, 7);
    Field<double> u(g, 2);
    std::mt19937 rng(8);
    std::uniform_real_distribution<double> dist(-0.1, 0.1);
    for (double& v : u.data) v = dist(rng);

    const SensitivityFields<double> s = sensitivities(phases, u, mat, t);
    const auto fd_m = oracle::fd_gradient(phases, [&](const PhaseSet<double>& p) {
        return mechanical_compliance(u, make_lame(interpolate(p, mat), mat.poisson_ratio));
    });
    CHECK(oracle::worst_relative_error(s.compliance, fd_m) < 1e-5);
}

TEST_CASE("objective report bundles every term") {
    const Grid g = Grid::make2d(8, 8, 1.0, 1.0);
    PhaseSet<double> phases(g, 2, 0.0);
    phases.phases[0].fill(0.4);
    phases.phases[1].fill(0.6);
    const MaterialModel mat = thermal_two_phase();
    VolumeTargets t;
    t.fractions = {0.3, 0.7};
    Field<double> T(g, 1);
    for (Index j = 0; j < g.n[1]; ++j)
        for (Index i = 0; i < g.n[0]; ++i) T.at(0, g.node(i, j)) = g.coord(0, i);
    const ObjectiveReport rep = evaluate_objectives(phases, T, mat, t);
    CHECK(rep.compliance ==
          doctest::Approx(thermal_compliance(T, interpolate(phases, mat))).epsilon(1e-14));
    CHECK(rep.volume == doctest::Approx(0.02).epsilon(1e-12));
    CHECK(rep.unity == doctest::Approx(0.0).epsilon(1e-20));
    CHECK(rep.region == 0.0);
    CHECK(rep.volume_fractions.size() == 2);
}

TEST_CASE("design update honors normalization, signs and clamping") {
    const Grid g = Grid::make2d(6, 6, 1.0, 1.0);
    PhaseSet<double> phases(g, 1, 0.5);
    SensitivityFields<double> s;
    s.compliance.emplace_back(g, 1, 0.0);
    s.volume.emplace_back(g, 1, 0.0);
    s.unity.emplace_back(g, 1, 0.0);

    ObjectiveWeights w;
    w.alpha_compliance = 0.1;
    w.alpha_volume = 1.0;
    w.alpha_unity = 1.0;
    w.normalize_compliance = true;
    w.compliance_sign = 1;

    SUBCASE("all-zero sensitivities leave the design untouched") {
        const PhaseSet<double> out = design_update(phases, s, w);
        CHECK(out.phases[0].data == phases.phases[0].data);
    }
    SUBCASE("the normalized compliance term peaks at exactly alpha") {
        std::mt19937 rng(9);
        std::uniform_real_distribution<double> dist(-2.0, 2.0);
        for (double& v : s.compliance[0].data) v = dist(rng);
        // at the argmax node the term is alpha * g/gmax = alpha * (+-1.0)
        double gmax = 0.0;
        Index argmax = 0;
        for (Index n = 0; n < g.num_nodes(); ++n)
            if (std::abs(s.compliance[0].at(0, n)) > gmax) {
                gmax = std::abs(s.compliance[0].at(0, n));
                argmax = n;
            }
        const PhaseSet<double> out = design_update(phases, s, w);
        double peak = 0.0;
        for (Index n = 0; n < g.num_nodes(); ++n)
            peak = std::max(peak, std::abs(out.phases[0].at(0, n) - 0.5));
        CHECK(peak == doctest::Approx(0.1).epsilon(1e-14));
        // the update applied at the argmax node is exactly -+alpha
        const double applied = out.phases[0].at(0, argmax) - 0.5;
        CHECK(std::abs(applied) == doctest::Approx(0.1).epsilon(1e-14));
    }
    SUBCASE("a clamped phase stays put under positive push") {
        phases.phases[0].fill(0.0);
        s.volume[0].fill(1.0); // positive gradient pushes below zero
        const PhaseSet<double> out = design_update(phases, s, w);
        for (Index n = 0; n < g.num_nodes(); ++n) CHECK(out.phases[0].at(0, n) == 0.0);
    }
}

TEST_SUITE_END();
