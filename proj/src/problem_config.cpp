#include "petto/problem_config.hpp"

#include <algorithm>
#include <cmath>

namespace petto {

namespace {

ProblemConfig common_defaults() {
    ProblemConfig c;
    c.alpha_compliance = 0.1;
    c.normalize_compliance = true;
    c.penalty = 3.0;
    c.void_floor = 1e-6;
    c.ch_gamma = 3e-5;
    c.ch_mobility = 1.0;
    c.dt_ch_multiplier = 500.0;
    c.theta = 1.0;
    c.convergence_tol = 1e-3;
    c.convergence_window = 50;
    c.precision = "f64";
    c.threads = 1;
    return c;
}

// 2D heat sink: uniform source, two cold sides, single conductor plus void.
ProblemConfig heat2d() {
    ProblemConfig c = common_defaults();
    c.preset = "heat2d";
    c.physics = PhysicsKind::Heat;
    c.nx = 128;
    c.ny = 128;
    c.nz = 1;
    c.lengths = {4.0, 4.0, 0.0};
    c.dirichlet_faces = {"x_lo", "y_hi"};
    c.dirichlet_value = 0.0;
    c.source = 0.01;
    c.properties = {1.0, 1e-6}; // conductor, void
    c.target_fractions = {0.3, 0.7};
    c.alpha_volume = 1e5;
    c.alpha_unity = 1e4;
    c.weight_ref_nodes = 512.0 * 512.0;
    c.compliance_sign = -1;
    c.n_apt = 500;
    c.n_pt = 500;
    c.apt_form = "explicit";
    c.max_loops = 1200;
    c.report_every = 5;
    c.initial_phase = 1.0;
    c.initial_state = 0.0;
    return c;
}

// 2D beam on rollers, five graded materials plus void, center point load.
ProblemConfig mbb2d() {
    ProblemConfig c = common_defaults();
    c.preset = "mbb2d";
    c.physics = PhysicsKind::Elasticity;
    c.nx = 129;
    c.ny = 33;
    c.nz = 1;
    c.lengths = {4.0, 1.0, 0.0};
    c.properties = {1.0, 0.775, 0.55, 0.325, 0.1, 1e-6};
    c.poisson_ratio = 0.3;
    c.target_fractions = {0.08, 0.08, 0.08, 0.08, 0.08, 0.6};
    c.rollers = {
        {BoxSpec{{0.0, 0.0, 0.0}, {0.0, 0.0, 0.0}}, 1},
        {BoxSpec{{4.0, 0.0, 0.0}, {4.0, 0.0, 0.0}}, 1},
    };
    c.loads = {{BoxSpec{{2.0, 1.0, 0.0}, {2.0, 1.0, 0.0}}, {0.0, -1.0, 0.0}, 1.0}};
    c.alpha_volume = 1e4;
    c.alpha_unity = 1e3;
    c.weight_ref_nodes = 513.0 * 128.0;
    c.compliance_sign = -1;
    c.n_apt = 20;
    c.n_pt = 20;
    c.theta = 1.0;
    c.apt_form = "semi_implicit";
    c.max_loops = 4000;
    c.report_every = 20;
    c.initial_phase = 0.5;
    c.initial_state = 0.0;
    return c;
}

// 3D cantilever, three graded materials plus void, line load on the free end.
ProblemConfig cantilever3d() {
    ProblemConfig c = common_defaults();
    c.preset = "cantilever3d";
    c.physics = PhysicsKind::Elasticity;
    c.nx = 64;
    c.ny = 9;
    c.nz = 22;
    c.lengths = {2.0, 2.0 / 15.0, 2.0 / 3.0};
    c.properties = {1.0, 0.6, 0.2, 1e-6};
    c.poisson_ratio = 0.3;
    c.target_fractions = {0.1, 0.1, 0.1, 0.7};
    c.fixed_faces = {"x_hi"};
    // force along +z on the mid-height line of the free face
    c.loads = {{BoxSpec{{0.0, 0.0, 1.0 / 3.0}, {0.0, 2.0 / 15.0, 1.0 / 3.0}},
                {0.0, 0.0, 1.0},
                1.0}};
    c.alpha_volume = 1e4;
    c.alpha_unity = 1e3;
    c.weight_ref_nodes = 256.0 * 17.0 * 85.0;
    c.compliance_sign = -1;
    c.n_apt = 100;
    c.n_pt = 100;
    c.theta = 1.0;
    c.apt_form = "semi_implicit";
    c.max_loops = 500;
    c.report_every = 10;
    c.initial_phase = 0.5;
    c.initial_state = 0.0;
    return c;
}

// 3D frame with a protected interior pocket kept void for payload; the four
// top corners rest on rollers, a point load hangs from the bottom center.
// The pocket geometry is a reconstruction: a centered box holding 20% of the
// domain volume.
ProblemConfig drone3d() {
    ProblemConfig c = common_defaults();
    c.preset = "drone3d";
    c.physics = PhysicsKind::Elasticity;
    c.nx = 48;
    c.ny = 24;
    c.nz = 48;
    c.lengths = {1.0, 0.5, 1.0};
    c.properties = {1.0, 1e-6};
    c.poisson_ratio = 0.3;
    c.target_fractions = {0.2, 0.8};
    const double s = std::cbrt(0.2); // centered box, 20% of the volume
    for (int axis = 0; axis < 3; ++axis) {
        c.region_box.lo[axis] = 0.5 * c.lengths[axis] * (1.0 - s);
        c.region_box.hi[axis] = 0.5 * c.lengths[axis] * (1.0 + s);
    }
    c.has_region = true;
    c.region_fractions = {0.0, 1.0}; // solid excluded, void required
    c.rollers = {
        {BoxSpec{{0.0, 0.5, 0.0}, {0.0, 0.5, 0.0}}, 1},
        {BoxSpec{{1.0, 0.5, 0.0}, {1.0, 0.5, 0.0}}, 1},
        {BoxSpec{{0.0, 0.5, 1.0}, {0.0, 0.5, 1.0}}, 1},
        {BoxSpec{{1.0, 0.5, 1.0}, {1.0, 0.5, 1.0}}, 1},
    };
    c.loads = {{BoxSpec{{0.5, 0.0, 0.5}, {0.5, 0.0, 0.5}}, {0.0, -1.0, 0.0}, 1.0}};
    c.alpha_volume = 1e4;
    c.alpha_unity = 1e3;
    c.alpha_region = 1e4;
    c.weight_ref_nodes = 128.0 * 64.0 * 128.0;
    c.compliance_sign = -1;
    c.n_apt = 50;
    c.n_pt = 50;
    c.theta = 1.0;
    c.apt_form = "semi_implicit";
    c.max_loops = 800;
    c.report_every = 10;
    c.initial_phase = 0.5;
    c.initial_state = 0.0;
    return c;
}

} // namespace

std::vector<std::string> preset_names() { return {"heat2d", "mbb2d", "cantilever3d", "drone3d"}; }

ProblemConfig make_preset(const std::string& name) {
    if (name == "heat2d") return heat2d();
    if (name == "mbb2d") return mbb2d();
    if (name == "cantilever3d") return cantilever3d();
    if (name == "drone3d") return drone3d();
    std::string msg = "unknown preset '" + name + "'; valid presets:";
    for (const std::string& p : preset_names()) msg += " " + p;
    throw ConfigError(msg);
}

int face_index_from_name(const std::string& name) {
    static const char* names[6] = {"x_lo", "x_hi", "y_lo", "y_hi", "z_lo", "z_hi"};
    for (int i = 0; i < 6; ++i)
        if (name == names[i]) return i;
    throw ConfigError("unknown face name '" + name + "' (use x_lo..z_hi)");
}

std::string face_name(int face) {
    static const char* names[6] = {"x_lo", "x_hi", "y_lo", "y_hi", "z_lo", "z_hi"};
    return names[face];
}

int component_from_name(const std::string& name) {
    if (name == "x" || name == "0") return 0;
    if (name == "y" || name == "1") return 1;
    if (name == "z" || name == "2") return 2;
    throw ConfigError("unknown component '" + name + "' (use x, y or z)");
}

std::string component_name(int c) {
    static const char* names[3] = {"x", "y", "z"};
    return names[c];
}

namespace {

void fail(const std::string& field, const std::string& constraint) {
    throw ConfigError("config field '" + field + "': " + constraint);
}

void check_box(const std::string& field, const BoxSpec& b, const std::array<double, 3>& len,
               int dim) {
    for (int a = 0; a < dim; ++a) {
        if (b.lo[a] > b.hi[a]) fail(field, "box lo must not exceed hi");
        if (b.lo[a] < -1e-9 || b.hi[a] > len[a] + 1e-9)
            fail(field, "box must lie inside the domain");
    }
}

} // namespace

void validate_config(const ProblemConfig& c) {
    const int dim = c.nz > 1 ? 3 : 2;
    if (c.nx < 3) fail("nx", "needs at least 3 nodes per axis");
    if (c.ny < 3) fail("ny", "needs at least 3 nodes per axis");
    if (dim == 3 && c.nz < 3) fail("nz", "needs at least 3 nodes per axis (or 1 for 2D)");
    for (int a = 0; a < dim; ++a)
        if (!(c.lengths[a] > 0.0)) fail("lengths", "domain extents must be positive");

    if (c.properties.empty()) fail("properties", "at least one phase property required");
    for (double p : c.properties)
        if (!(p > 0.0)) fail("properties", "must be positive");
    if (c.penalty < 1.0) fail("penalty", "must be >= 1");
    if (!(c.void_floor > 0.0)) fail("void_floor", "must be positive");
    if (c.physics == PhysicsKind::Elasticity &&
        (c.poisson_ratio <= -1.0 || c.poisson_ratio >= 0.5))
        fail("poisson_ratio", "must lie in (-1, 0.5)");

    if (c.target_fractions.size() != c.properties.size())
        fail("target_fractions", "one target per phase required");
    double sum = 0.0;
    for (double t : c.target_fractions) {
        if (t < 0.0 || t > 1.0) fail("target_fractions", "each target must lie in [0,1]");
        sum += t;
    }
    if (sum > 1.0 + 1e-6) fail("target_fractions", "targets must sum to at most 1");

    if (c.has_region) {
        if (c.region_fractions.size() != c.properties.size())
            fail("region_fractions", "one region target per phase required");
        for (double t : c.region_fractions)
            if (t < 0.0 || t > 1.0) fail("region_fractions", "targets must lie in [0,1]");
        check_box("region_box", c.region_box, c.lengths, dim);
    }

    if (c.alpha_compliance < 0 || c.alpha_volume < 0 || c.alpha_unity < 0 || c.alpha_region < 0)
        fail("alpha_*", "weights must be non-negative");
    if (c.alpha_compliance + c.alpha_volume + c.alpha_unity + c.alpha_region <= 0)
        fail("alpha_*", "at least one weight must be positive");
    if (c.compliance_sign != 1 && c.compliance_sign != -1)
        fail("compliance_sign", "must be +1 or -1");
    if (c.weight_ref_nodes < 0) fail("weight_ref_nodes", "must be >= 0");

    if (c.n_apt < 0 || c.n_pt < 0 || c.n_apt + c.n_pt < 1)
        fail("n_apt/n_pt", "need at least one state step per loop");
    if (!(c.theta > 0.0)) fail("theta", "must be positive");
    if (c.apt_form != "explicit" && c.apt_form != "semi_implicit")
        fail("apt_form", "must be 'explicit' or 'semi_implicit'");
    if (!(c.ch_mobility > 0.0)) fail("ch_mobility", "must be positive");
    if (!(c.ch_gamma > 0.0)) fail("ch_gamma", "must be positive");
    if (c.dt_pt < 0 || c.dt_apt < 0 || c.dt_ch < 0) fail("dt_*", "must be >= 0 (0 = auto)");
    if (c.dt_ch == 0.0 && !(c.dt_ch_multiplier > 0.0))
        fail("dt_ch_multiplier", "must be positive when dt_ch is auto");
    if (c.max_loops < 1) fail("max_loops", "must be >= 1");
    if (!(c.convergence_tol > 0.0)) fail("convergence_tol", "must be positive");
    if (c.convergence_window < 2) fail("convergence_window", "must be >= 2");
    if (c.report_every < 1) fail("report_every", "must be >= 1");

    if (c.physics == PhysicsKind::Heat) {
        for (const std::string& f : c.dirichlet_faces)
            if (face_index_from_name(f) >= 2 * dim) fail("dirichlet_faces", "face not in domain");
    } else {
        for (const std::string& f : c.fixed_faces)
            if (face_index_from_name(f) >= 2 * dim) fail("fixed_faces", "face not in domain");
        for (const RollerSpec& r : c.rollers) {
            check_box("rollers", r.box, c.lengths, dim);
            if (r.component < 0 || r.component >= dim) fail("rollers", "invalid component");
        }
        for (const LoadSpec& l : c.loads) {
            check_box("loads", l.box, c.lengths, dim);
            double n2 = 0.0;
            for (double d : l.direction) n2 += d * d;
            if (!(n2 > 0.0)) fail("loads", "direction must be nonzero");
        }
    }

    if (c.precision != "f32" && c.precision != "f64")
        fail("precision", "must be 'f32' or 'f64'");
    if (c.threads < 0) fail("threads", "must be >= 0");
    if (c.initial_phase < 0.0 || c.initial_phase > 1.0)
        fail("initial_phase", "must lie in [0,1]");
}

} // namespace petto
