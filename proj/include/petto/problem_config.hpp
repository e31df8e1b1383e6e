#pragma once

#include <array>
#include <string>
#include <vector>

#include "petto/errors.hpp"

namespace petto {

enum class PhysicsKind { Heat, Elasticity };

/// Axis-aligned box in domain coordinates. A degenerate box (lo == hi)
/// selects the nearest node(s).
struct BoxSpec {
    std::array<double, 3> lo{0.0, 0.0, 0.0};
    std::array<double, 3> hi{0.0, 0.0, 0.0};
    friend bool operator==(const BoxSpec&, const BoxSpec&) = default;
};

/// Nodal loads: the total resultant `magnitude * direction` is spread over
/// the selected nodes as a force density (divided by their lumped volume),
/// so the continuum resultant is grid-independent.
struct LoadSpec {
    BoxSpec box;
    std::array<double, 3> direction{0.0, 0.0, 0.0};
    double magnitude = 0.0;
    friend bool operator==(const LoadSpec&, const LoadSpec&) = default;
};

/// Roller support: one displacement component pinned to zero on the
/// selected nodes.
struct RollerSpec {
    BoxSpec box;
    int component = 0;
    friend bool operator==(const RollerSpec&, const RollerSpec&) = default;
};

/// Flat, fully serializable description of a run. Presets fill every field;
/// config files and CLI flags override. Objective weights are understood to
/// be tuned at `weight_ref_nodes` grid nodes and are rescaled to the run
/// grid when that field is set (0 disables rescaling).
struct ProblemConfig {
    std::string preset;

    PhysicsKind physics = PhysicsKind::Heat;
    long nx = 0, ny = 0, nz = 1;
    std::array<double, 3> lengths{0.0, 0.0, 0.0};

    // boundary & loading
    std::vector<std::string> dirichlet_faces; // heat: fixed-temperature faces
    double dirichlet_value = 0.0;
    std::vector<std::string> fixed_faces;     // elasticity: clamped faces
    std::vector<RollerSpec> rollers;
    std::vector<LoadSpec> loads;
    double source = 0.0;                      // heat: uniform volumetric source

    // materials
    std::vector<double> properties;
    double poisson_ratio = 0.3;
    double penalty = 3.0;
    double void_floor = 1e-6;

    // volume targets
    std::vector<double> target_fractions;
    bool has_region = false;
    BoxSpec region_box;
    std::vector<double> region_fractions;

    // objective weights
    double alpha_compliance = 0.1;
    double alpha_volume = 0.0;
    double alpha_unity = 0.0;
    double alpha_region = 0.0;
    bool normalize_compliance = true;
    int compliance_sign = 1;
    double weight_ref_nodes = 0.0;

    // schedule
    long n_apt = 0, n_pt = 0;
    double dt_pt = 0.0;  // 0 = auto: min_dx^2 / (2 dim max(1, prop_max))
    double dt_apt = 0.0; // 0 = auto: min_dx / 2 / sqrt(max(1, prop_max))
    double dt_ch = 0.0;  // 0 = auto: multiplier * min_dx^4, stability-capped
    double dt_ch_multiplier = 500.0;
    double theta = 1.0;
    std::string apt_form = "explicit"; // explicit | semi_implicit
    double ch_mobility = 1.0;
    double ch_gamma = 3e-5;
    long max_loops = 1;
    double convergence_tol = 1e-3;
    int convergence_window = 50;
    int report_every = 10;

    // initial conditions
    double initial_phase = 0.5;
    double initial_state = 0.0;

    // execution & output
    std::string out_dir;
    std::string precision = "f64";
    int threads = 1;
    std::vector<std::string> formats{"csv", "pgm", "vtk"};

    friend bool operator==(const ProblemConfig&, const ProblemConfig&) = default;
};

std::vector<std::string> preset_names();

/// Builds the named preset at its desk-scale default grid. Throws ConfigError
/// for unknown names, listing the valid ones.
ProblemConfig make_preset(const std::string& name);

/// Full validation; throws ConfigError naming the offending field.
void validate_config(const ProblemConfig& cfg);

int face_index_from_name(const std::string& name); // "x_lo" ... "z_hi"
std::string face_name(int face);
int component_from_name(const std::string& name);  // "x"/"y"/"z" or digits
std::string component_name(int c);

} // namespace petto
