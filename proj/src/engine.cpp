#include "petto/engine.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "petto/parallel.hpp"

namespace petto {

std::vector<Index> nodes_in_box(const Grid& g, const BoxSpec& box) {
    std::vector<Index> out;
    for (Index k = 0; k < g.n[2]; ++k)
        for (Index j = 0; j < g.n[1]; ++j)
            for (Index i = 0; i < g.n[0]; ++i) {
                const Index idx[3] = {i, j, k};
                bool inside = true;
                for (int a = 0; a < g.dim; ++a) {
                    const double x = g.coord(a, idx[a]);
                    const double tol = 0.5 * g.spacing[a] * (1.0 + 1e-9);
                    if (x < box.lo[a] - tol || x > box.hi[a] + tol) {
                        inside = false;
                        break;
                    }
                }
                if (inside) out.push_back(g.node(i, j, k));
            }
    return out;
}

Grid make_grid(const ProblemConfig& cfg) {
    if (cfg.nz > 1)
        return Grid::make3d(cfg.nx, cfg.ny, cfg.nz, cfg.lengths[0], cfg.lengths[1],
                            cfg.lengths[2]);
    return Grid::make2d(cfg.nx, cfg.ny, cfg.lengths[0], cfg.lengths[1]);
}

ObjectiveWeights effective_weights(const ProblemConfig& cfg, const Grid& g) {
    ObjectiveWeights w;
    w.alpha_compliance = cfg.alpha_compliance;
    w.alpha_volume = cfg.alpha_volume;
    w.alpha_unity = cfg.alpha_unity;
    w.alpha_region = cfg.alpha_region;
    w.normalize_compliance = cfg.normalize_compliance;
    w.compliance_sign = cfg.compliance_sign;
    if (cfg.weight_ref_nodes > 0.0) {
        const double scale = static_cast<double>(g.num_nodes()) / cfg.weight_ref_nodes;
        w.alpha_volume *= scale;
        w.alpha_region *= scale;
        w.alpha_unity *= scale / g.domain_volume();
    }
    return w;
}

LoopSchedule build_schedule(const ProblemConfig& cfg, const Grid& g) {
    double prop_max = 0.0, prop_sum = 0.0;
    for (double p : cfg.properties) {
        prop_max = std::max(prop_max, p);
        prop_sum += p;
    }
    const double coeff = std::max(1.0, prop_max);
    const double h = g.min_spacing();

    LoopSchedule s;
    s.pt.dt_pt = cfg.dt_pt > 0 ? cfg.dt_pt : h * h / (2.0 * g.dim * coeff);
    s.pt.dt_apt = cfg.dt_apt > 0 ? cfg.dt_apt : 0.5 * h / std::sqrt(coeff);
    if (cfg.physics == PhysicsKind::Elasticity) {
        // stability guard: phases can transiently pile up, so the effective
        // modulus is bounded by the property sum, not the largest property
        const double bound =
            elasticity_spectral_bound(g, cfg.poisson_ratio, std::max(1e-300, prop_sum));
        if (cfg.dt_pt <= 0) s.pt.dt_pt = std::min(s.pt.dt_pt, 0.9 * 2.0 / bound);
        if (cfg.dt_apt <= 0)
            s.pt.dt_apt = std::min(s.pt.dt_apt, 0.9 * 2.0 / std::sqrt(bound));
    }
    s.pt.theta = cfg.theta;
    s.pt.n_apt = cfg.n_apt;
    s.pt.n_pt = cfg.n_pt;
    s.pt.form = cfg.apt_form == "semi_implicit" ? AptForm::SemiImplicitDamping
                                                : AptForm::ExplicitDamping;
    s.ch.mobility = cfg.ch_mobility;
    s.ch.gamma = cfg.ch_gamma;
    if (cfg.dt_ch > 0) {
        s.ch.dt = cfg.dt_ch;
    } else {
        const double nominal = cfg.dt_ch_multiplier * h * h * h * h;
        const double cap = 0.9 * ch_stable_dt(g, cfg.ch_mobility, cfg.ch_gamma);
        s.ch.dt = std::min(nominal, cap);
    }
    s.max_loops = cfg.max_loops;
    s.convergence_tol = cfg.convergence_tol;
    s.convergence_window = cfg.convergence_window;
    s.report_every = cfg.report_every;
    return s;
}

ProblemConfig resolve_config(const RunOptions& opt) {
    ProblemConfig cfg;
    if (!opt.config_path.empty()) {
        cfg = load_config(opt.config_path);
        if (!opt.preset.empty())
            throw ConfigError("--preset and --config are mutually exclusive");
    } else if (!opt.preset.empty()) {
        cfg = make_preset(opt.preset);
    } else {
        throw ConfigError("either --preset or --config is required");
    }

    if (opt.nx > 0) cfg.nx = opt.nx;
    if (opt.ny > 0) cfg.ny = opt.ny;
    if (opt.nz > 0) cfg.nz = opt.nz;
    if (opt.loops > 0) cfg.max_loops = opt.loops;
    if (!opt.out_dir.empty()) cfg.out_dir = opt.out_dir;
    if (!opt.precision.empty()) cfg.precision = opt.precision;
    if (opt.threads >= 0) cfg.threads = opt.threads;
    if (opt.report_every > 0) cfg.report_every = opt.report_every;
    if (opt.compliance_sign != 0) cfg.compliance_sign = opt.compliance_sign;

    if (cfg.out_dir.empty()) {
        const char* env = std::getenv("PETTO_OUT");
        if (env && *env) cfg.out_dir = env;
    }
    if (cfg.out_dir.empty())
        throw ConfigError("no output directory: pass --out <dir> or set PETTO_OUT");

    validate_config(cfg);
    return cfg;
}

namespace {

std::string join(const std::filesystem::path& dir, const std::string& name) {
    return (dir / name).string();
}

bool wants(const ProblemConfig& cfg, const std::string& format) {
    for (const std::string& f : cfg.formats)
        if (f == format) return true;
    return false;
}

} // namespace

template <class Real>
void write_outputs(const ProblemConfig& cfg, const Problem<Real>& prob,
                   const OptimizationResult<Real>& result) {
    namespace fs = std::filesystem;
    const fs::path dir(cfg.out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory '" + cfg.out_dir + "'");

    const Grid& g = *prob.grid;
    write_history_csv(result.history, join(dir, "history.csv"));

    Field<Real> property = interpolate(result.phases, prob.material);
    const char* prop_name = prob.kind == MaterialKind::Thermal ? "conductivity" : "modulus";

    if (g.dim == 2) {
        for (int i = 0; i < result.phases.count(); ++i) {
            const std::vector<double> v = to_doubles(result.phases.phases[i]);
            const std::string base = "phase_" + std::to_string(i);
            if (wants(cfg, "csv")) write_field_csv(g, v, join(dir, base + ".csv"));
            if (wants(cfg, "pgm")) write_pgm(g, v, join(dir, base + ".pgm"));
        }
        const std::vector<double> pv = to_doubles(property);
        if (wants(cfg, "csv")) write_field_csv(g, pv, join(dir, std::string(prop_name) + ".csv"));
        if (wants(cfg, "pgm")) write_pgm(g, pv, join(dir, std::string(prop_name) + ".pgm"));
        if (prob.kind == MaterialKind::Thermal) {
            write_field_csv(g, to_doubles(result.state), join(dir, "temperature.csv"));
        } else {
            for (int c = 0; c < g.dim; ++c)
                write_field_csv(g, to_doubles(result.state, c),
                                join(dir, "displacement_" + component_name(c) + ".csv"));
        }
    } else {
        std::vector<std::pair<std::string, std::vector<double>>> arrays;
        for (int i = 0; i < result.phases.count(); ++i)
            arrays.emplace_back("phase_" + std::to_string(i),
                                to_doubles(result.phases.phases[i]));
        arrays.emplace_back(prop_name, to_doubles(property));
        for (int c = 0; c < result.state.components; ++c)
            arrays.emplace_back("displacement_" + component_name(c),
                                to_doubles(result.state, c));
        write_vtk_structured_points(g, arrays, join(dir, "fields.vtk"));
    }

    std::ofstream sum(join(dir, "summary.txt"));
    if (!sum) throw IoError("cannot write run summary");
    sum << "preset = " << (cfg.preset.empty() ? "(custom)" : cfg.preset) << "\n";
    sum << "termination = " << to_string(result.termination) << "\n";
    if (!result.abort_detail.empty()) sum << "abort_detail = " << result.abort_detail << "\n";
    sum << "loops = " << result.loops << "\n";
    sum << "apt_steps = " << result.apt_steps << "\n";
    sum << "pt_steps = " << result.pt_steps << "\n";
    sum << "design_updates = " << result.design_updates << "\n";
    sum << "ch_steps = " << result.ch_steps << "\n";
    sum << "clamp_mass_drift = " << result.clamp_mass_drift << "\n";
    const LoopSchedule sched = build_schedule(cfg, g);
    sum << "dt_pt = " << sched.pt.dt_pt << "\n";
    sum << "dt_apt = " << sched.pt.dt_apt << "\n";
    sum << "dt_ch = " << sched.ch.dt << "\n";
    const ObjectiveWeights w = effective_weights(cfg, g);
    sum << "alpha_volume_effective = " << w.alpha_volume << "\n";
    sum << "alpha_unity_effective = " << w.alpha_unity << "\n";
    sum << "alpha_region_effective = " << w.alpha_region << "\n";
    if (!result.history.empty()) {
        const HistoryRecord& r = result.history.back();
        sum << "final_compliance = " << r.compliance << "\n";
        sum << "final_r_pde = " << r.r_pde << "\n";
        sum << "final_separation = " << r.separation << "\n";
        for (std::size_t i = 0; i < r.volume_fractions.size(); ++i)
            sum << "final_volfrac_" << i << " = " << r.volume_fractions[i] << "\n";
        sum << "wall_seconds = " << r.wall_seconds << "\n";
    }
}

template void write_outputs<float>(const ProblemConfig&, const Problem<float>&,
                                   const OptimizationResult<float>&);
template void write_outputs<double>(const ProblemConfig&, const Problem<double>&,
                                    const OptimizationResult<double>&);

namespace {

template <class Real>
int run_typed(const ProblemConfig& cfg, bool quiet) {
    const Problem<Real> prob = build_problem<Real>(cfg);
    const LoopSchedule sched = build_schedule(cfg, *prob.grid);
    RecordCallback cb;
    if (!quiet)
        cb = [&](const HistoryRecord& r) {
            std::printf("loop %6ld  J=%.6e  r_pde=%.3e  sep=%.3f  volfrac=[", r.loop,
                        r.compliance, r.r_pde, r.separation);
            for (std::size_t i = 0; i < r.volume_fractions.size(); ++i)
                std::printf("%s%.3f", i ? " " : "", r.volume_fractions[i]);
            std::printf("]\n");
            std::fflush(stdout);
        };
    const OptimizationResult<Real> result = run(prob, sched, cb);
    write_outputs(cfg, prob, result);
    if (result.termination == Termination::AbortedNaN) {
        std::cerr << "aborted: " << result.abort_detail << "\n";
        return 3;
    }
    if (!quiet)
        std::printf("done: %s after %ld loops\n", to_string(result.termination), result.loops);
    return 0;
}

} // namespace

int run_cli(const RunOptions& opt) {
    try {
        const ProblemConfig cfg = resolve_config(opt);
        par::set_threads(cfg.threads);
        if (cfg.precision == "f32") return run_typed<float>(cfg, opt.quiet);
        return run_typed<double>(cfg, opt.quiet);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const NumericalAbort& e) {
        std::cerr << "numerical abort: " << e.what() << "\n";
        return 3;
    } catch (const IoError& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return 4;
    }
}

} // namespace petto
