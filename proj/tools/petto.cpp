// Command-line front end: `petto run ...` drives the optimizer from a preset
// or a config file and writes fields plus a run history.
#include <CLI11.hpp>

#include "petto/engine.hpp"

int main(int argc, char** argv) {
    CLI::App app{"pseudo-transient topology optimization on structured grids"};
    app.require_subcommand(1);

    petto::RunOptions opt;
    std::string sign;

    CLI::App* run = app.add_subcommand("run", "run an optimization");
    run->add_option("--preset", opt.preset, "preset name (heat2d, mbb2d, cantilever3d, drone3d)");
    run->add_option("--config", opt.config_path, "config file path");
    run->add_option("--nx", opt.nx, "override node count along x");
    run->add_option("--ny", opt.ny, "override node count along y");
    run->add_option("--nz", opt.nz, "override node count along z");
    run->add_option("--loops", opt.loops, "override the loop budget");
    run->add_option("--out", opt.out_dir, "output directory (default: $PETTO_OUT)");
    run->add_option("--precision", opt.precision, "f32 or f64");
    run->add_option("--threads", opt.threads, "worker threads (1 = deterministic)");
    run->add_option("--report-every", opt.report_every, "loops between history records");
    run->add_option("--compliance-sign", sign, "+1 or -1");
    run->add_flag("--quiet", opt.quiet, "suppress per-record progress output");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2; // bad flags are config errors
    }

    if (!sign.empty()) {
        if (sign == "+1" || sign == "1") opt.compliance_sign = 1;
        else if (sign == "-1") opt.compliance_sign = -1;
        else {
            std::fprintf(stderr, "config error: --compliance-sign must be +1 or -1\n");
            return 2;
        }
    }
    return petto::run_cli(opt);
}
