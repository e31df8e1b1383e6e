#include "petto/field_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "petto/errors.hpp"

namespace petto {

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::ofstream open_out(const std::string& path, bool binary = false) {
    std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    return out;
}

} // namespace

void write_field_csv(const Grid& g, const std::vector<double>& values,
                     const std::string& path) {
    if (static_cast<Index>(values.size()) != g.num_nodes())
        throw std::invalid_argument("write_field_csv: value count does not match the grid");
    std::ofstream out = open_out(path);
    out << "# nx=" << g.n[0] << " ny=" << g.n[1] << " nz=" << g.n[2] << " dx="
        << fmt(g.spacing[0]) << " dy=" << fmt(g.spacing[1]) << " dz=" << fmt(g.spacing[2])
        << "\n";
    for (Index k = 0; k < g.n[2]; ++k)
        for (Index j = 0; j < g.n[1]; ++j) {
            const Index row = (k * g.n[1] + j) * g.n[0];
            for (Index i = 0; i < g.n[0]; ++i) {
                if (i) out << ',';
                out << fmt(values[static_cast<std::size_t>(row + i)]);
            }
            out << "\n";
        }
    if (!out) throw IoError("write failed for '" + path + "'");
}

CsvField read_field_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    CsvField f;
    std::string line;
    if (!std::getline(in, line) || line.rfind("# nx=", 0) != 0)
        throw IoError("'" + path + "': missing field header");
    if (std::sscanf(line.c_str(), "# nx=%ld ny=%ld nz=%ld dx=%lf dy=%lf dz=%lf", &f.nx, &f.ny,
                    &f.nz, &f.dx, &f.dy, &f.dz) != 6)
        throw IoError("'" + path + "': malformed field header");
    f.values.reserve(static_cast<std::size_t>(f.nx) * f.ny * f.nz);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream iss(line);
        std::string cell;
        while (std::getline(iss, cell, ',')) f.values.push_back(std::stod(cell));
    }
    if (static_cast<long>(f.values.size()) != f.nx * f.ny * f.nz)
        throw IoError("'" + path + "': value count does not match the header");
    return f;
}

void write_pgm(const Grid& g, const std::vector<double>& values, const std::string& path) {
    if (g.dim != 2) throw std::invalid_argument("write_pgm: only 2D fields");
    if (static_cast<Index>(values.size()) != g.num_nodes())
        throw std::invalid_argument("write_pgm: value count does not match the grid");
    double lo = 0.0, hi = 0.0;
    bool first = true;
    for (double v : values) {
        if (!std::isfinite(v)) continue; // aborted runs may carry NaN
        lo = first ? v : std::min(lo, v);
        hi = first ? v : std::max(hi, v);
        first = false;
    }
    const double span = hi > lo ? hi - lo : 1.0;

    std::ofstream out = open_out(path, true);
    out << "P5\n" << g.n[0] << " " << g.n[1] << "\n255\n";
    std::vector<unsigned char> row(static_cast<std::size_t>(g.n[0]));
    for (Index j = g.n[1] - 1; j >= 0; --j) { // image rows top-down
        for (Index i = 0; i < g.n[0]; ++i) {
            const double raw = values[static_cast<std::size_t>(j * g.n[0] + i)];
            const double v = std::isfinite(raw) ? (raw - lo) / span : 0.0;
            row[static_cast<std::size_t>(i)] =
                static_cast<unsigned char>(std::lround(255.0 * std::clamp(v, 0.0, 1.0)));
        }
        out.write(reinterpret_cast<const char*>(row.data()), static_cast<long>(row.size()));
    }
    if (!out) throw IoError("write failed for '" + path + "'");

    std::ofstream side = open_out(path + ".scale.txt");
    side << "min = " << fmt(lo) << "\nmax = " << fmt(hi) << "\nrows = top_to_bottom\n";
}

void write_vtk_structured_points(
    const Grid& g, const std::vector<std::pair<std::string, std::vector<double>>>& arrays,
    const std::string& path) {
    std::ofstream out = open_out(path);
    out << "# vtk DataFile Version 3.0\n";
    out << "structured point fields\n";
    out << "ASCII\n";
    out << "DATASET STRUCTURED_POINTS\n";
    out << "DIMENSIONS " << g.n[0] << " " << g.n[1] << " " << g.n[2] << "\n";
    out << "ORIGIN 0 0 0\n";
    out << "SPACING " << fmt(g.spacing[0]) << " " << fmt(g.spacing[1]) << " "
        << fmt(g.spacing[2]) << "\n";
    out << "POINT_DATA " << g.num_nodes() << "\n";
    for (const auto& [name, values] : arrays) {
        if (static_cast<Index>(values.size()) != g.num_nodes())
            throw std::invalid_argument("write_vtk: array '" + name + "' has the wrong length");
        out << "SCALARS " << name << " double 1\n";
        out << "LOOKUP_TABLE default\n";
        for (double v : values) out << fmt(v) << "\n";
    }
    if (!out) throw IoError("write failed for '" + path + "'");
}

void write_history_csv(const std::vector<HistoryRecord>& records, const std::string& path) {
    std::ofstream out = open_out(path);
    const std::size_t phases = records.empty() ? 0 : records.front().volume_fractions.size();
    out << "loop,apt_steps,pt_steps,compliance,J_v,J_1,J_b,r_pde,separation";
    for (std::size_t i = 0; i < phases; ++i) out << ",volfrac_" << i;
    out << "\n";
    for (const HistoryRecord& r : records) {
        out << r.loop << ',' << r.apt_steps << ',' << r.pt_steps << ',' << fmt(r.compliance)
            << ',' << fmt(r.volume) << ',' << fmt(r.unity) << ',' << fmt(r.region) << ','
            << fmt(r.r_pde) << ',' << fmt(r.separation);
        for (double v : r.volume_fractions) out << ',' << fmt(v);
        out << "\n";
    }
    if (!out) throw IoError("write failed for '" + path + "'");
}

} // namespace petto
