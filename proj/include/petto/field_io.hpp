#pragma once

#include <string>
#include <utility>
#include <vector>

#include "petto/grid.hpp"
#include "petto/optimizer.hpp"

namespace petto {

/// Scalar field values decoded from a CSV file.
struct CsvField {
    long nx = 0, ny = 0, nz = 0;
    double dx = 0, dy = 0, dz = 0;
    std::vector<double> values;
};

/// Row-major CSV with a single header comment carrying dims and spacing.
/// Values are written with 17 significant digits, so f64 round-trips exactly.
void write_field_csv(const Grid& g, const std::vector<double>& values,
                     const std::string& path);
CsvField read_field_csv(const std::string& path);

/// 8-bit binary graymap, min-max scaled; the applied scaling is recorded in a
/// `<path>.scale.txt` sidecar. Row 0 is the top of the domain (y high).
void write_pgm(const Grid& g, const std::vector<double>& values, const std::string& path);

/// Legacy ASCII structured-points file with one scalar array per entry.
void write_vtk_structured_points(const Grid& g,
                                 const std::vector<std::pair<std::string, std::vector<double>>>& arrays,
                                 const std::string& path);

void write_history_csv(const std::vector<HistoryRecord>& records, const std::string& path);

template <class Real>
std::vector<double> to_doubles(const Field<Real>& f, int component = 0) {
    const Real* p = f.comp(component);
    return std::vector<double>(p, p + f.num_nodes());
}

} // namespace petto
