#pragma once

// Central finite-difference oracle for design-variable gradients: perturbs
// one phase value at a time and differences the scalar objective. Slow and
// simple on purpose; it must stay independent of the analytic sensitivity
// path it checks.

#include <functional>
#include <vector>

#include "petto/phase_field.hpp"

namespace petto::oracle {

using Objective = std::function<double(const PhaseSet<double>&)>;

inline std::vector<std::vector<double>> fd_gradient(const PhaseSet<double>& phases,
                                                    const Objective& evaluate,
                                                    double step = 1e-6) {
    PhaseSet<double> work = phases;
    std::vector<std::vector<double>> out(phases.phases.size());
    const Index nn = phases.grid().num_nodes();
    for (std::size_t i = 0; i < phases.phases.size(); ++i) {
        out[i].resize(static_cast<std::size_t>(nn));
        for (Index node = 0; node < nn; ++node) {
            const double base = work.phases[i].at(0, node);
            work.phases[i].at(0, node) = base + step;
            const double plus = evaluate(work);
            work.phases[i].at(0, node) = base - step;
            const double minus = evaluate(work);
            work.phases[i].at(0, node) = base;
            out[i][static_cast<std::size_t>(node)] = (plus - minus) / (2.0 * step);
        }
    }
    return out;
}

/// Worst relative deviation between an analytic gradient field and the
/// oracle, with an absolute floor below which entries count as equal.
inline double worst_relative_error(const std::vector<Field<double>>& analytic,
                                   const std::vector<std::vector<double>>& fd,
                                   double abs_floor = 1e-10) {
    double worst = 0.0;
    for (std::size_t i = 0; i < analytic.size(); ++i)
        for (std::size_t n = 0; n < fd[i].size(); ++n) {
            const double a = analytic[i].data[n];
            const double b = fd[i][n];
            const double diff = std::abs(a - b);
            if (diff <= abs_floor) continue;
            worst = std::max(worst, diff / std::max(std::abs(b), abs_floor));
        }
    return worst;
}

} // namespace petto::oracle
