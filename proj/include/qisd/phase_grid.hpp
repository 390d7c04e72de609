#ifndef QISD_PHASE_GRID_HPP
#define QISD_PHASE_GRID_HPP

#include <Eigen/Dense>
#include <cmath>

#include "qisd/errors.hpp"

namespace qisd {

struct PhaseWindow {
    double x_min = -1.0, x_max = 1.0;
    double p_min = -1.0, p_max = 1.0;

    void validate() const {
        if (!(x_max > x_min) || !(p_max > p_min))
            throw InvalidParameterError("PhaseWindow: empty window");
    }
    bool contains(double x, double p) const {
        return x >= x_min && x < x_max && p >= p_min && p < p_max;
    }
};

// Binned phase-space density estimate with per-bin standard errors (empty for
// deterministic grids) and normalization metadata.
struct WignerGrid {
    PhaseWindow window;
    Eigen::Index nx = 0, np = 0;
    Eigen::MatrixXd values;  // (nx, np), density per unit area
    Eigen::MatrixXd stderr_; // same shape when estimated from samples, else empty
    double coverage = 1.0;   // signed weight fraction (or retained mass) inside the window

    double dx() const { return (window.x_max - window.x_min) / static_cast<double>(nx); }
    double dp() const { return (window.p_max - window.p_min) / static_cast<double>(np); }
    double cell_area() const { return dx() * dp(); }
    double x_center(Eigen::Index i) const {
        return window.x_min + (static_cast<double>(i) + 0.5) * dx();
    }
    double p_center(Eigen::Index j) const {
        return window.p_min + (static_cast<double>(j) + 0.5) * dp();
    }
    // Integral of W over the window.
    double normalization() const { return values.sum() * cell_area(); }
};

struct PhaseMoments {
    double mass = 0.0;
    double mean_x = 0.0, mean_p = 0.0;
    double var_x = 0.0, var_p = 0.0, cov_xp = 0.0;
};

inline PhaseMoments grid_moments(const WignerGrid& g) {
    PhaseMoments m;
    const double da = g.cell_area();
    double sx = 0, sp = 0, sxx = 0, spp = 0, sxp = 0, sw = 0;
    for (Eigen::Index i = 0; i < g.nx; ++i) {
        const double x = g.x_center(i);
        for (Eigen::Index j = 0; j < g.np; ++j) {
            const double p = g.p_center(j);
            const double w = g.values(i, j) * da;
            sw += w;
            sx += w * x;
            sp += w * p;
            sxx += w * x * x;
            spp += w * p * p;
            sxp += w * x * p;
        }
    }
    if (sw == 0.0) throw InvalidParameterError("grid_moments: zero total mass");
    m.mass = sw;
    m.mean_x = sx / sw;
    m.mean_p = sp / sw;
    m.var_x = sxx / sw - m.mean_x * m.mean_x;
    m.var_p = spp / sw - m.mean_p * m.mean_p;
    m.cov_xp = sxp / sw - m.mean_x * m.mean_p;
    return m;
}

// Integrated negative part of the density on the grid.
inline double negativity(const WignerGrid& g) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < g.nx; ++i)
        for (Eigen::Index j = 0; j < g.np; ++j) acc += std::max(-g.values(i, j), 0.0);
    return acc * g.cell_area();
}

} // namespace qisd

#endif
