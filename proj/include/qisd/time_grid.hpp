#ifndef QISD_TIME_GRID_HPP
#define QISD_TIME_GRID_HPP

#include <cmath>
#include <cstddef>
#include <vector>

#include "qisd/errors.hpp"

namespace qisd {

// Uniform partition of [0, t_end] into n_steps slices. Node k sits at k*dt;
// kernel/noise values live on the n_steps left nodes, trajectories carry
// n_steps + 1 points including both interval ends.
class TimeGrid {
  public:
    TimeGrid(double t_end, std::size_t n_steps) : t_end_(t_end), n_steps_(n_steps) {
        if (!(t_end > 0.0) || !std::isfinite(t_end))
            throw InvalidParameterError("TimeGrid: t_end must be positive and finite");
        if (n_steps < 1)
            throw InvalidParameterError("TimeGrid: n_steps must be >= 1");
        dt_ = t_end / static_cast<double>(n_steps);
    }

    double t_start() const { return 0.0; }
    double t_end() const { return t_end_; }
    std::size_t n_steps() const { return n_steps_; }
    double dt() const { return dt_; }
    double time(std::size_t k) const { return dt_ * static_cast<double>(k); }

    std::vector<double> node_times() const {
        std::vector<double> t(n_steps_);
        for (std::size_t k = 0; k < n_steps_; ++k) t[k] = time(k);
        return t;
    }

    bool same_as(const TimeGrid& other) const {
        return n_steps_ == other.n_steps_ && t_end_ == other.t_end_;
    }

  private:
    double t_end_;
    std::size_t n_steps_;
    double dt_;
};

inline void require_same_grid(const TimeGrid& a, const TimeGrid& b, const char* where) {
    if (!a.same_as(b))
        throw GridMismatchError(std::string(where) + ": time grids differ");
}

} // namespace qisd

#endif
