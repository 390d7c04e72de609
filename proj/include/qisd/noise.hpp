#ifndef QISD_NOISE_HPP
#define QISD_NOISE_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <memory>

#include "qisd/model.hpp"
#include "qisd/time_grid.hpp"

namespace qisd {

// A realized noise path on the grid nodes (one value per step).
struct NoisePath {
    TimeGrid grid;
    Eigen::VectorXd values;
};

// Relative eigenvalue floor applied before factorizing discretized noise
// kernels; tolerates tabulated kernels that are PSD only up to rounding.
inline constexpr double kEigenvalueFloorRel = 1e-12;
// Eigenvalues below -rel_tol * lambda_max reject the kernel as non-PSD.
inline constexpr double kNegativeEigenvalueRel = 1e-8;

// Lower-triangular factor L with L L^T ~= M after eigenvalue flooring.
// Throws NotPositiveSemidefiniteError (with the most negative eigenvalue)
// when flooring cannot repair the matrix.
Eigen::MatrixXd floored_psd_factor(const Eigen::MatrixXd& m, const char* what);

// Draws mean-zero Gaussian paths whose covariance is the discretized noise
// kernel. White (delta) kernels bypass factorization and sample i.i.d.
// values of per-step variance amplitude/dt.
class NoiseSampler {
  public:
    NoiseSampler(const KernelSpec& kernel, const TimeGrid& grid, std::uint64_t seed);

    // Pure function of (seed, draw_index); draws with distinct indices are
    // independent, so ensemble members can be generated in any order.
    NoisePath sample(std::uint64_t draw_index) const;

    const TimeGrid& grid() const { return grid_; }
    std::uint64_t seed() const { return seed_; }
    bool is_white() const { return white_; }
    // Empty for white kernels.
    const Eigen::MatrixXd& factor() const { return factor_; }
    const Eigen::MatrixXd& covariance() const { return covariance_; }

  private:
    TimeGrid grid_;
    std::uint64_t seed_;
    bool white_ = false;
    double white_sigma_ = 0.0;
    Eigen::MatrixXd factor_;
    Eigen::MatrixXd covariance_;
};

NoiseSampler build_sampler(const KernelSpec& noise_kernel, const TimeGrid& grid,
                           std::uint64_t seed);

} // namespace qisd

#endif
