#include "qisd/noise.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <string>

#include "qisd/rng.hpp"

namespace qisd {

Eigen::MatrixXd floored_psd_factor(const Eigen::MatrixXd& m, const char* what) {
    if (m.rows() != m.cols())
        throw InvalidParameterError(std::string(what) + ": matrix must be square");
    const Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
    if (eig.info() != Eigen::Success)
        throw ConditioningError(std::string(what) + ": eigendecomposition failed");
    const Eigen::VectorXd& lam = eig.eigenvalues();
    const double lam_max = lam.maxCoeff();
    const double lam_min = lam.minCoeff();
    if (lam_max <= 0.0) {
        if (lam_min < -kNegativeEigenvalueRel)
            throw NotPositiveSemidefiniteError(
                std::string(what) + ": kernel not positive semi-definite, most negative "
                                    "eigenvalue " + std::to_string(lam_min),
                lam_min);
        return Eigen::MatrixXd::Zero(m.rows(), m.cols());
    }
    if (lam_min < -kNegativeEigenvalueRel * lam_max)
        throw NotPositiveSemidefiniteError(
            std::string(what) + ": kernel not positive semi-definite, most negative "
                                "eigenvalue " + std::to_string(lam_min),
            lam_min);
    const double floor = kEigenvalueFloorRel * lam_max;
    Eigen::VectorXd lam_floored = lam.cwiseMax(floor);
    const Eigen::MatrixXd repaired =
        eig.eigenvectors() * lam_floored.asDiagonal() * eig.eigenvectors().transpose();
    Eigen::LLT<Eigen::MatrixXd> llt(repaired);
    if (llt.info() != Eigen::Success)
        throw NotPositiveSemidefiniteError(
            std::string(what) + ": Cholesky failed after eigenvalue flooring", lam_min);
    return llt.matrixL();
}

NoiseSampler::NoiseSampler(const KernelSpec& kernel, const TimeGrid& grid, std::uint64_t seed)
    : grid_(grid), seed_(seed) {
    if (kernel.kind() == KernelSpec::Kind::delta_derivative)
        throw InvalidParameterError("NoiseSampler: delta_derivative is not a valid noise kernel");
    if (kernel.kind() == KernelSpec::Kind::delta) {
        white_ = true;
        white_sigma_ = std::sqrt(kernel.amplitude() / grid.dt());
        return;
    }
    covariance_ = discretize_kernel(kernel, grid);
    factor_ = floored_psd_factor(covariance_, "NoiseSampler");
}

NoisePath NoiseSampler::sample(std::uint64_t draw_index) const {
    const auto n = static_cast<Eigen::Index>(grid_.n_steps());
    rng::CounterRng gen(seed_, rng::Stream::noise, draw_index);
    Eigen::VectorXd z(n);
    for (Eigen::Index i = 0; i < n; ++i) z[i] = gen.next_gaussian();
    if (white_) return {grid_, white_sigma_ * z};
    return {grid_, factor_.triangularView<Eigen::Lower>() * z};
}

NoiseSampler build_sampler(const KernelSpec& noise_kernel, const TimeGrid& grid,
                           std::uint64_t seed) {
    return NoiseSampler(noise_kernel, grid, seed);
}

} // namespace qisd
