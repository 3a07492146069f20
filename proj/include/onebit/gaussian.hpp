#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "onebit/centroid.hpp"
#include "onebit/dataset.hpp"
#include "onebit/error.hpp"

namespace onebit {

/// Variance of a +/-1 variable whose flip probability sits at the 1e-3 floor.
/// Lower bound on the shrinkage target scale, so classes whose pilots are all
/// identical (zero sample covariance) still get an invertible matrix.
inline constexpr double default_min_target_variance = 4.0 * 1e-3 * (1.0 - 1e-3);

struct GaussianParams {
    std::vector<Eigen::VectorXd> means;
    std::vector<Eigen::MatrixXd> covariances;  // after shrinkage
    std::vector<Eigen::MatrixXd> precisions;   // inverse of the shrunk covariance

    std::size_t class_count() const noexcept { return means.size(); }
};

/// (1/T) sum_t (r_t - mu)(r_t - mu)^T.
inline Eigen::MatrixXd sample_covariance(std::span<const BinaryObservation> samples, const Eigen::VectorXd& mean) {
    const auto n = mean.size();
    Eigen::MatrixXd centered(n, static_cast<Eigen::Index>(samples.size()));
    for (std::size_t t = 0; t < samples.size(); ++t) centered.col(static_cast<Eigen::Index>(t)) = samples[t].to_real() - mean;
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(n, n);
    cov.selfadjointView<Eigen::Lower>().rankUpdate(centered, 1.0 / static_cast<double>(samples.size()));
    return cov.selfadjointView<Eigen::Lower>();
}

/// (1 - lambda) * cov + lambda * nu * I with nu = max(trace(cov)/N, min_target_variance).
inline Eigen::MatrixXd shrink_covariance(const Eigen::MatrixXd& cov, double lambda,
                                         double min_target_variance = default_min_target_variance) {
    const auto n = cov.rows();
    const double nu = std::max(cov.trace() / static_cast<double>(n), min_target_variance);
    return (1.0 - lambda) * cov + lambda * nu * Eigen::MatrixXd::Identity(n, n);
}

/// Gaussian class model with a shrinkage-regularized covariance.
///
/// Throws FitError when a shrunk covariance is not numerically positive
/// definite, which can only happen at lambda = 0.
inline GaussianParams fit_gaussian(const LabelledDataset& data, double lambda = 0.1,
                                   double min_target_variance = default_min_target_variance) {
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw ContractViolation("shrinkage lambda must lie in [0, 1]");
    const auto n = static_cast<Eigen::Index>(data.dimension());
    GaussianParams p;
    p.means.reserve(data.class_count());
    p.covariances.reserve(data.class_count());
    p.precisions.reserve(data.class_count());
    for (std::uint32_t c = 0; c < data.class_count(); ++c) {
        const auto samples = data.class_samples(ClassIndex{c});
        Eigen::VectorXd mu = detail::class_mean(samples, data.dimension());
        Eigen::MatrixXd cov = shrink_covariance(sample_covariance(samples, mu), lambda, min_target_variance);

        Eigen::LLT<Eigen::MatrixXd> llt(cov);
        if (llt.info() != Eigen::Success || !(llt.rcond() > 1e-12))
            throw FitError("class " + std::to_string(c) +
                           ": shrunk covariance is singular; increase the shrinkage lambda (currently " +
                           std::to_string(lambda) + ")");
        Eigen::MatrixXd precision = llt.solve(Eigen::MatrixXd::Identity(n, n));
        precision = 0.5 * (precision + precision.transpose()).eval();

        p.means.push_back(std::move(mu));
        p.covariances.push_back(std::move(cov));
        p.precisions.push_back(std::move(precision));
    }
    return p;
}

inline double mahalanobis_distance(const Eigen::VectorXd& x, const Eigen::VectorXd& mean,
                                   const Eigen::MatrixXd& precision) {
    const Eigen::VectorXd d = x - mean;
    return d.dot(precision * d);
}

/// argmin_c (r - mu_c)^T P_c (r - mu_c), lowest class index on ties.
inline ClassIndex detect_mahalanobis(const BinaryObservation& r, const GaussianParams& params) {
    const Eigen::VectorXd x = r.to_real();
    detail::require(params.class_count() > 0 && params.means.front().size() == x.size(),
                    "detect_mahalanobis: observation length does not match fitted parameters");
    return detail::argmin_class(params.class_count(), [&](ClassIndex c) {
        return mahalanobis_distance(x, params.means[c.value], params.precisions[c.value]);
    });
}

}  // namespace onebit
