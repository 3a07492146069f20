#pragma once

#include <cstddef>
#include <limits>
#include <vector>

#include <Eigen/Core>

#include "onebit/binary_observation.hpp"
#include "onebit/dataset.hpp"

namespace onebit {

namespace detail {

/// argmin over classes 0..count-1 of score(c); strict comparison keeps the lowest index on ties.
template <class Score>
ClassIndex argmin_class(std::size_t count, Score&& score) {
    ClassIndex best{0};
    double best_score = std::numeric_limits<double>::infinity();
    for (std::uint32_t c = 0; c < count; ++c) {
        const double s = score(ClassIndex{c});
        if (s < best_score) {
            best_score = s;
            best = ClassIndex{c};
        }
    }
    return best;
}

inline Eigen::VectorXd class_mean(std::span<const BinaryObservation> samples, std::size_t dim) {
    Eigen::VectorXd mu = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim));
    for (const auto& r : samples) mu += r.to_real();
    return mu / static_cast<double>(samples.size());
}

}  // namespace detail

/// Per-class sample means of the training observations; entries lie in [-1, 1].
struct CentroidParams {
    std::vector<Eigen::VectorXd> means;

    std::size_t class_count() const noexcept { return means.size(); }
};

inline CentroidParams fit_centroid(const LabelledDataset& data) {
    CentroidParams p;
    p.means.reserve(data.class_count());
    for (std::uint32_t c = 0; c < data.class_count(); ++c)
        p.means.push_back(detail::class_mean(data.class_samples(ClassIndex{c}), data.dimension()));
    return p;
}

/// Minimum-centered-distance detector: nearest class mean in squared Euclidean distance.
inline ClassIndex detect_mcd(const BinaryObservation& r, const CentroidParams& params) {
    const Eigen::VectorXd x = r.to_real();
    detail::require(params.class_count() > 0 && params.means.front().size() == x.size(),
                    "detect_mcd: observation length does not match fitted parameters");
    return detail::argmin_class(params.class_count(),
                                [&](ClassIndex c) { return (x - params.means[c.value]).squaredNorm(); });
}

}  // namespace onebit
