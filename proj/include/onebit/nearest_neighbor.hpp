#pragma once

// Non-parametric detectors over the raw training set: k-nearest-neighbour
// majority vote (eMLD) and its 1-NN special case (MMD). For +/-1 vectors the
// squared Euclidean distance is 4x the Hamming distance, so Hamming is used.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <vector>

#include "onebit/binary_observation.hpp"
#include "onebit/dataset.hpp"
#include "onebit/error.hpp"

namespace onebit {

/// k nearest training points, distance ties broken by (class, pilot) order;
/// majority label, vote ties broken by the lowest class index.
inline ClassIndex detect_emld(const BinaryObservation& r, const LabelledDataset& data, std::size_t k) {
    const auto& obs = data.observations();
    if (k == 0 || k > obs.size()) throw ContractViolation("detect_emld: k must lie in [1, T*m^K]");
    detail::require(r.size() == data.dimension(), "detect_emld: observation length mismatch");

    // (distance, flat index); flat index order is (class, pilot) order.
    std::vector<std::pair<std::size_t, std::size_t>> dist(obs.size());
    for (std::size_t j = 0; j < obs.size(); ++j) dist[j] = {hamming_distance(r, obs[j]), j};
    std::nth_element(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k - 1), dist.end());

    std::vector<std::size_t> votes(data.class_count(), 0);
    for (std::size_t j = 0; j < k; ++j) ++votes[dist[j].second / data.pilots_per_class()];
    const auto top = std::max_element(votes.begin(), votes.end());  // first maximum = lowest class
    return ClassIndex{static_cast<std::uint32_t>(top - votes.begin())};
}

/// Label of the single nearest training point.
inline ClassIndex detect_mmd(const BinaryObservation& r, const LabelledDataset& data) {
    detail::require(r.size() == data.dimension(), "detect_mmd: observation length mismatch");
    const auto& obs = data.observations();
    std::size_t best = 0;
    std::size_t best_dist = std::numeric_limits<std::size_t>::max();
    for (std::size_t j = 0; j < obs.size(); ++j) {
        const auto d = hamming_distance(r, obs[j]);
        if (d < best_dist) {
            best_dist = d;
            best = j;
        }
    }
    return ClassIndex{static_cast<std::uint32_t>(best / data.pilots_per_class())};
}

}  // namespace onebit
