#pragma once

// Bernoulli-like class model: each class c has a modal +/-1 signature mu_c and
// per-coordinate flip probabilities eps_c, i.e.
//   P(r | c) = prod_i eps_{c,i}^[r_i != mu_{c,i}] (1 - eps_{c,i})^[r_i == mu_{c,i}].

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "onebit/binary_observation.hpp"
#include "onebit/dataset.hpp"
#include "onebit/error.hpp"

namespace onebit {

inline constexpr double default_epsilon_floor = 1e-3;

enum class BernoulliScoring {
    /// 4 * sum over disagreeing coordinates of -log eps: the weighted quadratic form
    /// (r - mu)^T diag[-log eps] (r - mu).
    weighted_hamming,
    /// Full negative log-likelihood, which also charges -log(1 - eps) on agreeing coordinates.
    exact_likelihood,
};

/// Maximum-likelihood estimate for one class from its training samples.
struct BernoulliClassFit {
    BinaryObservation signature;
    std::vector<double> raw_flip_probs;  // N_d / T, before the floor
};

/// mu_i = sign(sum_t r_{t,i}) with sign(0) = +1; eps_i = fraction of samples disagreeing with mu_i.
inline BernoulliClassFit fit_bernoulli_class(std::span<const BinaryObservation> samples) {
    detail::require(!samples.empty(), "fit_bernoulli: T must be >= 1");
    const std::size_t n = samples.front().size();
    std::vector<long> sums(n, 0);
    for (const auto& r : samples) {
        detail::require(r.size() == n, "fit_bernoulli: observation length mismatch");
        for (std::size_t i = 0; i < n; ++i) sums[i] += r[i];
    }
    BernoulliClassFit fit{BinaryObservation(n), std::vector<double>(n)};
    const double t = static_cast<double>(samples.size());
    for (std::size_t i = 0; i < n; ++i) {
        fit.signature.set(i, sums[i] >= 0 ? 1 : -1);
        // Samples agreeing with the signature number (T + |sum|) / 2.
        const auto disagree = (static_cast<long>(samples.size()) - std::labs(sums[i])) / 2;
        fit.raw_flip_probs[i] = static_cast<double>(disagree) / t;
    }
    return fit;
}

struct BernoulliParams {
    std::vector<BinaryObservation> signatures;
    std::vector<std::vector<double>> raw_flip_probs;
    std::vector<std::vector<double>> flip_probs;  // max(raw, floor)
    std::vector<std::vector<double>> weights;     // -log flip_probs

    std::size_t class_count() const noexcept { return signatures.size(); }
    std::size_t dimension() const noexcept { return signatures.empty() ? 0 : signatures.front().size(); }

    /// Recomputes the derived scoring tables; call after editing flip_probs by hand.
    void refresh_weights() {
        weights.resize(flip_probs.size());
        agree_cost_.resize(flip_probs.size());
        agree_total_.assign(flip_probs.size(), 0.0);
        for (std::size_t c = 0; c < flip_probs.size(); ++c) {
            const auto& eps = flip_probs[c];
            weights[c].resize(eps.size());
            agree_cost_[c].resize(eps.size());
            for (std::size_t i = 0; i < eps.size(); ++i) {
                weights[c][i] = -std::log(eps[i]);
                const double a = -std::log1p(-eps[i]);
                agree_cost_[c][i] = a;
                agree_total_[c] += a;
            }
        }
    }

    /// Score of class c for observation r; lower is more likely.
    double score(const BinaryObservation& r, ClassIndex c,
                 BernoulliScoring mode = BernoulliScoring::weighted_hamming) const {
        const auto& w = weights[c.value];
        if (mode == BernoulliScoring::weighted_hamming) {
            double s = 0.0;
            for_each_difference(r, signatures[c.value], [&](std::size_t i) { s += w[i]; });
            return 4.0 * s;
        }
        const auto& a = agree_cost_[c.value];
        double s = agree_total_[c.value];
        for_each_difference(r, signatures[c.value], [&](std::size_t i) { s += w[i] - a[i]; });
        return s;
    }

private:
    std::vector<std::vector<double>> agree_cost_;
    std::vector<double> agree_total_;
};

/// Fits every class and floors the flip probabilities at epsilon_floor before taking logs.
inline BernoulliParams fit_bernoulli(const LabelledDataset& data, double epsilon_floor = default_epsilon_floor) {
    if (!(epsilon_floor > 0.0 && epsilon_floor < 0.5)) throw ContractViolation("epsilon floor must lie in (0, 0.5)");
    BernoulliParams p;
    const std::size_t classes = data.class_count();
    p.signatures.reserve(classes);
    p.raw_flip_probs.reserve(classes);
    p.flip_probs.reserve(classes);
    for (std::uint32_t c = 0; c < classes; ++c) {
        auto fit = fit_bernoulli_class(data.class_samples(ClassIndex{c}));
        std::vector<double> eps = fit.raw_flip_probs;
        for (auto& e : eps) e = std::max(e, epsilon_floor);
        p.signatures.push_back(std::move(fit.signature));
        p.raw_flip_probs.push_back(std::move(fit.raw_flip_probs));
        p.flip_probs.push_back(std::move(eps));
    }
    p.refresh_weights();
    return p;
}

/// argmin over the given candidate classes; ties go to the lowest class index
/// regardless of candidate order.
inline ClassIndex detect_bernoulli(const BinaryObservation& r, const BernoulliParams& params,
                                   std::span<const ClassIndex> candidates,
                                   BernoulliScoring mode = BernoulliScoring::weighted_hamming) {
    detail::require(!candidates.empty(), "detect_bernoulli: empty candidate set");
    detail::require(r.size() == params.dimension(), "detect_bernoulli: observation length mismatch");
    ClassIndex best = candidates.front();
    double best_score = std::numeric_limits<double>::infinity();
    for (const auto c : candidates) {
        const double s = params.score(r, c, mode);
        if (s < best_score || (s == best_score && c < best)) {
            best_score = s;
            best = c;
        }
    }
    return best;
}

/// Full search over every class.
inline ClassIndex detect_bernoulli(const BinaryObservation& r, const BernoulliParams& params,
                                   BernoulliScoring mode = BernoulliScoring::weighted_hamming) {
    detail::require(params.class_count() > 0, "detect_bernoulli: no classes");
    detail::require(r.size() == params.dimension(), "detect_bernoulli: observation length mismatch");
    ClassIndex best{0};
    double best_score = std::numeric_limits<double>::infinity();
    for (std::uint32_t c = 0; c < params.class_count(); ++c) {
        const double s = params.score(r, ClassIndex{c}, mode);
        if (s < best_score) {
            best_score = s;
            best = ClassIndex{c};
        }
    }
    return best;
}

}  // namespace onebit
