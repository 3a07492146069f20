#pragma once

// Test-only reference implementations. They work on plain std::vector<int>
// +/-1 vectors and linear scans, independent of the bit-packed fast paths.

#include <cmath>
#include <cstddef>
#include <limits>
#include <random>
#include <vector>

#include "onebit/binary_observation.hpp"

namespace onebit::oracle {

using Signs = std::vector<int>;

inline Signs random_signs(std::size_t n, std::mt19937_64& rng) {
    std::bernoulli_distribution coin(0.5);
    Signs v(n);
    for (auto& x : v) x = coin(rng) ? 1 : -1;
    return v;
}

inline BinaryObservation to_obs(const Signs& s) { return BinaryObservation::from_signs(s); }

inline Signs flip_each(const Signs& s, double p, std::mt19937_64& rng) {
    std::bernoulli_distribution flip(p);
    Signs out = s;
    for (auto& x : out)
        if (flip(rng)) x = -x;
    return out;
}

inline std::size_t hamming(const Signs& a, const Signs& b) {
    std::size_t d = 0;
    for (std::size_t i = 0; i < a.size(); ++i) d += a[i] != b[i];
    return d;
}

inline double squared_distance(const Signs& r, const std::vector<double>& mu) {
    double d = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) d += (r[i] - mu[i]) * (r[i] - mu[i]);
    return d;
}

/// Product over samples and coordinates of eps^[r != mu] (1 - eps)^[r == mu], evaluated literally.
inline double bernoulli_likelihood(const std::vector<Signs>& samples, const Signs& mu, const std::vector<double>& eps) {
    double l = 1.0;
    for (const auto& r : samples)
        for (std::size_t i = 0; i < mu.size(); ++i) l *= (r[i] != mu[i]) ? eps[i] : (1.0 - eps[i]);
    return l;
}

/// Bernoulli quadratic form (r - mu)^T diag[-log eps] (r - mu), coordinate by coordinate.
inline double bernoulli_quadratic(const Signs& r, const Signs& mu, const std::vector<double>& eps) {
    double s = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) s += (r[i] - mu[i]) * (r[i] - mu[i]) * -std::log(eps[i]);
    return s;
}

template <class Score>
std::size_t linear_argmin(std::size_t count, Score&& score) {
    std::size_t best = 0;
    double best_s = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < count; ++c) {
        const double s = score(c);
        if (s < best_s) {
            best_s = s;
            best = c;
        }
    }
    return best;
}

}  // namespace onebit::oracle
