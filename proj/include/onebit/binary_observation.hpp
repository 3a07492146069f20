#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "onebit/error.hpp"

namespace onebit {

/// One-bit quantizer: +1 for u >= 0 (including -0.0), -1 otherwise.
inline int sign_quantize(double u) noexcept { return u >= 0.0 ? 1 : -1; }

/// A vector in {-1,+1}^N, stored bit-packed.
///
/// A set bit encodes -1, a clear bit +1, so a default-constructed vector of
/// size N is all +1. Padding bits in the last word are always clear, which
/// keeps word-wise XOR/popcount exact.
class BinaryObservation {
public:
    using word_type = std::uint64_t;
    static constexpr std::size_t word_bits = 64;

    BinaryObservation() = default;

    explicit BinaryObservation(std::size_t size)
        : size_(size), words_((size + word_bits - 1) / word_bits, 0) {}

    /// Builds from explicit +/-1 entries; anything else is a contract violation.
    static BinaryObservation from_signs(std::span<const int> signs) {
        BinaryObservation out(signs.size());
        for (std::size_t i = 0; i < signs.size(); ++i) {
            if (signs[i] != 1 && signs[i] != -1)
                throw ContractViolation("BinaryObservation entries must be -1 or +1");
            out.set(i, signs[i]);
        }
        return out;
    }

    static BinaryObservation from_signs(std::initializer_list<int> signs) {
        return from_signs(std::span<const int>(signs.begin(), signs.size()));
    }

    /// Applies the sign quantizer elementwise.
    template <class Derived>
    static BinaryObservation quantize(const Eigen::DenseBase<Derived>& values) {
        BinaryObservation out(static_cast<std::size_t>(values.size()));
        for (Eigen::Index i = 0; i < values.size(); ++i)
            out.set(static_cast<std::size_t>(i), sign_quantize(values(i)));
        return out;
    }

    std::size_t size() const noexcept { return size_; }

    int operator[](std::size_t i) const noexcept {
        return (words_[i / word_bits] >> (i % word_bits)) & 1u ? -1 : 1;
    }

    void set(std::size_t i, int sign) noexcept {
        const word_type mask = word_type{1} << (i % word_bits);
        if (sign < 0)
            words_[i / word_bits] |= mask;
        else
            words_[i / word_bits] &= ~mask;
    }

    std::span<const word_type> words() const noexcept { return words_; }

    Eigen::VectorXd to_real() const {
        Eigen::VectorXd v(static_cast<Eigen::Index>(size_));
        for (std::size_t i = 0; i < size_; ++i) v(static_cast<Eigen::Index>(i)) = (*this)[i];
        return v;
    }

    std::vector<int> to_signs() const {
        std::vector<int> v(size_);
        for (std::size_t i = 0; i < size_; ++i) v[i] = (*this)[i];
        return v;
    }

    friend bool operator==(const BinaryObservation&, const BinaryObservation&) = default;

private:
    std::size_t size_ = 0;
    std::vector<word_type> words_;
};

/// Number of coordinates where a and b differ.
inline std::size_t hamming_distance(const BinaryObservation& a, const BinaryObservation& b) {
    detail::require(a.size() == b.size(), "hamming_distance: size mismatch");
    const auto wa = a.words();
    const auto wb = b.words();
    std::size_t d = 0;
    for (std::size_t w = 0; w < wa.size(); ++w) d += static_cast<std::size_t>(std::popcount(wa[w] ^ wb[w]));
    return d;
}

/// Calls fn(i) for every coordinate i where a and b differ, in ascending order.
template <class Fn>
void for_each_difference(const BinaryObservation& a, const BinaryObservation& b, Fn&& fn) {
    const auto wa = a.words();
    const auto wb = b.words();
    for (std::size_t w = 0; w < wa.size(); ++w) {
        auto diff = wa[w] ^ wb[w];
        while (diff) {
            fn(w * BinaryObservation::word_bits + static_cast<std::size_t>(std::countr_zero(diff)));
            diff &= diff - 1;
        }
    }
}

}  // namespace onebit
