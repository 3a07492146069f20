#pragma once

// Multihop amplify-and-forward uplink with Rayleigh fading and one-bit ADCs
// at the data center.

#include <bit>
#include <cmath>
#include <complex>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "onebit/binary_observation.hpp"
#include "onebit/error.hpp"

namespace onebit {

using complex_t = std::complex<double>;

struct SystemConfig {
    std::size_t sources = 1;      // K
    std::size_t rx_antennas = 1;  // N_r, at the data center
    std::size_t relays = 1;       // L, single-antenna relays per stage
    std::size_t hops = 2;
    std::size_t order = 4;  // m
    double tx_power = 1.0;  // P_t, shared by sources and relays
    double snr_db = 10.0;   // +inf means noiseless

    std::size_t observation_size() const noexcept { return 2 * rx_antennas; }

    std::size_t bits_per_symbol() const noexcept {
        return static_cast<std::size_t>(std::countr_zero(order));
    }

    /// |M| = m^K.
    std::size_t class_count() const {
        std::size_t n = 1;
        for (std::size_t k = 0; k < sources; ++k) {
            if (n > std::numeric_limits<std::uint32_t>::max() / order)
                throw ConfigError("K", "m^K exceeds the supported class count");
            n *= order;
        }
        return n;
    }

    /// sigma_z^2 = P_t / SNR.
    double noise_variance() const {
        if (std::isinf(snr_db) && snr_db > 0) return 0.0;
        return tx_power / std::pow(10.0, snr_db / 10.0);
    }

    double noise_std() const { return std::sqrt(noise_variance()); }

    void validate() const {
        if (sources == 0) throw ConfigError("K", "must be positive");
        if (rx_antennas < sources) throw ConfigError("N_r", "must be >= K");
        if (relays == 0) throw ConfigError("L", "must be positive");
        if (hops == 0) throw ConfigError("hops", "must be >= 1");
        if (order < 2 || !std::has_single_bit(order))
            throw ConfigError("m", "must be a power of two >= 2");
        if (!(tx_power > 0.0) || !std::isfinite(tx_power)) throw ConfigError("P_t", "must be positive");
        if (std::isnan(snr_db) || (std::isinf(snr_db) && snr_db < 0))
            throw ConfigError("snr_db", "must be a number or +inf");
        (void)class_count();
    }
};

/// Ordered m-ary symbol set S with (1/m) sum |s_i|^2 = P_t.
class ConstellationSet {
public:
    explicit ConstellationSet(std::vector<complex_t> symbols) : symbols_(std::move(symbols)) {
        if (symbols_.empty()) throw ContractViolation("constellation must be nonempty");
    }

    /// Gray-labelled QPSK: 0 -> (+1+j), 1 -> (-1+j), 2 -> (+1-j), 3 -> (-1-j), all scaled by sqrt(P_t/2).
    static ConstellationSet qpsk(double tx_power = 1.0) {
        const double a = std::sqrt(tx_power / 2.0);
        return ConstellationSet({{a, a}, {-a, a}, {a, -a}, {-a, -a}});
    }

    static ConstellationSet bpsk(double tx_power = 1.0) {
        const double a = std::sqrt(tx_power);
        return ConstellationSet({{a, 0.0}, {-a, 0.0}});
    }

    /// m-PSK with label w placed at the circle position whose Gray code is w.
    static ConstellationSet gray_psk(std::size_t order, double tx_power = 1.0) {
        std::vector<complex_t> s(order);
        const double r = std::sqrt(tx_power);
        for (std::size_t pos = 0; pos < order; ++pos) {
            const double phase = std::numbers::pi * (2.0 * static_cast<double>(pos) + 1.0) / static_cast<double>(order);
            s[pos ^ (pos >> 1)] = std::polar(r, phase);
        }
        return ConstellationSet(std::move(s));
    }

    /// The constellation used for a given order: BPSK, the QPSK table, or Gray m-PSK.
    static ConstellationSet for_order(std::size_t order, double tx_power = 1.0) {
        if (order == 2) return bpsk(tx_power);
        if (order == 4) return qpsk(tx_power);
        return gray_psk(order, tx_power);
    }

    std::size_t size() const noexcept { return symbols_.size(); }
    const std::vector<complex_t>& symbols() const noexcept { return symbols_; }

    double average_power() const {
        double p = 0.0;
        for (const auto& s : symbols_) p += std::norm(s);
        return p / static_cast<double>(symbols_.size());
    }

    complex_t modulate(std::uint32_t w) const {
        if (w >= symbols_.size())
            throw InvalidMessage("message symbol " + std::to_string(w) + " outside constellation of order " +
                                 std::to_string(symbols_.size()));
        return symbols_[w];
    }

private:
    std::vector<complex_t> symbols_;
};

/// Joint message (w_1, ..., w_K) of the K sources.
struct MessageVector {
    std::vector<std::uint32_t> symbols;

    std::size_t size() const noexcept { return symbols.size(); }
    friend bool operator==(const MessageVector&, const MessageVector&) = default;
};

/// Index of a joint message in M = {0, ..., m^K - 1}.
struct ClassIndex {
    std::uint32_t value = 0;

    friend auto operator<=>(const ClassIndex&, const ClassIndex&) = default;
};

/// c = sum_k w_k m^(K-k), with w_1 most significant.
inline ClassIndex class_encode(const MessageVector& w, std::size_t order) {
    std::uint64_t c = 0;
    for (const auto s : w.symbols) {
        if (s >= order) throw InvalidMessage("message symbol " + std::to_string(s) + " >= m");
        c = c * order + s;
        if (c > std::numeric_limits<std::uint32_t>::max()) throw InvalidMessage("class index overflow");
    }
    return ClassIndex{static_cast<std::uint32_t>(c)};
}

inline MessageVector class_decode(ClassIndex c, std::size_t sources, std::size_t order) {
    MessageVector w{std::vector<std::uint32_t>(sources)};
    std::uint64_t rest = c.value;
    for (std::size_t k = sources; k-- > 0;) {
        w.symbols[k] = static_cast<std::uint32_t>(rest % order);
        rest /= order;
    }
    if (rest != 0) throw InvalidMessage("class index " + std::to_string(c.value) + " >= m^K");
    return w;
}

/// Channel state for one coherence block: hop matrices (K -> L -> ... -> N_r),
/// per-relay AF gains for every relay stage, and the shared receiver noise std.
class ChannelRealization {
public:
    ChannelRealization(std::vector<Eigen::MatrixXcd> hop_matrices, std::vector<Eigen::VectorXd> af_gains,
                       double noise_std)
        : hops_(std::move(hop_matrices)), gains_(std::move(af_gains)), noise_std_(noise_std) {
        if (hops_.empty()) throw ContractViolation("channel needs at least one hop");
        if (gains_.size() + 1 != hops_.size()) throw ContractViolation("one gain vector per relay stage");
        for (std::size_t h = 0; h + 1 < hops_.size(); ++h) {
            if (hops_[h + 1].cols() != hops_[h].rows())
                throw ContractViolation("hop matrix dimensions do not chain");
            if (gains_[h].size() != hops_[h].rows()) throw ContractViolation("gain vector size != relay count");
            if ((gains_[h].array() <= 0.0).any()) throw ContractViolation("AF gains must be positive");
        }
        if (!(noise_std_ >= 0.0)) throw ContractViolation("noise std must be >= 0");
    }

    std::size_t sources() const noexcept { return static_cast<std::size_t>(hops_.front().cols()); }
    std::size_t rx_antennas() const noexcept { return static_cast<std::size_t>(hops_.back().rows()); }
    std::size_t observation_size() const noexcept { return 2 * rx_antennas(); }

    const std::vector<Eigen::MatrixXcd>& hop_matrices() const noexcept { return hops_; }
    const std::vector<Eigen::VectorXd>& af_gains() const noexcept { return gains_; }
    double noise_std() const noexcept { return noise_std_; }

private:
    std::vector<Eigen::MatrixXcd> hops_;
    std::vector<Eigen::VectorXd> gains_;
    double noise_std_;
};

namespace detail {

template <class Rng>
complex_t complex_gaussian(std::normal_distribution<double>& normal, Rng& rng, double std_dev) {
    const double s = std_dev / std::numbers::sqrt2;
    const double re = normal(rng);
    const double im = normal(rng);
    return {s * re, s * im};
}

}  // namespace detail

/// Draws every hop matrix i.i.d. CN(0,1) and sets each relay's gain to
/// beta = sqrt(P_t / (P_t * sum_k |h_k|^2 + sigma_z^2)).
template <class Rng>
ChannelRealization draw_channel(const SystemConfig& config, Rng& rng) {
    config.validate();
    std::normal_distribution<double> normal(0.0, 1.0);

    std::vector<Eigen::Index> dims;
    dims.push_back(static_cast<Eigen::Index>(config.sources));
    for (std::size_t h = 0; h + 1 < config.hops; ++h) dims.push_back(static_cast<Eigen::Index>(config.relays));
    dims.push_back(static_cast<Eigen::Index>(config.rx_antennas));

    const double sigma2 = config.noise_variance();
    std::vector<Eigen::MatrixXcd> hops;
    std::vector<Eigen::VectorXd> gains;
    for (std::size_t h = 0; h + 1 < dims.size(); ++h) {
        Eigen::MatrixXcd H(dims[h + 1], dims[h]);
        for (Eigen::Index j = 0; j < H.cols(); ++j)
            for (Eigen::Index i = 0; i < H.rows(); ++i) H(i, j) = detail::complex_gaussian(normal, rng, 1.0);
        if (h + 2 < dims.size()) {
            Eigen::VectorXd beta(H.rows());
            for (Eigen::Index i = 0; i < H.rows(); ++i)
                beta(i) = std::sqrt(config.tx_power / (config.tx_power * H.row(i).squaredNorm() + sigma2));
            gains.push_back(std::move(beta));
        }
        hops.push_back(std::move(H));
    }
    return ChannelRealization(std::move(hops), std::move(gains), std::sqrt(sigma2));
}

/// Sends one joint message through the network: fresh CN(0, sigma_z^2) noise at
/// every relay and data-center antenna, AF scaling at each relay, then the
/// [Re; Im] stacking and sign quantizer at the data center.
template <class Rng>
BinaryObservation transmit(const ChannelRealization& channel, const ConstellationSet& constellation,
                           const MessageVector& w, Rng& rng) {
    if (w.size() != channel.sources())
        throw ContractViolation("message length " + std::to_string(w.size()) + " != source count " +
                                std::to_string(channel.sources()));
    std::normal_distribution<double> normal(0.0, 1.0);
    const double sigma = channel.noise_std();

    Eigen::VectorXcd signal(static_cast<Eigen::Index>(w.size()));
    for (std::size_t k = 0; k < w.size(); ++k) signal(static_cast<Eigen::Index>(k)) = constellation.modulate(w.symbols[k]);

    const auto& hops = channel.hop_matrices();
    const auto& gains = channel.af_gains();
    for (std::size_t h = 0; h < hops.size(); ++h) {
        Eigen::VectorXcd received = hops[h] * signal;
        for (Eigen::Index i = 0; i < received.size(); ++i) received(i) += detail::complex_gaussian(normal, rng, sigma);
        if (h < gains.size())
            signal = received.cwiseProduct(gains[h].cast<complex_t>());
        else
            signal = std::move(received);
    }

    const auto n_r = static_cast<std::size_t>(signal.size());
    BinaryObservation r(2 * n_r);
    for (std::size_t i = 0; i < n_r; ++i) {
        r.set(i, sign_quantize(signal(static_cast<Eigen::Index>(i)).real()));
        r.set(n_r + i, sign_quantize(signal(static_cast<Eigen::Index>(i)).imag()));
    }
    return r;
}

}  // namespace onebit
