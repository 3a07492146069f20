#pragma once

// Training phase: T labelled pilot observations per class over one channel
// realization, plus a bit-packed on-disk format (docs/dataset-format.md).

#include <array>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "onebit/binary_observation.hpp"
#include "onebit/error.hpp"
#include "onebit/netsim.hpp"

namespace onebit {

/// Observations stored class-major, pilot-minor.
class LabelledDataset {
public:
    LabelledDataset(std::size_t sources, std::size_t order, std::size_t pilots_per_class,
                    std::vector<BinaryObservation> observations)
        : sources_(sources), order_(order), pilots_(pilots_per_class), observations_(std::move(observations)) {
        if (pilots_ == 0) throw ContractViolation("T must be >= 1");
        std::size_t classes = 1;
        for (std::size_t k = 0; k < sources_; ++k) classes *= order_;
        classes_ = classes;
        if (observations_.size() != classes_ * pilots_)
            throw ContractViolation("dataset must hold exactly T observations per class");
        dimension_ = observations_.front().size();
        for (const auto& r : observations_)
            if (r.size() != dimension_) throw ContractViolation("dataset observations differ in length");
    }

    std::size_t sources() const noexcept { return sources_; }
    std::size_t order() const noexcept { return order_; }
    std::size_t class_count() const noexcept { return classes_; }
    std::size_t pilots_per_class() const noexcept { return pilots_; }
    std::size_t dimension() const noexcept { return dimension_; }
    std::size_t size() const noexcept { return observations_.size(); }

    const BinaryObservation& at(ClassIndex c, std::size_t pilot) const {
        return observations_[static_cast<std::size_t>(c.value) * pilots_ + pilot];
    }

    std::span<const BinaryObservation> class_samples(ClassIndex c) const {
        return std::span<const BinaryObservation>(observations_).subspan(static_cast<std::size_t>(c.value) * pilots_,
                                                                        pilots_);
    }

    const std::vector<BinaryObservation>& observations() const noexcept { return observations_; }

    friend bool operator==(const LabelledDataset&, const LabelledDataset&) = default;

private:
    std::size_t sources_;
    std::size_t order_;
    std::size_t pilots_;
    std::size_t classes_ = 0;
    std::size_t dimension_ = 0;
    std::vector<BinaryObservation> observations_;
};

/// For every class c (ascending) sends T pilots of class_decode(c) with fresh noise.
template <class Rng>
LabelledDataset collect_training(const ChannelRealization& channel, const SystemConfig& config, std::size_t pilots,
                                 Rng& rng) {
    if (pilots == 0) throw ContractViolation("T must be >= 1");
    detail::require(channel.sources() == config.sources, "collect_training: channel/config source mismatch");
    const auto constellation = ConstellationSet::for_order(config.order, config.tx_power);
    const std::size_t classes = config.class_count();
    std::vector<BinaryObservation> obs;
    obs.reserve(classes * pilots);
    for (std::uint32_t c = 0; c < classes; ++c) {
        const auto w = class_decode(ClassIndex{c}, config.sources, config.order);
        for (std::size_t t = 0; t < pilots; ++t) obs.push_back(transmit(channel, constellation, w, rng));
    }
    return LabelledDataset(config.sources, config.order, pilots, std::move(obs));
}

struct DatasetFile {
    LabelledDataset dataset;
    std::uint64_t seed = 0;
};

namespace detail {

inline constexpr std::array<char, 8> dataset_magic{'O', 'N', 'E', 'B', 'I', 'T', 'D', 'S'};
inline constexpr std::uint32_t dataset_version = 1;

inline void put_le(std::ostream& out, std::uint64_t v, int bytes) {
    for (int i = 0; i < bytes; ++i) out.put(static_cast<char>((v >> (8 * i)) & 0xffu));
}

inline std::uint64_t get_le(std::istream& in, int bytes) {
    std::uint64_t v = 0;
    for (int i = 0; i < bytes; ++i) {
        const int ch = in.get();
        if (ch == std::char_traits<char>::eof()) throw IoError("dataset: truncated header");
        v |= static_cast<std::uint64_t>(static_cast<unsigned char>(ch)) << (8 * i);
    }
    return v;
}

}  // namespace detail

/// Writes the header (magic, version, K, m, N_r, T, seed) then one bit per
/// entry, class-major, LSB-first within each byte; bit 1 encodes -1.
inline void write_dataset(std::ostream& out, const LabelledDataset& data, std::uint64_t seed) {
    if (data.dimension() % 2 != 0) throw ContractViolation("dataset dimension must be 2*N_r");
    out.write(detail::dataset_magic.data(), detail::dataset_magic.size());
    detail::put_le(out, detail::dataset_version, 4);
    detail::put_le(out, data.sources(), 4);
    detail::put_le(out, data.order(), 4);
    detail::put_le(out, data.dimension() / 2, 4);
    detail::put_le(out, data.pilots_per_class(), 4);
    detail::put_le(out, seed, 8);

    unsigned char byte = 0;
    int filled = 0;
    for (const auto& r : data.observations()) {
        for (std::size_t i = 0; i < r.size(); ++i) {
            if (r[i] < 0) byte |= static_cast<unsigned char>(1u << filled);
            if (++filled == 8) {
                out.put(static_cast<char>(byte));
                byte = 0;
                filled = 0;
            }
        }
    }
    if (filled > 0) out.put(static_cast<char>(byte));
    if (!out) throw IoError("dataset: write failed");
}

inline DatasetFile read_dataset(std::istream& in) {
    std::array<char, 8> magic{};
    in.read(magic.data(), magic.size());
    if (!in || magic != detail::dataset_magic) throw IoError("dataset: bad magic");
    if (detail::get_le(in, 4) != detail::dataset_version) throw IoError("dataset: unsupported version");
    const auto sources = detail::get_le(in, 4);
    const auto order = detail::get_le(in, 4);
    const auto rx = detail::get_le(in, 4);
    const auto pilots = detail::get_le(in, 4);
    const auto seed = detail::get_le(in, 8);
    if (sources == 0 || order < 2 || rx == 0 || pilots == 0) throw IoError("dataset: invalid header");

    std::uint64_t classes = 1;
    for (std::uint64_t k = 0; k < sources; ++k) {
        classes *= order;
        if (classes > std::numeric_limits<std::uint32_t>::max()) throw IoError("dataset: class count overflow");
    }
    const std::size_t dim = 2 * rx;
    const std::uint64_t total_bits = classes * pilots * dim;
    std::vector<unsigned char> bytes((total_bits + 7) / 8);
    in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (static_cast<std::size_t>(in.gcount()) != bytes.size()) throw IoError("dataset: truncated payload");
    if (in.peek() != std::char_traits<char>::eof()) throw IoError("dataset: trailing bytes");
    if (total_bits % 8 != 0 && (bytes.back() >> (total_bits % 8)) != 0) throw IoError("dataset: nonzero padding");

    std::vector<BinaryObservation> obs(classes * pilots, BinaryObservation(dim));
    std::uint64_t bit = 0;
    for (auto& r : obs)
        for (std::size_t i = 0; i < dim; ++i, ++bit)
            if ((bytes[bit / 8] >> (bit % 8)) & 1u) r.set(i, -1);
    return {LabelledDataset(sources, order, pilots, std::move(obs)), seed};
}

inline void save_dataset(const std::string& path, const LabelledDataset& data, std::uint64_t seed) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path + " for writing");
    write_dataset(out, data, seed);
    out.close();
    if (!out) throw IoError("write to " + path + " failed");
}

inline DatasetFile load_dataset(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path + " for reading");
    return read_dataset(in);
}

}  // namespace onebit
