// Train every detector on one channel realization and decode a few messages.

#include <cstdio>
#include <random>

#include "onebit/onebit.hpp"

int main() {
    using namespace onebit;

    SystemConfig sys;
    sys.sources = 3;
    sys.rx_antennas = 16;
    sys.relays = 16;
    sys.snr_db = 2.0;

    std::mt19937_64 rng(2024);
    const auto channel = draw_channel(sys, rng);
    const auto data = collect_training(channel, sys, 15, rng);

    const auto centroid = fit_centroid(data);
    const auto gauss = fit_gaussian(data, 0.1);
    const auto bern = fit_bernoulli(data);
    const auto forest = build_forest(bern.signatures, 8, 4, rng);

    const auto qpsk = ConstellationSet::qpsk(sys.tx_power);
    std::uniform_int_distribution<std::uint32_t> pick(0, static_cast<std::uint32_t>(sys.class_count() - 1));
    std::printf("sent  mcd  maha emld mmd  bern lsl  (lsl examined)\n");
    for (int i = 0; i < 8; ++i) {
        const ClassIndex sent{pick(rng)};
        const auto r = transmit(channel, qpsk, class_decode(sent, sys.sources, sys.order), rng);
        SearchStats st;
        const auto lsl = detect_lsl(r, forest, bern, 8, &st);
        std::printf("%-5u %-4u %-4u %-4u %-4u %-4u %-4u %zu\n", sent.value, detect_mcd(r, centroid).value,
                    detect_mahalanobis(r, gauss).value, detect_emld(r, data, 5).value, detect_mmd(r, data).value,
                    detect_bernoulli(r, bern).value, lsl.value, st.examined);
    }
}
