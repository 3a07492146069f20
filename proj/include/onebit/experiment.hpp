#pragma once

// Monte-Carlo BER harness: per SNR point and channel realization, draw a
// channel, collect pilots, fit the requested detectors, send uniformly drawn
// payload messages and count message-bit errors.

#include <atomic>
#include <bit>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <limits>
#include <mutex>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <thread>
#include <vector>

#include "onebit/bernoulli.hpp"
#include "onebit/centroid.hpp"
#include "onebit/dataset.hpp"
#include "onebit/error.hpp"
#include "onebit/gaussian.hpp"
#include "onebit/hamming_forest.hpp"
#include "onebit/nearest_neighbor.hpp"
#include "onebit/netsim.hpp"

namespace onebit {

enum class DetectorKind { mcd, mahalanobis, emld, mmd, bernoulli, lsl };

inline std::string_view detector_name(DetectorKind k) {
    switch (k) {
        case DetectorKind::mcd: return "mcd";
        case DetectorKind::mahalanobis: return "mahalanobis";
        case DetectorKind::emld: return "emld";
        case DetectorKind::mmd: return "mmd";
        case DetectorKind::bernoulli: return "bernoulli";
        case DetectorKind::lsl: return "lsl";
    }
    return "?";
}

inline std::optional<DetectorKind> parse_detector(std::string_view name) {
    for (auto k : {DetectorKind::mcd, DetectorKind::mahalanobis, DetectorKind::emld, DetectorKind::mmd,
                   DetectorKind::bernoulli, DetectorKind::lsl})
        if (detector_name(k) == name) return k;
    return std::nullopt;
}

struct LslSettings {
    std::size_t branching = 32;  // J
    std::size_t trees = 4;       // W
    std::size_t max_candidates = 16;  // L_max
};

struct ExperimentConfig {
    SystemConfig system{.sources = 2, .rx_antennas = 8, .relays = 8};
    std::size_t pilots = 15;  // T
    std::vector<DetectorKind> detectors{DetectorKind::bernoulli, DetectorKind::mcd};
    std::size_t emld_k = 5;
    LslSettings lsl;
    std::vector<double> snr_grid_db{0.0, 5.0, 10.0};
    std::size_t channel_realizations = 10;
    std::size_t payload_symbols_per_realization = 1000;
    std::uint64_t seed = 1;
    double shrinkage_lambda = 0.1;
    double epsilon_floor = default_epsilon_floor;
    bool exact_likelihood = false;
    bool measure_time = false;  // detect_us stays 0 unless set, keeping output a function of the config
    std::size_t workers = 0;    // 0 = hardware concurrency
    std::vector<std::size_t> lmax_grid;  // sweep-lmax only
};

struct BerRecord {
    std::string detector;
    double snr_db = 0.0;
    std::uint64_t errors = 0;
    std::uint64_t bits = 0;
    double ber = 0.0;
    double dist_evals = 0.0;  // mean distance evaluations per detection
    double detect_us = 0.0;   // mean wall time per detection, microseconds

    friend bool operator==(const BerRecord&, const BerRecord&) = default;
};

/// One detector column of an experiment; lsl entries carry their own budget.
struct DetectorSpec {
    DetectorKind kind;
    std::size_t max_candidates = 0;
    std::string name;
};

// ---------------------------------------------------------------------------
// configuration

namespace detail {

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split_list(std::string_view s) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= s.size()) {
        const auto comma = s.find(',', start);
        const auto item = trim(s.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
        if (!item.empty()) out.push_back(item);
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

inline std::uint64_t parse_unsigned(const std::string& key, const std::string& v) {
    std::uint64_t out = 0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || p != v.data() + v.size()) throw ConfigError(key, "expected a non-negative integer, got '" + v + "'");
    return out;
}

inline double parse_real(const std::string& key, const std::string& v) {
    double out = 0.0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || p != v.data() + v.size()) throw ConfigError(key, "expected a number, got '" + v + "'");
    return out;
}

inline bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ConfigError(key, "expected a boolean, got '" + v + "'");
}

}  // namespace detail

inline std::vector<DetectorKind> parse_detector_list(const std::string& key, const std::string& value) {
    std::vector<DetectorKind> out;
    for (const auto& item : detail::split_list(value)) {
        const auto k = parse_detector(item);
        if (!k) throw ConfigError(key, "unknown detector '" + item + "'");
        out.push_back(*k);
    }
    return out;
}

/// Sets one field by its config-file key.
inline void apply_setting(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
    using detail::parse_real;
    using detail::parse_unsigned;
    if (key == "K") cfg.system.sources = parse_unsigned(key, value);
    else if (key == "N_r") cfg.system.rx_antennas = parse_unsigned(key, value);
    else if (key == "L") cfg.system.relays = parse_unsigned(key, value);
    else if (key == "hops") cfg.system.hops = parse_unsigned(key, value);
    else if (key == "m") cfg.system.order = parse_unsigned(key, value);
    else if (key == "P_t") cfg.system.tx_power = parse_real(key, value);
    else if (key == "T") cfg.pilots = parse_unsigned(key, value);
    else if (key == "detectors") cfg.detectors = parse_detector_list(key, value);
    else if (key == "emld_k") cfg.emld_k = parse_unsigned(key, value);
    else if (key == "lsl_J") cfg.lsl.branching = parse_unsigned(key, value);
    else if (key == "lsl_W") cfg.lsl.trees = parse_unsigned(key, value);
    else if (key == "lsl_L_max") cfg.lsl.max_candidates = parse_unsigned(key, value);
    else if (key == "snr_grid_db") {
        cfg.snr_grid_db.clear();
        for (const auto& item : detail::split_list(value)) cfg.snr_grid_db.push_back(parse_real(key, item));
    } else if (key == "channel_realizations") cfg.channel_realizations = parse_unsigned(key, value);
    else if (key == "payload_symbols_per_realization") cfg.payload_symbols_per_realization = parse_unsigned(key, value);
    else if (key == "seed") cfg.seed = parse_unsigned(key, value);
    else if (key == "shrinkage_lambda") cfg.shrinkage_lambda = parse_real(key, value);
    else if (key == "epsilon_floor") cfg.epsilon_floor = parse_real(key, value);
    else if (key == "exact_likelihood") cfg.exact_likelihood = detail::parse_bool(key, value);
    else if (key == "measure_time") cfg.measure_time = detail::parse_bool(key, value);
    else if (key == "workers") cfg.workers = parse_unsigned(key, value);
    else if (key == "lmax_grid") {
        cfg.lmax_grid.clear();
        for (const auto& item : detail::split_list(value)) cfg.lmax_grid.push_back(parse_unsigned(key, item));
    } else
        throw ConfigError(key, "unknown configuration key");
}

/// Parses `key = value` lines; `#` starts a comment. Later lines override earlier ones.
inline void apply_config_text(ExperimentConfig& cfg, std::istream& in) {
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const auto body = detail::trim(line);
        if (body.empty()) continue;
        const auto eq = body.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno), "expected 'key = value'");
        apply_setting(cfg, detail::trim(std::string_view(body).substr(0, eq)),
                      detail::trim(std::string_view(body).substr(eq + 1)));
    }
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path);
    ExperimentConfig cfg;
    apply_config_text(cfg, in);
    return cfg;
}

inline void validate(const ExperimentConfig& cfg) {
    cfg.system.validate();
    if (cfg.pilots == 0) throw ConfigError("T", "must be positive");
    if (cfg.detectors.empty()) throw ConfigError("detectors", "must name at least one detector");
    if (cfg.snr_grid_db.empty()) throw ConfigError("snr_grid_db", "must contain at least one SNR");
    for (const double s : cfg.snr_grid_db)
        if (std::isnan(s) || (std::isinf(s) && s < 0)) throw ConfigError("snr_grid_db", "entries must be numbers or inf");
    if (cfg.channel_realizations == 0) throw ConfigError("channel_realizations", "must be positive");
    if (cfg.payload_symbols_per_realization == 0)
        throw ConfigError("payload_symbols_per_realization", "must be positive");
    if (!(cfg.shrinkage_lambda >= 0.0 && cfg.shrinkage_lambda <= 1.0))
        throw ConfigError("shrinkage_lambda", "must lie in [0, 1]");
    if (!(cfg.epsilon_floor > 0.0 && cfg.epsilon_floor < 0.5))
        throw ConfigError("epsilon_floor", "must lie in (0, 0.5)");
    const auto classes = cfg.system.class_count();
    for (const auto d : cfg.detectors) {
        if ((d == DetectorKind::emld) && (cfg.emld_k == 0 || cfg.emld_k > classes * cfg.pilots))
            throw ConfigError("emld_k", "must lie in [1, T*m^K]");
        if (d == DetectorKind::lsl) {
            if (cfg.lsl.branching < 2) throw ConfigError("lsl_J", "must be >= 2");
            if (cfg.lsl.trees == 0) throw ConfigError("lsl_W", "must be positive");
            if (cfg.lsl.max_candidates == 0 || cfg.lsl.max_candidates > classes)
                throw ConfigError("lsl_L_max", "must lie in [1, m^K]");
        }
    }
}

// ---------------------------------------------------------------------------
// Monte-Carlo driver

/// Random stream for one channel realization; identical for every SNR point,
/// so the SNR sweep uses common random numbers.
inline std::mt19937_64 realization_stream(std::uint64_t seed, std::size_t realization, std::uint32_t purpose = 0) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(realization), static_cast<std::uint32_t>(realization >> 32), purpose};
    return std::mt19937_64(seq);
}

/// Message-bit errors between two classes under the natural binary labels of
/// each symbol (the Gray labels of the constellation).
inline std::uint64_t bit_errors(ClassIndex sent, ClassIndex detected, std::size_t sources, std::size_t order) {
    const auto a = class_decode(sent, sources, order);
    const auto b = class_decode(detected, sources, order);
    std::uint64_t e = 0;
    for (std::size_t k = 0; k < sources; ++k) e += static_cast<std::uint64_t>(std::popcount(a.symbols[k] ^ b.symbols[k]));
    return e;
}

namespace detail {

struct Tally {
    std::uint64_t errors = 0;
    std::uint64_t detections = 0;
    double dist_evals = 0.0;
    double seconds = 0.0;
};

inline constexpr std::uint32_t forest_stream = 0x466f72u;

/// Runs one (SNR, realization) cell and adds into tallies[spec].
inline void run_cell(const ExperimentConfig& cfg, const std::vector<DetectorSpec>& specs, double snr_db,
                     std::size_t realization, std::vector<Tally>& tallies) {
    SystemConfig sys = cfg.system;
    sys.snr_db = snr_db;
    const std::size_t classes = sys.class_count();
    const auto mode = cfg.exact_likelihood ? BernoulliScoring::exact_likelihood : BernoulliScoring::weighted_hamming;

    auto rng = realization_stream(cfg.seed, realization);
    const auto channel = draw_channel(sys, rng);
    const auto data = collect_training(channel, sys, cfg.pilots, rng);

    bool need_centroid = false, need_gauss = false, need_bern = false, need_forest = false;
    for (const auto& s : specs) {
        need_centroid |= s.kind == DetectorKind::mcd;
        need_gauss |= s.kind == DetectorKind::mahalanobis;
        need_bern |= s.kind == DetectorKind::bernoulli || s.kind == DetectorKind::lsl;
        need_forest |= s.kind == DetectorKind::lsl;
    }
    std::optional<CentroidParams> centroid;
    std::optional<GaussianParams> gauss;
    std::optional<BernoulliParams> bern;
    std::optional<ClusterForest> forest;
    if (need_centroid) centroid = fit_centroid(data);
    if (need_gauss) gauss = fit_gaussian(data, cfg.shrinkage_lambda);
    if (need_bern) bern = fit_bernoulli(data, cfg.epsilon_floor);
    if (need_forest) {
        auto frng = realization_stream(cfg.seed, realization, forest_stream);
        forest = build_forest(bern->signatures, cfg.lsl.branching, cfg.lsl.trees, frng);
    }

    const auto constellation = ConstellationSet::for_order(sys.order, sys.tx_power);
    std::uniform_int_distribution<std::uint32_t> pick(0, static_cast<std::uint32_t>(classes - 1));
    const double full = static_cast<double>(classes);
    for (std::size_t p = 0; p < cfg.payload_symbols_per_realization; ++p) {
        const ClassIndex sent{pick(rng)};
        const auto r = transmit(channel, constellation, class_decode(sent, sys.sources, sys.order), rng);
        for (std::size_t s = 0; s < specs.size(); ++s) {
            const auto t0 = cfg.measure_time ? std::chrono::steady_clock::now() : std::chrono::steady_clock::time_point{};
            ClassIndex got;
            double evals = full;
            switch (specs[s].kind) {
                case DetectorKind::mcd: got = detect_mcd(r, *centroid); break;
                case DetectorKind::mahalanobis: got = detect_mahalanobis(r, *gauss); break;
                case DetectorKind::emld:
                    got = detect_emld(r, data, cfg.emld_k);
                    evals = static_cast<double>(data.size());
                    break;
                case DetectorKind::mmd:
                    got = detect_mmd(r, data);
                    evals = static_cast<double>(data.size());
                    break;
                case DetectorKind::bernoulli: got = detect_bernoulli(r, *bern, mode); break;
                case DetectorKind::lsl: {
                    SearchStats st;
                    got = detect_lsl(r, *forest, *bern, specs[s].max_candidates, &st, mode);
                    evals = static_cast<double>(st.distance_evals());
                    break;
                }
            }
            auto& t = tallies[s];
            if (cfg.measure_time)
                t.seconds += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            t.errors += bit_errors(sent, got, sys.sources, sys.order);
            t.dist_evals += evals;
            ++t.detections;
        }
    }
}

}  // namespace detail

/// Runs every (SNR, realization) cell across `cfg.workers` threads. Counts are
/// integers summed per cell, so results do not depend on the worker count.
inline std::vector<BerRecord> run_specs(const ExperimentConfig& cfg, const std::vector<DetectorSpec>& specs) {
    validate(cfg);
    if (specs.empty()) throw ConfigError("detectors", "must name at least one detector");
    const std::size_t points = cfg.snr_grid_db.size();
    const std::size_t cells = points * cfg.channel_realizations;
    std::vector<std::vector<detail::Tally>> per_cell(cells, std::vector<detail::Tally>(specs.size()));

    std::size_t workers = cfg.workers ? cfg.workers : std::max(1u, std::thread::hardware_concurrency());
    workers = std::min(workers, cells);
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto work = [&] {
        for (std::size_t cell; (cell = next.fetch_add(1)) < cells;) {
            try {
                detail::run_cell(cfg, specs, cfg.snr_grid_db[cell / cfg.channel_realizations],
                                 cell % cfg.channel_realizations, per_cell[cell]);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next.store(cells);
            }
        }
    };
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    }
    if (failure) std::rethrow_exception(failure);

    const auto bits_per_detection = static_cast<std::uint64_t>(cfg.system.sources * cfg.system.bits_per_symbol());
    std::vector<BerRecord> out;
    for (std::size_t i = 0; i < points; ++i) {
        for (std::size_t s = 0; s < specs.size(); ++s) {
            detail::Tally sum;
            for (std::size_t r = 0; r < cfg.channel_realizations; ++r) {
                const auto& t = per_cell[i * cfg.channel_realizations + r][s];
                sum.errors += t.errors;
                sum.detections += t.detections;
                sum.dist_evals += t.dist_evals;
                sum.seconds += t.seconds;
            }
            BerRecord rec;
            rec.detector = specs[s].name;
            rec.snr_db = cfg.snr_grid_db[i];
            rec.errors = sum.errors;
            rec.bits = sum.detections * bits_per_detection;
            rec.ber = rec.bits ? static_cast<double>(rec.errors) / static_cast<double>(rec.bits) : 0.0;
            rec.dist_evals = sum.detections ? sum.dist_evals / static_cast<double>(sum.detections) : 0.0;
            rec.detect_us = sum.detections ? 1e6 * sum.seconds / static_cast<double>(sum.detections) : 0.0;
            out.push_back(std::move(rec));
        }
    }
    return out;
}

inline std::vector<DetectorSpec> detector_specs(const ExperimentConfig& cfg) {
    std::vector<DetectorSpec> specs;
    for (const auto d : cfg.detectors)
        specs.push_back({d, d == DetectorKind::lsl ? cfg.lsl.max_candidates : 0, std::string(detector_name(d))});
    return specs;
}

inline std::vector<BerRecord> run_experiment(const ExperimentConfig& cfg) { return run_specs(cfg, detector_specs(cfg)); }

/// Full-search Bernoulli baseline plus one lsl column per budget in lmax_grid, named "lsl@<L_max>".
inline std::vector<BerRecord> sweep_lmax(ExperimentConfig cfg) {
    if (cfg.lmax_grid.empty()) throw ConfigError("lmax_grid", "must list at least one L_max");
    const auto classes = cfg.system.class_count();
    std::vector<DetectorSpec> specs{{DetectorKind::bernoulli, 0, "bernoulli"}};
    for (const auto l : cfg.lmax_grid) {
        if (l == 0 || l > classes) throw ConfigError("lmax_grid", "entries must lie in [1, m^K]");
        specs.push_back({DetectorKind::lsl, l, "lsl@" + std::to_string(l)});
    }
    cfg.detectors = {DetectorKind::bernoulli, DetectorKind::lsl};
    cfg.lsl.max_candidates = cfg.lmax_grid.front();
    return run_specs(cfg, specs);
}

// ---------------------------------------------------------------------------
// CSV

inline constexpr std::string_view csv_header = "detector,snr_db,errors,bits,ber,dist_evals,detect_us";

namespace detail {

inline std::string format_real(double v) {
    char buf[64];
    const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, p);
}

inline std::string format_uint(std::uint64_t v) {
    char buf[32];
    const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, p);
}

}  // namespace detail

/// Shortest round-trip decimal formatting via to_chars, independent of the locale.
inline void write_csv(std::ostream& out, const std::vector<BerRecord>& records) {
    out << csv_header << '\n';
    for (const auto& r : records)
        out << r.detector << ',' << detail::format_real(r.snr_db) << ',' << detail::format_uint(r.errors) << ','
            << detail::format_uint(r.bits) << ',' << detail::format_real(r.ber) << ','
            << detail::format_real(r.dist_evals) << ',' << detail::format_real(r.detect_us) << '\n';
}

inline std::vector<BerRecord> read_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != csv_header) throw IoError("csv: missing or unexpected header");
    std::vector<BerRecord> out;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
        if (f.size() != 7) throw IoError("csv: expected 7 fields in '" + line + "'");
        try {
            BerRecord r;
            r.detector = f[0];
            r.snr_db = detail::parse_real("snr_db", f[1]);
            r.errors = detail::parse_unsigned("errors", f[2]);
            r.bits = detail::parse_unsigned("bits", f[3]);
            r.ber = detail::parse_real("ber", f[4]);
            r.dist_evals = detail::parse_real("dist_evals", f[5]);
            r.detect_us = detail::parse_real("detect_us", f[6]);
            out.push_back(std::move(r));
        } catch (const ConfigError& e) {
            throw IoError(std::string("csv: ") + e.what());
        }
    }
    return out;
}

/// Writes to a sibling temporary file and renames it into place, so a failed
/// write never leaves a partial CSV at `path`.
inline void emit_csv(const std::vector<BerRecord>& records, const std::string& path) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open " + path + " for writing");
        write_csv(out, records);
        out.close();
        if (!out) {
            std::remove(tmp.c_str());
            throw IoError("write to " + path + " failed");
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::remove(tmp.c_str());
        throw IoError("cannot write " + path + ": " + ec.message());
    }
}

inline std::vector<BerRecord> load_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path + " for reading");
    return read_csv(in);
}

}  // namespace onebit
