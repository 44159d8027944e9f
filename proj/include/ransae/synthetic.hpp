#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "ransae/dataset.hpp"
#include "ransae/io.hpp"
#include "ransae/rng.hpp"

/// Generator for UGRansome-shaped data, used when the real CSV is not at hand.
/// Classes are A/S/SS; five columns (Time, Clusters, Port, NetflowBytes,
/// Threats) carry class signal, each one "showing" the true class with
/// probability `feature_agreement` and a random class otherwise.
namespace ransae::synthetic {

struct SynthConfig {
    std::size_t unique_rows = 149042;
    std::size_t duplicate_rows = 58491;
    std::size_t bad_time_rows = 1057; // unique rows whose Time is 0
    double feature_agreement = 0.80;
    double label_noise = 0.02;
    std::array<double, 3> class_weights{0.27, 0.44, 0.29}; // A, S, SS
    std::uint64_t seed = 1819;

    /// Same shape with every row count multiplied by `fraction`.
    SynthConfig scaled(double fraction) const
    {
        SynthConfig c = *this;
        auto scale = [fraction](std::size_t n) {
            return static_cast<std::size_t>(std::llround(static_cast<double>(n) * fraction));
        };
        c.unique_rows = scale(unique_rows);
        c.duplicate_rows = scale(duplicate_rows);
        c.bad_time_rows = scale(bad_time_rows);
        return c;
    }

    std::size_t total_rows() const noexcept { return unique_rows + duplicate_rows; }
};

/// Header spellings of the public CSV release.
inline std::vector<std::string> ugransome_header()
{
    return {"Time", "Protcol",       "Flag",      "Family",  "Clusters", "SeedAddress", "ExpAddress",
            "BTC",  "USD",           "Netflow_Bytes", "IPaddress", "Threats", "Port",     "Prediction"};
}

namespace detail {

inline const std::vector<std::string>& families()
{
    static const std::vector<std::string> names{"APT",       "Cerber",    "CryptXXX", "CryptoLocker", "DMALocker",
                                                "EDA2",      "Flyper",    "Globe",    "JigSaw",       "KeRanger",
                                                "Locky",     "NoobCrypt", "Razy",     "SamSam",       "TowerWeb",
                                                "WannaCry"};
    return names;
}

inline std::size_t pick_weighted(SplitMix64& rng, std::span<const double> weights)
{
    double total = 0.0;
    for (double w : weights) {
        total += w;
    }
    double u = rng.uniform() * total;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (u < weights[i]) {
            return i;
        }
        u -= weights[i];
    }
    return weights.size() - 1;
}

template <typename T>
const T& pick(SplitMix64& rng, const std::vector<T>& items)
{
    return items[rng.below(items.size())];
}

inline int uniform_int(SplitMix64& rng, int lo, int hi)
{
    return lo + static_cast<int>(rng.below(static_cast<std::uint64_t>(hi - lo + 1)));
}

inline std::vector<std::string> make_row(SplitMix64& rng, const SynthConfig& cfg)
{
    static const std::vector<std::string> classes{"A", "S", "SS"};
    static const std::vector<std::vector<std::string>> threats{
        {"Blacklist", "Bonet", "DoS", "NerisBonet"}, {"SSH", "Spam"}, {"Port Scanning", "Scan", "UDP Scan"}};
    static const std::vector<std::string> protocols{"ICMP", "TCP", "UDP"};
    static const std::vector<std::string> flags{"A", "AF", "AP", "APF", "APR", "APRS", "APS", "AR", "F", "FPA"};
    static const std::vector<std::string> seeds{"1DA11mPS", "1GZkujBR", "1SYSTEMQ", "1NKi9AK5", "1AEoiHY2", "1Lc7xTpP"};
    static const std::vector<std::string> exps{"17dcMo4V", "1BonuSr7", "1DiCeTjB", "1KZKcvxn",
                                               "1NKi9AK5", "1Lc7xTpP", "1Clag5cd", "1dice6YgE"};
    static const std::vector<std::string> ips{"A", "B", "C", "D"};
    static const std::vector<double> family_weight{4, 5, 3, 9, 2, 2, 3, 4, 5, 3, 10, 2, 4, 9, 3, 10};
    static const std::vector<double> family_btc_scale{8, 20, 15, 25, 60, 70, 12, 18, 22, 16, 40, 90, 14, 45, 10, 38};

    const int cls = static_cast<int>(pick_weighted(rng, cfg.class_weights));
    auto shown = [&] { return rng.uniform() < cfg.feature_agreement ? cls : static_cast<int>(rng.below(3)); };

    int time = 0;
    switch (shown()) {
    case 0: time = uniform_int(rng, 1, 35); break;
    case 1: time = uniform_int(rng, 30, 70); break;
    default: time = uniform_int(rng, 65, 110); break;
    }
    int clusters = 0;
    switch (shown()) {
    case 0: clusters = uniform_int(rng, 1, 4); break;
    case 1: clusters = uniform_int(rng, 4, 8); break;
    default: clusters = uniform_int(rng, 8, 12); break;
    }
    int port = 0;
    switch (shown()) {
    case 0: port = uniform_int(rng, 5061, 5062); break;
    case 1: port = uniform_int(rng, 5063, 5065); break;
    default: port = uniform_int(rng, 5066, 5068); break;
    }
    static constexpr std::array<double, 3> netflow_mu{8.0, 5.5, 6.8};
    const double netflow = std::round(std::exp(rng.normal(netflow_mu[static_cast<std::size_t>(shown())], 0.45)));
    const std::string& threat = pick(rng, threats[static_cast<std::size_t>(shown())]);

    const std::size_t fam = pick_weighted(rng, family_weight);
    const double btc = std::round(std::exp(rng.normal(std::log(family_btc_scale[fam]), 0.6)) * 100.0) / 100.0;
    const double usd = std::round(btc * rng.uniform(380.0, 560.0));

    int label = cls;
    if (rng.uniform() < cfg.label_noise) {
        label = static_cast<int>(rng.below(3));
    }

    return {std::to_string(time),
            pick(rng, protocols),
            pick(rng, flags),
            families()[fam],
            std::to_string(clusters),
            pick(rng, seeds),
            pick(rng, exps),
            format_fixed(btc, 2),
            format_number(usd),
            format_number(netflow),
            pick(rng, ips),
            threat,
            std::to_string(port),
            classes[static_cast<std::size_t>(label)]};
}

} // namespace detail

/// Raw table with the public header spelling. Unique rows are generated first
/// (re-drawn on collision), `bad_time_rows` of them get Time 0, duplicates of
/// random unique rows are appended, and the whole list is shuffled.
inline RawTable generate(const SynthConfig& cfg)
{
    SplitMix64 rng(derive_seed(cfg.seed, 0x5e17));
    RawTable raw;
    raw.header = ugransome_header();
    std::unordered_set<std::string> seen;
    while (raw.rows.size() < cfg.unique_rows) {
        auto row = detail::make_row(rng, cfg);
        std::string key;
        for (const auto& f : row) {
            key += f;
            key += '\x1f';
        }
        if (seen.insert(key).second) {
            raw.rows.push_back(std::move(row));
        }
    }
    std::vector<std::size_t> order(raw.rows.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        order[i] = i;
    }
    rng.shuffle(order);
    for (std::size_t i = 0; i < cfg.bad_time_rows && i < order.size(); ++i) {
        raw.rows[order[i]][0] = "0";
    }
    if (!raw.rows.empty()) {
        const std::size_t unique = raw.rows.size();
        for (std::size_t i = 0; i < cfg.duplicate_rows; ++i) {
            raw.rows.push_back(raw.rows[rng.below(unique)]);
        }
    }
    rng.shuffle(raw.rows);
    for (std::size_t i = 0; i < raw.rows.size(); ++i) {
        raw.line_numbers.push_back(i + 2);
    }
    return raw;
}

inline std::string generate_csv(const SynthConfig& cfg) { return to_csv(generate(cfg)); }

} // namespace ransae::synthetic
