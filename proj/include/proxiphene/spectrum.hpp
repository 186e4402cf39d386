#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace proxiphene {

inline constexpr double kSamplesPerDay = 24.0;
inline constexpr std::size_t kMinSpectrumLength = 240;

/// One-sided power spectrum on a cycles/day axis. Bin k sits at k * 24 / n cycles/day and
/// holds |X_k|^2 / n^2, doubled for 0 < k < n/2, so the bins sum to the mean square.
struct SpectrumGrid {
    std::vector<double> frequencies;
    std::vector<double> power;
    std::size_t n = 0;

    [[nodiscard]] double total_power() const;
};

/// Throws std::invalid_argument for sequences shorter than 240 samples.
SpectrumGrid power_spectrum(std::span<const double> sequence);

enum class Band { lf = 0, mf = 1, hf = 2 };

/// LF = [0, lf_mf_edge), MF = [lf_mf_edge, mf_hf_edge], HF = (mf_hf_edge, Nyquist].
/// With dc_in_lf = false the DC bin belongs to no band but still counts toward the total.
struct BandDefinition {
    double lf_mf_edge = 0.75;
    double mf_hf_edge = 1.25;
    bool dc_in_lf = true;

    /// Band of a bin, or -1 when the bin is excluded (DC with dc_in_lf = false).
    [[nodiscard]] int band_of(std::size_t bin, double frequency) const;
};

struct BandFeatures {
    std::array<double, 3> sum{};
    std::array<double, 3> pct{};
    bool zero_power = false;
};

BandFeatures band_features(const SpectrumGrid& spectrum, const BandDefinition& bands = {});

struct BandEntropy {
    std::array<double, 3> se{};
    std::array<bool, 3> degenerate{};  // band empty or without power
    std::array<std::size_t, 3> bins{};
};

/// Shannon entropy of the within-band power distribution divided by ln(#bins).
BandEntropy band_spectral_entropy(const SpectrumGrid& spectrum, const BandDefinition& bands = {});

}  // namespace proxiphene
